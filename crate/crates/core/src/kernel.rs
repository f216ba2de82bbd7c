//! Linear and Gaussian RBF kernels, kernel rows and materialized Gram matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::SampleRows;
use crate::error::{Result, SvmError};

/// Largest Gram matrix (in entries) materialized by default.
pub const DEFAULT_GRAM_CAP: usize = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(KernelSpec::Rbf { gamma })
        } else {
            Err(SvmError::InvalidConfig(format!("RBF gamma must be positive, got {gamma}")))
        }
    }

    /// RBF with the scale-neutral default `gamma = 1/d`.
    pub fn rbf_default(d: usize) -> Self {
        KernelSpec::Rbf {
            gamma: 1.0 / d.max(1) as f64,
        }
    }

    /// Evaluates the kernel without checking lengths. Symmetric bit-for-bit:
    /// both branches only use commutative per-coordinate terms.
    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            KernelSpec::Rbf { gamma } => {
                let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * dist2).exp()
            }
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(SvmError::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(spec.eval(x, y))
}

/// `K(x_i, x_j)` for every `j`. The parallel path is a pure map and returns
/// the same vector as the sequential one.
pub fn kernel_row<R: SampleRows + ?Sized>(
    spec: &KernelSpec,
    rows: &R,
    i: usize,
    parallel: bool,
) -> Result<Vec<f64>> {
    let n = rows.n_rows();
    if i >= n {
        return Err(SvmError::IndexOutOfRange { index: i, len: n });
    }
    let xi = rows.row(i);
    Ok(if parallel {
        (0..n).into_par_iter().map(|j| spec.eval(xi, rows.row(j))).collect()
    } else {
        (0..n).map(|j| spec.eval(xi, rows.row(j))).collect()
    })
}

/// Dense symmetric kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    values: Vec<f64>,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Wraps an explicit row-major matrix; test and oracle code only needs this.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(SvmError::DimensionMismatch {
                expected: n * n,
                actual: values.len(),
            });
        }
        Ok(Self { n, values })
    }
}

pub fn gram_matrix<R: SampleRows + ?Sized>(spec: &KernelSpec, rows: &R) -> Result<GramMatrix> {
    gram_matrix_capped(spec, rows, DEFAULT_GRAM_CAP, true)
}

/// Computes the upper triangle and mirrors it, so the result is exactly
/// symmetric.
pub fn gram_matrix_capped<R: SampleRows + ?Sized>(
    spec: &KernelSpec,
    rows: &R,
    cap: usize,
    parallel: bool,
) -> Result<GramMatrix> {
    let n = rows.n_rows();
    if n.checked_mul(n).is_none_or(|entries| entries > cap) {
        return Err(SvmError::GramTooLarge { n, cap });
    }
    let upper = |i: usize| -> Vec<f64> {
        let xi = rows.row(i);
        (i..n).map(|j| spec.eval(xi, rows.row(j))).collect()
    };
    let tri: Vec<Vec<f64>> = if parallel {
        (0..n).into_par_iter().map(upper).collect()
    } else {
        (0..n).map(upper).collect()
    };
    let mut values = vec![0.0; n * n];
    for (i, row) in tri.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(GramMatrix { n, values })
}
