//! Projected gradient ascent on the SVM dual.
//!
//! Full-batch, fixed step: `α ← P(α + lr·∇W(α))` from `α = 0`, with the Gram
//! matrix precomputed. `P` is either the exact Euclidean projection onto
//! `{0 ≤ α ≤ C, Σ α_i y_i = 0}` (default) or a plain clamp onto the box.
//! The box-only variant has no stationary point on many problems (without the
//! equality constraint the dual is unbounded along `y`-balanced directions
//! until the box stops it), so it is kept only for comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::BinaryProblem;
use crate::error::{Result, SvmError};
use crate::kernel::{gram_matrix_capped, GramMatrix, KernelSpec, DEFAULT_GRAM_CAP};
use crate::smo::{BinaryModel, TrainingMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    #[default]
    BoxAndEquality,
    BoxOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub c: f64,
    pub kernel: KernelSpec,
    pub projection: Projection,
    pub sv_epsilon: f64,
    /// Tolerance for the `converged` flag only (maximal-violation gap ≤ 2·tol).
    pub tol: f64,
    pub gram_cap: usize,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 1000,
            c: 1.0,
            kernel: KernelSpec::Linear,
            projection: Projection::default(),
            sv_epsilon: 1e-8,
            tol: 1e-3,
            gram_cap: DEFAULT_GRAM_CAP,
        }
    }
}

impl GdConfig {
    pub fn new(kernel: KernelSpec, c: f64) -> Self {
        Self {
            kernel,
            c,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.learning_rate) || !positive(self.c) || !positive(self.sv_epsilon) {
            return Err(SvmError::InvalidConfig(
                "learning rate, C and sv_epsilon must be positive".into(),
            ));
        }
        if let KernelSpec::Rbf { gamma } = self.kernel {
            KernelSpec::rbf(gamma)?;
        }
        Ok(())
    }
}

fn check_dims(alphas: &[f64], problem: &BinaryProblem<'_>, gram: &GramMatrix) -> Result<()> {
    for len in [alphas.len(), gram.n()] {
        if len != problem.len() {
            return Err(SvmError::DimensionMismatch {
                expected: problem.len(),
                actual: len,
            });
        }
    }
    Ok(())
}

/// `u_i = Σ_j α_j y_j K_ij`, one independent dot product per row.
fn expansion(alphas: &[f64], y: &[f64], gram: &GramMatrix, parallel: bool) -> Vec<f64> {
    let ay: Vec<f64> = alphas.iter().zip(y).map(|(a, y)| a * y).collect();
    let row = |i: usize| gram.row(i).iter().zip(&ay).map(|(k, w)| k * w).sum::<f64>();
    if parallel {
        (0..gram.n()).into_par_iter().map(row).collect()
    } else {
        (0..gram.n()).map(row).collect()
    }
}

/// `W(α) = Σα_i − ½ ΣΣ α_i α_j y_i y_j K_ij`
pub fn dual_objective(alphas: &[f64], problem: &BinaryProblem<'_>, gram: &GramMatrix) -> Result<f64> {
    check_dims(alphas, problem, gram)?;
    let u = expansion(alphas, problem.y(), gram, false);
    Ok(objective_from_expansion(alphas, problem.y(), &u))
}

fn objective_from_expansion(alphas: &[f64], y: &[f64], u: &[f64]) -> f64 {
    let quad: f64 = alphas.iter().zip(y).zip(u).map(|((a, y), u)| a * y * u).sum();
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// `∂W/∂α_i = 1 − y_i Σ_j α_j y_j K_ij`
pub fn dual_gradient(
    alphas: &[f64],
    problem: &BinaryProblem<'_>,
    gram: &GramMatrix,
) -> Result<Vec<f64>> {
    check_dims(alphas, problem, gram)?;
    let u = expansion(alphas, problem.y(), gram, false);
    Ok(u.iter().zip(problem.y()).map(|(u, y)| 1.0 - y * u).collect())
}

pub fn project_box(alphas: &[f64], c: f64) -> Vec<f64> {
    alphas.iter().map(|a| a.clamp(0.0, c)).collect()
}

/// Euclidean projection onto `{0 ≤ α ≤ C, Σ α_i y_i = 0}`.
///
/// The minimizer is `α_i(λ) = clamp(v_i − λ y_i, 0, C)` where `λ` zeroes the
/// non-increasing, piecewise-linear `g(λ) = Σ y_i α_i(λ)`. The root is
/// bracketed by binary search over the sorted breakpoints and then solved
/// exactly on its linear piece. Both signs must be present.
pub fn project_box_equality(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> {
        v.iter().zip(y).map(|(v, y)| (v - lambda * y).clamp(0.0, c)).collect()
    };
    let g = |lambda: f64| -> f64 {
        v.iter().zip(y).map(|(v, y)| y * (v - lambda * y).clamp(0.0, c)).sum()
    };

    let mut breaks: Vec<f64> = v.iter().zip(y).flat_map(|(v, y)| [y * v, y * (v - c)]).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // largest breakpoint with g ≥ 0
    let (mut lo, mut hi) = (0, breaks.len() - 1);
    if g(breaks[lo]) < 0.0 {
        return at(breaks[lo]);
    }
    if g(breaks[hi]) >= 0.0 {
        return at(breaks[hi]);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if g(breaks[mid]) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (l0, l1) = (breaks[lo], breaks[hi]);
    let (g0, g1) = (g(l0), g(l1));
    let lambda = if g0 == 0.0 { l0 } else { l0 + g0 * (l1 - l0) / (g0 - g1) };
    at(lambda)
}

fn project(v: &[f64], y: &[f64], cfg: &GdConfig) -> Vec<f64> {
    match cfg.projection {
        Projection::BoxAndEquality => project_box_equality(v, y, cfg.c),
        Projection::BoxOnly => project_box(v, cfg.c),
    }
}

pub fn train_binary_gd(
    problem: &BinaryProblem<'_>,
    cfg: &GdConfig,
    parallel: bool,
) -> Result<BinaryModel> {
    train_binary_gd_observed(problem, cfg, parallel, &mut |_, _| {})
}

/// As [`train_binary_gd`], calling `observer(epoch, α)` after every step.
pub fn train_binary_gd_observed(
    problem: &BinaryProblem<'_>,
    cfg: &GdConfig,
    parallel: bool,
    observer: &mut dyn FnMut(usize, &[f64]),
) -> Result<BinaryModel> {
    cfg.validate()?;
    if !problem.has_both_signs() {
        return Err(SvmError::SingleClass);
    }
    let gram = gram_matrix_capped(&cfg.kernel, problem, cfg.gram_cap, parallel)?;
    let y = problem.y();
    let n = problem.len();

    let mut alphas = vec![0.0; n];
    for epoch in 1..=cfg.epochs {
        let u = expansion(&alphas, y, &gram, parallel);
        let stepped: Vec<f64> = alphas
            .iter()
            .zip(&u)
            .zip(y)
            .map(|((a, u), y)| a + cfg.learning_rate * (1.0 - y * u))
            .collect();
        alphas = project(&stepped, y, cfg);
        observer(epoch, &alphas);
    }

    let u = expansion(&alphas, y, &gram, parallel);
    let bias = recover_bias(&alphas, y, &u, cfg);
    let gap = violation_gap(&alphas, y, &u, cfg.c);
    let meta = TrainingMeta {
        objective: objective_from_expansion(&alphas, y, &u),
        alphas,
        iterations: cfg.epochs,
        converged: gap <= 2.0 * cfg.tol,
        gap,
        c: cfg.c,
        sv_epsilon: cfg.sv_epsilon,
        seconds: 0.0,
    };
    Ok(BinaryModel::from_alphas(problem, cfg.kernel, meta, bias))
}

// Mean of y_i − u_i over margin support vectors; otherwise centre the
// expansion values of all support vectors; with no support vectors, 0.
fn recover_bias(alphas: &[f64], y: &[f64], u: &[f64], cfg: &GdConfig) -> f64 {
    let eps = cfg.sv_epsilon;
    let (sum, count) = alphas
        .iter()
        .zip(y)
        .zip(u)
        .filter(|((&a, _), _)| a > eps && a < cfg.c - eps)
        .fold((0.0, 0usize), |(s, k), ((_, y), u)| (s + (y - u), k + 1));
    if count > 0 {
        return sum / count as f64;
    }
    let (min, max) = alphas
        .iter()
        .zip(u)
        .filter(|(&a, _)| a > eps)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &u)| (lo.min(u), hi.max(u)));
    if min.is_finite() {
        -(min + max) / 2.0
    } else {
        0.0
    }
}

// Maximal KKT violation b_low − b_up with f_i = u_i − y_i, clamped at 0.
fn violation_gap(alphas: &[f64], y: &[f64], u: &[f64], c: f64) -> f64 {
    let mut b_up = f64::INFINITY;
    let mut b_low = f64::NEG_INFINITY;
    for ((&a, &y), &u) in alphas.iter().zip(y).zip(u) {
        let f = u - y;
        if (y > 0.0 && a < c) || (y < 0.0 && a > 0.0) {
            b_up = b_up.min(f);
        }
        if (y < 0.0 && a < c) || (y > 0.0 && a > 0.0) {
            b_low = b_low.max(f);
        }
    }
    if b_up.is_finite() && b_low.is_finite() {
        (b_low - b_up).max(0.0)
    } else {
        0.0
    }
}
