//! Exact binary SVM dual solver (SMO, maximal violating pair).
//!
//! State follows the optimality-vector formulation:
//! `f_i = Σ_j α_j y_j K(x_i, x_j) − y_i`. Each iteration
//!
//! 1. reduces over all samples to find `i_up = argmin f` over `I_up` and
//!    `i_low = argmax f` over `I_low` (smallest index wins ties),
//! 2. solves the two-variable subproblem analytically, and
//! 3. updates `f` for every sample with a per-sample map.
//!
//! Steps 1 and 3 run on rayon when `parallel` is set. The reduction combine is
//! an exact total order on `(value, index)`, so the selected pair does not
//! depend on how the samples were partitioned, and the map writes each entry
//! with the same expression as the sequential loop.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{BinaryProblem, SampleRows};
use crate::error::{Result, SvmError};
use crate::kernel::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoConfig {
    pub kernel: KernelSpec,
    /// Box bound on every multiplier.
    pub c: f64,
    /// KKT tolerance τ; converged when `b_low ≤ b_up + 2τ`.
    pub tol: f64,
    /// `None` means `max(10·n, 10000)`.
    pub max_iter: Option<usize>,
    /// Iterations between convergence tests.
    pub check_interval: usize,
    /// Multipliers above this are support vectors.
    pub sv_epsilon: f64,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::Linear,
            c: 1.0,
            tol: 1e-3,
            max_iter: None,
            check_interval: 64,
            sv_epsilon: 1e-8,
        }
    }
}

impl SmoConfig {
    pub fn new(kernel: KernelSpec, c: f64) -> Self {
        Self {
            kernel,
            c,
            ..Self::default()
        }
    }

    pub fn max_iter_for(&self, n: usize) -> usize {
        self.max_iter.unwrap_or_else(|| (10 * n).max(10_000))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.c) {
            return Err(SvmError::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if !positive(self.tol) {
            return Err(SvmError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if !positive(self.sv_epsilon) {
            return Err(SvmError::InvalidConfig("sv_epsilon must be positive".into()));
        }
        if let KernelSpec::Rbf { gamma } = self.kernel {
            KernelSpec::rbf(gamma)?;
        }
        let max_iter = self.max_iter_for(n);
        if self.check_interval == 0 || max_iter == 0 || self.check_interval > max_iter {
            return Err(SvmError::InvalidConfig(format!(
                "need 1 ≤ check_interval ({}) ≤ max_iter ({max_iter})",
                self.check_interval
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityState {
    pub alphas: Vec<f64>,
    pub f: Vec<f64>,
    pub b_up: f64,
    pub b_low: f64,
    pub i_up: usize,
    pub i_low: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolatingPair {
    pub i_low: usize,
    pub i_up: usize,
    pub b_low: f64,
    pub b_up: f64,
    /// `f[i_low] − f[i_up]`
    pub gap: f64,
}

#[inline]
fn in_up(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha < c) || (y < 0.0 && alpha > 0.0)
}

#[inline]
fn in_low(alpha: f64, y: f64, c: f64) -> bool {
    (y < 0.0 && alpha < c) || (y > 0.0 && alpha > 0.0)
}

pub fn init_state(problem: &BinaryProblem<'_>, cfg: &SmoConfig) -> Result<OptimalityState> {
    cfg.validate(problem.len())?;
    let y = problem.y();
    let i_up = y.iter().position(|&v| v > 0.0).ok_or(SvmError::SingleClass)?;
    let i_low = y.iter().position(|&v| v < 0.0).ok_or(SvmError::SingleClass)?;
    Ok(OptimalityState {
        alphas: vec![0.0; y.len()],
        f: y.iter().map(|v| -v).collect(),
        b_up: -1.0,
        b_low: 1.0,
        i_up,
        i_low,
    })
}

#[derive(Clone, Copy, Default)]
struct Extremes {
    up: Option<(f64, usize)>,
    low: Option<(f64, usize)>,
}

impl Extremes {
    fn visit(mut self, i: usize, alpha: f64, y: f64, f: f64, c: f64) -> Self {
        if in_up(alpha, y, c) {
            self.up = min_of(self.up, Some((f, i)));
        }
        if in_low(alpha, y, c) {
            self.low = max_of(self.low, Some((f, i)));
        }
        self
    }

    fn combine(self, other: Self) -> Self {
        Self {
            up: min_of(self.up, other.up),
            low: max_of(self.low, other.low),
        }
    }
}

fn min_of(a: Option<(f64, usize)>, b: Option<(f64, usize)>) -> Option<(f64, usize)> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.0 < x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

fn max_of(a: Option<(f64, usize)>, b: Option<(f64, usize)>) -> Option<(f64, usize)> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

fn extremes(state: &OptimalityState, y: &[f64], c: f64, parallel: bool) -> Extremes {
    let visit = |acc: Extremes, i: usize| acc.visit(i, state.alphas[i], y[i], state.f[i], c);
    if parallel {
        (0..y.len())
            .into_par_iter()
            .fold(Extremes::default, visit)
            .reduce(Extremes::default, Extremes::combine)
    } else {
        (0..y.len()).fold(Extremes::default(), visit)
    }
}

/// Maximal violating pair of the current state.
pub fn select_violating_pair(
    state: &OptimalityState,
    problem: &BinaryProblem<'_>,
    cfg: &SmoConfig,
    parallel: bool,
) -> Result<ViolatingPair> {
    let ext = extremes(state, problem.y(), cfg.c, parallel);
    match (ext.up, ext.low) {
        (Some((b_up, i_up)), Some((b_low, i_low))) => Ok(ViolatingPair {
            i_low,
            i_up,
            b_low,
            b_up,
            gap: b_low - b_up,
        }),
        _ => Err(SvmError::EmptyWorkingSet),
    }
}

const ETA_FLOOR: f64 = 1e-12;

// Values within a few ulps of a bound are put exactly on it.
#[inline]
fn snap_to_box(v: f64, c: f64) -> f64 {
    let eps = 4.0 * f64::EPSILON * c;
    if v <= eps {
        0.0
    } else if v >= c - eps {
        c
    } else {
        v
    }
}

/// Analytic update of `(α_up, α_low)` followed by the `f` map. Returns the
/// change applied to `α_up`.
pub fn update_pair(
    state: &mut OptimalityState,
    problem: &BinaryProblem<'_>,
    cfg: &SmoConfig,
    i_low: usize,
    i_up: usize,
    parallel: bool,
) -> Result<f64> {
    let n = problem.len();
    for i in [i_low, i_up] {
        if i >= n {
            return Err(SvmError::IndexOutOfRange { index: i, len: n });
        }
    }
    if i_low == i_up {
        return Err(SvmError::InvalidConfig("update_pair needs two distinct indices".into()));
    }
    let y = problem.y();
    let c = cfg.c;
    let kernel = cfg.kernel;
    let (x_up, x_low) = (problem.row(i_up), problem.row(i_low));
    let (y_up, y_low) = (y[i_up], y[i_low]);
    let (a_up, a_low) = (state.alphas[i_up], state.alphas[i_low]);
    let s = y_up * y_low;

    let eta = kernel.eval(x_up, x_up) + kernel.eval(x_low, x_low) - 2.0 * kernel.eval(x_up, x_low);
    // slope of the dual objective along α_up += t, α_low -= s·t
    let slope = y_up * (state.f[i_low] - state.f[i_up]);

    let (mut lo, mut hi) = (-a_up, c - a_up);
    if s > 0.0 {
        lo = lo.max(a_low - c);
        hi = hi.min(a_low);
    } else {
        lo = lo.max(-a_low);
        hi = hi.min(c - a_low);
    }
    if hi < lo {
        // only reachable through rounding; the current point is feasible
        (lo, hi) = (0.0, 0.0);
    }

    let step = if eta > ETA_FLOOR {
        (slope / eta).clamp(lo, hi)
    } else {
        let gain = |t: f64| t * slope - 0.5 * eta * t * t;
        let mut best = (0.0, 0.0);
        for t in [lo, hi] {
            if gain(t) > best.1 {
                best = (t, gain(t));
            }
        }
        best.0
    };

    let new_up = snap_to_box(a_up + step, c);
    let new_low = snap_to_box(a_low - s * step, c);
    let du = (new_up - a_up) * y_up;
    let dl = (new_low - a_low) * y_low;
    state.alphas[i_up] = new_up;
    state.alphas[i_low] = new_low;

    if du != 0.0 || dl != 0.0 {
        let update = |(i, fi): (usize, &mut f64)| {
            let xi = problem.row(i);
            *fi += du * kernel.eval(x_up, xi) + dl * kernel.eval(x_low, xi);
        };
        if parallel {
            state.f.par_iter_mut().enumerate().for_each(update);
        } else {
            state.f.iter_mut().enumerate().for_each(update);
        }
    }
    Ok(new_up - a_up)
}

/// Snapshot handed to training observers after every pair update.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord<'a> {
    pub iteration: usize,
    pub alphas: &'a [f64],
    pub f: &'a [f64],
    pub pair: ViolatingPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    /// Full multiplier vector in problem order.
    pub alphas: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Final `b_low − b_up` for SMO; NaN-free zero for GD.
    pub gap: f64,
    /// Dual objective at the returned multipliers.
    pub objective: f64,
    pub c: f64,
    pub sv_epsilon: f64,
    /// Wall-clock training time; filled in by the multiclass pool.
    pub seconds: f64,
}

/// Kernel expansion `Σ w_i K(sv_i, x) + b` with `w_i = α_i y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel {
    pub kernel: KernelSpec,
    pub dim: usize,
    pub support_vectors: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Present on freshly trained models, absent on loaded ones.
    pub meta: Option<TrainingMeta>,
}

impl BinaryModel {
    /// Keeps samples with `α > sv_epsilon` as support vectors.
    pub fn from_alphas(
        problem: &BinaryProblem<'_>,
        kernel: KernelSpec,
        meta: TrainingMeta,
        bias: f64,
    ) -> Self {
        let y = problem.y();
        let (support_vectors, weights) = meta
            .alphas
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > meta.sv_epsilon)
            .map(|(i, &a)| (problem.row(i).to_vec(), a * y[i]))
            .unzip();
        Self {
            kernel,
            dim: problem.dim(),
            support_vectors,
            weights,
            bias,
            meta: Some(meta),
        }
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(self.decision_value_unchecked(x))
    }

    pub fn decision_value_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.weights)
            .map(|(sv, w)| w * self.kernel.eval(sv, x))
            .sum();
        sum + self.bias
    }
}

/// `Σα − ½ Σ α_i y_i u_i` where `u_i = f_i + y_i` is the kernel expansion.
fn objective_from_f(alphas: &[f64], f: &[f64], y: &[f64]) -> f64 {
    let linear: f64 = alphas.iter().sum();
    let quad: f64 = alphas.iter().zip(f).zip(y).map(|((a, fi), yi)| a * yi * (fi + yi)).sum();
    linear - 0.5 * quad
}

pub fn train_binary_smo(
    problem: &BinaryProblem<'_>,
    cfg: &SmoConfig,
    parallel: bool,
) -> Result<BinaryModel> {
    train_binary_smo_observed(problem, cfg, parallel, &mut |_| {})
}

/// As [`train_binary_smo`], calling `observer` after every pair update.
pub fn train_binary_smo_observed(
    problem: &BinaryProblem<'_>,
    cfg: &SmoConfig,
    parallel: bool,
    observer: &mut dyn FnMut(&IterationRecord<'_>),
) -> Result<BinaryModel> {
    let mut state = init_state(problem, cfg)?;
    let max_iter = cfg.max_iter_for(problem.len());
    let y = problem.y();
    let mut iterations = 0;

    let (converged, gap, bias) = loop {
        let pair = match select_violating_pair(&state, problem, cfg, parallel) {
            Ok(p) => p,
            Err(SvmError::EmptyWorkingSet) => {
                let ext = extremes(&state, y, cfg.c, false);
                let bias = match (ext.up, ext.low) {
                    (Some((u, _)), None) => -u,
                    (None, Some((l, _))) => -l,
                    _ => 0.0,
                };
                break (true, 0.0, bias);
            }
            Err(e) => return Err(e),
        };
        state.b_up = pair.b_up;
        state.b_low = pair.b_low;
        state.i_up = pair.i_up;
        state.i_low = pair.i_low;

        let within_tol = pair.b_low <= pair.b_up + 2.0 * cfg.tol;
        let bias = -(pair.b_up + pair.b_low) / 2.0;
        // a free α can be extremal in both sets; that only happens at gap 0
        if within_tol && (iterations % cfg.check_interval == 0 || pair.i_low == pair.i_up) {
            break (true, pair.gap, bias);
        }
        if iterations >= max_iter {
            break (within_tol, pair.gap, bias);
        }

        let step = update_pair(&mut state, problem, cfg, pair.i_low, pair.i_up, parallel)?;
        iterations += 1;
        observer(&IterationRecord {
            iteration: iterations,
            alphas: &state.alphas,
            f: &state.f,
            pair,
        });
        if step == 0.0 {
            // fixed point: the next selection would pick the same pair again
            break (within_tol, pair.gap, bias);
        }
    };

    let meta = TrainingMeta {
        objective: objective_from_f(&state.alphas, &state.f, y),
        alphas: state.alphas,
        iterations,
        converged,
        gap,
        c: cfg.c,
        sv_epsilon: cfg.sv_epsilon,
        seconds: 0.0,
    };
    Ok(BinaryModel::from_alphas(problem, cfg.kernel, meta, bias))
}

/// Samples violating their KKT condition, by multiplier class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KktReport {
    pub at_zero: usize,
    pub free: usize,
    pub at_c: usize,
}

impl KktReport {
    pub fn total(&self) -> usize {
        self.at_zero + self.free + self.at_c
    }
}

/// Checks every training sample against its KKT condition with decision
/// values recomputed from scratch.
pub fn kkt_violations(
    model: &BinaryModel,
    problem: &BinaryProblem<'_>,
    tol: f64,
) -> Result<KktReport> {
    let meta = model
        .meta
        .as_ref()
        .ok_or_else(|| SvmError::InvalidConfig("model carries no training multipliers".into()))?;
    if meta.alphas.len() != problem.len() {
        return Err(SvmError::DimensionMismatch {
            expected: problem.len(),
            actual: meta.alphas.len(),
        });
    }
    let mut report = KktReport::default();
    for (i, (&a, &yi)) in meta.alphas.iter().zip(problem.y()).enumerate() {
        let margin = yi * model.decision_value(problem.row(i))?;
        if a <= meta.sv_epsilon {
            if margin < 1.0 - tol {
                report.at_zero += 1;
            }
        } else if a >= meta.c - meta.sv_epsilon {
            if margin > 1.0 + tol {
                report.at_c += 1;
            }
        } else if (margin - 1.0).abs() > tol {
            report.free += 1;
        }
    }
    Ok(report)
}
