//! One-vs-one decomposition, the in-process worker pool that trains the
//! `m(m−1)/2` binary jobs, and majority-vote prediction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crossbeam_channel::unbounded;
use serde::{Deserialize, Serialize};

use crate::dataset::{BinaryProblem, Dataset, SampleRows};
use crate::error::{Result, SvmError};
use crate::gd::{train_binary_gd, GdConfig};
use crate::kernel::KernelSpec;
use crate::smo::{train_binary_smo, BinaryModel, SmoConfig};

pub type ClassPair = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverId {
    Smo,
    Gd,
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverId::Smo => "smo",
            SolverId::Gd => "gd",
        })
    }
}

impl FromStr for SolverId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "smo" => Ok(SolverId::Smo),
            "gd" => Ok(SolverId::Gd),
            other => Err(format!("unknown solver `{other}` (expected smo or gd)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverChoice {
    Smo(SmoConfig),
    Gd(GdConfig),
}

impl SolverChoice {
    pub fn id(&self) -> SolverId {
        match self {
            SolverChoice::Smo(_) => SolverId::Smo,
            SolverChoice::Gd(_) => SolverId::Gd,
        }
    }

    pub fn kernel(&self) -> KernelSpec {
        match self {
            SolverChoice::Smo(c) => c.kernel,
            SolverChoice::Gd(c) => c.kernel,
        }
    }

    pub fn train(&self, problem: &BinaryProblem<'_>, parallel: bool) -> Result<BinaryModel> {
        match self {
            SolverChoice::Smo(cfg) => train_binary_smo(problem, cfg, parallel),
            SolverChoice::Gd(cfg) => train_binary_gd(problem, cfg, parallel),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// Job `j` goes to worker `j mod workers`.
    Static,
    /// Workers pull the next job from a shared queue.
    #[default]
    Dynamic,
}

impl FromStr for Schedule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "static" => Ok(Schedule::Static),
            "dynamic" => Ok(Schedule::Dynamic),
            other => Err(format!("unknown schedule `{other}` (expected static or dynamic)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolConfig {
    pub workers: usize,
    pub schedule: Schedule,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self {
            workers: 1,
            schedule: Schedule::Dynamic,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    pub m: usize,
    pub models: BTreeMap<ClassPair, BinaryModel>,
    pub solver: SolverId,
    /// Raw label of each class id, for reporting predictions.
    pub class_values: Vec<f64>,
}

/// Lexicographic `(a, b)` with `a < b`.
pub fn enumerate_pairs(m: usize) -> Result<Vec<ClassPair>> {
    if m < 2 {
        return Err(SvmError::InvalidConfig(format!("need at least 2 classes, got {m}")));
    }
    Ok((0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect())
}

/// Samples of the two classes, in dataset order; the lower id is +1.
pub fn build_binary_problem(ds: &Dataset, pair: ClassPair) -> Result<BinaryProblem<'_>> {
    let (a, b) = (pair.0.min(pair.1), pair.0.max(pair.1));
    let indices: Vec<usize> = (0..ds.n()).filter(|&i| ds.label(i) == a || ds.label(i) == b).collect();
    let has = |c: usize| indices.iter().any(|&i| ds.label(i) == c);
    for c in [a, b] {
        if c >= ds.m() || !has(c) {
            return Err(SvmError::InvalidDataset(format!("class {c} has no samples")));
        }
    }
    BinaryProblem::new(ds, indices, a, b)
}

fn run_job(ds: &Dataset, pair: ClassPair, solver: &SolverChoice, parallel: bool) -> Result<BinaryModel> {
    let start = Instant::now();
    let problem = build_binary_problem(ds, pair)?;
    let mut model = solver.train(&problem, parallel)?;
    if let Some(meta) = model.meta.as_mut() {
        meta.seconds = start.elapsed().as_secs_f64();
    }
    Ok(model)
}

/// Trains every class pair on the pool. The assembled model is keyed by
/// pair, so neither worker count nor completion order affects it.
pub fn train_one_vs_one(
    ds: &Dataset,
    solver: &SolverChoice,
    parallel: bool,
    pool: &PoolConfig,
) -> Result<MulticlassModel> {
    if pool.workers == 0 {
        return Err(SvmError::InvalidConfig("worker count must be ≥ 1".into()));
    }
    let pairs = enumerate_pairs(ds.m())?;
    let (job_tx, job_rx) = unbounded::<usize>();
    let (res_tx, res_rx) = unbounded::<(usize, Result<BinaryModel>)>();
    for j in 0..pairs.len() {
        job_tx.send(j).expect("receiver alive");
    }
    drop(job_tx);

    std::thread::scope(|scope| {
        for w in 0..pool.workers {
            let res_tx = res_tx.clone();
            let job_rx = job_rx.clone();
            let pairs = &pairs;
            scope.spawn(move || {
                let work = |j: usize| {
                    let out = run_job(ds, pairs[j], solver, parallel);
                    res_tx.send((j, out)).is_ok()
                };
                match pool.schedule {
                    Schedule::Dynamic => {
                        for j in job_rx.iter() {
                            if !work(j) {
                                break;
                            }
                        }
                    }
                    Schedule::Static => {
                        for j in (w..pairs.len()).step_by(pool.workers) {
                            if !work(j) {
                                break;
                            }
                        }
                    }
                }
            });
        }
    });
    drop(res_tx);

    let mut results: BTreeMap<usize, Result<BinaryModel>> = res_rx.iter().collect();
    let mut models = BTreeMap::new();
    for (j, &pair) in pairs.iter().enumerate() {
        match results.remove(&j).expect("every job reports") {
            Ok(model) => {
                models.insert(pair, model);
            }
            Err(e) => return Err(SvmError::Job(pair.0, pair.1, Box::new(e))),
        }
    }
    Ok(MulticlassModel {
        m: ds.m(),
        models,
        solver: solver.id(),
        class_values: ds.class_values().to_vec(),
    })
}

impl MulticlassModel {
    pub fn dim(&self) -> usize {
        self.models.values().next().map_or(0, |m| m.dim)
    }

    /// Vote counts per class for one sample.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        let mut votes = vec![0; self.m];
        for (&(a, b), model) in &self.models {
            let winner = if model.decision_value(x)? >= 0.0 { a } else { b };
            votes[winner] += 1;
        }
        Ok(votes)
    }

    /// Fraction of binary models that met their convergence test.
    pub fn converged_fraction(&self) -> f64 {
        let done = self
            .models
            .values()
            .filter(|m| m.meta.as_ref().is_none_or(|meta| meta.converged))
            .count();
        done as f64 / self.models.len().max(1) as f64
    }
}

/// Majority vote; ties go to the lowest class id.
pub fn predict_multiclass(model: &MulticlassModel, x: &[f64]) -> Result<usize> {
    let votes = model.votes(x)?;
    let mut best = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = c;
        }
    }
    Ok(best)
}

pub fn evaluate_accuracy(model: &MulticlassModel, ds: &Dataset) -> Result<f64> {
    let mut correct = 0;
    for i in 0..ds.n() {
        if predict_multiclass(model, ds.row(i))? == ds.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / ds.n() as f64)
}
