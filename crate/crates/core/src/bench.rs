//! Timing sweeps over samples-per-class × solver × parallel × workers.
//!
//! Each cell trains the one-vs-one model `repeats` times on a seeded
//! per-class subset and reports the median wall-clock of the training call
//! alone (subsetting, normalization and evaluation are outside the timer).

use std::io::Write;
use std::time::Instant;

use crate::dataset::{normalize_zscore, subset_per_class, Dataset};
use crate::error::{Result, SvmError};
use crate::multiclass::{evaluate_accuracy, train_one_vs_one, PoolConfig, Schedule, SolverChoice, SolverId};

pub const CSV_HEADER: [&str; 13] = [
    "dataset",
    "k_per_class",
    "classes",
    "solver",
    "parallel",
    "workers",
    "seconds",
    "converged_frac",
    "accuracy",
    "speedup_vs_gd",
    "speedup_vs_workers1",
    "speedup_vs_serial",
    "status",
];

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub dataset_name: String,
    pub samples_per_class: Vec<usize>,
    pub solvers: Vec<SolverChoice>,
    pub parallel: Vec<bool>,
    pub workers: Vec<usize>,
    pub schedule: Schedule,
    pub repeats: usize,
    pub seed: u64,
    pub normalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub dataset: String,
    pub k_per_class: usize,
    pub classes: usize,
    pub solver: SolverId,
    pub parallel: bool,
    pub workers: usize,
    pub seconds: Option<f64>,
    pub converged_frac: Option<f64>,
    pub accuracy: Option<f64>,
    pub speedup_vs_gd: Option<f64>,
    pub speedup_vs_workers1: Option<f64>,
    pub speedup_vs_serial: Option<f64>,
    pub status: RowStatus,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

pub fn run_bench(ds: &Dataset, cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.repeats == 0 {
        return Err(SvmError::InvalidConfig("repeats must be ≥ 1".into()));
    }
    let mut rows = Vec::new();
    for &k in &cfg.samples_per_class {
        let subset = match subset_per_class(ds, k, cfg.seed) {
            Ok(s) => Some(if cfg.normalize && !s.is_normalized() {
                normalize_zscore(&s)?.0
            } else {
                s
            }),
            Err(SvmError::NotEnoughSamples { .. }) => None,
            Err(e) => return Err(e),
        };
        for solver in &cfg.solvers {
            for &parallel in &cfg.parallel {
                for &workers in &cfg.workers {
                    let mut row = BenchRow {
                        dataset: cfg.dataset_name.clone(),
                        k_per_class: k,
                        classes: ds.m(),
                        solver: solver.id(),
                        parallel,
                        workers,
                        seconds: None,
                        converged_frac: None,
                        accuracy: None,
                        speedup_vs_gd: None,
                        speedup_vs_workers1: None,
                        speedup_vs_serial: None,
                        status: RowStatus::Skipped,
                    };
                    if let Some(train) = &subset {
                        let pool = PoolConfig {
                            workers,
                            schedule: cfg.schedule,
                        };
                        let mut times = Vec::with_capacity(cfg.repeats);
                        let mut model = None;
                        for _ in 0..cfg.repeats {
                            let start = Instant::now();
                            let trained = train_one_vs_one(train, solver, parallel, &pool)?;
                            times.push(start.elapsed().as_secs_f64().max(1e-9));
                            model.get_or_insert(trained);
                        }
                        let model = model.expect("repeats ≥ 1");
                        row.seconds = median(&times);
                        row.converged_frac = Some(model.converged_fraction());
                        row.accuracy = Some(evaluate_accuracy(&model, train)?);
                        row.status = RowStatus::Ok;
                    }
                    rows.push(row);
                }
            }
        }
    }
    let mut report = BenchReport { rows };
    report.compute_speedups();
    Ok(report)
}

impl BenchReport {
    /// Fills the ratio columns from rows that differ only in the compared field.
    pub fn compute_speedups(&mut self) {
        let snapshot = self.rows.clone();
        let find = |pred: &dyn Fn(&BenchRow) -> bool| -> Option<f64> {
            snapshot.iter().find(|r| r.status == RowStatus::Ok && pred(r)).and_then(|r| r.seconds)
        };
        for row in &mut self.rows {
            let Some(t) = row.seconds else { continue };
            let same_k = |r: &BenchRow| r.dataset == row.dataset && r.k_per_class == row.k_per_class;
            if row.solver == SolverId::Smo {
                row.speedup_vs_gd = find(&|r| {
                    same_k(r) && r.solver == SolverId::Gd && r.parallel == row.parallel && r.workers == row.workers
                })
                .map(|gd| gd / t);
            }
            if row.workers != 1 {
                row.speedup_vs_workers1 = find(&|r| {
                    same_k(r) && r.solver == row.solver && r.parallel == row.parallel && r.workers == 1
                })
                .map(|w1| w1 / t);
            }
            if row.parallel {
                row.speedup_vs_serial = find(&|r| {
                    same_k(r) && r.solver == row.solver && !r.parallel && r.workers == row.workers
                })
                .map(|serial| serial / t);
            }
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let to_io = |e: csv::Error| SvmError::Io {
            path: "<report>".into(),
            source: std::io::Error::other(e),
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER).map_err(to_io)?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v}"));
        for r in &self.rows {
            w.write_record([
                r.dataset.clone(),
                r.k_per_class.to_string(),
                r.classes.to_string(),
                r.solver.to_string(),
                if r.parallel { "on" } else { "off" }.to_string(),
                r.workers.to_string(),
                opt(r.seconds),
                opt(r.converged_frac),
                opt(r.accuracy),
                opt(r.speedup_vs_gd),
                opt(r.speedup_vs_workers1),
                opt(r.speedup_vs_serial),
                match r.status {
                    RowStatus::Ok => "ok",
                    RowStatus::Skipped => "skipped",
                }
                .to_string(),
            ])
            .map_err(to_io)?;
        }
        w.flush().map_err(|source| SvmError::Io {
            path: "<report>".into(),
            source,
        })
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}
