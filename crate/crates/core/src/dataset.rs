//! Dense datasets, loaders, normalization, per-class subsampling and the
//! synthetic blob generator.
//!
//! Raw class labels from files are remapped to contiguous ids `0..m` in
//! ascending order of their raw value; the raw values are kept in
//! [`Dataset::class_values`] so predictions can be reported in the file's own
//! label space.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SvmError};

/// Row access shared by datasets and binary views of them.
pub trait SampleRows: Sync {
    fn n_rows(&self) -> usize;
    fn dim(&self) -> usize;
    fn row(&self, i: usize) -> &[f64];
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    class_values: Vec<f64>,
    d: usize,
    normalized: bool,
}

impl Dataset {
    /// Builds a dataset from a row-major matrix and contiguous labels.
    /// `class_values[c]` is the raw label that class id `c` stands for.
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        d: usize,
        class_values: Vec<f64>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(SvmError::InvalidDataset("no samples".into()));
        }
        if d == 0 {
            return Err(SvmError::InvalidDataset("no features".into()));
        }
        if features.len() != n * d {
            return Err(SvmError::InvalidDataset(format!(
                "{} values for {n} rows of {d} features",
                features.len()
            )));
        }
        if class_values.is_empty() {
            return Err(SvmError::InvalidDataset("no classes".into()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= class_values.len()) {
            return Err(SvmError::InvalidDataset(format!(
                "label {bad} outside [0, {})",
                class_values.len()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(SvmError::InvalidDataset(format!(
                "non-finite value in row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self {
            features,
            labels,
            class_values,
            d,
            normalized: false,
        })
    }

    /// Convenience constructor for in-memory data whose labels are already
    /// class ids; the class count is `max(label) + 1`.
    pub fn from_rows(rows: &[Vec<f64>], labels: &[usize]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(SvmError::InvalidDataset(format!(
                "row {i} has {} values, expected {d}",
                r.len()
            )));
        }
        if rows.len() != labels.len() {
            return Err(SvmError::InvalidDataset(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let m = labels.iter().max().map_or(0, |&l| l + 1);
        let class_values = (0..m).map(|c| c as f64).collect();
        Self::new(rows.concat(), labels.to_vec(), d, class_values)
    }

    /// Remaps arbitrary raw labels onto `0..m`, preserving their order.
    pub fn from_raw_labels(features: Vec<f64>, raw: &[f64], d: usize) -> Result<Self> {
        if let Some(bad) = raw.iter().find(|v| !v.is_finite()) {
            return Err(SvmError::InvalidDataset(format!("non-finite label {bad}")));
        }
        let mut class_values = raw.to_vec();
        class_values.sort_by(f64::total_cmp);
        class_values.dedup();
        let labels = raw
            .iter()
            .map(|v| {
                class_values
                    .binary_search_by(|c| c.total_cmp(v))
                    .expect("label present in its own value set")
            })
            .collect();
        Self::new(features, labels, d, class_values)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.class_values.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn class_values(&self) -> &[f64] {
        &self.class_values
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.m()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Indices of the samples of class `c`, in dataset order.
    pub fn class_indices(&self, c: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == c)
            .map(|(i, _)| i)
            .collect()
    }

    /// New dataset holding the given rows, keeping the class space.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n() {
                return Err(SvmError::IndexOutOfRange {
                    index: i,
                    len: self.n(),
                });
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        let mut out = Self::new(features, labels, self.d, self.class_values.clone())?;
        out.normalized = self.normalized;
        Ok(out)
    }
}

impl SampleRows for Dataset {
    fn n_rows(&self) -> usize {
        self.n()
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| SvmError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_value(path: &Path, line: usize, tok: &str) -> Result<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(SvmError::parse(path, line, format!("non-numeric value `{tok}`"))),
    }
}

/// Reads `<label> <index>:<value> ...` lines with 1-based ascending indices.
/// Blank lines are skipped; absent entries are zero.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = read_text(path)?;

    let mut raw_labels = Vec::new();
    let mut sparse_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut d = 0;
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_ascii_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        raw_labels.push(parse_value(path, lineno, label_tok)?);

        let mut row = Vec::new();
        let mut last = 0;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| {
                SvmError::parse(path, lineno, format!("expected index:value, got `{tok}`"))
            })?;
            let idx: usize = idx.parse().map_err(|_| {
                SvmError::parse(path, lineno, format!("bad feature index `{idx}`"))
            })?;
            if idx == 0 {
                return Err(SvmError::parse(path, lineno, "feature indices are 1-based"));
            }
            if idx <= last {
                return Err(SvmError::parse(
                    path,
                    lineno,
                    format!("feature index {idx} not ascending after {last}"),
                ));
            }
            last = idx;
            row.push((idx - 1, parse_value(path, lineno, val)?));
        }
        d = d.max(last);
        sparse_rows.push(row);
    }

    if sparse_rows.is_empty() {
        return Err(SvmError::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    if d == 0 {
        return Err(SvmError::parse(path, 1, "no features on any line"));
    }
    let mut features = vec![0.0; sparse_rows.len() * d];
    for (r, row) in sparse_rows.iter().enumerate() {
        for &(j, v) in row {
            features[r * d + j] = v;
        }
    }
    Dataset::from_raw_labels(features, &raw_labels, d)
}

/// Writes every feature explicitly so `d` survives a reload, with labels in
/// the raw label space and floats in shortest round-trip form.
pub fn write_libsvm<W: Write>(ds: &Dataset, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    for i in 0..ds.n() {
        write!(out, "{}", ds.class_values()[ds.label(i)])?;
        for (j, v) in ds.row(i).iter().enumerate() {
            write!(out, " {}:{}", j + 1, v)?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn save_libsvm(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| SvmError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    write_libsvm(ds, file).map_err(io_err)
}

/// Reads a rectangular numeric CSV. A first row with any non-numeric cell is
/// treated as a header.
pub fn load_csv(path: impl AsRef<Path>, label_column: usize) -> Result<Dataset> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut width = None;
    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            SvmError::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if first {
            first = false;
            if record.iter().any(|c| c.parse::<f64>().is_err()) {
                continue;
            }
        }
        let cols = *width.get_or_insert(record.len());
        if record.len() != cols {
            return Err(SvmError::parse(
                path,
                line,
                format!("ragged row: {} columns, expected {cols}", record.len()),
            ));
        }
        if label_column >= cols {
            return Err(SvmError::InvalidDataset(format!(
                "label column {label_column} out of range for {cols} columns"
            )));
        }
        if cols < 2 {
            return Err(SvmError::parse(path, line, "need at least one feature column"));
        }
        for (j, cell) in record.iter().enumerate() {
            let v = parse_value(path, line, cell)?;
            if j == label_column {
                raw_labels.push(v);
            } else {
                features.push(v);
            }
        }
    }

    match width {
        None => Err(SvmError::EmptyFile {
            path: path.to_path_buf(),
        }),
        Some(cols) => Dataset::from_raw_labels(features, &raw_labels, cols - 1),
    }
}

/// Per-feature z-score parameters. Degenerate columns store a deviation of 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const DEGENERATE_STD: f64 = 1e-12;

impl NormalizationStats {
    /// Applies these statistics to another dataset (e.g. test data).
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.normalized {
            return Err(SvmError::AlreadyNormalized);
        }
        if ds.d != self.mean.len() {
            return Err(SvmError::DimensionMismatch {
                expected: self.mean.len(),
                actual: ds.d,
            });
        }
        let mut out = ds.clone();
        for row in out.features.chunks_exact_mut(ds.d) {
            self.apply_row(row);
        }
        out.normalized = true;
        Ok(out)
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for ((v, mu), sd) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - mu) / sd;
        }
    }
}

/// Z-scores every column with population statistics. Constant columns
/// (deviation below 1e-12) become all-zero.
pub fn normalize_zscore(ds: &Dataset) -> Result<(Dataset, NormalizationStats)> {
    if ds.normalized {
        return Err(SvmError::AlreadyNormalized);
    }
    let n = ds.n() as f64;
    let d = ds.d;
    let mut mean = vec![0.0; d];
    for row in ds.features.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut var = vec![0.0; d];
    for row in ds.features.chunks_exact(d) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let mut degenerate = vec![false; d];
    let std: Vec<f64> = var
        .iter()
        .zip(degenerate.iter_mut())
        .map(|(s, deg)| {
            let sd = (s / n).sqrt();
            if sd < DEGENERATE_STD {
                *deg = true;
                1.0
            } else {
                sd
            }
        })
        .collect();

    let stats = NormalizationStats { mean, std };
    let mut out = stats.apply(ds)?;
    for row in out.features.chunks_exact_mut(d) {
        for (v, &deg) in row.iter_mut().zip(&degenerate) {
            if deg {
                *v = 0.0;
            }
        }
    }
    Ok((out, stats))
}

/// Seeded uniform draw of exactly `k` samples from every class. Selected rows
/// keep their original relative order.
pub fn subset_per_class(ds: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    if k == 0 {
        return Err(SvmError::InvalidConfig("samples per class must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(k * ds.m());
    for c in 0..ds.m() {
        let members = ds.class_indices(c);
        if members.len() < k {
            return Err(SvmError::NotEnoughSamples {
                class: c,
                available: members.len(),
                requested: k,
            });
        }
        chosen.extend(index::sample(&mut rng, members.len(), k).iter().map(|p| members[p]));
    }
    chosen.sort_unstable();
    ds.select(&chosen)
}

/// Isotropic unit-variance Gaussian blobs, `k` per class, with class centers
/// pairwise at least `separation` apart.
pub fn generate_synthetic(
    m: usize,
    d: usize,
    k: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if m < 2 || d < 1 || k < 1 || separation <= 0.0 || !separation.is_finite() {
        return Err(SvmError::InvalidConfig(format!(
            "synthetic data needs m ≥ 2, d ≥ 1, k ≥ 1, separation > 0 (got m={m}, d={d}, k={k}, separation={separation})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = place_centers(&mut rng, m, d, separation);

    let mut features = Vec::with_capacity(m * k * d);
    let mut labels = Vec::with_capacity(m * k);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..k {
            features.extend(center.iter().map(|&mu| mu + rng.sample::<f64, _>(StandardNormal)));
            labels.push(c);
        }
    }
    Dataset::new(features, labels, d, (0..m).map(|c| c as f64).collect())
}

// Centers sit on a sphere whose radius starts at `separation` and grows
// whenever 100 consecutive candidates are rejected.
fn place_centers(rng: &mut ChaCha8Rng, m: usize, d: usize, separation: f64) -> Vec<Vec<f64>> {
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut radius = separation;
    let mut rejections = 0;
    while centers.len() < m {
        let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let candidate: Vec<f64> = dir.iter().map(|v| v / norm * radius).collect();
        let far_enough = centers.iter().all(|c| {
            let dist2: f64 = c.iter().zip(&candidate).map(|(a, b)| (a - b) * (a - b)).sum();
            dist2.sqrt() >= separation
        });
        if far_enough {
            centers.push(candidate);
            rejections = 0;
        } else {
            rejections += 1;
            if rejections == 100 {
                radius *= 1.25;
                rejections = 0;
            }
        }
    }
    centers
}

/// Two classes of a parent dataset relabeled to ±1.
#[derive(Debug, Clone)]
pub struct BinaryProblem<'a> {
    parent: &'a Dataset,
    indices: Vec<usize>,
    y: Vec<f64>,
    positive: usize,
    negative: usize,
}

impl<'a> BinaryProblem<'a> {
    /// `indices` must be unique and every referenced sample must belong to
    /// `positive` or `negative`; samples of `positive` get +1.
    pub fn new(
        parent: &'a Dataset,
        indices: Vec<usize>,
        positive: usize,
        negative: usize,
    ) -> Result<Self> {
        if indices.is_empty() {
            return Err(SvmError::InvalidDataset("binary problem without samples".into()));
        }
        if positive == negative {
            return Err(SvmError::InvalidDataset(
                "positive and negative class must differ".into(),
            ));
        }
        let mut seen = HashSet::with_capacity(indices.len());
        let mut y = Vec::with_capacity(indices.len());
        for &i in &indices {
            if i >= parent.n() {
                return Err(SvmError::IndexOutOfRange {
                    index: i,
                    len: parent.n(),
                });
            }
            if !seen.insert(i) {
                return Err(SvmError::InvalidDataset(format!("duplicate sample index {i}")));
            }
            let l = parent.label(i);
            if l == positive {
                y.push(1.0);
            } else if l == negative {
                y.push(-1.0);
            } else {
                return Err(SvmError::InvalidDataset(format!(
                    "sample {i} has class {l}, not {positive} or {negative}"
                )));
            }
        }
        Ok(Self {
            parent,
            indices,
            y,
            positive,
            negative,
        })
    }

    /// Every sample of a two-class dataset, class 0 positive.
    pub fn whole(parent: &'a Dataset) -> Result<Self> {
        if parent.m() != 2 {
            return Err(SvmError::InvalidDataset(format!(
                "expected 2 classes, found {}",
                parent.m()
            )));
        }
        Self::new(parent, (0..parent.n()).collect(), 0, 1)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Signed labels, ±1.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn positive(&self) -> usize {
        self.positive
    }

    pub fn negative(&self) -> usize {
        self.negative
    }

    pub fn parent(&self) -> &Dataset {
        self.parent
    }

    pub fn has_both_signs(&self) -> bool {
        self.y.iter().any(|&v| v > 0.0) && self.y.iter().any(|&v| v < 0.0)
    }
}

impl SampleRows for BinaryProblem<'_> {
    fn n_rows(&self) -> usize {
        self.indices.len()
    }

    fn dim(&self) -> usize {
        self.parent.d
    }

    fn row(&self, i: usize) -> &[f64] {
        self.parent.row(self.indices[i])
    }
}
