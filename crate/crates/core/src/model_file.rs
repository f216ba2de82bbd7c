//! Versioned JSON model files.
//!
//! Floats are written in shortest round-trip form and parsed back exactly, so
//! a loaded model reproduces decision values bit for bit. Serialization is
//! canonical: pairs are emitted in lexicographic order and no timing data is
//! stored, so identical training runs produce byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::NormalizationStats;
use crate::error::{Result, SvmError};
use crate::kernel::KernelSpec;
use crate::multiclass::{enumerate_pairs, MulticlassModel, SolverId};
use crate::smo::BinaryModel;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    /// `[positive, negative]` class ids.
    pub classes: [usize; 2],
    pub bias: f64,
    /// `α_i y_i` per support vector.
    pub weights: Vec<f64>,
    pub support_vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u64,
    pub solver: SolverId,
    pub kernel: KernelSpec,
    pub classes: usize,
    pub class_values: Vec<f64>,
    pub dim: usize,
    pub normalization: Option<NormalizationStats>,
    pub pairs: Vec<PairEntry>,
}

impl ModelFile {
    pub fn from_model(
        model: &MulticlassModel,
        normalization: Option<&NormalizationStats>,
    ) -> Result<Self> {
        let kernel = model
            .models
            .values()
            .next()
            .map(|m| m.kernel)
            .ok_or_else(|| SvmError::InvalidConfig("model has no binary classifiers".into()))?;
        if model.models.values().any(|m| m.kernel != kernel) {
            return Err(SvmError::InvalidConfig("binary models use different kernels".into()));
        }
        let pairs = model
            .models
            .iter()
            .map(|(&(a, b), m)| PairEntry {
                classes: [a, b],
                bias: m.bias,
                weights: m.weights.clone(),
                support_vectors: m.support_vectors.clone(),
            })
            .collect();
        Ok(Self {
            format_version: FORMAT_VERSION,
            solver: model.solver,
            kernel,
            classes: model.m,
            class_values: model.class_values.clone(),
            dim: model.dim(),
            normalization: normalization.cloned(),
            pairs,
        })
    }

    pub fn into_model(self) -> Result<(MulticlassModel, Option<NormalizationStats>)> {
        let corrupt = |msg: String| SvmError::ModelParse { offset: 0, msg };
        let expected = enumerate_pairs(self.classes)?;
        let found: Vec<(usize, usize)> = self.pairs.iter().map(|p| (p.classes[0], p.classes[1])).collect();
        if found != expected {
            return Err(corrupt(format!(
                "expected the {} class pairs of {} classes in order",
                expected.len(),
                self.classes
            )));
        }
        if self.class_values.len() != self.classes {
            return Err(corrupt("class_values length differs from class count".into()));
        }
        if let Some(stats) = &self.normalization {
            if stats.mean.len() != self.dim || stats.std.len() != self.dim {
                return Err(corrupt("normalization length differs from dim".into()));
            }
        }
        let mut models = std::collections::BTreeMap::new();
        for entry in self.pairs {
            if entry.weights.len() != entry.support_vectors.len()
                || entry.support_vectors.iter().any(|sv| sv.len() != self.dim)
            {
                return Err(corrupt(format!(
                    "pair {:?}: support vectors inconsistent with weights or dim",
                    entry.classes
                )));
            }
            models.insert(
                (entry.classes[0], entry.classes[1]),
                BinaryModel {
                    kernel: self.kernel,
                    dim: self.dim,
                    support_vectors: entry.support_vectors,
                    weights: entry.weights,
                    bias: entry.bias,
                    meta: None,
                },
            );
        }
        Ok((
            MulticlassModel {
                m: self.classes,
                models,
                solver: self.solver,
                class_values: self.class_values,
            },
            self.normalization,
        ))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model values are finite") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| json_error(text, &e))?;
        let version = value
            .get("format_version")
            .ok_or_else(|| SvmError::ModelParse {
                offset: 0,
                msg: "missing format_version".into(),
            })?;
        let version = version
            .as_u64()
            .or_else(|| version.as_str().and_then(|s| s.parse().ok()))
            .ok_or_else(|| SvmError::ModelParse {
                offset: 0,
                msg: format!("format_version must be an integer, got {version}"),
            })?;
        if version != FORMAT_VERSION {
            return Err(SvmError::UnsupportedVersion(version));
        }
        serde_json::from_str(text).map_err(|e| json_error(text, &e))
    }
}

fn json_error(text: &str, err: &serde_json::Error) -> SvmError {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(err.line().saturating_sub(1))
        .map(str::len)
        .sum();
    SvmError::ModelParse {
        offset: (line_start + err.column().saturating_sub(1)).min(text.len()),
        msg: err.to_string(),
    }
}

pub fn save_model(
    path: impl AsRef<Path>,
    model: &MulticlassModel,
    normalization: Option<&NormalizationStats>,
) -> Result<()> {
    let path = path.as_ref();
    let text = ModelFile::from_model(model, normalization)?.to_json();
    fs::write(path, text).map_err(|source| SvmError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(
    path: impl AsRef<Path>,
) -> Result<(MulticlassModel, Option<NormalizationStats>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SvmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ModelFile::from_json(&text)?.into_model()
}
