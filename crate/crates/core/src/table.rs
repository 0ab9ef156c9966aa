//! The learned configuration table and its on-disk form.
//!
//! Tables are stored as pretty-printed JSON. Field order is fixed by the
//! struct declarations below, floats are written in shortest round-trip form,
//! so a save/load cycle is lossless and equal tables produce equal bytes.
//!
//! ```text
//! {
//!   "version": 1,
//!   "model_fingerprint": "<sha256 of the arm model>",
//!   "spec": { "r0", "z0", "dr", "dz", "nr", "nz" },
//!   "entries":   [[10 dofs], ...],     // row-major, index = i * nz + j
//!   "residual":  [feet, ...],
//!   "converged": [bool, ...],
//!   "provenance": { "seed", "es", "sweep", "coevolution": [...] }
//! }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arm_model::{ArmModel, DofVector, WRIST_ROLL};
use crate::coevolution::{CoevoParams, PassStats};
use crate::error::{Error, Result};
use crate::es_solver::{EsParams, SolveResult, SweepOrder};
use crate::workspace::GridSpec;

pub const TABLE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepInfo {
    pub order: SweepOrder,
    pub warm_start: bool,
}

/// One `coevolve` invocation applied to the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoevoRecord {
    pub params: CoevoParams,
    pub history: Vec<PassStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: u64,
    pub es: EsParams,
    pub sweep: Option<SweepInfo>,
    pub coevolution: Vec<CoevoRecord>,
}

impl Provenance {
    /// Coevolution passes already applied, over every recorded run.
    pub fn passes_applied(&self) -> usize {
        self.coevolution.iter().map(|r| r.history.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigTable {
    pub version: u32,
    pub model_fingerprint: String,
    pub spec: GridSpec,
    pub entries: Vec<DofVector>,
    pub residual: Vec<f64>,
    pub converged: Vec<bool>,
    pub provenance: Provenance,
}

impl ConfigTable {
    pub(crate) fn from_sweep(
        model: &ArmModel,
        spec: GridSpec,
        results: &[SolveResult],
        es: EsParams,
        sweep: SweepInfo,
    ) -> Self {
        ConfigTable {
            version: TABLE_VERSION,
            model_fingerprint: model.fingerprint(),
            spec,
            entries: results.iter().map(|r| r.config).collect(),
            residual: results.iter().map(|r| r.residual).collect(),
            converged: results.iter().map(|r| r.converged).collect(),
            provenance: Provenance {
                seed: es.seed,
                es,
                sweep: Some(sweep),
                coevolution: Vec::new(),
            },
        }
    }

    /// A table holding `entries` verbatim, with residuals computed from `model`.
    pub fn from_entries(model: &ArmModel, spec: GridSpec, entries: Vec<DofVector>, es: EsParams) -> Result<Self> {
        spec.validate()?;
        if entries.len() != spec.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} entries, got {}",
                spec.len(),
                entries.len()
            )));
        }
        let mut residual = Vec::with_capacity(entries.len());
        for (idx, q) in entries.iter().enumerate() {
            let (i, j) = spec.unflatten(idx);
            residual.push(crate::es_solver::distance_fitness(model, q, spec.position_unchecked(i, j))?);
        }
        let converged = residual.iter().map(|&r| r <= es.tolerance).collect();
        Ok(ConfigTable {
            version: TABLE_VERSION,
            model_fingerprint: model.fingerprint(),
            spec,
            entries,
            residual,
            converged,
            provenance: Provenance {
                seed: es.seed,
                es,
                sweep: None,
                coevolution: Vec::new(),
            },
        })
    }

    pub fn entry(&self, i: usize, j: usize) -> Result<&DofVector> {
        self.spec.check(i, j)?;
        Ok(&self.entries[self.spec.index(i, j)])
    }

    pub fn residual_at(&self, i: usize, j: usize) -> Result<f64> {
        self.spec.check(i, j)?;
        Ok(self.residual[self.spec.index(i, j)])
    }

    pub fn is_converged(&self, i: usize, j: usize) -> Result<bool> {
        self.spec.check(i, j)?;
        Ok(self.converged[self.spec.index(i, j)])
    }

    pub fn converged_count(&self) -> usize {
        self.converged.iter().filter(|&&c| c).count()
    }

    pub fn ensure_model(&self, model: &ArmModel) -> Result<()> {
        let fp = model.fingerprint();
        if fp == self.model_fingerprint {
            Ok(())
        } else {
            Err(Error::ModelMismatch {
                table: self.model_fingerprint.clone(),
                model: fp,
            })
        }
    }

    /// Structural checks plus the wrist-roll continuity check needed by linear
    /// interpolation of the roll angle.
    pub fn validate(&self, model: &ArmModel) -> Result<()> {
        if self.version != TABLE_VERSION {
            return Err(Error::VersionMismatch(self.version.to_string()));
        }
        self.spec
            .validate()
            .map_err(|e| Error::TableValidation(e.to_string()))?;
        let n = self.spec.len();
        if self.entries.len() != n || self.residual.len() != n || self.converged.len() != n {
            return Err(Error::TableValidation(format!(
                "grid has {n} points but table holds {} entries, {} residuals, {} flags",
                self.entries.len(),
                self.residual.len(),
                self.converged.len()
            )));
        }
        for (idx, q) in self.entries.iter().enumerate() {
            let (i, j) = self.spec.unflatten(idx);
            if !q.is_finite() || !self.residual[idx].is_finite() {
                return Err(Error::TableValidation(format!("non-finite value at ({i}, {j})")));
            }
            model
                .check_limits(q)
                .map_err(|e| Error::TableValidation(format!("entry ({i}, {j}): {e}")))?;
        }
        for i in 0..self.spec.nr {
            for j in 0..self.spec.nz {
                let here = self.entries[self.spec.index(i, j)][WRIST_ROLL];
                for (k, m) in [(i + 1, j), (i, j + 1)] {
                    if k < self.spec.nr && m < self.spec.nz {
                        let there = self.entries[self.spec.index(k, m)][WRIST_ROLL];
                        if (here - there).abs() > 180.0 {
                            return Err(Error::TableValidation(format!(
                                "wrist roll jumps {:.3} deg between ({i}, {j}) and ({k}, {m}); \
                                 linear interpolation would sweep the long way round",
                                (here - there).abs()
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("table: {e}")))?;
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == TABLE_VERSION as u64 => {}
            Some(v) => return Err(Error::VersionMismatch(v.to_string())),
            None => return Err(Error::VersionMismatch("missing".into())),
        }
        serde_json::from_value(value).map_err(|e| Error::Parse(format!("table: {e}")))
    }
}

pub fn save_table(table: &ConfigTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, table.to_json()).map_err(|e| Error::file(path, e))
}

/// Reads a table. Structural problems are errors; a fingerprint mismatch is not
/// (see [`ConfigTable::ensure_model`]).
pub fn load_table(path: impl AsRef<Path>) -> Result<ConfigTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let table = ConfigTable::from_json(&text)?;
    let n = table.spec.len();
    if table.entries.len() != n || table.residual.len() != n || table.converged.len() != n {
        return Err(Error::TableValidation(format!(
            "grid has {n} points but table holds {} entries",
            table.entries.len()
        )));
    }
    Ok(table)
}

/// Loads a table for use with `model`: fingerprint must match and the table must validate.
pub fn load_table_for(path: impl AsRef<Path>, model: &ArmModel) -> Result<ConfigTable> {
    let table = load_table(path)?;
    table.ensure_model(model)?;
    table.validate(model)?;
    Ok(table)
}
