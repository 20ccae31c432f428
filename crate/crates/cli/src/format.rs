//! JSON profile files.

use std::fs;
use std::path::Path;

use ctr_core::Profile;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Rows within this distance of summing to one are rescaled on load.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;
/// Rows this close are kept bit-for-bit.
const EXACT_TOLERANCE: f64 = 1e-12;

/// `{ "n", "m", "prefs", "labels"?, "seed"? }`. `seed` records the
/// generator seed when the file came from `ctr gen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    pub n: usize,
    pub m: usize,
    pub prefs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ProfileFile {
    pub fn from_profile(profile: &Profile) -> Self {
        Self {
            n: profile.n(),
            m: profile.m(),
            prefs: profile.rows().map(<[f64]>::to_vec).collect(),
            labels: None,
            seed: None,
        }
    }

    /// Validates shape and row sums, rescaling rows off by at most
    /// [`RENORMALIZE_TOLERANCE`].
    pub fn to_profile(&self) -> Result<Profile> {
        if self.prefs.len() != self.n {
            return Err(CliError::Invalid(format!(
                "declared n = {} but {} rows given",
                self.n,
                self.prefs.len()
            )));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.m {
                return Err(CliError::Invalid(format!(
                    "declared m = {} but {} labels given",
                    self.m,
                    labels.len()
                )));
            }
        }
        let mut rows = Vec::with_capacity(self.n);
        for (i, row) in self.prefs.iter().enumerate() {
            if row.len() != self.m {
                return Err(CliError::Invalid(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    self.m
                )));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(CliError::Invalid(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            let off = (sum - 1.0).abs();
            if off > RENORMALIZE_TOLERANCE {
                return Err(CliError::Invalid(format!("row {i} sums to {sum}, not 1")));
            }
            rows.push(if off > EXACT_TOLERANCE {
                row.iter().map(|v| v / sum).collect()
            } else {
                row.clone()
            });
        }
        Ok(Profile::new(&rows)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::json(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(Some(path), self)
    }
}

pub fn load_profile(path: &Path) -> Result<(ProfileFile, Profile)> {
    let file = ProfileFile::load(path)?;
    let profile = file.to_profile()?;
    Ok((file, profile))
}

/// Allocation files are either a bare JSON array or any object with an
/// `allocation` array, such as the output of `ctr solve`.
pub fn load_allocation(path: &Path) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum AllocationFile {
        Bare(Vec<f64>),
        Report { allocation: Vec<f64> },
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    match serde_json::from_str(&text).map_err(|e| CliError::json(path, e))? {
        AllocationFile::Bare(v) | AllocationFile::Report { allocation: v } => Ok(v),
    }
}

/// Pretty JSON to `path`, or to stdout when `path` is `None`.
pub fn write_json<T: Serialize + ?Sized>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::json("<output>", e))?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
