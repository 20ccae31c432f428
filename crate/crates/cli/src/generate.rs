//! Seeded profile generators.

use std::str::FromStr;

use ctr_core::Profile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// Each agent puts the whole budget on a uniformly random alternative.
    SingleMinded,
    /// Rows drawn from the symmetric Dirichlet with this concentration.
    Dirichlet(f64),
    /// Blocks of identical agents, `count:row;count:row;...`.
    Groups(Vec<(usize, Vec<f64>)>),
}

impl FromStr for Generator {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| CliError::Invalid(format!("generator `{s}`: {msg}"));
        if s == "single-minded" {
            return Ok(Generator::SingleMinded);
        }
        if let Some(conc) = s.strip_prefix("dirichlet") {
            let conc = match conc.strip_prefix(':') {
                Some(c) => c
                    .parse::<f64>()
                    .map_err(|_| bad("bad concentration".into()))?,
                None if conc.is_empty() => 1.0,
                None => return Err(bad("expected dirichlet:conc".into())),
            };
            if !(conc > 0.0 && conc.is_finite()) {
                return Err(bad("concentration must be positive".into()));
            }
            return Ok(Generator::Dirichlet(conc));
        }
        if let Some(spec) = s.strip_prefix("groups:") {
            let mut groups = Vec::new();
            for block in spec.split(';').filter(|b| !b.trim().is_empty()) {
                let (count, row) = block
                    .split_once(':')
                    .ok_or_else(|| bad(format!("block `{block}` is not count:row")))?;
                let count = count
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| bad(format!("bad count `{count}`")))?;
                let row = row
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad(format!("bad row `{row}`")))?;
                groups.push((count, row));
            }
            if groups.is_empty() {
                return Err(bad("no groups".into()));
            }
            return Ok(Generator::Groups(groups));
        }
        Err(bad(
            "expected single-minded, dirichlet:conc or groups:spec".into()
        ))
    }
}

impl Generator {
    /// Builds a profile. `n` and `m` are ignored by [`Generator::Groups`],
    /// whose blocks fix both.
    pub fn generate(&self, n: usize, m: usize, seed: u64) -> Result<Profile> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile = match self {
            Generator::SingleMinded => {
                let peaks: Vec<usize> = (0..n).map(|_| rng.random_range(0..m.max(1))).collect();
                Profile::single_minded(m, &peaks)?
            }
            Generator::Dirichlet(conc) => {
                let gamma = Gamma::new(*conc, 1.0)
                    .map_err(|e| CliError::Invalid(format!("dirichlet: {e}")))?;
                let rows: Vec<Vec<f64>> =
                    (0..n).map(|_| dirichlet_row(&gamma, m, &mut rng)).collect();
                Profile::new(&rows)?
            }
            Generator::Groups(groups) => Profile::from_groups(groups)?,
        };
        Ok(profile)
    }
}

fn dirichlet_row(gamma: &Gamma<f64>, m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let row: Vec<f64> = (0..m).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = row.iter().sum();
        // tiny concentrations can underflow every coordinate
        if sum > 0.0 && sum.is_finite() {
            return row.iter().map(|v| v / sum).collect();
        }
    }
}
