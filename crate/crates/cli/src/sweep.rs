//! λ-sweeps over a directory of profiles along the constant-IAV ladder.

use std::io::Write;
use std::path::{Path, PathBuf};

use ctr_core::axioms::{cohesive_groups, CohesiveGroup, MAX_GROUP_AGENTS};
use ctr_core::bounds::{
    afs_bound, egalitarian_loss_against, gamma, ifs_share_bound, welfare_loss_against, wl_bound,
};
use ctr_core::{
    satisfaction_vector, solve_ctr, solve_egalitarian, solve_utilitarian, Profile, SolverOptions,
    UtilityFunction,
};

use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::format::load_profile;
use crate::rule::Rule;

pub const HEADER: [&str; 12] = [
    "lambda",
    "rule",
    "m",
    "n",
    "seed",
    "wl_emp",
    "wl_bound",
    "el_emp",
    "el_bound",
    "min_share",
    "min_share_bound",
    "afs_worst",
];

/// Parses `lo:hi:count` (geometric, endpoints included) or a comma list.
pub fn parse_lambda_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || {
        CliError::Invalid(format!(
            "bad λ grid `{spec}`; expected lo:hi:count or a comma list"
        ))
    };
    let values: Vec<f64> = if let [lo, hi, count] = spec.split(':').collect::<Vec<_>>()[..] {
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        if count == 0 || !(lo > 0.0 && hi >= lo) {
            return Err(bad());
        }
        if count == 1 {
            vec![lo]
        } else {
            let ratio = (hi / lo).ln() / (count - 1) as f64;
            (0..count)
                .map(|k| match k {
                    0 => lo,
                    k if k == count - 1 => hi,
                    k => lo * (ratio * k as f64).exp(),
                })
                .collect()
        }
    } else {
        spec.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if values.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(bad());
    }
    Ok(values)
}

/// One `(profile, λ)` measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub rule: String,
    pub m: usize,
    pub n: usize,
    pub seed: Option<u64>,
    pub wl_emp: f64,
    pub wl_bound: f64,
    pub el_emp: f64,
    pub el_bound: Option<f64>,
    pub min_share: f64,
    pub min_share_bound: Option<f64>,
    /// Smallest `mean / min(α, |s|/n)^{1/min(λ,1)}` over cohesive groups.
    pub afs_worst: Option<f64>,
    /// Whether the rule and both reference solves converged.
    pub converged: bool,
}

impl SweepRow {
    fn record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
        vec![
            fmt_sig(self.lambda),
            self.rule.clone(),
            self.m.to_string(),
            self.n.to_string(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            fmt_sig(self.wl_emp),
            fmt_sig(self.wl_bound),
            fmt_sig(self.el_emp),
            opt(self.el_bound),
            fmt_sig(self.min_share),
            opt(self.min_share_bound),
            opt(self.afs_worst),
        ]
    }
}

/// Rows for one profile, in the order of `lambdas`.
pub fn sweep_profile(
    profile: &Profile,
    seed: Option<u64>,
    lambdas: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<SweepRow>> {
    let (n, m) = (profile.n(), profile.m());
    let util = solve_utilitarian(profile, opts)?;
    let egal = solve_egalitarian(profile, opts)?;
    let groups: Option<Vec<CohesiveGroup>> = if n <= MAX_GROUP_AGENTS {
        Some(cohesive_groups(profile, f64::MIN_POSITIVE)?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let f = UtilityFunction::with_constant_iav(lambda)?;
        let report = solve_ctr(profile, &f, opts)?;
        let x = &report.allocation;
        let sats = satisfaction_vector(profile, x);
        let afs_worst = groups.as_ref().map(|groups| {
            let exponent_lambda = lambda.min(1.0);
            groups
                .iter()
                .map(|g| {
                    let size = g.members.len() as f64;
                    let mean = g.members.iter().map(|&i| sats[i]).sum::<f64>() / size;
                    mean / afs_bound(g.alpha.min(size / n as f64), exponent_lambda)
                })
                .fold(f64::INFINITY, f64::min)
        });
        rows.push(SweepRow {
            lambda,
            rule: Rule::Ctr(f).to_string(),
            m,
            n,
            seed,
            wl_emp: welfare_loss_against(profile, x, util.objective),
            wl_bound: wl_bound(lambda, m),
            el_emp: egalitarian_loss_against(profile, x, egal.objective),
            el_bound: (n >= 2)
                .then(|| gamma(m, n, lambda).map(|g| g.0))
                .transpose()?,
            min_share: sats.min(),
            min_share_bound: (n >= 2).then(|| ifs_share_bound(lambda, m, n)),
            afs_worst: afs_worst.filter(|v| v.is_finite()),
            converged: report.converged && util.converged && egal.converged,
        });
    }
    Ok(rows)
}

/// `*.json` files directly inside `dir`, sorted by name.
pub fn profile_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Sweeps every profile in `dir` and returns the rows in `(file, λ)` order.
pub fn sweep_dir(dir: &Path, lambdas: &[f64], opts: &SolverOptions) -> Result<Vec<SweepRow>> {
    // profiles run in parallel; collect preserves file order
    let per_file = profile_paths(dir)?
        .par_iter()
        .map(|path| {
            let (file, profile) = load_profile(path)?;
            sweep_profile(&profile, file.seed, lambdas, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_file.into_iter().flatten().collect())
}

pub fn write_csv(out: impl Write, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush().map_err(|e| CliError::io("<csv>", e))?;
    Ok(())
}

/// `v` with 12 significant digits, trailing zeros dropped; scientific
/// notation outside `[1e-5, 1e12)`.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.6), "0.6");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(15.0 / 17.0), "0.882352941176");
        assert_eq!(fmt_sig(123456.0), "123456");
        assert_eq!(fmt_sig(2.5e-9), "2.5e-9");
        assert_eq!(fmt_sig(-0.125), "-0.125");
        assert_eq!(fmt_sig(1e15), "1e15");
    }

    #[test]
    fn lambda_grids() {
        assert_eq!(parse_lambda_grid("0.5,1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        let g = parse_lambda_grid("0.1:10:3").unwrap();
        assert_eq!(g[0], 0.1);
        assert!((g[1] - 1.0).abs() < 1e-12);
        assert_eq!(g[2], 10.0);
        for bad in ["0:1:3", "1:0.5:2", "a,b", "1:2:0", "-1"] {
            assert!(parse_lambda_grid(bad).is_err(), "{bad}");
        }
    }
}
