//! Closed-form welfare and fairness guarantees, empirical losses, and a
//! harness pairing the two.
//!
//! The closed forms take `λ` from the matching side of the rule's
//! [`IavBound`](crate::IavBound): welfare-loss bounds need an upper bound on
//! the IAV, share and egalitarian bounds need a lower one.

use alloc::format;
use alloc::vec::Vec;

use crate::axioms::cohesive_groups;
use crate::math::powf;
use crate::profile::{Allocation, Profile};
use crate::solver::SolveReport;
use crate::utility::UtilityFunction;
use crate::{satisfaction_vector, Error, Result};

/// Slack granted to every bound comparison.
pub const BOUND_SLACK: f64 = 1e-6;

/// `Σ_i π_i(x)`.
pub fn welfare(profile: &Profile, x: &Allocation) -> f64 {
    satisfaction_vector(profile, x).total()
}

fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// `1 - W(x) / best_welfare`, clamped to `[0, 1]`.
pub fn welfare_loss_against(profile: &Profile, x: &Allocation, best_welfare: f64) -> f64 {
    if best_welfare <= 0.0 {
        return 0.0;
    }
    clamp_unit(1.0 - welfare(profile, x) / best_welfare)
}

/// Welfare loss against a converged utilitarian solve.
pub fn welfare_loss(profile: &Profile, x: &Allocation, reference: &SolveReport) -> Result<f64> {
    if !reference.converged {
        return Err(Error::ReferenceNotConverged);
    }
    Ok(welfare_loss_against(profile, x, reference.objective))
}

/// `1 - min_i π_i(x) / maxmin`, clamped to `[0, 1]`.
pub fn egalitarian_loss_against(profile: &Profile, x: &Allocation, maxmin: f64) -> f64 {
    if maxmin <= 0.0 {
        return 0.0;
    }
    clamp_unit(1.0 - satisfaction_vector(profile, x).min() / maxmin)
}

/// Egalitarian loss against a converged egalitarian solve.
pub fn egalitarian_loss(profile: &Profile, x: &Allocation, reference: &SolveReport) -> Result<f64> {
    if !reference.converged {
        return Err(Error::ReferenceNotConverged);
    }
    Ok(egalitarian_loss_against(profile, x, reference.objective))
}

/// Welfare-loss guarantee for `IAV ≤ λ`: `λ m^λ / (λ m^λ + λ + 1)`.
pub fn wl_bound(lambda_upper: f64, m: usize) -> f64 {
    let a = lambda_upper * powf(m as f64, lambda_upper);
    a / (a + lambda_upper + 1.0)
}

/// Single-minded refinement: `(m-1)/m · λ/(λ+1)`.
pub fn wl_bound_single_minded(lambda_upper: f64, m: usize) -> f64 {
    let m = m as f64;
    (m - 1.0) / m * lambda_upper / (lambda_upper + 1.0)
}

/// Minimum satisfaction guarantee for `IAV ≥ λ`:
/// `1 / (1 + (m-1)(n-1)^{1/λ})`.
pub fn ifs_share_bound(lambda_lower: f64, m: usize, n: usize) -> f64 {
    let spread = powf((n as f64 - 1.0).max(0.0), 1.0 / lambda_lower);
    1.0 / (1.0 + (m as f64 - 1.0) * spread)
}

/// Egalitarian-loss guarantee on single-minded profiles with every
/// alternative supported: `1 - m / (1 + (m-1)(n-1)^{1/λ})`.
pub fn el_bound_single_minded(lambda_lower: f64, m: usize, n: usize) -> f64 {
    clamp_unit(1.0 - m as f64 * ifs_share_bound(lambda_lower, m, n))
}

/// Weaker minimum satisfaction guarantee: `(1/m)(1/n)^{1/λ}`.
pub fn min_agent_bound(lambda_lower: f64, m: usize, n: usize) -> f64 {
    powf(1.0 / n as f64, 1.0 / lambda_lower) / m as f64
}

/// Mean satisfaction guaranteed to an `α`-cohesive group when
/// `λ ≤ IAV ≤ 1`: `α^{1/λ}`.
pub fn afs_bound(alpha: f64, lambda_lower: f64) -> f64 {
    powf(alpha, 1.0 / lambda_lower)
}

/// `(value, ω*)` for `γ(m, n, λ) = max_{ω∈[0,1]} min(mω, 1 - (ω/(n-1))^{1/λ})`.
///
/// The first branch increases and the second decreases in `ω`, so the
/// maximin sits at their crossing, found by bisection to `1e-10`.
pub fn gamma(m: usize, n: usize, lambda_lower: f64) -> Result<(f64, f64)> {
    check_gamma_args(m, n, lambda_lower)?;
    let (mf, spread, inv) = (m as f64, n as f64 - 1.0, 1.0 / lambda_lower);
    let excess = |w: f64| mf * w - (1.0 - powf(w / spread, inv));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let w = 0.5 * (lo + hi);
    Ok((mf * w, w))
}

/// `γ` maximized over the `points`-point uniform grid on `[0, 1]` instead
/// of exactly. Coarse grids land below the crossing and under-report `γ`.
pub fn gamma_tabulated(m: usize, n: usize, lambda_lower: f64, points: usize) -> Result<f64> {
    check_gamma_args(m, n, lambda_lower)?;
    if points < 2 {
        return Err(Error::ParameterOutOfRange(
            "gamma grid needs at least two points".into(),
        ));
    }
    let (mf, spread, inv) = (m as f64, n as f64 - 1.0, 1.0 / lambda_lower);
    let last = (points - 1) as f64;
    Ok((0..points)
        .map(|k| {
            let w = k as f64 / last;
            (mf * w).min(1.0 - powf(w / spread, inv))
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

fn check_gamma_args(m: usize, n: usize, lambda: f64) -> Result<()> {
    if m < 2 || n < 2 || !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!(
            "gamma needs m ≥ 2, n ≥ 2 and finite λ > 0 (got m={m}, n={n}, λ={lambda})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BoundKind {
    Wl,
    WlSingleMinded,
    ElGamma,
    ElSingleMinded,
    IfsShare,
    AfsExponent,
    MinAgent,
}

impl BoundKind {
    pub const ALL: [BoundKind; 7] = [
        BoundKind::Wl,
        BoundKind::WlSingleMinded,
        BoundKind::ElGamma,
        BoundKind::ElSingleMinded,
        BoundKind::IfsShare,
        BoundKind::AfsExponent,
        BoundKind::MinAgent,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Wl => "wl",
            BoundKind::WlSingleMinded => "wl-single-minded",
            BoundKind::ElGamma => "el-gamma",
            BoundKind::ElSingleMinded => "el-single-minded",
            BoundKind::IfsShare => "ifs-share",
            BoundKind::AfsExponent => "afs-exponent",
            BoundKind::MinAgent => "min-agent",
        }
    }

    /// Inverse of [`BoundKind::name`]; also accepts `gamma` for
    /// [`BoundKind::ElGamma`] and `afs` for [`BoundKind::AfsExponent`].
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gamma" => Some(BoundKind::ElGamma),
            "afs" => Some(BoundKind::AfsExponent),
            _ => Self::ALL.into_iter().find(|k| k.name() == s),
        }
    }

    /// Losses must stay below the bound; shares must stay above it.
    pub fn is_loss(&self) -> bool {
        matches!(
            self,
            BoundKind::Wl
                | BoundKind::WlSingleMinded
                | BoundKind::ElGamma
                | BoundKind::ElSingleMinded
        )
    }
}

/// A closed-form bound with its parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BoundReport {
    pub kind: BoundKind,
    pub m: usize,
    pub n: Option<usize>,
    pub lambda: f64,
    pub alpha: Option<f64>,
    pub value: f64,
    /// Maximizing `ω` for [`BoundKind::ElGamma`].
    pub omega: Option<f64>,
}

/// Evaluates `kind` after validating its parameters. `n` is required by the
/// share and egalitarian kinds, `alpha` by [`BoundKind::AfsExponent`].
pub fn bound_report(
    kind: BoundKind,
    m: usize,
    n: Option<usize>,
    lambda: f64,
    alpha: Option<f64>,
) -> Result<BoundReport> {
    let bad = |msg: &str| Error::ParameterOutOfRange(format!("{}: {msg}", kind.name()));
    if m == 0 {
        return Err(bad("m must be positive"));
    }
    if !(lambda > 0.0) || lambda.is_nan() {
        return Err(bad("λ must be positive"));
    }
    let need_n = || n.filter(|&n| n >= 1).ok_or_else(|| bad("n is required"));
    let mut omega = None;
    let value = match kind {
        BoundKind::Wl => wl_bound(lambda, m),
        BoundKind::WlSingleMinded => wl_bound_single_minded(lambda, m),
        BoundKind::ElGamma => {
            let (v, w) = gamma(m, need_n()?, lambda)?;
            omega = Some(w);
            v
        }
        BoundKind::ElSingleMinded => el_bound_single_minded(lambda, m, need_n()?),
        BoundKind::IfsShare => ifs_share_bound(lambda, m, need_n()?),
        BoundKind::MinAgent => min_agent_bound(lambda, m, need_n()?),
        BoundKind::AfsExponent => {
            let a = alpha.ok_or_else(|| bad("α is required"))?;
            if !(a > 0.0 && a <= 1.0) || lambda > 1.0 {
                return Err(bad("needs α ∈ (0, 1] and λ ∈ (0, 1]"));
            }
            afs_bound(a, lambda)
        }
    };
    Ok(BoundReport {
        kind,
        m,
        n,
        lambda,
        alpha,
        value,
        omega,
    })
}

/// Optimal values of the two reference problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct References {
    /// `max_y Σ_i π_i(y)`.
    pub welfare: f64,
    /// `max_y min_i π_i(y)`.
    pub maxmin: f64,
}

impl References {
    /// From converged utilitarian and egalitarian solves.
    pub fn from_reports(utilitarian: &SolveReport, egalitarian: &SolveReport) -> Result<Self> {
        if !(utilitarian.converged && egalitarian.converged) {
            return Err(Error::ReferenceNotConverged);
        }
        Ok(Self {
            welfare: utilitarian.objective,
            maxmin: egalitarian.objective,
        })
    }
}

/// One theorem applied to one instance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BoundCheck {
    pub kind: BoundKind,
    pub bound: f64,
    pub empirical: f64,
    pub satisfied: bool,
    /// Group attaining the worst AFS margin.
    pub group: Option<Vec<usize>>,
}

impl BoundCheck {
    fn new(kind: BoundKind, bound: f64, empirical: f64) -> Self {
        let satisfied = if kind.is_loss() {
            empirical <= bound + BOUND_SLACK
        } else {
            empirical >= bound - BOUND_SLACK
        };
        Self {
            kind,
            bound,
            empirical,
            satisfied,
            group: None,
        }
    }
}

/// Largest `n` for which the AFS guarantee is checked over every group.
pub const AFS_MAX_AGENTS: usize = 20;

/// Pairs every theorem applicable to `f` with the measurement on `x`,
/// the rule's outcome on `profile`.
///
/// Welfare-loss bounds use the IAV upper bound; share, egalitarian and AFS
/// bounds use the lower bound, and AFS additionally needs `IAV ≤ 1`. Fails
/// when `f` carries no usable IAV bound at all.
pub fn verify_bounds(
    profile: &Profile,
    f: &UtilityFunction,
    x: &Allocation,
    refs: &References,
) -> Result<Vec<BoundCheck>> {
    profile.check_allocation(x)?;
    let iav = f.iav_bound();
    let lower = iav.lower.filter(|&l| l > 0.0);
    if iav.upper.is_none() && lower.is_none() {
        return Err(Error::MissingIavBound("verify_bounds"));
    }
    let (n, m) = (profile.n(), profile.m());
    let sats = satisfaction_vector(profile, x);
    let min_share = sats.min();
    let single_minded = profile.peaks();
    let mut out = Vec::new();

    if let Some(upper) = iav.upper {
        let wl = welfare_loss_against(profile, x, refs.welfare);
        out.push(BoundCheck::new(BoundKind::Wl, wl_bound(upper, m), wl));
        if single_minded.is_some() {
            out.push(BoundCheck::new(
                BoundKind::WlSingleMinded,
                wl_bound_single_minded(upper, m),
                wl,
            ));
        }
    }

    if let Some(lambda) = lower {
        out.push(BoundCheck::new(
            BoundKind::MinAgent,
            min_agent_bound(lambda, m, n),
            min_share,
        ));
        if n >= 2 {
            out.push(BoundCheck::new(
                BoundKind::IfsShare,
                ifs_share_bound(lambda, m, n),
                min_share,
            ));
        }
        let el = egalitarian_loss_against(profile, x, refs.maxmin);
        if n >= 2 && m >= 2 {
            let (g, _) = gamma(m, n, lambda)?;
            out.push(BoundCheck::new(BoundKind::ElGamma, g, el));
        }
        if let Some(peaks) = &single_minded {
            let all_supported = (0..m).all(|j| peaks.contains(&j));
            if all_supported && n >= 2 {
                out.push(BoundCheck::new(
                    BoundKind::ElSingleMinded,
                    el_bound_single_minded(lambda, m, n),
                    el,
                ));
            }
        }
        let afs_applies = iav.upper.is_some_and(|u| u <= 1.0);
        if afs_applies && n <= AFS_MAX_AGENTS {
            if let Some(check) = worst_afs(profile, sats.values(), lambda)? {
                out.push(check);
            }
        }
    }
    Ok(out)
}

/// The cohesive group with the smallest `mean / α^{1/λ}` ratio.
fn worst_afs(profile: &Profile, sats: &[f64], lambda: f64) -> Result<Option<BoundCheck>> {
    let n = profile.n() as f64;
    let mut worst: Option<(f64, BoundCheck)> = None;
    for g in cohesive_groups(profile, f64::MIN_POSITIVE)? {
        let size = g.members.len() as f64;
        let alpha = g.alpha.min(size / n);
        let bound = afs_bound(alpha, lambda);
        let mean = g.members.iter().map(|&i| sats[i]).sum::<f64>() / size;
        let ratio = mean / bound;
        if worst.as_ref().is_none_or(|(r, _)| ratio < *r) {
            let mut check = BoundCheck::new(BoundKind::AfsExponent, bound, mean);
            check.group = Some(g.members);
            worst = Some((ratio, check));
        }
    }
    Ok(worst.map(|(_, c)| c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn welfare_examples() {
        let p = Profile::from_groups(&[
            (3, [1.0, 0.0, 0.0]),
            (3, [0.5, 0.5, 0.0]),
            (4, [0.0, 0.0, 1.0]),
        ])
        .unwrap();
        let x = Allocation::new(vec![0.5, 0.0, 0.5]).unwrap();
        assert!((welfare(&p, &x) - 5.0).abs() < 1e-12);

        let p = Profile::single_minded(2, &[0, 1, 1, 1]).unwrap();
        let x = Allocation::new(vec![0.25, 0.75]).unwrap();
        assert!((welfare(&p, &x) - 2.5).abs() < 1e-12);
        assert!((welfare_loss_against(&p, &x, 3.0) - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn closed_forms() {
        assert!((wl_bound(1.0, 3) - 0.6).abs() < 1e-15);
        assert!((wl_bound(1.0, 15) - 15.0 / 17.0).abs() < 1e-15);
        assert!(wl_bound(1e-12, 5) < 1e-11);
        assert!((wl_bound_single_minded(1.0, 3) - 1.0 / 3.0).abs() < 1e-15);
        assert!((wl_bound_single_minded(1.0, 2) - 0.25).abs() < 1e-15);
        assert!((wl_bound_single_minded(1e9, 15) - 14.0 / 15.0).abs() < 1e-8);
        assert!((ifs_share_bound(1.0, 3, 11) - 1.0 / 21.0).abs() < 1e-15);
        assert!((ifs_share_bound(1.0, 2, 2) - 0.5).abs() < 1e-15);
        assert!((min_agent_bound(1.0, 2, 4) - 0.125).abs() < 1e-15);
        assert!((min_agent_bound(3.0, 4, 1) - 0.25).abs() < 1e-15);
        assert!((afs_bound(0.25, 0.5) - 0.0625).abs() < 1e-15);
        assert_eq!(afs_bound(0.3, 1.0), 0.3);
        let expected = 1.0 - 3.0 / (1.0 + 2.0 * powf(19.0, 0.1));
        assert!((el_bound_single_minded(10.0, 3, 20) - expected).abs() < 1e-15);
    }

    #[test]
    fn gamma_crossing() {
        let (v, w) = gamma(3, 100, 10.0).unwrap();
        assert!((3.0 * w - v).abs() < 1e-15);
        assert!((3.0 * w - (1.0 - powf(w / 99.0, 0.1))).abs() < 1e-8);
        assert!(gamma(20, 100, 1e6).unwrap().0 < 1e-4);
        assert!(gamma(1, 100, 1.0).is_err());
        assert!(gamma(3, 1, 1.0).is_err());
    }

    #[test]
    fn tabulated_gamma_lags_exact() {
        for &(m, lambda) in &[(3, 10.0), (8, 1.0), (20, 100.0)] {
            let exact = gamma(m, 100, lambda).unwrap().0;
            let grid = gamma_tabulated(m, 100, lambda, 1000).unwrap();
            assert!(grid <= exact + 1e-12);
            assert!(exact - grid < m as f64 / 999.0);
        }
    }

    #[test]
    fn kinds_round_trip() {
        for k in BoundKind::ALL {
            assert_eq!(BoundKind::parse(k.name()), Some(k));
        }
        assert_eq!(BoundKind::parse("gamma"), Some(BoundKind::ElGamma));
        assert!(bound_report(BoundKind::IfsShare, 3, None, 1.0, None).is_err());
        assert!(bound_report(BoundKind::AfsExponent, 3, None, 2.0, Some(0.5)).is_err());
        let r = bound_report(BoundKind::ElGamma, 3, Some(100), 10.0, None).unwrap();
        assert!(r.omega.is_some());
    }

    #[test]
    fn quadratic_has_no_bounds() {
        let p = Profile::new(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let refs = References {
            welfare: 1.0,
            maxmin: 0.5,
        };
        let err = verify_bounds(
            &p,
            &UtilityFunction::quadratic(),
            &Allocation::uniform(2),
            &refs,
        );
        assert!(matches!(err, Err(Error::MissingIavBound(_))));
    }
}
