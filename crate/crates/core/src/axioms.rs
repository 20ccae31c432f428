//! Allocation-level axiom checks and rule-level probes.
//!
//! Refutations carry a [`Witness`] that [`Witness::verify`] re-checks from
//! the raw profile. Grid searches (core, efficiency, strategyproofness) are
//! sound for violations and complete only up to the grid resolution, which
//! the report records.

use alloc::vec::Vec;

use crate::math::ceil;
use crate::oracle::GridSpec;
use crate::profile::{overlap, Allocation, Profile};
use crate::solver::{solve_ctr, SolverOptions};
use crate::utility::UtilityFunction;
use crate::{satisfaction_vector, Error, Result};

/// Slack for the exact checks (RR, IFS, AFS).
pub const EXACT_SLACK: f64 = 1e-9;
/// Coordinate tolerance for proportionality.
pub const PROP_TOLERANCE: f64 = 1e-6;
/// Gains at or below this are not counted by the solver-based probes.
pub const PROBE_MARGIN: f64 = 1e-6;

pub const MAX_GROUP_AGENTS: usize = 20;
pub const MAX_CORE_AGENTS: usize = 12;
pub const MAX_GRID_ALTERNATIVES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Axiom {
    RangeRespecting,
    IndividualFairShare,
    Proportionality,
    AverageFairShare,
    Core,
    Efficiency,
    Participation,
    Strategyproofness,
}

impl Axiom {
    pub const ALL: [Axiom; 8] = [
        Axiom::RangeRespecting,
        Axiom::IndividualFairShare,
        Axiom::Proportionality,
        Axiom::AverageFairShare,
        Axiom::Core,
        Axiom::Efficiency,
        Axiom::Participation,
        Axiom::Strategyproofness,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Axiom::RangeRespecting => "rr",
            Axiom::IndividualFairShare => "ifs",
            Axiom::Proportionality => "prop",
            Axiom::AverageFairShare => "afs",
            Axiom::Core => "core",
            Axiom::Efficiency => "eff",
            Axiom::Participation => "par",
            Axiom::Strategyproofness => "sp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Status {
    Holds,
    Violated,
    NotApplicable,
}

/// Counterexample payloads.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "kebab-case"))]
pub enum Witness {
    /// `x_j` outside `[low, high]`.
    Range {
        alternative: usize,
        share: f64,
        low: f64,
        high: f64,
    },
    /// An agent below `1/n`.
    Agent {
        agent: usize,
        satisfaction: f64,
        threshold: f64,
    },
    /// A share off its supporter fraction.
    Share {
        alternative: usize,
        share: f64,
        expected: f64,
    },
    /// A cohesive group whose mean satisfaction is below the threshold.
    Group {
        members: Vec<usize>,
        alpha: f64,
        lambda: f64,
        mean: f64,
        threshold: f64,
    },
    /// `members` all weakly prefer `deviation` (of mass `budget`) and at
    /// least one gains more than `margin`. Covers core and efficiency.
    Deviation {
        members: Vec<usize>,
        budget: f64,
        deviation: Vec<f64>,
        margin: f64,
    },
    /// The agent does better under the outcome of the reduced profile.
    Abstention {
        agent: usize,
        outcome_without: Vec<f64>,
        with: f64,
        without: f64,
    },
    /// The agent does better by reporting `report`, which yields `outcome`.
    Misreport {
        agent: usize,
        report: Vec<f64>,
        outcome: Vec<f64>,
        truthful: f64,
        manipulated: f64,
    },
}

impl Witness {
    /// Recomputes the violation from `profile` and the checked allocation
    /// `x`. Solver-based witnesses are re-checked against the outcomes they
    /// carry.
    pub fn verify(&self, profile: &Profile, x: &Allocation) -> bool {
        let x = x.shares();
        match self {
            Witness::Range {
                alternative, share, ..
            } => {
                let (lo, hi) = profile.column_range(*alternative);
                (x[*alternative] - share).abs() == 0.0
                    && (*share < lo - EXACT_SLACK || *share > hi + EXACT_SLACK)
            }
            Witness::Agent { agent, .. } => {
                overlap(profile.row(*agent), x) < 1.0 / profile.n() as f64 - EXACT_SLACK
            }
            Witness::Share {
                alternative,
                expected,
                ..
            } => {
                let Some(peaks) = profile.peaks() else {
                    return false;
                };
                let s = peaks.iter().filter(|&&p| p == *alternative).count();
                (s as f64 / profile.n() as f64 - expected).abs() < 1e-15
                    && (x[*alternative] - expected).abs() > PROP_TOLERANCE
            }
            Witness::Group {
                members, lambda, ..
            } => {
                if members.is_empty() {
                    return false;
                }
                let size = members.len() as f64;
                let mean = members
                    .iter()
                    .map(|&i| overlap(profile.row(i), x))
                    .sum::<f64>()
                    / size;
                let alpha = cohesion(profile, members);
                let capped = alpha.min(size / profile.n() as f64);
                alpha > 0.0 && mean < crate::bounds::afs_bound(capped, *lambda) - EXACT_SLACK
            }
            Witness::Deviation {
                members,
                budget,
                deviation,
                margin,
            } => {
                let mass: f64 = deviation.iter().sum();
                if deviation.iter().any(|&v| v < 0.0) || mass > budget + 1e-9 {
                    return false;
                }
                let mut strict = false;
                for &i in members {
                    let before = overlap(profile.row(i), x);
                    let after = overlap(profile.row(i), deviation);
                    if after < before - EXACT_SLACK {
                        return false;
                    }
                    strict |= after > before + margin;
                }
                strict && !members.is_empty()
            }
            Witness::Abstention {
                agent,
                outcome_without,
                ..
            } => {
                let row = profile.row(*agent);
                overlap(row, outcome_without) > overlap(row, x) + PROBE_MARGIN
            }
            Witness::Misreport { agent, outcome, .. } => {
                let row = profile.row(*agent);
                overlap(row, outcome) > overlap(row, x) + PROBE_MARGIN
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub status: Status,
    pub witness: Option<Witness>,
    /// Grid step of the search, for grid-based checks.
    pub resolution: Option<f64>,
}

impl AxiomReport {
    fn holds(axiom: Axiom) -> Self {
        Self {
            axiom,
            status: Status::Holds,
            witness: None,
            resolution: None,
        }
    }

    fn violated(axiom: Axiom, witness: Witness) -> Self {
        Self {
            axiom,
            status: Status::Violated,
            witness: Some(witness),
            resolution: None,
        }
    }

    fn not_applicable(axiom: Axiom) -> Self {
        Self {
            axiom,
            status: Status::NotApplicable,
            witness: None,
            resolution: None,
        }
    }

    fn from_witness(axiom: Axiom, witness: Option<Witness>) -> Self {
        match witness {
            Some(w) => Self::violated(axiom, w),
            None => Self::holds(axiom),
        }
    }

    fn at_resolution(mut self, resolution: f64) -> Self {
        self.resolution = Some(resolution);
        self
    }

    pub fn is_holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn is_violated(&self) -> bool {
        self.status == Status::Violated
    }
}

/// A group of agents and its cohesion `Σ_j min_{i ∈ members} x^i_j`,
/// uncapped.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CohesiveGroup {
    pub members: Vec<usize>,
    pub alpha: f64,
}

fn cohesion(profile: &Profile, members: &[usize]) -> f64 {
    (0..profile.m())
        .map(|j| {
            members
                .iter()
                .map(|&i| profile.row(i)[j])
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

fn members_of(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask & (1 << i) != 0).collect()
}

fn guard(what: &'static str, value: usize, limit: usize) -> Result<()> {
    if value > limit {
        return Err(Error::TooLarge {
            what,
            value: value as u128,
            limit: limit as u128,
        });
    }
    Ok(())
}

/// Range respecting: `min_i x^i_j ≤ x_j ≤ max_i x^i_j` for every `j`.
pub fn check_rr(profile: &Profile, x: &Allocation) -> Result<AxiomReport> {
    profile.check_allocation(x)?;
    let witness = (0..profile.m()).find_map(|j| {
        let (low, high) = profile.column_range(j);
        let share = x[j];
        (share < low - EXACT_SLACK || share > high + EXACT_SLACK).then_some(Witness::Range {
            alternative: j,
            share,
            low,
            high,
        })
    });
    Ok(AxiomReport::from_witness(Axiom::RangeRespecting, witness))
}

/// Individual fair share: every `π_i(x) ≥ 1/n`.
pub fn check_ifs(profile: &Profile, x: &Allocation) -> Result<AxiomReport> {
    profile.check_allocation(x)?;
    let threshold = 1.0 / profile.n() as f64;
    let sats = satisfaction_vector(profile, x);
    let witness = sats
        .values()
        .iter()
        .position(|&s| s < threshold - EXACT_SLACK)
        .map(|agent| Witness::Agent {
            agent,
            satisfaction: sats[agent],
            threshold,
        });
    Ok(AxiomReport::from_witness(
        Axiom::IndividualFairShare,
        witness,
    ))
}

/// Proportionality on single-minded profiles: `x_j = s_j / n`. Not
/// applicable to other profiles.
pub fn check_prop(profile: &Profile, x: &Allocation) -> Result<AxiomReport> {
    profile.check_allocation(x)?;
    let Some(peaks) = profile.peaks() else {
        return Ok(AxiomReport::not_applicable(Axiom::Proportionality));
    };
    let n = profile.n() as f64;
    let witness = (0..profile.m()).find_map(|j| {
        let expected = peaks.iter().filter(|&&p| p == j).count() as f64 / n;
        ((x[j] - expected).abs() > PROP_TOLERANCE).then_some(Witness::Share {
            alternative: j,
            share: x[j],
            expected,
        })
    });
    Ok(AxiomReport::from_witness(Axiom::Proportionality, witness))
}

/// Every nonempty group with cohesion at least `min_alpha`, in bitmask
/// order.
pub fn cohesive_groups(profile: &Profile, min_alpha: f64) -> Result<Vec<CohesiveGroup>> {
    let n = profile.n();
    guard("agents for group enumeration", n, MAX_GROUP_AGENTS)?;
    let mut out = Vec::new();
    for_each_group(profile, |mask, alpha| {
        if alpha >= min_alpha {
            out.push(CohesiveGroup {
                members: members_of(mask, n),
                alpha,
            });
        }
        true
    });
    Ok(out)
}

/// Visits `(mask, cohesion)` for all nonempty masks in increasing order
/// until `visit` returns `false`.
fn for_each_group(profile: &Profile, mut visit: impl FnMut(u32, f64) -> bool) {
    let (n, m) = (profile.n(), profile.m());
    let mut mins = alloc::vec![0.0; m];
    for mask in 1u32..(1u32 << n) {
        mins.iter_mut().for_each(|v| *v = f64::INFINITY);
        for i in 0..n {
            if mask & (1 << i) != 0 {
                for (v, &p) in mins.iter_mut().zip(profile.row(i)) {
                    *v = v.min(p);
                }
            }
        }
        if !visit(mask, mins.iter().sum()) {
            return;
        }
    }
}

/// Average fair share with exponent `1/λ`: every group with cohesion
/// `α > 0` has mean satisfaction at least `min(α, |s|/n)^{1/λ}`. `λ = 1` is
/// exact AFS. The witness is the first violating group in bitmask order.
pub fn check_afs(profile: &Profile, x: &Allocation, lambda: f64) -> Result<AxiomReport> {
    profile.check_allocation(x)?;
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::ParameterOutOfRange(alloc::format!(
            "AFS exponent needs λ ∈ (0, 1], got {lambda}"
        )));
    }
    let n = profile.n();
    guard("agents for group enumeration", n, MAX_GROUP_AGENTS)?;
    let sats = satisfaction_vector(profile, x);
    let mut witness = None;
    for_each_group(profile, |mask, alpha| {
        if alpha <= 0.0 {
            return true;
        }
        let members = members_of(mask, n);
        let size = members.len() as f64;
        let capped = alpha.min(size / n as f64);
        let threshold = crate::bounds::afs_bound(capped, lambda);
        let mean = members.iter().map(|&i| sats[i]).sum::<f64>() / size;
        if mean < threshold - EXACT_SLACK {
            witness = Some(Witness::Group {
                members,
                alpha,
                lambda,
                mean,
                threshold,
            });
            return false;
        }
        true
    });
    Ok(AxiomReport::from_witness(Axiom::AverageFairShare, witness))
}

/// Grid with step at most `resolution` on `{y ≥ 0, Σ y = budget}`.
fn search_grid(m: usize, resolution: f64, budget: f64) -> Result<GridSpec> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::ParameterOutOfRange(alloc::format!(
            "grid resolution must lie in (0, 1], got {resolution}"
        )));
    }
    let divisions = ceil(budget / resolution - 1e-9).max(1.0) as usize;
    GridSpec::with_divisions(m, divisions, budget)
}

/// First `y` in `spec` that no member of `members` likes less than `x` and
/// some member likes more than `margin` better.
fn find_deviation(
    profile: &Profile,
    members: &[usize],
    before: &[f64],
    spec: &GridSpec,
    margin: f64,
) -> Option<Vec<f64>> {
    let mut found = None;
    spec.for_each(|y| {
        if found.is_some() {
            return;
        }
        let mut strict = false;
        for &i in members {
            let after = overlap(profile.row(i), y);
            if after < before[i] - EXACT_SLACK {
                return;
            }
            strict |= after > before[i] + margin;
        }
        if strict {
            found = Some(y.to_vec());
        }
    });
    found
}

/// Core stability by grid search: no coalition `s` can, with budget
/// `|s|/n`, make every member weakly better off and one member better off by
/// more than `resolution`.
pub fn check_core(profile: &Profile, x: &Allocation, resolution: f64) -> Result<AxiomReport> {
    profile.check_allocation(x)?;
    let (n, m) = (profile.n(), profile.m());
    guard("agents for core search", n, MAX_CORE_AGENTS)?;
    guard("alternatives for core search", m, MAX_GRID_ALTERNATIVES)?;
    let before = satisfaction_vector(profile, x).into_inner();
    let mut grids: Vec<Option<GridSpec>> = alloc::vec![None; n + 1];
    for mask in 1u32..(1u32 << n) {
        let members = members_of(mask, n);
        let size = members.len();
        let budget = size as f64 / n as f64;
        if grids[size].is_none() {
            grids[size] = Some(search_grid(m, resolution, budget)?);
        }
        let spec = grids[size].as_ref().expect("grid just built");
        if let Some(deviation) = find_deviation(profile, &members, &before, spec, resolution) {
            let w = Witness::Deviation {
                members,
                budget,
                deviation,
                margin: resolution,
            };
            return Ok(AxiomReport::violated(Axiom::Core, w).at_resolution(resolution));
        }
    }
    Ok(AxiomReport::holds(Axiom::Core).at_resolution(resolution))
}

/// Pareto efficiency by grid search over the simplex.
pub fn check_efficiency(profile: &Profile, x: &Allocation, resolution: f64) -> Result<AxiomReport> {
    profile.check_allocation(x)?;
    let m = profile.m();
    guard(
        "alternatives for efficiency search",
        m,
        MAX_GRID_ALTERNATIVES,
    )?;
    let before = satisfaction_vector(profile, x).into_inner();
    let spec = search_grid(m, resolution, 1.0)?;
    let everyone: Vec<usize> = (0..profile.n()).collect();
    let witness = find_deviation(profile, &everyone, &before, &spec, resolution).map(|deviation| {
        Witness::Deviation {
            members: everyone,
            budget: 1.0,
            deviation,
            margin: resolution,
        }
    });
    Ok(AxiomReport::from_witness(Axiom::Efficiency, witness).at_resolution(resolution))
}

/// Participation for agent `i`: solving with and without `i`, agent `i`
/// must not prefer the outcome it gets by abstaining.
pub fn probe_participation(
    profile: &Profile,
    f: &UtilityFunction,
    i: usize,
    opts: &SolverOptions,
) -> Result<AxiomReport> {
    profile.check_agent(i)?;
    if profile.n() < 2 {
        return Err(Error::ParameterOutOfRange(
            "participation needs at least two agents".into(),
        ));
    }
    let full = solve_ctr(profile, f, opts)?;
    let reduced = solve_ctr(&profile.without(&[i])?, f, opts)?;
    let row = profile.row(i);
    let with = overlap(row, full.allocation.shares());
    let without = overlap(row, reduced.allocation.shares());
    let witness = (without > with + PROBE_MARGIN).then(|| Witness::Abstention {
        agent: i,
        outcome_without: reduced.allocation.into_inner(),
        with,
        without,
    });
    Ok(AxiomReport::from_witness(Axiom::Participation, witness))
}

/// Strategyproofness for agent `i`: tries every misreport on a grid of step
/// at most `resolution` and keeps the most profitable one. Misreports whose
/// solve does not converge are skipped.
pub fn probe_strategyproofness(
    profile: &Profile,
    f: &UtilityFunction,
    i: usize,
    resolution: f64,
    opts: &SolverOptions,
) -> Result<AxiomReport> {
    profile.check_agent(i)?;
    let m = profile.m();
    guard(
        "alternatives for misreport search",
        m,
        MAX_GRID_ALTERNATIVES,
    )?;
    let spec = search_grid(m, resolution, 1.0)?;
    let truth = profile.row(i);
    let honest = solve_ctr(profile, f, opts)?;
    let truthful = overlap(truth, honest.allocation.shares());
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut failure = None;
    spec.for_each(|report| {
        if failure.is_some() {
            return;
        }
        let outcome = match profile
            .with_report(i, report)
            .and_then(|p| solve_ctr(&p, f, opts))
        {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        if !outcome.converged {
            return;
        }
        let got = overlap(truth, outcome.allocation.shares());
        if best.as_ref().is_none_or(|(b, _, _)| got > *b) {
            best = Some((got, report.to_vec(), outcome.allocation.into_inner()));
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let witness = best.and_then(|(manipulated, report, outcome)| {
        (manipulated > truthful + PROBE_MARGIN).then_some(Witness::Misreport {
            agent: i,
            report,
            outcome,
            truthful,
            manipulated,
        })
    });
    Ok(AxiomReport::from_witness(Axiom::Strategyproofness, witness).at_resolution(resolution))
}

/// Gain of a strategyproofness witness, `0` otherwise.
pub fn manipulation_gain(report: &AxiomReport) -> f64 {
    match &report.witness {
        Some(Witness::Misreport {
            truthful,
            manipulated,
            ..
        }) => manipulated - truthful,
        _ => 0.0,
    }
}
