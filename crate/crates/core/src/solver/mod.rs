//! CTR solver, marginal-rate certificate and reference solvers.
//!
//! [`solve_ctr`] warms up with entropic supergradient ascent from the uniform
//! allocation, then runs the pairwise exchange engine until the MRS
//! certificate `max mc↑ - min mc↓ ≤ tol` passes. For concave objectives a
//! nonpositive gap certifies global optimality, so correctness never rests on
//! the iteration schedule.

mod exchange;
mod geometry;
mod weighted;

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{exp, ln, powf};
use crate::profile::{satisfaction_vector, Allocation, Profile, SatisfactionVector};
use crate::support::{marginal_contribution, Direction};
use crate::utility::UtilityFunction;
use crate::{Error, Result};

pub use geometry::{directional_derivative, displacement, Displacement};
pub use weighted::max_weighted_welfare;

use exchange::{Exchange, SoftMin};

/// Relative certificate floor: gaps below this fraction of the marginal
/// contributions are at the resolution of `f64` sums.
pub const RELATIVE_GAP_FLOOR: f64 = 1e-12;

/// Supergradient step schedule `η_t = initial / t^decay` for the warm-up.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StepSchedule {
    pub initial: f64,
    pub decay: f64,
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self {
            initial: 0.5,
            decay: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SolverOptions {
    /// Certificate tolerance on the MRS gap (or the duality gap for the
    /// egalitarian solver).
    pub tol: f64,
    /// Iteration cap per restart, warm-up included.
    pub max_iters: usize,
    pub step_schedule: StepSchedule,
    /// Entropic supergradient iterations before the exchange phase.
    pub warmup_iters: usize,
    pub seed: u64,
    /// Number of starts; the first is the uniform allocation, the rest are
    /// seeded random interior points.
    pub restarts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iters: 200_000,
            step_schedule: StepSchedule::default(),
            warmup_iters: 50,
            seed: 0,
            restarts: 3,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::ParameterOutOfRange(alloc::format!(
                "tolerance {} must be positive",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::ParameterOutOfRange(
                "max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct SolveReport {
    pub allocation: Allocation,
    pub satisfactions: SatisfactionVector,
    /// `Σ_i f(π_i)` for CTRs, welfare for the utilitarian solver and
    /// `min_i π_i` for the egalitarian one.
    pub objective: f64,
    /// Certificate gap: the MRS gap for CTR and utilitarian solves, the
    /// duality gap `upper bound - min_i π_i` for egalitarian solves.
    pub mrs_gap: f64,
    /// The certificate gap relative to the size of the marginal sums.
    pub relative_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// MRS gap `max_{j: x_j<1} mc↑_j - min_{k: x_k>0} mc↓_k`. A nonpositive value
/// certifies that `x` maximizes `Σ_i f(π_i)`.
pub fn mrs_gap(profile: &Profile, x: &Allocation, f: &UtilityFunction) -> f64 {
    let m = profile.m();
    let up = (0..m)
        .filter(|&j| x[j] < 1.0)
        .map(|j| marginal_contribution(profile, x, f, j, Direction::Up))
        .fold(f64::NEG_INFINITY, f64::max);
    let down = (0..m)
        .filter(|&k| x[k] > 0.0)
        .map(|k| marginal_contribution(profile, x, f, k, Direction::Down))
        .fold(f64::INFINITY, f64::min);
    up - down
}

fn objective_of(f: &UtilityFunction, satisfactions: &SatisfactionVector) -> f64 {
    satisfactions.values().iter().map(|&p| f.value(p)).sum()
}

/// Random interior start: normalized i.i.d. exponentials.
fn random_start(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..m)
        .map(|_| -ln(1.0 - rng.random::<f64>()).max(1e-12))
        .collect();
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    x
}

/// Entropic supergradient ascent; returns the best iterate seen.
fn warm_start(
    profile: &Profile,
    f: &UtilityFunction,
    start: Vec<f64>,
    opts: &SolverOptions,
) -> (Vec<f64>, usize) {
    let m = profile.m();
    let mut x = start;
    let mut best = x.clone();
    let mut best_obj = f64::NEG_INFINITY;
    let mut grad = alloc::vec![0.0; m];
    let mut lnw = alloc::vec![0.0; profile.n()];
    for t in 1..=opts.warmup_iters {
        let pi: Vec<f64> = profile
            .rows()
            .map(|r| crate::profile::overlap(r, &x))
            .collect();
        let obj: f64 = pi.iter().map(|&p| f.value(p)).sum();
        if obj > best_obj {
            best_obj = obj;
            best.clone_from(&x);
        }
        let mut scale = f64::NEG_INFINITY;
        for (w, &p) in lnw.iter_mut().zip(&pi) {
            *w = f.ln_derivative(p);
            scale = scale.max(*w);
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (row, &w) in profile.rows().zip(&lnw) {
            let w = exp(w - scale);
            for j in 0..m {
                if row[j] >= x[j] {
                    grad[j] += w;
                }
            }
        }
        let gmax = grad.iter().copied().fold(0.0, f64::max);
        if gmax <= 0.0 {
            break;
        }
        let eta = opts.step_schedule.initial / powf(t as f64, opts.step_schedule.decay);
        for (xj, g) in x.iter_mut().zip(&grad) {
            *xj *= exp(eta * (g / gmax - 1.0));
        }
        let total: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= total);
    }
    (best, opts.warmup_iters)
}

struct Run {
    x: Vec<f64>,
    raw_gap: f64,
    relative_gap: f64,
    iterations: usize,
    converged: bool,
}

fn run_exchange<M: exchange::Marginal>(
    profile: &Profile,
    shape: &M,
    start: Vec<f64>,
    tol: f64,
    relative_floor: f64,
    max_iters: usize,
) -> Run {
    let mut engine = Exchange::new(profile, shape, start);
    let mut iterations = 0;
    let mut stalls = 0;
    loop {
        let cert = engine.certificate();
        let passes = cert.passes(tol, relative_floor);
        if passes || iterations >= max_iters || stalls > 8 {
            return Run {
                converged: passes,
                raw_gap: cert.raw_gap,
                relative_gap: cert.relative_gap,
                iterations,
                x: engine.into_x(),
            };
        }
        let moved = engine.step(cert.up, cert.down);
        stalls = if moved > 0.0 { 0 } else { stalls + 1 };
        iterations += 1;
    }
}

/// Computes the CTR outcome `argmax_{x ∈ Δ^m} Σ_i f(π_i(x))`.
///
/// Non-convergence within `max_iters` is not an error: the report carries the
/// best iterate with `converged = false`.
pub fn solve_ctr(
    profile: &Profile,
    f: &UtilityFunction,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if !f.is_strictly_concave() {
        return Err(Error::NotStrictlyConcave("solve_ctr"));
    }
    opts.validate()?;
    Ok(solve_with(profile, f, opts))
}

fn solve_with(profile: &Profile, f: &UtilityFunction, opts: &SolverOptions) -> SolveReport {
    let m = profile.m();
    if profile.n() == 1 {
        let x = Allocation::from_raw(profile.row(0).to_vec());
        return finish(profile, f, x, 0, true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<SolveReport> = None;
    for restart in 0..opts.restarts.max(1) {
        let start = if restart == 0 {
            Allocation::uniform(m).into_inner()
        } else {
            random_start(m, &mut rng)
        };
        let (start, warm) = if f.is_strictly_concave() {
            warm_start(profile, f, start, opts)
        } else {
            (start, 0)
        };
        let budget = opts.max_iters.saturating_sub(warm).max(1);
        let run = run_exchange(profile, f, start, opts.tol, RELATIVE_GAP_FLOOR, budget);
        let mut report = finish(
            profile,
            f,
            Allocation::from_raw(run.x),
            warm + run.iterations,
            run.converged,
        );
        report.mrs_gap = run.raw_gap;
        report.relative_gap = run.relative_gap;
        let better = match &best {
            None => true,
            Some(b) => {
                (report.converged && !b.converged)
                    || (report.converged == b.converged && report.objective > b.objective)
            }
        };
        if better {
            best = Some(report);
        }
    }
    best.expect("at least one restart")
}

fn finish(
    profile: &Profile,
    f: &UtilityFunction,
    allocation: Allocation,
    iterations: usize,
    converged: bool,
) -> SolveReport {
    let satisfactions = satisfaction_vector(profile, &allocation);
    let objective = objective_of(f, &satisfactions);
    let gap = mrs_gap(profile, &allocation, f);
    SolveReport {
        allocation,
        satisfactions,
        objective,
        mrs_gap: gap,
        relative_gap: 0.0,
        iterations,
        converged,
    }
}

/// Maximizes welfare `Σ_i π_i(x)` with the same exchange engine (`f = t`).
/// Marginal contributions are agent counts, so the certificate is exact:
/// `max_j |s↑_j| ≤ min_k |s↓_k|`.
pub fn solve_utilitarian(profile: &Profile, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    let f = UtilityFunction::identity();
    let mut o = opts.clone();
    o.restarts = 1;
    // integer-valued gaps: anything below one half is a nonpositive gap
    o.tol = 0.5;
    let mut report = solve_with(profile, &f, &o);
    report.objective = report.satisfactions.total();
    Ok(report)
}

const SOFTMIN_START: f64 = 10.0;
const SOFTMIN_GROWTH: f64 = 10.0;
const SOFTMIN_MAX: f64 = 1e10;
const SOFTMIN_STAGE_ITERS: usize = 20_000;
/// Stages only need to be accurate relative to the `O(ln n / β)` surrogate
/// bias; the duality bound certifies the final answer.
const SOFTMIN_RELATIVE_FLOOR: f64 = 1e-9;

/// Maximizes `min_i π_i(x)`.
///
/// Runs the exchange engine on the soft-minimum surrogate
/// `Σ_i -exp(-β π_i)` for geometrically increasing `β`, each stage
/// warm-started from the last. At a surrogate optimum `x_β` the weights
/// `w_i ∝ exp(-β π_i)` give the weak-duality bound
/// `max_y min_i π_i(y) ≤ max_y Σ_i w_i π_i(y)`, computed exactly by
/// [`max_weighted_welfare`]. The solve is converged once the best bound is
/// within `tol` of the best `min_i π_i`; `mrs_gap` reports that duality gap.
pub fn solve_egalitarian(profile: &Profile, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    let m = profile.m();
    let identity = UtilityFunction::identity();
    if profile.n() == 1 {
        let x = Allocation::from_raw(profile.row(0).to_vec());
        let mut r = finish(profile, &identity, x, 0, true);
        r.objective = r.satisfactions.min();
        r.mrs_gap = 0.0;
        return Ok(r);
    }
    let mut x = Allocation::uniform(m).into_inner();
    let mut best_x = x.clone();
    let mut best_primal = f64::NEG_INFINITY;
    let mut best_dual = f64::INFINITY;
    let mut iterations = 0;
    let mut beta = SOFTMIN_START;
    while beta <= SOFTMIN_MAX && iterations < opts.max_iters {
        let shape = SoftMin { beta };
        let budget = (opts.max_iters - iterations).min(SOFTMIN_STAGE_ITERS);
        // the raw gap underflows at large β; only the relative gap is meaningful
        let run = run_exchange(profile, &shape, x, 0.0, SOFTMIN_RELATIVE_FLOOR, budget);
        iterations += run.iterations.max(1);
        x = run.x;
        let pi: Vec<f64> = profile
            .rows()
            .map(|r| crate::profile::overlap(r, &x))
            .collect();
        let primal = pi.iter().copied().fold(f64::INFINITY, f64::min);
        if primal > best_primal {
            best_primal = primal;
            best_x.clone_from(&x);
        }
        let mut weights: Vec<f64> = pi.iter().map(|&p| exp(-beta * (p - primal))).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let (_, dual) = max_weighted_welfare(profile, &weights)?;
        best_dual = best_dual.min(dual);
        if best_dual - best_primal <= opts.tol {
            break;
        }
        beta *= SOFTMIN_GROWTH;
    }
    let gap = (best_dual - best_primal).max(0.0);
    let allocation = Allocation::from_raw(best_x);
    let satisfactions = satisfaction_vector(profile, &allocation);
    Ok(SolveReport {
        objective: satisfactions.min(),
        allocation,
        satisfactions,
        mrs_gap: gap,
        relative_gap: if best_dual > 0.0 {
            gap / best_dual
        } else {
            0.0
        },
        iterations,
        converged: gap <= opts.tol,
    })
}
