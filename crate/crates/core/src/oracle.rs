//! Brute-force ground truth on simplex grids.
//!
//! A [`GridSpec`] describes all nonnegative `m`-vectors whose entries are
//! multiples of `budget / divisions` and sum to `budget`. Points are streamed
//! in lexicographic order, so argmax ties resolve to the lexicographically
//! smallest vector.

use alloc::vec::Vec;

use crate::math::round;
use crate::profile::{overlap, Profile};
use crate::utility::UtilityFunction;
use crate::{Error, Result};

pub const DEFAULT_MAX_POINTS: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    m: usize,
    divisions: usize,
    budget: f64,
    max_points: u128,
}

/// `C(n, k)` with saturation.
pub fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

impl GridSpec {
    /// Grid of step `resolution` on `{y ≥ 0, Σ y = budget}`. Requires
    /// `budget / resolution` to be an integer within `1e-9`.
    pub fn new(m: usize, resolution: f64, budget: f64) -> Result<Self> {
        if !(resolution > 0.0 && budget > 0.0) {
            return Err(Error::ParameterOutOfRange(alloc::format!(
                "grid resolution {resolution} and budget {budget} must be positive"
            )));
        }
        let ratio = budget / resolution;
        let divisions = round(ratio);
        if (ratio - divisions).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::ParameterOutOfRange(alloc::format!(
                "budget {budget} is not a multiple of resolution {resolution}"
            )));
        }
        Self::with_divisions(m, divisions as usize, budget)
    }

    /// Grid splitting `budget` into `divisions` equal steps.
    pub fn with_divisions(m: usize, divisions: usize, budget: f64) -> Result<Self> {
        if m == 0 || divisions == 0 {
            return Err(Error::ParameterOutOfRange(
                "grid needs at least one alternative and one division".into(),
            ));
        }
        let spec = Self {
            m,
            divisions,
            budget,
            max_points: DEFAULT_MAX_POINTS,
        };
        spec.check_size()?;
        Ok(spec)
    }

    /// Overrides the size guard.
    pub fn with_max_points(mut self, max_points: u128) -> Result<Self> {
        self.max_points = max_points;
        self.check_size()?;
        Ok(self)
    }

    fn check_size(&self) -> Result<()> {
        let count = self.point_count();
        if count > self.max_points {
            return Err(Error::TooLarge {
                what: "grid",
                value: count,
                limit: self.max_points,
            });
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn divisions(&self) -> usize {
        self.divisions
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn resolution(&self) -> f64 {
        self.budget / self.divisions as f64
    }

    /// Stars and bars: `C(divisions + m - 1, m - 1)`.
    pub fn point_count(&self) -> u128 {
        binomial((self.divisions + self.m - 1) as u128, (self.m - 1) as u128)
    }

    pub fn points(&self) -> GridPoints {
        GridPoints {
            counts: None,
            divisions: self.divisions,
            m: self.m,
            step: self.resolution(),
        }
    }

    /// Visits every point without allocating per point.
    pub fn for_each(&self, mut visit: impl FnMut(&[f64])) {
        let mut counts = alloc::vec![0usize; self.m];
        let mut point = alloc::vec![0.0; self.m];
        counts[self.m - 1] = self.divisions;
        let step = self.resolution();
        loop {
            for (p, &c) in point.iter_mut().zip(&counts) {
                *p = c as f64 * step;
            }
            visit(&point);
            if !advance(&mut counts) {
                break;
            }
        }
    }
}

/// Next composition in lexicographic order; `false` after the last one.
fn advance(counts: &mut [usize]) -> bool {
    let m = counts.len();
    let mut tail = 0;
    for p in (0..m.saturating_sub(1)).rev() {
        tail += counts[p + 1];
        if tail > 0 {
            counts[p] += 1;
            for c in counts[p + 1..].iter_mut() {
                *c = 0;
            }
            counts[m - 1] = tail - 1;
            return true;
        }
    }
    false
}

/// Streaming iterator over a [`GridSpec`].
#[derive(Debug, Clone)]
pub struct GridPoints {
    counts: Option<Vec<usize>>,
    divisions: usize,
    m: usize,
    step: f64,
}

impl Iterator for GridPoints {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        match &mut self.counts {
            None => {
                let mut c = alloc::vec![0; self.m];
                c[self.m - 1] = self.divisions;
                self.counts = Some(c);
            }
            Some(c) => {
                if c.is_empty() || !advance(c) {
                    c.clear();
                    return None;
                }
            }
        }
        let step = self.step;
        self.counts
            .as_ref()
            .map(|c| c.iter().map(|&k| k as f64 * step).collect())
    }
}

/// What [`brute_force_best`] maximizes.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// `Σ_i f(π_i)`.
    Ctr(&'a UtilityFunction),
    /// `Σ_i π_i`.
    Welfare,
    /// `min_i π_i`.
    MaxMin,
}

impl Objective<'_> {
    pub fn evaluate(&self, profile: &Profile, y: &[f64]) -> f64 {
        let sats = profile.rows().map(|r| overlap(r, y));
        match self {
            Objective::Ctr(f) => sats.map(|p| f.value(p)).sum(),
            Objective::Welfare => sats.sum(),
            Objective::MaxMin => sats.fold(f64::INFINITY, f64::min),
        }
    }
}

/// Grid argmax of `objective`; ties go to the lexicographically smallest
/// point.
pub fn brute_force_best(
    profile: &Profile,
    objective: Objective<'_>,
    spec: &GridSpec,
) -> Result<(Vec<f64>, f64)> {
    if spec.m() != profile.m() {
        return Err(Error::DimensionMismatch {
            expected: profile.m(),
            actual: spec.m(),
        });
    }
    let mut best = Vec::new();
    let mut best_value = f64::NEG_INFINITY;
    spec.for_each(|y| {
        let v = objective.evaluate(profile, y);
        if v > best_value {
            best_value = v;
            best.clear();
            best.extend_from_slice(y);
        }
    });
    Ok((best, best_value))
}

/// Best welfare and best minimum satisfaction in one pass over the grid.
pub fn brute_force_references(profile: &Profile, spec: &GridSpec) -> Result<(f64, f64)> {
    if spec.m() != profile.m() {
        return Err(Error::DimensionMismatch {
            expected: profile.m(),
            actual: spec.m(),
        });
    }
    let (mut welfare, mut maxmin) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    spec.for_each(|y| {
        let (mut total, mut low) = (0.0, f64::INFINITY);
        for r in profile.rows() {
            let p = overlap(r, y);
            total += p;
            low = low.min(p);
        }
        welfare = welfare.max(total);
        maxmin = maxmin.max(low);
    });
    Ok((welfare, maxmin))
}
