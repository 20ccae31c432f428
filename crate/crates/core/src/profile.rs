//! Preference profiles, allocations and overlap satisfaction.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Tolerance on `Σ_j x_j = 1` for profile rows and allocations.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Overlap `|a ∩ b| = Σ_j min(a_j, b_j)` of two nonnegative vectors.
///
/// Symmetric in its arguments. For two distributions it equals
/// `1 - ½‖a - b‖₁`.
#[inline]
pub fn overlap(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&p, &q)| p.min(q)).sum()
}

fn check_distribution(row: &[f64], tol: f64) -> core::result::Result<(), alloc::string::String> {
    if let Some((j, v)) = row
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > 1.0 + tol)
    {
        return Err(format!("entry {j} = {v} is not in [0, 1]"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(format!("entries sum to {sum}, expected 1"));
    }
    Ok(())
}

/// An `n × m` matrix of ideal distributions, one row per agent.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Profile {
    n: usize,
    m: usize,
    prefs: Vec<f64>,
}

impl Profile {
    /// Builds a profile from agent rows. Requires `n ≥ 1`, `m ≥ 2` and every
    /// row a distribution (within [`SUM_TOLERANCE`]).
    pub fn new<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidProfile("profile has no agents".into()));
        }
        let m = rows[0].as_ref().len();
        let mut prefs = Vec::with_capacity(n * m);
        for row in rows {
            prefs.extend_from_slice(row.as_ref());
        }
        Self::from_flat(n, m, prefs)
    }

    /// Builds a profile from a row-major buffer of length `n * m`.
    pub fn from_flat(n: usize, m: usize, prefs: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidProfile("profile has no agents".into()));
        }
        if m < 2 {
            return Err(Error::InvalidProfile(format!(
                "need at least 2 alternatives, got {m}"
            )));
        }
        if prefs.len() != n * m {
            return Err(Error::DimensionMismatch {
                expected: n * m,
                actual: prefs.len(),
            });
        }
        for (i, row) in prefs.chunks_exact(m).enumerate() {
            check_distribution(row, SUM_TOLERANCE)
                .map_err(|e| Error::InvalidProfile(format!("agent {i}: {e}")))?;
        }
        Ok(Self { n, m, prefs })
    }

    /// Profile of `groups` homogeneous blocks: `(size, ideal)` pairs.
    pub fn from_groups<R: AsRef<[f64]>>(groups: &[(usize, R)]) -> Result<Self> {
        let mut rows = Vec::new();
        for (size, ideal) in groups {
            for _ in 0..*size {
                rows.push(ideal.as_ref());
            }
        }
        Self::new(&rows)
    }

    /// Single-minded profile: agent `i` puts the whole budget on `peaks[i]`.
    pub fn single_minded(m: usize, peaks: &[usize]) -> Result<Self> {
        let mut prefs = alloc::vec![0.0; peaks.len() * m];
        for (i, &j) in peaks.iter().enumerate() {
            if j >= m {
                return Err(Error::IndexOutOfRange {
                    what: "alternative",
                    index: j,
                    len: m,
                });
            }
            prefs[i * m + j] = 1.0;
        }
        Self::from_flat(peaks.len(), m, prefs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Ideal distribution of agent `i`. Panics if `i >= n`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.prefs[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.prefs.chunks_exact(self.m)
    }

    /// Row-major view of all preferences.
    pub fn as_flat(&self) -> &[f64] {
        &self.prefs
    }

    /// The partial profile without the agents in `removed`. Fails if that
    /// would leave no agents.
    pub fn without(&self, removed: &[usize]) -> Result<Self> {
        let mut prefs = Vec::with_capacity(self.prefs.len());
        let mut n = 0;
        for i in 0..self.n {
            if !removed.contains(&i) {
                prefs.extend_from_slice(self.row(i));
                n += 1;
            }
        }
        Self::from_flat(n, self.m, prefs)
    }

    /// The profile with agent `i`'s report replaced by `report`.
    pub fn with_report(&self, i: usize, report: &[f64]) -> Result<Self> {
        self.check_agent(i)?;
        if report.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                actual: report.len(),
            });
        }
        let mut prefs = self.prefs.clone();
        prefs[i * self.m..(i + 1) * self.m].copy_from_slice(report);
        Self::from_flat(self.n, self.m, prefs)
    }

    /// Whether every row is a unit vector.
    pub fn is_single_minded(&self) -> bool {
        self.peaks().is_some()
    }

    /// Peak alternative of each agent when the profile is single-minded.
    pub fn peaks(&self) -> Option<Vec<usize>> {
        self.rows()
            .map(|row| {
                let j = row.iter().position(|&v| v > 0.5)?;
                let unit = row
                    .iter()
                    .enumerate()
                    .all(|(k, &v)| if k == j { v == 1.0 } else { v == 0.0 });
                unit.then_some(j)
            })
            .collect()
    }

    /// The common ideal, if all agents report the same distribution.
    pub fn unanimous_ideal(&self) -> Option<&[f64]> {
        let first = self.row(0);
        self.rows().all(|r| r == first).then_some(first)
    }

    /// `min_i x^i_j` and `max_i x^i_j` per alternative.
    pub fn column_range(&self, j: usize) -> (f64, f64) {
        self.rows()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[j]), hi.max(r[j]))
            })
    }

    pub(crate) fn check_agent(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                what: "agent",
                index: i,
                len: self.n,
            });
        }
        Ok(())
    }

    pub(crate) fn check_allocation(&self, x: &Allocation) -> Result<()> {
        if x.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                actual: x.len(),
            });
        }
        Ok(())
    }
}

/// A distribution of the unit budget over the alternatives.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Allocation(Vec<f64>);

impl Allocation {
    /// Validates nonnegativity and `Σ = 1` within [`SUM_TOLERANCE`].
    pub fn new(shares: Vec<f64>) -> Result<Self> {
        if shares.is_empty() {
            return Err(Error::InvalidAllocation("no alternatives".into()));
        }
        check_distribution(&shares, SUM_TOLERANCE).map_err(Error::InvalidAllocation)?;
        Ok(Self(shares))
    }

    pub fn uniform(m: usize) -> Self {
        Self(alloc::vec![1.0 / m as f64; m])
    }

    /// Unit vector on alternative `j`.
    pub fn vertex(m: usize, j: usize) -> Self {
        let mut v = alloc::vec![0.0; m];
        v[j] = 1.0;
        Self(v)
    }

    /// Wraps shares the caller has already validated.
    pub(crate) fn from_raw(shares: Vec<f64>) -> Self {
        Self(shares)
    }

    pub fn shares(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `θ·self + (1−θ)·other`.
    pub fn mix(&self, other: &Self, theta: f64) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| theta * a + (1.0 - theta) * b)
                .collect(),
        )
    }
}

impl core::ops::Index<usize> for Allocation {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// Per-agent satisfactions `π_i(x)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct SatisfactionVector(Vec<f64>);

impl SatisfactionVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `π_s = Σ_{i∈s} π_i` over all agents.
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl core::ops::Index<usize> for SatisfactionVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Satisfaction `π_i(x) = Σ_j min(x^i_j, x_j)` of agent `i`.
pub fn satisfaction(profile: &Profile, x: &Allocation, i: usize) -> Result<f64> {
    profile.check_agent(i)?;
    profile.check_allocation(x)?;
    Ok(overlap(profile.row(i), x.shares()))
}

/// Satisfaction of every agent. Panics on a dimension mismatch.
pub fn satisfaction_vector(profile: &Profile, x: &Allocation) -> SatisfactionVector {
    assert_eq!(profile.m(), x.len(), "allocation dimension mismatch");
    SatisfactionVector(satisfactions_of(profile, x.shares()))
}

/// Satisfactions for an arbitrary nonnegative vector (e.g. a coalition's
/// scaled budget).
pub(crate) fn satisfactions_of(profile: &Profile, y: &[f64]) -> Vec<f64> {
    profile.rows().map(|r| overlap(r, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn satisfaction_examples() {
        let p = Profile::new(&[[0.5, 0.5]]).unwrap();
        let x = Allocation::new(vec![0.25, 0.75]).unwrap();
        assert!((satisfaction(&p, &x, 0).unwrap() - 0.75).abs() < 1e-15);

        let own = Allocation::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(satisfaction(&p, &own, 0).unwrap(), 1.0);

        let p = Profile::new(&[[1.0, 0.0, 0.0]]).unwrap();
        let x = Allocation::new(vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(satisfaction(&p, &x, 0).unwrap(), 0.5);
    }

    #[test]
    fn satisfaction_index_out_of_range() {
        let p = Profile::new(&[[0.5, 0.5]]).unwrap();
        let x = Allocation::uniform(2);
        assert!(matches!(
            satisfaction(&p, &x, 1),
            Err(Error::IndexOutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn core_example_satisfactions() {
        let p = Profile::from_groups(&[
            (3, [1.0, 0.0, 0.0]),
            (3, [0.5, 0.5, 0.0]),
            (4, [0.0, 0.0, 1.0]),
        ])
        .unwrap();
        let x = Allocation::new(vec![0.5, 0.0, 0.5]).unwrap();
        let s = satisfaction_vector(&p, &x);
        assert!(s.values().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn uniform_profile_gives_constant_vector() {
        let p = Profile::new(&[[0.2, 0.3, 0.5]; 4]).unwrap();
        let x = Allocation::new(vec![0.6, 0.1, 0.3]).unwrap();
        let s = satisfaction_vector(&p, &x);
        assert!(s.values().windows(2).all(|w| w[0] == w[1]));
        assert!((s[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(Profile::new::<[f64; 2]>(&[]).is_err());
        assert!(Profile::new(&[[1.0]]).is_err());
        assert!(Profile::new(&[[0.5, 0.6]]).is_err());
        assert!(Profile::new(&[[1.5, -0.5]]).is_err());
        assert!(Profile::new(&[[0.5, 0.5 + 1e-10]]).is_ok());
        assert!(Allocation::new(vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn partial_profiles() {
        let p = Profile::new(&[[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]).unwrap();
        let q = p.without(&[1]).unwrap();
        assert_eq!(q.n(), 2);
        assert_eq!(q.row(1), &[0.5, 0.5]);
        assert!(p.without(&[0, 1, 2]).is_err());
        let r = p.with_report(2, &[1.0, 0.0]).unwrap();
        assert_eq!(r.row(2), &[1.0, 0.0]);
        assert!(p.with_report(3, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn single_minded_detection() {
        let p = Profile::single_minded(3, &[0, 2, 2]).unwrap();
        assert_eq!(p.peaks(), Some(vec![0, 2, 2]));
        let q = Profile::new(&[[0.5, 0.5]]).unwrap();
        assert!(!q.is_single_minded());
    }
}
