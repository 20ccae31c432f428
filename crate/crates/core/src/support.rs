//! Support sets `s↑_j`, `s↓_j` and marginal contributions.
//!
//! `s↑_j(x)` holds the agents whose satisfaction grows when `x_j` grows,
//! `s↓_j(x)` those whose satisfaction shrinks when `x_j` shrinks. They differ
//! only in agents sitting exactly at their peak share `x^i_j = x_j`.

use alloc::vec::Vec;

use crate::profile::{overlap, Allocation, Profile};
use crate::utility::UtilityFunction;

/// Coordinates within this distance of an agent's share count as ties.
/// Moving an input by more than this moves agents between `s↑` and `s↓`.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Direction {
    Up,
    Down,
}

/// `x^i_j > x_j`, up to [`TIE_TOLERANCE`].
#[inline]
pub(crate) fn gains_on(ideal: f64, share: f64) -> bool {
    ideal > share + TIE_TOLERANCE
}

/// `x^i_j ≥ x_j`, up to [`TIE_TOLERANCE`].
#[inline]
pub(crate) fn loses_on(ideal: f64, share: f64) -> bool {
    ideal >= share - TIE_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSets {
    up: Vec<Vec<usize>>,
    down: Vec<Vec<usize>>,
}

impl SupportSets {
    /// `s↑_j`, ascending agent indices.
    pub fn up(&self, j: usize) -> &[usize] {
        &self.up[j]
    }

    /// `s↓_j`, ascending agent indices.
    pub fn down(&self, j: usize) -> &[usize] {
        &self.down[j]
    }

    pub fn get(&self, j: usize, dir: Direction) -> &[usize] {
        match dir {
            Direction::Up => self.up(j),
            Direction::Down => self.down(j),
        }
    }

    pub fn m(&self) -> usize {
        self.up.len()
    }

    /// `σ(i) = { j : i ∈ s_j }` for the chosen direction.
    pub fn alternatives_of(&self, i: usize, dir: Direction) -> Vec<usize> {
        (0..self.m())
            .filter(|&j| self.get(j, dir).binary_search(&i).is_ok())
            .collect()
    }
}

pub fn support_sets(profile: &Profile, x: &Allocation) -> SupportSets {
    let m = profile.m();
    let mut up = alloc::vec![Vec::new(); m];
    let mut down = alloc::vec![Vec::new(); m];
    for (i, row) in profile.rows().enumerate() {
        for j in 0..m {
            if gains_on(row[j], x[j]) {
                up[j].push(i);
            }
            if loses_on(row[j], x[j]) {
                down[j].push(i);
            }
        }
    }
    SupportSets { up, down }
}

/// `mc_j = Σ_{i ∈ s_j} f'(π_i(x))` over the chosen support set.
pub fn marginal_contribution(
    profile: &Profile,
    x: &Allocation,
    f: &UtilityFunction,
    j: usize,
    dir: Direction,
) -> f64 {
    profile
        .rows()
        .filter(|row| match dir {
            Direction::Up => gains_on(row[j], x[j]),
            Direction::Down => loses_on(row[j], x[j]),
        })
        .map(|row| f.derivative(overlap(row, x.shares())))
        .sum()
}
