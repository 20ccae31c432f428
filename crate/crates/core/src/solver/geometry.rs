//! Displacements between allocations and directional derivatives of
//! satisfaction.

use alloc::vec::Vec;

use crate::profile::{Allocation, Profile};
use crate::support::{gains_on, loses_on};

/// Split of the alternatives into `J_x = {x_j ≥ y_j}` and `J_y = {x_j < y_j}`
/// with per-alternative distances `δ_j = |x_j - y_j|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacement {
    pub jx: Vec<usize>,
    pub jy: Vec<usize>,
    pub deltas: Vec<f64>,
    /// `Σ_{j ∈ J_x} δ_j`, equal to `Σ_{j ∈ J_y} δ_j` for two distributions.
    pub delta: f64,
}

impl Displacement {
    pub fn delta_y(&self) -> f64 {
        self.jy.iter().map(|&j| self.deltas[j]).sum()
    }
}

pub fn displacement(x: &Allocation, y: &Allocation) -> Displacement {
    assert_eq!(x.len(), y.len(), "allocation dimension mismatch");
    let (mut jx, mut jy) = (Vec::new(), Vec::new());
    let mut deltas = Vec::with_capacity(x.len());
    for (j, (&a, &b)) in x.shares().iter().zip(y.shares()).enumerate() {
        if a >= b {
            jx.push(j);
        } else {
            jy.push(j);
        }
        deltas.push((a - b).abs());
    }
    let delta = jx.iter().map(|&j| deltas[j]).sum();
    Displacement {
        jx,
        jy,
        deltas,
        delta,
    }
}

/// One-sided derivative of `π_i` at `x` towards `y`:
/// `Σ_{k ∈ J_y ∩ σ↑(i)} δ_k - Σ_{j ∈ J_x ∩ σ↓(i)} δ_j`.
///
/// Concavity of `π_i` makes this an upper bound on `π_i(y) - π_i(x)`.
pub fn directional_derivative(profile: &Profile, x: &Allocation, y: &Allocation, i: usize) -> f64 {
    let row = profile.row(i);
    let d = displacement(x, y);
    let gain: f64 =
        d.jy.iter()
            .filter(|&&k| gains_on(row[k], x[k]))
            .map(|&k| d.deltas[k])
            .sum();
    let loss: f64 =
        d.jx.iter()
            .filter(|&&j| loses_on(row[j], x[j]))
            .map(|&j| d.deltas[j])
            .sum();
    gain - loss
}
