//! Exact maximization of weighted welfare `Σ_i w_i π_i(x)`.
//!
//! The objective is separable: `Σ_j Σ_i w_i min(x^i_j, x_j)`. For each
//! alternative the marginal value of raising `x_j` through level `v` is the
//! weight of agents with `x^i_j > v`, which only falls as `v` rises. Sorting
//! the level pieces of all alternatives by that density and filling the unit
//! budget greedily is therefore optimal.

use alloc::vec::Vec;

use crate::profile::{Allocation, Profile};
use crate::{Error, Result};

struct Piece {
    density: f64,
    alternative: usize,
    level: usize,
    length: f64,
}

/// Returns a maximizer of `Σ_i w_i π_i(x)` over the simplex and its value.
pub fn max_weighted_welfare(profile: &Profile, weights: &[f64]) -> Result<(Allocation, f64)> {
    if weights.len() != profile.n() {
        return Err(Error::DimensionMismatch {
            expected: profile.n(),
            actual: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::ParameterOutOfRange(
            "weights must be nonnegative".into(),
        ));
    }
    let m = profile.m();
    let mut pieces = Vec::new();
    let mut order: Vec<usize> = (0..profile.n()).collect();
    for j in 0..m {
        // agents by descending share of j; the piece between consecutive
        // shares is valued by the weight of everyone above it
        order.sort_by(|&a, &b| profile.row(b)[j].total_cmp(&profile.row(a)[j]));
        let mut above = 0.0;
        let mut levels = Vec::new();
        for (q, &i) in order.iter().enumerate() {
            above += weights[i];
            let top = profile.row(i)[j];
            let next = order.get(q + 1).map_or(0.0, |&a| profile.row(a)[j]);
            if top > next {
                levels.push((above, top - next));
            }
        }
        // bottom-up so equal densities fill the lower level first
        for (level, (density, length)) in levels.into_iter().rev().enumerate() {
            pieces.push(Piece {
                density,
                alternative: j,
                level,
                length,
            });
        }
    }
    pieces.sort_by(|a, b| {
        b.density
            .total_cmp(&a.density)
            .then(a.alternative.cmp(&b.alternative))
            .then(a.level.cmp(&b.level))
    });
    let mut x = alloc::vec![0.0; m];
    let mut remaining = 1.0;
    let mut value = 0.0;
    for piece in &pieces {
        if remaining <= 0.0 {
            break;
        }
        let take = piece.length.min(remaining);
        x[piece.alternative] += take;
        value += take * piece.density;
        remaining -= take;
    }
    // Σ_j max_i x^i_j ≥ 1, so the budget is always exhausted up to rounding
    if remaining > 0.0 {
        let j = pieces.first().map_or(0, |p| p.alternative);
        x[j] += remaining;
    }
    Ok((Allocation::from_raw(x), value))
}
