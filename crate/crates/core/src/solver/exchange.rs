//! Pairwise exchange ascent for `max_x Σ_i g(π_i(x))` over the simplex.
//!
//! Each step takes the pair violating the marginal-rate condition the most,
//! `j = argmax mc↑_j`, `k = argmin mc↓_k`, and moves budget from `k` to `j`
//! with an exact line search. Along `e_j - e_k` the objective is concave and
//! smooth between breakpoints `t = x^i_j - x_j` (agent `i` stops gaining) and
//! `t = x_k - x^i_k` (agent `i` starts losing), so the search walks the
//! sorted breakpoints and solves for the root of the one-dimensional
//! derivative inside the segment where it changes sign. Steps that end on a
//! breakpoint snap the coordinate to the agent's share exactly, so kinks are
//! hit without rounding.
//!
//! All derivative arithmetic runs on `ln g'(π)`; only differences of
//! log-weights are exponentiated.

use alloc::vec::Vec;

use crate::math::exp;
use crate::profile::{overlap, Profile};
use crate::support::{gains_on, loses_on};
use crate::utility::UtilityFunction;

/// The part of the objective the engine needs: `ln g'` and its slope.
pub(crate) trait Marginal {
    fn ln_marginal(&self, t: f64) -> f64;
    fn ln_marginal_slope(&self, t: f64) -> f64;
}

impl Marginal for UtilityFunction {
    #[inline]
    fn ln_marginal(&self, t: f64) -> f64 {
        self.ln_derivative(t)
    }

    #[inline]
    fn ln_marginal_slope(&self, t: f64) -> f64 {
        self.ln_derivative_slope(t)
    }
}

/// `g(t) = -exp(-β t)`: `Σ_i g(π_i)` is a monotone transform of the
/// log-sum-exp soft minimum of the satisfactions.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SoftMin {
    pub beta: f64,
}

impl Marginal for SoftMin {
    #[inline]
    fn ln_marginal(&self, t: f64) -> f64 {
        -self.beta * t
    }

    #[inline]
    fn ln_marginal_slope(&self, _t: f64) -> f64 {
        -self.beta
    }
}

/// Marginal-rate certificate at the current iterate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Certificate {
    /// `max_{x_j<1} mc↑_j - min_{x_k>0} mc↓_k`.
    pub raw_gap: f64,
    /// The same difference divided by the larger of the two sums.
    pub relative_gap: f64,
    pub up: usize,
    pub down: usize,
}

impl Certificate {
    pub fn passes(&self, tol: f64, relative_floor: f64) -> bool {
        (tol > 0.0 && self.raw_gap <= tol) || self.relative_gap <= relative_floor
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum EventKind {
    GainEnds,
    LossStarts,
}

#[derive(Clone, Copy)]
struct Event {
    t: f64,
    agent: usize,
    kind: EventKind,
}

/// Moving agent in the current line-search segment.
#[derive(Clone, Copy)]
struct Mover {
    agent: usize,
    rate: f64,
    pi: f64,
}

pub(crate) struct Exchange<'a, M> {
    profile: &'a Profile,
    shape: &'a M,
    x: Vec<f64>,
    pi: Vec<f64>,
    weights: Vec<f64>,
    up: Vec<f64>,
    down: Vec<f64>,
    events: Vec<Event>,
    steps_since_refresh: usize,
}

const REFRESH_EVERY: usize = 512;

impl<'a, M: Marginal> Exchange<'a, M> {
    pub fn new(profile: &'a Profile, shape: &'a M, start: Vec<f64>) -> Self {
        let m = profile.m();
        let mut engine = Self {
            profile,
            shape,
            x: start,
            pi: Vec::new(),
            weights: alloc::vec![0.0; profile.n()],
            up: alloc::vec![0.0; m],
            down: alloc::vec![0.0; m],
            events: Vec::new(),
            steps_since_refresh: 0,
        };
        engine.refresh();
        engine
    }

    #[cfg(test)]
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn into_x(self) -> Vec<f64> {
        self.x
    }

    fn refresh(&mut self) {
        self.pi = self.profile.rows().map(|r| overlap(r, &self.x)).collect();
        self.steps_since_refresh = 0;
    }

    /// Marginal contributions scaled by `exp(-max_i ln g'(π_i))`, and that
    /// log-scale.
    fn scaled_contributions(&mut self) -> f64 {
        let mut scale = f64::NEG_INFINITY;
        for (w, &p) in self.weights.iter_mut().zip(&self.pi) {
            *w = self.shape.ln_marginal(p);
            scale = scale.max(*w);
        }
        if !scale.is_finite() {
            scale = 0.0;
        }
        for w in self.weights.iter_mut() {
            *w = exp(*w - scale);
        }
        self.up.iter_mut().for_each(|v| *v = 0.0);
        self.down.iter_mut().for_each(|v| *v = 0.0);
        for (row, &w) in self.profile.rows().zip(&self.weights) {
            for (j, (&ideal, &share)) in row.iter().zip(&self.x).enumerate() {
                if gains_on(ideal, share) {
                    self.up[j] += w;
                }
                if loses_on(ideal, share) {
                    self.down[j] += w;
                }
            }
        }
        scale
    }

    pub fn certificate(&mut self) -> Certificate {
        let scale = self.scaled_contributions();
        let mut up = 0;
        let mut best_up = f64::NEG_INFINITY;
        let mut down = 0;
        let mut best_down = f64::INFINITY;
        for (j, &xj) in self.x.iter().enumerate() {
            if xj < 1.0 && self.up[j] > best_up {
                best_up = self.up[j];
                up = j;
            }
            if xj > 0.0 && self.down[j] < best_down {
                best_down = self.down[j];
                down = j;
            }
        }
        let diff = best_up - best_down;
        let denom = best_up.max(best_down);
        let relative_gap = if denom > 0.0 { diff / denom } else { 0.0 };
        Certificate {
            raw_gap: diff * exp(scale),
            relative_gap,
            up,
            down,
        }
    }

    /// Sign-preserving evaluation of the line derivative
    /// `Σ_{rate>0} g'(π) - Σ_{rate<0} g'(π)` at offset `dt` into the segment,
    /// as `ln Σ_gain - ln Σ_lose` together with its `t`-derivative.
    fn directional(&self, movers: &[Mover], dt: f64) -> (f64, f64) {
        let mut hi = f64::NEG_INFINITY;
        for mv in movers {
            hi = hi.max(self.shape.ln_marginal(mv.pi + mv.rate * dt));
        }
        if hi == f64::NEG_INFINITY {
            return (0.0, 0.0);
        }
        let (mut gain, mut lose, mut dgain, mut dlose) = (0.0, 0.0, 0.0, 0.0);
        for mv in movers {
            let p = mv.pi + mv.rate * dt;
            let w = exp(self.shape.ln_marginal(p) - hi);
            let slope = self.shape.ln_marginal_slope(p);
            if mv.rate > 0.0 {
                gain += w;
                dgain += w * slope;
            } else {
                lose += w;
                dlose += w * slope;
            }
        }
        match (gain > 0.0, lose > 0.0) {
            (false, false) => (0.0, 0.0),
            (true, false) => (f64::INFINITY, 0.0),
            (false, true) => (f64::NEG_INFINITY, 0.0),
            (true, true) => {
                let value = crate::math::ln(gain) - crate::math::ln(lose);
                (value, dgain / gain + dlose / lose)
            }
        }
    }

    /// Finds `dt ∈ (0, len)` with a vanishing line derivative; the value is
    /// positive at `0` and negative at `len`.
    fn segment_root(&self, movers: &[Mover], len: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, len);
        let mut dt = 0.5 * len;
        for _ in 0..200 {
            let (h, dh) = self.directional(movers, dt);
            if h == 0.0 {
                return dt;
            }
            if h > 0.0 {
                lo = dt;
            } else {
                hi = dt;
            }
            let newton = if dh < 0.0 { dt - h / dh } else { f64::NAN };
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if next == dt || hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
            dt = next;
        }
        // the bracket's left end keeps the derivative nonnegative
        if lo > 0.0 {
            lo
        } else {
            dt
        }
    }

    /// One exact line search moving budget from `down` to `up`. Returns the
    /// amount moved.
    pub fn step(&mut self, up: usize, down: usize) -> f64 {
        let (j, k) = (up, down);
        let xj = self.x[j];
        let xk = self.x[k];
        let t_max = xk;
        self.events.clear();
        let mut movers: Vec<Mover> = Vec::new();
        let mut rates = alloc::vec![0.0f64; self.profile.n()];
        for (i, row) in self.profile.rows().enumerate() {
            let gain = gains_on(row[j], xj);
            let lose = loses_on(row[k], xk);
            if gain {
                self.events.push(Event {
                    t: row[j] - xj,
                    agent: i,
                    kind: EventKind::GainEnds,
                });
            }
            if !lose && row[k] > 0.0 {
                self.events.push(Event {
                    t: xk - row[k],
                    agent: i,
                    kind: EventKind::LossStarts,
                });
            }
            rates[i] = f64::from(u8::from(gain)) - f64::from(u8::from(lose));
        }
        self.events
            .sort_unstable_by(|a, b| a.t.total_cmp(&b.t).then(a.agent.cmp(&b.agent)));

        // satisfaction of every agent at the segment start
        let mut pi_at = self.pi.clone();
        let mut t0 = 0.0;
        let mut next_event = 0;
        let mut event_at_t0: Option<Event> = None;
        let (moved, stop_event) = loop {
            movers.clear();
            movers.extend(rates.iter().enumerate().filter(|(_, r)| **r != 0.0).map(
                |(i, &rate)| Mover {
                    agent: i,
                    rate,
                    pi: pi_at[i],
                },
            ));
            let (h0, _) = self.directional(&movers, 0.0);
            if h0 <= 0.0 {
                break (t0, event_at_t0);
            }
            let t1 = self
                .events
                .get(next_event)
                .map_or(t_max, |e| e.t.min(t_max));
            let len = t1 - t0;
            if len > 0.0 {
                let (h1, _) = self.directional(&movers, len);
                if h1 < 0.0 {
                    break (t0 + self.segment_root(&movers, len), None);
                }
                for mv in &movers {
                    pi_at[mv.agent] = mv.pi + mv.rate * len;
                }
            }
            t0 = t1;
            if t0 >= t_max {
                break (t_max, None);
            }
            event_at_t0 = None;
            while let Some(e) = self.events.get(next_event) {
                if e.t > t0 {
                    break;
                }
                // either event lowers the net rate by one
                rates[e.agent] -= 1.0;
                event_at_t0 = Some(*e);
                next_event += 1;
            }
        };

        if moved <= 0.0 {
            return 0.0;
        }
        // snap the coordinates the step stopped on
        let (new_j, new_k) = if moved >= t_max {
            (xj + xk, 0.0)
        } else {
            match stop_event {
                Some(Event {
                    agent,
                    kind: EventKind::GainEnds,
                    ..
                }) => {
                    let target = self.profile.row(agent)[j];
                    (target, (xk - (target - xj)).max(0.0))
                }
                Some(Event {
                    agent,
                    kind: EventKind::LossStarts,
                    ..
                }) => {
                    let target = self.profile.row(agent)[k];
                    (xj + (xk - target), target)
                }
                None => (xj + moved, (xk - moved).max(0.0)),
            }
        };
        self.x[j] = new_j;
        self.x[k] = new_k;
        self.steps_since_refresh += 1;
        if self.steps_since_refresh >= REFRESH_EVERY {
            self.refresh();
        } else {
            for (p, row) in self.pi.iter_mut().zip(self.profile.rows()) {
                *p += (row[j].min(new_j) - row[j].min(xj)) + (row[k].min(new_k) - row[k].min(xk));
            }
        }
        moved
    }
}
