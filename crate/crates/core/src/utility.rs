//! The concave utility family `f` and its inequality aversion
//! `IAV_f(t) = -t f''(t) / f'(t)`.

use alloc::format;

use crate::math::{exp, ln, powf};
use crate::{Error, Result};

/// Default evaluation floor for kinds that are singular at zero.
pub const DEFAULT_FLOOR: f64 = 1e-9;

/// Largest accepted evaluation floor.
pub const MAX_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum UtilityKind {
    /// `ln t` (Nash product rule).
    Log,
    /// `t^p`, `0 < p < 1`.
    Power(f64),
    /// `-t^{-p}`, `p > 0`.
    NegPower(f64),
    /// `-exp(t^{-p})`, `p > 0`.
    NegExpPower(f64),
    /// `t (2 - t)`.
    Quadratic,
    /// `t`; only for the utilitarian baseline, not a CTR.
    Identity,
}

/// Bounds `lower ≤ IAV_f(t) ≤ upper` holding on all of `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IavBound {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl IavBound {
    pub fn exact(lambda: f64) -> Self {
        Self {
            lower: Some(lambda),
            upper: Some(lambda),
        }
    }
}

/// A member of the utility family, evaluated at `max(t, floor)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct UtilityFunction {
    kind: UtilityKind,
    floor: f64,
}

impl UtilityFunction {
    /// Validates the kind's parameter and the floor `∈ (0, 1e-3]`.
    pub fn new(kind: UtilityKind, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor <= MAX_FLOOR) {
            return Err(Error::ParameterOutOfRange(format!(
                "floor {floor} not in (0, {MAX_FLOOR}]"
            )));
        }
        let bad = |what: &str, p: f64| {
            Err(Error::ParameterOutOfRange(format!(
                "{what} exponent {p} out of range"
            )))
        };
        match kind {
            UtilityKind::Power(p) if !(p > 0.0 && p < 1.0) => return bad("power", p),
            UtilityKind::NegPower(p) if !(p > 0.0 && p.is_finite()) => {
                return bad("negative power", p)
            }
            UtilityKind::NegExpPower(p) if !(p > 0.0 && p.is_finite()) => {
                return bad("negative exp-power", p)
            }
            _ => {}
        }
        Ok(Self { kind, floor })
    }

    pub fn log() -> Self {
        Self {
            kind: UtilityKind::Log,
            floor: DEFAULT_FLOOR,
        }
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::new(UtilityKind::Power(p), DEFAULT_FLOOR)
    }

    pub fn neg_power(p: f64) -> Result<Self> {
        Self::new(UtilityKind::NegPower(p), DEFAULT_FLOOR)
    }

    pub fn neg_exp_power(p: f64) -> Result<Self> {
        Self::new(UtilityKind::NegExpPower(p), DEFAULT_FLOOR)
    }

    pub fn quadratic() -> Self {
        Self {
            kind: UtilityKind::Quadratic,
            floor: DEFAULT_FLOOR,
        }
    }

    pub fn identity() -> Self {
        Self {
            kind: UtilityKind::Identity,
            floor: DEFAULT_FLOOR,
        }
    }

    /// The constant-IAV member with `IAV ≡ lambda`: `t^{1-λ}` below one,
    /// `ln` at one and `-t^{-(λ-1)}` above.
    pub fn with_constant_iav(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::ParameterOutOfRange(format!(
                "inequality aversion {lambda} must be positive"
            )));
        }
        if lambda < 1.0 {
            Self::power(1.0 - lambda)
        } else if lambda == 1.0 {
            Ok(Self::log())
        } else {
            Self::neg_power(lambda - 1.0)
        }
    }

    pub fn kind(&self) -> UtilityKind {
        self.kind
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn is_strictly_concave(&self) -> bool {
        self.kind != UtilityKind::Identity
    }

    #[inline]
    fn clamp(&self, t: f64) -> f64 {
        t.max(self.floor)
    }

    /// `f(t)`.
    pub fn value(&self, t: f64) -> f64 {
        let t = self.clamp(t);
        match self.kind {
            UtilityKind::Log => ln(t),
            UtilityKind::Power(p) => powf(t, p),
            UtilityKind::NegPower(p) => -powf(t, -p),
            UtilityKind::NegExpPower(p) => -exp(powf(t, -p)),
            UtilityKind::Quadratic => t * (2.0 - t),
            UtilityKind::Identity => t,
        }
    }

    /// `f'(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        let t = self.clamp(t);
        match self.kind {
            UtilityKind::Log => 1.0 / t,
            UtilityKind::Power(p) => p * powf(t, p - 1.0),
            UtilityKind::NegPower(p) => p * powf(t, -p - 1.0),
            UtilityKind::NegExpPower(_) => exp(self.ln_derivative(t)),
            UtilityKind::Quadratic => 2.0 - 2.0 * t,
            UtilityKind::Identity => 1.0,
        }
    }

    /// `f''(t)`.
    pub fn second_derivative(&self, t: f64) -> f64 {
        let t = self.clamp(t);
        match self.kind {
            UtilityKind::Log => -1.0 / (t * t),
            UtilityKind::Power(p) => p * (p - 1.0) * powf(t, p - 2.0),
            UtilityKind::NegPower(p) => -p * (p + 1.0) * powf(t, -p - 2.0),
            UtilityKind::NegExpPower(_) => self.derivative(t) * self.ln_derivative_slope(t),
            UtilityKind::Quadratic => -2.0,
            UtilityKind::Identity => 0.0,
        }
    }

    /// `ln f'(t)`; finite wherever `f'(t) > 0`, so steep members stay
    /// representable where `f'` itself would overflow.
    pub fn ln_derivative(&self, t: f64) -> f64 {
        let t = self.clamp(t);
        match self.kind {
            UtilityKind::Log => -ln(t),
            UtilityKind::Power(p) => ln(p) + (p - 1.0) * ln(t),
            UtilityKind::NegPower(p) => ln(p) - (p + 1.0) * ln(t),
            UtilityKind::NegExpPower(p) => ln(p) - (p + 1.0) * ln(t) + powf(t, -p),
            UtilityKind::Quadratic => ln(2.0 - 2.0 * t),
            UtilityKind::Identity => 0.0,
        }
    }

    /// `d/dt ln f'(t) = f''(t) / f'(t)`.
    pub fn ln_derivative_slope(&self, t: f64) -> f64 {
        let t = self.clamp(t);
        match self.kind {
            UtilityKind::Log => -1.0 / t,
            UtilityKind::Power(p) => (p - 1.0) / t,
            UtilityKind::NegPower(p) => -(p + 1.0) / t,
            UtilityKind::NegExpPower(p) => -(p + 1.0) / t - p * powf(t, -p - 1.0),
            UtilityKind::Quadratic => -1.0 / (1.0 - t),
            UtilityKind::Identity => 0.0,
        }
    }

    /// Inequality aversion `-t f''(t) / f'(t)` at `t ∈ [floor, 1]`.
    pub fn iav(&self, t: f64) -> Result<f64> {
        if !(t >= self.floor && t <= 1.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "IAV argument {t} not in [{}, 1]",
                self.floor
            )));
        }
        let d1 = self.derivative(t);
        if !(d1 > 0.0) {
            return Err(Error::NonPositiveDerivative { t });
        }
        Ok(-t * self.second_derivative(t) / d1)
    }

    /// Certified IAV bounds on `(0, 1]`. `t(2-t)` has none: its IAV is
    /// `t/(1-t)`, unbounded as `t → 1`. The identity has IAV `0`.
    pub fn iav_bound(&self) -> IavBound {
        match self.kind {
            UtilityKind::Log => IavBound::exact(1.0),
            UtilityKind::Power(p) => IavBound::exact(1.0 - p),
            UtilityKind::NegPower(p) => IavBound::exact(1.0 + p),
            UtilityKind::NegExpPower(p) => IavBound {
                lower: Some(1.0 + p),
                upper: None,
            },
            UtilityKind::Quadratic => IavBound::default(),
            UtilityKind::Identity => IavBound {
                lower: Some(0.0),
                upper: Some(0.0),
            },
        }
    }

    /// `max_{t ∈ [floor, 1]} f'(t) = f'(floor)` by concavity.
    pub fn max_derivative(&self) -> f64 {
        self.derivative(self.floor)
    }
}
