//! Rule strings: `nash | power:p | negpower:p | negexp:p | quad | util | egal`.

use std::fmt;
use std::str::FromStr;

use ctr_core::oracle::Objective;
use ctr_core::{
    solve_ctr, solve_egalitarian, solve_utilitarian, Profile, SolveReport, SolverOptions,
    UtilityFunction, UtilityKind,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    Ctr(UtilityFunction),
    Utilitarian,
    Egalitarian,
}

impl Rule {
    pub fn solve(&self, profile: &Profile, opts: &SolverOptions) -> Result<SolveReport> {
        Ok(match self {
            Rule::Ctr(f) => solve_ctr(profile, f, opts)?,
            Rule::Utilitarian => solve_utilitarian(profile, opts)?,
            Rule::Egalitarian => solve_egalitarian(profile, opts)?,
        })
    }

    /// The quantity the rule maximizes, for oracle comparisons.
    pub fn objective(&self) -> Objective<'_> {
        match self {
            Rule::Ctr(f) => Objective::Ctr(f),
            Rule::Utilitarian => Objective::Welfare,
            Rule::Egalitarian => Objective::MaxMin,
        }
    }

    /// Lipschitz constant of the objective in ℓ1 on the ball of radius
    /// `m · resolution` around an allocation with satisfactions `sats`.
    /// The grid holds a point inside that ball, so `lipschitz · resolution`
    /// bounds how far a correct solver can trail the grid.
    pub fn lipschitz(&self, sats: &[f64], m: usize, resolution: f64) -> f64 {
        match self {
            Rule::Ctr(f) => {
                let radius = m as f64 * resolution;
                sats.iter()
                    .map(|&t| f.derivative((t - radius).max(0.0).max(f.floor())))
                    .sum()
            }
            Rule::Utilitarian => sats.len() as f64,
            Rule::Egalitarian => 1.0,
        }
    }

    pub fn utility(&self) -> Option<&UtilityFunction> {
        match self {
            Rule::Ctr(f) => Some(f),
            _ => None,
        }
    }
}

impl FromStr for Rule {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let param = || -> Result<f64> {
            let a = arg.ok_or_else(|| {
                CliError::Invalid(format!(
                    "rule `{name}` needs a parameter, e.g. `{name}:0.5`"
                ))
            })?;
            a.trim()
                .parse()
                .map_err(|_| CliError::Invalid(format!("bad parameter `{a}` in rule `{s}`")))
        };
        let no_param = |rule: Rule| -> Result<Rule> {
            match arg {
                None => Ok(rule),
                Some(_) => Err(CliError::Invalid(format!(
                    "rule `{name}` takes no parameter"
                ))),
            }
        };
        match name.trim() {
            "nash" | "log" => no_param(Rule::Ctr(UtilityFunction::log())),
            "power" => Ok(Rule::Ctr(UtilityFunction::power(param()?)?)),
            "negpower" => Ok(Rule::Ctr(UtilityFunction::neg_power(param()?)?)),
            "negexp" => Ok(Rule::Ctr(UtilityFunction::neg_exp_power(param()?)?)),
            "quad" => no_param(Rule::Ctr(UtilityFunction::quadratic())),
            "util" => no_param(Rule::Utilitarian),
            "egal" => no_param(Rule::Egalitarian),
            other => Err(CliError::Invalid(format!(
                "unknown rule `{other}`; expected nash, power:p, negpower:p, negexp:p, quad, util or egal"
            ))),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Utilitarian => write!(f, "util"),
            Rule::Egalitarian => write!(f, "egal"),
            Rule::Ctr(u) => match u.kind() {
                UtilityKind::Log => write!(f, "nash"),
                UtilityKind::Power(p) => write!(f, "power:{p}"),
                UtilityKind::NegPower(p) => write!(f, "negpower:{p}"),
                UtilityKind::NegExpPower(p) => write!(f, "negexp:{p}"),
                UtilityKind::Quadratic => write!(f, "quad"),
                UtilityKind::Identity => write!(f, "util"),
            },
        }
    }
}
