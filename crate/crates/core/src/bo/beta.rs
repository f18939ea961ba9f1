use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Exploration weight `β_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaSchedule {
    /// `a ln(b t)`.
    Log {
        a: f64,
        b: f64,
    },
    Constant(f64),
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule::Log { a: 0.5, b: 2.0 }
    }
}

impl BetaSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            // b ≥ 1 keeps ln(b t) ≥ 0 for every t ≥ 1.
            BetaSchedule::Log { a, b } if a >= 0.0 && a.is_finite() && b >= 1.0 && b.is_finite() => Ok(()),
            BetaSchedule::Constant(c) if c >= 0.0 && c.is_finite() => Ok(()),
            _ => Err(Error::invalid(format!(
                "beta schedule {self} can be negative or non-finite"
            ))),
        }
    }

    pub fn value(&self, t: usize) -> f64 {
        match *self {
            BetaSchedule::Log { a, b } => a * (b * t as f64).ln(),
            BetaSchedule::Constant(c) => c,
        }
    }
}

impl fmt::Display for BetaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaSchedule::Log { a, b } => write!(f, "{a}*log({b}*t)"),
            BetaSchedule::Constant(c) => write!(f, "{c}"),
        }
    }
}

fn number(s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::invalid(format!("'{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::invalid(format!("'{s}' is not finite")));
    }
    Ok(v)
}

/// Accepts a constant, or `[a*]log([b][*]t)` with `log` the natural
/// logarithm. Whitespace is ignored.
impl FromStr for BetaSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let Some(log_at) = compact.find("log(") else {
            let b = BetaSchedule::Constant(number(&compact)?);
            b.validate()?;
            return Ok(b);
        };
        let a = match &compact[..log_at] {
            "" => 1.0,
            prefix => number(
                prefix
                    .strip_suffix('*')
                    .ok_or_else(|| Error::invalid(format!("expected '*' between the factor and log in '{s}'")))?,
            )?,
        };
        let inner = compact[log_at + 4..]
            .strip_suffix(')')
            .ok_or_else(|| Error::invalid(format!("unclosed parenthesis in '{s}'")))?;
        let coef = inner
            .strip_suffix('t')
            .ok_or_else(|| Error::invalid(format!("the log argument must end in t in '{s}'")))?;
        let coef = coef.strip_suffix('*').unwrap_or(coef);
        let b = if coef.is_empty() { 1.0 } else { number(coef)? };
        let out = BetaSchedule::Log { a, b };
        out.validate()?;
        Ok(out)
    }
}
