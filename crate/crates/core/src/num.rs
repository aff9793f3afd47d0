//! Exact money arithmetic.
//!
//! User-facing values (energy costs, powers, TEC) are rationals. Hot loops
//! work on `i64` amounts scaled by a per-instance factor so that every
//! product `cost * power` lands on the integer grid.

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::{Error, Result};

pub type Rational = num_rational::Ratio<i64>;

/// Sentinel for "no path / undefined" in scaled arithmetic. Kept far from
/// `i64::MAX` so that adding a real edge weight cannot wrap.
pub const INF: i64 = i64::MAX / 4;

pub fn is_finite(v: i64) -> bool {
    v < INF / 2 && v > -INF / 2
}

/// Parses a JSON-friendly rational: an integer, a decimal string like
/// `"2.5"`, or a fraction string like `"5/2"`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let err = |m: &str| Error::Parse {
        location: format!("rational '{s}'"),
        message: m.to_string(),
    };
    if let Some((num, den)) = s.split_once('/') {
        let n: i64 = num.trim().parse().map_err(|_| err("bad numerator"))?;
        let d: i64 = den.trim().parse().map_err(|_| err("bad denominator"))?;
        if d == 0 {
            return Err(err("zero denominator"));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let i: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| err("bad integer part"))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("bad fractional part"));
        }
        if frac.len() > 12 {
            return Err(err("too many decimal places"));
        }
        let f: i64 = frac.parse().map_err(|_| err("bad fractional part"))?;
        let den = 10i64.pow(frac.len() as u32);
        let frac_part = Rational::new(if neg { -f } else { f }, den);
        return Ok(Rational::from_integer(i) + frac_part);
    }
    let n: i64 = s.parse().map_err(|_| err("not a rational"))?;
    Ok(Rational::from_integer(n))
}

/// Renders a rational the way the JSON schema expects: a bare integer when
/// integral, otherwise a `"num/den"` string.
pub fn rational_to_json(r: &Rational) -> serde_json::Value {
    if r.is_integer() {
        serde_json::Value::from(*r.numer())
    } else {
        serde_json::Value::from(format!("{}/{}", r.numer(), r.denom()))
    }
}

pub fn rational_from_json(v: &serde_json::Value) -> Result<Rational> {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Rational::from_integer(i))
            } else {
                // Fall back to the decimal-string path for JSON floats.
                parse_rational(&n.to_string())
            }
        }
        serde_json::Value::String(s) => parse_rational(s),
        other => Err(Error::Parse {
            location: "rational".into(),
            message: format!("expected number or string, got {other}"),
        }),
    }
}

fn checked_lcm(a: i64, b: i64) -> Result<i64> {
    let g = a.gcd(&b);
    (a / g)
        .checked_mul(b)
        .filter(|v| *v > 0)
        .ok_or_else(|| Error::Numeric("denominator lcm overflows i64".into()))
}

/// Per-instance fixed-point context: every `cost * power` product is an
/// integer multiple of `1 / scale`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostScale {
    /// Costs scaled by `denom_c`.
    pub costs: Vec<i64>,
    /// Prefix sums of scaled costs; `cost_prefix[k] = sum of costs[0..k]`.
    pub cost_prefix: Vec<i64>,
    /// Powers scaled by `denom_p`, row-major `[from * n_states + to]`,
    /// `None` where the transition does not exist.
    pub powers: Vec<Option<i64>>,
    /// `denom_c * denom_p`: converts a scaled product back to a rational.
    pub scale: i64,
}

impl CostScale {
    pub fn build(costs: &[Rational], powers: &[Option<Rational>]) -> Result<Self> {
        let mut denom_c = 1i64;
        for c in costs {
            denom_c = checked_lcm(denom_c, *c.denom())?;
        }
        let mut denom_p = 1i64;
        for p in powers.iter().flatten() {
            denom_p = checked_lcm(denom_p, *p.denom())?;
        }
        let scale = denom_c
            .checked_mul(denom_p)
            .ok_or_else(|| Error::Numeric("cost scale overflows i64".into()))?;

        let scale_one = |r: &Rational, denom: i64| -> Result<i64> {
            (r.numer())
                .checked_mul(denom / r.denom())
                .ok_or_else(|| Error::Numeric("scaled value overflows i64".into()))
        };
        let costs_scaled: Vec<i64> = costs
            .iter()
            .map(|c| scale_one(c, denom_c))
            .collect::<Result<_>>()?;
        let powers_scaled: Vec<Option<i64>> = powers
            .iter()
            .map(|p| p.as_ref().map(|p| scale_one(p, denom_p)).transpose())
            .collect::<Result<_>>()?;

        let mut cost_prefix = Vec::with_capacity(costs_scaled.len() + 1);
        let mut acc: i64 = 0;
        cost_prefix.push(0);
        for c in &costs_scaled {
            acc = acc
                .checked_add(*c)
                .ok_or_else(|| Error::Numeric("cost prefix sum overflows i64".into()))?;
            cost_prefix.push(acc);
        }

        // Every path cost is bounded by sum |c_i| * max |P|; keep a wide
        // margin below the INF sentinel so additions cannot wrap.
        let abs_sum: i128 = costs_scaled.iter().map(|c| (*c as i128).abs()).sum();
        let max_p: i128 = powers_scaled
            .iter()
            .flatten()
            .map(|p| (*p as i128).abs())
            .max()
            .unwrap_or(0);
        if abs_sum * max_p >= (INF as i128) / 4 {
            return Err(Error::Numeric(
                "instance magnitudes too large for exact i64 arithmetic".into(),
            ));
        }

        Ok(CostScale {
            costs: costs_scaled,
            cost_prefix,
            powers: powers_scaled,
            scale,
        })
    }

    /// Scaled cost of running transition power `p_idx` over intervals
    /// `[from, to)` (1-based, half-open).
    pub fn span_cost(&self, from: usize, to: usize, power: i64) -> i64 {
        (self.cost_prefix[to - 1] - self.cost_prefix[from - 1]) * power
    }

    pub fn to_rational(&self, scaled: i64) -> Rational {
        Rational::new(scaled, self.scale)
    }
}

pub fn rational_is_zero(r: &Rational) -> bool {
    r.is_zero()
}

pub fn rational_abs(r: &Rational) -> Rational {
    r.abs()
}
