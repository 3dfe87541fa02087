//! Key generators for the supported max-compatible and min-compatible families.
//!
//! Every family maps a recorded strength and a uniform draw `u` in (0, 1) to a
//! competition key. Within a group, the row whose key is extremal (max, or min for
//! [`Family::ExpMin`]) wins, and it does so with probability proportional to the
//! row's weight `alpha`. How `alpha` is recovered from the recorded strength
//! depends on the family (see [`ModelSpec::strength_to_alpha`]):
//!
//! | family     | recorded strength      | key                          |
//! |------------|------------------------|------------------------------|
//! | `Canonical`| `alpha`                | `u^(1/alpha)`                |
//! | `Gumbel1`  | `c * ln(alpha) + d`    | `s - c * ln(-ln u)`          |
//! | `Frechet2` | `d * alpha^c`          | `|s| * (-ln u)^(-c)`         |
//! | `NegExp`   | `d * alpha^(-c)`       | `-|s| * (-ln u)^c`           |
//! | `ExpMin`   | `alpha`                | `-ln(u) / alpha` (argmin)    |

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Canonical,
    Gumbel1,
    Frechet2,
    NegExp,
    ExpMin,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Canonical,
        Family::Gumbel1,
        Family::Frechet2,
        Family::NegExp,
        Family::ExpMin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Canonical => "canonical",
            Family::Gumbel1 => "gumbel1",
            Family::Frechet2 => "frechet2",
            Family::NegExp => "negexp",
            Family::ExpMin => "expmin",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            Family::ExpMin => Orientation::Min,
            _ => Orientation::Max,
        }
    }

    /// Offset used when none is given: the sign convention under which the
    /// multiplicative families accept their natural strengths.
    pub fn default_offset(self) -> f64 {
        match self {
            Family::Frechet2 => 1.0,
            Family::NegExp => -1.0,
            _ => 0.0,
        }
    }

    fn is_multiplicative(self) -> bool {
        matches!(self, Family::Frechet2 | Family::NegExp)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "canonical" => Ok(Family::Canonical),
            "gumbel1" | "gumbel" => Ok(Family::Gumbel1),
            "frechet2" | "frechet" => Ok(Family::Frechet2),
            "negexp" => Ok(Family::NegExp),
            "expmin" | "exponential" => Ok(Family::ExpMin),
            _ => Err(Error::InvalidArgument(format!(
                "unknown model '{s}' (expected canonical, gumbel1, frechet2, negexp or expmin)"
            ))),
        }
    }
}

/// Which extremum of the keys selects the winner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Max,
    Min,
}

/// A family together with its scale `c` and offset `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSpec {
    family: Family,
    scale_c: f64,
    offset_d: f64,
}

impl ModelSpec {
    pub fn new(family: Family, scale_c: f64, offset_d: f64) -> Result<Self> {
        if family != Family::ExpMin && !(scale_c.is_finite() && scale_c > 0.0) {
            return Err(domain(family, "scale c", scale_c, "must be finite and > 0"));
        }
        if !offset_d.is_finite() {
            return Err(domain(family, "offset d", offset_d, "must be finite"));
        }
        if family.is_multiplicative() && offset_d == 0.0 {
            return Err(domain(
                family,
                "offset d",
                offset_d,
                "must be nonzero for a multiplicative family",
            ));
        }
        Ok(ModelSpec {
            family,
            scale_c,
            offset_d,
        })
    }

    /// `c = 1` and the family's default offset.
    pub fn standard(family: Family) -> Self {
        ModelSpec {
            family,
            scale_c: 1.0,
            offset_d: family.default_offset(),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn scale_c(&self) -> f64 {
        self.scale_c
    }

    pub fn offset_d(&self) -> f64 {
        self.offset_d
    }

    pub fn orientation(&self) -> Orientation {
        self.family.orientation()
    }

    /// Competition key of a row with this strength under uniform draw `u`.
    pub fn key(&self, strength: f64, u: f64) -> Result<Key> {
        match self.family {
            Family::Canonical => key_canonical(strength, u),
            Family::Gumbel1 => key_gumbel1(strength, self.scale_c, u),
            Family::Frechet2 => key_frechet2(strength, self.scale_c, u),
            Family::NegExp => key_negexp(strength, self.scale_c, u),
            Family::ExpMin => key_expmin(strength, u),
        }
    }

    /// Checks that a strength is acceptable without drawing a key.
    pub fn check_strength(&self, strength: f64) -> Result<()> {
        self.strength_to_alpha(strength).map(|_| ())
    }

    /// Recovers the weight `alpha` from a recorded strength.
    pub fn strength_to_alpha(&self, strength: f64) -> Result<f64> {
        let family = self.family;
        if !strength.is_finite() {
            return Err(domain(family, "strength", strength, "must be finite"));
        }
        let (c, d) = (self.scale_c, self.offset_d);
        let alpha = match family {
            Family::Canonical | Family::ExpMin => {
                if strength <= 0.0 {
                    return Err(domain(family, "strength", strength, "weight must be > 0"));
                }
                strength
            }
            Family::Gumbel1 => ((strength - d) / c).exp(),
            Family::Frechet2 | Family::NegExp => {
                if strength == 0.0 {
                    return Err(Error::DegenerateWeight { family });
                }
                if strength.signum() != d.signum() {
                    return Err(domain(
                        family,
                        "strength",
                        strength,
                        "sign must match the offset d",
                    ));
                }
                let exponent = if family == Family::Frechet2 { 1.0 / c } else { -1.0 / c };
                (strength / d).powf(exponent)
            }
        };
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(domain(
                family,
                "strength",
                strength,
                "implied weight is not a positive finite number",
            ));
        }
        Ok(alpha)
    }

    /// The strength a row must record to carry weight `alpha`.
    pub fn alpha_to_strength(&self, alpha: f64) -> Result<f64> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(domain(self.family, "alpha", alpha, "must be finite and > 0"));
        }
        let (c, d) = (self.scale_c, self.offset_d);
        Ok(match self.family {
            Family::Canonical | Family::ExpMin => alpha,
            Family::Gumbel1 => c * alpha.ln() + d,
            Family::Frechet2 => d * alpha.powf(c),
            Family::NegExp => d * alpha.powf(-c),
        })
    }
}

/// A competition key.
///
/// `value` is the family formula itself. Comparisons use `rank`, a strictly
/// increasing transform of `value`; the two coincide except for canonical keys,
/// whose rank is `ln(u) / alpha` so that large weights do not collapse every
/// key onto 1.0.
#[derive(Debug, Clone, Copy)]
pub struct Key {
    value: f64,
    rank: f64,
}

impl Key {
    /// A key whose rank is its value. Panics on NaN.
    pub fn new(value: f64) -> Self {
        assert!(!value.is_nan(), "key must not be NaN");
        Key { value, rank: value }
    }

    fn canonical(log_key: f64) -> Self {
        Key {
            value: log_key.exp(),
            rank: log_key,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn rank(&self) -> f64 {
        self.rank
    }
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank.total_cmp(&other.rank)
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.value, f)
    }
}

fn domain(family: Family, what: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Domain {
        family,
        what,
        value,
        reason,
    }
}

fn check_uniform(family: Family, u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(domain(family, "uniform u", u, "must lie in the open interval (0, 1)"))
    }
}

fn finite_key(family: Family, value: f64) -> Result<Key> {
    if value.is_finite() {
        Ok(Key::new(value))
    } else {
        Err(domain(family, "key", value, "overflows f64"))
    }
}

pub fn key_canonical(alpha: f64, u: f64) -> Result<Key> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(domain(Family::Canonical, "alpha", alpha, "must be finite and > 0"));
    }
    check_uniform(Family::Canonical, u)?;
    Ok(Key::canonical(u.ln() / alpha))
}

pub fn key_gumbel1(strength: f64, c: f64, u: f64) -> Result<Key> {
    let family = Family::Gumbel1;
    if !strength.is_finite() {
        return Err(domain(family, "strength", strength, "must be finite"));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(domain(family, "scale c", c, "must be finite and > 0"));
    }
    check_uniform(family, u)?;
    finite_key(family, strength - c * (-u.ln()).ln())
}

pub fn key_frechet2(strength: f64, c: f64, u: f64) -> Result<Key> {
    let family = Family::Frechet2;
    check_multiplicative(family, strength, c)?;
    check_uniform(family, u)?;
    finite_key(family, strength.abs() * (-u.ln()).powf(-c))
}

pub fn key_negexp(strength: f64, c: f64, u: f64) -> Result<Key> {
    let family = Family::NegExp;
    check_multiplicative(family, strength, c)?;
    check_uniform(family, u)?;
    finite_key(family, -strength.abs() * (-u.ln()).powf(c))
}

/// Exponential race key; the winner is the argmin.
pub fn key_expmin(alpha: f64, u: f64) -> Result<Key> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(domain(Family::ExpMin, "alpha", alpha, "must be finite and > 0"));
    }
    check_uniform(Family::ExpMin, u)?;
    finite_key(Family::ExpMin, -u.ln() / alpha)
}

fn check_multiplicative(family: Family, strength: f64, c: f64) -> Result<()> {
    if !strength.is_finite() {
        return Err(domain(family, "strength", strength, "must be finite"));
    }
    if strength == 0.0 {
        return Err(Error::DegenerateWeight { family });
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(domain(family, "scale c", c, "must be finite and > 0"));
    }
    Ok(())
}
