//! Exact rationals and big integers: serialization as decimal strings and a few
//! conversions used by diagnostics.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Wire form of an exact rational: `{"num": "...", "den": "..."}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatRepr {
    pub num: String,
    pub den: String,
}

impl From<&BigRational> for RatRepr {
    fn from(r: &BigRational) -> Self {
        RatRepr {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
        }
    }
}

impl TryFrom<&RatRepr> for BigRational {
    type Error = String;

    fn try_from(r: &RatRepr) -> Result<Self, String> {
        let num: BigInt = r.num.parse().map_err(|_| format!("bad numerator {:?}", r.num))?;
        let den: BigInt = r.den.parse().map_err(|_| format!("bad denominator {:?}", r.den))?;
        if den.is_zero() {
            return Err("zero denominator".into());
        }
        Ok(BigRational::new(num, den))
    }
}

pub mod ratio_serde {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        RatRepr::from(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let repr = RatRepr::deserialize(d)?;
        BigRational::try_from(&repr).map_err(serde::de::Error::custom)
    }
}

pub mod ratio_vec_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        let reprs: Vec<RatRepr> = v.iter().map(RatRepr::from).collect();
        reprs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let reprs = Vec::<RatRepr>::deserialize(d)?;
        reprs
            .iter()
            .map(|r| BigRational::try_from(r).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Big unsigned integers as decimal strings.
pub mod big_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub mod big_vec_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter()
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub fn ratio_from_big(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

pub fn big_to_ratio(v: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(v.clone()))
}

/// Natural logarithm of a positive big integer, accurate to f64 precision.
pub fn ln_big(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of a positive rational.
pub fn ln_ratio(r: &BigRational) -> f64 {
    assert!(r.is_positive(), "ln of non-positive rational");
    ln_big(r.numer()) - ln_big(r.denom())
}

/// Approximate a rational as f64 (exact magnitude handling for huge operands).
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    sign * ln_ratio(&r.abs()).exp()
}

/// Least integer `c` with `c * den >= num`.
pub fn ceil_div(num: &BigUint, den: &BigUint) -> BigUint {
    if num.is_zero() {
        return BigUint::zero();
    }
    (num - BigUint::one()) / den + BigUint::one()
}
