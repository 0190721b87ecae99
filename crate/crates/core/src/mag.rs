//! Certified magnitudes for integers far beyond what can be materialized:
//! closed intervals of binary floating-point numbers with a 64-bit exponent,
//! every operation rounded outward.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

/// `m · 2^e` with `m` in `[1, 2)`, or zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wide {
    m: f64,
    e: i64,
}

/// Relative slack applied to results of `powf`, `exp2` and `ln`.
const TRANSCENDENTAL_SLACK: f64 = 1.0 / (1u64 << 48) as f64;

impl Wide {
    pub const ZERO: Wide = Wide { m: 0.0, e: 0 };
    pub const ONE: Wide = Wide { m: 1.0, e: 0 };

    fn norm(m: f64, e: i64) -> Wide {
        if m == 0.0 {
            return Wide::ZERO;
        }
        assert!(m.is_finite() && m > 0.0, "wide magnitude must be finite and non-negative");
        let bits = m.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        if raw_exp == 0 {
            // subnormal: scale into the normal range first
            return Wide::norm(m * 2f64.powi(64), e - 64);
        }
        let k = raw_exp - 1023;
        let mant = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1023u64 << 52));
        Wide { m: mant, e: e + k }
    }

    pub fn from_f64(x: f64) -> Wide {
        Wide::norm(x, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.m == 0.0
    }

    pub fn mantissa(&self) -> f64 {
        self.m
    }

    pub fn exponent(&self) -> i64 {
        self.e
    }

    /// `log2` of the value (approximate).
    pub fn log2(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.e as f64 + self.m.log2()
        }
    }

    /// `(d, s)` with value `d · 2^s`, `d` odd (or zero).
    pub fn to_dyadic(&self) -> (u64, i64) {
        if self.is_zero() {
            return (0, 0);
        }
        let d = (self.m * (1u64 << 52) as f64) as u64;
        let tz = d.trailing_zeros() as i64;
        (d >> tz, self.e - 52 + tz)
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else if self.e > 1023 {
            f64::INFINITY
        } else if self.e < -1074 {
            0.0
        } else {
            self.m * 2f64.powi(self.e as i32)
        }
    }

    fn up(self) -> Wide {
        if self.is_zero() {
            return Wide::norm(f64::from_bits(1), -0);
        }
        Wide::norm(self.m.next_up(), self.e)
    }

    fn down(self) -> Wide {
        if self.is_zero() {
            return self;
        }
        let d = self.m.next_down();
        Wide::norm(d, self.e)
    }

    fn scaled(self, f: f64) -> Wide {
        Wide::norm(self.m * f, self.e)
    }

    /// Nearest-rounded sum and whether it is exact.
    fn add_near(a: Wide, b: Wide) -> (Wide, bool) {
        if a.is_zero() {
            return (b, true);
        }
        if b.is_zero() {
            return (a, true);
        }
        let (hi, lo) = if a.e >= b.e { (a, b) } else { (b, a) };
        let d = lo.e - hi.e;
        if d < -1000 {
            return (hi, false);
        }
        let small = lo.m * 2f64.powi(d as i32);
        let s = hi.m + small;
        // two-sum error term
        let bb = s - hi.m;
        let err = (hi.m - (s - bb)) + (small - bb);
        (Wide::norm(s, hi.e), err == 0.0)
    }

    /// Nearest-rounded difference `a - b` (clamped at zero) and exactness.
    fn sub_near(a: Wide, b: Wide) -> (Wide, bool) {
        if b.is_zero() {
            return (a, true);
        }
        if a <= b {
            return (Wide::ZERO, a == b);
        }
        let d = b.e - a.e;
        if d < -1000 {
            return (a, false);
        }
        let small = b.m * 2f64.powi(d as i32);
        let r = a.m - small;
        let bb = r - a.m;
        let err = (a.m - (r - bb)) + (-small - bb);
        if r <= 0.0 {
            (Wide::ZERO, false)
        } else {
            (Wide::norm(r, a.e), err == 0.0)
        }
    }

    fn mul_near(a: Wide, b: Wide) -> (Wide, bool) {
        if a.is_zero() || b.is_zero() {
            return (Wide::ZERO, true);
        }
        let p = a.m * b.m;
        let exact = a.m.mul_add(b.m, -p) == 0.0;
        (Wide::norm(p, a.e + b.e), exact)
    }

    fn div_near(a: Wide, b: Wide) -> (Wide, bool) {
        assert!(!b.is_zero(), "division by zero magnitude");
        if a.is_zero() {
            return (Wide::ZERO, true);
        }
        let q = a.m / b.m;
        let exact = q.mul_add(b.m, -a.m) == 0.0;
        (Wide::norm(q, a.e - b.e), exact)
    }

    fn rounded_down((w, exact): (Wide, bool)) -> Wide {
        if exact {
            w
        } else {
            w.down()
        }
    }

    fn rounded_up((w, exact): (Wide, bool)) -> Wide {
        if exact {
            w
        } else {
            w.up()
        }
    }

    /// `self^(p/q)` to f64 accuracy (not yet widened).
    fn pow_ratio_near(self, p: u64, q: u64) -> Wide {
        if self.is_zero() {
            return Wide::ZERO;
        }
        let num = self.e as i128 * p as i128;
        let k = num.div_euclid(q as i128);
        let frac = num.rem_euclid(q as i128) as f64 / q as f64;
        let mant = self.m.powf(p as f64 / q as f64) * frac.exp2();
        Wide::norm(mant, k as i64)
    }
}

impl PartialOrd for Wide {
    fn partial_cmp(&self, other: &Wide) -> Option<Ordering> {
        Some(match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => self.e.cmp(&other.e).then(self.m.partial_cmp(&other.m)?),
        })
    }
}

impl fmt::Display for Wide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let l10 = self.log2() * std::f64::consts::LOG10_2;
        let exp = l10.floor();
        write!(f, "{:.6}e{}", 10f64.powf(l10 - exp), exp as i64)
    }
}

/// Closed interval `[lo, hi]` of non-negative reals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mag {
    pub lo: Wide,
    pub hi: Wide,
}

impl Mag {
    pub const ZERO: Mag = Mag { lo: Wide::ZERO, hi: Wide::ZERO };
    pub const ONE: Mag = Mag { lo: Wide::ONE, hi: Wide::ONE };

    pub fn point(w: Wide) -> Mag {
        Mag { lo: w, hi: w }
    }

    pub fn from_u64(v: u64) -> Mag {
        Mag::from_big(&BigUint::from(v))
    }

    /// Exact when `x` is a finite non-negative double.
    pub fn from_f64(x: f64) -> Mag {
        Mag::point(Wide::from_f64(x))
    }

    pub fn from_big(v: &BigUint) -> Mag {
        if v.is_zero() {
            return Mag::ZERO;
        }
        let bits = v.bits();
        if bits <= 53 {
            return Mag::from_f64(v.to_u64().unwrap() as f64);
        }
        let shift = bits - 53;
        let top = (v >> shift).to_u64().unwrap();
        let exact = (v.clone() >> shift) << shift == *v;
        let lo = Wide::norm(top as f64, shift as i64);
        let hi = if exact { lo } else { Wide::norm((top + 1) as f64, shift as i64) };
        Mag { lo, hi }
    }

    /// Enclosure of a non-negative rational.
    pub fn from_ratio(r: &num_rational::BigRational) -> Mag {
        let n = r.numer().to_biguint().expect("non-negative rational");
        let d = r.denom().to_biguint().expect("positive denominator");
        Mag::from_big(&n).div(&Mag::from_big(&d))
    }

    /// `2^k`.
    pub fn pow2(k: i64) -> Mag {
        Mag::point(Wide { m: 1.0, e: k })
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn add(&self, o: &Mag) -> Mag {
        Mag {
            lo: Wide::rounded_down(Wide::add_near(self.lo, o.lo)),
            hi: Wide::rounded_up(Wide::add_near(self.hi, o.hi)),
        }
    }

    /// Interval difference, clamped at zero.
    pub fn sub(&self, o: &Mag) -> Mag {
        Mag {
            lo: Wide::rounded_down(Wide::sub_near(self.lo, o.hi)),
            hi: Wide::rounded_up(Wide::sub_near(self.hi, o.lo)),
        }
    }

    pub fn mul(&self, o: &Mag) -> Mag {
        Mag {
            lo: Wide::rounded_down(Wide::mul_near(self.lo, o.lo)),
            hi: Wide::rounded_up(Wide::mul_near(self.hi, o.hi)),
        }
    }

    pub fn div(&self, o: &Mag) -> Mag {
        Mag {
            lo: Wide::rounded_down(Wide::div_near(self.lo, o.hi)),
            hi: Wide::rounded_up(Wide::div_near(self.hi, o.lo)),
        }
    }

    pub fn add_u64(&self, k: u64) -> Mag {
        self.add(&Mag::from_u64(k))
    }

    pub fn mul_u64(&self, k: u64) -> Mag {
        self.mul(&Mag::from_u64(k))
    }

    pub fn min(&self, o: &Mag) -> Mag {
        Mag {
            lo: if self.lo <= o.lo { self.lo } else { o.lo },
            hi: if self.hi <= o.hi { self.hi } else { o.hi },
        }
    }

    pub fn max(&self, o: &Mag) -> Mag {
        Mag {
            lo: if self.lo >= o.lo { self.lo } else { o.lo },
            hi: if self.hi >= o.hi { self.hi } else { o.hi },
        }
    }

    /// Enclosure of `⌊a / b⌋`.
    pub fn floor_div(&self, o: &Mag) -> Mag {
        let q = self.div(o);
        Mag {
            lo: Wide::rounded_down(Wide::sub_near(q.lo, Wide::ONE)),
            hi: q.hi,
        }
    }

    /// `self^(p/q)`.
    pub fn pow_ratio(&self, p: u64, q: u64) -> Mag {
        Mag {
            lo: self.lo.pow_ratio_near(p, q).scaled(1.0 - TRANSCENDENTAL_SLACK).down(),
            hi: self.hi.pow_ratio_near(p, q).scaled(1.0 + TRANSCENDENTAL_SLACK).up(),
        }
    }

    pub fn powi(&self, k: u32) -> Mag {
        self.pow_u64(k as u64)
    }

    /// `self^k` by repeated squaring.
    pub fn pow_u64(&self, mut k: u64) -> Mag {
        let mut acc = Mag::ONE;
        let mut base = *self;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Enclosure of `ln x` for `x >= 1` (clamped at zero below 1).
    pub fn ln(&self) -> Mag {
        let f = |w: Wide| -> f64 {
            if w.is_zero() {
                0.0
            } else {
                (w.m.ln() + w.e as f64 * std::f64::consts::LN_2).max(0.0)
            }
        };
        let lo = f(self.lo) * (1.0 - TRANSCENDENTAL_SLACK);
        let hi = f(self.hi) * (1.0 + TRANSCENDENTAL_SLACK) + TRANSCENDENTAL_SLACK;
        Mag {
            lo: Wide::from_f64(lo.max(0.0)).down(),
            hi: Wide::from_f64(hi).up(),
        }
    }

    /// Certainly `self <= o`.
    pub fn certainly_le(&self, o: &Mag) -> bool {
        self.hi <= o.lo
    }

    /// Certainly `self < o`.
    pub fn certainly_lt(&self, o: &Mag) -> bool {
        self.hi < o.lo
    }

    pub fn contains_big(&self, v: &BigUint) -> bool {
        let m = Mag::from_big(v);
        self.lo <= m.lo && m.hi <= self.hi
    }

    /// Approximate decimal digit count of the upper end.
    pub fn digits(&self) -> f64 {
        (self.hi.log2() * std::f64::consts::LOG10_2).floor() + 1.0
    }
}

impl fmt::Display for Mag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Exact while the integer stays below a size cap, certified interval beyond.
#[derive(Clone, Debug, PartialEq)]
pub enum Num {
    Exact(BigUint),
    Approx(Mag),
}

/// Bit length beyond which `Num` switches to intervals.
pub const EXACT_BITS_CAP: u64 = 1 << 17;

impl Num {
    pub fn from_u64(v: u64) -> Num {
        Num::Exact(BigUint::from(v))
    }

    fn settle(v: BigUint) -> Num {
        if v.bits() > EXACT_BITS_CAP {
            Num::Approx(Mag::from_big(&v))
        } else {
            Num::Exact(v)
        }
    }

    pub fn from_big(v: BigUint) -> Num {
        Num::settle(v)
    }

    /// `d · 2^s`, exact while small, a point interval beyond.
    pub fn dyadic(d: u64, s: u64) -> Num {
        let bits = 64 - d.leading_zeros() as u64 + s;
        if bits <= EXACT_BITS_CAP || d == 0 {
            Num::Exact(BigUint::from(d) << s)
        } else {
            assert!(d < 1 << 53, "dyadic mantissa must fit a double");
            Num::Approx(Mag::point(Wide::norm(d as f64, s as i64)))
        }
    }

    pub fn max(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(a.max(b).clone()),
            _ => Num::Approx(self.mag().max(&o.mag())),
        }
    }

    /// Decimal for exact values up to a size limit, `d*2^s` for dyadic points,
    /// the enclosing interval otherwise.
    pub fn render(&self) -> String {
        match self {
            Num::Exact(v) if v.bits() <= 4096 => v.to_string(),
            Num::Exact(v) => {
                let tz = v.trailing_zeros().unwrap_or(0);
                let d = v >> tz;
                if d.bits() <= 64 {
                    format!("{d}*2^{tz}")
                } else {
                    Mag::from_big(v).to_string()
                }
            }
            Num::Approx(m) if m.is_point() => {
                let (d, s) = m.lo.to_dyadic();
                format!("{d}*2^{s}")
            }
            Num::Approx(m) => m.to_string(),
        }
    }

    pub fn mag(&self) -> Mag {
        match self {
            Num::Exact(v) => Mag::from_big(v),
            Num::Approx(m) => *m,
        }
    }

    pub fn exact(&self) -> Option<&BigUint> {
        match self {
            Num::Exact(v) => Some(v),
            Num::Approx(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Num::Exact(_))
    }

    fn bits_hint(&self) -> u64 {
        match self {
            Num::Exact(v) => v.bits(),
            Num::Approx(m) => m.hi.log2().max(0.0) as u64 + 1,
        }
    }

    pub fn add(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Num::settle(a + b),
            _ => Num::Approx(self.mag().add(&o.mag())),
        }
    }

    pub fn mul(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) if self.bits_hint() + o.bits_hint() <= EXACT_BITS_CAP + 1 => {
                Num::settle(a * b)
            }
            _ => Num::Approx(self.mag().mul(&o.mag())),
        }
    }

    /// `self - o` for `self >= o`.
    pub fn sub(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(a - b),
            _ => Num::Approx(self.mag().sub(&o.mag())),
        }
    }

    pub fn floor_div(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(a / b),
            _ => Num::Approx(self.mag().floor_div(&o.mag())),
        }
    }

    /// Certified `self <= o`, `None` when the intervals overlap.
    pub fn le(&self, o: &Num) -> Option<bool> {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Some(a <= b),
            _ => {
                let (a, b) = (self.mag(), o.mag());
                if a.hi <= b.lo {
                    Some(true)
                } else if a.lo > b.hi {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Exact(v) if v.bits() <= 200 => write!(f, "{v}"),
            other => write!(f, "{}", other.mag()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use proptest::prelude::*;

    fn big(v: u128) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn normalization() {
        let w = Wide::from_f64(12.0);
        assert_eq!((w.mantissa(), w.exponent()), (1.5, 3));
        assert_eq!(Wide::from_f64(0.75).exponent(), -1);
    }

    #[test]
    fn from_big_encloses() {
        let v = (BigUint::one() << 300u32) + big(12345);
        let m = Mag::from_big(&v);
        assert!(!m.is_point());
        assert!(m.contains_big(&v));
        let p = BigUint::one() << 300u32;
        assert!(Mag::from_big(&p).is_point());
    }

    #[test]
    fn huge_exponents() {
        let h = Mag::pow2(1_000_000_000);
        let c = h.powi(3);
        assert_eq!(c.lo.exponent(), 3_000_000_000);
        let r = c.pow_ratio(1, 4);
        assert!(r.lo.exponent() == 750_000_000 || r.lo.exponent() == 749_999_999);
        assert!(r.lo <= r.hi);
        let l = h.ln();
        let expect = 1e9 * std::f64::consts::LN_2;
        assert!(l.lo.to_f64() <= expect && expect <= l.hi.to_f64());
    }

    #[test]
    fn num_switches_to_intervals() {
        let a = Num::Exact(BigUint::one() << (EXACT_BITS_CAP as u32 - 10));
        let b = a.mul(&a);
        assert!(!b.is_exact());
        assert_eq!(Num::from_u64(7).mul(&Num::from_u64(6)), Num::from_u64(42));
        assert_eq!(Num::from_u64(3).le(&Num::from_u64(4)), Some(true));
    }

    proptest! {
        #[test]
        fn ops_enclose_exact(a in 1u128..u128::MAX / 4, b in 1u128..u64::MAX as u128, sh in 0u32..400) {
            let (x, y) = (big(a) << sh, big(b));
            let (mx, my) = (Mag::from_big(&x), Mag::from_big(&y));
            prop_assert!(mx.add(&my).contains_big(&(&x + &y)));
            prop_assert!(mx.mul(&my).contains_big(&(&x * &y)));
            let q = &x / &y;
            prop_assert!(mx.floor_div(&my).contains_big(&q));
            if x >= y {
                prop_assert!(mx.sub(&my).contains_big(&(&x - &y)));
            }
        }

        #[test]
        fn fourth_root_encloses(a in 1u64..u64::MAX) {
            let x = big(a as u128) * big(a as u128);
            let r = Mag::from_big(&x).pow_ratio(1, 4);
            let exact = (a as f64).sqrt();
            prop_assert!(r.lo.to_f64() <= exact * (1.0 + 1e-15));
            prop_assert!(exact * (1.0 - 1e-15) <= r.hi.to_f64());
        }
    }
}
