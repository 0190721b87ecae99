//! Continued fractions and the rotation parameter family built from them.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{compose_run, CutSpacParam, ParamSeq};
use crate::rational::ratio_to_f64;

/// Where the coefficients of an irrational number come from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum CfSource {
    /// `[head..., period, period, ...]` (quadratic irrationals); `head[0]` is
    /// the integer part.
    Periodic { head: Vec<i64>, period: Vec<u64> },
    /// A finite list read as the prefix of an irrational expansion.
    Finite { coeffs: Vec<i64> },
}

impl CfSource {
    /// `√2 = [1; 2, 2, ...]`.
    pub fn sqrt2() -> CfSource {
        CfSource::Periodic {
            head: vec![1],
            period: vec![2],
        }
    }

    /// `(1+√5)/2 = [1; 1, 1, ...]`.
    pub fn golden() -> CfSource {
        CfSource::Periodic {
            head: vec![1],
            period: vec![1],
        }
    }

    /// Coefficients `[q_{-1}; q_0, q_1, ...]`, at most `count` of them.
    pub fn coefficients(&self, count: usize) -> Vec<i64> {
        match self {
            CfSource::Periodic { head, period } => {
                let mut out: Vec<i64> = head.iter().copied().take(count).collect();
                let mut i = 0;
                while out.len() < count && !period.is_empty() {
                    out.push(period[i % period.len()] as i64);
                    i += 1;
                }
                out
            }
            CfSource::Finite { coeffs } => coeffs.iter().copied().take(count).collect(),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, CfSource::Periodic { period, .. } if !period.is_empty())
    }

    /// Parse `"1,2,2,2"` (finite) or `"1;(2)"` / `"1,(2)"` (periodic tail in parentheses).
    pub fn parse(s: &str) -> Result<CfSource> {
        let s = s.trim().trim_end_matches("...").trim_end_matches('…').trim_end_matches(',');
        let (head, period) = match s.find('(') {
            Some(i) => {
                let inner = s[i + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Input(format!("unclosed period in {s:?}")))?;
                (&s[..i], Some(inner))
            }
            None => (s, None),
        };
        let nums = |t: &str| -> Result<Vec<i64>> {
            t.split([',', ';', ' '])
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| x.parse::<i64>().map_err(|_| Error::Input(format!("bad coefficient {x:?}"))))
                .collect()
        };
        let head = nums(head)?;
        if head.is_empty() {
            return Err(Error::Input("continued fraction needs an integer part".into()));
        }
        if head[1..].iter().any(|&c| c < 1) {
            return Err(Error::Input("coefficients after the first must be positive".into()));
        }
        Ok(match period {
            Some(p) => {
                let period = nums(p)?;
                if period.is_empty() || period.iter().any(|&c| c < 1) {
                    return Err(Error::Input("period must be non-empty and positive".into()));
                }
                CfSource::Periodic {
                    head,
                    period: period.into_iter().map(|c| c as u64).collect(),
                }
            }
            None => CfSource::Finite { coeffs: head },
        })
    }

    /// Enclosure `[lo, hi]` of the number from the first `count` coefficients
    /// (two consecutive convergents bracket the value).
    pub fn enclosure(&self, count: usize) -> (BigRational, BigRational) {
        let c = self.coefficients(count.max(2));
        let (a, b) = convergent_pair(&c);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

fn convergent_pair(c: &[i64]) -> (BigRational, BigRational) {
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (BigInt::from(c[0]), BigInt::one());
    let mut prev = BigRational::from_integer(p1.clone());
    for &a in &c[1..] {
        let p2 = BigInt::from(a) * &p1 + &p0;
        let q2 = BigInt::from(a) * &q1 + &q0;
        prev = BigRational::new(p1.clone(), q1.clone());
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    (prev, BigRational::new(p1, q1))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CfExpansion {
    /// `[q_{-1}; q_0, q_1, ...]`.
    pub coeffs: Vec<BigInt>,
    pub warning: Option<String>,
}

/// Standard expansion of a rational by the Euclidean algorithm. Reaching exact
/// termination at `count` coefficients yields a warning; terminating earlier
/// is an error.
pub fn continued_fraction(x: &BigRational, count: usize) -> Result<CfExpansion> {
    if count == 0 {
        return Err(Error::Input("count must be at least 1".into()));
    }
    let mut num = x.numer().clone();
    let mut den = x.denom().clone();
    let mut coeffs = Vec::with_capacity(count);
    while coeffs.len() < count {
        let (q, r) = num.div_mod_floor(&den);
        coeffs.push(q);
        if r.is_zero() {
            if coeffs.len() < count {
                return Err(Error::Input(format!(
                    "expansion terminates after {} coefficients, {count} requested",
                    coeffs.len()
                )));
            }
            return Ok(CfExpansion {
                coeffs,
                warning: Some("rational input: expansion terminates exactly here".into()),
            });
        }
        num = den;
        den = r;
    }
    Ok(CfExpansion { coeffs, warning: None })
}

/// Coefficients shared by every number in `[lo, hi]`, up to `count`.
pub fn continued_fraction_interval(lo: &BigRational, hi: &BigRational, count: usize) -> Vec<BigInt> {
    let (mut a, mut b) = (lo.clone(), hi.clone());
    let mut out = Vec::new();
    while out.len() < count {
        let (fa, fb) = (a.floor(), b.floor());
        if fa != fb {
            break;
        }
        out.push(fa.to_integer());
        let (ra, rb) = (&a - &fa, &b - &fb);
        if ra.is_zero() || rb.is_zero() {
            break;
        }
        // x -> 1/x reverses the order
        (a, b) = (rb.recip(), ra.recip());
    }
    out
}

/// Parse a decimal string into the interval `[x, x + 10^-digits]`.
pub fn parse_decimal(s: &str) -> Result<(BigRational, BigRational)> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(Error::Input(format!("bad decimal {s:?}")));
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = digits.parse().unwrap_or_else(|_| BigInt::zero());
    let scale = BigInt::from(10u32).pow(frac.len() as u32);
    let x = BigRational::new(if neg { -n } else { n }, scale.clone());
    let ulp = BigRational::new(BigInt::one(), scale);
    Ok(if neg { (&x - &ulp, x) } else { (x.clone(), x + ulp) })
}

/// Denominators of the convergents: `h_{-1} = 0`, `h_0 = 1`,
/// `h_{k+1} = q_k h_k + h_{k-1}`; returns `h_0..h_len`.
pub fn convergent_denominators(q: &[u64]) -> Vec<BigUint> {
    let mut h = vec![BigUint::one()];
    let mut prev = BigUint::zero();
    for &c in q {
        let next = BigUint::from(c) * h.last().unwrap() + &prev;
        prev = h.last().unwrap().clone();
        h.push(next);
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesVerdict {
    Converges,
    Diverges,
    Inconclusive,
}

/// Partial sums of `Σ 1/(q_k q_{k+1})` with a verdict read off the terms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesDiagnostic {
    pub partial_sums: Vec<f64>,
    pub verdict: SeriesVerdict,
}

/// Geometric decay (ratio at most 1/2) over the second half of the terms
/// reads as convergent; terms that stay within a factor 4 of the largest read
/// as divergent (bounded coefficients).
pub fn series_diagnostic(q: &[u64]) -> SeriesDiagnostic {
    let terms: Vec<BigRational> = q
        .windows(2)
        .map(|w| BigRational::new(BigInt::one(), BigInt::from(w[0]) * BigInt::from(w[1])))
        .collect();
    let mut acc = BigRational::zero();
    let partial_sums = terms
        .iter()
        .map(|t| {
            acc += t;
            ratio_to_f64(&acc)
        })
        .collect();
    let verdict = if terms.len() < 4 {
        SeriesVerdict::Inconclusive
    } else {
        let tail = &terms[terms.len() / 2..];
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let max = terms.iter().max().unwrap();
        if tail.windows(2).all(|w| w[1] <= &w[0] * &half) {
            SeriesVerdict::Converges
        } else if tail.iter().all(|t| t * BigInt::from(4) >= *max) {
            SeriesVerdict::Diverges
        } else {
            SeriesVerdict::Inconclusive
        }
    };
    SeriesDiagnostic { partial_sums, verdict }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationFamily {
    pub seq: ParamSeq,
    /// `C = C' = h̃_{n0}`.
    pub c: BigUint,
    pub c_prime: BigUint,
    pub diagnostic: SeriesDiagnostic,
}

fn rotation_step(q: u64, top: &BigUint) -> Result<CutSpacParam> {
    let top = top
        .to_u64()
        .ok_or_else(|| Error::TooLarge(format!("spacer {top}")))?;
    let mut spacers = vec![0; q as usize + 1];
    spacers[q as usize] = top;
    Ok(CutSpacParam { q, spacers })
}

/// The rotation family for coefficients `q_0, q_1, ...` (integer part
/// excluded) with the first `n0 + 1` steps collapsed into one.
pub fn rotation_params(coeffs: &[u64], n0: usize) -> Result<RotationFamily> {
    if coeffs.len() < n0 + 2 {
        return Err(Error::Input(format!(
            "need at least {} coefficients after the integer part",
            n0 + 2
        )));
    }
    if coeffs.iter().any(|&c| c == 0) {
        return Err(Error::Input("coefficients must be positive".into()));
    }
    let prod: u128 = coeffs[..=n0].iter().map(|&c| c as u128).product();
    if prod < 3 {
        return Err(Error::Input(format!(
            "collapsed first coefficient Q_0…Q_n0 = {prod} must be at least 3"
        )));
    }
    if let Some(k) = (n0 + 1..coeffs.len()).find(|&k| coeffs[k] < 2) {
        return Err(Error::Input(format!(
            "tail coefficient q_{k} = {} is below 2",
            coeffs[k]
        )));
    }
    let diagnostic = series_diagnostic(coeffs);
    if diagnostic.verdict == SeriesVerdict::Diverges {
        return Err(Error::Input(
            "Σ 1/(q_k q_{k+1}) diverges: the construction has infinite measure".into(),
        ));
    }
    let h = convergent_denominators(coeffs);
    let h_prev = |k: usize| if k == 0 { BigUint::zero() } else { h[k - 1].clone() };
    let tilde: Vec<CutSpacParam> = (0..coeffs.len())
        .map(|k| rotation_step(coeffs[k], &h_prev(k)))
        .collect::<Result<_>>()?;
    let mut entries = vec![compose_run(&tilde[..=n0])];
    entries.extend_from_slice(&tilde[n0 + 1..]);
    let seq = ParamSeq::new(entries)?;
    let c = h[n0].clone();
    Ok(RotationFamily {
        seq,
        c_prime: c.clone(),
        c,
        diagnostic,
    })
}

/// Signed integer part and positive tail of a parsed expansion.
pub fn split_integer_part(coeffs: &[i64]) -> Result<(i64, Vec<u64>)> {
    let (&first, rest) = coeffs
        .split_first()
        .ok_or_else(|| Error::Input("empty expansion".into()))?;
    let tail = rest
        .iter()
        .map(|&c| {
            if c >= 1 {
                Ok(c as u64)
            } else {
                Err(Error::Input(format!("non-positive coefficient {c}")))
            }
        })
        .collect::<Result<_>>()?;
    Ok((first, tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// Rebuild `[a0; a1, ...]` bottom-up, independently of the expansion code.
    fn evaluate(c: &[BigInt]) -> BigRational {
        let mut x = BigRational::from_integer(c.last().unwrap().clone());
        for a in c[..c.len() - 1].iter().rev() {
            x = BigRational::from_integer(a.clone()) + x.recip();
        }
        x
    }

    #[test]
    fn nineteen_sevenths() {
        let e = continued_fraction(&ratio(19, 7), 4).unwrap();
        assert_eq!(e.coeffs, ints(&[2, 1, 2, 2]));
        assert!(e.warning.is_some());
        assert_eq!(evaluate(&e.coeffs), ratio(19, 7));
        assert!(continued_fraction(&ratio(19, 7), 5).is_err());
        assert!(continued_fraction(&ratio(19, 7), 3).unwrap().warning.is_none());
    }

    #[test]
    fn sqrt2_and_golden_approximants() {
        let e = continued_fraction(&ratio(239, 169), 7).unwrap();
        assert_eq!(e.coeffs, ints(&[1, 2, 2, 2, 2, 2, 2]));
        // F_13 / F_12
        let g = continued_fraction(&ratio(233, 144), 11).unwrap();
        assert!(g.coeffs.iter().take(10).all(|c| *c == BigInt::one()));
        assert_eq!(CfSource::sqrt2().coefficients(4), vec![1, 2, 2, 2]);
    }

    #[test]
    fn interval_expansion_agrees() {
        let (lo, hi) = parse_decimal("1.41421356237").unwrap();
        let c = continued_fraction_interval(&lo, &hi, 20);
        assert!(c.len() >= 6);
        assert!(c[1..].iter().all(|x| *x == BigInt::from(2)));
        let (a, b) = CfSource::sqrt2().enclosure(12);
        assert!(a < b && a < ratio(1414214, 1000000) && b > ratio(1414213, 1000000));
    }

    #[test]
    fn denominators() {
        assert_eq!(
            convergent_denominators(&[2, 2, 2]),
            vec![1u32, 2, 5, 12].into_iter().map(BigUint::from).collect::<Vec<_>>()
        );
    }

    #[test]
    fn constant_two_diverges() {
        let mut q = vec![3];
        q.extend(std::iter::repeat_n(2, 9));
        assert_eq!(series_diagnostic(&q).verdict, SeriesVerdict::Diverges);
        assert!(rotation_params(&q, 0).is_err());
    }

    #[test]
    fn powers_of_four_converge() {
        let q: Vec<u64> = (0..6).map(|k| 4u64.pow(k + 1)).collect();
        let d = series_diagnostic(&q);
        assert_eq!(d.verdict, SeriesVerdict::Converges);
        let fam = rotation_params(&q, 0).unwrap();
        let seq = &fam.seq;
        let h = convergent_denominators(&q);
        for k in 1..seq.len() {
            assert_eq!(seq.height(k), &h[k]);
            assert_eq!(BigUint::from(*seq.entries()[k].spacers.last().unwrap()), h[k - 1]);
            assert!(seq.zmax()[k] <= *seq.height(k));
        }
        assert_eq!(fam.c, BigUint::one());
    }

    #[test]
    fn collapsed_prefix() {
        // Q = (1, 3): q_0 = 3, heights of the collapsed family skip h̃_1
        let q = [1u64, 3, 16, 256, 65536];
        let fam = rotation_params(&q, 1).unwrap();
        let h = convergent_denominators(&q);
        assert_eq!(fam.seq.q(0), 3);
        for k in 1..fam.seq.len() {
            assert_eq!(fam.seq.height(k), &h[k + 1]);
        }
        assert_eq!(fam.c, h[1]);
        assert_eq!(BigUint::from(*fam.seq.entries()[1].spacers.last().unwrap()), h[1]);
        assert!(rotation_params(&[1, 1, 3, 4, 5], 1).is_err());
        assert!(rotation_params(&[3, 1, 4, 5, 6], 0).is_err());
    }
}
