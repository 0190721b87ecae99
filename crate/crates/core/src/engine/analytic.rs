//! Closed integer recurrences for `r_{n,m}`, `t_{n,m}`, `q'_n` and the bounds
//! on `q'_n` they imply.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use super::plan::OdometerPlan;
use super::StageOneRule;
use crate::error::{Error, Result};
use crate::params::{derive_from_summaries, StepSummary};

/// `r_{n,m}` and `t_{n,m}` for `1 <= n <= N`, `n <= m <= M`, plus `t_{0,m}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecurrenceTables {
    pub n_max: usize,
    pub m_max: usize,
    pub rule: StageOneRule,
    r: Vec<Vec<Option<BigUint>>>,
    t: Vec<Vec<Option<BigUint>>>,
    #[serde(with = "crate::rational::big_vec_serde")]
    pub qprime: Vec<BigUint>,
    /// Steps where `q_n > max(p_n, q'_0, ..., q'_{n-1})` fails without
    /// making the construction degenerate.
    pub warnings: Vec<String>,
}

impl RecurrenceTables {
    pub fn r(&self, n: usize, m: usize) -> &BigUint {
        self.r[n][m].as_ref().expect("r_{n,m} outside table")
    }

    pub fn t(&self, n: usize, m: usize) -> &BigUint {
        self.t[n][m].as_ref().expect("t_{n,m} outside table")
    }

    /// Unchosen part `r_{n,m} - q'_{n-1} t_{n,m}`.
    pub fn leftover(&self, n: usize, m: usize) -> BigUint {
        self.r(n, m) - &self.qprime[n - 1] * self.t(n, m)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..=self.n_max).flat_map(move |n| (n..=self.m_max).map(move |m| (n, m)))
    }
}

pub fn recurrence_tables(
    steps: &[StepSummary],
    primes: &[u64],
    n_max: usize,
    m_max: usize,
    rule: StageOneRule,
) -> Result<RecurrenceTables> {
    if n_max == 0 || n_max > m_max {
        return Err(Error::Input(format!("need 1 <= N <= M, got N={n_max}, M={m_max}")));
    }
    if steps.len() < m_max {
        return Err(Error::Input(format!(
            "M = {m_max} needs {m_max} parameter steps, have {}",
            steps.len()
        )));
    }
    if primes.len() < n_max {
        return Err(Error::Input(format!("N = {n_max} needs {n_max} primes, have {}", primes.len())));
    }
    let mut r = vec![vec![None; m_max + 1]; n_max + 1];
    let mut t = vec![vec![None; m_max + 1]; n_max + 1];
    let mut qprime: Vec<BigUint> = Vec::with_capacity(n_max);
    let one = BigUint::one();
    for m in 1..=m_max {
        t[0][m] = Some(if m == 1 {
            rule.t01(&steps[0].total)
        } else {
            steps[m - 1].total.clone()
        });
        for n in 1..=m.min(n_max) {
            let q = &steps[m - 1].q;
            if m == n {
                let rv = q + t[n - 1][n].as_ref().unwrap();
                let p = BigUint::from(primes[n - 1]);
                let qp = (&rv - &one) / &p * &p;
                if qp.is_zero() {
                    return Err(Error::IllPosed {
                        n,
                        m,
                        what: format!("q'_{}", n - 1),
                    });
                }
                qprime.push(qp);
                r[n][m] = Some(rv);
                t[n][m] = Some(one.clone());
            } else {
                let qp = &qprime[n - 1];
                let prev = r[n][m - 1].as_ref().unwrap() - qp * t[n][m - 1].as_ref().unwrap();
                let rv = q * prev + t[n - 1][m].as_ref().unwrap();
                let tv = (&rv - &one) / qp;
                if tv.is_zero() {
                    return Err(Error::IllPosed {
                        n,
                        m,
                        what: format!("t_{{{n},{m}}}"),
                    });
                }
                r[n][m] = Some(rv);
                t[n][m] = Some(tv);
            }
        }
    }
    let mut warnings = Vec::new();
    for n in 0..n_max {
        let q = &steps[n].q;
        let p = BigUint::from(primes[n]);
        let worst = qprime[..n].iter().fold(p, |a, b| a.max(b.clone()));
        if *q <= worst {
            warnings.push(format!(
                "q_{n} = {q} does not exceed max(p_{n}, q'_0..q'_{}) = {worst}",
                n as i64 - 1
            ));
        }
    }
    Ok(RecurrenceTables {
        n_max,
        m_max,
        rule,
        r,
        t,
        qprime,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QPrimeCheck {
    pub n: usize,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// Present when the growth preconditions were supplied and hold.
    pub ratio_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QPrimeReport {
    pub checks: Vec<QPrimeCheck>,
    pub preconditions_hold: Option<bool>,
}

impl QPrimeReport {
    pub fn passed(&self) -> bool {
        self.checks
            .iter()
            .all(|c| c.lower_ok && c.upper_ok && c.ratio_ok != Some(false))
    }
}

/// `q'_n >= q_n - (1 + p_n)`, `q'_n <= 3q_n + σ_n/(q'_0…q'_{n-1})` and, when a
/// growth constant `C'` is supplied and its preconditions hold, `q'_n <= 4q_n`.
pub fn qprime_bounds_check(
    tables: &RecurrenceTables,
    steps: &[StepSummary],
    primes: &[u64],
    c_prime: Option<&BigUint>,
) -> QPrimeReport {
    let (h, _, _) = derive_from_summaries(steps);
    let n_steps = tables.qprime.len();
    let preconditions_hold = c_prime.map(|c| {
        (0..n_steps).all(|n| {
            let q = &steps[n].q;
            let growth = q >= &(c * &h[n] + BigUint::from(1 + primes[n]));
            let spacing = n == 0 || steps[n].total <= c * q * &h[n - 1];
            growth && spacing
        })
    });
    let mut prod = BigUint::one();
    let checks = (0..n_steps)
        .map(|n| {
            let q = &steps[n].q;
            let qp = &tables.qprime[n];
            let lower_ok = qp + BigUint::from(1 + primes[n]) >= *q;
            let upper_ok = qp * &prod <= BigUint::from(3u32) * q * &prod + &steps[n].total;
            let ratio_ok = (preconditions_hold == Some(true)).then(|| *qp <= q * 4u32);
            prod *= qp;
            QPrimeCheck {
                n,
                lower_ok,
                upper_ok,
                ratio_ok,
            }
        })
        .collect();
    QPrimeReport {
        checks,
        preconditions_hold,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UniversalityReport {
    pub divisible: bool,
    pub multiplicities: Vec<(u64, u32)>,
}

/// `p_n | q'_n` for every built step, with the accumulated prime multiplicities.
pub fn universality_check(plan: &OdometerPlan) -> UniversalityReport {
    let divisible = plan
        .qprime
        .iter()
        .zip(&plan.primes)
        .all(|(q, &p)| !q.is_zero() && (q % p).is_zero());
    UniversalityReport {
        divisible,
        multiplicities: plan.prime_multiplicities(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamSeq;

    fn tables(seq: &ParamSeq, primes: &[u64], n: usize, m: usize) -> Result<RecurrenceTables> {
        recurrence_tables(&seq.summaries(), primes, n, m, StageOneRule::FullTower)
    }

    #[test]
    fn first_entries() {
        let seq = ParamSeq::odometer(&[4, 4, 4]);
        let tb = tables(&seq, &[2, 3, 2], 2, 3).unwrap();
        assert_eq!(*tb.r(1, 1), 4u32.into());
        assert_eq!(tb.qprime[0], 2u32.into());
        assert_eq!(*tb.r(1, 2), 8u32.into());
        assert_eq!(*tb.t(1, 2), 3u32.into());
        assert_eq!(*tb.t(2, 2), 1u32.into());
    }

    #[test]
    fn t0m_is_sigma() {
        let seq = ParamSeq::chacon(4);
        let tb = tables(&seq, &[2, 2], 2, 4).unwrap();
        for m in 2..=4 {
            assert_eq!(*tb.t(0, m), BigUint::one());
        }
        assert_eq!(*tb.t(0, 1), BigUint::one());
        let ci = recurrence_tables(&seq.summaries(), &[2, 2], 2, 4, StageOneRule::CopyImages).unwrap();
        assert_eq!(*ci.t(0, 1), BigUint::zero());
        assert_eq!(*ci.r(1, 1), 3u32.into());
    }

    #[test]
    fn q5_p2_gives_4() {
        let seq = ParamSeq::odometer(&[5, 5]);
        let tb = tables(&seq, &[2, 2], 1, 2).unwrap();
        assert_eq!(tb.qprime[0], 4u32.into());
        assert_eq!(*tb.r(1, 2), 5u32.into());
        assert_eq!(*tb.t(1, 2), 1u32.into());
    }

    #[test]
    fn degenerate_prime_is_ill_posed() {
        let seq = ParamSeq::odometer(&[2, 2]);
        let err = tables(&seq, &[3, 2], 1, 2).unwrap_err();
        assert!(matches!(err, Error::IllPosed { n: 1, m: 1, .. }));
        assert!(err.to_string().contains("q_n > max(p_n, q'_0"));
    }

    #[test]
    fn bounds_hold_on_adversarial_spacers() {
        // σ_n = q_n h_{n-1}
        let mut entries = vec![crate::params::CutSpacParam::odometer(5)];
        let mut h_prev = 1u64;
        let mut h = 5u64;
        for q in [7u64, 9, 11] {
            let mut sp = vec![0; q as usize + 1];
            sp[q as usize] = q * h_prev;
            entries.push(crate::params::CutSpacParam::new(q, sp).unwrap());
            h_prev = h;
            h = q * h + q * h_prev;
        }
        let seq = ParamSeq::new(entries).unwrap();
        let primes = [2, 3, 2, 5];
        let tb = tables(&seq, &primes, 4, 4).unwrap();
        let rep = qprime_bounds_check(&tb, &seq.summaries(), &primes, None);
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn universality_divisibility() {
        let seq = ParamSeq::odometer(&[5, 7, 9, 11]);
        let tb = tables(&seq, &[2, 3, 2, 5], 4, 4).unwrap();
        let plan = OdometerPlan::new(&[2, 3, 2, 5], tb.qprime.clone()).unwrap();
        let rep = universality_check(&plan);
        assert!(rep.divisible);
        for (p, k) in rep.multiplicities {
            assert!(k >= 1, "prime {p} missing");
        }
    }
}
