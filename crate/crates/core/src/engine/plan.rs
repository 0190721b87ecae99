//! Prime schedules and the odometer plan `q'_n`, `h'_n`, `H'_n`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The `k`-th prime, `k >= 1`.
pub fn nth_prime(k: usize) -> u64 {
    let mut found = 0;
    let mut c = 1u64;
    while found < k {
        c += 1;
        if is_prime(c) {
            found += 1;
        }
    }
    c
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// `p_n` = the `(v_2(n+1)+1)`-th prime: 2, 3, 2, 5, 2, 3, 2, 7, ...
/// Every prime occurs infinitely often.
pub fn default_primes(len: usize) -> Vec<u64> {
    (0..len)
        .map(|n| nth_prime((n as u64 + 1).trailing_zeros() as usize + 1))
        .collect()
}

pub fn parse_primes(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let p: u64 = t
                .parse()
                .map_err(|_| Error::Input(format!("bad prime {t:?}")))?;
            if !is_prime(p) {
                return Err(Error::Input(format!("{p} is not prime")));
            }
            Ok(p)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdometerPlan {
    pub primes: Vec<u64>,
    #[serde(with = "crate::rational::big_vec_serde")]
    pub qprime: Vec<BigUint>,
    /// `h'_0..h'_N`.
    #[serde(with = "crate::rational::big_vec_serde")]
    pub hprime: Vec<BigUint>,
    /// `H'_0..H'_N`.
    #[serde(with = "crate::rational::big_vec_serde")]
    pub big_h: Vec<BigUint>,
}

impl OdometerPlan {
    pub fn new(primes: &[u64], qprime: Vec<BigUint>) -> Result<OdometerPlan> {
        if primes.len() < qprime.len() {
            return Err(Error::Input("fewer primes than odometer steps".into()));
        }
        for (n, (q, &p)) in qprime.iter().zip(primes).enumerate() {
            if q.is_zero() || !(q % p).is_zero() {
                return Err(Error::Invariant(format!("p_{n} = {p} does not divide q'_{n} = {q}")));
            }
        }
        let mut hprime = vec![BigUint::one()];
        let mut big_h = vec![BigUint::zero()];
        for q in &qprime {
            let h = hprime.last().unwrap() * q;
            big_h.push(big_h.last().unwrap() + &h);
            hprime.push(h);
        }
        Ok(OdometerPlan {
            primes: primes[..qprime.len()].to_vec(),
            qprime,
            hprime,
            big_h,
        })
    }

    pub fn steps(&self) -> usize {
        self.qprime.len()
    }

    /// Multiplicity of each scheduled prime in `q'_0 ... q'_{N-1}`.
    pub fn prime_multiplicities(&self) -> Vec<(u64, u32)> {
        let mut ps: Vec<u64> = self.primes.clone();
        ps.sort_unstable();
        ps.dedup();
        ps.into_iter()
            .map(|p| {
                let pb = BigUint::from(p);
                let mut count = 0;
                for q in &self.qprime {
                    let mut v = q.clone();
                    loop {
                        let (d, r) = v.div_rem(&pb);
                        if !r.is_zero() {
                            break;
                        }
                        count += 1;
                        v = d;
                    }
                }
                (p, count)
            })
            .collect()
    }
}
