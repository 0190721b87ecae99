//! Seeded rejection sampling of window-balanced integer vectors and the
//! strongly-mixing parameter steps built from them.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::CutSpacParam;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrnsteinParams {
    /// The returned length `m` exceeds `n`.
    pub n: u64,
    /// Window sums stay within `[-k, k]`.
    pub k: u64,
    /// Counts are only constrained for window lengths `k < (1 - ε) m`.
    pub epsilon: f64,
    /// `α = alpha_num / alpha_den`.
    pub alpha_num: u64,
    pub alpha_den: u64,
    pub seed: u64,
    pub max_attempts: usize,
}

impl OrnsteinParams {
    pub fn new(n: u64, k: u64, epsilon: f64, seed: u64) -> OrnsteinParams {
        OrnsteinParams {
            n,
            k,
            epsilon,
            alpha_num: 5,
            alpha_den: 4,
            seed,
            max_attempts: 10_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.k < 1 {
            return Err(Error::Input("N and K must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Input(format!("ε = {} must lie in (0, 1)", self.epsilon)));
        }
        if self.alpha_num == 0 || self.alpha_den == 0 {
            return Err(Error::Input("α must be positive".into()));
        }
        Ok(())
    }

    /// Window lengths `k` (0-based offset) subject to the count bound:
    /// `k < (1 - ε) m`.
    pub fn constrained(&self, k: u64, m: u64) -> bool {
        (k as f64) < (1.0 - self.epsilon) * m as f64
    }

    /// `H < α (m - k) / K`, decided in integers.
    pub fn count_ok(&self, h: u64, k: u64, m: u64) -> bool {
        (h as u128) * (self.k as u128) * (self.alpha_den as u128)
            < (self.alpha_num as u128) * ((m - k) as u128)
    }
}

/// Per window offset `k`, the non-zero counts `(ℓ, H(ℓ, k))`.
pub type Certificate = Vec<Vec<(i64, u64)>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrnsteinSample {
    pub m: u64,
    /// `a_1..a_m`.
    pub a: Vec<i64>,
    pub certificate: Certificate,
    pub attempts: usize,
}

/// `H(ℓ, k)` table from prefix sums.
pub fn window_counts(a: &[i64]) -> Certificate {
    let m = a.len();
    let mut prefix = vec![0i64; m + 1];
    for i in 0..m {
        prefix[i + 1] = prefix[i] + a[i];
    }
    (0..m)
        .map(|k| {
            let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
            for j in 0..m - k {
                *counts.entry(prefix[j + k + 1] - prefix[j]).or_default() += 1;
            }
            counts.into_iter().collect()
        })
        .collect()
}

/// Both properties on a certificate: `|window| ≤ K` and the count bound.
pub fn certificate_holds(p: &OrnsteinParams, m: u64, cert: &Certificate) -> bool {
    cert.iter().enumerate().all(|(k, row)| {
        row.iter().all(|&(l, h)| {
            l.unsigned_abs() <= p.k && (!p.constrained(k as u64, m) || p.count_ok(h, k as u64, m))
        })
    })
}

/// Independent check by direct summation of every window.
pub fn verify_direct(p: &OrnsteinParams, a: &[i64]) -> bool {
    let m = a.len();
    for k in 0..m {
        let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
        for j in 0..m - k {
            let s: i64 = a[j..=j + k].iter().sum();
            if s.unsigned_abs() > p.k {
                return false;
            }
            *counts.entry(s).or_default() += 1;
        }
        if p.constrained(k as u64, m as u64) && counts.values().any(|&h| !p.count_ok(h, k as u64, m as u64)) {
            return false;
        }
    }
    true
}

/// `a_i = b_i - b_{i-1}` with `b_i` uniform in `{0..K}`, so every window sum
/// is a difference of two `b`s; resample until the count bound holds.
pub fn ornstein_sample(p: &OrnsteinParams) -> Result<OrnsteinSample> {
    p.validate()?;
    let m = p.n + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    for attempt in 1..=p.max_attempts {
        let b: Vec<i64> = (0..=m).map(|_| rng.random_range(0..=p.k) as i64).collect();
        let a: Vec<i64> = b.windows(2).map(|w| w[1] - w[0]).collect();
        let certificate = window_counts(&a);
        if certificate_holds(p, m, &certificate) {
            return Ok(OrnsteinSample {
                m,
                a,
                certificate,
                attempts: attempt,
            });
        }
    }
    Err(Error::SamplingBudget(p.max_attempts))
}

/// How the lower bound `N` on the step length is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NRule {
    /// `N = 10^n`.
    PowerOfTen,
    /// `N = value`.
    Fixed(u64),
}

impl NRule {
    pub fn value(self, n: usize) -> u64 {
        match self {
            NRule::PowerOfTen => 10u64.checked_pow(n as u32).unwrap_or(u64::MAX),
            NRule::Fixed(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingConfig {
    pub epsilon: f64,
    pub n_rule: NRule,
    pub seed: u64,
    pub max_attempts: usize,
}

impl Default for MixingConfig {
    fn default() -> Self {
        MixingConfig {
            epsilon: 1e-3,
            n_rule: NRule::PowerOfTen,
            seed: 0,
            max_attempts: 10_000,
        }
    }
}

/// Largest step length the sampler will attempt.
pub const MIXING_Q_CAP: u64 = 1 << 14;

/// A mixing step together with the sampler input and certificate behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingEmission {
    pub n: usize,
    pub params: OrnsteinParams,
    pub sample: OrnsteinSample,
}

impl MixingEmission {
    pub fn verify(&self) -> bool {
        self.sample.m == self.sample.a.len() as u64
            && self.sample.m > self.params.n
            && verify_direct(&self.params, &self.sample.a)
    }
}

/// Step `n ≥ 1` given `h_{n-1}`: `q_n = m`, `σ_{n,0} = 0`,
/// `σ_{n,i} = a_i + h_{n-1}`.
pub fn mixing_step(
    cfg: &MixingConfig,
    n: usize,
    h_prev: u64,
    q_min: u64,
) -> Result<(CutSpacParam, MixingEmission)> {
    let big_n = cfg.n_rule.value(n).max(q_min.saturating_sub(1));
    if big_n >= MIXING_Q_CAP {
        return Err(Error::Unreachable(format!(
            "mixing step {n} needs q > {big_n}, beyond the sampler capacity {MIXING_Q_CAP}"
        )));
    }
    let mut p = OrnsteinParams::new(big_n, h_prev, cfg.epsilon, cfg.seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    p.max_attempts = cfg.max_attempts;
    let sample = ornstein_sample(&p)?;
    let mut spacers = Vec::with_capacity(sample.m as usize + 1);
    spacers.push(0);
    for &a in &sample.a {
        spacers.push((a + h_prev as i64) as u64);
    }
    Ok((CutSpacParam::new(sample.m, spacers)?, MixingEmission { n, params: p, sample }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_vector_rejected() {
        for k in 2..6u64 {
            let p = OrnsteinParams::new(20, k, 1e-3, 0);
            let a = vec![0i64; 21];
            assert!(!verify_direct(&p, &a));
            assert!(!certificate_holds(&p, 21, &window_counts(&a)));
            // H(0, k) = m - k >= α (m - k) / K
            assert!(!p.count_ok(21, 0, 21));
        }
    }

    #[test]
    fn k1_always_accepts() {
        let p = OrnsteinParams::new(30, 1, 1e-3, 5);
        let s = ornstein_sample(&p).unwrap();
        assert_eq!(s.attempts, 1);
        assert!(verify_direct(&p, &s.a));
    }

    #[test]
    fn mixing_spacers_bounded() {
        let cfg = MixingConfig {
            epsilon: 0.5,
            n_rule: NRule::Fixed(10),
            seed: 3,
            max_attempts: 100_000,
        };
        let (step, em) = mixing_step(&cfg, 2, 3, 2).unwrap();
        assert!(em.verify());
        assert_eq!(step.q, em.sample.m);
        assert!(step.q > 10);
        assert!(step.spacers.iter().all(|&s| s <= 6));
        assert!(step.sigma() <= num_bigint::BigUint::from(2 * step.q * 3));
    }

    #[test]
    fn budget_reported() {
        let mut p = OrnsteinParams::new(50, 40, 1e-3, 1);
        p.max_attempts = 3;
        assert!(matches!(ornstein_sample(&p), Err(Error::SamplingBudget(3))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn certificates_recompute(seed in 0u64..1000, k in 1u64..4, n in 4u64..24) {
            let mut p = OrnsteinParams::new(n, k, 0.5, seed);
            p.max_attempts = 20_000;
            if let Ok(s) = ornstein_sample(&p) {
                prop_assert!(s.m > n);
                prop_assert!(verify_direct(&p, &s.a));
                prop_assert_eq!(window_counts(&s.a), s.certificate);
            }
        }
    }
}
