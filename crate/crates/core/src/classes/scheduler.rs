//! The scheduler: picks each cutting parameter above a floor that makes every
//! growth, measure and integrability condition hold, and tracks the odometer
//! cutting parameters `q'_n` through the incremental recurrence columns.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{FlexibleClassGen, Prefix};
use crate::engine::StageOneRule;
use crate::error::{Error, Result};
use crate::mag::{Mag, Num, Wide};
use crate::params::StepSummary;
use crate::phi::PhiSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Every condition, with certified enclosures.
    #[default]
    Strict,
    /// Only well-definedness (`q_n > max(p_n, q'_0..q'_{n-1})`) plus
    /// caller-supplied floors: small families for enumeration.
    Relaxed,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "strict" => Ok(Mode::Strict),
            "relaxed" => Ok(Mode::Relaxed),
            _ => Err(Error::Input(format!("unknown mode {s:?} (strict|relaxed)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleConfig {
    /// Number of cutting parameters `q_0..q_{steps-1}` to emit.
    pub steps: usize,
    pub mode: Mode,
    pub primes: Vec<u64>,
    pub rule: StageOneRule,
    /// Extra per-step lower bounds (relaxed mode; ignored past its length).
    pub floors: Vec<u64>,
    /// Offsets added to the computed floor of each step.
    pub bumps: Vec<u64>,
}

impl ScheduleConfig {
    pub fn new(steps: usize, mode: Mode, primes: Vec<u64>) -> ScheduleConfig {
        ScheduleConfig {
            steps,
            mode,
            primes,
            rule: StageOneRule::default(),
            floors: Vec::new(),
            bumps: Vec::new(),
        }
    }
}

/// One line of the κ-log: the threshold each condition imposes at step `n`,
/// the resulting floor, the condition attaining it and the chosen `q_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaEntry {
    pub n: usize,
    pub kappa: String,
    pub thresholds: Vec<(String, String)>,
    pub floor: String,
    pub binding: String,
    pub q: String,
    pub qprime: String,
}

#[derive(Clone, Debug)]
pub struct Schedule {
    pub class: String,
    pub mode: Mode,
    pub phi: String,
    pub c: BigUint,
    pub c_prime: BigUint,
    pub primes: Vec<u64>,
    pub rule: StageOneRule,
    pub prefix: Prefix,
    pub qprime: Vec<Num>,
    /// `t_{n,n+1}`, so that `q'_n = q_n + t_{n,n+1} - 1 - ρ_n` with `0 ≤ ρ_n < p_n`.
    pub t_diag: Vec<Num>,
    pub kappa_log: Vec<KappaEntry>,
}

/// Certified check outcomes per step of the odometer bounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QPrimeEnvelope {
    pub n: usize,
    pub lower: Option<bool>,
    pub upper: Option<bool>,
    pub ratio: Option<bool>,
    pub crit1: Option<bool>,
}

impl QPrimeEnvelope {
    pub fn passed(&self) -> bool {
        self.lower == Some(true) && self.upper == Some(true) && self.ratio != Some(false) && self.crit1 == Some(true)
    }
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }

    pub fn summaries(&self) -> Option<Vec<StepSummary>> {
        self.prefix.summaries()
    }

    /// `h'_0..h'_n` for the computed `q'`.
    pub fn hprime(&self) -> Vec<Num> {
        let mut v = vec![Num::from_u64(1)];
        for q in &self.qprime {
            let next = v.last().unwrap().mul(q);
            v.push(next);
        }
        v
    }

    /// `H'_0..H'_n`.
    pub fn big_h(&self) -> Vec<Num> {
        let mut v = vec![Num::from_u64(0)];
        for h in &self.hprime()[1..] {
            let next = v.last().unwrap().add(h);
            v.push(next);
        }
        v
    }

    /// `q'_n ≥ q_n - (1 + p_n)`, `q'_n ≤ 3q_n + σ_n/(q'_0…q'_{n-1})`, the
    /// ratio bound `q'_n ≤ 4q_n` (strict mode) and well-definedness.
    pub fn qprime_envelope(&self) -> Vec<QPrimeEnvelope> {
        let hp = self.hprime();
        (0..self.qprime.len())
            .map(|n| {
                let s = &self.prefix.steps[n];
                let qp = &self.qprime[n];
                let p = Num::from_u64(self.primes[n]);
                // q'_n - q_n + 1 + p_n = t_{n,n+1} + p_n - ρ_n ≥ t_{n,n+1} + 1
                let lower = match (&s.q, qp) {
                    (Num::Exact(_), Num::Exact(_)) => s.q.le(&qp.add(&p).add(&Num::from_u64(1))),
                    _ => Some(self.t_diag[n].mag().lo >= Wide::ZERO),
                };
                let upper = match (qp, &hp[n]) {
                    (Num::Exact(_), Num::Exact(_)) => qp
                        .mul(&hp[n])
                        .le(&Num::from_u64(3).mul(&s.q).mul(&hp[n]).add(&s.total)),
                    _ => {
                        // divide through by h'_n, which is the same number on both sides
                        let rhs = s.q.mag().mul_u64(3).add(&s.total.mag().div(&hp[n].mag()));
                        qp.le(&Num::Approx(rhs))
                    }
                };
                let ratio = (self.mode == Mode::Strict).then(|| qp.le(&Num::from_u64(4).mul(&s.q)) == Some(true));
                let worst = self.qprime[..n].iter().fold(p, |a, b| a.max(b));
                let crit1 = worst.le(&s.q).map(|le| le && worst != s.q);
                QPrimeEnvelope {
                    n,
                    lower,
                    upper,
                    ratio,
                    crit1,
                }
            })
            .collect()
    }
}

/// Recurrence columns `r_{k,m}`, `t_{k,m}` for the latest `m`, in `Num`.
#[derive(Clone, Debug, Default)]
struct Columns {
    r: Vec<Num>,
    t: Vec<Num>,
}

fn one() -> Num {
    Num::from_u64(1)
}

fn interval(lo: Wide, hi: Wide) -> Num {
    Num::Approx(Mag { lo, hi })
}

impl Columns {
    /// Column `m = q'.len() + 1` after `q_{m-1}` is known; returns `q'_{m-1}`.
    fn advance(&mut self, m: usize, q: &Num, sigma: &Num, qprime: &[Num], p: u64, rule: StageOneRule) -> Result<(Num, Num)> {
        let t0 = if m == 1 {
            match rule {
                StageOneRule::FullTower => sigma.clone(),
                StageOneRule::CopyImages => Num::from_u64(0),
            }
        } else {
            sigma.clone()
        };
        let mut r = vec![Num::from_u64(0)];
        let mut t = vec![t0];
        for k in 1..m {
            let qp = &qprime[k - 1];
            let (rv, tv) = match (&self.r[k], qp, &self.t[k], q, &t[k - 1]) {
                (Num::Exact(a), Num::Exact(b), Num::Exact(c), Num::Exact(_), Num::Exact(_)) => {
                    let rv = q.mul(&Num::Exact(a - b * c)).add(&t[k - 1]);
                    let tv = rv.sub(&one()).floor_div(qp);
                    (rv, tv)
                }
                _ => {
                    // the residue r_{k,m-1} - q'_{k-1} t_{k,m-1} lies in [1, q'_{k-1}],
                    // so t_{k,m} ≤ q_{m-1} + t_{k-1,m} / q'_{k-1}
                    let (qm, qpm, tp) = (q.mag(), qp.mag(), t[k - 1].mag());
                    let rv = interval(qm.add(&tp).lo, qm.mul(&qpm).add(&tp).hi);
                    let lo = qm.add(&tp).sub(&Mag::ONE).div(&qpm).sub(&Mag::ONE).lo;
                    let hi = qm.add(&tp.div(&qpm)).hi;
                    (rv, interval(lo, hi))
                }
            };
            if let Num::Exact(v) = &tv {
                if v.is_zero() {
                    return Err(Error::IllPosed {
                        n: k,
                        m,
                        what: format!("t_{{{k},{m}}}"),
                    });
                }
            }
            r.push(rv);
            t.push(tv);
        }
        let rmm = q.add(&t[m - 1]);
        let qp = match &rmm {
            Num::Exact(v) => {
                let pb = BigUint::from(p);
                Num::Exact((v - 1u32) / &pb * &pb)
            }
            Num::Approx(mm) => interval(mm.sub(&Mag::from_u64(p)).lo, mm.hi),
        };
        if qp.le(&Num::from_u64(0)) == Some(true) {
            return Err(Error::IllPosed {
                n: m,
                m,
                what: format!("q'_{}", m - 1),
            });
        }
        let tdiag = t[m - 1].clone();
        r.push(rmm);
        t.push(one());
        self.r = r;
        self.t = t;
        Ok((qp, tdiag))
    }
}

/// Relative margin applied to every certified right-hand side.
const MARGIN: f64 = 1.0 - 1.0 / (1u64 << 20) as f64;

/// Data of step `n` entering the integrability conditions.
struct StepCtx<'a> {
    n: usize,
    phi: &'a PhiSpec,
    c: Mag,
    /// `h'_0..h'_n`.
    hp: Vec<Mag>,
    /// `H'_0..H'_n`.
    big_h: Vec<Mag>,
    /// `H'_n + p_n h'_n`.
    a: Mag,
    /// `q_0…q_{n-1}`.
    prod_q: Mag,
}

type Criterion = (&'static str, fn(&StepCtx, &Mag) -> bool);

impl StepCtx<'_> {
    fn phi_pair(&self, x: &Mag) -> Mag {
        self.phi.upper(x).add(&self.phi.upper(&self.c.mul(x)))
    }

    fn le(lhs: &Mag, rhs: &Mag) -> bool {
        lhs.certainly_le(&rhs.mul(&Mag::from_f64(MARGIN)))
    }

    fn two_pow(&self, k: i64) -> Mag {
        Mag::pow2(-k)
    }

    fn criteria() -> [Criterion; 8] {
        [
            ("critpr2", |s, t| {
                s.n == 0 || Self::le(&s.a.mul_u64(s.n as u64), t)
            }),
            ("critpr4", |s, t| {
                let lhs = Mag::ONE
                    .add(&s.a.mul_u64(2))
                    .mul(&s.hp[s.n].powi(2))
                    .mul(&s.phi_pair(&t.powi(3)));
                Self::le(&lhs, &t.mul(&s.two_pow(s.n as i64)))
            }),
            ("critpr4bis", |s, t| {
                let lhs = s.hp[s.n].powi(2).mul(&s.phi_pair(&t.powi(3)));
                Self::le(&lhs, &t.mul(&s.two_pow(s.n as i64)).div(&s.prod_q))
            }),
            ("critpr5", |s, t| {
                let lhs = s.hp[s.n].mul_u64(4).mul(&s.phi_pair(&t.powi(2)));
                Self::le(&lhs, &t.mul(&s.two_pow(s.n as i64)))
            }),
            ("critpr6", |s, t| {
                let lhs = s.a.mul(&s.hp[s.n]).mul(&s.phi_pair(t));
                Self::le(&lhs, &t.mul(&s.two_pow(s.n as i64 + 1)))
            }),
            ("critpr7", |s, t| {
                let pair = s.phi_pair(t);
                let rhs = t.mul(&s.two_pow(s.n as i64 + 2));
                (1..=s.n).all(|l| Self::le(&s.big_h[l].mul(&s.hp[l - 1]).mul(&pair), &rhs))
            }),
            ("critpr8", |s, t| {
                let pair = s.phi_pair(t);
                let rhs = t.mul(&s.two_pow(s.n as i64)).div(&s.prod_q);
                (0..=s.n).all(|l| Self::le(&s.hp[l].mul(&pair), &rhs))
            }),
            ("monotone", |s, t| {
                let th = &s.phi.thresholds;
                let need = th[0].max(th[1].sqrt()).max(th[2].cbrt());
                Mag::from_f64(need).certainly_le(t)
            }),
        ]
    }
}

/// `κ = d·2^s` as an enclosure and a `Num`.
fn kappa_at(d: u64, s: u64) -> (Mag, Num) {
    let num = Num::dyadic(d, s);
    let mag = Mag::from_f64(d as f64).mul(&Mag::pow2(s as i64));
    (mag, num)
}

/// Least `κ` on the grid `d·2^s` (`d < 2^53`) with `pred(h κ)`, assuming
/// `pred` is monotone in `κ`.
fn least_kappa(h: &Mag, pred: impl Fn(&Mag) -> bool) -> Result<Num> {
    let ok = |d: u64, s: u64| pred(&h.mul(&kappa_at(d, s).0));
    if ok(1, 0) {
        return Ok(one());
    }
    // smallest exponent e with pred(h 2^e)
    let mut hi = 1u64;
    while !ok(1, hi) {
        hi = hi.checked_mul(2).filter(|&v| v < 1 << 50).ok_or_else(|| {
            Error::SearchExhausted("no κ satisfies the integrability conditions".into())
        })?;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(1, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let e = hi;
    // refine inside (2^{e-1}, 2^e]
    if e <= 53 {
        let (mut lo, mut hi) = (1u64 << (e - 1), 1u64 << e);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid, 0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return Ok(Num::from_u64(hi));
    }
    let s = e - 53;
    let (mut lo, mut hi) = (1u64 << 52, 1u64 << 53);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid, s) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(kappa_at(hi, s).1)
}

/// Schedule `cfg.steps` cutting parameters from `gen`.
pub fn schedule(gen: &mut FlexibleClassGen, phi: &PhiSpec, cfg: &ScheduleConfig) -> Result<Schedule> {
    if cfg.primes.len() < cfg.steps {
        return Err(Error::Input(format!(
            "{} steps need {} primes, have {}",
            cfg.steps,
            cfg.steps,
            cfg.primes.len()
        )));
    }
    if cfg.mode == Mode::Strict && !phi.is_certified() {
        return Err(Error::Input(format!(
            "strict mode needs a certified φ family, got {}",
            phi.label()
        )));
    }
    let c_mag = Mag::from_big(&gen.c);
    let cp = Num::from_big(gen.c_prime.clone());
    let mut prefix = Prefix::new();
    let mut qprime: Vec<Num> = Vec::new();
    let mut cols = Columns::default();
    let mut log = Vec::new();
    let mut t_diag = Vec::new();
    for n in 0..cfg.steps {
        let p = cfg.primes[n];
        let pn = Num::from_u64(p);
        let worst = qprime.iter().fold(pn.clone(), |a, b| a.max(b));
        let mut candidates: Vec<(String, Num)> = vec![("critpr1".into(), worst.add(&one()))];
        let mut kappa = candidates[0].1.clone();
        if cfg.mode == Mode::Strict {
            let mut hp = vec![Mag::ONE];
            let mut big_h = vec![Mag::ZERO];
            for q in &qprime {
                let h = hp.last().unwrap().mul(&q.mag());
                big_h.push(big_h.last().unwrap().add(&h));
                hp.push(h);
            }
            let prod_q = prefix.steps.iter().fold(Mag::ONE, |a, s| a.mul(&s.q.mag()));
            let ctx = StepCtx {
                n,
                phi,
                c: c_mag,
                a: big_h[n].add(&hp[n].mul_u64(p)),
                hp,
                big_h,
                prod_q,
            };
            let h = prefix.h[n].mag();
            for (name, pred) in StepCtx::criteria() {
                let k = least_kappa(&h, |t| pred(&ctx, t))?;
                kappa = kappa.max(&k);
                candidates.push((name.to_string(), k));
            }
            candidates.push(("critpr3".into(), pn.add(&one()).add(&cp.mul(&prefix.h[n]))));
            for (k, s) in prefix.steps.iter().enumerate() {
                let f = cp.mul(&Num::dyadic(1, (n - k) as u64)).mul(&s.q);
                candidates.push((format!("critpr10[k={k}]"), f));
            }
        } else if let Some(&f) = cfg.floors.get(n) {
            candidates.push(("user".into(), Num::from_u64(f)));
        }
        let floor = candidates.iter().fold(Num::from_u64(0), |a, (_, v)| a.max(v));
        let binding = candidates
            .iter()
            .fold((Wide::ZERO, ""), |best, (name, v)| {
                let lo = v.mag().lo;
                if lo > best.0 {
                    (lo, name.as_str())
                } else {
                    best
                }
            })
            .1
            .to_string();
        let floor = super::round_up(&floor).add(&Num::from_u64(cfg.bumps.get(n).copied().unwrap_or(0)));
        let step = gen.extend(&prefix, &floor)?;
        if floor.le(&step.q) != Some(true) {
            return Err(Error::Invariant(format!(
                "{} emitted q_{n} = {} below the floor {}",
                gen.label(),
                step.q.render(),
                floor.render()
            )));
        }
        let q = step.q.clone();
        let sigma = step.total.clone();
        prefix.push(step);
        let (qp, td) = cols.advance(n + 1, &q, &sigma, &qprime, p, cfg.rule)?;
        t_diag.push(td);
        log.push(KappaEntry {
            n,
            kappa: kappa.render(),
            thresholds: candidates.iter().map(|(k, v)| (k.clone(), v.render())).collect(),
            floor: floor.render(),
            binding,
            q: q.render(),
            qprime: qp.render(),
        });
        qprime.push(qp);
    }
    Ok(Schedule {
        class: gen.label(),
        mode: cfg.mode,
        phi: phi.label(),
        c: gen.c.clone(),
        c_prime: gen.c_prime.clone(),
        primes: cfg.primes[..cfg.steps].to_vec(),
        rule: cfg.rule,
        prefix,
        qprime,
        t_diag,
        kappa_log: log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{default_primes, recurrence_tables};

    #[test]
    fn relaxed_odometer_is_small_and_matches_recurrences() {
        let mut g = FlexibleClassGen::odometer();
        let mut cfg = ScheduleConfig::new(5, Mode::Relaxed, default_primes(5));
        cfg.floors = vec![4, 4, 4, 4, 4];
        let s = schedule(&mut g, &PhiSpec::quarter(), &cfg).unwrap();
        let seq = s.prefix.param_seq().unwrap();
        assert!(seq.entries().iter().all(|e| e.q <= 12));
        let tables = recurrence_tables(&s.summaries().unwrap(), &s.primes, 5, 5, cfg.rule).unwrap();
        let expect: Vec<Num> = tables.qprime.iter().cloned().map(Num::Exact).collect();
        assert_eq!(s.qprime, expect);
        assert!(s.qprime_envelope().iter().all(QPrimeEnvelope::passed));
    }

    #[test]
    fn strict_chacon_exact_prefix_matches_recurrences() {
        let mut g = FlexibleClassGen::chacon();
        let cfg = ScheduleConfig::new(3, Mode::Strict, default_primes(3));
        let s = schedule(&mut g, &PhiSpec::quarter(), &cfg).unwrap();
        let sums = s.summaries().unwrap();
        let tables = recurrence_tables(&sums, &s.primes, 3, 3, cfg.rule).unwrap();
        let expect: Vec<Num> = tables.qprime.iter().cloned().map(Num::Exact).collect();
        assert_eq!(s.qprime, expect);
        for env in s.qprime_envelope() {
            assert!(env.passed(), "{env:?}");
        }
    }

    #[test]
    fn strict_odometer_reaches_depth_nine() {
        let mut g = FlexibleClassGen::odometer();
        let cfg = ScheduleConfig::new(10, Mode::Strict, default_primes(10));
        let s = schedule(&mut g, &PhiSpec::quarter(), &cfg).unwrap();
        assert_eq!(s.len(), 10);
        // superexponential growth: log h_{n+1} is roughly 12 log h_n
        let l = |n: usize| s.prefix.h[n].mag().hi.log2();
        assert!(l(5) > 10.0 * l(4));
        for env in s.qprime_envelope() {
            assert!(env.passed(), "{env:?}");
        }
        for e in &s.kappa_log {
            assert!(!e.binding.is_empty());
        }
    }

    #[test]
    fn strict_kappa_is_least_on_its_grid() {
        // at the chosen κ every criterion holds; at κ - 1 some fails
        let mut g = FlexibleClassGen::odometer();
        let cfg = ScheduleConfig::new(2, Mode::Strict, default_primes(2));
        let s = schedule(&mut g, &PhiSpec::quarter(), &cfg).unwrap();
        let k0: u64 = s.kappa_log[0].kappa.parse().unwrap();
        assert!(k0 > 2);
        let q0 = s.prefix.steps[0].q_u64().unwrap();
        assert!(q0 >= k0);
    }
}
