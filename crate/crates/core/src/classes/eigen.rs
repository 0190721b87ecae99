//! Parameters for rank-one systems with a prescribed eigenvalue
//! `λ = e^{2πiθ}`, with every comparison decided by rational enclosures.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::rotation::CfSource;
use crate::error::{Error, Result};
use crate::params::CutSpacParam;
use crate::rational::ratio;

/// `θ` as a coefficient stream (refinable) or a fixed enclosure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Theta {
    Cf(CfSource),
    Interval(BigRational, BigRational),
}

fn pi_lo() -> BigRational {
    ratio(314_159_265_358_979i64, 100_000_000_000_000i64)
}

fn pi_hi() -> BigRational {
    ratio(314_159_265_358_980i64, 100_000_000_000_000i64)
}

/// Enclosure of `‖x‖` (distance to the nearest integer) for `x ∈ [a, b]`.
pub fn dist_interval(a: &BigRational, b: &BigRational) -> (BigRational, BigRational) {
    let d = |x: &BigRational| {
        let f = x - x.floor();
        let g = BigRational::one() - &f;
        if f < g {
            f
        } else {
            g
        }
    };
    let (fa, fb) = (a.floor(), b.floor());
    let half = ratio(1, 2);
    if fa != fb || a.is_integer() {
        // an integer lies in [a, b]
        let k = if a.is_integer() { a.clone() } else { fb.clone() };
        let hi = (&k - a).max(b - &k).min(half);
        return (BigRational::zero(), hi);
    }
    let (da, db) = (d(a), d(b));
    let mid = &fa + &half;
    let hi = if *a <= mid && mid <= *b { half } else { da.clone().max(db.clone()) };
    (da.min(db), hi)
}

/// `δ = |1 - λ^j|` with the minimizing `j ≤ i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaChoice {
    pub i: usize,
    pub j: u64,
    #[serde(with = "crate::rational::ratio_serde")]
    pub delta_lo: BigRational,
    #[serde(with = "crate::rational::ratio_serde")]
    pub delta_hi: BigRational,
}

#[derive(Clone, Debug)]
pub struct EigenvalueState {
    pub theta: Theta,
    count: usize,
    lo: BigRational,
    hi: BigRational,
    deltas: BTreeMap<usize, DeltaChoice>,
    /// `ℓ^{(n)}_m` sequences emitted so far.
    pub ells: BTreeMap<usize, Vec<u64>>,
}

/// Largest refinement of a coefficient stream before giving up.
const MAX_COEFFS: usize = 4096;

impl EigenvalueState {
    pub fn new(theta: Theta) -> Result<EigenvalueState> {
        let (count, lo, hi) = match &theta {
            Theta::Cf(src) => {
                let count = 8;
                let (lo, hi) = src.enclosure(count);
                (count, lo, hi)
            }
            Theta::Interval(lo, hi) => {
                if lo > hi {
                    return Err(Error::Input("θ enclosure has lo > hi".into()));
                }
                (0, lo.clone(), hi.clone())
            }
        };
        if lo == hi {
            return Err(Error::Input("θ enclosure must have positive width (θ irrational)".into()));
        }
        Ok(EigenvalueState {
            theta,
            count,
            lo,
            hi,
            deltas: BTreeMap::new(),
            ells: BTreeMap::new(),
        })
    }

    fn refine(&mut self) -> bool {
        match &self.theta {
            Theta::Cf(src) if src.is_infinite() && self.count < MAX_COEFFS => {
                self.count *= 2;
                (self.lo, self.hi) = src.enclosure(self.count);
                true
            }
            _ => false,
        }
    }

    /// `‖eθ‖` enclosed to width below `tol`, refining `θ` as needed; returns
    /// the best available enclosure when no refinement is possible.
    pub fn dist(&mut self, e: &BigInt, tol: &BigRational) -> (BigRational, BigRational) {
        loop {
            let ef = BigRational::from_integer(e.clone());
            let (a, b) = (&ef * &self.lo, &ef * &self.hi);
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            let (dl, dh) = dist_interval(&a, &b);
            if &dh - &dl < *tol || !self.refine() {
                return (dl, dh);
            }
        }
    }

    /// Is `‖eθ‖ < bound` certified?
    fn dist_below(&mut self, e: &BigInt, bound: &BigRational) -> bool {
        let mut tol = bound / BigInt::from(64);
        loop {
            let (dl, dh) = self.dist(e, &tol);
            if dh < *bound {
                return true;
            }
            if dl >= *bound {
                return false;
            }
            let before = self.count;
            tol /= BigInt::from(64);
            if !self.refine() && before == self.count {
                return false;
            }
        }
    }

    /// `j_i` and `δ_i`: brute-force minimization over `1 ≤ j ≤ i`, certified
    /// `δ_i < 2π/i`.
    pub fn delta(&mut self, i: usize) -> Result<DeltaChoice> {
        if let Some(d) = self.deltas.get(&i) {
            return Ok(d.clone());
        }
        let tol = ratio(1, 1000 * (i as i64 + 1) * (i as i64 + 1));
        let mut best: Option<(u64, BigRational, BigRational)> = None;
        for j in 1..=i as u64 {
            let (dl, dh) = self.dist(&BigInt::from(j), &tol);
            if best.as_ref().is_none_or(|(_, _, bh)| dh < *bh) {
                best = Some((j, dl, dh));
            }
        }
        let (j, dl, dh) = best.expect("i >= 1");
        // 2 sin(π d) ∈ [2(x - x³/6), 2π d] with x = π d
        let x = pi_lo() * &dl;
        let lo = (&x - &x * &x * &x / BigInt::from(6)) * BigInt::from(2);
        let hi = pi_hi() * &dh * BigInt::from(2);
        let bound = pi_lo() * BigInt::from(2) / BigInt::from(i as u64);
        if hi >= bound {
            return Err(Error::SearchExhausted(format!(
                "cannot certify |1 - λ^j| < 2π/{i} for any j ≤ {i} at the available precision"
            )));
        }
        let d = DeltaChoice {
            i,
            j,
            delta_lo: lo.max(BigRational::zero()),
            delta_hi: hi,
        };
        self.deltas.insert(i, d.clone());
        Ok(d)
    }

    /// `max(k^4/δ_{k²}, (k+1)^4/δ_{(k+1)²})` as a certified upper value.
    pub fn aux_threshold(&mut self, k: usize) -> Result<BigRational> {
        let mut worst = BigRational::zero();
        for a in [k, k + 1] {
            let d = self.delta(a * a)?;
            if d.delta_lo.is_zero() {
                return Err(Error::SearchExhausted(format!("δ_{} has no positive lower bound", a * a)));
            }
            let v = BigRational::from_integer(BigInt::from(a as u64).pow(4)) / &d.delta_lo;
            worst = worst.max(v);
        }
        Ok(worst)
    }
}

/// Cap on the cutting parameter an eigenvalue step will enumerate.
pub const EIGEN_Q_CAP: u64 = 1 << 20;

/// Step `n ≥ 1` given the current height `h_n`: greedy-minimal `ℓ^{(n)}_m`, then
/// the least `q_n ≥ q_min` restoring the auxiliary condition at `n + 1`.
pub fn eigenvalue_step(state: &mut EigenvalueState, n: usize, h_n: u64, q_min: u64) -> Result<CutSpacParam> {
    assert!(n >= 1);
    let need = state.aux_threshold(n)?;
    if BigRational::from_integer(BigInt::from(h_n)) <= need {
        return Err(Error::Input(format!(
            "h_{n} = {h_n} violates the auxiliary condition (needs > {need})"
        )));
    }
    let d = state.delta(n * n)?;
    let j = d.j;
    let l_cap = (pi_lo() * BigInt::from(2) / &d.delta_hi)
        .floor()
        .to_integer()
        .to_u64()
        .unwrap_or(u64::MAX);
    if l_cap == 0 {
        return Err(Error::SearchExhausted("ℓ bound 2π/δ is below 1".into()));
    }
    let target = state.aux_threshold(n + 1)?;
    let bound = ratio(1, (n * n) as i64);
    let mut ells: Vec<u64> = Vec::new();
    let mut sum: u64 = 0;
    let mut q = 2u64.max(q_min);
    loop {
        while (ells.len() as u64) < q - 1 {
            let m = ells.len() as u64 + 1;
            let mut found = None;
            for l in 1..=l_cap {
                let e = BigInt::from(m) * BigInt::from(h_n) + BigInt::from(sum + l) * BigInt::from(j);
                if state.dist_below(&e, &bound) {
                    found = Some(l);
                    break;
                }
            }
            let l = found.ok_or_else(|| {
                Error::SearchExhausted(format!(
                    "no ℓ ≤ {l_cap} satisfies the eigenvalue display at n = {n}, m = {m}"
                ))
            })?;
            ells.push(l);
            sum += l;
        }
        let h_next = BigInt::from(q) * BigInt::from(h_n) + BigInt::from(sum) * BigInt::from(j);
        if BigRational::from_integer(h_next) > target {
            break;
        }
        q += 1;
        if q > EIGEN_Q_CAP {
            return Err(Error::Unreachable(format!("eigenvalue step {n} needs q > {EIGEN_Q_CAP}")));
        }
    }
    let mut spacers = vec![0u64; q as usize + 1];
    for (m, &l) in ells.iter().enumerate() {
        spacers[m + 1] = l * j;
    }
    state.ells.insert(n, ells);
    CutSpacParam::new(q, spacers)
}

/// Step 0: zero spacers, `q_0 ≥ 3` large enough for the auxiliary condition at 1.
pub fn eigenvalue_first(state: &mut EigenvalueState, q_min: u64) -> Result<CutSpacParam> {
    let need = state.aux_threshold(1)?;
    let q = need.floor().to_integer().to_u64().unwrap_or(u64::MAX).saturating_add(1);
    let q = q.max(3).max(q_min);
    if q > EIGEN_Q_CAP {
        return Err(Error::Unreachable(format!("eigenvalue step 0 needs q > {EIGEN_Q_CAP}")));
    }
    CutSpacParam::new(q, vec![0; q as usize + 1])
}
