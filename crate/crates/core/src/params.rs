//! Cutting-and-stacking parameters, their derived height/spacer sequences, the
//! truncated measure model, CSP/BSP classification and step skipping.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{big_to_ratio, ratio_from_big};

/// One cutting-and-stacking step: cut into `q` columns, insert `spacers[i]`
/// spacer levels before column `i` (and `spacers[q]` on top).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutSpacParam {
    pub q: u64,
    pub spacers: Vec<u64>,
}

impl CutSpacParam {
    pub fn new(q: u64, spacers: Vec<u64>) -> Result<Self> {
        let p = CutSpacParam { q, spacers };
        p.validate(0)?;
        Ok(p)
    }

    pub fn odometer(q: u64) -> Self {
        CutSpacParam {
            q,
            spacers: vec![0; q as usize + 1],
        }
    }

    pub fn chacon() -> Self {
        CutSpacParam {
            q: 3,
            spacers: vec![0, 0, 1, 0],
        }
    }

    pub fn validate(&self, step: usize) -> Result<()> {
        if self.q < 2 {
            return Err(Error::InvalidParam {
                step,
                reason: format!("cutting parameter q = {} < 2", self.q),
            });
        }
        self.validate_arity(step)
    }

    fn validate_arity(&self, step: usize) -> Result<()> {
        if self.spacers.len() as u64 != self.q + 1 {
            return Err(Error::InvalidParam {
                step,
                reason: format!(
                    "expected {} spacer entries, found {}",
                    self.q + 1,
                    self.spacers.len()
                ),
            });
        }
        Ok(())
    }

    /// Total number of spacers added at this step.
    pub fn sigma(&self) -> BigUint {
        self.spacers.iter().map(|&s| BigUint::from(s)).sum()
    }

    pub fn max_spacer(&self) -> u64 {
        self.spacers.iter().copied().max().unwrap_or(0)
    }

    pub fn summary(&self) -> StepSummary {
        let inner_max = if self.q >= 2 {
            self.spacers[1..self.q as usize].iter().copied().max().unwrap_or(0)
        } else {
            0
        };
        StepSummary {
            q: BigUint::from(self.q),
            total: self.sigma(),
            first: BigUint::from(self.spacers[0]),
            last: BigUint::from(*self.spacers.last().unwrap_or(&0)),
            inner_max: BigUint::from(inner_max),
        }
    }
}

/// Step data without the explicit spacer vector: enough for heights, spacer
/// maxima, the recurrences and the bounds, at any scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSummary {
    #[serde(with = "crate::rational::big_serde")]
    pub q: BigUint,
    #[serde(with = "crate::rational::big_serde")]
    pub total: BigUint,
    #[serde(with = "crate::rational::big_serde")]
    pub first: BigUint,
    #[serde(with = "crate::rational::big_serde")]
    pub last: BigUint,
    #[serde(with = "crate::rational::big_serde")]
    pub inner_max: BigUint,
}

impl StepSummary {
    pub fn max_spacer(&self) -> BigUint {
        self.first
            .clone()
            .max(self.last.clone())
            .max(self.inner_max.clone())
    }

    pub fn is_bounded_form(&self) -> bool {
        self.first.is_zero() && self.last.is_zero()
    }

    /// Summary of composing `self` (stage n to n+1) with `next` (n+1 to n+2).
    pub fn compose(&self, next: &StepSummary) -> StepSummary {
        let joint = &self.last + &self.first;
        let across = if next.q > BigUint::one() {
            &joint + &next.inner_max
        } else {
            BigUint::zero()
        };
        let inner_max = if self.q > BigUint::one() {
            self.inner_max.clone().max(across)
        } else {
            across
        };
        StepSummary {
            q: &self.q * &next.q,
            total: &next.q * &self.total + &next.total,
            first: &next.first + &self.first,
            last: &self.last + &next.last,
            inner_max,
        }
    }
}

/// Heights `h_0..h_N`, spacer totals `σ_0..σ_{N-1}` and running spacer maxima
/// `Z_0..Z_{N-1}`.
pub fn derive_sequences(entries: &[CutSpacParam]) -> Result<(Vec<BigUint>, Vec<BigUint>, Vec<BigUint>)> {
    for (i, e) in entries.iter().enumerate() {
        e.validate(i)?;
    }
    let summaries: Vec<StepSummary> = entries.iter().map(CutSpacParam::summary).collect();
    Ok(derive_from_summaries(&summaries))
}

pub fn derive_from_summaries(steps: &[StepSummary]) -> (Vec<BigUint>, Vec<BigUint>, Vec<BigUint>) {
    let mut h = Vec::with_capacity(steps.len() + 1);
    let mut sigma = Vec::with_capacity(steps.len());
    let mut z = Vec::with_capacity(steps.len());
    h.push(BigUint::one());
    let mut zmax = BigUint::zero();
    for s in steps {
        let next = &s.q * h.last().unwrap() + &s.total;
        h.push(next);
        sigma.push(s.total.clone());
        zmax = zmax.max(s.max_spacer());
        z.push(zmax.clone());
    }
    (h, sigma, z)
}

/// A finite parameter prefix with its derived sequences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSeq {
    entries: Vec<CutSpacParam>,
    heights: Vec<BigUint>,
    sigma: Vec<BigUint>,
    zmax: Vec<BigUint>,
}

impl ParamSeq {
    pub fn new(entries: Vec<CutSpacParam>) -> Result<Self> {
        let (heights, sigma, zmax) = derive_sequences(&entries)?;
        Ok(ParamSeq {
            entries,
            heights,
            sigma,
            zmax,
        })
    }

    pub fn odometer(qs: &[u64]) -> Self {
        ParamSeq::new(qs.iter().map(|&q| CutSpacParam::odometer(q)).collect())
            .expect("odometer parameters are valid")
    }

    pub fn chacon(steps: usize) -> Self {
        ParamSeq::new(vec![CutSpacParam::chacon(); steps]).expect("Chacon parameters are valid")
    }

    pub fn entries(&self) -> &[CutSpacParam] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `h_0..h_N`.
    pub fn heights(&self) -> &[BigUint] {
        &self.heights
    }

    pub fn height(&self, n: usize) -> &BigUint {
        &self.heights[n]
    }

    pub fn sigma(&self) -> &[BigUint] {
        &self.sigma
    }

    pub fn zmax(&self) -> &[BigUint] {
        &self.zmax
    }

    pub fn q(&self, n: usize) -> u64 {
        self.entries[n].q
    }

    pub fn summaries(&self) -> Vec<StepSummary> {
        self.entries.iter().map(CutSpacParam::summary).collect()
    }

    pub fn truncated(&self, len: usize) -> ParamSeq {
        ParamSeq::new(self.entries[..len.min(self.len())].to_vec()).expect("prefix of valid params")
    }

    /// Heights as machine integers, when they fit.
    pub fn heights_u64(&self) -> Option<Vec<u64>> {
        self.heights.iter().map(|h| u64::try_from(h).ok()).collect()
    }

    pub fn measure(&self) -> MeasureModel {
        MeasureModel::truncated(&self.summaries())
    }
}

/// How the unknown tail of a finite prefix is controlled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TailAssumption {
    None,
    /// Every future step adds at most this many spacers.
    SpacersAtMost(BigUint),
    /// Scheduler guarantee: `σ_n ≤ C' q_n h_{n-1}` and `q_n ≥ C' 2^{n-k} q_k`.
    SchedulerGrowth { c_prime: BigUint },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FVerdict {
    ConvergedBound { tail_bound: BigRational },
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionF {
    pub partial_sum: BigRational,
    pub verdict: FVerdict,
}

/// Partial sum of `σ_n / h_{n+1}` for `n < horizon`, with a certified tail
/// bound when the caller supplies a tail assumption.
pub fn check_condition_f(seq: &ParamSeq, horizon: usize, tail: &TailAssumption) -> Result<ConditionF> {
    if horizon > seq.len() {
        return Err(Error::Input(format!(
            "horizon {horizon} exceeds prefix length {}",
            seq.len()
        )));
    }
    let mut sum = BigRational::zero();
    for n in 0..horizon {
        sum += ratio_from_big(&seq.sigma[n], &seq.heights[n + 1]);
    }
    let h = &seq.heights[horizon];
    let verdict = match tail {
        TailAssumption::None => FVerdict::Inconclusive,
        // h_{k+1} >= 2^{k+1-horizon} h_horizon, so the tail is at most B/h_horizon.
        TailAssumption::SpacersAtMost(b) => FVerdict::ConvergedBound {
            tail_bound: ratio_from_big(b, h),
        },
        TailAssumption::SchedulerGrowth { c_prime } => {
            if horizon == 0 {
                FVerdict::Inconclusive
            } else {
                // σ_k/h_{k+1} <= C'/q_{k-1}; q_{k-1} >= 2^{k-horizon} q_{horizon-1} for k > horizon.
                let q_last = BigUint::from(seq.q(horizon - 1));
                FVerdict::ConvergedBound {
                    tail_bound: ratio_from_big(&(c_prime + BigUint::one()), &q_last),
                }
            }
        }
    };
    Ok(ConditionF {
        partial_sum: sum,
        verdict,
    })
}

/// `(1 + Σ_{n<N} σ_n/(q_0…q_n))^{-1}` for the truncated sequence.
pub fn m0_truncated(entries: &[CutSpacParam]) -> Result<BigRational> {
    for (i, e) in entries.iter().enumerate() {
        e.validate(i)?;
    }
    let steps: Vec<StepSummary> = entries.iter().map(CutSpacParam::summary).collect();
    Ok(MeasureModel::truncated(&steps).m0)
}

/// Truncated normalization: the tail beyond the prefix adds no spacers, so the
/// final tower exhausts the space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureModel {
    pub m0: BigRational,
    /// `q_0…q_{n-1}` for `n = 0..=N`.
    products: Vec<BigUint>,
    heights: Vec<BigUint>,
    /// `Σ_{k≥n, k<N} σ_k/(q_0…q_k)` for `n = 0..=N`.
    tail_sums: Vec<BigRational>,
}

impl MeasureModel {
    pub fn truncated(steps: &[StepSummary]) -> MeasureModel {
        let (heights, sigma, _) = derive_from_summaries(steps);
        let mut products = vec![BigUint::one()];
        for s in steps {
            let next = products.last().unwrap() * &s.q;
            products.push(next);
        }
        let n = steps.len();
        let mut tail_sums = vec![BigRational::zero(); n + 1];
        for k in (0..n).rev() {
            tail_sums[k] = &tail_sums[k + 1] + ratio_from_big(&sigma[k], &products[k + 1]);
        }
        let m0 = (BigRational::one() + &tail_sums[0]).recip();
        MeasureModel {
            m0,
            products,
            heights,
            tail_sums,
        }
    }

    pub fn stages(&self) -> usize {
        self.products.len() - 1
    }

    /// Measure of a single stage-n level: `M0/(q_0…q_{n-1})`.
    pub fn level_measure(&self, n: usize) -> BigRational {
        &self.m0 / big_to_ratio(&self.products[n])
    }

    /// `μ(X_n)`.
    pub fn tower_measure(&self, n: usize) -> BigRational {
        self.level_measure(n) * big_to_ratio(&self.heights[n])
    }

    /// `ε_n = μ(X \ X_n)` under the truncated normalization.
    pub fn epsilon(&self, n: usize) -> BigRational {
        &self.m0 * &self.tail_sums[n]
    }

    /// Partial spacer sum `Σ_{k<N} σ_k/(q_0…q_k)`; equals `1/M0 - 1`.
    pub fn spacer_series(&self) -> &BigRational {
        &self.tail_sums[0]
    }

    pub fn product(&self, n: usize) -> &BigUint {
        &self.products[n]
    }

    /// Certified enclosure of the true `M0` for any continuation obeying the
    /// scheduler guarantee with constant `C'` (requires `N ≥ 1`).
    pub fn m0_interval(&self, c_prime: &BigUint) -> (BigRational, BigRational) {
        let a = self.tail_rate(c_prime);
        let lo = (BigRational::one() - a) * &self.m0;
        (lo.max(BigRational::zero()), self.m0.clone())
    }

    /// Certified enclosure of the true `ε_n` under the scheduler guarantee.
    pub fn epsilon_interval(&self, n: usize, c_prime: &BigUint) -> (BigRational, BigRational) {
        let (m0_lo, m0_hi) = self.m0_interval(c_prime);
        let lo = m0_lo * &self.tail_sums[n];
        let hi = m0_hi * &self.tail_sums[n] + self.tail_rate(c_prime);
        (lo, hi)
    }

    /// `(C'+1)/q_{N-1}`: bound on `M0 Σ_{k≥N} σ_k/(q_0…q_k)`.
    fn tail_rate(&self, c_prime: &BigUint) -> BigRational {
        let n = self.stages();
        assert!(n >= 1, "tail bound needs a non-empty prefix");
        let q_last = &self.products[n] / &self.products[n - 1];
        ratio_from_big(&(c_prime + BigUint::one()), &q_last)
    }
}

/// Least witnesses for the controlled/bounded spacing predicates on a prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpacingClass {
    /// Least integer `C` with `Z_n ≤ C h_n` for every step of the prefix.
    #[serde(with = "crate::rational::big_serde")]
    pub csp: BigUint,
    /// `Some(max Z)` when every step has zero first and last spacers.
    pub bsp: Option<String>,
}

impl SpacingClass {
    pub fn is_bsp(&self) -> bool {
        self.bsp.is_some()
    }

    pub fn bsp_constant(&self) -> Option<BigUint> {
        self.bsp.as_ref().map(|s| s.parse().expect("decimal"))
    }
}

pub fn csp_bsp_classify(seq: &ParamSeq) -> SpacingClass {
    classify_summaries(&seq.summaries())
}

pub fn classify_summaries(steps: &[StepSummary]) -> SpacingClass {
    let (h, _, z) = derive_from_summaries(steps);
    let mut csp = BigUint::zero();
    for n in 0..steps.len() {
        let (c, r) = z[n].div_rem(&h[n]);
        let c = if r.is_zero() { c } else { c + BigUint::one() };
        csp = csp.max(c);
    }
    let bsp = steps
        .iter()
        .all(StepSummary::is_bounded_form)
        .then(|| z.last().cloned().unwrap_or_default().to_string());
    SpacingClass { csp, bsp }
}

/// Compose two consecutive steps into one. Accepts `q = 1` inputs so that
/// collapsed prefixes (rotation coefficients equal to one) can be handled.
pub fn compose_pair(a: &CutSpacParam, b: &CutSpacParam) -> CutSpacParam {
    let qa = a.q as usize;
    let qb = b.q as usize;
    let mut spacers = Vec::with_capacity(qa * qb + 1);
    for j in 0..qb {
        let lead = if j == 0 { b.spacers[0] } else { a.spacers[qa] + b.spacers[j] };
        spacers.push(lead + a.spacers[0]);
        spacers.extend_from_slice(&a.spacers[1..qa]);
    }
    spacers.push(a.spacers[qa] + b.spacers[qb]);
    CutSpacParam {
        q: a.q * b.q,
        spacers,
    }
}

/// Compose a run of consecutive steps.
pub fn compose_run(run: &[CutSpacParam]) -> CutSpacParam {
    let mut acc = run[0].clone();
    for next in &run[1..] {
        acc = compose_pair(&acc, next);
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkipResult {
    pub seq: ParamSeq,
    /// Set when an input step has non-zero first or last spacers: composed
    /// spacers may then accumulate beyond the original maxima.
    pub accumulation_possible: bool,
}

/// Keep the towers at `keep[0] = 0 < keep[1] < …`; each kept stage is joined
/// to the next kept one (the last to the end of the prefix).
pub fn skip_steps(seq: &ParamSeq, keep: &[usize]) -> Result<SkipResult> {
    let entries = seq.entries();
    if keep.is_empty() {
        return Err(Error::Input("empty keep list".into()));
    }
    if keep[0] != 0 {
        return Err(Error::Input("keep list must start at 0".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Input("keep indices must be strictly increasing".into()));
    }
    if *keep.last().unwrap() >= entries.len() {
        return Err(Error::Input(format!(
            "keep index {} out of range (prefix length {})",
            keep.last().unwrap(),
            entries.len()
        )));
    }
    let mut out = Vec::with_capacity(keep.len());
    for (i, &start) in keep.iter().enumerate() {
        let end = keep.get(i + 1).copied().unwrap_or(entries.len());
        out.push(compose_run(&entries[start..end]));
    }
    let accumulation_possible = entries
        .iter()
        .any(|e| e.spacers[0] != 0 || *e.spacers.last().unwrap() != 0);
    Ok(SkipResult {
        seq: ParamSeq::new(out)?,
        accumulation_possible,
    })
}

/// Convert a big unsigned integer to a signed one.
pub fn signed(v: &BigUint) -> BigInt {
    BigInt::from(v.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn fig3_height() {
        // a tower of height 5 cut in three with spacers (1,2,0,1)
        let p = CutSpacParam::new(3, vec![1, 2, 0, 1]).unwrap();
        let h = BigUint::from(p.q) * BigUint::from(5u32) + p.sigma();
        assert_eq!(h, BigUint::from(19u32));
    }

    #[test]
    fn chacon_heights() {
        let s = ParamSeq::chacon(3);
        let h: Vec<u64> = s.heights_u64().unwrap();
        assert_eq!(h, vec![1, 4, 13, 40]);
        assert!(s.zmax().iter().all(|z| *z == BigUint::one()));
    }

    #[test]
    fn odometer_heights() {
        let s = ParamSeq::odometer(&[2, 2, 2, 2]);
        assert_eq!(s.heights_u64().unwrap(), vec![1, 2, 4, 8, 16]);
        assert!(s.zmax().iter().all(Zero::is_zero));
    }

    #[test]
    fn rejects_bad_arity_and_small_q() {
        assert!(CutSpacParam::new(1, vec![0, 0]).is_err());
        assert!(CutSpacParam::new(3, vec![0, 0, 0]).is_err());
    }

    #[test]
    fn condition_f_chacon() {
        let s = ParamSeq::chacon(3);
        let f = check_condition_f(&s, 3, &TailAssumption::None).unwrap();
        assert_eq!(f.partial_sum, ratio(1, 4) + ratio(1, 13) + ratio(1, 40));
        assert_eq!(f.verdict, FVerdict::Inconclusive);
    }

    #[test]
    fn condition_f_geometric_family() {
        let entries: Vec<CutSpacParam> = (0..5)
            .map(|n| {
                let q = 4u64.pow(n + 1);
                let mut sp = vec![0; q as usize + 1];
                sp[1] = 1;
                CutSpacParam::new(q, sp).unwrap()
            })
            .collect();
        let s = ParamSeq::new(entries).unwrap();
        let f = check_condition_f(&s, 5, &TailAssumption::SpacersAtMost(BigUint::one())).unwrap();
        let mut direct = BigRational::zero();
        for n in 0..5 {
            direct += ratio_from_big(&BigUint::one(), s.height(n + 1));
        }
        assert_eq!(f.partial_sum, direct);
        match f.verdict {
            FVerdict::ConvergedBound { tail_bound } => {
                assert_eq!(tail_bound, ratio_from_big(&BigUint::one(), s.height(5)))
            }
            FVerdict::Inconclusive => panic!("expected a certified tail"),
        }
    }

    #[test]
    fn m0_examples() {
        assert_eq!(m0_truncated(&vec![CutSpacParam::odometer(3); 4]).unwrap(), ratio(1, 1));
        let chacon5 = m0_truncated(&vec![CutSpacParam::chacon(); 5]).unwrap();
        let mut s = BigRational::zero();
        for n in 0..5u32 {
            s += ratio(1, 3i64.pow(n + 1));
        }
        assert_eq!(chacon5, (BigRational::one() + s).recip());
        assert!(chacon5 > ratio(2, 3));
        let fig3 = m0_truncated(&[CutSpacParam::new(3, vec![1, 2, 0, 1]).unwrap()]).unwrap();
        assert_eq!(fig3, ratio(3, 7));
    }

    #[test]
    fn measure_model_identities() {
        let s = ParamSeq::chacon(4);
        let mm = s.measure();
        for n in 0..4 {
            assert_eq!(
                mm.level_measure(n + 1) * BigRational::from_integer(s.q(n).into()),
                mm.level_measure(n)
            );
        }
        assert_eq!(mm.spacer_series(), &(mm.m0.recip() - BigRational::one()));
        assert_eq!(mm.tower_measure(4), BigRational::one());
        assert_eq!(mm.epsilon(4), BigRational::zero());
    }

    #[test]
    fn classify_examples() {
        let c = csp_bsp_classify(&ParamSeq::chacon(3));
        assert_eq!(c.bsp_constant(), Some(BigUint::one()));
        assert_eq!(c.csp, BigUint::one());
        let o = csp_bsp_classify(&ParamSeq::odometer(&[2, 3]));
        assert_eq!(o.bsp_constant(), Some(BigUint::zero()));
        // rotation-style: last spacer equals the previous height
        let entries = vec![
            CutSpacParam::new(2, vec![0, 0, 0]).unwrap(),
            CutSpacParam::new(2, vec![0, 0, 1]).unwrap(),
            CutSpacParam::new(3, vec![0, 0, 0, 2]).unwrap(),
        ];
        let r = csp_bsp_classify(&ParamSeq::new(entries).unwrap());
        assert!(!r.is_bsp());
        assert_eq!(r.csp, BigUint::one());
    }

    #[test]
    fn skip_identity_and_pairs() {
        let s = ParamSeq::chacon(4);
        let id = skip_steps(&s, &[0, 1, 2, 3]).unwrap();
        assert_eq!(id.seq, s);
        let two = ParamSeq::odometer(&[2, 2]);
        let composed = skip_steps(&two, &[0]).unwrap().seq;
        assert_eq!(composed.entries()[0], CutSpacParam::odometer(4));
    }

    #[test]
    fn skip_keeps_heights_and_bsp_constant() {
        let s = ParamSeq::chacon(6);
        let out = skip_steps(&s, &[0, 2, 4]).unwrap();
        assert!(!out.accumulation_possible);
        let h = out.seq.heights();
        assert_eq!(h[1], s.heights()[2]);
        assert_eq!(h[2], s.heights()[4]);
        assert_eq!(h[3], s.heights()[6]);
        assert_eq!(csp_bsp_classify(&out.seq).bsp_constant(), Some(BigUint::one()));
    }

    #[test]
    fn skip_two_step_layout() {
        // inner spacers of the first step repeat in each block; the outer
        // spacers of the second step sit between blocks
        let a = CutSpacParam::new(2, vec![0, 1, 0]).unwrap();
        let b = CutSpacParam::new(2, vec![0, 2, 0]).unwrap();
        let c = compose_pair(&a, &b);
        assert_eq!(c.q, 4);
        assert_eq!(c.spacers, vec![0, 1, 2, 1, 0]);
    }

    #[test]
    fn summary_compose_matches_explicit() {
        let a = CutSpacParam::new(3, vec![1, 2, 0, 1]).unwrap();
        let b = CutSpacParam::new(2, vec![2, 5, 3]).unwrap();
        assert_eq!(a.summary().compose(&b.summary()), compose_pair(&a, &b).summary());
    }
}
