//! Extensions of a bounded-spacing system by composing consecutive steps of a
//! periodic base cycle until the cutting parameter clears a floor.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::{GenStep, MATERIALIZE_CAP};
use crate::error::{Error, Result};
use crate::mag::{Mag, Num, EXACT_BITS_CAP};
use crate::params::{compose_run, CutSpacParam, ParamSeq, StepSummary};

/// A BSP base sequence repeated forever, with a cursor at the next unused step.
#[derive(Clone, Debug, PartialEq)]
pub struct BspCycle {
    cycle: Vec<CutSpacParam>,
    cursor: usize,
}

impl BspCycle {
    pub fn new(cycle: Vec<CutSpacParam>) -> Result<BspCycle> {
        if cycle.is_empty() {
            return Err(Error::Input("empty BSP base".into()));
        }
        for (i, p) in cycle.iter().enumerate() {
            p.validate(i)?;
            if p.spacers[0] != 0 || *p.spacers.last().unwrap() != 0 {
                return Err(Error::Input(format!(
                    "base step {i} is not BSP: first and last spacers must vanish"
                )));
            }
        }
        Ok(BspCycle { cycle, cursor: 0 })
    }

    /// The BSP constant: the largest spacer of the base.
    pub fn constant(&self) -> u64 {
        self.cycle.iter().map(CutSpacParam::max_spacer).max().unwrap_or(0)
    }

    fn at(&self, k: usize) -> &CutSpacParam {
        &self.cycle[(self.cursor + k) % self.cycle.len()]
    }

    pub fn peek(&self, floor: &Num) -> Result<GenStep> {
        self.clone().advance(floor)
    }

    /// Compose the fewest consecutive steps whose cutting product is `≥ floor`.
    pub fn advance(&mut self, floor: &Num) -> Result<GenStep> {
        let len = self.cycle.len();
        if let Some(f) = floor.exact().and_then(|v| v.to_u64()).filter(|&f| f <= MATERIALIZE_CAP) {
            let mut q = 1u64;
            let mut k = 0;
            while q < f.max(2) {
                q *= self.at(k).q;
                k += 1;
            }
            let run: Vec<CutSpacParam> = (0..k).map(|i| self.at(i).clone()).collect();
            self.cursor = (self.cursor + k) % len;
            return Ok(GenStep::from_entry(compose_run(&run)));
        }
        let period = (0..len)
            .map(|i| self.at(i).summary())
            .reduce(|a, b| a.compose(&b))
            .unwrap();
        let pq = period.q.to_u64().expect("base cycle product fits u64");
        let log_q = (pq as f64).log2();
        let floor_bits = floor.mag().hi.log2();
        // whole periods strictly below the floor, then single steps
        let r = ((floor_bits / log_q).floor() as u64).saturating_sub(1);
        let exact = (r as f64 * log_q) + 64.0 < EXACT_BITS_CAP as f64;
        if exact {
            let f = floor.exact().cloned();
            let mut acc = periods_exact(&period, r);
            let below = |s: &StepSummary| match &f {
                Some(f) => s.q < *f,
                None => Num::from_big(s.q.clone()).le(floor) != Some(false),
            };
            while below(&compose_summary(&acc, &period)) {
                acc = compose_summary(&acc, &period);
            }
            let mut k = 0;
            while below(&acc) {
                acc = compose_summary(&acc, &self.at(k).summary());
                k += 1;
            }
            self.cursor = (self.cursor + k) % len;
            return Ok(GenStep::from_summary(&acc));
        }
        // enclosed regime: whole periods only, certified above the floor
        let qm = Mag::from_u64(pq);
        let mut r = r + 1;
        while qm.pow_u64(r).lo < floor.mag().hi {
            r += 1;
        }
        let q = qm.pow_u64(r);
        let t = Mag::from_big(&period.total);
        let total = t.mul(&q.sub(&Mag::ONE)).div(&Mag::from_u64(pq - 1));
        Ok(GenStep {
            q: Num::Approx(q),
            total: Num::Approx(total),
            first: Num::from_u64(0),
            last: Num::from_u64(0),
            inner_max: Num::from_big(period.inner_max.clone()),
            entry: None,
        })
    }
}

fn compose_summary(a: &StepSummary, b: &StepSummary) -> StepSummary {
    if a.q.is_one() {
        return b.clone();
    }
    a.compose(b)
}

/// `r` copies of a BSP period in closed form: `q = Q^r`, `σ = T(Q^r - 1)/(Q - 1)`.
pub fn periods_exact(period: &StepSummary, r: u64) -> StepSummary {
    if r == 0 {
        return StepSummary {
            q: BigUint::one(),
            total: BigUint::zero(),
            first: BigUint::zero(),
            last: BigUint::zero(),
            inner_max: BigUint::zero(),
        };
    }
    let q = period.q.pow(r as u32);
    let total = &period.total * (&q - 1u32) / (&period.q - 1u32);
    StepSummary {
        q,
        total,
        first: BigUint::zero(),
        last: BigUint::zero(),
        inner_max: period.inner_max.clone(),
    }
}

/// Single-step extension of `base` with cutting parameter `≥ min_q`,
/// composing consecutive steps of the base from its start.
pub fn gen_bsp_extension(base: &ParamSeq, min_q: u64) -> Result<CutSpacParam> {
    let class = crate::params::csp_bsp_classify(base);
    if !class.is_bsp() {
        return Err(Error::Input("base sequence is not BSP".into()));
    }
    let mut q = 1u64;
    let mut k = 0;
    while q < min_q.max(2) {
        let e = base.entries().get(k).ok_or_else(|| {
            Error::Unreachable(format!("base prefix too short to reach q ≥ {min_q}"))
        })?;
        q = q.saturating_mul(e.q);
        k += 1;
    }
    Ok(compose_run(&base.entries()[..k]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chacon_min_q_ten() {
        let base = ParamSeq::chacon(5);
        let p = gen_bsp_extension(&base, 10).unwrap();
        assert_eq!(p.q, 27);
        assert_eq!(p.spacers[0], 0);
        assert_eq!(*p.spacers.last().unwrap(), 0);
        assert!(p.max_spacer() <= 1);
        assert!(p.sigma() <= BigUint::from(p.q));
        // equals the composed step of the skipped sequence
        let skipped = crate::params::skip_steps(&base, &[0, 3]).unwrap();
        assert_eq!(skipped.seq.entries()[0], p);
    }

    #[test]
    fn single_step_unchanged() {
        let base = ParamSeq::chacon(2);
        assert_eq!(gen_bsp_extension(&base, 3).unwrap(), CutSpacParam::chacon());
    }

    #[test]
    fn non_bsp_rejected() {
        let base = ParamSeq::new(vec![CutSpacParam::new(2, vec![1, 0, 0]).unwrap()]).unwrap();
        assert!(gen_bsp_extension(&base, 4).is_err());
    }

    #[test]
    fn closed_form_matches_composition() {
        let p = CutSpacParam::new(2, vec![0, 3, 0]).unwrap();
        let q = CutSpacParam::chacon();
        let period = p.summary().compose(&q.summary());
        let run: Vec<CutSpacParam> = (0..4).flat_map(|_| [p.clone(), q.clone()]).collect();
        assert_eq!(periods_exact(&period, 4), compose_run(&run).summary());
    }

    #[test]
    fn large_floors_exact_and_enclosed() {
        let mut c = BspCycle::new(vec![CutSpacParam::chacon()]).unwrap();
        let floor = Num::from_big(BigUint::from(10u32).pow(40));
        let s = c.advance(&floor).unwrap();
        // least power of three above 10^40 is 3^84
        assert_eq!(s.q, Num::from_big(BigUint::from(3u32).pow(84)));
        assert_eq!(s.total, Num::from_big((BigUint::from(3u32).pow(84) - 1u32) / 2u32));
        let huge = Num::Approx(Mag::pow2(1 << 20));
        let s = c.advance(&huge).unwrap();
        assert!(huge.le(&s.q) == Some(true));
        assert!(s.total.le(&s.q) == Some(true));
    }
}
