//! Families of pairwise distinct rotation constructions indexed by bit
//! vectors: each bit raises one cutting parameter one above its floor.

use serde::Serialize;

use super::rotation::{series_diagnostic, SeriesVerdict};
use super::scheduler::{schedule, Schedule, ScheduleConfig};
use super::FlexibleClassGen;
use crate::error::{Error, Result};
use crate::mag::Num;
use crate::phi::PhiSpec;

#[derive(Clone, Debug)]
pub struct Branch {
    pub bits: Vec<bool>,
    pub schedule: Schedule,
}

impl Branch {
    pub fn coefficients(&self) -> Vec<Num> {
        self.schedule.prefix.steps.iter().map(|s| s.q.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchReport {
    pub branches: usize,
    pub injective: bool,
    /// Per branch: the tail series `Σ 1/(q_k q_{k+1})` converges.
    pub series_converges: Vec<bool>,
    /// Per branch: every odometer envelope and well-definedness check passes.
    pub scheduler_ok: Vec<bool>,
}

/// One rotation schedule per bit vector: `q_{i+1} = floor_{i+1} + ε_i`.
pub fn branch_family(
    head: &[u64],
    n0: usize,
    phi: &PhiSpec,
    base: &ScheduleConfig,
    bits: &[Vec<bool>],
) -> Result<Vec<Branch>> {
    bits.iter()
        .map(|eps| {
            if eps.len() + 1 > base.steps {
                return Err(Error::Input(format!(
                    "{} bits need at least {} steps",
                    eps.len(),
                    eps.len() + 1
                )));
            }
            let mut gen = FlexibleClassGen::rotation(head.to_vec(), n0)?;
            let mut cfg = base.clone();
            cfg.bumps = std::iter::once(0).chain(eps.iter().map(|&b| b as u64)).collect();
            let schedule = schedule(&mut gen, phi, &cfg)?;
            if let Some(n) = schedule.prefix.steps.iter().position(|s| !s.q.is_exact()) {
                return Err(Error::TooLarge(format!("branch coefficient q_{n}")));
            }
            Ok(Branch {
                bits: eps.clone(),
                schedule,
            })
        })
        .collect()
}

/// All `2^k` bit vectors of length `k`, in lexicographic order.
pub fn all_bits(k: usize) -> Vec<Vec<bool>> {
    (0..1u64 << k)
        .map(|v| (0..k).map(|i| v >> (k - 1 - i) & 1 == 1).collect())
        .collect()
}

fn converges(qs: &[Num]) -> bool {
    let small: Option<Vec<u64>> = qs
        .iter()
        .map(|q| q.exact().and_then(num_traits::ToPrimitive::to_u64))
        .collect();
    if let Some(v) = small {
        if series_diagnostic(&v).verdict == SeriesVerdict::Converges {
            return true;
        }
    }
    // comparison with a geometric series: q_{k+1} ≥ 2 q_k along the tail
    qs.len() >= 3 && qs[1..].windows(2).all(|w| Num::from_u64(2).mul(&w[0]).le(&w[1]) == Some(true))
}

pub fn branch_report(branches: &[Branch]) -> BranchReport {
    let coeffs: Vec<Vec<Num>> = branches.iter().map(Branch::coefficients).collect();
    let injective = (0..coeffs.len()).all(|i| (i + 1..coeffs.len()).all(|j| coeffs[i] != coeffs[j]));
    BranchReport {
        branches: branches.len(),
        injective,
        series_converges: coeffs.iter().map(|c| converges(c)).collect(),
        scheduler_ok: branches
            .iter()
            .map(|b| b.schedule.qprime_envelope().iter().all(|e| e.passed()))
            .collect(),
    }
}
