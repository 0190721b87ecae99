//! Enumerative construction: the eligible sets `W_{n,m}`, brick selection and
//! the partial maps `ζ_n(m)`, all on explicit level indices.

use num_bigint::BigUint;
use serde::Serialize;

use super::analytic::RecurrenceTables;
use super::plan::OdometerPlan;
use super::StageOneRule;
use crate::error::{Error, Result};
use crate::params::ParamSeq;
use crate::towers::TowerModel;

/// Largest stage height the enumerative backend accepts by default.
pub const DEFAULT_LEVEL_CAP: u64 = 1 << 22;

/// Step `n`, stage `m`: the eligible levels and the bricks chosen among them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BrickEntry {
    pub n: usize,
    pub m: usize,
    /// Sorted stage-`m` indices of `W_{n,m}`.
    pub w: Vec<u64>,
    pub t: u64,
    pub qprime: u64,
}

impl BrickEntry {
    pub fn r(&self) -> u64 {
        self.w.len() as u64
    }

    /// Stage-`m` levels of group `i`: `w[i + s q']` for `s < t`.
    pub fn group(&self, i: u64) -> impl Iterator<Item = u64> + '_ {
        (0..self.t).map(move |s| self.w[(i + s * self.qprime) as usize])
    }

    pub fn chosen(&self) -> &[u64] {
        &self.w[..(self.qprime * self.t) as usize]
    }

    pub fn leftover(&self) -> &[u64] {
        &self.w[(self.qprime * self.t) as usize..]
    }

    /// `(from, to, Δ)` for every brick of groups `0..q'-1`.
    pub fn zeta(&self) -> impl Iterator<Item = (u64, u64, u64)> + '_ {
        let qp = self.qprime;
        (0..self.t).flat_map(move |s| {
            (0..qp - 1).map(move |i| {
                let a = self.w[(i + s * qp) as usize];
                let b = self.w[(i + 1 + s * qp) as usize];
                (a, b, b - a)
            })
        })
    }
}

/// Largest multiple of `unit` strictly below `r`, as a count of units.
pub fn largest_multiple_below(r: u64, unit: u64) -> u64 {
    (r.saturating_sub(1)) / unit
}

#[derive(Clone, Debug)]
pub struct Construction {
    tower: TowerModel,
    primes: Vec<u64>,
    n_max: usize,
    m_max: usize,
    rule: StageOneRule,
    qprime: Vec<u64>,
    /// `entries[n-1][m-n]`.
    entries: Vec<Vec<BrickEntry>>,
}

impl Construction {
    pub fn build(
        seq: &ParamSeq,
        primes: &[u64],
        n_max: usize,
        m_max: usize,
        rule: StageOneRule,
    ) -> Result<Construction> {
        Self::build_capped(seq, primes, n_max, m_max, rule, DEFAULT_LEVEL_CAP)
    }

    pub fn build_capped(
        seq: &ParamSeq,
        primes: &[u64],
        n_max: usize,
        m_max: usize,
        rule: StageOneRule,
        level_cap: u64,
    ) -> Result<Construction> {
        if n_max == 0 || n_max > m_max {
            return Err(Error::Input(format!("need 1 <= N <= M, got N={n_max}, M={m_max}")));
        }
        if seq.len() < m_max {
            return Err(Error::Input(format!(
                "M = {m_max} needs {m_max} parameter steps, have {}",
                seq.len()
            )));
        }
        if primes.len() < n_max {
            return Err(Error::Input(format!("N = {n_max} needs {n_max} primes")));
        }
        let tower = TowerModel::new(seq.truncated(m_max))?;
        if tower.height(m_max) > level_cap {
            return Err(Error::TooLarge(format!(
                "stage {m_max} with {} levels (cap {level_cap})",
                tower.height(m_max)
            )));
        }
        let mut c = Construction {
            tower,
            primes: primes[..n_max].to_vec(),
            n_max,
            m_max,
            rule,
            qprime: Vec::with_capacity(n_max),
            entries: vec![Vec::new(); n_max],
        };
        for m in 1..=m_max {
            for n in 1..=m.min(n_max) {
                let w = c.eligible(n, m)?;
                let entry = c.select(n, m, w)?;
                c.entries[n - 1].push(entry);
            }
        }
        Ok(c)
    }

    /// Children at stage `m` of a sorted set of stage-`m-1` levels.
    fn lift_one(&self, levels: &[u64], m: usize) -> Vec<u64> {
        let st = self.tower.refinement(m - 1).expect("stage present");
        let mut out: Vec<u64> = st
            .copy_offsets
            .iter()
            .flat_map(|&o| levels.iter().map(move |&j| o + j))
            .collect();
        out.sort_unstable();
        out
    }

    fn disjoint_union(mut a: Vec<u64>, b: impl IntoIterator<Item = u64>, n: usize, m: usize) -> Result<Vec<u64>> {
        a.extend(b);
        a.sort_unstable();
        if a.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::Invariant(format!("W_{{{n},{m}}} pieces overlap")));
        }
        Ok(a)
    }

    fn eligible(&self, n: usize, m: usize) -> Result<Vec<u64>> {
        if n == 1 {
            if m == 1 {
                return Ok(match self.rule {
                    StageOneRule::FullTower => (0..self.tower.height(1)).collect(),
                    StageOneRule::CopyImages => self.tower.refinement(0)?.copy_offsets.clone(),
                });
            }
            let prev = self.entry(1, m - 1);
            let lifted = self.lift_one(prev.leftover(), m);
            let spacers = self.tower.refinement(m - 1)?.spacer_indices.clone();
            return Self::disjoint_union(lifted, spacers, n, m);
        }
        let below = self.entry(n - 1, m);
        let fresh: Vec<u64> = below.group(0).collect();
        let carried = if m == n {
            let g: Vec<u64> = self.entry(n - 1, n - 1).group(0).collect();
            self.lift_one(&g, m)
        } else {
            self.lift_one(self.entry(n, m - 1).leftover(), m)
        };
        Self::disjoint_union(carried, fresh, n, m)
    }

    fn select(&mut self, n: usize, m: usize, w: Vec<u64>) -> Result<BrickEntry> {
        let r = w.len() as u64;
        let (qprime, t) = if m == n {
            let p = self.primes[n - 1];
            let qp = largest_multiple_below(r, p) * p;
            if qp == 0 {
                return Err(Error::IllPosed {
                    n,
                    m,
                    what: format!("q'_{}", n - 1),
                });
            }
            self.qprime.push(qp);
            (qp, 1)
        } else {
            let qp = self.qprime[n - 1];
            let t = largest_multiple_below(r, qp);
            if t == 0 {
                return Err(Error::IllPosed {
                    n,
                    m,
                    what: format!("t_{{{n},{m}}}"),
                });
            }
            (qp, t)
        };
        Ok(BrickEntry { n, m, w, t, qprime })
    }

    pub fn entry(&self, n: usize, m: usize) -> &BrickEntry {
        &self.entries[n - 1][m - n]
    }

    pub fn entries(&self) -> impl Iterator<Item = &BrickEntry> {
        self.entries.iter().flatten()
    }

    pub fn tower(&self) -> &TowerModel {
        &self.tower
    }

    pub fn params(&self) -> &ParamSeq {
        self.tower.params()
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn rule(&self) -> StageOneRule {
        self.rule
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn qprime(&self) -> &[u64] {
        &self.qprime
    }

    pub fn plan(&self) -> OdometerPlan {
        OdometerPlan::new(&self.primes, self.qprime.iter().map(|&q| BigUint::from(q)).collect())
            .expect("q' built as multiples of p")
    }

    /// Compare `(r, t, q')` with the closed recurrences.
    pub fn matches_tables(&self, tables: &RecurrenceTables) -> std::result::Result<(), String> {
        if tables.n_max != self.n_max || tables.m_max != self.m_max {
            return Err("table dimensions differ".into());
        }
        for (n, q) in self.qprime.iter().enumerate() {
            if BigUint::from(*q) != tables.qprime[n] {
                return Err(format!("q'_{n}: enumerated {q}, recurrence {}", tables.qprime[n]));
            }
        }
        for e in self.entries() {
            let (n, m) = (e.n, e.m);
            if BigUint::from(e.r()) != *tables.r(n, m) {
                return Err(format!("r_{{{n},{m}}}: enumerated {}, recurrence {}", e.r(), tables.r(n, m)));
            }
            if BigUint::from(e.t) != *tables.t(n, m) {
                return Err(format!("t_{{{n},{m}}}: enumerated {}, recurrence {}", e.t, tables.t(n, m)));
            }
        }
        Ok(())
    }

    /// `h_{m-1} + Z_{m-1}`: the bound on every cocycle value of `ζ_n(m)`.
    pub fn zeta_bound(&self, m: usize) -> u64 {
        let z = u64::try_from(&self.params().zmax()[m - 1]).expect("spacer fits");
        self.tower.height(m - 1) + z
    }

    /// Every `ζ` entry has `0 < Δ <= h_{m-1} + Z_{m-1}`; returns the count
    /// checked and the first violation.
    pub fn check_zeta(&self) -> (usize, Option<(usize, usize, u64)>) {
        let mut count = 0;
        for e in self.entries() {
            let bound = self.zeta_bound(e.m);
            for (_, _, d) in e.zeta() {
                count += 1;
                if d == 0 || d > bound {
                    return (count, Some((e.n, e.m, d)));
                }
            }
        }
        (count, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::analytic::recurrence_tables;
    use crate::params::CutSpacParam;

    fn build(seq: &ParamSeq, primes: &[u64], n: usize, m: usize) -> Construction {
        Construction::build(seq, primes, n, m, StageOneRule::FullTower).unwrap()
    }

    #[test]
    fn w11_is_whole_first_tower() {
        let seq = ParamSeq::chacon(3);
        let c = build(&seq, &[2, 2], 2, 3);
        assert_eq!(c.entry(1, 1).w, vec![0, 1, 2, 3]);
        assert_eq!(c.entry(1, 1).qprime, 2);
        let ci = Construction::build(&seq, &[2, 2], 2, 3, StageOneRule::CopyImages).unwrap();
        assert_eq!(ci.entry(1, 1).w, vec![0, 1, 3]);
    }

    #[test]
    fn odometer_w12_has_eight_levels() {
        let seq = ParamSeq::odometer(&[4, 4, 4]);
        let c = build(&seq, &[2, 3], 2, 3);
        assert_eq!(c.entry(1, 2).r(), 8);
        assert_eq!(c.entry(2, 2).r(), 4 + c.entry(1, 2).t);
    }

    #[test]
    fn selection_rules() {
        assert_eq!(largest_multiple_below(5, 2) * 2, 4);
        assert_eq!(largest_multiple_below(8, 4), 1);
        let c = build(&ParamSeq::odometer(&[5, 5, 5]), &[2, 2], 2, 3);
        for e in c.entries().filter(|e| e.n == e.m) {
            assert_eq!(e.t, 1);
        }
        for e in c.entries() {
            assert!(e.qprime * e.t < e.r());
        }
    }

    #[test]
    fn first_zeta_is_t() {
        let c = build(&ParamSeq::chacon(3), &[2, 2], 2, 3);
        assert!(c.entry(1, 1).zeta().all(|(_, _, d)| d == 1));
    }

    #[test]
    fn zeta_deltas_match_rescan() {
        let c = build(&ParamSeq::chacon(5), &[2, 3, 2], 3, 5);
        for e in c.entries() {
            let chosen = e.chosen();
            for (a, b, d) in e.zeta() {
                let pos = chosen.iter().position(|&x| x == a).unwrap();
                assert_eq!(chosen[pos + 1], b);
                assert_eq!(d, b - a);
            }
        }
        assert_eq!(c.check_zeta().1, None);
    }

    #[test]
    fn matches_recurrences_on_small_families() {
        let fams = vec![
            ParamSeq::odometer(&[4, 4, 4, 4, 4]),
            ParamSeq::chacon(6),
            ParamSeq::new(vec![
                CutSpacParam::new(5, vec![0, 1, 0, 2, 0, 1]).unwrap(),
                CutSpacParam::new(4, vec![1, 0, 0, 3, 0]).unwrap(),
                CutSpacParam::new(6, vec![0, 0, 2, 0, 0, 0, 5]).unwrap(),
                CutSpacParam::new(3, vec![2, 0, 0, 0]).unwrap(),
            ])
            .unwrap(),
        ];
        for seq in fams {
            let m = seq.len();
            for rule in [StageOneRule::FullTower, StageOneRule::CopyImages] {
                let primes = [2, 2, 2];
                let n = 3.min(m);
                match (
                    Construction::build(&seq, &primes, n, m, rule),
                    recurrence_tables(&seq.summaries(), &primes, n, m, rule),
                ) {
                    (Ok(c), Ok(tb)) => c.matches_tables(&tb).unwrap(),
                    (Err(Error::IllPosed { n: a, m: b, .. }), Err(Error::IllPosed { n: c, m: d, .. })) => {
                        assert_eq!((a, b), (c, d))
                    }
                    (x, y) => panic!("backends disagree: {:?} vs {:?}", x.err(), y.err()),
                }
            }
        }
    }
}
