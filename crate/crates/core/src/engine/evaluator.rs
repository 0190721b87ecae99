//! Evaluation of `S` on the levels of the deepest built stage, the sets
//! `E_{n,m}`, `K_n`, the cells `D_n(m)` and the orbit and partition checks.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::analytic::recurrence_tables;
use super::construction::Construction;
use super::StageOneRule;
use crate::error::{Error, Result};
use crate::params::MeasureModel;
use crate::rational::{ratio_from_big, ratio_serde};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Unresolved {
    /// The point meets no brick of this step at the built depth.
    Uncovered { step: usize },
    /// The point is on the top (or, for `S^{-1}`, the base) of the last tower.
    Roof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SOutcome {
    /// `S x = T^c x = to`, and `x` lies in the cell `D_n(m)`.
    Image { to: u64, c: i64, n: usize, m: usize },
    Unresolved(Unresolved),
}

struct Layer {
    qprime: u64,
    group: Vec<u32>,
    stage: Vec<u8>,
    fwd: Vec<u32>,
    back: Vec<u32>,
}

pub struct SEvaluator {
    c: Construction,
    layers: Vec<Layer>,
    hprime: Vec<u64>,
    measure: MeasureModel,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EReport {
    pub n: usize,
    pub m: usize,
    pub size: u64,
    pub uncovered: u64,
    pub bound: u64,
    pub within_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KReport {
    pub n: usize,
    pub levels: Vec<u64>,
    pub set_identity_agrees: bool,
    /// `h_n - 1 - 2 (h_n - |E_{n,n}|)`.
    pub lower_bound: i64,
    pub within_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitReport {
    pub n: usize,
    pub checked: usize,
    pub found: usize,
    pub max_abs_k: u64,
    pub bound: u64,
    pub minus_one_cases: usize,
    pub constructive_agrees: bool,
    /// `(level, k)` for every level of `K_n` where a `k` was found.
    pub witnesses: Vec<(u64, i64)>,
}

impl OrbitReport {
    pub fn passed(&self) -> bool {
        self.found == self.checked && self.max_abs_k <= self.bound && self.constructive_agrees
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionReport {
    pub n: usize,
    pub disjoint: bool,
    pub covered: u64,
    pub uncovered: u64,
    pub predicted_uncovered: String,
    pub count_matches: bool,
    #[serde(with = "ratio_serde")]
    pub coverage: BigRational,
    /// Coverage relative to the levels that are eligible at step 1.
    #[serde(with = "ratio_serde")]
    pub coverage_of_bricked: BigRational,
}

impl PartitionReport {
    pub fn passed(&self) -> bool {
        self.disjoint && self.count_matches
    }
}

/// Counts of evaluated points per cell and cocycle value.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DomainSummary {
    /// `(n, m) -> (c_S -> number of stage-M levels)`.
    pub cells: BTreeMap<(usize, usize), BTreeMap<i64, u64>>,
    pub uncovered: u64,
    pub roof: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CocycleCheck {
    pub evaluated: u64,
    pub violations: u64,
    pub worst: Option<(usize, usize, i64)>,
    /// `count(D_n(n)) <= q'_{n-1}` lifts, and `D_n(m)` avoids `E_{n,m-1}`.
    pub cell_bounds_hold: bool,
}

impl CocycleCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.cell_bounds_hold
    }
}

impl SEvaluator {
    pub fn new(c: Construction) -> Result<SEvaluator> {
        let big_m = c.m_max();
        let h = c.tower().height(big_m) as usize;
        let mut layers = Vec::with_capacity(c.n_max());
        let mut offsets: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for n in 1..=c.n_max() {
            let qp = c.qprime()[n - 1];
            let mut layer = Layer {
                qprime: qp,
                group: vec![NONE; h],
                stage: vec![0; h],
                fwd: vec![0; h],
                back: vec![0; h],
            };
            for m in n..=big_m {
                let e = c.entry(n, m);
                let offs = offsets
                    .entry(m)
                    .or_insert_with(|| c.tower().lift_offsets(m, big_m).expect("stage present"));
                for s in 0..e.t {
                    for i in 0..qp {
                        let at = |k: u64| e.w[(k + s * qp) as usize];
                        let a = at(i);
                        let fwd = if i + 1 < qp { at(i + 1) - a } else { 0 };
                        let back = if i > 0 { a - at(i - 1) } else { 0 };
                        for &o in offs.iter() {
                            let x = (o + a) as usize;
                            if layer.group[x] != NONE {
                                return Err(Error::Invariant(format!(
                                    "bricks of step {n} overlap at level {x}"
                                )));
                            }
                            layer.group[x] = i as u32;
                            layer.stage[x] = m as u8;
                            layer.fwd[x] = fwd as u32;
                            layer.back[x] = back as u32;
                        }
                    }
                }
            }
            layers.push(layer);
        }
        let mut hprime = vec![1u64];
        for &q in c.qprime() {
            hprime.push(hprime.last().unwrap() * q);
        }
        let measure = c.params().truncated(big_m).measure();
        Ok(SEvaluator {
            c,
            layers,
            hprime,
            measure,
        })
    }

    pub fn construction(&self) -> &Construction {
        &self.c
    }

    pub fn measure(&self) -> &MeasureModel {
        &self.measure
    }

    /// Number of levels at the resolution stage.
    pub fn resolution(&self) -> u64 {
        self.c.tower().height(self.c.m_max())
    }

    pub fn hprime(&self, n: usize) -> u64 {
        self.hprime[n]
    }

    pub fn big_h(&self, n: usize) -> u64 {
        self.hprime[1..=n].iter().sum()
    }

    fn layer(&self, k: usize) -> &Layer {
        &self.layers[k - 1]
    }

    /// Group of `x` among the bricks of step `k`.
    pub fn group(&self, k: usize, x: u64) -> Option<u32> {
        let g = self.layer(k).group[x as usize];
        (g != NONE).then_some(g)
    }

    pub fn brick_stage(&self, k: usize, x: u64) -> Option<usize> {
        self.group(k, x).map(|_| self.layer(k).stage[x as usize] as usize)
    }

    pub fn s_apply(&self, x: u64) -> SOutcome {
        let mut y = x;
        let mut c: i64 = 0;
        for k in 1..=self.c.n_max() {
            let l = self.layer(k);
            let g = l.group[y as usize];
            if g == NONE {
                return SOutcome::Unresolved(Unresolved::Uncovered { step: k });
            }
            if (g as u64) + 1 < l.qprime {
                let d = l.fwd[y as usize] as u64;
                return SOutcome::Image {
                    to: y + d,
                    c: c + d as i64,
                    n: k,
                    m: l.stage[y as usize] as usize,
                };
            }
            for _ in 0..l.qprime - 1 {
                let d = l.back[y as usize] as u64;
                y -= d;
                c -= d as i64;
            }
        }
        SOutcome::Unresolved(Unresolved::Roof)
    }

    pub fn s_apply_inverse(&self, x: u64) -> SOutcome {
        for k in 1..=self.c.n_max() {
            let l = self.layer(k);
            let g = l.group[x as usize];
            if g == NONE {
                return SOutcome::Unresolved(Unresolved::Uncovered { step: k });
            }
            if g > 0 {
                let d = l.back[x as usize] as u64;
                let m = l.stage[x as usize] as usize;
                let mut y = x - d;
                for j in (1..k).rev() {
                    y = match self.zeta_pow(j, y, self.layer(j).qprime - 1) {
                        Some(v) => v,
                        None => return SOutcome::Unresolved(Unresolved::Uncovered { step: j }),
                    };
                }
                return SOutcome::Image {
                    to: y,
                    c: y as i64 - x as i64,
                    n: k,
                    m,
                };
            }
        }
        SOutcome::Unresolved(Unresolved::Roof)
    }

    /// `ζ_k^j y`, if every intermediate point lies in a non-top group.
    pub fn zeta_pow(&self, k: usize, mut y: u64, j: u64) -> Option<u64> {
        let l = self.layer(k);
        for _ in 0..j {
            let g = l.group[y as usize];
            if g == NONE || (g as u64) + 1 >= l.qprime {
                return None;
            }
            y += l.fwd[y as usize] as u64;
        }
        Some(y)
    }

    /// `S^i y` for `y` in the base of `R'_n` and `i < h'_n`, via the digits
    /// of `i` in the mixed radix `(q'_0, q'_1, ...)`.
    pub fn s_power_base(&self, n: usize, y: u64, i: u64) -> Option<u64> {
        let mut digits = Vec::with_capacity(n);
        let mut rest = i;
        for k in 0..n {
            let q = self.c.qprime()[k];
            digits.push(rest % q);
            rest /= q;
        }
        if rest != 0 {
            return None;
        }
        let mut z = y;
        for k in (1..=n).rev() {
            z = self.zeta_pow(k, z, digits[k - 1])?;
        }
        Some(z)
    }

    /// Levels `y, S y, ..., S^{h'_n - 1} y` of the column of `R'_n` over `y`.
    /// Expanding the top step first leaves the lowest digit fastest.
    pub fn column(&self, n: usize, y: u64) -> Vec<u64> {
        let mut col = vec![y];
        for k in (1..=n).rev() {
            let l = self.layer(k);
            let mut spread = Vec::with_capacity(col.len() * l.qprime as usize);
            for &b in &col {
                let mut z = b;
                spread.push(z);
                for _ in 1..l.qprime {
                    z += l.fwd[z as usize] as u64;
                    spread.push(z);
                }
            }
            col = spread;
        }
        col
    }

    /// Points of the resolution stage in the base of `R'_n`.
    pub fn base_points(&self, n: usize) -> impl Iterator<Item = u64> + '_ {
        let l = self.layer(n);
        (0..l.group.len() as u64).filter(move |&x| l.group[x as usize] == 0)
    }

    /// For each resolution level in `R'_n`, the stage of the brick at the
    /// bottom of its column (0 when not covered).
    pub fn column_stage(&self, n: usize) -> Result<Vec<u8>> {
        let mut out = vec![0u8; self.resolution() as usize];
        for y in self.base_points(n) {
            let st = self.layer(n).stage[y as usize];
            for x in self.column(n, y) {
                if out[x as usize] != 0 {
                    return Err(Error::Invariant(format!("R'_{n} levels overlap at {x}")));
                }
                out[x as usize] = st;
            }
        }
        Ok(out)
    }

    /// `E_{n,m}` as a sorted set of stage-`m` levels.
    pub fn build_e(&self, n: usize, m: usize) -> Result<Vec<u64>> {
        let big_m = self.c.m_max();
        if n == 0 || n > self.c.n_max() || m < n || m > big_m {
            return Err(Error::Input(format!("E_{{{n},{m}}} outside the built range")));
        }
        let cs = self.column_stage(n)?;
        let tower = self.c.tower();
        let anc = tower.ancestor_map(big_m, m);
        let lifts = tower.lift_offsets(m, big_m)?.len() as u64;
        let mut counts = vec![0u64; tower.height(m) as usize];
        for (x, &st) in cs.iter().enumerate() {
            if st != 0 && (st as usize) <= m {
                let a = anc[x];
                if a == u64::MAX {
                    return Err(Error::Invariant(format!("E_{{{n},{m}}} meets a later spacer")));
                }
                counts[a as usize] += 1;
            }
        }
        let mut set = Vec::new();
        for (a, &k) in counts.iter().enumerate() {
            if k == lifts {
                set.push(a as u64);
            } else if k != 0 {
                return Err(Error::Invariant(format!(
                    "E_{{{n},{m}}} splits stage-{m} level {a}"
                )));
            }
        }
        Ok(set)
    }

    pub fn e_report(&self, n: usize, m: usize) -> Result<EReport> {
        let e = self.build_e(n, m)?;
        let h = self.c.tower().height(m);
        let uncovered = h - e.len() as u64;
        let bound = if n < m {
            self.big_h(n)
        } else {
            self.big_h(n - 1) + self.c.primes()[n - 1] * self.hprime[n - 1]
        };
        Ok(EReport {
            n,
            m,
            size: e.len() as u64,
            uncovered,
            bound,
            within_bound: uncovered <= bound,
        })
    }

    pub fn build_k(&self, n: usize) -> Result<KReport> {
        let e = self.build_e(n, n)?;
        let h = self.c.tower().height(n);
        let mut in_e = vec![false; h as usize];
        for &x in &e {
            in_e[x as usize] = true;
        }
        let levels: Vec<u64> = (1..h).filter(|&i| in_e[i as usize - 1] && in_e[i as usize]).collect();
        // (E \ B) \ T(X \ E)
        let mut alt: Vec<u64> = e.iter().copied().filter(|&i| i != 0).collect();
        let image_of_complement: Vec<u64> = (0..h).filter(|&i| !in_e[i as usize]).map(|i| i + 1).collect();
        alt.retain(|i| image_of_complement.binary_search(i).is_err());
        let outside = h as i64 - e.len() as i64;
        let lower_bound = h as i64 - 1 - 2 * outside;
        Ok(KReport {
            n,
            within_bound: levels.len() as i64 >= lower_bound,
            set_identity_agrees: alt == levels,
            levels,
            lower_bound,
        })
    }

    /// For every level `x` of `K_n`, find `k` with `S^k x = T^{-1} x` by a
    /// two-sided scan of `S`-iterates, using the construction cut at depth
    /// `(n, n)`.
    pub fn verify_orbit_on_k(&self, n: usize) -> Result<OrbitReport> {
        let k_set = self.build_k(n)?.levels;
        let sub = SEvaluator::new(Construction::build(
            self.c.params(),
            self.c.primes(),
            n,
            n,
            self.c.rule(),
        )?)?;
        let z = u64::try_from(&self.c.params().zmax()[n - 1]).expect("spacer fits");
        let hp = self.hprime[n - 1];
        let bound = 4 * (self.c.tower().height(n - 1) + z) * hp * hp;
        let h = sub.resolution() as usize;
        let mut col_id = vec![u64::MAX; h];
        let mut col_pos = vec![0u64; h];
        for y in sub.base_points(n) {
            for (p, x) in sub.column(n, y).into_iter().enumerate() {
                col_id[x as usize] = y;
                col_pos[x as usize] = p as u64;
            }
        }
        let mut report = OrbitReport {
            n,
            checked: k_set.len(),
            found: 0,
            max_abs_k: 0,
            bound,
            minus_one_cases: 0,
            constructive_agrees: true,
            witnesses: Vec::new(),
        };
        for &x in &k_set {
            let target = x - 1;
            let mut fwd = Some(x);
            let mut bwd = Some(x);
            let mut hit = None;
            for step in 1..=bound as i64 {
                if let Some(a) = fwd {
                    fwd = match sub.s_apply(a) {
                        SOutcome::Image { to, .. } => Some(to),
                        SOutcome::Unresolved(_) => None,
                    };
                    if fwd == Some(target) {
                        hit = Some(step);
                        break;
                    }
                }
                if let Some(b) = bwd {
                    bwd = match sub.s_apply_inverse(b) {
                        SOutcome::Image { to, .. } => Some(to),
                        SOutcome::Unresolved(_) => None,
                    };
                    if bwd == Some(target) {
                        hit = Some(-step);
                        break;
                    }
                }
                if fwd.is_none() && bwd.is_none() {
                    break;
                }
            }
            if let Some(k) = hit {
                report.found += 1;
                report.max_abs_k = report.max_abs_k.max(k.unsigned_abs());
                if k == -1 {
                    report.minus_one_cases += 1;
                }
                let (cx, ct) = (x as usize, target as usize);
                let same = col_id[cx] != u64::MAX && col_id[cx] == col_id[ct];
                if !same || col_pos[ct] as i64 - col_pos[cx] as i64 != k {
                    report.constructive_agrees = false;
                }
                report.witnesses.push((x, k));
            }
        }
        Ok(report)
    }

    /// Disjointness of the levels of `R'_n` at the resolution stage and the
    /// exact count of uncovered levels predicted by the recurrences.
    pub fn partition_check(&self, n: usize) -> Result<PartitionReport> {
        let big_m = self.c.m_max();
        let h = self.resolution();
        let mut marks = vec![0u8; h as usize];
        let mut disjoint = true;
        for y in self.base_points(n) {
            for x in self.column(n, y) {
                let slot = &mut marks[x as usize];
                if *slot != 0 {
                    disjoint = false;
                }
                *slot = slot.saturating_add(1);
            }
        }
        let covered = marks.iter().filter(|&&v| v != 0).count() as u64;
        let params = self.c.params();
        let tables = recurrence_tables(
            &params.summaries(),
            self.c.primes(),
            self.c.n_max(),
            big_m,
            self.c.rule(),
        )?;
        let mut step_one = tables.leftover(1, big_m);
        if self.c.rule() == StageOneRule::CopyImages {
            let lifts: BigUint = (1..big_m).map(|k| BigUint::from(params.q(k))).product();
            step_one += &params.sigma()[0] * lifts;
        }
        let mut predicted = step_one.clone();
        for k in 2..=n {
            predicted += BigUint::from(self.hprime[k - 1]) * tables.leftover(k, big_m);
        }
        let uncovered = h - covered;
        let hb = BigUint::from(h);
        let bricked = &hb - &step_one;
        Ok(PartitionReport {
            n,
            disjoint,
            covered,
            uncovered,
            count_matches: predicted == BigUint::from(uncovered),
            predicted_uncovered: predicted.to_string(),
            coverage: ratio_from_big(&BigUint::from(covered), &hb),
            coverage_of_bricked: if bricked.is_zero() {
                BigRational::one()
            } else {
                ratio_from_big(&BigUint::from(covered), &bricked)
            },
        })
    }

    /// `S` on every level of the resolution stage, grouped by cell.
    pub fn domain_summary(&self) -> DomainSummary {
        let mut d = DomainSummary::default();
        for x in 0..self.resolution() {
            match self.s_apply(x) {
                SOutcome::Image { c, n, m, .. } => {
                    *d.cells.entry((n, m)).or_default().entry(c).or_default() += 1;
                }
                SOutcome::Unresolved(Unresolved::Roof) => d.roof += 1,
                SOutcome::Unresolved(Unresolved::Uncovered { .. }) => d.uncovered += 1,
            }
        }
        d
    }

    /// `|c_S| <= (h_{m-1} + Z_{m-1}) h'_{n-1}` on every evaluated level, plus
    /// the cell-size statements for `D_n(m)`.
    pub fn cocycle_check(&self) -> Result<CocycleCheck> {
        let big_m = self.c.m_max();
        let mut evaluated = 0;
        let mut violations = 0;
        let mut worst: Option<(usize, usize, i64)> = None;
        let mut cell_counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        let column_stages: Vec<Vec<u8>> = (1..=self.c.n_max())
            .map(|n| self.column_stage(n))
            .collect::<Result<_>>()?;
        let tower = self.c.tower();
        let mut avoid_ok = true;
        for x in 0..self.resolution() {
            if let SOutcome::Image { c, n, m, .. } = self.s_apply(x) {
                evaluated += 1;
                *cell_counts.entry((n, m)).or_default() += 1;
                let bound = self.c.zeta_bound(m) as i64 * self.hprime[n - 1] as i64;
                if c.abs() > bound || c == 0 {
                    violations += 1;
                }
                if worst.is_none_or(|(_, _, w)| c.abs() > w.abs()) {
                    worst = Some((n, m, c));
                }
                if m > n {
                    let cs = column_stages[n - 1][x as usize] as usize;
                    if cs != 0 && cs <= m - 1 {
                        avoid_ok = false;
                    }
                    if tower.ancestor(crate::towers::LevelRef { stage: big_m, index: x }, m).is_none() {
                        avoid_ok = false;
                    }
                }
            }
        }
        let mut diag_ok = true;
        for n in 1..=self.c.n_max() {
            let lifts = tower.lift_offsets(n, big_m)?.len() as u64;
            let count = cell_counts.get(&(n, n)).copied().unwrap_or(0);
            if count > self.c.qprime()[n - 1] * lifts {
                diag_ok = false;
            }
        }
        Ok(CocycleCheck {
            evaluated,
            violations,
            worst,
            cell_bounds_hold: diag_ok && avoid_ok,
        })
    }

    /// Every brick of step `n >= 2` lies inside a group-0 brick of step
    /// `n - 1` built at a stage between `n - 1` and its own.
    pub fn brick_nesting_holds(&self) -> bool {
        (2..=self.c.n_max()).all(|n| {
            (0..self.resolution()).all(|x| match self.brick_stage(n, x) {
                None => true,
                Some(m) => {
                    self.group(n - 1, x) == Some(0)
                        && self
                            .brick_stage(n - 1, x)
                            .is_some_and(|mm| mm + 1 >= n && mm <= m)
                }
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamSeq;

    fn eval(seq: &ParamSeq, primes: &[u64], n: usize, m: usize) -> SEvaluator {
        SEvaluator::new(Construction::build(seq, primes, n, m, StageOneRule::FullTower).unwrap()).unwrap()
    }

    #[test]
    fn first_cell_is_t() {
        let ev = eval(&ParamSeq::chacon(4), &[2, 2], 2, 4);
        let d = ev.domain_summary();
        for ((n, m), hist) in &d.cells {
            if (*n, *m) == (1, 1) {
                assert_eq!(hist.keys().copied().collect::<Vec<_>>(), vec![1]);
            }
        }
        assert!(d.cells.contains_key(&(1, 1)));
    }

    #[test]
    fn inverse_undoes_s() {
        let ev = eval(&ParamSeq::odometer(&[4, 4, 4, 4]), &[2, 3, 2], 3, 4);
        for x in 0..ev.resolution() {
            if let SOutcome::Image { to, c, .. } = ev.s_apply(x) {
                assert_eq!(to as i64 - x as i64, c);
                match ev.s_apply_inverse(to) {
                    SOutcome::Image { to: back, .. } => assert_eq!(back, x),
                    other => panic!("inverse unresolved at {to}: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn mixed_radix_matches_iteration() {
        let ev = eval(&ParamSeq::odometer(&[4, 4, 4, 4]), &[2, 3, 2], 3, 4);
        for n in 1..=3 {
            for y in ev.base_points(n).take(5).collect::<Vec<_>>() {
                let mut z = y;
                for i in 0..ev.hprime(n) {
                    assert_eq!(ev.s_power_base(n, y, i), Some(z));
                    assert_eq!(ev.column(n, y)[i as usize], z);
                    if i + 1 < ev.hprime(n) {
                        z = match ev.s_apply(z) {
                            SOutcome::Image { to, .. } => to,
                            other => panic!("{other:?}"),
                        };
                    }
                }
            }
        }
    }

    #[test]
    fn e_sets_nest_and_respect_bounds() {
        let ev = eval(&ParamSeq::chacon(5), &[2, 3, 2], 3, 5);
        for n in 1..=3 {
            for m in n..=5 {
                let r = ev.e_report(n, m).unwrap();
                assert!(r.within_bound, "{r:?}");
                if n > 1 {
                    let big = ev.build_e(n - 1, m).unwrap();
                    for x in ev.build_e(n, m).unwrap() {
                        assert!(big.binary_search(&x).is_ok());
                    }
                }
            }
        }
        let e11 = ev.e_report(1, 1).unwrap();
        assert!(e11.uncovered <= 2);
    }

    #[test]
    fn k_sets_and_orbits() {
        let ev = eval(&ParamSeq::odometer(&[4, 4, 4, 4]), &[2, 2, 2], 3, 4);
        for n in 1..=3 {
            let k = ev.build_k(n).unwrap();
            assert!(k.set_identity_agrees && k.within_bound);
            let o = ev.verify_orbit_on_k(n).unwrap();
            assert!(o.passed(), "{o:?}");
        }
        assert_eq!(ev.verify_orbit_on_k(1).unwrap().bound, 4);
    }

    #[test]
    fn partition_counts() {
        for seq in [ParamSeq::chacon(5), ParamSeq::odometer(&[4, 4, 4, 4, 4])] {
            let ev = eval(&seq, &[2, 3, 2], 3, 5);
            for n in 1..=3 {
                let p = ev.partition_check(n).unwrap();
                assert!(p.passed(), "{p:?}");
            }
        }
    }

    #[test]
    fn cocycle_and_nesting() {
        let ev = eval(&ParamSeq::chacon(5), &[2, 3, 2], 3, 5);
        let cc = ev.cocycle_check().unwrap();
        assert!(cc.passed(), "{cc:?}");
        assert!(ev.brick_nesting_holds());
    }
}
