//! Level-weighted distributions of the cocycles at the resolution stage of a
//! built construction.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::engine::SEvaluator;
use crate::error::Result;
use crate::phi::PhiSpec;
use crate::rational::{big_to_ratio, ln_ratio, ratio_serde, ratio_to_f64};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramEntry {
    pub value: i64,
    #[serde(with = "ratio_serde")]
    pub mass: BigRational,
}

/// `c_S` on one cell `D_n(m)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellStat {
    pub n: usize,
    pub m: usize,
    pub levels: u64,
    #[serde(with = "ratio_serde")]
    pub mass: BigRational,
    pub max_abs: u64,
    /// `(h_{m-1} + Z_{m-1}) h'_{n-1}`.
    pub bound: u64,
    pub within: bool,
}

/// `c_T` on `K'_n = K_n \ (K_1 ∪ … ∪ K_{n-1})`, with the bound as a proxy
/// for the exact values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CtWindow {
    pub n: usize,
    /// Stage-`n` levels of `K'_n`.
    pub levels: u64,
    #[serde(with = "ratio_serde")]
    pub mass: BigRational,
    /// `4(h_{n-1} + Z_{n-1})(h'_{n-1})^2`.
    pub bound: u64,
    /// `μ(K'_n) Φ(bound)`.
    pub phi_proxy: f64,
    /// Largest `|k|` with `T^{-1}x = S^k x` over `K_n`, when scanned.
    pub max_abs_k: Option<u64>,
    pub within: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CocycleReport {
    pub phi: String,
    pub n_max: usize,
    pub m_max: usize,
    /// `c_S` value to exact mass in the truncated normalization.
    pub histogram: Vec<HistogramEntry>,
    pub cells: Vec<CellStat>,
    #[serde(with = "ratio_serde")]
    pub resolved_mass: BigRational,
    #[serde(with = "ratio_serde")]
    pub unresolved_mass: BigRational,
    /// Shannon entropy (nats) of the `c_S` partition, the unresolved part
    /// counted as one atom.
    pub entropy: f64,
    /// `Σ mass(c) Φ(|c|)` over the histogram.
    pub phi_sum: f64,
    /// `μ(D_n(n)) ≤ q'_{n-1}/h_n` on every diagonal cell.
    pub diagonal_mass_ok: bool,
    pub ct_windows: Vec<CtWindow>,
    /// `Σ_n μ(K'_n) Φ(4(h_{n-1}+Z_{n-1})(h'_{n-1})^2)`.
    pub ct_proxy_sum: f64,
}

impl CocycleReport {
    pub fn all_within(&self) -> bool {
        self.cells.iter().all(|c| c.within) && self.ct_windows.iter().all(|w| w.within != Some(false))
    }

    /// `value,mass_num,mass_den` rows, then the unresolved mass.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,mass_num,mass_den\n");
        for e in &self.histogram {
            out.push_str(&format!("{},{},{}\n", e.value, e.mass.numer(), e.mass.denom()));
        }
        let u = &self.unresolved_mass;
        out.push_str(&format!("unresolved,{},{}\n", u.numer(), u.denom()));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Histogram of `c_S` over every cell, the `K'_n` windows of `c_T` and the
/// empirical `Φ`-sum. Windows with `n ≤ orbit_depth` are scanned for the
/// exact return times.
pub fn cocycle_histogram(ev: &SEvaluator, phi: &PhiSpec, orbit_depth: usize) -> Result<CocycleReport> {
    let c = ev.construction();
    let (n_max, m_max) = (c.n_max(), c.m_max());
    let measure = ev.measure();
    let unit = measure.level_measure(m_max);
    let tower = c.tower();
    let zmax = c.params().zmax();
    let z = |k: usize| zmax[k].to_u64().expect("spacer fits");
    let summary = ev.domain_summary();

    let mut hist: BTreeMap<i64, u64> = BTreeMap::new();
    let mut cells = Vec::new();
    let mut diag: BTreeMap<usize, u64> = BTreeMap::new();
    for (&(n, m), values) in &summary.cells {
        let levels: u64 = values.values().sum();
        let max_abs = values.keys().map(|v| v.unsigned_abs()).max().unwrap_or(0);
        let bound = (tower.height(m - 1) + z(m - 1)) * ev.hprime(n - 1);
        for (&v, &k) in values {
            *hist.entry(v).or_default() += k;
        }
        if n == m {
            diag.insert(n, levels);
        }
        cells.push(CellStat {
            n,
            m,
            levels,
            mass: &unit * big_to_ratio(&levels.into()),
            max_abs,
            bound,
            within: max_abs <= bound && !values.contains_key(&0),
        });
    }
    let histogram: Vec<HistogramEntry> = hist
        .iter()
        .map(|(&value, &k)| HistogramEntry {
            value,
            mass: &unit * big_to_ratio(&k.into()),
        })
        .collect();
    let resolved_mass: BigRational = histogram.iter().map(|e| e.mass.clone()).sum();
    let unresolved_mass = BigRational::from_integer(1.into()) - &resolved_mass;
    let atoms = histogram.iter().map(|e| &e.mass).chain(std::iter::once(&unresolved_mass));
    let entropy = -atoms
        .filter(|p| !p.is_zero())
        .map(|p| ratio_to_f64(p) * ln_ratio(p))
        .sum::<f64>();
    let phi_sum = histogram
        .iter()
        .map(|e| ratio_to_f64(&e.mass) * phi.eval(e.value.unsigned_abs() as f64))
        .sum();
    let diagonal_mass_ok = diag.iter().all(|(&n, &levels)| {
        let mass = &unit * big_to_ratio(&levels.into());
        let cap = big_to_ratio(&c.qprime()[n - 1].into()) / big_to_ratio(&tower.height(n).into());
        mass <= cap
    });

    let mut ct_windows = Vec::new();
    let mut earlier: Vec<Vec<u64>> = Vec::new();
    for n in 1..=n_max {
        let k_levels = ev.build_k(n)?.levels;
        let mut covered = vec![false; tower.height(n) as usize];
        for (k, prev) in earlier.iter().enumerate() {
            for o in tower.lift_offsets(k + 1, n)? {
                for &x in prev {
                    covered[(o + x) as usize] = true;
                }
            }
        }
        let fresh = k_levels.iter().filter(|&&x| !covered[x as usize]).count() as u64;
        let mass = measure.level_measure(n) * big_to_ratio(&fresh.into());
        let hp = ev.hprime(n - 1);
        let bound = 4 * (tower.height(n - 1) + z(n - 1)) * hp * hp;
        let (max_abs_k, within) = if n <= orbit_depth {
            let r = ev.verify_orbit_on_k(n)?;
            (Some(r.max_abs_k), Some(r.found == r.checked && r.max_abs_k <= bound))
        } else {
            (None, None)
        };
        ct_windows.push(CtWindow {
            n,
            levels: fresh,
            phi_proxy: ratio_to_f64(&mass) * phi.eval(bound as f64),
            mass,
            bound,
            max_abs_k,
            within,
        });
        earlier.push(k_levels);
    }
    let ct_proxy_sum = ct_windows.iter().map(|w| w.phi_proxy).sum();
    Ok(CocycleReport {
        phi: phi.label(),
        n_max,
        m_max,
        histogram,
        cells,
        resolved_mass,
        unresolved_mass,
        entropy,
        phi_sum,
        diagonal_mass_ok,
        ct_windows,
        ct_proxy_sum,
    })
}
