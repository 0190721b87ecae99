//! Verification suites over a built construction, each returning a JSON
//! section with a pass flag.

use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::engine::{qprime_bounds_check, recurrence_tables, SEvaluator};
use crate::error::{Error, Result};
use crate::phi::PhiSpec;
use crate::stats::{bounds_tables, cocycle_histogram, compare, BoundsInput};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    All,
    Partition,
    Cocycle,
    Orbit,
    Bounds,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        Ok(match s {
            "all" => Suite::All,
            "partition" => Suite::Partition,
            "cocycle" => Suite::Cocycle,
            "orbit" => Suite::Orbit,
            "bounds" => Suite::Bounds,
            _ => return Err(Error::Input(format!("unknown suite {s:?} (all, partition, cocycle, orbit, bounds)"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Section {
    Tables,
    Partition,
    Cocycle,
    Orbit,
    Bounds,
}

impl Suite {
    pub fn sections(self) -> &'static [Section] {
        use Section::*;
        match self {
            Suite::All => &[Tables, Partition, Cocycle, Orbit, Bounds],
            Suite::Partition => &[Tables, Partition],
            Suite::Cocycle => &[Cocycle],
            Suite::Orbit => &[Orbit],
            Suite::Bounds => &[Bounds],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectionReport {
    pub section: Section,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub passed: bool,
    pub sections: Vec<SectionReport>,
}

impl VerifyReport {
    pub fn new(suite: Suite, sections: Vec<SectionReport>) -> VerifyReport {
        VerifyReport {
            suite,
            passed: sections.iter().all(|s| s.passed),
            sections,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub phi: PhiSpec,
    /// Largest `n` whose `K_n` is scanned for return times.
    pub orbit_depth: usize,
}

impl Default for VerifyOptions {
    fn default() -> VerifyOptions {
        VerifyOptions {
            phi: PhiSpec::quarter(),
            orbit_depth: 3,
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

pub fn run_section(ev: &SEvaluator, section: Section, opts: &VerifyOptions) -> Result<SectionReport> {
    let c = ev.construction();
    let (n_max, m_max) = (c.n_max(), c.m_max());
    let (passed, detail) = match section {
        Section::Tables => {
            let steps = c.params().truncated(m_max).summaries();
            let tables = recurrence_tables(&steps, c.primes(), n_max, m_max, c.rule())?;
            let equal = c.matches_tables(&tables);
            let qp = qprime_bounds_check(&tables, &steps, c.primes(), None);
            let passed = equal.is_ok() && qp.passed();
            (
                passed,
                json!({
                    "enumerative_equals_recurrence": equal.is_ok(),
                    "mismatch": equal.err(),
                    "qprime_bounds": to_value(&qp),
                }),
            )
        }
        Section::Partition => {
            let mut parts = Vec::new();
            let mut e_sets = Vec::new();
            for n in 1..=n_max {
                parts.push(ev.partition_check(n)?);
                for m in n..=m_max {
                    e_sets.push(ev.e_report(n, m)?);
                }
            }
            let passed = parts.iter().all(|p| p.passed()) && e_sets.iter().all(|e| e.within_bound);
            (passed, json!({ "partitions": to_value(&parts), "e_sets": to_value(&e_sets) }))
        }
        Section::Cocycle => {
            let (zeta_checked, zeta_violation) = c.check_zeta();
            let cc = ev.cocycle_check()?;
            let hist = cocycle_histogram(ev, &opts.phi, 0)?;
            let passed = zeta_violation.is_none() && cc.passed() && hist.all_within() && hist.diagonal_mass_ok;
            (
                passed,
                json!({
                    "zeta_checked": zeta_checked,
                    "zeta_violation": zeta_violation,
                    "c_s": to_value(&cc),
                    "histogram": to_value(&hist.histogram),
                    "cells": to_value(&hist.cells),
                    "unresolved_mass": to_value(&crate::rational::RatRepr::from(&hist.unresolved_mass)),
                    "entropy": hist.entropy,
                    "diagonal_mass_ok": hist.diagonal_mass_ok,
                }),
            )
        }
        Section::Orbit => {
            let mut rows = Vec::new();
            for n in 1..=n_max.min(opts.orbit_depth) {
                let r = ev.verify_orbit_on_k(n)?;
                rows.push(json!({
                    "n": n,
                    "levels": r.checked,
                    "found": r.found,
                    "max_abs_k": r.max_abs_k,
                    "bound": r.bound,
                    "constructive_agrees": r.constructive_agrees,
                    "passed": r.passed(),
                }));
            }
            let passed = rows.iter().all(|r| r["passed"] == true);
            (passed, json!({ "orbits": rows }))
        }
        Section::Bounds => {
            let input = BoundsInput::from_construction(c)?;
            let bounds = bounds_tables(&input, &opts.phi)?;
            let hist = cocycle_histogram(ev, &opts.phi, 0)?;
            let verdict = compare(&hist, &bounds)?;
            (
                verdict.holds,
                json!({
                    "phi": bounds.phi,
                    "verdict": to_value(&verdict),
                    "master_cs": bounds.master_cs.render(),
                    "master_ct": bounds.master_ct.render(),
                    "ct_proxy_sum": hist.ct_proxy_sum,
                }),
            )
        }
    };
    Ok(SectionReport { section, passed, detail })
}

pub fn run_suite(ev: &SEvaluator, suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    let sections = suite
        .sections()
        .iter()
        .map(|&s| run_section(ev, s, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport::new(suite, sections))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Construction, StageOneRule};
    use crate::params::ParamSeq;

    #[test]
    fn all_pass_on_chacon_and_odometer() {
        for seq in [ParamSeq::chacon(4), ParamSeq::odometer(&[4, 4, 4, 4])] {
            let c = Construction::build(&seq, &[2, 3, 2], 3, 4, StageOneRule::FullTower).unwrap();
            let ev = SEvaluator::new(c).unwrap();
            let r = run_suite(&ev, Suite::All, &VerifyOptions::default()).unwrap();
            assert!(r.passed, "{}", serde_json::to_string_pretty(&r).unwrap());
            assert_eq!(r.sections.len(), 5);
        }
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("orbit".parse::<Suite>().unwrap(), Suite::Orbit);
        assert!("nope".parse::<Suite>().is_err());
    }
}
