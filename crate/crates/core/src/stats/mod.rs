//! Cocycle statistics and the closed-form bounds they are checked against.

pub mod bounds;
pub mod cocycle;

use serde::Serialize;

use crate::error::{Error, Result};
pub use bounds::{bounds_tables, envelope_checks, BoundsInput, BoundsReport, EnvelopeRow, Val};
pub use cocycle::{cocycle_histogram, CocycleReport};

/// Empirical `Φ`-sum of `c_S` against the master bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub empirical: f64,
    pub bound: String,
    /// Upper end of the bound as a double.
    pub bound_upper: f64,
    pub slack: f64,
    pub holds: bool,
}

pub fn compare(report: &CocycleReport, bounds: &BoundsReport) -> Result<Verdict> {
    if report.phi != bounds.phi {
        return Err(Error::Input(format!(
            "report uses φ = {} but bounds use φ = {}",
            report.phi, bounds.phi
        )));
    }
    if report.m_max != bounds.steps {
        return Err(Error::Input(format!(
            "report resolved at stage {} but bounds cover {} steps",
            report.m_max, bounds.steps
        )));
    }
    let bound_upper = bounds.master_cs.upper_f64();
    Ok(Verdict {
        empirical: report.phi_sum,
        bound: bounds.master_cs.render(),
        bound_upper,
        slack: bound_upper - report.phi_sum,
        holds: report.phi_sum <= bound_upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Construction, SEvaluator, StageOneRule};
    use crate::params::ParamSeq;
    use crate::phi::PhiSpec;

    fn verdict(qs: &[u64], primes: &[u64], n: usize, m: usize, phi: &PhiSpec) -> Verdict {
        let c = Construction::build(&ParamSeq::odometer(qs), primes, n, m, StageOneRule::FullTower).unwrap();
        let input = BoundsInput::from_construction(&c).unwrap();
        let ev = SEvaluator::new(c).unwrap();
        let r = cocycle_histogram(&ev, phi, 0).unwrap();
        compare(&r, &bounds_tables(&input, phi).unwrap()).unwrap()
    }

    #[test]
    fn empirical_below_bound() {
        let v = verdict(&[4, 6, 8, 10], &[2, 3, 5, 7], 4, 4, &PhiSpec::quarter());
        assert!(v.holds && v.slack > 0.0, "{v:?}");
    }

    #[test]
    fn zero_phi_trivial() {
        let v = verdict(&[4, 6, 8], &[2, 3, 5], 3, 3, &PhiSpec::zero());
        assert_eq!(v.empirical, 0.0);
        assert!(v.holds);
    }

    #[test]
    fn deeper_sums_grow_and_stay_below() {
        let qs = [4, 6, 8, 10, 12];
        let primes = [2, 3, 5, 7, 11];
        let mut last = 0.0;
        for m in 2..=5 {
            let v = verdict(&qs[..m], &primes[..m], m, m, &PhiSpec::quarter());
            assert!(v.holds, "{m}: {v:?}");
            assert!(v.empirical >= last - 1e-12);
            last = v.empirical;
        }
    }
}
