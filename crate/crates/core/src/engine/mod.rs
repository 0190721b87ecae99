//! Construction of the odometer `S` from the towers of `T`: the closed integer
//! recurrences, the enumerative brick construction and the evaluator for `S`.

pub mod analytic;
pub mod construction;
pub mod evaluator;
pub mod plan;

use serde::{Deserialize, Serialize};

pub use analytic::{qprime_bounds_check, recurrence_tables, universality_check, RecurrenceTables};
pub use construction::{BrickEntry, Construction};
pub use evaluator::{SEvaluator, SOutcome, Unresolved};
pub use plan::{default_primes, OdometerPlan};

/// Which stage-1 levels are eligible as bricks at the very first step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageOneRule {
    /// Every level of the first tower, spacers included (`r_{1,1} = h_1`).
    #[default]
    FullTower,
    /// Only the `q_0` copies of the initial level (`r_{1,1} = q_0`); the
    /// first-step spacers are never bricked.
    CopyImages,
}

impl StageOneRule {
    /// `t_{0,1}` under this rule.
    pub fn t01(self, sigma0: &num_bigint::BigUint) -> num_bigint::BigUint {
        match self {
            StageOneRule::FullTower => sigma0.clone(),
            StageOneRule::CopyImages => num_bigint::BigUint::default(),
        }
    }
}
