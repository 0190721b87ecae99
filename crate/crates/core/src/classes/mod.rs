//! Flexible classes of rank-one systems: step-wise parameter generators, the
//! scheduler that picks admissible cutting parameters, and the branching
//! family of pairwise distinct constructions.

pub mod branch;
pub mod bsp;
pub mod eigen;
pub mod mixing;
pub mod rotation;
pub mod scheduler;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mag::{Mag, Num};
use crate::params::{compose_run, CutSpacParam, ParamSeq, StepSummary};

use bsp::BspCycle;
use eigen::{EigenvalueState, Theta};
use mixing::{MixingConfig, MixingEmission};

/// Largest cutting parameter for which explicit spacer vectors are kept.
pub const MATERIALIZE_CAP: u64 = 1 << 16;

/// One generated step: exact or enclosed summary data, plus the explicit
/// spacer vector when it is small enough to keep.
#[derive(Clone, Debug, PartialEq)]
pub struct GenStep {
    pub q: Num,
    pub total: Num,
    pub first: Num,
    pub last: Num,
    pub inner_max: Num,
    pub entry: Option<CutSpacParam>,
}

impl GenStep {
    pub fn from_entry(p: CutSpacParam) -> GenStep {
        let mut g = GenStep::from_summary(&p.summary());
        if p.q <= MATERIALIZE_CAP {
            g.entry = Some(p);
        }
        g
    }

    pub fn from_summary(s: &StepSummary) -> GenStep {
        GenStep {
            q: Num::from_big(s.q.clone()),
            total: Num::from_big(s.total.clone()),
            first: Num::from_big(s.first.clone()),
            last: Num::from_big(s.last.clone()),
            inner_max: Num::from_big(s.inner_max.clone()),
            entry: None,
        }
    }

    /// Zero spacers except `last` on top.
    pub fn with_top(q: Num, last: Num) -> GenStep {
        if let (Some(qv), Some(lv)) = (q.exact().and_then(|v| v.to_u64()), last.exact().and_then(|v| v.to_u64())) {
            if qv <= MATERIALIZE_CAP {
                let mut spacers = vec![0; qv as usize + 1];
                spacers[qv as usize] = lv;
                return GenStep::from_entry(CutSpacParam { q: qv, spacers });
            }
        }
        GenStep {
            q,
            total: last.clone(),
            first: Num::from_u64(0),
            last,
            inner_max: Num::from_u64(0),
            entry: None,
        }
    }

    pub fn max_spacer(&self) -> Num {
        self.first.max(&self.last).max(&self.inner_max)
    }

    pub fn summary(&self) -> Option<StepSummary> {
        Some(StepSummary {
            q: self.q.exact()?.clone(),
            total: self.total.exact()?.clone(),
            first: self.first.exact()?.clone(),
            last: self.last.exact()?.clone(),
            inner_max: self.inner_max.exact()?.clone(),
        })
    }

    pub fn q_u64(&self) -> Option<u64> {
        self.q.exact().and_then(|v| v.to_u64())
    }
}

/// A generated prefix with heights `h_0..h_n` and spacer maxima `Z_0..Z_{n-1}`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Prefix {
    pub steps: Vec<GenStep>,
    pub h: Vec<Num>,
    pub z: Vec<Num>,
}

impl Prefix {
    pub fn new() -> Prefix {
        Prefix {
            steps: Vec::new(),
            h: vec![Num::from_u64(1)],
            z: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, s: GenStep) {
        let h = s.q.mul(self.h.last().unwrap()).add(&s.total);
        let z = match self.z.last() {
            Some(prev) => prev.max(&s.max_spacer()),
            None => s.max_spacer(),
        };
        self.h.push(h);
        self.z.push(z);
        self.steps.push(s);
    }

    pub fn h_u64(&self, n: usize) -> Option<u64> {
        self.h[n].exact().and_then(|v| v.to_u64())
    }

    /// The explicit parameter sequence, when every step was materialized.
    pub fn param_seq(&self) -> Result<ParamSeq> {
        let entries = self
            .steps
            .iter()
            .enumerate()
            .map(|(n, s)| {
                s.entry
                    .clone()
                    .ok_or_else(|| Error::TooLarge(format!("step {n} with q = {}", s.q.render())))
            })
            .collect::<Result<Vec<_>>>()?;
        ParamSeq::new(entries)
    }

    pub fn summaries(&self) -> Option<Vec<StepSummary>> {
        self.steps.iter().map(GenStep::summary).collect()
    }
}

/// Which flexible class a generator draws from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassKind {
    Odometer,
    Bsp { name: String, cycle: Vec<CutSpacParam> },
    Rotation { head: Vec<u64>, n0: usize },
    Eigenvalue { theta: String },
    Mixing { config: MixingConfig },
}

#[derive(Clone, Debug)]
enum GenState {
    Plain,
    Bsp(BspCycle),
    Rotation { c_tilde: BigUint, head_step: CutSpacParam },
    Eigen(Box<EigenvalueState>),
    Mixing(Vec<MixingEmission>),
}

/// Step-wise generator for one flexible class with its constants: every
/// emission has `Z_n ≤ C h_n` and `σ_n ≤ C' q_n h_{n-1}`.
#[derive(Clone, Debug)]
pub struct FlexibleClassGen {
    pub kind: ClassKind,
    pub c: BigUint,
    pub c_prime: BigUint,
    state: GenState,
}

impl FlexibleClassGen {
    pub fn odometer() -> FlexibleClassGen {
        FlexibleClassGen {
            kind: ClassKind::Odometer,
            c: BigUint::one(),
            c_prime: BigUint::one(),
            state: GenState::Plain,
        }
    }

    pub fn chacon() -> FlexibleClassGen {
        FlexibleClassGen::bsp("chacon", vec![CutSpacParam::chacon()]).expect("Chacon is BSP")
    }

    pub fn bsp(name: &str, cycle: Vec<CutSpacParam>) -> Result<FlexibleClassGen> {
        let cyc = BspCycle::new(cycle.clone())?;
        let c = BigUint::from(cyc.constant().max(1));
        Ok(FlexibleClassGen {
            kind: ClassKind::Bsp {
                name: name.to_string(),
                cycle,
            },
            c_prime: c.clone(),
            c,
            state: GenState::Bsp(cyc),
        })
    }

    /// Rotation parameters with the head `Q_0..Q_{n0}` collapsed into step 0.
    pub fn rotation(head: Vec<u64>, n0: usize) -> Result<FlexibleClassGen> {
        if head.len() != n0 + 1 || head.iter().any(|&c| c == 0) {
            return Err(Error::Input(format!("rotation head needs {} positive coefficients", n0 + 1)));
        }
        let prod: u128 = head.iter().map(|&c| c as u128).product();
        if prod < 3 {
            return Err(Error::Input(format!("collapsed first coefficient {prod} must be at least 3")));
        }
        let h = rotation::convergent_denominators(&head);
        let mut prev = BigUint::zero();
        let mut tilde = Vec::new();
        for (k, &q) in head.iter().enumerate() {
            let top = prev.to_u64().ok_or_else(|| Error::TooLarge("rotation head height".into()))?;
            let mut spacers = vec![0; q as usize + 1];
            spacers[q as usize] = top;
            tilde.push(CutSpacParam { q, spacers });
            prev = h[k].clone();
        }
        let head_step = compose_run(&tilde);
        let c_tilde = h[n0].clone();
        Ok(FlexibleClassGen {
            kind: ClassKind::Rotation { head, n0 },
            c: c_tilde.clone(),
            c_prime: c_tilde.clone(),
            state: GenState::Rotation { c_tilde, head_step },
        })
    }

    pub fn eigenvalue(theta: Theta, label: &str) -> Result<FlexibleClassGen> {
        let state = EigenvalueState::new(theta)?;
        Ok(FlexibleClassGen {
            kind: ClassKind::Eigenvalue { theta: label.to_string() },
            c: BigUint::from(7u32),
            c_prime: BigUint::from(7u32),
            state: GenState::Eigen(Box::new(state)),
        })
    }

    pub fn mixing(config: MixingConfig) -> FlexibleClassGen {
        FlexibleClassGen {
            kind: ClassKind::Mixing { config },
            c: BigUint::from(2u32),
            c_prime: BigUint::from(2u32),
            state: GenState::Mixing(Vec::new()),
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ClassKind::Odometer => "odometer".into(),
            ClassKind::Bsp { name, .. } => format!("bsp:{name}"),
            ClassKind::Rotation { .. } => "rotation".into(),
            ClassKind::Eigenvalue { .. } => "eigenvalue".into(),
            ClassKind::Mixing { .. } => "mixing".into(),
        }
    }

    /// Sampler certificates of every mixing step emitted so far.
    pub fn mixing_emissions(&self) -> &[MixingEmission] {
        match &self.state {
            GenState::Mixing(v) => v,
            _ => &[],
        }
    }

    pub fn eigen_state(&self) -> Option<&EigenvalueState> {
        match &self.state {
            GenState::Eigen(s) => Some(s),
            _ => None,
        }
    }

    /// Least admissible cutting parameter `≥ floor` for the next step, without
    /// advancing the generator (stochastic and search-based classes report
    /// the floor itself).
    pub fn next_admissible(&self, floor: &Num) -> Result<Num> {
        match &self.state {
            GenState::Bsp(c) => c.peek(floor).map(|s| s.q),
            _ => Ok(floor.max(&Num::from_u64(2))),
        }
    }

    /// Emit step `n = prefix.len()` with `q_n ≥ floor`.
    pub fn extend(&mut self, prefix: &Prefix, floor: &Num) -> Result<GenStep> {
        let n = prefix.len();
        let floor = floor.max(&Num::from_u64(if n == 0 { 3 } else { 2 }));
        let step = match &mut self.state {
            GenState::Plain => {
                let q = round_up(&floor);
                match q.exact().and_then(|v| v.to_u64()) {
                    Some(v) if v <= MATERIALIZE_CAP => GenStep::from_entry(CutSpacParam::odometer(v)),
                    _ => GenStep::with_top(q, Num::from_u64(0)),
                }
            }
            GenState::Bsp(c) => c.advance(&floor)?,
            GenState::Rotation { c_tilde, head_step } => {
                if n == 0 {
                    if floor.le(&Num::from_u64(head_step.q)) != Some(true) {
                        return Err(Error::Unreachable(format!(
                            "the collapsed head q_0 = {} is below the floor {}",
                            head_step.q,
                            floor.render()
                        )));
                    }
                    GenStep::from_entry(head_step.clone())
                } else {
                    let top = if n == 1 {
                        Num::from_big(c_tilde.clone())
                    } else {
                        prefix.h[n - 1].clone()
                    };
                    GenStep::with_top(round_up(&floor), top)
                }
            }
            GenState::Eigen(state) => {
                let qmin = small(&floor, "eigenvalue floor")?;
                let p = if n == 0 {
                    eigen::eigenvalue_first(state, qmin)?
                } else {
                    let h = prefix.h_u64(n).ok_or_else(|| Error::TooLarge("eigenvalue height".into()))?;
                    eigen::eigenvalue_step(state, n, h, qmin)?
                };
                GenStep::from_entry(p)
            }
            GenState::Mixing(log) => {
                let qmin = small(&floor, "mixing floor")?;
                let p = if n == 0 {
                    CutSpacParam::odometer(qmin)
                } else {
                    let ClassKind::Mixing { config } = &self.kind else {
                        unreachable!()
                    };
                    let h = prefix.h_u64(n - 1).ok_or_else(|| Error::TooLarge("mixing height".into()))?;
                    let (p, em) = mixing::mixing_step(config, n, h, qmin)?;
                    log.push(em);
                    p
                };
                GenStep::from_entry(p)
            }
        };
        self.check_emission(prefix, &step)?;
        Ok(step)
    }

    /// `Z ≤ C h_{n+1}`, `σ_n ≤ C' q_n h_{n-1}` and `q_n ≥ 2`, certified.
    pub fn check_emission(&self, prefix: &Prefix, s: &GenStep) -> Result<()> {
        let n = prefix.len();
        let c = Num::from_big(self.c.clone());
        let cp = Num::from_big(self.c_prime.clone());
        let h_next = s.q.mul(&prefix.h[n]).add(&s.total);
        let fail = |what: &str| Err(Error::Invariant(format!("{} step {n}: {what}", self.label())));
        if s.max_spacer().le(&c.mul(&h_next)) != Some(true) {
            return fail("spacer maximum exceeds C h_{n+1}");
        }
        if n >= 1 && s.total.le(&cp.mul(&s.q).mul(&prefix.h[n - 1])) != Some(true) {
            return fail("σ_n exceeds C' q_n h_{n-1}");
        }
        if s.q.le(&Num::from_u64(1)) != Some(false) {
            return fail("cutting parameter below 2");
        }
        Ok(())
    }
}

fn small(v: &Num, what: &str) -> Result<u64> {
    v.exact()
        .and_then(|x| x.to_u64())
        .ok_or_else(|| Error::Unreachable(format!("{what} {} is beyond the enumerable range", v.render())))
}

/// An integer `≥ v`: `v` itself when exact, the upper endpoint otherwise.
pub fn round_up(v: &Num) -> Num {
    match v {
        Num::Exact(_) => v.clone(),
        Num::Approx(m) => Num::Approx(Mag::point(m.hi)),
    }
}
