//! Closed-form bounds on the φ-integrals of both cocycles: the terms
//! `Δ(n)`, `Δ_ε(n)`, `Γ_1(n)`, `Γ_2(n)`, `Γ_3(n,m)`, `Γ_ε(n,m)`, their partial
//! sums and the two master bounds, plus the geometric envelopes that hold on
//! scheduler-strict families.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::classes::scheduler::Schedule;
use crate::engine::{recurrence_tables, Construction, StageOneRule};
use crate::error::{Error, Result};
use crate::mag::{Mag, Num};
use crate::params::{MeasureModel, ParamSeq};
use crate::phi::PhiSpec;
use crate::rational::big_to_ratio;

/// Combined numerator and denominator size above which a value becomes an
/// enclosure.
const EXACT_VAL_BITS: u64 = 1 << 12;

/// An exact non-negative rational, or a certified enclosure of one.
#[derive(Clone, Debug, PartialEq)]
pub enum Val {
    Exact(BigRational),
    Upper(Mag),
}

impl Val {
    pub fn zero() -> Val {
        Val::Exact(BigRational::zero())
    }

    pub fn from_u64(v: u64) -> Val {
        Val::Exact(BigRational::from_integer(v.into()))
    }

    pub fn from_num(n: &Num) -> Val {
        match n {
            Num::Exact(v) => Val::settle(big_to_ratio(v)),
            Num::Approx(m) => Val::Upper(*m),
        }
    }

    /// `2^k`.
    pub fn pow2(k: i64) -> Val {
        if k.unsigned_abs() < EXACT_VAL_BITS {
            let p = BigRational::from_integer(num_bigint::BigInt::one() << k.unsigned_abs());
            Val::Exact(if k >= 0 { p } else { p.recip() })
        } else {
            Val::Upper(Mag::pow2(k))
        }
    }

    fn settle(r: BigRational) -> Val {
        if r.numer().bits() + r.denom().bits() > EXACT_VAL_BITS {
            Val::Upper(Mag::from_ratio(&r))
        } else {
            Val::Exact(r)
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Val::Exact(_))
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Val::Exact(r) => Some(r),
            Val::Upper(_) => None,
        }
    }

    pub fn mag(&self) -> Mag {
        match self {
            Val::Exact(r) => Mag::from_ratio(r),
            Val::Upper(m) => *m,
        }
    }

    fn integer(&self) -> Option<BigUint> {
        match self {
            Val::Exact(r) if r.is_integer() => r.numer().to_biguint(),
            _ => None,
        }
    }

    pub fn add(&self, o: &Val) -> Val {
        match (self, o) {
            (Val::Exact(a), Val::Exact(b)) => Val::settle(a + b),
            _ => Val::Upper(self.mag().add(&o.mag())),
        }
    }

    pub fn mul(&self, o: &Val) -> Val {
        match (self, o) {
            (Val::Exact(a), Val::Exact(b)) => Val::settle(a * b),
            _ => Val::Upper(self.mag().mul(&o.mag())),
        }
    }

    /// Quotient by a positive value.
    pub fn div(&self, o: &Val) -> Val {
        match (self, o) {
            (Val::Exact(a), Val::Exact(b)) => Val::settle(a / b),
            _ => Val::Upper(self.mag().div(&o.mag())),
        }
    }

    pub fn mul_u64(&self, k: u64) -> Val {
        self.mul(&Val::from_u64(k))
    }

    pub fn min(&self, o: &Val) -> Val {
        match (self, o) {
            (Val::Exact(a), Val::Exact(b)) => Val::Exact(a.min(b).clone()),
            _ => Val::Upper(self.mag().min(&o.mag())),
        }
    }

    /// Certified `self <= o`.
    pub fn certainly_le(&self, o: &Val) -> bool {
        match (self, o) {
            (Val::Exact(a), Val::Exact(b)) => a <= b,
            _ => self.mag().certainly_le(&o.mag()),
        }
    }

    /// Upper end as a double (`inf` when out of range).
    pub fn upper_f64(&self) -> f64 {
        self.mag().hi.to_f64()
    }

    pub fn log2_upper(&self) -> f64 {
        self.mag().hi.log2()
    }

    pub fn render(&self) -> String {
        match self {
            Val::Exact(r) if r.numer().bits() + r.denom().bits() <= 256 => r.to_string(),
            other => format!("<= {}", other.mag().hi),
        }
    }
}

impl Serialize for Val {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Val", 3)?;
        st.serialize_field("exact", &self.exact().map(|r| r.to_string()))?;
        st.serialize_field("upper", &self.mag().hi.to_string())?;
        st.serialize_field("log2_upper", &finite_or_none(self.log2_upper()))?;
        st.end()
    }
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Upper bound of `Φ(t)` at a non-negative integer argument.
fn phi_at(phi: &PhiSpec, t: &Val) -> Val {
    if let Some(v) = t.integer() {
        if let Some(r) = phi.upper_exact(&v) {
            return Val::settle(r);
        }
    }
    Val::Upper(phi.upper(&t.mag()))
}

/// Sequences of a finite prefix feeding the bound terms.
#[derive(Clone, Debug)]
pub struct BoundsInput {
    /// `h_0..h_N`.
    pub h: Vec<Num>,
    /// `Z_0..Z_{N-1}`.
    pub z: Vec<Num>,
    /// `q_0..q_{N-1}`.
    pub q: Vec<Num>,
    /// `σ_0..σ_{N-1}`.
    pub sigma: Vec<Num>,
    pub qprime: Vec<Num>,
    pub primes: Vec<u64>,
    /// Upper bounds of `ε_0..ε_N`.
    pub eps: Vec<Val>,
    /// Whether `eps` bounds every continuation of the prefix (scheduler
    /// guarantee) rather than the truncated system alone.
    pub eps_certified: bool,
}

impl BoundsInput {
    /// The truncated system of `params` with its own measure normalization
    /// and the odometer recurrences for the first `n_max` primes.
    pub fn truncated(params: &ParamSeq, primes: &[u64], n_max: usize, rule: StageOneRule) -> Result<BoundsInput> {
        let steps = params.summaries();
        let n = steps.len();
        let tables = recurrence_tables(&steps, primes, n_max.min(n), n, rule)?;
        let measure = MeasureModel::truncated(&steps);
        Ok(BoundsInput {
            h: params.heights().iter().map(|v| Num::from_big(v.clone())).collect(),
            z: params.zmax().iter().map(|v| Num::from_big(v.clone())).collect(),
            q: steps.iter().map(|s| Num::from_big(s.q.clone())).collect(),
            sigma: params.sigma().iter().map(|v| Num::from_big(v.clone())).collect(),
            qprime: tables.qprime.into_iter().map(Num::from_big).collect(),
            primes: primes[..n_max.min(n)].to_vec(),
            eps: (0..=n).map(|k| Val::settle(measure.epsilon(k))).collect(),
            eps_certified: false,
        })
    }

    /// The truncated system behind a built construction.
    pub fn from_construction(c: &Construction) -> Result<BoundsInput> {
        let params = c.params().truncated(c.m_max());
        BoundsInput::truncated(&params, c.primes(), c.n_max(), c.rule())
    }

    /// A scheduled prefix, with `ε_n` enclosures valid for every
    /// continuation satisfying the scheduler guarantee.
    pub fn from_schedule(s: &Schedule) -> BoundsInput {
        let p = &s.prefix;
        let n = p.len();
        let eps = match s.summaries() {
            Some(steps) if n > 0 => {
                let m = MeasureModel::truncated(&steps);
                (0..=n).map(|k| Val::settle(m.epsilon_interval(k, &s.c_prime).1)).collect()
            }
            _ => eps_enclosure(&p.steps.iter().map(|g| (g.q.mag(), g.total.mag())).collect::<Vec<_>>(), &s.c_prime),
        };
        BoundsInput {
            h: p.h.clone(),
            z: p.z.clone(),
            q: p.steps.iter().map(|g| g.q.clone()).collect(),
            sigma: p.steps.iter().map(|g| g.total.clone()).collect(),
            qprime: s.qprime.clone(),
            primes: s.primes.clone(),
            eps,
            eps_certified: true,
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    fn hprime(&self) -> Vec<Val> {
        let mut v = vec![Val::from_u64(1)];
        for q in &self.qprime {
            let next = v.last().unwrap().mul(&Val::from_num(q));
            v.push(next);
        }
        v
    }

    fn big_h(hp: &[Val]) -> Vec<Val> {
        let mut v = vec![Val::zero()];
        for h in &hp[1..] {
            let next = v.last().unwrap().add(h);
            v.push(next);
        }
        v
    }

    /// `q_0…q_{n-1}` for `n = 0..=N`.
    fn products(&self) -> Vec<Val> {
        let mut v = vec![Val::from_u64(1)];
        for q in &self.q {
            let next = v.last().unwrap().mul(&Val::from_num(q));
            v.push(next);
        }
        v
    }
}

/// `ε_n` upper bounds from `(q_k, σ_k)` enclosures: the truncated tail
/// under the largest admissible `M_0` plus `(C'+1)/q_{N-1}`.
fn eps_enclosure(steps: &[(Mag, Mag)], c_prime: &BigUint) -> Vec<Val> {
    let n = steps.len();
    let mut prod = vec![Mag::ONE];
    for (q, _) in steps {
        let next = prod.last().unwrap().mul(q);
        prod.push(next);
    }
    let mut tail = vec![Mag::ZERO; n + 1];
    for k in (0..n).rev() {
        tail[k] = tail[k + 1].add(&steps[k].1.div(&prod[k + 1]));
    }
    let m0 = Mag::ONE.div(&Mag::ONE.add(&tail[0]));
    let rate = Mag::from_big(&(c_prime + 1u32)).div(&steps[n - 1].0);
    (0..=n).map(|k| Val::Upper(m0.mul(&tail[k]).add(&rate))).collect()
}

/// `Γ_3(n, m)` or `Γ_ε(n, m)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairTerm {
    pub n: usize,
    pub m: usize,
    pub value: Val,
}

/// Single-index term.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Term {
    pub n: usize,
    pub value: Val,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub name: &'static str,
    pub terms: Vec<Term>,
    /// Running sums over `terms` (double sums are summed over `m` first).
    pub partial: Vec<Val>,
}

impl Series {
    fn new(name: &'static str, terms: Vec<Term>) -> Series {
        let mut partial: Vec<Val> = Vec::with_capacity(terms.len());
        for t in &terms {
            let next = partial.last().map_or(t.value.clone(), |p| p.add(&t.value));
            partial.push(next);
        }
        Series { name, terms, partial }
    }

    pub fn total(&self) -> Val {
        self.partial.last().cloned().unwrap_or_else(Val::zero)
    }

    pub fn get(&self, n: usize) -> Option<&Val> {
        self.terms.iter().find(|t| t.n == n).map(|t| &t.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub phi: String,
    /// Number of parameter steps the terms were computed from.
    pub steps: usize,
    pub eps_certified: bool,
    pub delta: Series,
    pub delta_eps: Series,
    pub gamma1: Series,
    pub gamma2: Series,
    pub gamma3: Vec<PairTerm>,
    pub gamma_eps: Vec<PairTerm>,
    /// `Σ_m Γ_3(n, m)` per `n ≥ 1`.
    pub gamma3_rows: Series,
    /// `Σ_m Γ_ε(n, m)` per `n ≥ 0`.
    pub gamma_eps_rows: Series,
    /// `Φ(4(h_0+Z_0)(h'_0)^2)`.
    pub head_ct: Val,
    /// `μ(D_1(1)) Φ((h_0+Z_0)h'_0)` with `μ(D_1(1)) ≤ min(1, q'_0/h_1)`.
    pub head_cs: Val,
    /// Bound on the φ-integral of `c_T` from the computed terms.
    pub master_ct: Val,
    /// Bound on the φ-integral of `c_S` from the computed terms.
    pub master_cs: Val,
}

impl BoundsReport {
    pub fn series(&self) -> [&Series; 6] {
        [
            &self.delta,
            &self.delta_eps,
            &self.gamma1,
            &self.gamma2,
            &self.gamma3_rows,
            &self.gamma_eps_rows,
        ]
    }

    /// Whitespace-separated `n value log2` rows of one series.
    pub fn plot_data(&self, series: &Series) -> String {
        let mut out = format!("# {} ({})\n# n upper log2_upper\n", series.name, self.phi);
        for t in &series.terms {
            out.push_str(&format!("{} {} {}\n", t.n, t.value.mag().hi, t.value.log2_upper()));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bounds serialize")
    }
}

/// Every term computable from `input`, with `Φ` given by `phi`.
pub fn bounds_tables(input: &BoundsInput, phi: &PhiSpec) -> Result<BoundsReport> {
    if !phi.is_certified() {
        return Err(Error::Input(format!(
            "φ = {} has no certified upper evaluation; normalize it to an increasing subadditive family",
            phi.label()
        )));
    }
    let big_n = input.len();
    if big_n == 0 {
        return Err(Error::Input("bounds need at least one parameter step".into()));
    }
    let h: Vec<Val> = input.h.iter().map(Val::from_num).collect();
    let z: Vec<Val> = input.z.iter().map(Val::from_num).collect();
    let hp = input.hprime();
    let bh = BoundsInput::big_h(&hp);
    let nq = input.qprime.len();
    let f = |t: &Val| phi_at(phi, t);
    // φ(a)/h + φ(b)/h
    let pair_over = |a: &Val, b: &Val, d: &Val| f(a).add(&f(b)).div(d);

    let mut delta = Vec::new();
    let mut delta_eps = Vec::new();
    let mut gamma1 = Vec::new();
    let mut gamma2 = Vec::new();
    for n in 0..big_n.saturating_sub(1) {
        if n > nq {
            break;
        }
        let (h1, z1) = (&h[n + 1], &z[n + 1]);
        let h2 = h1.mul(h1);
        let h3 = h2.mul(h1);
        let hp2 = hp[n].mul(&hp[n]);
        let cubic = f(&h3).add(&f(&z1.mul(&h2)));
        if n < input.primes.len() {
            let spread = bh[n].add(&hp[n].mul_u64(input.primes[n]));
            let lead = Val::from_u64(1).add(&spread.mul_u64(2));
            delta.push(Term {
                n,
                value: lead.mul(&hp2).mul(&cubic.div(h1)),
            });
            gamma2.push(Term {
                n,
                value: spread.mul(&hp[n]).mul(&pair_over(h1, z1, h1)),
            });
        }
        delta_eps.push(Term {
            n,
            value: input.eps[n + 1].mul(&hp2).mul(&cubic),
        });
        gamma1.push(Term {
            n,
            value: hp[n].mul_u64(4).mul(&pair_over(&h2, &z1.mul(h1), h1)),
        });
    }

    let mut gamma3 = Vec::new();
    let mut gamma_eps = Vec::new();
    for n in 0..=nq.min(big_n) {
        for m in n + 1..big_n {
            let (hm, zm) = (&h[m], &z[m]);
            if n >= 1 {
                gamma3.push(PairTerm {
                    n,
                    m,
                    value: bh[n].mul(&hp[n - 1]).mul(&pair_over(hm, zm, hm)),
                });
            }
            gamma_eps.push(PairTerm {
                n,
                m,
                value: input.eps[m].mul(&hp[n]).mul(&f(hm).add(&f(zm))),
            });
        }
    }
    let rows = |terms: &[PairTerm]| -> Vec<Term> {
        let mut out: Vec<Term> = Vec::new();
        for t in terms {
            match out.last_mut() {
                Some(last) if last.n == t.n => last.value = last.value.add(&t.value),
                _ => out.push(Term {
                    n: t.n,
                    value: t.value.clone(),
                }),
            }
        }
        out
    };

    let base = h[0].add(&z[0]);
    let head_ct = f(&base.mul_u64(4).mul(&hp[0]).mul(&hp[0]));
    let d11 = if nq >= 1 {
        Val::from_num(&input.qprime[0]).div(&h[1]).min(&Val::from_u64(1))
    } else {
        Val::from_u64(1)
    };
    let head_cs = d11.mul(&f(&base.mul(&hp[0])));

    let delta = Series::new("delta", delta);
    let delta_eps = Series::new("delta_eps", delta_eps);
    let gamma1 = Series::new("gamma1", gamma1);
    let gamma2 = Series::new("gamma2", gamma2);
    let gamma3_rows = Series::new("gamma3", rows(&gamma3));
    let gamma_eps_rows = Series::new("gamma_eps", rows(&gamma_eps));
    let master_ct = head_ct
        .add(&delta.total().mul_u64(4))
        .add(&delta_eps.total().mul_u64(4));
    let master_cs = head_cs
        .add(&gamma1.total())
        .add(&gamma2.total())
        .add(&gamma3_rows.total())
        .add(&gamma_eps_rows.total());
    Ok(BoundsReport {
        phi: phi.label(),
        steps: big_n,
        eps_certified: input.eps_certified,
        delta,
        delta_eps,
        gamma1,
        gamma2,
        gamma3,
        gamma_eps,
        gamma3_rows,
        gamma_eps_rows,
        head_ct,
        head_cs,
        master_ct,
        master_cs,
    })
}

/// Per-`n` geometric envelopes of a scheduled family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeRow {
    pub n: usize,
    /// `Δ(n) ≤ 2^{-n}`.
    pub delta: Option<bool>,
    /// `Σ_{m>n} Γ_3(n,m) ≤ 2^{-(n+1)}`, with the terms beyond the prefix
    /// bounded by `2^{-(m+1)}`.
    pub gamma3: Option<bool>,
    /// `Δ_ε(n) ≤ 2^{-(n-1)} h_{n+1}/(q_0…q_n)`, a lower bound of `2^{-(n-1)}/M_0`.
    pub delta_eps: Option<bool>,
    /// `ε_n ≤ 2/q_{n-1}` (`n ≥ 1`).
    pub eps: Option<bool>,
}

impl EnvelopeRow {
    pub fn passed(&self) -> bool {
        [self.delta, self.gamma3, self.delta_eps, self.eps]
            .iter()
            .all(|v| *v != Some(false))
    }
}

pub fn envelope_checks(input: &BoundsInput, report: &BoundsReport, n_max: usize) -> Vec<EnvelopeRow> {
    let big_n = input.len();
    let prods = input.products();
    let h: Vec<Val> = input.h.iter().map(Val::from_num).collect();
    (0..=n_max)
        .map(|n| {
            let delta = report.delta.get(n).map(|d| d.certainly_le(&Val::pow2(-(n as i64))));
            let gamma3 = (n >= 1 && n + 1 < big_n).then(|| {
                let row = report.gamma3_rows.get(n).cloned().unwrap_or_else(Val::zero);
                row.add(&Val::pow2(-(big_n as i64)))
                    .certainly_le(&Val::pow2(-(n as i64 + 1)))
            });
            let delta_eps = report.delta_eps.get(n).map(|d| {
                let mass = h[n + 1].div(&prods[n + 1]);
                d.certainly_le(&mass.mul(&Val::pow2(1 - n as i64)))
            });
            let eps = (n >= 1 && n <= big_n).then(|| {
                input.eps[n].certainly_le(&Val::from_u64(2).div(&Val::from_num(&input.q[n - 1])))
            });
            EnvelopeRow {
                n,
                delta,
                gamma3,
                delta_eps,
                eps,
            }
        })
        .collect()
}

/// Exact rational `≥ 0` check used by invariants.
pub fn non_negative(v: &Val) -> bool {
    match v {
        Val::Exact(r) => !r.is_negative(),
        Val::Upper(m) => m.hi.to_f64() >= 0.0,
    }
}
