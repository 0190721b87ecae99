//! Acceptance suite: one pass/fail line per criterion.

use std::collections::{BTreeMap, HashSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rank1_oe::classes::mixing::{ornstein_sample, MixingEmission, OrnsteinParams};
use rank1_oe::classes::rotation::rotation_params;
use rank1_oe::classes::scheduler::{schedule, Mode, Schedule, ScheduleConfig};
use rank1_oe::classes::FlexibleClassGen;
use rank1_oe::engine::{recurrence_tables, Construction, SEvaluator, SOutcome, StageOneRule};
use rank1_oe::io::{generate, ClassConfig, ParamsFile, TablesFile};
use rank1_oe::params::{skip_steps, ParamSeq};
use rank1_oe::phi::PhiSpec;
use rank1_oe::stats::{bounds_tables, cocycle_histogram, compare, envelope_checks, BoundsInput};
use rank1_oe::verify::{run_suite, Suite, VerifyOptions};

type Outcome = Result<String, String>;

const PRIMES: [u64; 4] = [2, 3, 2, 3];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn mixing_config(steps: usize, seed: u64) -> ClassConfig {
    ClassConfig {
        class: "mixing".into(),
        mode: Some(Mode::Relaxed),
        steps: Some(steps),
        seed: Some(seed),
        epsilon: Some(0.5),
        mixing_n: Some(6),
        ..ClassConfig::default()
    }
}

/// The five test families, each with its largest `(N, M)`.
fn families() -> Result<Vec<(&'static str, ParamSeq, usize, usize)>, String> {
    let mixing = generate(&mixing_config(2, 7)).map_err(err)?.file.param_seq().map_err(err)?;
    Ok(vec![
        ("odometer q=4", ParamSeq::odometer(&[4; 6]), 4, 6),
        ("chacon", ParamSeq::chacon(6), 4, 6),
        ("chacon skip-composed", skip_steps(&ParamSeq::chacon(8), &[0, 2, 4, 6]).map_err(err)?.seq, 4, 4),
        ("rotation prefix", rotation_params(&[2, 3, 7, 9, 11, 12], 1).map_err(err)?.seq, 4, 5),
        ("mixing sample", mixing, 2, 2),
    ])
}

/// Families for the evaluator-based criteria, kept at moderate resolution.
fn evaluators() -> Result<Vec<(&'static str, SEvaluator)>, String> {
    families()?
        .into_iter()
        .map(|(name, seq, n, m)| {
            let m = m.min(if seq.q(0) > 4 { 4 } else { 5 });
            let n = n.min(3).min(m);
            let c = Construction::build(&seq, &PRIMES, n, m, StageOneRule::FullTower).map_err(err)?;
            Ok((name, SEvaluator::new(c).map_err(err)?))
        })
        .collect()
}

fn zmax(seq: &ParamSeq, k: usize) -> u64 {
    seq.entries()[k].spacers.iter().copied().max().unwrap_or(0)
}

fn hprime(c: &Construction, n: usize) -> u64 {
    c.qprime()[..n].iter().product()
}

fn oracle_equivalence() -> Outcome {
    let mut compared = 0;
    for (name, seq, n_max, m_max) in families()? {
        ensure(seq.entries()[..m_max].iter().all(|e| e.q <= 12), || format!("{name}: q above 12"))?;
        for n in 1..=n_max {
            for m in n..=m_max {
                let c = Construction::build(&seq, &PRIMES, n, m, StageOneRule::FullTower).map_err(err)?;
                let t = recurrence_tables(&seq.truncated(m).summaries(), &PRIMES, n, m, StageOneRule::FullTower)
                    .map_err(err)?;
                c.matches_tables(&t).map_err(|e| format!("{name} (N={n}, M={m}): {e}"))?;
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} (family, N, M) cases equal"))
}

fn cocycle_bounds() -> Outcome {
    let (mut zetas, mut values) = (0u64, 0u64);
    for (name, ev) in evaluators()? {
        let c = ev.construction();
        let seq = c.params();
        let heights = c.tower().heights();
        for e in c.entries() {
            let bound = heights[e.m - 1] + zmax(seq, e.m - 1);
            for (_, _, d) in e.zeta() {
                zetas += 1;
                ensure(d > 0 && d <= bound, || format!("{name}: ζ_{}({}) step {d} > {bound}", e.n, e.m))?;
            }
        }
        let mut images = HashSet::new();
        for x in 0..ev.resolution() {
            if let SOutcome::Image { to, c: k, n, m } = ev.s_apply(x) {
                values += 1;
                let bound = (heights[m - 1] + zmax(seq, m - 1)) as i64 * hprime(c, n - 1) as i64;
                ensure(k != 0 && k.abs() <= bound, || format!("{name}: |c_S({x})| = {} > {bound}", k.abs()))?;
                ensure(x as i64 + k == to as i64, || format!("{name}: T^{k} {x} ≠ {to}"))?;
                ensure(images.insert(to), || format!("{name}: S not injective at {x}"))?;
            }
        }
    }
    Ok(format!("{zetas} ζ steps and {values} c_S values within bounds"))
}

fn orbit_surrogate() -> Outcome {
    let mut levels = 0;
    for (name, ev) in evaluators()? {
        let c = ev.construction();
        for n in 1..=c.n_max().min(3) {
            let report = ev.verify_orbit_on_k(n).map_err(err)?;
            let sub = SEvaluator::new(
                Construction::build(c.params(), c.primes(), n, n, c.rule()).map_err(err)?,
            )
            .map_err(err)?;
            let k_set = sub.build_k(n).map_err(err)?.levels;
            let hp = hprime(c, n - 1);
            let bound = 4 * (c.tower().height(n - 1) + zmax(c.params(), n - 1)) * hp * hp;
            let witnesses: BTreeMap<u64, i64> = report.witnesses.iter().copied().collect();
            for &x in &k_set {
                let &k = witnesses.get(&x).ok_or_else(|| format!("{name}: no k for level {x} of K_{n}"))?;
                ensure(k.unsigned_abs() <= bound, || format!("{name}: |k| = {} > {bound} on K_{n}", k.abs()))?;
                let mut y = x;
                for _ in 0..k.unsigned_abs() {
                    let step = if k > 0 { sub.s_apply(y) } else { sub.s_apply_inverse(y) };
                    y = match step {
                        SOutcome::Image { to, .. } => to,
                        SOutcome::Unresolved(u) => return Err(format!("{name}: S-orbit of {x} leaves stage {n}: {u:?}")),
                    };
                }
                ensure(y + 1 == x, || format!("{name}: S^{k} {x} = {y}, not T^-1 {x}"))?;
                levels += 1;
            }
        }
    }
    Ok(format!("{levels} levels of K_n (n ≤ 3) with T^-1 x = S^k x in bound"))
}

fn partition_counts() -> Outcome {
    let mut cases = 0;
    for (name, ev) in evaluators()? {
        let c = ev.construction();
        let big_h = |n: usize| (1..=n).map(|k| hprime(c, k)).sum::<u64>();
        for n in 1..=c.n_max() {
            let mut seen = HashSet::new();
            for y in ev.base_points(n) {
                for x in ev.column(n, y) {
                    ensure(seen.insert(x), || format!("{name}: R'_{n} levels overlap at {x}"))?;
                }
            }
            ensure(ev.partition_check(n).map_err(err)?.passed(), || format!("{name}: R'_{n} check failed"))?;
            for m in n..=c.m_max() {
                let outside = c.tower().height(m) - ev.build_e(n, m).map_err(err)?.len() as u64;
                let bound = if n < m {
                    big_h(n)
                } else {
                    big_h(n - 1) + c.primes()[n - 1] * hprime(c, n - 1)
                };
                ensure(outside <= bound, || format!("{name}: |X_{m} \\ E_{n},{m}| = {outside} > {bound}"))?;
                cases += 1;
            }
        }
    }
    Ok(format!("R'_n disjoint and {cases} E_(n,m) counts within bounds"))
}

fn strict_schedule(mut gen: FlexibleClassGen, steps: usize) -> Result<Schedule, String> {
    let cfg = ScheduleConfig::new(steps, Mode::Strict, rank1_oe::engine::default_primes(steps));
    schedule(&mut gen, &PhiSpec::quarter(), &cfg).map_err(err)
}

fn qprime_bounds() -> Outcome {
    let mut checked = 0;
    for (name, seq, n_max, m_max) in families()? {
        let steps = seq.truncated(m_max).summaries();
        let t = recurrence_tables(&steps, &PRIMES, n_max, m_max, StageOneRule::FullTower).map_err(err)?;
        let mut prod = BigUint::from(1u32);
        for (n, qp) in t.qprime.iter().enumerate() {
            let q = BigUint::from(seq.q(n));
            let sigma = &steps[n].total;
            ensure(qp + BigUint::from(1 + PRIMES[n]) >= q, || format!("{name}: q'_{n} = {qp} below q - 1 - p"))?;
            ensure(qp * &prod <= BigUint::from(3u32) * &q * &prod + sigma, || format!("{name}: q'_{n} = {qp} above 3q + σ/Π"))?;
            prod *= qp;
            checked += 1;
        }
    }
    let mut ratios = 0;
    let strict = [
        ("odometer", FlexibleClassGen::odometer()),
        ("chacon", FlexibleClassGen::chacon()),
        ("rotation", FlexibleClassGen::rotation(vec![1 << 22], 0).map_err(err)?),
    ];
    for (name, gen) in strict {
        let s = strict_schedule(gen, 6)?;
        if let Some(steps) = s.summaries() {
            let t = recurrence_tables(&steps, &s.primes, s.len() - 1, s.len(), s.rule).map_err(err)?;
            for (n, qp) in t.qprime.iter().enumerate() {
                ensure(*qp <= &steps[n].q * 4u32, || format!("strict {name}: q'_{n}/q_{n} > 4"))?;
                ratios += 1;
            }
        }
        for e in s.qprime_envelope() {
            ensure(e.passed(), || format!("strict {name}: certified q' envelope fails at {}: {e:?}", e.n))?;
            ratios += 1;
        }
    }
    Ok(format!("{checked} two-sided q' checks, {ratios} ratio checks on strict families"))
}

fn scheduler_envelopes() -> Outcome {
    let mut rows = 0;
    for (name, gen) in [("odometer", FlexibleClassGen::odometer()), ("chacon", FlexibleClassGen::chacon())] {
        let s = strict_schedule(gen, 10)?;
        let input = BoundsInput::from_schedule(&s);
        let report = bounds_tables(&input, &PhiSpec::quarter()).map_err(err)?;
        let env = envelope_checks(&input, &report, 8);
        ensure(env.iter().map(|r| r.n).max() == Some(8), || format!("{name}: envelopes stop before n = 8"))?;
        for r in &env {
            ensure(r.passed(), || format!("{name}: envelope fails at n = {}: {r:?}", r.n))?;
            rows += 1;
        }
    }
    Ok(format!("{rows} envelope rows (n ≤ 8) hold for strict odometer and Chacon"))
}

/// Direct window scan: `|Σ a_j..a_{j+k}| ≤ K` for all windows, and
/// `#{j : window sum = ℓ} < α (m − k)/K` whenever `k < (1 − ε) m`.
fn window_certificate(p: &OrnsteinParams, a: &[i64]) -> bool {
    let m = a.len();
    for k in 0..m {
        let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
        let mut s: i64 = a[..=k].iter().sum();
        for j in 0..m - k {
            if j > 0 {
                s += a[j + k] - a[j - 1];
            }
            if s.unsigned_abs() > p.k {
                return false;
            }
            *counts.entry(s).or_default() += 1;
        }
        if (k as f64) < (1.0 - p.epsilon) * m as f64 {
            let rhs = p.alpha_num as u128 * (m - k) as u128;
            if counts.values().any(|&h| h as u128 * p.k as u128 * p.alpha_den as u128 >= rhs) {
                return false;
            }
        }
    }
    true
}

fn ornstein_certificate() -> Outcome {
    let mut emissions: Vec<MixingEmission> = Vec::new();
    for seed in 0..4 {
        let g = generate(&mixing_config(3, seed)).map_err(err)?;
        emissions.extend(g.file.provenance.ok_or("mixing file without provenance")?.mixing);
    }
    for e in &emissions {
        ensure(window_certificate(&e.params, &e.sample.a) && e.verify(), || format!("emission at step {} fails", e.n))?;
        ensure(e.sample.m > e.params.n, || format!("emission at step {}: m ≤ N", e.n))?;
    }
    let mut direct = 0;
    for (n, k) in [(2000, 1), (4000, 2)] {
        let p = OrnsteinParams::new(n, k, 1e-3, 1);
        let s = ornstein_sample(&p).map_err(err)?;
        ensure(window_certificate(&p, &s.a), || format!("sample N={n} K={k} fails"))?;
        direct += 1;
    }
    // With K = 1 the constant vector meets the count bound since α > 1.
    for k in 2..=5 {
        let p = OrnsteinParams::new(4000, k, 1e-3, 0);
        let zero = vec![0i64; 4001];
        ensure(!window_certificate(&p, &zero), || format!("all-zero vector accepted by the oracle, K={k}"))?;
        ensure(!rank1_oe::classes::mixing::verify_direct(&p, &zero), || format!("all-zero vector accepted, K={k}"))?;
    }
    Ok(format!("{} emitted steps and {direct} direct samples certified; zero vector rejected", emissions.len()))
}

fn phi_normalizer() -> Outcome {
    let phi = PhiSpec::quarter();
    ensure(phi.eval(0.0) == 0.0, || format!("Φ(0) = {}", phi.eval(0.0)))?;
    let grid: Vec<f64> = (0..10_000).map(|i| i as f64 * 0.37).collect();
    for w in grid.windows(2) {
        ensure(phi.eval(w[0]) <= phi.eval(w[1]), || format!("Φ decreases between {} and {}", w[0], w[1]))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let a: f64 = rng.random_range(0.0..1e6);
        let b: f64 = rng.random_range(0.0..1e6);
        let lhs = phi.eval(a + b);
        let rhs = phi.eval(a) + phi.eval(b);
        ensure(lhs <= rhs * (1.0 + 1e-12), || format!("Φ({a} + {b}) = {lhs} > {rhs}"))?;
    }
    Ok("Φ(0) = 0, monotone on 10^4 points, subadditive on 10^3 pairs".into())
}

fn empirical_below_theoretical() -> Outcome {
    let cfg = ClassConfig {
        class: "odometer".into(),
        mode: Some(Mode::Relaxed),
        steps: Some(6),
        ..ClassConfig::default()
    };
    let g = generate(&cfg).map_err(err)?;
    let primes = g.file.provenance.as_ref().ok_or("no provenance")?.primes.clone();
    let seq = g.file.param_seq().map_err(err)?;
    let phi = PhiSpec::quarter();
    let mut line = Vec::new();
    for m in 2..=6 {
        let n = m.min(primes.len());
        let c = Construction::build(&seq, &primes, n, m, StageOneRule::FullTower).map_err(err)?;
        let input = BoundsInput::from_construction(&c).map_err(err)?;
        let ev = SEvaluator::new(c).map_err(err)?;
        let bounds = bounds_tables(&input, &phi).map_err(err)?;
        let verdict = compare(&cocycle_histogram(&ev, &phi, 0).map_err(err)?, &bounds).map_err(err)?;
        let direct: f64 = (0..ev.resolution())
            .filter_map(|x| match ev.s_apply(x) {
                SOutcome::Image { c, .. } => Some(phi.eval(c.unsigned_abs() as f64)),
                _ => None,
            })
            .sum::<f64>()
            / ev.resolution() as f64;
        ensure((direct - verdict.empirical).abs() <= 1e-9 * (1.0 + direct), || {
            format!("M={m}: recount {direct} ≠ reported {}", verdict.empirical)
        })?;
        ensure(direct <= verdict.bound_upper, || format!("M={m}: {direct} > bound {}", verdict.bound_upper))?;
        line.push(format!("M={m}: {direct:.4} ≤ {:.4}", verdict.bound_upper));
    }
    Ok(line.join(", "))
}

fn determinism() -> Outcome {
    let run = || -> Result<Vec<String>, String> {
        let mut out = Vec::new();
        for cfg in [
            mixing_config(3, 7),
            ClassConfig {
                class: "chacon".into(),
                steps: Some(6),
                ..ClassConfig::default()
            },
        ] {
            out.push(generate(&cfg).map_err(err)?.file.to_json());
        }
        let seq = ParamsFile::parse(&out[0], rank1_oe::io::Format::Json).map_err(err)?.param_seq().map_err(err)?;
        let m = seq.len();
        let t = recurrence_tables(&seq.summaries(), &PRIMES, m, m, StageOneRule::FullTower).map_err(err)?;
        out.push(TablesFile::new(&t).to_json());
        let c = Construction::build(&seq, &PRIMES, m.min(2), m, StageOneRule::FullTower).map_err(err)?;
        let report = run_suite(&SEvaluator::new(c).map_err(err)?, Suite::All, &VerifyOptions::default()).map_err(err)?;
        out.push(rank1_oe::io::to_json(&report));
        Ok(out)
    };
    let (a, b) = (run()?, run()?);
    ensure(a == b, || "outputs differ between runs".into())?;
    Ok(format!("{} artifacts byte-identical across two runs", a.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 10] = [
        ("oracle equivalence", oracle_equivalence, Some(Duration::from_secs(10))),
        ("cocycle bounds", cocycle_bounds, None),
        ("orbit equality surrogate", orbit_surrogate, Some(Duration::from_secs(60))),
        ("partition and measure counts", partition_counts, None),
        ("q' bounds", qprime_bounds, None),
        ("scheduler envelopes", scheduler_envelopes, Some(Duration::from_secs(30))),
        ("Ornstein certificate", ornstein_certificate, None),
        ("φ-normalizer", phi_normalizer, None),
        ("empirical ≤ theoretical", empirical_below_theoretical, None),
        ("determinism", determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, limit) {
            if elapsed > *limit {
                outcome = Err(format!("took {elapsed:.2?}, limit {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {why} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
