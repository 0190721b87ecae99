//! File formats: parameter files with provenance, class configs, engine
//! state files and recurrence tables. Big integers travel as decimal strings.

use std::path::Path;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::classes::eigen::Theta;
use crate::classes::mixing::{MixingConfig, MixingEmission, NRule};
use crate::classes::rotation::{parse_decimal, rotation_params, split_integer_part, CfSource};
use crate::classes::scheduler::{schedule, KappaEntry, Mode, Schedule, ScheduleConfig};
use crate::classes::{ClassKind, FlexibleClassGen};
use crate::engine::plan::parse_primes;
use crate::engine::{default_primes, recurrence_tables, Construction, RecurrenceTables, StageOneRule};
use crate::error::{Error, Result};
use crate::params::{CutSpacParam, ParamSeq, StepSummary};
use crate::phi::{phi_normalize, PhiFamily, PhiSpec};

/// One step of a parameter file: explicit spacers, or only the summary of a
/// step too large to write out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamEntry {
    Explicit(CutSpacParam),
    Summary {
        q: String,
        sigma: String,
        first: String,
        last: String,
        inner_max: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ClassKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub c: String,
    pub c_prime: String,
    #[serde(default)]
    pub primes: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kappa_log: Vec<KappaEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mixing: Vec<MixingEmission>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// `{ "params": [...], "provenance": {...} }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub params: Vec<ParamEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl ParamsFile {
    pub fn from_seq(seq: &ParamSeq) -> ParamsFile {
        ParamsFile {
            params: seq.entries().iter().cloned().map(ParamEntry::Explicit).collect(),
            provenance: None,
        }
    }

    pub fn from_schedule(s: &Schedule, gen: &FlexibleClassGen, seed: Option<u64>) -> ParamsFile {
        let params = s
            .prefix
            .steps
            .iter()
            .map(|g| match &g.entry {
                Some(p) => ParamEntry::Explicit(p.clone()),
                None => ParamEntry::Summary {
                    q: g.q.render(),
                    sigma: g.total.render(),
                    first: g.first.render(),
                    last: g.last.render(),
                    inner_max: g.inner_max.render(),
                },
            })
            .collect();
        ParamsFile {
            params,
            provenance: Some(Provenance {
                class: gen.label(),
                kind: Some(gen.kind.clone()),
                mode: Some(s.mode),
                phi: Some(s.phi.clone()),
                seed,
                c: s.c.to_string(),
                c_prime: s.c_prime.to_string(),
                primes: s.primes.clone(),
                kappa_log: s.kappa_log.clone(),
                mixing: gen.mixing_emissions().to_vec(),
                notes: Vec::new(),
            }),
        }
    }

    /// The explicit sequence; summary-only steps cannot be built.
    pub fn param_seq(&self) -> Result<ParamSeq> {
        let entries = self
            .params
            .iter()
            .enumerate()
            .map(|(i, e)| match e {
                ParamEntry::Explicit(p) => Ok(p.clone()),
                ParamEntry::Summary { q, .. } => Err(Error::TooLarge(format!("step {i} (q = {q}) is summary-only"))),
            })
            .collect::<Result<Vec<_>>>()?;
        ParamSeq::new(entries)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn parse(text: &str, format: Format) -> Result<ParamsFile> {
        let f: ParamsFile = format.parse(text)?;
        if f.params.is_empty() {
            return Err(Error::Parse("parameter file has no steps".into()));
        }
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<ParamsFile> {
        ParamsFile::parse(&read(path)?, Format::of(path))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Toml,
}

impl Format {
    pub fn of(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Format::Toml,
            _ => Format::Json,
        }
    }

    fn parse<T: for<'de> Deserialize<'de>>(self, text: &str) -> Result<T> {
        Ok(match self {
            Format::Json => serde_json::from_str(text)?,
            Format::Toml => toml::from_str(text)?,
        })
    }
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

/// What to generate: a class, its constants and the scheduler settings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    /// `odometer`, `chacon`, `bsp`, `rotation`, `eigenvalue` or `mixing`.
    pub class: String,
    /// Base cycle of a `bsp` class.
    #[serde(default)]
    pub cycle: Vec<CutSpacParam>,
    /// Continued fraction such as `"0,2,3,(4)"` (period in parentheses).
    pub theta_cf: Option<String>,
    pub theta_decimal: Option<String>,
    /// Head `Q_0..Q_{n0}` of a scheduled rotation family.
    #[serde(default)]
    pub head: Vec<u64>,
    pub n0: Option<usize>,
    pub phi: Option<String>,
    pub mode: Option<Mode>,
    pub steps: Option<usize>,
    pub primes: Option<Vec<u64>>,
    pub seed: Option<u64>,
    /// Window threshold of the mixing sampler.
    pub epsilon: Option<f64>,
    /// Fixed lower bound on mixing step lengths (default `10^n`).
    pub mixing_n: Option<u64>,
    /// Relaxed-mode per-step floors.
    #[serde(default)]
    pub floors: Vec<u64>,
    pub rule: Option<StageOneRule>,
}

pub const DEFAULT_STEPS: usize = 6;

impl ClassConfig {
    pub fn load(path: &Path) -> Result<ClassConfig> {
        Format::of(path).parse(&read(path)?)
    }

    pub fn steps(&self) -> usize {
        self.steps.unwrap_or(DEFAULT_STEPS)
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or_default()
    }

    pub fn phi_spec(&self) -> Result<PhiSpec> {
        let family = PhiFamily::parse(self.phi.as_deref().unwrap_or("t^1/4"))?;
        match family {
            PhiFamily::Zero => Ok(PhiSpec::zero()),
            f => phi_normalize(f),
        }
    }

    pub fn primes(&self) -> Vec<u64> {
        self.primes.clone().unwrap_or_else(|| default_primes(self.steps()))
    }

    fn theta_source(&self) -> Result<Option<CfSource>> {
        self.theta_cf.as_deref().map(CfSource::parse).transpose()
    }

    fn theta(&self) -> Result<Theta> {
        if let Some(cf) = self.theta_source()? {
            return Ok(Theta::Cf(cf));
        }
        if let Some(d) = &self.theta_decimal {
            let (lo, hi) = parse_decimal(d)?;
            return Ok(Theta::Interval(lo, hi));
        }
        Err(Error::Input(format!("class {} needs --theta-cf or --theta-decimal", self.class)))
    }

    pub fn generator(&self) -> Result<FlexibleClassGen> {
        match self.class.as_str() {
            "odometer" => Ok(FlexibleClassGen::odometer()),
            "chacon" => Ok(FlexibleClassGen::chacon()),
            "bsp" => {
                if self.cycle.is_empty() {
                    return Err(Error::Input("class bsp needs a base cycle".into()));
                }
                FlexibleClassGen::bsp("custom", self.cycle.clone())
            }
            "rotation" => {
                if self.head.is_empty() {
                    return Err(Error::Input("scheduled rotation needs a head Q_0..Q_n0".into()));
                }
                FlexibleClassGen::rotation(self.head.clone(), self.n0.unwrap_or(self.head.len() - 1))
            }
            "eigenvalue" => {
                let label = self.theta_cf.clone().or(self.theta_decimal.clone()).unwrap_or_default();
                FlexibleClassGen::eigenvalue(self.theta()?, &label)
            }
            "mixing" => Ok(FlexibleClassGen::mixing(MixingConfig {
                epsilon: self.epsilon.unwrap_or(1e-3),
                n_rule: self.mixing_n.map_or(NRule::PowerOfTen, NRule::Fixed),
                seed: self.seed.unwrap_or(0),
                ..MixingConfig::default()
            })),
            other => Err(Error::Input(format!(
                "unknown class {other:?} (odometer, chacon, bsp, rotation, eigenvalue, mixing)"
            ))),
        }
    }
}

/// A generated parameter file and, for scheduled classes, the schedule.
pub struct Generated {
    pub file: ParamsFile,
    pub schedule: Option<Schedule>,
}

/// Run a class config. A rotation with a given `θ` emits the fixed family of
/// `θ`; every other class goes through the scheduler.
pub fn generate(cfg: &ClassConfig) -> Result<Generated> {
    if cfg.class == "rotation" && cfg.head.is_empty() {
        return rotation_of_theta(cfg).map(|file| Generated { file, schedule: None });
    }
    let mut gen = cfg.generator()?;
    let phi = cfg.phi_spec()?;
    let mut sc = ScheduleConfig::new(cfg.steps(), cfg.mode(), cfg.primes());
    sc.floors = cfg.floors.clone();
    sc.rule = cfg.rule.unwrap_or_default();
    let s = schedule(&mut gen, &phi, &sc)?;
    let file = ParamsFile::from_schedule(&s, &gen, cfg.seed);
    Ok(Generated { file, schedule: Some(s) })
}

fn rotation_of_theta(cfg: &ClassConfig) -> Result<ParamsFile> {
    let n0 = cfg.n0.unwrap_or(1);
    let count = cfg.steps() + n0 + 1;
    let coeffs = match (cfg.theta_source()?, &cfg.theta_decimal) {
        (Some(src), _) => src.coefficients(count),
        (None, Some(d)) => {
            let (lo, hi) = parse_decimal(d)?;
            crate::classes::rotation::continued_fraction_interval(&lo, &hi, count)
                .into_iter()
                .map(|c| i64::try_from(c).map_err(|_| Error::TooLarge("coefficient".into())))
                .collect::<Result<_>>()?
        }
        (None, None) => return Err(Error::Input("rotation needs --theta-cf, --theta-decimal or a head".into())),
    };
    let (_, tail) = split_integer_part(&coeffs)?;
    let fam = rotation_params(&tail, n0)?;
    let mut file = ParamsFile::from_seq(&fam.seq);
    file.provenance = Some(Provenance {
        class: "rotation".into(),
        kind: None,
        mode: None,
        phi: None,
        seed: cfg.seed,
        c: fam.c.to_string(),
        c_prime: fam.c_prime.to_string(),
        primes: Vec::new(),
        kappa_log: Vec::new(),
        mixing: Vec::new(),
        notes: vec![format!(
            "coefficients {:?}, series Σ1/(q_k q_(k+1)) verdict {:?}",
            tail, fam.diagnostic.verdict
        )],
    });
    Ok(file)
}

pub const STATE_FORMAT: &str = "rank1-oe-state/1";

/// Everything needed to rebuild a construction, plus derived sequences that
/// a rebuild must reproduce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub format: String,
    pub params: Vec<CutSpacParam>,
    pub primes: Vec<u64>,
    pub depth_n: usize,
    pub depth_m: usize,
    pub rule: StageOneRule,
    /// `h_0..h_M`.
    pub heights: Vec<String>,
    /// `q'_0..q'_{N-1}`.
    pub qprime: Vec<String>,
}

impl StateFile {
    pub fn from_construction(c: &Construction) -> StateFile {
        StateFile {
            format: STATE_FORMAT.into(),
            params: c.params().entries()[..c.m_max()].to_vec(),
            primes: c.primes().to_vec(),
            depth_n: c.n_max(),
            depth_m: c.m_max(),
            rule: c.rule(),
            heights: c.tower().heights().iter().map(u64::to_string).collect(),
            qprime: c.qprime().iter().map(u64::to_string).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<StateFile> {
        let s: StateFile = serde_json::from_str(text)?;
        if s.format != STATE_FORMAT {
            return Err(Error::Parse(format!("unknown state format {:?}", s.format)));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<StateFile> {
        StateFile::parse(&read(path)?)
    }

    /// Rebuild and check the recorded heights and `q'`.
    pub fn rebuild(&self) -> Result<Construction> {
        let seq = ParamSeq::new(self.params.clone())?;
        let c = Construction::build(&seq, &self.primes, self.depth_n, self.depth_m, self.rule)?;
        let fresh = StateFile::from_construction(&c);
        if fresh.heights != self.heights || fresh.qprime != self.qprime {
            return Err(Error::Parse(
                "state file is inconsistent: recorded heights or q' differ from the rebuild".into(),
            ));
        }
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableCell {
    pub n: usize,
    pub m: usize,
    pub r: String,
    pub t: String,
}

/// `r`, `t`, `q'`, `h'`, `H'` as decimal strings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TablesFile {
    pub n_max: usize,
    pub m_max: usize,
    pub rule: StageOneRule,
    pub cells: Vec<TableCell>,
    pub qprime: Vec<String>,
    pub hprime: Vec<String>,
    pub big_h: Vec<String>,
    pub warnings: Vec<String>,
}

impl TablesFile {
    pub fn new(t: &RecurrenceTables) -> TablesFile {
        let mut hprime = vec![BigUint::from(1u32)];
        for q in &t.qprime {
            hprime.push(hprime.last().unwrap() * q);
        }
        let mut big_h = vec![BigUint::from(0u32)];
        for h in &hprime[1..] {
            big_h.push(big_h.last().unwrap() + h);
        }
        let dec = |v: &[BigUint]| v.iter().map(BigUint::to_string).collect();
        TablesFile {
            n_max: t.n_max,
            m_max: t.m_max,
            rule: t.rule,
            cells: t
                .pairs()
                .map(|(n, m)| TableCell {
                    n,
                    m,
                    r: t.r(n, m).to_string(),
                    t: t.t(n, m).to_string(),
                })
                .collect(),
            qprime: dec(&t.qprime),
            hprime: dec(&hprime),
            big_h: dec(&big_h),
            warnings: t.warnings.clone(),
        }
    }

    pub fn of_summaries(steps: &[StepSummary], primes: &[u64], n: usize, m: usize, rule: StageOneRule) -> Result<TablesFile> {
        Ok(TablesFile::new(&recurrence_tables(steps, primes, n, m, rule)?))
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

/// Primes from a comma list, or the default schedule of length `len`.
pub fn primes_or_default(list: Option<&str>, len: usize) -> Result<Vec<u64>> {
    match list {
        Some(s) => parse_primes(s),
        None => Ok(default_primes(len)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_round_trip_json_and_toml() {
        let f = ParamsFile::from_seq(&ParamSeq::chacon(3));
        let back = ParamsFile::parse(&f.to_json(), Format::Json).unwrap();
        assert_eq!(back, f);
        let toml_text = "[[params]]\nq = 3\nspacers = [0, 0, 1, 0]\n\n[[params]]\nq = 2\nspacers = [0, 0, 0]\n";
        let t = ParamsFile::parse(toml_text, Format::Toml).unwrap();
        assert_eq!(t.param_seq().unwrap().q(1), 2);
    }

    #[test]
    fn summary_entries_are_not_buildable() {
        let text = r#"{"params":[{"q":"5*2^300000","sigma":"0","first":"0","last":"0","inner_max":"0"}]}"#;
        let f = ParamsFile::parse(text, Format::Json).unwrap();
        assert!(matches!(f.param_seq(), Err(Error::TooLarge(_))));
    }

    #[test]
    fn generate_is_deterministic() {
        let cfg = ClassConfig {
            class: "mixing".into(),
            mode: Some(Mode::Relaxed),
            steps: Some(3),
            seed: Some(7),
            epsilon: Some(0.5),
            mixing_n: Some(6),
            ..ClassConfig::default()
        };
        let a = generate(&cfg).unwrap().file.to_json();
        let b = generate(&cfg).unwrap().file.to_json();
        assert_eq!(a, b);
        let f = ParamsFile::parse(&a, Format::Json).unwrap();
        assert!(f.provenance.unwrap().mixing.iter().all(MixingEmission::verify));
    }

    #[test]
    fn bounded_rotation_rejected() {
        let cfg = ClassConfig {
            class: "rotation".into(),
            theta_cf: Some("1,(2)".into()),
            steps: Some(8),
            ..ClassConfig::default()
        };
        let err = generate(&cfg).err().unwrap();
        assert!(err.to_string().contains("diverges"), "{err}");
    }

    #[test]
    fn state_round_trip_and_corruption() {
        let seq = ParamSeq::odometer(&[4, 6, 8]);
        let c = Construction::build(&seq, &[2, 3, 5], 3, 3, StageOneRule::FullTower).unwrap();
        let s = StateFile::from_construction(&c);
        let text = s.to_json();
        let back = StateFile::parse(&text).unwrap();
        assert_eq!(back, s);
        back.rebuild().unwrap();
        assert!(matches!(StateFile::parse(&text[..text.len() / 2]), Err(Error::Parse(_))));
        let mut bad = back.clone();
        bad.qprime[0] = "999".into();
        assert!(matches!(bad.rebuild(), Err(Error::Parse(_))));
    }
}
