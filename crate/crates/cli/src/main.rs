use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use rank1_oe::classes::scheduler::Mode;
use rank1_oe::engine::{recurrence_tables, Construction, SEvaluator, StageOneRule};
use rank1_oe::io::{generate, primes_or_default, to_json, ClassConfig, ParamsFile, StateFile, TablesFile};
use rank1_oe::params::{skip_steps, CutSpacParam};
use rank1_oe::phi::{phi_normalize, PhiFamily, PhiSpec};
use rank1_oe::stats::{bounds_tables, cocycle_histogram, envelope_checks, BoundsInput};
use rank1_oe::verify::{run_section, Suite, VerifyOptions, VerifyReport};
use rank1_oe::Error;

#[derive(Parser)]
#[command(name = "rank1-oe", version, about = "Rank-one cutting and stacking with an explicit odometer orbit equivalence")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a parameter file for a class.
    Gen(GenArgs),
    /// Build a construction: writes state.json and tables.json.
    Build(BuildArgs),
    /// Run a verification suite on a state file.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    /// TOML or JSON class config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// odometer, chacon, bsp, rotation, eigenvalue or mixing.
    #[arg(long)]
    class: Option<String>,
    /// Continued fraction, e.g. "0,2,3,(4)".
    #[arg(long)]
    theta_cf: Option<String>,
    #[arg(long)]
    theta_decimal: Option<String>,
    /// Head Q_0..Q_n0 of a scheduled rotation, comma separated.
    #[arg(long)]
    head: Option<String>,
    #[arg(long)]
    n0: Option<usize>,
    /// t^1/4, power:p/q, log1p or zero.
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    primes: Option<String>,
    /// Number of steps to emit.
    #[arg(long)]
    steps: Option<usize>,
    /// strict or relaxed.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Mixing window threshold.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Fixed lower bound for mixing step lengths.
    #[arg(long)]
    mixing_n: Option<u64>,
    /// Relaxed-mode floors, comma separated.
    #[arg(long)]
    floors: Option<String>,
    /// Keep only these stages (strictly increasing, starting at 0), joining
    /// the skipped steps.
    #[arg(long)]
    keep: Option<String>,
    /// Bounds tables and envelopes of a scheduled class, as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    /// Parameter file (JSON or TOML).
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    primes: Option<String>,
    /// Number of odometer steps N.
    #[arg(long)]
    depth_n: Option<usize>,
    /// Resolution stage M (defaults to the number of steps).
    #[arg(long)]
    depth_m: Option<usize>,
    /// full-tower or copy-images.
    #[arg(long, default_value = "full-tower")]
    rule: String,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    state: PathBuf,
    /// all, partition, cocycle, orbit or bounds.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value = "t^1/4")]
    phi: String,
    /// Largest n whose K_n is scanned for return times.
    #[arg(long, default_value_t = 3)]
    orbit_depth: usize,
    /// Directory for report.json, histogram.csv and plot data.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failures that end a command with exit code 2.
struct CliError {
    kind: String,
    message: String,
    file: Option<PathBuf>,
    position: Option<(usize, usize)>,
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        CliError {
            kind: e.kind().into(),
            message: e.to_string(),
            file: None,
            position: None,
        }
    }
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> CliError {
        CliError {
            kind: "io".into(),
            message: format!("{}: {e}", path.display()),
            file: Some(path.to_path_buf()),
            position: None,
        }
    }

    fn to_json(&self) -> Value {
        let mut v = json!({ "kind": self.kind, "message": self.message });
        if let Some(f) = &self.file {
            v["file"] = json!(f.display().to_string());
        }
        if let Some((line, column)) = self.position {
            v["line"] = json!(line);
            v["column"] = json!(column);
        }
        json!({ "error": v })
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a).map(|()| true),
        Cmd::Build(a) => cmd_build(a).map(|()| true),
        Cmd::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", serde_json::to_string_pretty(&e.to_json()).expect("json"));
            ExitCode::from(2)
        }
    }
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Input(format!("bad {what} {t:?}")).into()))
        .collect()
}

fn cmd_gen(a: GenArgs) -> CliResult<()> {
    let mut cfg = match &a.config {
        Some(p) => ClassConfig::load(p)?,
        None => ClassConfig::default(),
    };
    if let Some(c) = a.class {
        cfg.class = c;
    }
    if cfg.class.is_empty() {
        return Err(Error::Input("--class or a config with `class` is required".into()).into());
    }
    cfg.theta_cf = a.theta_cf.or(cfg.theta_cf);
    cfg.theta_decimal = a.theta_decimal.or(cfg.theta_decimal);
    if let Some(h) = &a.head {
        cfg.head = list(h, "head entry")?;
    }
    cfg.n0 = a.n0.or(cfg.n0);
    cfg.phi = a.phi.or(cfg.phi);
    cfg.steps = a.steps.or(cfg.steps);
    if let Some(p) = &a.primes {
        cfg.primes = Some(primes_or_default(Some(p), cfg.steps())?);
    }
    cfg.mode = a.mode.or(cfg.mode);
    cfg.seed = a.seed.or(cfg.seed);
    cfg.epsilon = a.epsilon.or(cfg.epsilon);
    cfg.mixing_n = a.mixing_n.or(cfg.mixing_n);
    if let Some(f) = &a.floors {
        cfg.floors = list(f, "floor")?;
    }
    if cfg.class == "bsp" && cfg.cycle.is_empty() {
        cfg.cycle = vec![CutSpacParam::new(3, vec![0, 0, 1, 0])?];
    }
    let mut g = generate(&cfg)?;
    if let Some(k) = &a.keep {
        let keep: Vec<usize> = list(k, "stage index")?;
        let skipped = skip_steps(&g.file.param_seq()?, &keep)?;
        let mut provenance = g.file.provenance.take();
        if let Some(p) = provenance.as_mut() {
            p.notes.push(format!("stages {keep:?} kept"));
            if skipped.accumulation_possible {
                p.notes.push("spacer maxima may exceed the original bound".into());
            }
        }
        g.file = ParamsFile::from_seq(&skipped.seq);
        g.file.provenance = provenance;
        g.schedule = None;
    }
    emit(a.out.as_deref(), &g.file.to_json())?;
    if let Some(path) = &a.report {
        let s = g
            .schedule
            .as_ref()
            .ok_or_else(|| Error::Input("--report needs a scheduled class".into()))?;
        let phi = cfg.phi_spec()?;
        let input = BoundsInput::from_schedule(s);
        let bounds = bounds_tables(&input, &phi)?;
        let envelopes = envelope_checks(&input, &bounds, input.len().saturating_sub(2));
        let report = json!({
            "bounds": serde_json::to_value(&bounds).expect("json"),
            "envelopes": serde_json::to_value(&envelopes).expect("json"),
            "qprime_envelope_passed": s.qprime_envelope().iter().all(|e| e.passed()),
        });
        write(path, &to_json(&report))?;
    }
    Ok(())
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn cmd_build(a: BuildArgs) -> CliResult<()> {
    let file = ParamsFile::load(&a.params).map_err(|e| with_file(e, &a.params))?;
    let seq = file.param_seq()?;
    let depth_m = a.depth_m.unwrap_or(seq.len());
    let depth_n = a.depth_n.unwrap_or(depth_m);
    if depth_n == 0 || depth_m == 0 {
        return Err(Error::Input("depths must be at least 1".into()).into());
    }
    let rule: StageOneRule = serde_json::from_value(json!(a.rule))
        .map_err(|_| Error::Input(format!("unknown rule {:?} (full-tower|copy-images)", a.rule)))?;
    let primes = match (&a.primes, file.provenance.as_ref().map(|p| &p.primes)) {
        (None, Some(p)) if p.len() >= depth_n => p.clone(),
        (p, _) => primes_or_default(p.as_deref(), depth_n)?,
    };
    let c = Construction::build(&seq, &primes, depth_n, depth_m, rule)?;
    let state = StateFile::from_construction(&c);
    let tables = recurrence_tables(&seq.truncated(depth_m).summaries(), &primes, depth_n, depth_m, rule)?;
    if let Err(msg) = c.matches_tables(&tables) {
        return Err(Error::Invariant(msg).into());
    }
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let state_text = state.to_json();
    let state_path = a.out.join("state.json");
    let tables_path = a.out.join("tables.json");
    write(&state_path, &state_text)?;
    write(&tables_path, &TablesFile::new(&tables).to_json())?;
    let summary = json!({
        "state": state_path.display().to_string(),
        "tables": tables_path.display().to_string(),
        "state_hash": sha256_hex(&state_text),
        "depth_n": depth_n,
        "depth_m": depth_m,
        "qprime": state.qprime,
        "warnings": tables.warnings,
    });
    print!("{}", to_json(&summary));
    Ok(())
}

fn with_file(e: Error, path: &Path) -> CliError {
    let mut ce = CliError::from(e);
    ce.file = Some(path.to_path_buf());
    ce
}

fn load_state(path: &Path) -> CliResult<StateFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if let Err(e) = serde_json::from_str::<StateFile>(&text) {
        return Err(CliError {
            kind: "parse".into(),
            message: format!("corrupted state file: {e}"),
            file: Some(path.to_path_buf()),
            position: Some((e.line(), e.column())),
        });
    }
    StateFile::parse(&text).map_err(|e| with_file(e, path))
}

fn parse_phi(s: &str) -> CliResult<PhiSpec> {
    Ok(match PhiFamily::parse(s)? {
        PhiFamily::Zero => PhiSpec::zero(),
        f => phi_normalize(f)?,
    })
}

/// Worker count from `RANK1_OE_THREADS`, else rayon's default.
fn pool() -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("RANK1_OE_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Input(format!("RANK1_OE_THREADS must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::Input(format!("cannot start worker pool: {e}")).into())
}

fn cmd_verify(a: VerifyArgs) -> CliResult<bool> {
    let suite: Suite = a.suite.parse()?;
    let opts = VerifyOptions {
        phi: parse_phi(&a.phi)?,
        orbit_depth: a.orbit_depth,
    };
    let state = load_state(&a.state)?;
    let c = state.rebuild().map_err(|e| with_file(e, &a.state))?;
    let ev = SEvaluator::new(c)?;
    let sections = pool()?.install(|| {
        suite
            .sections()
            .par_iter()
            .map(|&s| run_section(&ev, s, &opts))
            .collect::<rank1_oe::Result<Vec<_>>>()
    })?;
    let report = VerifyReport::new(suite, sections);
    let text = to_json(&report);
    print!("{text}");
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        write(&dir.join("report.json"), &text)?;
        let hist = cocycle_histogram(&ev, &opts.phi, 0)?;
        write(&dir.join("histogram.csv"), &hist.to_csv())?;
        if opts.phi.is_certified() {
            let bounds = bounds_tables(&BoundsInput::from_construction(ev.construction())?, &opts.phi)?;
            for s in bounds.series() {
                write(&dir.join(format!("{}.dat", s.name)), &bounds.plot_data(s))?;
            }
        }
    }
    Ok(report.passed)
}
