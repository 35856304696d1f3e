//! Command-line front end. Every command writes one report
//! `{schema, command, config, results, summary, verdict}`; the exit code is
//! 0 when the verdict passes, 1 when a check fails and 2 on usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fock::io::{read_state, write_state};
use crate::fock::{Factor, PureState, SystemLayout, ModeSpec, ModeId};
use crate::locc::TrialReport;
use crate::protocols::{self, concentrate::binomial, Direction, EModeParams, Reference, StartKind};
use crate::resources::{entanglement_entropy, siv_monotone};
use crate::ssr::{local_parity_expectation, parity_sector};

pub const REPORT_SCHEMA: &str = "fermode-report/1";

/// Success threshold for fidelities and exact-probability checks.
const TOL: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "fermode", version, about = "Fermionic and bosonic mode entanglement under the parity superselection rule")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Base seed; trial i uses seed XOR i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize)]
struct EMode {
    /// |alpha|^2 of alpha|0_A 1_B> + beta|1_A 0_B>.
    #[arg(long, value_parser = unit_interval)]
    alpha2: Option<f64>,
    /// Phase of beta in radians.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phase: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RefArg {
    X0,
    X1,
    Mixed,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DirArg {
    BosonToFermion,
    FermionToBoson,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum StartArg {
    Boson,
    Fermion,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Teleport Alice's half of an e-mode to Charlie; samples `trials` runs
    /// (random parameters when --alpha2 is absent).
    Teleport {
        #[command(flatten)]
        emode: EMode,
        #[arg(long, default_value_t = 1, value_parser = positive)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Dense coding; messages map 00->psi+, 01->psi-, 10->phi+, 11->phi-.
    DenseCode {
        /// Message to send (0-3); trial i sends i mod 4 when absent.
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..4))]
        message: Option<u8>,
        #[arg(long, default_value_t = 1, value_parser = positive)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Reference-assisted boson <-> fermion conversion.
    Convert {
        #[arg(long, value_enum, default_value_t = RefArg::Mixed)]
        reference: RefArg,
        #[arg(long, value_enum, default_value_t = DirArg::BosonToFermion)]
        direction: DirArg,
        /// Consecutive conversions sharing the reference.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=4))]
        slots: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Concentration of N partial e-modes, all branches enumerated.
    Concentrate {
        #[command(flatten)]
        emode: EMode,
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..=protocols::concentrate::MAX_PAIRS as u64))]
        n: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Two-copy bootstrap and filtering strategies against the 1 - A bound.
    Bootstrap {
        #[command(flatten)]
        emode: EMode,
        /// Number of partial e-modes available to the bootstrap.
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(2..=protocols::concentrate::MAX_PAIRS as u64))]
        n: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Random SSR measurements on random definite-parity states: A never
    /// decreases on average.
    VerifyMonotone {
        /// Number of random states.
        #[arg(long, default_value_t = 200, value_parser = positive)]
        trials: u64,
        /// Random measurements per state.
        #[arg(long, default_value_t = 1000, value_parser = positive)]
        povms: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Random adaptive SSR-LOCC scripts never convert between bosonic and
    /// fermionic entanglement.
    VerifyNoConversion {
        #[arg(long, value_enum)]
        start: StartArg,
        #[arg(long, default_value_t = 1000, value_parser = positive)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Summarize a state file, or write the e-mode given by --alpha2.
    ShowState {
        /// State document to read.
        #[arg(long, conflicts_with = "save")]
        input: Option<PathBuf>,
        /// Write the two-mode e-mode state here.
        #[arg(long)]
        save: Option<PathBuf>,
        #[command(flatten)]
        emode: EMode,
        #[command(flatten)]
        common: Common,
    },
}

fn unit_interval(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{x} is outside [0, 1]"))
    }
}

fn positive(s: &str) -> std::result::Result<u64, String> {
    match s.parse::<u64>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(format!("{e}")),
    }
}

#[derive(Debug, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub config: Value,
    pub results: Vec<Value>,
    pub summary: Value,
    pub verdict: Verdict,
}

struct Checks(Vec<String>);

impl Checks {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.0.push(what());
        }
    }

    fn verdict(self) -> Verdict {
        Verdict { passed: self.0.is_empty(), failures: self.0 }
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn params(emode: &EMode, rng: &mut ChaCha8Rng) -> Result<EModeParams> {
    match emode.alpha2 {
        Some(a2) => EModeParams::from_alpha2(a2, emode.phase),
        None => Ok(EModeParams::random(rng)),
    }
}

fn fixed_params(emode: &EMode, default: f64) -> Result<EModeParams> {
    EModeParams::from_alpha2(emode.alpha2.unwrap_or(default), emode.phase)
}

/// `A` of every party after each step.
fn monotone_trace(trial: &TrialReport) -> Value {
    let steps: Vec<Value> = trial
        .steps
        .iter()
        .map(|s| {
            let a: BTreeMap<&str, Option<f64>> = s.monotone.iter().map(|m| (m.party.as_str(), m.after)).collect();
            json!({ "path": s.path, "kind": s.kind, "a": a })
        })
        .collect();
    Value::Array(steps)
}

fn teleport(emode: &EMode, trials: u64, common: &Common) -> Result<Report> {
    let rows = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<Value> {
            let seed = common.seed ^ i;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = params(emode, &mut rng)?;
            let b = protocols::teleport::teleport_once(p, seed)?;
            Ok(json!({
                "trial": i,
                "seed": seed,
                "alpha2": p.alpha2(),
                "branch": b.outcome,
                "probability": b.probability,
                "message": b.message,
                "corrections": b.corrections,
                "fidelity": b.fidelity,
                "monotone": monotone_trace(&b.trial),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let min_fidelity = rows.iter().map(|r| r["fidelity"].as_f64().unwrap_or(0.0)).fold(f64::INFINITY, f64::min);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for r in &rows {
        *counts.entry(r["branch"].as_str().unwrap_or("?").to_string()).or_default() += 1;
    }
    let mut checks = Checks(Vec::new());
    for r in &rows {
        let f = r["fidelity"].as_f64().unwrap_or(0.0);
        checks.require(f >= 1.0 - TOL, || format!("trial {}: fidelity {f} in branch {}", r["trial"], r["branch"]));
    }
    let mut summary = json!({ "min_fidelity": min_fidelity, "branch_counts": counts });
    if emode.alpha2.is_some() {
        let exact = protocols::teleport(fixed_params(emode, 0.5)?)?;
        for b in &exact.branches {
            checks.require((b.probability - 0.25).abs() <= TOL, || format!("branch {} has probability {}", b.outcome, b.probability));
            checks.require(b.fidelity >= 1.0 - TOL, || format!("enumerated branch {}: fidelity {}", b.outcome, b.fidelity));
        }
        summary["enumerated"] = to_value(&exact)?;
    }
    Ok(report("teleport", rows, summary, checks))
}

fn dense_code(message: Option<u8>, trials: u64, common: &Common) -> Result<Report> {
    let rows = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<Value> {
            let seed = common.seed ^ i;
            let bits = message.unwrap_or((i % 4) as u8);
            let o = protocols::dense::dense_coding_once(bits, seed)?;
            Ok(json!({ "trial": i, "seed": seed, "sent": o.sent, "decoded": o.decoded, "probability": o.probability }))
        })
        .collect::<Result<Vec<_>>>()?;
    let exact = protocols::dense_coding()?;
    let mut checks = Checks(Vec::new());
    for r in &rows {
        checks.require(r["sent"] == r["decoded"], || format!("trial {}: sent {} decoded {}", r["trial"], r["sent"], r["decoded"]));
    }
    for o in &exact.outcomes {
        checks.require(o.decoded == Some(o.sent) && (o.probability - 1.0).abs() <= TOL, || {
            format!("message {:02b}: decoded {:?} with probability {}", o.sent, o.decoded, o.probability)
        });
    }
    Ok(report("dense-code", rows, to_value(&exact)?, checks))
}

fn convert(reference: RefArg, direction: DirArg, slots: u64) -> Result<Report> {
    let reference = match reference {
        RefArg::X0 => Reference::X0,
        RefArg::X1 => Reference::X1,
        RefArg::Mixed => Reference::Mixed,
    };
    let direction = match direction {
        DirArg::BosonToFermion => Direction::BosonToFermion,
        DirArg::FermionToBoson => Direction::FermionToBoson,
    };
    let r = protocols::convert(reference, direction, slots as usize)?;
    let mut checks = Checks(Vec::new());
    for s in &r.steps {
        checks.require(s.fidelity >= 1.0 - TOL, || format!("slot {}: fidelity {}", s.slot, s.fidelity));
        checks.require(s.reference_change <= TOL, || format!("slot {}: reference moved by {}", s.slot, s.reference_change));
    }
    let rows = r.steps.iter().map(to_value).collect::<Result<Vec<_>>>()?;
    Ok(report("convert", rows, json!({ "reference": reference, "direction": direction, "min_fidelity": r.min_fidelity }), checks))
}

fn concentrate(emode: &EMode, n: u64) -> Result<Report> {
    let p = fixed_params(emode, 0.7)?;
    let r = protocols::concentrate(p, n as usize)?;
    let mut checks = Checks(Vec::new());
    checks.require((r.total_probability - 1.0).abs() <= TOL, || format!("total probability {}", r.total_probability));
    for o in &r.outcomes {
        let law = binomial(r.n, o.m) as f64 * p.alpha2().powi((r.n - o.m) as i32) * p.beta2().powi(o.m as i32);
        checks.require((o.probability - law).abs() <= 1e-12, || format!("P(m={}) = {}, binomial law {law}", o.m, o.probability));
        checks.require(o.verified, || format!("m = {}: extracted pairs are not perfect e-modes", o.m));
    }
    let rows = r.outcomes.iter().map(to_value).collect::<Result<Vec<_>>>()?;
    let summary = json!({
        "n": r.n,
        "alpha2": r.alpha2,
        "expected_k": r.expected_k,
        "expected_k_per_pair": r.expected_k_per_pair,
        "extracted_per_pair": r.extracted_per_pair,
        "entropy_per_pair": r.entropy_per_pair,
        "mode_m": r.mode_m,
    });
    Ok(report("concentrate", rows, summary, checks))
}

fn bootstrap(emode: &EMode, n: u64) -> Result<Report> {
    let p = fixed_params(emode, 0.7)?;
    let b = protocols::bootstrap_emode(p, n as usize)?;
    let one = protocols::procrustean_filter(p)?;
    let two = protocols::two_copy_filter(p)?;
    let bound = one.single_pair_bound;
    let mut checks = Checks(Vec::new());
    let want = 2.0 * p.alpha2() * p.beta2();
    checks.require((b.success_per_attempt - want).abs() <= TOL, || {
        format!("bootstrap attempt succeeds with {}, expected {want}", b.success_per_attempt)
    });
    for f in [&one, &two] {
        checks.require(f.success_probability <= bound + TOL, || {
            format!("{}-copy filter reaches {} above the bound {bound}", f.copies, f.success_probability)
        });
    }
    let rows = vec![to_value(&b)?, to_value(&one)?, to_value(&two)?];
    Ok(report("bootstrap", rows, json!({ "bound": bound, "bootstrap_per_attempt": b.success_per_attempt }), checks))
}

fn verify_monotone(states: u64, povms: u64, common: &Common) -> Result<Report> {
    let r = protocols::monotone_experiment(states, povms, common.seed, TOL)?;
    let mut checks = Checks(Vec::new());
    for (s, m) in &r.violations {
        checks.require(false, || format!("state {s}, measurement {m}: average A decreased"));
    }
    let rows = vec![to_value(&r)?];
    Ok(report("verify-monotone", rows, json!({ "min_margin": r.min_margin, "violations": r.violations.len() }), checks))
}

fn verify_no_conversion(start: StartArg, trials: u64, common: &Common) -> Result<Report> {
    let start = match start {
        StartArg::Boson => StartKind::Boson,
        StartArg::Fermion => StartKind::Fermion,
    };
    let r = protocols::no_conversion_experiment(start, trials, common.seed)?;
    let mut checks = Checks(Vec::new());
    for t in &r.violations {
        checks.require(false, || format!("trial {t} (seed {}) violates the no-conversion invariant", common.seed ^ t));
    }
    let summary = json!({
        "start": r.start,
        "branches": r.branches,
        "max_extraction_probability": r.max_converted_probability,
        "min_monotone": r.min_monotone,
        "max_bosonic_entropy": r.max_bosonic_entropy,
    });
    Ok(report("verify-no-conversion", vec![to_value(&r)?], summary, checks))
}

fn show_state(input: Option<&PathBuf>, save: Option<&PathBuf>, emode: &EMode) -> Result<Report> {
    let state = match input {
        Some(path) => read_state(path)?,
        None => {
            let layout = std::sync::Arc::new(SystemLayout::new(vec![ModeSpec::fermion("a", "A"), ModeSpec::fermion("b", "B")])?);
            let f: Factor = fixed_params(emode, 0.5)?.factor(ModeId(0), ModeId(1))?;
            PureState::product(&layout, &[f])?
        }
    };
    if let Some(path) = save {
        write_state(path, &state)?;
    }
    let layout = state.layout();
    let amplitudes: Vec<Value> = state
        .amplitudes()
        .map(|(k, a)| json!({ "occupation": layout.format_key(k), "re": a.re, "im": a.im }))
        .collect();
    let mut parties = Vec::new();
    for p in layout.parties() {
        let a = siv_monotone(&state, &p).ok();
        parties.push(json!({
            "party": p,
            "local_parity": local_parity_expectation(&state, &p)?,
            "monotone_a": a,
            "entropy_bits": entanglement_entropy(&state, &p)?,
        }));
    }
    let summary = json!({
        "modes": layout.modes().iter().map(|m| json!({ "label": m.label, "party": m.party, "fermion": m.is_fermion() })).collect::<Vec<_>>(),
        "parity": parity_sector(&state),
        "parties": parties,
    });
    Ok(report("show-state", amplitudes, summary, Checks(Vec::new())))
}

fn report(command: &str, results: Vec<Value>, summary: Value, checks: Checks) -> Report {
    Report { schema: REPORT_SCHEMA, command: command.into(), config: Value::Null, results, summary, verdict: checks.verdict() }
}

fn render(report: &Report, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut columns: Vec<String> = Vec::new();
            for r in &report.results {
                if let Value::Object(m) = r {
                    for k in m.keys() {
                        if !columns.contains(k) {
                            columns.push(k.clone());
                        }
                    }
                }
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&columns).map_err(csv_error)?;
            for r in &report.results {
                let row: Vec<String> = columns
                    .iter()
                    .map(|c| match r.get(c) {
                        None | Some(Value::Null) => String::new(),
                        Some(Value::String(s)) => s.clone(),
                        Some(v) => v.to_string(),
                    })
                    .collect();
                w.write_record(&row).map_err(csv_error)?;
            }
            w.into_inner().map_err(|e| Error::Format(e.to_string()))
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn execute(command: &Command) -> Result<(Report, Common)> {
    let (mut report, common, config) = match command {
        Command::Teleport { emode, trials, common } => {
            (teleport(emode, *trials, common)?, common, json!({ "emode": emode, "trials": trials, "common": common }))
        }
        Command::DenseCode { message, trials, common } => {
            (dense_code(*message, *trials, common)?, common, json!({ "message": message, "trials": trials, "common": common }))
        }
        Command::Convert { reference, direction, slots, common } => (
            convert(*reference, *direction, *slots)?,
            common,
            json!({ "reference": reference, "direction": direction, "slots": slots, "common": common }),
        ),
        Command::Concentrate { emode, n, common } => (concentrate(emode, *n)?, common, json!({ "emode": emode, "n": n, "common": common })),
        Command::Bootstrap { emode, n, common } => (bootstrap(emode, *n)?, common, json!({ "emode": emode, "n": n, "common": common })),
        Command::VerifyMonotone { trials, povms, common } => {
            (verify_monotone(*trials, *povms, common)?, common, json!({ "trials": trials, "povms": povms, "common": common }))
        }
        Command::VerifyNoConversion { start, trials, common } => (
            verify_no_conversion(*start, *trials, common)?,
            common,
            json!({ "start": start, "trials": trials, "common": common }),
        ),
        Command::ShowState { input, save, emode, common } => (
            show_state(input.as_ref(), save.as_ref(), emode)?,
            common,
            json!({ "input": input, "emode": emode, "common": common }),
        ),
    };
    report.config = config;
    Ok((report, common.clone()))
}

fn configure_threads() {
    if let Some(n) = std::env::var("FERMODE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let (report, common) = match execute(&cli.command) {
        Ok(r) => r,
        Err(e @ Error::InvalidArgument(_)) => {
            eprintln!("error: {e}");
            return 2;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let bytes = match render(&report, common.format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let written = match &common.output {
        Some(path) => std::fs::write(path, &bytes).map_err(Error::from),
        None => std::io::stdout().write_all(&bytes).map_err(Error::from),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return 1;
    }
    if report.verdict.passed {
        0
    } else {
        for f in &report.verdict.failures {
            eprintln!("FAIL {f}");
        }
        1
    }
}
