//! `tempered`: compute entanglement monotones of states and channels from
//! JSON files, run the property corpus and reproduce the Ω₃ bounds.
//!
//! Exit codes: 0 verified result, 1 input error or failed check, 2 solver
//! or certificate failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use tempered_core::channels::{diamond_distance_with, omega3_channel, Channel};
use tempered_core::chmono::{
    channel_robustness_ke_with, channel_tempered_negativity, dmax_relative, ec_lower_bound, irreversibility_report,
    qcap_upper_bound_with, SeesawConfig, DEFAULT_SEED,
};
use tempered_core::corpus::{run_corpus, CorpusOptions};
use tempered_core::io::{
    cmat_to_json, read_channel, read_state, report_json, result_json, series_csv, state_to_json, to_canonical_string,
};
use tempered_core::sdp::{default_tol, SolverOptions, TOL_ENV};
use tempered_core::states::{
    log_negativity, negativity, std_robustness_with, tempered_negativity_with, tempered_robustness_with,
};
use tempered_core::Error;

/// Cost lower bound the reproduction must reach, in bits per use.
const REPRO_EC_TARGET: f64 = 1.0 - 1e-4;
/// Two-copy cost lower bound target.
const REPRO_EC2_TARGET: f64 = 1.0 - 1e-3;
/// Capacity upper bound the reproduction must stay below.
const REPRO_Q_TARGET: f64 = 0.5850 + 1e-5;

#[derive(Parser)]
#[command(name = "tempered", version, about = "Tempered entanglement monotones and channel bounds")]
struct Cli {
    /// SDP tolerance (defaults to $TB_SDP_TOL, else 1e-8).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for randomised searches and the corpus.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write JSON here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monotones of a bipartite state in cmat-v1 format.
    State(StateArgs),
    /// Monotones of a channel in chan-v1 format.
    Channel(ChannelArgs),
    /// Cost and capacity bounds for Ω₃ as a report-v1 document.
    Repro(ReproArgs),
    /// Seeded property suite with a pass/fail summary.
    Corpus(CorpusArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StateMeasure {
    Neg,
    Logneg,
    Tneg,
    Tlogneg,
    Rob,
    Trob,
}

#[derive(Args)]
struct StateArgs {
    #[arg(long, value_enum)]
    measure: StateMeasure,
    #[arg(long)]
    input: PathBuf,
    /// Tempering anchor; defaults to the input state.
    #[arg(long)]
    anchor: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelMeasure {
    Tneg,
    Rob,
    Dmax,
    Diamond,
    EcLb,
    QUb,
}

#[derive(Args)]
struct ChannelArgs {
    #[arg(long, value_enum)]
    measure: ChannelMeasure,
    #[arg(long)]
    input: PathBuf,
    /// Second channel for `diamond` and `dmax`.
    #[arg(long)]
    other: Option<PathBuf>,
    /// Copies for `ec-lb` (1 or 2).
    #[arg(long, default_value_t = 1)]
    copies: usize,
}

#[derive(Args)]
struct ReproArgs {
    /// Also evaluate the two-copy bound.
    #[arg(long, default_value_t = 1)]
    copies: usize,
    /// Write the per-copy bound series as `n,value` CSV.
    #[arg(long)]
    emit_plot_data: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusArgs {
    /// Inject a corrupted fixture to exercise the failure path.
    #[arg(long)]
    sabotage: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Sdp(_) | Error::PrimalDualMismatch { .. } | Error::Consistency(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

struct Outcome {
    json: Value,
    code: u8,
}

fn solver_options(cli: &Cli) -> Result<SolverOptions, Failure> {
    match cli.tol {
        Some(t) if !(t.is_finite() && t > 0.0) => Err(input_error(format!("--tol must be positive, got {t}"))),
        Some(t) => Ok(SolverOptions::with_tol(t)),
        None => Ok(SolverOptions::with_tol(default_tol())),
    }
}

fn run_state(args: &StateArgs, opts: &SolverOptions) -> Result<Outcome, Failure> {
    let rho = read_state(&args.input)?;
    let anchor = match &args.anchor {
        Some(p) => read_state(p)?,
        None => rho.clone(),
    };
    let extra = Map::new();
    let json = match args.measure {
        StateMeasure::Neg => result_json("neg", negativity(&rho)?, None, None, extra),
        StateMeasure::Logneg => result_json("logneg", log_negativity(&rho)?, None, None, extra),
        StateMeasure::Tneg | StateMeasure::Tlogneg => {
            let r = tempered_negativity_with(&rho, &anchor, opts)?;
            let (name, value) = match args.measure {
                StateMeasure::Tneg => ("tneg", r.value),
                _ => ("tlogneg", r.value.log2()),
            };
            let mut extra = extra;
            extra.insert("anchorValue".into(), json!(r.witness.anchor_value));
            result_json(name, value, Some(&r.certificate), Some(cmat_to_json(r.witness.x.matrix(), Some(rho.dims()))), extra)
        }
        StateMeasure::Rob => {
            let r = std_robustness_with(&rho, opts)?;
            let mut extra = extra;
            extra.insert("dualValue".into(), json!(r.dual_value));
            extra.insert("dualCertificate".into(), serde_json::to_value(r.dual_certificate).expect("serialisable"));
            result_json("rob", r.value, Some(&r.primal_certificate), Some(cmat_to_json(r.delta.matrix(), Some(rho.dims()))), extra)
        }
        StateMeasure::Trob => {
            let r = tempered_robustness_with(&rho, &anchor, opts)?;
            result_json("trob", r.value, Some(&r.certificate), Some(cmat_to_json(r.witness.x.matrix(), Some(rho.dims()))), extra)
        }
    };
    Ok(Outcome { json, code: 0 })
}

fn other_channel(args: &ChannelArgs) -> Result<Channel, Failure> {
    let p = args.other.as_ref().ok_or_else(|| input_error("this measure needs --other"))?;
    Ok(read_channel(p)?)
}

fn run_channel(args: &ChannelArgs, opts: &SolverOptions, seed: u64) -> Result<Outcome, Failure> {
    let c = read_channel(&args.input)?;
    let cfg = SeesawConfig { seed, solver: *opts, ..Default::default() };
    let dims = Some((c.din(), c.dout()));
    let mut extra = Map::new();
    let json = match args.measure {
        ChannelMeasure::Tneg => {
            let r = channel_tempered_negativity(&c, &cfg)?;
            extra.insert("kind".into(), json!("lower bound"));
            extra.insert("restart".into(), json!(r.restart));
            extra.insert("bestInput".into(), state_to_json(&r.best_input));
            result_json("tneg", r.lower_bound, Some(&r.certificate), None, extra)
        }
        ChannelMeasure::Rob => {
            let r = channel_robustness_ke_with(&c, opts)?;
            result_json("rob", r.value, Some(&r.certificate), Some(cmat_to_json(r.j_theta.matrix(), dims)), extra)
        }
        ChannelMeasure::Dmax => match &args.other {
            Some(_) => result_json("dmax", dmax_relative(&c, &other_channel(args)?)?, None, None, extra),
            None => {
                // against the best PPT-binding channel
                let r = qcap_upper_bound_with(&c, opts)?;
                result_json("dmax", r.value, Some(&r.certificate), None, extra)
            }
        },
        ChannelMeasure::Diamond => {
            let r = diamond_distance_with(&c, &other_channel(args)?, opts)?;
            extra.insert("probeLowerBound".into(), json!(r.probe_lower_bound));
            result_json("diamond", r.value, Some(&r.certificate), None, extra)
        }
        ChannelMeasure::EcLb => {
            let b = ec_lower_bound(&c, args.copies, &cfg)?;
            extra.insert("copies".into(), json!(b.copies));
            extra.insert("temperedNegativity".into(), json!(b.tempered_negativity));
            extra.insert("kind".into(), json!("finite-n lower bound"));
            result_json("ec-lb", b.bits_per_use, Some(&b.certificate), None, extra)
        }
        ChannelMeasure::QUb => {
            let r = qcap_upper_bound_with(&c, opts)?;
            extra.insert("probeLowerBound".into(), json!(r.probe_lower_bound));
            result_json("q-ub", r.value, Some(&r.certificate), None, extra)
        }
    };
    Ok(Outcome { json, code: 0 })
}

fn run_repro(args: &ReproArgs, opts: &SolverOptions, seed: u64) -> Result<Outcome, Failure> {
    let cfg = SeesawConfig { seed, solver: *opts, ..Default::default() };
    let report = irreversibility_report(&omega3_channel(), "omega3", &cfg, args.copies)?;
    if let Some(path) = &args.emit_plot_data {
        let series: Vec<(usize, f64)> = report.per_copy.iter().map(|b| (b.copies, b.bits_per_use)).collect();
        write_file(path, &series_csv(&series))?;
    }
    let single = report.per_copy.first().map(|b| b.bits_per_use).unwrap_or(f64::NAN);
    let two_ok = report.per_copy.iter().filter(|b| b.copies == 2).all(|b| b.bits_per_use >= REPRO_EC2_TARGET);
    let holds =
        single >= REPRO_EC_TARGET && report.q_upper_bound <= REPRO_Q_TARGET && report.irreversibility_witnessed && two_ok;
    let code = if !report.all_certified() {
        2
    } else if holds {
        0
    } else {
        1
    };
    Ok(Outcome { json: report_json(&report), code })
}

fn run_corpus_cmd(args: &CorpusArgs, opts: &SolverOptions, seed: u64) -> Result<Outcome, Failure> {
    let report = run_corpus(&CorpusOptions { seed, sabotage: args.sabotage, solver: *opts });
    let code = if report.passed { 0 } else { 1 };
    Ok(Outcome { json: serde_json::to_value(&report).expect("serialisable"), code })
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let opts = solver_options(cli)?;
    let seed = cli.seed.unwrap_or(match cli.command {
        Command::Corpus(_) => 0,
        _ => DEFAULT_SEED,
    });
    let outcome = match &cli.command {
        Command::State(a) => run_state(a, &opts)?,
        Command::Channel(a) => run_channel(a, &opts, seed)?,
        Command::Repro(a) => run_repro(a, &opts, seed)?,
        Command::Corpus(a) => run_corpus_cmd(a, &opts, seed)?,
    };
    let text = to_canonical_string(&outcome.json);
    match &cli.output {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    Ok(outcome.code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            if f.code == 2 {
                eprintln!("(solver tolerance via --tol or {TOL_ENV})");
            }
            ExitCode::from(f.code)
        }
    }
}
