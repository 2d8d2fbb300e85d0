use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use hsqc::bfdcqo::{self, DcqoParams, OneBodyField};
use hsqc::exact::brute_force_ground_state;
use hsqc::format::{instance_to_json, parse_bitstring, parse_connectivity, parse_instance};
use hsqc::hubo::{optimality_gap, HuboInstance, SpinConfiguration};
use hsqc::instance_gen::{
    generate_instance, heavy_hex_map, ConnectivityMap, CouplingDistribution, GenerationParams, HERON_COLS,
    HERON_ROWS,
};
use hsqc::mts::{memetic_search, MtsParams};
use hsqc::pipeline::{run_trials, FinalStage, HsqcOutcome, HsqcParams};
use hsqc::rng::stream_rng;
use hsqc::sa::{anneal, anneal_traced, SaParams};
use hsqc::timing::{convergence_time, estimate_pgs, Tau, DEFAULT_CONFIDENCE};
use hsqc::Error;

#[derive(Parser)]
#[command(name = "hsqc", version, about = "Hybrid sequential quantum-classical HUBO optimization")]
struct Cli {
    /// Worker threads for run and trial parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance on a hardware-like connectivity map.
    Generate(GenerateArgs),
    /// Exhaustive ground state.
    Exact(ExactArgs),
    /// Simulated annealing.
    Sa(SaArgs),
    /// Memetic tabu search.
    Mts(MtsArgs),
    /// Emulated bias-field counterdiabatic quantum stage.
    Dcqo(DcqoArgs),
    /// Full SA -> quantum -> MTS|SA pipeline.
    Hsqc(HsqcArgs),
    /// Convergence time from a success probability.
    Tau(TauArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// heavy-hex, ring, path or file:<path> (JSON with num_qubits and edges).
    #[arg(long, default_value = "heavy-hex")]
    topology: String,
    #[arg(long, default_value_t = HERON_ROWS)]
    rows: usize,
    #[arg(long, default_value_t = HERON_COLS)]
    cols: usize,
    /// Qubit count for ring and path topologies.
    #[arg(long, default_value_t = 12)]
    qubits: usize,
    #[arg(long, default_value_t = 2)]
    swap_rounds: usize,
    #[arg(long, default_value_t = 1)]
    rho2: usize,
    #[arg(long, default_value_t = 1)]
    rho3: usize,
    /// Largest coupling magnitude kept by rejection sampling.
    #[arg(long, default_value_t = 6.0)]
    clip: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Store the exact ground-state energy in the metadata (small instances only).
    #[arg(long)]
    with_ground_state: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    /// Instance file, or - for standard input.
    instance: PathBuf,
    /// Emit the instance annotated with its ground state instead of a summary.
    #[arg(long)]
    annotate: bool,
}

#[derive(Args, Clone)]
struct SaFlags {
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long)]
    t_init: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
}

#[derive(Args)]
struct SaArgs {
    instance: PathBuf,
    #[command(flatten)]
    sa: SaFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-sweep CSV trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct MtsFlags {
    #[arg(long, default_value_t = 8)]
    population: usize,
    #[arg(long, default_value_t = 100)]
    generations: usize,
    #[arg(long, default_value_t = 10)]
    tabu_iters: usize,
    #[arg(long, default_value_t = 10)]
    tabu_len: usize,
    #[arg(long, default_value_t = 0.1)]
    mu_start: f64,
    #[arg(long, default_value_t = 0.001)]
    mu_end: f64,
    #[arg(long, allow_hyphen_values = true)]
    target: Option<f64>,
    /// Keep going after a generation without improvement.
    #[arg(long)]
    no_stagnation_stop: bool,
}

impl MtsFlags {
    fn params(&self, seed: u64, warm_start: Option<SpinConfiguration>) -> MtsParams {
        MtsParams {
            population: self.population,
            generations: self.generations,
            tabu_iters: self.tabu_iters,
            tabu_len: self.tabu_len,
            mu_start: self.mu_start,
            mu_end: self.mu_end,
            warm_start,
            target: self.target,
            stop_on_stagnation: !self.no_stagnation_stop,
            seed,
        }
    }
}

#[derive(Args)]
struct MtsArgs {
    instance: PathBuf,
    #[command(flatten)]
    mts: MtsFlags,
    /// Bitstring file cloned into the initial population.
    #[arg(long)]
    warm_start: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct DcqoFlags {
    #[arg(long, default_value_t = 5000)]
    shots: usize,
    #[arg(long, default_value_t = 1)]
    iters: usize,
    #[arg(long, default_value_t = 500)]
    cvar: usize,
    #[arg(long, default_value_t = 1)]
    trotter: usize,
    #[arg(long, default_value_t = 1.0)]
    total_time: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    hx: f64,
    #[arg(long, default_value_t = 1.0)]
    bias_mag: f64,
    #[arg(long, default_value_t = 900)]
    loc_sweeps: usize,
    /// Leave the bias out of the one-body counterdiabatic coefficients.
    #[arg(long)]
    problem_only_field: bool,
}

impl DcqoFlags {
    fn params(&self, seed: u64) -> DcqoParams {
        DcqoParams {
            n_shots: self.shots,
            n_iter: self.iters,
            n_cvar: self.cvar,
            n_trot: self.trotter,
            total_time: self.total_time,
            h_x: self.hx,
            bias_magnitude: self.bias_mag,
            loc_sweeps: self.loc_sweeps,
            one_body_field: if self.problem_only_field {
                OneBodyField::ProblemOnly
            } else {
                OneBodyField::WithBias
            },
            seed,
        }
    }
}

#[derive(Args)]
struct DcqoArgs {
    instance: PathBuf,
    #[command(flatten)]
    dcqo: DcqoFlags,
    /// Bitstring that seeds the bias fields (default: random from the seed).
    #[arg(long)]
    seed_bitstring: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FinalKind {
    Mts,
    Sa,
    None,
}

#[derive(Args)]
struct HsqcArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "mts")]
    r#final: FinalKind,
    #[arg(long, default_value_t = 1000)]
    sa_sweeps: usize,
    #[arg(long, default_value_t = 100)]
    sa_runs: usize,
    #[command(flatten)]
    dcqo: DcqoFlags,
    #[command(flatten)]
    mts: MtsFlags,
    #[arg(long, default_value_t = 1000)]
    final_sweeps: usize,
    #[arg(long, default_value_t = 100)]
    final_runs: usize,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Trial k uses master seed `seed + k`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// One row per (trial, stage).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct TauArgs {
    #[arg(long)]
    pgs: Option<f64>,
    /// Best energies, one per line, to estimate p_gs from (needs --e-gs).
    #[arg(long, conflicts_with = "pgs")]
    energies: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    e_gs: Option<f64>,
    #[arg(long)]
    tf: f64,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
}

/// A failure tagged with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

const EXIT_MALFORMED: u8 = 3;
const EXIT_CAP: u8 = 4;
const EXIT_CONTRACT: u8 = 5;
const EXIT_IO: u8 = 6;

fn classify(error: anyhow::Error) -> Failure {
    let code = error
        .chain()
        .find_map(|cause| {
            if let Some(e) = cause.downcast_ref::<Error>() {
                let mut e = e;
                while let Error::Stage { source, .. } = e {
                    e = source;
                }
                return Some(match e {
                    Error::Json(_) | Error::InvalidInstance(_) | Error::InvalidSymbol { .. } | Error::InvalidMap(_) => {
                        EXIT_MALFORMED
                    }
                    Error::CapExceeded { .. } => EXIT_CAP,
                    Error::Io(_) => EXIT_IO,
                    _ => EXIT_CONTRACT,
                });
            }
            cause.downcast_ref::<io::Error>().map(|_| EXIT_IO)
        })
        .unwrap_or(EXIT_CONTRACT);
    Failure { code, error }
}

fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text).context("reading standard input")?;
        Ok(text)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn load_instance(path: &Path) -> Result<HuboInstance> {
    let text = read_text(path)?;
    parse_instance(&text).with_context(|| format!("malformed instance {}", path.display()))
}

fn load_bitstring(path: &Path, n: usize) -> Result<SpinConfiguration> {
    let s = parse_bitstring(&read_text(path)?).with_context(|| format!("malformed bitstring {}", path.display()))?;
    if s.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: s.len() })
            .with_context(|| format!("bitstring {}", path.display()));
    }
    Ok(s)
}

fn emit(value: &Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn gap_of(inst: &HuboInstance, energy: f64) -> Option<f64> {
    inst.ground_state_energy().and_then(|e| optimality_gap(energy, e).ok())
}

fn map_for(args: &GenerateArgs) -> Result<(ConnectivityMap, String)> {
    let topology = args.topology.as_str();
    if let Some(path) = topology.strip_prefix("file:") {
        let text = read_text(Path::new(path))?;
        let map = parse_connectivity(&text).with_context(|| format!("malformed connectivity map {path}"))?;
        return Ok((map, topology.to_string()));
    }
    Ok(match topology {
        "heavy-hex" => (
            heavy_hex_map(args.rows, args.cols)?,
            format!("heavy-hex:{}x{}", args.rows, args.cols),
        ),
        "ring" => (ConnectivityMap::ring(args.qubits)?, format!("ring:{}", args.qubits)),
        "path" => (ConnectivityMap::path(args.qubits)?, format!("path:{}", args.qubits)),
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown topology {other:?} (expected heavy-hex, ring, path or file:<path>)"
            ))
            .into())
        }
    })
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let (map, topology) = map_for(args)?;
    let params = GenerationParams {
        n_swap: args.swap_rounds,
        rho2: args.rho2,
        rho3: args.rho3,
        dist: CouplingDistribution {
            clip: args.clip,
            ..CouplingDistribution::default()
        },
        seed: args.seed,
    };
    let mut inst = generate_instance(&map, &params, &topology)?;
    if args.with_ground_state {
        let gs = brute_force_ground_state(&inst)?;
        inst.metadata_mut().ground_state_energy = Some(gs.energy);
        inst.metadata_mut().ground_state_degeneracy = Some(gs.degeneracy);
    }
    let text = instance_to_json(&inst);
    match &args.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_exact(args: &ExactArgs) -> Result<()> {
    let mut inst = load_instance(&args.instance)?;
    let clock = Instant::now();
    let gs = brute_force_ground_state(&inst)?;
    if args.annotate {
        inst.metadata_mut().ground_state_energy = Some(gs.energy);
        inst.metadata_mut().ground_state_degeneracy = Some(gs.degeneracy);
        io::stdout().lock().write_all(instance_to_json(&inst).as_bytes())?;
        return Ok(());
    }
    emit(&json!({
        "command": "exact",
        "num_vars": inst.num_vars(),
        "ground_state": gs.config,
        "energy": gs.energy,
        "degeneracy": gs.degeneracy,
        "measured": { "wall_time_s": clock.elapsed().as_secs_f64() },
    }))
}

fn sa_params(flags: &SaFlags, seed: u64) -> SaParams {
    SaParams {
        t_init_override: flags.t_init,
        t_final_override: flags.t_final,
        ..SaParams::new(flags.sweeps, flags.runs, seed)
    }
}

fn cmd_sa(args: &SaArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let params = sa_params(&args.sa, args.seed);
    let report = match &args.trace {
        Some(path) => {
            let (report, trace) = anneal_traced(&inst, &params)?;
            let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
            for row in &trace {
                w.serialize(row)?;
            }
            w.flush()?;
            report
        }
        None => anneal(&inst, &params)?,
    };
    emit(&json!({
        "command": "sa",
        "report": to_value(&report),
        "gap_percent": gap_of(&inst, report.best_energy),
        "measured": { "wall_time_s": report.wall_time_s },
    }))
}

fn cmd_mts(args: &MtsArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let warm = args
        .warm_start
        .as_deref()
        .map(|p| load_bitstring(p, inst.num_vars()))
        .transpose()?;
    let out = memetic_search(&inst, &args.mts.params(args.seed, warm))?;
    emit(&json!({
        "command": "mts",
        "report": to_value(&out.report),
        "termination": to_value(&out.termination),
        "gap_percent": gap_of(&inst, out.report.best_energy),
        "measured": { "wall_time_s": out.report.wall_time_s },
    }))
}

fn cmd_dcqo(args: &DcqoArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let seed_config = match &args.seed_bitstring {
        Some(p) => load_bitstring(p, inst.num_vars())?,
        None => SpinConfiguration::random(inst.num_vars(), &mut stream_rng(args.seed, u64::MAX)),
    };
    let out = bfdcqo::run(&inst, &seed_config, &args.dcqo.params(args.seed))?;
    emit(&json!({
        "command": "dcqo",
        "seed_bitstring": seed_config,
        "report": to_value(&out.report),
        "final_bias": out.final_bias,
        "gap_percent": gap_of(&inst, out.report.best_energy),
        "measured": { "wall_time_s": out.report.wall_time_s },
    }))
}

#[derive(Serialize)]
struct CsvRow<'a> {
    seed: u64,
    stage: &'a str,
    min_energy: f64,
    #[serde(rename = "T_SA")]
    t_sa: f64,
    #[serde(rename = "T_BFDCQO")]
    t_bfdcqo: f64,
    #[serde(rename = "T_final")]
    t_final: f64,
    #[serde(rename = "T_total")]
    t_total: f64,
}

fn write_hsqc_csv(path: &Path, outcomes: &[HsqcOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for o in outcomes {
        let t = o.summary.times;
        for s in &o.stages {
            w.serialize(CsvRow {
                seed: o.seed,
                stage: s.stage.name(),
                min_energy: s.best_energy,
                t_sa: t.sa,
                t_bfdcqo: t.bfdcqo,
                t_final: t.last,
                t_total: t.total,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_hsqc(args: &HsqcArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    if args.trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()).into());
    }
    let final_stage = match args.r#final {
        FinalKind::Mts => FinalStage::Mts(args.mts.params(0, None)),
        FinalKind::Sa => FinalStage::Sa(SaParams::new(args.final_sweeps, args.final_runs, 0)),
        FinalKind::None => FinalStage::None,
    };
    let params = HsqcParams {
        sa: SaParams::new(args.sa_sweeps, args.sa_runs, 0),
        dcqo: args.dcqo.params(0),
        final_stage,
        seed: args.seed,
    };
    let seeds: Vec<u64> = (0..args.trials as u64).map(|k| args.seed.wrapping_add(k)).collect();
    let outcomes = run_trials(&inst, &params, &seeds)?;
    if let Some(path) = &args.csv {
        write_hsqc_csv(path, &outcomes)?;
    }
    let mut result = json!({
        "command": "hsqc",
        "final": match args.r#final { FinalKind::Mts => "mts", FinalKind::Sa => "sa", FinalKind::None => "none" },
        "trials": to_value(&outcomes),
        "measured": {
            "wall_time_s": outcomes.iter().map(HsqcOutcome::wall_time_s).collect::<Vec<_>>(),
        },
    });
    if let Some(e_gs) = inst.ground_state_energy() {
        let bests: Vec<f64> = outcomes.iter().map(|o| o.summary.best_energy).collect();
        let p_gs = estimate_pgs(&bests, e_gs, None)?;
        let t_f = outcomes.iter().map(|o| o.summary.total_model_time_s).sum::<f64>() / outcomes.len() as f64;
        result["p_gs"] = json!(p_gs);
        if t_f > 0.0 {
            result["convergence"] = to_value(&convergence_time(p_gs, t_f, DEFAULT_CONFIDENCE)?);
        }
    }
    emit(&result)
}

fn cmd_tau(args: &TauArgs) -> Result<()> {
    let p_gs = match (args.pgs, &args.energies) {
        (Some(p), _) => p,
        (None, Some(path)) => {
            let e_gs = args
                .e_gs
                .ok_or_else(|| Error::InvalidParameter("--energies needs --e-gs".into()))?;
            let energies = read_text(path)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| {
                    l.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidParameter(format!("bad energy {l:?}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            estimate_pgs(&energies, e_gs, None)?
        }
        (None, None) => return Err(Error::InvalidParameter("give --pgs or --energies".into()).into()),
    };
    let estimate = convergence_time(p_gs, args.tf, args.confidence)?;
    let tau_s = match estimate.tau {
        Tau::Finite(t) => json!(t),
        Tau::Zero => json!(0.0),
        Tau::Infinite => Value::Null,
    };
    emit(&json!({
        "command": "tau",
        "estimate": to_value(&estimate),
        "tau_s": tau_s,
    }))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::InvalidParameter("--jobs must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker pool")?;
    }
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Sa(a) => cmd_sa(a),
        Command::Mts(a) => cmd_mts(a),
        Command::Dcqo(a) => cmd_dcqo(a),
        Command::Hsqc(a) => cmd_hsqc(a),
        Command::Tau(a) => cmd_tau(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let failure = classify(e);
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
