use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use zxz_synth::numerics::read_unitary_json;
use zxz_synth::report::{run_cell, BenchReport};
use zxz_synth::{
    count_gates, export_qasm, haar_random_unitary, parse_qasm, synthesis_residual, synthesize_with, validate_connectivity,
    ComplexMatrix, CouplingMap, SynthOptions, Topology,
};

/// Largest qubit count of a benchmark cell.
const MAX_QUBITS: usize = 14;
/// Largest register the verifier simulates.
const VERIFY_MAX_QUBITS: usize = 12;
/// Largest input the transpile oracle runs on.
const ORACLE_MAX_QUBITS: usize = 7;

#[derive(Parser)]
#[command(name = "zxz", version, about = "Topology-aware block-ZXZ unitary synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a unitary for a coupling map and write OpenQASM 2.0.
    Transpile(TranspileArgs),
    /// Benchmark seeded random unitaries over maps and qubit counts.
    Bench(BenchArgs),
    /// Compare a QASM circuit against a unitary up to global phase.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct MapArgs {
    /// Coupling map JSON file.
    #[arg(long, conflicts_with = "topology", required_unless_present = "topology")]
    coupling: Option<PathBuf>,
    /// Built-in map: complete:N, line:N, grid:WxH, heavyhex:156, garnet.
    #[arg(long)]
    topology: Option<String>,
}

impl MapArgs {
    fn load(&self) -> anyhow::Result<CouplingMap> {
        match (&self.coupling, &self.topology) {
            (Some(p), _) => CouplingMap::load(p).with_context(|| format!("reading coupling map {}", p.display())),
            (None, Some(t)) => Ok(t.parse::<Topology>()?.build()?),
            (None, None) => bail!("either --coupling or --topology is required"),
        }
    }
}

#[derive(Args)]
struct SynthFlags {
    /// Route UC targets with SWAPs when the estimate says it pays off.
    #[arg(long)]
    swaps: bool,
    /// Keep the peripheral-first order instead of refining it by cost.
    #[arg(long)]
    no_refine: bool,
}

impl SynthFlags {
    fn options(&self) -> SynthOptions {
        SynthOptions { use_swaps: self.swaps, refine_order: !self.no_refine, ..Default::default() }
    }
}

#[derive(Args)]
struct TranspileArgs {
    /// Unitary JSON file.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    unitary: Option<PathBuf>,
    /// Number of qubits of a Haar-random unitary.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0, requires = "random")]
    seed: u64,
    #[command(flatten)]
    map: MapArgs,
    /// QASM output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary path; standard output (or standard error when the QASM
    /// goes there) when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Simulate the result and compare it with the input (n ≤ 7).
    #[arg(long)]
    verify: bool,
    #[command(flatten)]
    flags: SynthFlags,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated built-in maps.
    #[arg(long, value_delimiter = ',', default_value = "garnet,heavyhex:156")]
    topologies: Vec<String>,
    /// Inclusive qubit range `a..b` (or a single count).
    #[arg(long, default_value = "3..7")]
    qubits: String,
    /// Seeded random unitaries per cell; the cell reports medians.
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    /// Per-cell budget in seconds; slower cells are reported as N/A.
    #[arg(long, default_value_t = 1800)]
    timeout: u64,
    /// Report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    flags: SynthFlags,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    qasm: PathBuf,
    #[arg(long)]
    unitary: PathBuf,
    /// Pass threshold on the Frobenius residual; defaults to 1e-8·2^n.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Physical qubit of each line, comma-separated; read from the QASM
    /// placement comment, or 0..n, when absent.
    #[arg(long, value_delimiter = ',')]
    placement: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct Summary {
    n_qubits: usize,
    topology: String,
    placement: Vec<usize>,
    cnot_count: usize,
    total_gates: usize,
    depth: usize,
    runtime_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verified: Option<bool>,
}

enum Outcome {
    Ok,
    Rejected,
}

const PLACEMENT_TAG: &str = "// placement";

fn with_placement(qasm: &str, placement: &[usize]) -> String {
    let line = format!("{PLACEMENT_TAG} {}\n", placement.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
    match qasm.find("qreg") {
        Some(p) => format!("{}{line}{}", &qasm[..p], &qasm[p..]),
        None => format!("{line}{qasm}"),
    }
}

fn placement_from_qasm(qasm: &str) -> anyhow::Result<Option<Vec<usize>>> {
    let Some(line) = qasm.lines().find_map(|l| l.trim().strip_prefix(PLACEMENT_TAG)) else { return Ok(None) };
    let qs = line.split_whitespace().map(str::parse).collect::<Result<Vec<usize>, _>>().context("bad placement comment")?;
    Ok(Some(qs))
}

fn read_unitary(path: &Path) -> anyhow::Result<ComplexMatrix> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    read_unitary_json(&text).with_context(|| format!("parsing unitary {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str, to_stderr: bool) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None if to_stderr => {
            eprintln!("{text}");
            Ok(())
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn transpile(args: &TranspileArgs) -> anyhow::Result<Outcome> {
    let u = match (&args.unitary, args.random) {
        (Some(p), _) => read_unitary(p)?,
        (None, Some(n)) => haar_random_unitary(n, args.seed)?,
        (None, None) => bail!("either --unitary or --random is required"),
    };
    let n = u.nrows().trailing_zeros() as usize;
    let cm = args.map.load()?;
    let start = Instant::now();
    let res = synthesize_with(&u, &cm, &args.flags.options())?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let violations = validate_connectivity(&res.circuit, &cm);
    if !violations.is_empty() {
        bail!("{} gates violate the coupling map", violations.len());
    }

    let (residual, verified) = if args.verify {
        if n > ORACLE_MAX_QUBITS {
            bail!("--verify supports at most {ORACLE_MAX_QUBITS} qubits, got {n}");
        }
        let r = synthesis_residual(&res.circuit, &u, &res.placement.qubits)?;
        (Some(r), Some(r <= 1e-8 * (1u64 << n) as f64))
    } else {
        (None, None)
    };
    let counts = count_gates(&res.circuit, true);
    let summary = Summary {
        n_qubits: n,
        topology: cm.name().to_string(),
        placement: res.placement.qubits.clone(),
        cnot_count: counts.cnot_total,
        total_gates: counts.total,
        depth: res.circuit.depth(),
        runtime_ms,
        residual,
        verified,
    };
    let qasm = with_placement(&export_qasm(&res.circuit), &res.placement.qubits);
    write_or_print(args.out.as_deref(), &qasm, false)?;
    write_or_print(args.summary.as_deref(), &serde_json::to_string_pretty(&summary)?, args.out.is_none())?;
    Ok(if verified == Some(false) { Outcome::Rejected } else { Outcome::Ok })
}

fn parse_range(s: &str) -> anyhow::Result<(u32, u32)> {
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let (a, b): (u32, u32) = (a.trim().parse().context("bad range start")?, b.trim().parse().context("bad range end")?);
    if a < 1 || a > b || b as usize > MAX_QUBITS {
        bail!("qubit range {s} must satisfy 1 <= a <= b <= {MAX_QUBITS}");
    }
    Ok((a, b))
}

fn bench(args: &BenchArgs) -> anyhow::Result<Outcome> {
    let (lo, hi) = parse_range(&args.qubits)?;
    let maps = args
        .topologies
        .iter()
        .map(|t| Ok(t.parse::<Topology>()?.build()?))
        .collect::<anyhow::Result<Vec<CouplingMap>>>()?;
    let opts = args.flags.options();
    let timeout = Some(Duration::from_secs(args.timeout));
    let mut records = Vec::new();
    for cm in &maps {
        for n in lo..=hi.min(cm.num_qubits() as u32) {
            eprintln!("{} n={n} ...", cm.name());
            records.push(run_cell(cm, n, args.seeds, timeout, &opts));
        }
    }
    let report = BenchReport::new(records);
    if let Some(p) = &args.out {
        std::fs::write(p, serde_json::to_string_pretty(&report)?).with_context(|| format!("writing {}", p.display()))?;
    }
    print!("{}", report.text_table());
    Ok(Outcome::Ok)
}

fn verify(args: &VerifyArgs) -> anyhow::Result<Outcome> {
    let text = std::fs::read_to_string(&args.qasm).with_context(|| format!("reading {}", args.qasm.display()))?;
    let circ = parse_qasm(&text)?;
    let u = read_unitary(&args.unitary)?;
    let n = u.nrows().trailing_zeros() as usize;
    let placement = match args.placement.clone() {
        Some(p) => p,
        None => placement_from_qasm(&text)?.unwrap_or_else(|| (0..n).collect()),
    };
    if placement.len() != n {
        bail!("placement has {} qubits, the unitary {n}", placement.len());
    }
    let register = placement.len() + circ.active_qubits().iter().filter(|q| !placement.contains(q)).count();
    if register > VERIFY_MAX_QUBITS {
        bail!("verification needs {register} qubits, above the limit of {VERIFY_MAX_QUBITS}");
    }
    let residual = synthesis_residual(&circ, &u, &placement)?;
    let tol = args.tolerance.unwrap_or(1e-8 * (1u64 << n) as f64);
    let pass = residual <= tol;
    println!("residual {residual:e} tolerance {tol:e} {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { Outcome::Ok } else { Outcome::Rejected })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Transpile(a) => transpile(a),
        Command::Bench(a) => bench(a),
        Command::Verify(a) => verify(a),
    };
    match res {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Rejected) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
