//! Benchmark harness: seeded random unitaries per (map, qubit count) cell,
//! median counts, reference bounds and a versioned JSON report.

use std::fmt::Write as _;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::blockzxz::synth::{synthesize_with, SynthOptions};
use crate::circuit::count_gates;
use crate::numerics::haar_random_unitary;
use crate::topology::CouplingMap;

pub const REPORT_VERSION: u32 = 1;

/// Best known CNOT count for an `n`-qubit unitary on an all-to-all map,
/// `⌈22/48·4^n − 3/2·2^n + 5/3⌉`.
pub fn eq6_bound(n: u32) -> u64 {
    // Numerator over the common denominator 48; it is always positive.
    let num = 22 * 4u128.pow(n) + 80 - 72 * 2u128.pow(n);
    num.div_ceil(48) as u64
}

/// CNOTs needed by almost every `n`-qubit unitary, `(4^n − 3n − 1)/4`.
pub fn lower_bound(n: u32) -> f64 {
    (4f64.powi(n as i32) - 3.0 * n as f64 - 1.0) / 4.0
}

/// Lower median; counts stay integral.
pub fn median<T: Copy + PartialOrd>(values: &[T]) -> Option<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    v.get(v.len().saturating_sub(1) / 2).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Timeout,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub topology: String,
    pub n_qubits: u32,
    pub status: CellStatus,
    pub seeds: Vec<u64>,
    pub cnot_count: Option<u64>,
    pub total_gates: Option<u64>,
    pub depth: Option<u64>,
    pub runtime_ms: Option<f64>,
    pub per_seed_cnot: Vec<u64>,
    pub eq6_bound: u64,
    pub lower_bound: f64,
    /// `cnot_count / eq6_bound`.
    pub ratio_vs_eq6: Option<f64>,
    /// `cnot_count / lower_bound`.
    pub ratio_vs_lower: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub report_version: u32,
    pub records: Vec<BenchRecord>,
}

struct SeedRun {
    cnots: u64,
    total: u64,
    depth: u64,
    ms: f64,
}

fn run_seed(cm: &CouplingMap, n: u32, seed: u64, opts: &SynthOptions) -> crate::Result<SeedRun> {
    let u = haar_random_unitary(n as usize, seed)?;
    let start = Instant::now();
    let r = synthesize_with(&u, cm, opts)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let counts = count_gates(&r.circuit, true);
    Ok(SeedRun { cnots: counts.cnot_total as u64, total: counts.total as u64, depth: r.circuit.depth() as u64, ms })
}

/// Runs one cell. Seeds are `0..seeds`. With a timeout, the work runs on a
/// worker thread and the cell is reported as timed out once the budget for
/// all seeds is spent; the worker is abandoned.
pub fn run_cell(cm: &CouplingMap, n: u32, seeds: u64, timeout: Option<Duration>, opts: &SynthOptions) -> BenchRecord {
    let mut rec = BenchRecord {
        topology: cm.name().to_string(),
        n_qubits: n,
        status: CellStatus::Ok,
        seeds: (0..seeds).collect(),
        cnot_count: None,
        total_gates: None,
        depth: None,
        runtime_ms: None,
        per_seed_cnot: Vec::new(),
        eq6_bound: eq6_bound(n),
        lower_bound: lower_bound(n),
        ratio_vs_eq6: None,
        ratio_vs_lower: None,
        error: None,
    };
    let outcome = match timeout {
        None => Some((0..seeds).map(|s| run_seed(cm, n, s, opts)).collect::<crate::Result<Vec<_>>>()),
        Some(limit) => {
            let (tx, rx) = mpsc::channel();
            let (cm, opts) = (cm.clone(), opts.clone());
            std::thread::spawn(move || {
                let res = (0..seeds).map(|s| run_seed(&cm, n, s, &opts)).collect::<crate::Result<Vec<_>>>();
                let _ = tx.send(res);
            });
            rx.recv_timeout(limit).ok()
        }
    };
    match outcome {
        None => rec.status = CellStatus::Timeout,
        Some(Err(e)) => {
            rec.status = CellStatus::Error;
            rec.error = Some(e.to_string());
        }
        Some(Ok(runs)) => {
            rec.per_seed_cnot = runs.iter().map(|r| r.cnots).collect();
            rec.cnot_count = median(&rec.per_seed_cnot);
            rec.total_gates = median(&runs.iter().map(|r| r.total).collect::<Vec<_>>());
            rec.depth = median(&runs.iter().map(|r| r.depth).collect::<Vec<_>>());
            rec.runtime_ms = median(&runs.iter().map(|r| r.ms).collect::<Vec<_>>());
            if let Some(cx) = rec.cnot_count {
                rec.ratio_vs_eq6 = Some(cx as f64 / rec.eq6_bound as f64);
                rec.ratio_vs_lower = Some(cx as f64 / rec.lower_bound);
            }
        }
    }
    rec
}

impl BenchReport {
    pub fn new(records: Vec<BenchRecord>) -> Self {
        BenchReport { report_version: REPORT_VERSION, records }
    }

    /// One block per map: rows for this method, the bounds and the ratios,
    /// columns for the qubit counts.
    pub fn text_table(&self) -> String {
        let mut maps: Vec<&str> = Vec::new();
        for r in &self.records {
            if !maps.contains(&r.topology.as_str()) {
                maps.push(&r.topology);
            }
        }
        let mut out = String::new();
        for map in maps {
            let recs: Vec<&BenchRecord> = self.records.iter().filter(|r| r.topology == map).collect();
            let opt = |v: Option<String>| v.unwrap_or_else(|| "N/A".into());
            let rows: Vec<(&str, Vec<String>)> = vec![
                ("n", recs.iter().map(|r| r.n_qubits.to_string()).collect()),
                ("block-ZXZ CNOTs", recs.iter().map(|r| opt(r.cnot_count.map(|c| c.to_string()))).collect()),
                ("runtime [s]", recs.iter().map(|r| opt(r.runtime_ms.map(|m| format!("{:.2}", m / 1e3)))).collect()),
                ("all-to-all bound", recs.iter().map(|r| r.eq6_bound.to_string()).collect()),
                ("lower bound", recs.iter().map(|r| format!("{:.0}", r.lower_bound.ceil())).collect()),
                ("over all-to-all", recs.iter().map(|r| opt(r.ratio_vs_eq6.map(|x| format!("{:.1}%", (x - 1.0) * 100.0)))).collect()),
                ("over lower bound", recs.iter().map(|r| opt(r.ratio_vs_lower.map(|x| format!("{:.1}%", (x - 1.0) * 100.0)))).collect()),
            ];
            let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
            let col_w = rows.iter().flat_map(|(_, v)| v.iter().map(String::len)).max().unwrap_or(0);
            let _ = writeln!(out, "{map}");
            for (label, vals) in rows {
                let _ = write!(out, "  {label:<label_w$}");
                for v in vals {
                    let _ = write!(out, "  {v:>col_w$}");
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}
