//! Gate-level IR over physical qubits, the dense unitary simulator used as
//! the correctness oracle, gate counting, connectivity validation and
//! OpenQASM 2.0 export.
//!
//! Qubit 0 of a register is the most significant bit of a basis index.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c, cis, from_rows, ComplexMatrix, C64};
use crate::topology::CouplingMap;

/// Largest register the simulator accepts.
pub const MAX_SIM_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    RZ,
    RY,
    RX,
    H,
    CNOT,
    CZ,
    SWAP,
    U1Q,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::RZ => "rz",
            GateKind::RY => "ry",
            GateKind::RX => "rx",
            GateKind::H => "h",
            GateKind::CNOT => "cx",
            GateKind::CZ => "cz",
            GateKind::SWAP => "swap",
            GateKind::U1Q => "u1q",
        }
    }
}

/// One gate on physical qubits. Angles are in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rz(usize, f64),
    Ry(usize, f64),
    Rx(usize, f64),
    H(usize),
    /// Control first.
    Cnot(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
    /// `e^{iφ}·RZ(α)·RY(β)·RZ(γ)`.
    U1q { q: usize, alpha: f64, beta: f64, gamma: f64, phase: f64 },
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Rz(..) => GateKind::RZ,
            Gate::Ry(..) => GateKind::RY,
            Gate::Rx(..) => GateKind::RX,
            Gate::H(_) => GateKind::H,
            Gate::Cnot(..) => GateKind::CNOT,
            Gate::Cz(..) => GateKind::CZ,
            Gate::Swap(..) => GateKind::SWAP,
            Gate::U1q { .. } => GateKind::U1Q,
        }
    }

    /// Qubits touched, control first for two-qubit kinds.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rz(q, _) | Gate::Ry(q, _) | Gate::Rx(q, _) | Gate::H(q) | Gate::U1q { q, .. } => vec![q],
            Gate::Cnot(a, b) | Gate::Cz(a, b) | Gate::Swap(a, b) => vec![a, b],
        }
    }

    pub fn two_qubit(&self) -> Option<(usize, usize)> {
        match *self {
            Gate::Cnot(a, b) | Gate::Cz(a, b) | Gate::Swap(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Gate::Rz(_, t) | Gate::Ry(_, t) | Gate::Rx(_, t) => vec![t],
            Gate::U1q { alpha, beta, gamma, phase, .. } => vec![alpha, beta, gamma, phase],
            _ => Vec::new(),
        }
    }

    /// Matrix on the gate's own qubits, listed as in [`Gate::qubits`].
    pub fn matrix(&self) -> ComplexMatrix {
        match *self {
            Gate::Rz(_, t) => rz(t),
            Gate::Ry(_, t) => ry(t),
            Gate::Rx(_, t) => rx(t),
            Gate::H(_) => hadamard(),
            Gate::Cnot(..) => cnot(),
            Gate::Cz(..) => cz(),
            Gate::Swap(..) => swap(),
            Gate::U1q { alpha, beta, gamma, phase, .. } => u1q(alpha, beta, gamma, phase),
        }
    }

    /// The same gate with every qubit index sent through `f`.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::Rz(q, t) => Gate::Rz(f(q), t),
            Gate::Ry(q, t) => Gate::Ry(f(q), t),
            Gate::Rx(q, t) => Gate::Rx(f(q), t),
            Gate::H(q) => Gate::H(f(q)),
            Gate::Cnot(a, b) => Gate::Cnot(f(a), f(b)),
            Gate::Cz(a, b) => Gate::Cz(f(a), f(b)),
            Gate::Swap(a, b) => Gate::Swap(f(a), f(b)),
            Gate::U1q { q, alpha, beta, gamma, phase } => Gate::U1q { q: f(q), alpha, beta, gamma, phase },
        }
    }

    /// The inverse gate.
    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rz(q, t) => Gate::Rz(q, -t),
            Gate::Ry(q, t) => Gate::Ry(q, -t),
            Gate::Rx(q, t) => Gate::Rx(q, -t),
            Gate::U1q { q, alpha, beta, gamma, phase } => Gate::U1q { q, alpha: -gamma, beta: -beta, gamma: -alpha, phase: -phase },
            g => g,
        }
    }
}

pub fn rz(theta: f64) -> ComplexMatrix {
    let z = c(0.0, 0.0);
    from_rows(&[&[cis(-theta / 2.0), z], &[z, cis(theta / 2.0)]])
}

pub fn ry(theta: f64) -> ComplexMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    from_rows(&[&[c(co, 0.0), c(-s, 0.0)], &[c(s, 0.0), c(co, 0.0)]])
}

pub fn rx(theta: f64) -> ComplexMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    from_rows(&[&[c(co, 0.0), c(0.0, -s)], &[c(0.0, -s), c(co, 0.0)]])
}

pub fn hadamard() -> ComplexMatrix {
    let h = c(FRAC_1_SQRT_2, 0.0);
    from_rows(&[&[h, h], &[h, -h]])
}

pub fn u1q(alpha: f64, beta: f64, gamma: f64, phase: f64) -> ComplexMatrix {
    rz(alpha) * ry(beta) * rz(gamma) * cis(phase)
}

fn perm4(p: [usize; 4], signs: [f64; 4]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    for (col, &row) in p.iter().enumerate() {
        m[(row, col)] = c(signs[col], 0.0);
    }
    m
}

/// Control on the first (most significant) qubit.
pub fn cnot() -> ComplexMatrix {
    perm4([0, 1, 3, 2], [1.0; 4])
}

pub fn cz() -> ComplexMatrix {
    perm4([0, 1, 2, 3], [1.0, 1.0, 1.0, -1.0])
}

pub fn swap() -> ComplexMatrix {
    perm4([0, 2, 1, 3], [1.0; 4])
}

/// An ordered gate list over physical qubits plus an explicit global phase.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub num_physical_qubits: usize,
    pub gates: Vec<Gate>,
    pub global_phase: f64,
}

impl Circuit {
    pub fn new(num_physical_qubits: usize) -> Self {
        Circuit { num_physical_qubits, gates: Vec::new(), global_phase: 0.0 }
    }

    pub fn push(&mut self, g: Gate) {
        self.gates.push(g);
    }

    pub fn extend(&mut self, gs: impl IntoIterator<Item = Gate>) {
        self.gates.extend(gs);
    }

    /// `self` followed by `other`.
    pub fn append(&mut self, other: &Circuit) {
        self.gates.extend_from_slice(&other.gates);
        self.global_phase += other.global_phase;
    }

    pub fn cnot_count(&self) -> usize {
        count_gates(self, true).cnot_total
    }

    /// Number of layers when every gate occupies one time step on its qubits.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.num_physical_qubits];
        let mut depth = 0;
        for g in &self.gates {
            let qs = g.qubits();
            let l = qs.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
            for q in qs {
                level[q] = l;
            }
            depth = depth.max(l);
        }
        depth
    }

    /// Distinct qubits touched by any gate, ascending.
    pub fn active_qubits(&self) -> Vec<usize> {
        let mut used = vec![false; self.num_physical_qubits];
        for g in &self.gates {
            for q in g.qubits() {
                used[q] = true;
            }
        }
        (0..self.num_physical_qubits).filter(|&q| used[q]).collect()
    }

    pub fn validate_indices(&self) -> Result<()> {
        for (i, g) in self.gates.iter().enumerate() {
            let qs = g.qubits();
            if qs.iter().any(|&q| q >= self.num_physical_qubits) {
                return Err(Error::Argument(format!("gate #{i} {g:?} exceeds {} qubits", self.num_physical_qubits)));
            }
            if qs.len() == 2 && qs[0] == qs[1] {
                return Err(Error::Argument(format!("gate #{i} {g:?} repeats a qubit")));
            }
            if g.params().iter().any(|p| !p.is_finite()) {
                return Err(Error::Argument(format!("gate #{i} {g:?} has a non-finite angle")));
            }
        }
        Ok(())
    }
}

/// Applies the 2×2 `m` to bit `bit` (counted from the least significant
/// end) of every column of the column-major `dim × cols` buffer `data`.
/// Calls `f(lo, hi)` for each amplitude pair differing only in `mask`.
#[inline(always)]
fn for_pairs(col: &mut [C64], mask: usize, mut f: impl FnMut(&mut C64, &mut C64)) {
    for block in col.chunks_exact_mut(2 * mask) {
        let (lo, hi) = block.split_at_mut(mask);
        for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
            f(x, y);
        }
    }
}

fn apply_1q(data: &mut [C64], dim: usize, bit: usize, m: &ComplexMatrix) {
    let (a, b, cc, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let mask = 1usize << bit;
    let diagonal = b == C64::new(0.0, 0.0) && cc == C64::new(0.0, 0.0);
    for col in data.chunks_exact_mut(dim) {
        if diagonal {
            for_pairs(col, mask, |x, y| {
                *x *= a;
                *y *= d;
            });
        } else {
            for_pairs(col, mask, |x, y| {
                let (u, v) = (*x, *y);
                *x = a * u + b * v;
                *y = cc * u + d * v;
            });
        }
    }
}

/// Full unitary of `c`, including its global phase.
///
/// With `restrict_to`, the register is that ordered subset (its first entry
/// is the most significant bit); otherwise it is every physical qubit.
pub fn circuit_to_unitary(circ: &Circuit, restrict_to: Option<&[usize]>) -> Result<ComplexMatrix> {
    let all: Vec<usize>;
    let reg: &[usize] = match restrict_to {
        Some(r) => r,
        None => {
            all = (0..circ.num_physical_qubits).collect();
            &all
        }
    };
    let k = reg.len();
    if k > MAX_SIM_QUBITS {
        return Err(Error::Resource(format!("simulating {k} qubits exceeds the cap of {MAX_SIM_QUBITS}")));
    }
    let mut local = vec![usize::MAX; circ.num_physical_qubits.max(reg.iter().map(|&q| q + 1).max().unwrap_or(0))];
    for (i, &q) in reg.iter().enumerate() {
        local[q] = i;
    }
    let bit_of = |q: usize| -> Result<usize> {
        match local.get(q) {
            Some(&l) if l != usize::MAX => Ok(k - 1 - l),
            _ => Err(Error::Argument(format!("gate acts on qubit {q} outside the simulated register"))),
        }
    };

    let dim = 1usize << k;
    let mut u = ComplexMatrix::identity(dim, dim);
    let data = u.as_mut_slice();
    for g in &circ.gates {
        match *g {
            Gate::Cnot(a, b) => {
                let (ma, mb) = (1usize << bit_of(a)?, 1usize << bit_of(b)?);
                for col in data.chunks_exact_mut(dim) {
                    if mb < ma {
                        for block in col.chunks_exact_mut(2 * ma) {
                            for_pairs(&mut block[ma..], mb, std::mem::swap);
                        }
                    } else {
                        for block in col.chunks_exact_mut(2 * mb) {
                            let (lo, hi) = block.split_at_mut(mb);
                            for (x, y) in lo.chunks_exact_mut(2 * ma).zip(hi.chunks_exact_mut(2 * ma)) {
                                x[ma..].swap_with_slice(&mut y[ma..]);
                            }
                        }
                    }
                }
            }
            Gate::Cz(a, b) => {
                let m = (1usize << bit_of(a)?) | (1usize << bit_of(b)?);
                for col in data.chunks_exact_mut(dim) {
                    for (i, z) in col.iter_mut().enumerate() {
                        if i & m == m {
                            *z = -*z;
                        }
                    }
                }
            }
            Gate::Swap(a, b) => {
                let (ma, mb) = (1usize << bit_of(a)?, 1usize << bit_of(b)?);
                for col in data.chunks_exact_mut(dim) {
                    for i in 0..dim {
                        if i & ma != 0 && i & mb == 0 {
                            col.swap(i, (i & !ma) | mb);
                        }
                    }
                }
            }
            ref one => {
                let q = one.qubits()[0];
                apply_1q(data, dim, bit_of(q)?, &one.matrix());
            }
        }
    }
    Ok(u * cis(circ.global_phase))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GateCounts {
    pub by_kind: BTreeMap<String, usize>,
    pub cnot_total: usize,
    pub total: usize,
}

/// Per-kind counts; `cnot_total` adds three per SWAP when `expand_swaps`.
pub fn count_gates(circ: &Circuit, expand_swaps: bool) -> GateCounts {
    let mut by_kind = BTreeMap::new();
    for g in &circ.gates {
        *by_kind.entry(g.kind().name().to_string()).or_insert(0) += 1;
    }
    let get = |k: GateKind| by_kind.get(k.name()).copied().unwrap_or(0);
    let swaps = get(GateKind::SWAP);
    let cnot_total = get(GateKind::CNOT) + if expand_swaps { 3 * swaps } else { 0 };
    GateCounts { cnot_total, total: circ.gates.len(), by_kind }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub gate_index: usize,
    pub qubits: (usize, usize),
}

/// Every two-qubit gate whose qubits are not coupled in `cm`.
pub fn validate_connectivity(circ: &Circuit, cm: &CouplingMap) -> Vec<Violation> {
    circ.gates
        .iter()
        .enumerate()
        .filter_map(|(i, g)| {
            let (a, b) = g.two_qubit()?;
            let ok = a < cm.num_qubits() && b < cm.num_qubits() && cm.is_edge(a, b);
            (!ok).then_some(Violation { gate_index: i, qubits: (a, b) })
        })
        .collect()
}

/// OpenQASM 2.0 text. Angles use the shortest decimal form that reads back
/// to the same `f64`; U1Q phases and the circuit phase go into comments.
pub fn export_qasm(circ: &Circuit) -> String {
    let mut s = String::new();
    s.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    if circ.global_phase != 0.0 {
        let _ = writeln!(s, "// global_phase {}", circ.global_phase);
    }
    let _ = writeln!(s, "qreg q[{}];", circ.num_physical_qubits);
    for g in &circ.gates {
        let _ = match *g {
            Gate::Rz(q, t) => writeln!(s, "rz({t}) q[{q}];"),
            Gate::Ry(q, t) => writeln!(s, "ry({t}) q[{q}];"),
            Gate::Rx(q, t) => writeln!(s, "rx({t}) q[{q}];"),
            Gate::H(q) => writeln!(s, "h q[{q}];"),
            Gate::Cnot(a, b) => writeln!(s, "cx q[{a}],q[{b}];"),
            Gate::Cz(a, b) => writeln!(s, "cz q[{a}],q[{b}];"),
            Gate::Swap(a, b) => writeln!(s, "cx q[{a}],q[{b}];\ncx q[{b}],q[{a}];\ncx q[{a}],q[{b}];"),
            Gate::U1q { q, alpha, beta, gamma, phase } => {
                writeln!(s, "u3({beta},{alpha},{gamma}) q[{q}]; // phase {phase}")
            }
        };
    }
    s
}

/// Reads the subset of OpenQASM 2.0 that [`export_qasm`] writes.
///
/// `u3` is read as a U1Q whose phase is taken from a trailing `// phase`
/// comment, or set so the gate equals qelib1's `u3` when none is present.
pub fn parse_qasm(text: &str) -> Result<Circuit> {
    let mut circ: Option<Circuit> = None;
    let mut phase = 0.0;
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let err = |m: &str| Error::Format(format!("QASM line {ln}: {m}: '{raw}'"));
        let (code, comment) = match raw.split_once("//") {
            Some((a, b)) => (a.trim(), Some(b.trim())),
            None => (raw.trim(), None),
        };
        if code.is_empty() {
            if let Some(v) = comment.and_then(|c| c.strip_prefix("global_phase")) {
                phase = v.trim().parse().map_err(|_| err("bad global phase"))?;
            }
            continue;
        }
        if code.starts_with("OPENQASM") || code.starts_with("include") {
            continue;
        }
        let stmt = code.strip_suffix(';').ok_or_else(|| err("missing ';'"))?.trim();
        if let Some(rest) = stmt.strip_prefix("qreg") {
            let n = bracket_index(rest.trim()).ok_or_else(|| err("bad qreg"))?;
            circ = Some(Circuit::new(n));
            continue;
        }
        let c = circ.as_mut().ok_or_else(|| err("gate before qreg"))?;
        let (head, args) = match stmt.find(|ch: char| ch.is_whitespace()) {
            Some(p) if !stmt[..p].contains('(') || stmt[..p].contains(')') => (&stmt[..p], stmt[p..].trim()),
            _ => {
                let p = stmt.find(')').ok_or_else(|| err("unbalanced parameters"))? + 1;
                (&stmt[..p], stmt[p..].trim())
            }
        };
        let (name, params) = match head.split_once('(') {
            Some((n, p)) => {
                let p = p.strip_suffix(')').ok_or_else(|| err("unbalanced parameters"))?;
                let vals: std::result::Result<Vec<f64>, _> = p.split(',').map(|x| x.trim().parse::<f64>()).collect();
                (n.trim(), vals.map_err(|_| err("bad angle"))?)
            }
            None => (head.trim(), Vec::new()),
        };
        let qs: Option<Vec<usize>> = args.split(',').map(|a| bracket_index(a.trim())).collect();
        let qs = qs.ok_or_else(|| err("bad qubit operand"))?;
        let want = |np: usize, nq: usize| -> Result<()> {
            if params.len() == np && qs.len() == nq {
                Ok(())
            } else {
                Err(err("wrong operand count"))
            }
        };
        let g = match name {
            "rz" => want(1, 1).map(|_| Gate::Rz(qs[0], params[0]))?,
            "ry" => want(1, 1).map(|_| Gate::Ry(qs[0], params[0]))?,
            "rx" => want(1, 1).map(|_| Gate::Rx(qs[0], params[0]))?,
            "h" => want(0, 1).map(|_| Gate::H(qs[0]))?,
            "cx" => want(0, 2).map(|_| Gate::Cnot(qs[0], qs[1]))?,
            "cz" => want(0, 2).map(|_| Gate::Cz(qs[0], qs[1]))?,
            "u3" => {
                want(3, 1)?;
                let (beta, alpha, gamma) = (params[0], params[1], params[2]);
                let phase = match comment.and_then(|c| c.strip_prefix("phase")) {
                    Some(v) => v.trim().parse().map_err(|_| err("bad phase comment"))?,
                    None => (alpha + gamma) / 2.0,
                };
                Gate::U1q { q: qs[0], alpha, beta, gamma, phase }
            }
            _ => return Err(err("unsupported gate")),
        };
        c.push(g);
    }
    let mut c = circ.ok_or_else(|| Error::Format("QASM has no qreg".into()))?;
    c.global_phase = phase;
    c.validate_indices()?;
    Ok(c)
}

fn bracket_index(s: &str) -> Option<usize> {
    let inner = s.strip_prefix("q[")?.strip_suffix(']')?;
    inner.trim().parse().ok()
}

/// Distance of `circ` from `u` up to global phase, with line `i` of `u` on
/// physical qubit `placement[i]`. Any other qubit the circuit touches must
/// return to its input state: it joins the simulated register and `u` is
/// extended by the identity there.
pub fn synthesis_residual(circ: &Circuit, u: &ComplexMatrix, placement: &[usize]) -> Result<f64> {
    if u.nrows() != 1usize << placement.len() || !u.is_square() {
        return Err(Error::Argument(format!("{}x{} matrix for {} placed qubits", u.nrows(), u.ncols(), placement.len())));
    }
    let mut reg = placement.to_vec();
    reg.extend(circ.active_qubits().into_iter().filter(|q| !placement.contains(q)));
    let got = circuit_to_unitary(circ, Some(&reg))?;
    let extra = 1usize << (reg.len() - placement.len());
    let want = crate::numerics::kron(u, &crate::numerics::identity(extra));
    Ok(crate::numerics::phase_aligned_residual(&got, &want))
}

/// Drops rotations with zero angle and cancels CNOT pairs with nothing in
/// between on either qubit. Returns the number of removed gates.
pub fn peephole(circ: &mut Circuit) -> usize {
    const EPS: f64 = 1e-14;
    let before = circ.gates.len();
    let mut out: Vec<Option<Gate>> = Vec::with_capacity(before);
    let mut last: Vec<Vec<usize>> = vec![Vec::new(); circ.num_physical_qubits];
    for &g in &circ.gates {
        match g {
            Gate::Rz(_, t) | Gate::Ry(_, t) | Gate::Rx(_, t) if t.abs() < EPS => continue,
            Gate::U1q { alpha, beta, gamma, phase, .. } if beta.abs() < EPS && (alpha + gamma).abs() < EPS => {
                circ.global_phase += phase;
                continue;
            }
            Gate::Cnot(a, b) => {
                let top_a = last[a].last().copied();
                if let Some(idx) = top_a.filter(|&i| last[b].last() == Some(&i)) {
                    if out[idx] == Some(g) {
                        out[idx] = None;
                        last[a].pop();
                        last[b].pop();
                        continue;
                    }
                }
            }
            _ => {}
        }
        let idx = out.len();
        out.push(Some(g));
        for q in g.qubits() {
            last[q].push(idx);
        }
    }
    circ.gates = out.into_iter().flatten().collect();
    before - circ.gates.len()
}
