//! Topology-aware recursive synthesis of an `n`-qubit unitary.
//!
//! Line `i` of the recursion (qubit `i` of the input matrix, most
//! significant first) lives on physical qubit `layout[i]`. Each level splits
//! the current block into three multiplexers whose UC gates target line `i`;
//! the first and last UC gates withhold their final CNOTs, which become CZs
//! absorbed into the central multiplexer. Two-qubit leaves on the last two
//! lines are emitted up to a diagonal that is pushed into the next leaf.

use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::two_qubit::{migrate_diagonal, two_qubit_exact, two_qubit_up_to_diagonal, u1q_gate};
use super::{block_zxz_split, demultiplex, merge_central, BlockZxz, Multiplexer};
use crate::circuit::{peephole, Circuit, Gate};
use crate::error::{Error, Result};
use crate::gray::{choose_gray, ladder_cnot, ladder_cost, optimize_with_swaps, synthesize_template, UcOptions, UcTemplate};
use crate::numerics::{identity, is_unitary, ComplexMatrix, UNITARY_TOL};
use crate::placement::{select_placement, Placement, EXHAUSTIVE_THRESHOLD};
use crate::topology::CouplingMap;

/// Largest line count whose orderings are all scored during refinement.
pub const EXHAUSTIVE_ORDER_MAX: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    /// Move UC targets towards the deepest target with SWAPs when cheaper.
    pub use_swaps: bool,
    /// Reorder the selected qubits by the cost of the UC gates they induce.
    pub refine_order: bool,
    pub leg_heuristic: bool,
    pub placement_threshold: u128,
    pub peephole: bool,
    /// Fixed line-to-physical assignment instead of automatic placement.
    pub placement: Option<Vec<usize>>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            use_swaps: false,
            refine_order: true,
            leg_heuristic: true,
            placement_threshold: EXHAUSTIVE_THRESHOLD,
            peephole: true,
            placement: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthStats {
    /// UC gates emitted with their target on line `i`.
    pub uc_per_line: Vec<u64>,
    pub fallback_terms: usize,
    pub leaves: usize,
    /// Leaves that needed three CNOTs although a diagonal was allowed.
    pub leaf_fallbacks: usize,
    pub swaps: usize,
    pub peephole_removed: usize,
}

#[derive(Debug, Clone)]
pub struct SynthResult {
    pub circuit: Circuit,
    pub placement: Placement,
    pub stats: SynthStats,
}

/// Synthesizes `u` on `cm` with default options.
pub fn synthesize(u: &ComplexMatrix, cm: &CouplingMap) -> Result<Circuit> {
    Ok(synthesize_with(u, cm, &SynthOptions::default())?.circuit)
}

fn num_lines(u: &ComplexMatrix) -> Result<usize> {
    let dim = u.nrows();
    if dim < 2 || !dim.is_power_of_two() || u.ncols() != dim {
        return Err(Error::precondition("synthesize", format!("expects a 2^n x 2^n matrix, got {}x{}", dim, u.ncols())));
    }
    if !is_unitary(u, UNITARY_TOL) {
        return Err(Error::precondition("synthesize", "matrix is not unitary"));
    }
    Ok(dim.trailing_zeros() as usize)
}

pub fn synthesize_with(u: &ComplexMatrix, cm: &CouplingMap, opts: &SynthOptions) -> Result<SynthResult> {
    let n = num_lines(u)?;
    if n > cm.num_qubits() {
        return Err(Error::Argument(format!("{n}-qubit unitary does not fit a {}-qubit map", cm.num_qubits())));
    }
    let uc = UcOptions { leg_heuristic: opts.leg_heuristic, merge_rightmost: false };
    let placement = match &opts.placement {
        Some(q) => {
            let mut seen = vec![false; cm.num_qubits()];
            if q.len() != n || q.iter().any(|&p| p >= cm.num_qubits() || std::mem::replace(&mut seen[p], true)) {
                return Err(Error::Argument(format!("placement {q:?} is not {n} distinct qubits of the map")));
            }
            Placement::new(q.clone(), cm)
        }
        None => {
            let p = select_placement(cm, n, opts.placement_threshold)?;
            if opts.refine_order && n >= 3 {
                Placement::new(refine_order(&p.qubits, cm, uc)?, cm)
            } else {
                p
            }
        }
    };

    let mut s = Synth::new(cm, n, opts, placement.qubits.clone());
    if n == 1 {
        s.items.push(Item::Gate(u1q_gate(placement.qubits[0], u)));
    } else {
        s.rec(u.clone(), 0)?;
    }
    s.restore_layout();
    let mut circuit = s.finish()?;
    let mut stats = s.stats;
    if opts.peephole {
        stats.peephole_removed = peephole(&mut circuit);
    }
    Ok(SynthResult { circuit, placement, stats })
}

enum Item {
    Gate(Gate),
    Leaf { hi: usize, lo: usize, u: ComplexMatrix },
}

type TemplateKey = (usize, Vec<usize>, bool);

struct Synth<'a> {
    cm: &'a CouplingMap,
    n: usize,
    opts: &'a SynthOptions,
    layout: Vec<usize>,
    /// `home[p]`: the physical qubit whose initial content now sits on `p`.
    home: Vec<usize>,
    items: Vec<Item>,
    templates: HashMap<TemplateKey, Rc<UcTemplate>>,
    sim_memo: HashMap<(usize, Vec<usize>), Vec<usize>>,
    stats: SynthStats,
}

impl<'a> Synth<'a> {
    fn new(cm: &'a CouplingMap, n: usize, opts: &'a SynthOptions, layout: Vec<usize>) -> Self {
        Synth {
            cm,
            n,
            opts,
            layout,
            home: (0..cm.num_qubits()).collect(),
            items: Vec::new(),
            templates: HashMap::new(),
            sim_memo: HashMap::new(),
            stats: SynthStats { uc_per_line: vec![0; n], ..Default::default() },
        }
    }

    fn template(&mut self, target: usize, controls: &[usize], tail: bool) -> Result<Rc<UcTemplate>> {
        let key = (target, controls.to_vec(), tail);
        if let Some(t) = self.templates.get(&key) {
            return Ok(t.clone());
        }
        let plan = choose_gray(target, controls, self.cm);
        let opts = UcOptions { leg_heuristic: self.opts.leg_heuristic, merge_rightmost: tail };
        let t = Rc::new(synthesize_template(&plan, self.cm, opts)?);
        self.templates.insert(key, t.clone());
        Ok(t)
    }

    fn emit_uc(&mut self, line: usize, t: &UcTemplate, alpha: &[f64], reversed: bool) {
        self.stats.uc_per_line[line] += 1;
        self.stats.fallback_terms += t.fallback_terms;
        let gates = t.instantiate(alpha);
        if reversed {
            self.items.extend(gates.into_iter().rev().map(Item::Gate));
        } else {
            self.items.extend(gates.into_iter().map(Item::Gate));
        }
    }

    fn entry_swaps(&self, i: usize, layout: &[usize]) -> Vec<(usize, usize)> {
        let n = self.n;
        if !self.opts.use_swaps || n - i <= 2 {
            return Vec::new();
        }
        let keep = Some((layout[n - 2], layout[n - 1]));
        optimize_with_swaps(layout[i], &layout[i + 1..], layout[n - 3], self.cm, keep).swaps
    }

    fn apply_swap(layout: &mut [usize], (a, b): (usize, usize)) {
        for q in layout.iter_mut() {
            if *q == a {
                *q = b;
            } else if *q == b {
                *q = a;
            }
        }
    }

    fn swap_now(&mut self, (a, b): (usize, usize)) {
        Self::apply_swap(&mut self.layout, (a, b));
        self.home.swap(a, b);
        self.stats.swaps += 1;
        self.items.push(Item::Gate(Gate::Swap(a, b)));
    }

    /// Layout after the subtree rooted at level `i` runs from `layout`.
    fn simulate(&mut self, i: usize, layout: Vec<usize>) -> Vec<usize> {
        if !self.opts.use_swaps || self.n - i <= 2 {
            return layout;
        }
        let key = (i, layout);
        if let Some(l) = self.sim_memo.get(&key) {
            return l.clone();
        }
        let mut lay = key.1.clone();
        for sw in self.entry_swaps(i, &lay) {
            Self::apply_swap(&mut lay, sw);
        }
        for _ in 0..4 {
            lay = self.simulate(i + 1, lay);
        }
        self.sim_memo.insert(key, lay.clone());
        lay
    }

    fn positions(lines: &[usize], qubits: &[usize]) -> Vec<usize> {
        qubits.iter().map(|q| lines.iter().position(|l| l == q).expect("pending control is a line")).collect()
    }

    fn rec(&mut self, u: ComplexMatrix, i: usize) -> Result<()> {
        let n = self.n;
        if n - i == 2 {
            self.items.push(Item::Leaf { hi: self.layout[n - 2], lo: self.layout[n - 1], u });
            return Ok(());
        }
        for sw in self.entry_swaps(i, &self.layout.clone()) {
            self.swap_now(sw);
        }
        let half = u.nrows() / 2;
        let BlockZxz { a1, a2, b, c } = block_zxz_split(&u)?;
        drop(u);
        let dc = demultiplex(&Multiplexer { u1: identity(half), u2: c, select: i })?;
        let da = demultiplex(&Multiplexer { u1: a1, u2: a2, select: i })?;

        self.rec(dc.w, i + 1)?;
        let t = self.layout[i];
        let ctrls = self.layout[i + 1..].to_vec();
        let tc = self.template(t, &ctrls, true)?;
        self.emit_uc(i, &tc, &dc.alpha, false);
        let lines_c = Self::positions(&ctrls, &tc.pending);
        self.items.push(Item::Gate(Gate::H(t)));

        let mid = self.simulate(i + 1, self.layout.clone());
        let after = self.simulate(i + 1, mid);
        let ta = self.template(after[i], &after[i + 1..], true)?;
        let lines_a = Self::positions(&after[i + 1..], &ta.pending);

        let (top, bottom) = merge_central(&dc.v, &b, &da.w, &lines_c, &lines_a);
        drop(b);
        let db = demultiplex(&Multiplexer { u1: top, u2: bottom, select: i })?;
        self.rec(db.w, i + 1)?;
        let controls = self.layout[i + 1..].to_vec();
        let tb = self.template(self.layout[i], &controls, false)?;
        self.emit_uc(i, &tb, &db.alpha, false);
        self.rec(db.v, i + 1)?;
        if self.layout != after {
            return Err(Error::Internal("layout simulation diverged from emission".into()));
        }

        self.items.push(Item::Gate(Gate::H(self.layout[i])));
        self.emit_uc(i, &ta, &da.alpha, true);
        self.rec(da.v, i + 1)
    }

    /// Returns every displaced qubit content to where it started, swapping
    /// along a spanning tree whose leaves are settled one at a time.
    fn restore_layout(&mut self) {
        if self.home.iter().enumerate().all(|(p, &h)| p == h) {
            return;
        }
        let v = self.cm.num_qubits();
        let mut parent = vec![usize::MAX; v];
        let mut order = vec![0];
        let mut seen = vec![false; v];
        seen[0] = true;
        let mut k = 0;
        while k < order.len() {
            let u = order[k];
            for &w in self.cm.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = u;
                    order.push(w);
                }
            }
            k += 1;
        }
        // Reverse BFS order settles leaves of the remaining tree first.
        for &leaf in order.iter().rev() {
            let Some(mut at) = self.home.iter().position(|&h| h == leaf) else { continue };
            while at != leaf {
                // Step towards `leaf` inside the tree of unsettled vertices.
                let next = self.tree_step(at, leaf, &parent);
                self.swap_now((at, next));
                at = next;
            }
        }
    }

    fn tree_step(&self, from: usize, to: usize, parent: &[usize]) -> usize {
        // If `to` lies below `from`, move down towards it, else move up.
        let mut w = to;
        while parent[w] != usize::MAX {
            if parent[w] == from {
                return w;
            }
            w = parent[w];
        }
        parent[from]
    }

    fn finish(&mut self) -> Result<Circuit> {
        let cm = self.cm;
        let mut circ = Circuit::new(cm.num_qubits());
        let leaves: Vec<usize> = self.items.iter().enumerate().filter(|(_, it)| matches!(it, Item::Leaf { .. })).map(|(k, _)| k).collect();
        self.stats.leaves = leaves.len();
        let last_leaf = leaves.last().copied();
        let mut carry: Option<[crate::numerics::C64; 4]> = None;
        for (k, item) in std::mem::take(&mut self.items).into_iter().enumerate() {
            match item {
                Item::Gate(Gate::Swap(a, b)) => circ.extend([Gate::Cnot(a, b), Gate::Cnot(b, a), Gate::Cnot(a, b)]),
                Item::Gate(g) => circ.push(g),
                Item::Leaf { hi, lo, u } => {
                    let u = match carry.take() {
                        Some(d) => migrate_diagonal(&u, &d),
                        None => u,
                    };
                    let local = if Some(k) == last_leaf {
                        two_qubit_exact(&u)?
                    } else {
                        let (c, d) = two_qubit_up_to_diagonal(&u)?;
                        if c.cnot_count() > 2 {
                            self.stats.leaf_fallbacks += 1;
                        }
                        carry = Some(d);
                        c
                    };
                    circ.global_phase += local.global_phase;
                    let map = |q: usize| if q == 0 { hi } else { lo };
                    for g in &local.gates {
                        match *g {
                            Gate::Cnot(a, b) if !cm.is_edge(map(a), map(b)) => circ.extend(ladder_cnot(map(a), map(b), cm)),
                            g => circ.push(g.remap(map)),
                        }
                    }
                }
            }
        }
        Ok(circ)
    }
}

/// Static CNOT estimate of a full synthesis with lines on `order`.
pub fn order_cost(order: &[usize], cm: &CouplingMap, uc: UcOptions) -> Result<usize> {
    let mut cache = HashMap::new();
    order_cost_cached(order, cm, uc, &mut cache)
}

type LevelCache = HashMap<(usize, Vec<usize>), usize>;

fn order_cost_cached(order: &[usize], cm: &CouplingMap, uc: UcOptions, cache: &mut LevelCache) -> Result<usize> {
    let n = order.len();
    if n < 2 {
        return Ok(0);
    }
    let mut total = 0usize;
    for i in 0..n - 2 {
        let mut set = order[i + 1..].to_vec();
        set.sort_unstable();
        let key = (order[i], set);
        let level = match cache.get(&key) {
            Some(&c) => c,
            None => {
                let plan = choose_gray(order[i], &order[i + 1..], cm);
                let tail = synthesize_template(&plan, cm, UcOptions { merge_rightmost: true, ..uc })?.cnot_count;
                let exact = synthesize_template(&plan, cm, UcOptions { merge_rightmost: false, ..uc })?.cnot_count;
                cache.insert(key, 2 * tail + exact);
                2 * tail + exact
            }
        };
        total += (1usize << (2 * i)) * level;
    }
    let leaves = 1usize << (2 * (n - 2));
    total += (2 * leaves + 1) * ladder_cost(cm.dist(order[n - 2], order[n - 1]));
    Ok(total)
}

/// Reorders the selected qubits to minimize [`order_cost`]: every ordering
/// for up to [`EXHAUSTIVE_ORDER_MAX`] lines, best-improvement transpositions
/// beyond. Ties keep the earlier ordering, so the input wins on equal cost.
pub fn refine_order(order: &[usize], cm: &CouplingMap, uc: UcOptions) -> Result<Vec<usize>> {
    let n = order.len();
    let mut cache = LevelCache::new();
    let mut best = order.to_vec();
    let mut best_cost = order_cost_cached(&best, cm, uc, &mut cache)?;
    if n <= EXHAUSTIVE_ORDER_MAX {
        let mut idx: Vec<usize> = (0..n).collect();
        while next_permutation(&mut idx) {
            let cand: Vec<usize> = idx.iter().map(|&k| order[k]).collect();
            let c = order_cost_cached(&cand, cm, uc, &mut cache)?;
            if c < best_cost {
                (best, best_cost) = (cand, c);
            }
        }
        return Ok(best);
    }
    loop {
        let mut improved = None;
        for a in 0..n {
            for b in a + 1..n {
                let mut cand = best.clone();
                cand.swap(a, b);
                let c = order_cost_cached(&cand, cm, uc, &mut cache)?;
                if improved.as_ref().map_or(c < best_cost, |(bc, _)| c < *bc) {
                    improved = Some((c, cand));
                }
            }
        }
        match improved {
            Some((c, cand)) => (best, best_cost) = (cand, c),
            None => return Ok(best),
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return false };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
