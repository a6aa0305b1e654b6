//! Hardware-aware synthesis of uniformly controlled Rz (UC) gates.
//!
//! A UC gate on `target` with controls `c_0..c_{k-1}` applies `Rz(α_j)` to
//! the target when the controls read the bit pattern `j`, with `c_0` the
//! most significant bit of `j`. Subsets of controls ("terms") use the same
//! bit layout: control `p` is bit `k-1-p`.
//!
//! Synthesis walks a cyclic Gray code over the controls, XOR-ing control
//! parities into the target with CNOT ladders and placing an Rz each time
//! the target carries a parity whose angle has not been applied yet.

use std::collections::HashMap;

use crate::circuit::{Gate, Circuit};
use crate::error::{Error, Result};
use crate::numerics::{cis, ComplexMatrix, C64};
use crate::topology::CouplingMap;

/// CNOTs needed by a ladder over `d` hops.
pub fn ladder_cost(d: usize) -> usize {
    match d {
        0 => 0,
        1 => 1,
        _ => 4 * d - 4,
    }
}

/// CNOT sequence along `path` whose net effect is `CNOT(path[0] → last)`
/// with every intermediate qubit restored.
pub fn ladder_along(path: &[usize]) -> Vec<(usize, usize)> {
    let k = path.len().saturating_sub(1);
    let e = |i: usize| (path[i], path[i + 1]);
    match k {
        0 => Vec::new(),
        1 => vec![e(0)],
        _ => {
            let mut g = Vec::with_capacity(4 * k - 4);
            g.extend((0..k).map(e));
            g.extend((0..k - 1).rev().map(e));
            g.extend((1..k).map(e));
            g.extend((1..k - 1).rev().map(e));
            g
        }
    }
}

/// Long-range CNOT along the canonical shortest path.
pub fn ladder_cnot(control: usize, target: usize, cm: &CouplingMap) -> Vec<Gate> {
    ladder_along(&cm.path(control, target)).into_iter().map(|(a, b)| Gate::Cnot(a, b)).collect()
}

/// A cyclic Gray code over the controls of one UC gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayPlan {
    pub target: usize,
    /// Controls in angle-pattern order.
    pub controls: Vec<usize>,
    /// Controls by frequency rank; `by_rank[0]` flips most often.
    pub by_rank: Vec<usize>,
    /// Control flipped at each step; the last step closes the cycle.
    pub flips: Vec<usize>,
    /// Pattern-layout codewords `g_0 = 0, g_1, …`, one per flip.
    pub codewords: Vec<u64>,
    pub estimated_cost: usize,
}

impl GrayPlan {
    /// Builds the binary-reflected cycle with `by_rank[r]` on code bit `r`.
    pub fn with_ranks(target: usize, controls: &[usize], by_rank: Vec<usize>, cm: &CouplingMap) -> Self {
        let k = controls.len();
        let mut flips = Vec::with_capacity(1 << k);
        for s in 1u64..(1u64 << k) {
            flips.push(by_rank[s.trailing_zeros() as usize]);
        }
        if k > 0 {
            flips.push(by_rank[k - 1]);
        }
        let bit = |q: usize| -> u64 {
            let p = controls.iter().position(|&c| c == q).expect("flip is a control");
            1u64 << (k - 1 - p)
        };
        let mut codewords = Vec::with_capacity(1 << k);
        let mut g = 0u64;
        codewords.push(g);
        for &f in flips.iter().take(flips.len().saturating_sub(1)) {
            g ^= bit(f);
            codewords.push(g);
        }
        let estimated_cost = flips.iter().map(|&c| ladder_cost(cm.dist(c, target))).sum();
        GrayPlan { target, controls: controls.to_vec(), by_rank, flips, codewords, estimated_cost }
    }

    /// Number of flips of each control, in `controls` order.
    pub fn frequencies(&self) -> Vec<usize> {
        self.controls.iter().map(|&c| self.flips.iter().filter(|&&f| f == c).count()).collect()
    }
}

/// Greedy plan: the control nearest the target flips most often.
pub fn choose_gray(target: usize, controls: &[usize], cm: &CouplingMap) -> GrayPlan {
    let mut by_rank = controls.to_vec();
    by_rank.sort_by_key(|&c| (cm.dist(c, target), c));
    GrayPlan::with_ranks(target, controls, by_rank, cm)
}

/// Fast Walsh–Hadamard transform scaled by `1/len`: entry `S` is the Rz
/// angle applied while the target carries the parity of term `S`.
pub fn term_angles(alpha: &[f64]) -> Vec<f64> {
    let n = alpha.len();
    let mut t = alpha.to_vec();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (t[j], t[j + h]);
                t[j] = a + b;
                t[j + h] = a - b;
            }
        }
        h *= 2;
    }
    let s = 1.0 / n as f64;
    t.iter_mut().for_each(|x| *x *= s);
    t
}

/// `θ = M·α` with `M_ij = 2^{-k}(−1)^{b_j·g_i}`: the angle at each codeword.
pub fn angle_transform(alpha: &[f64], plan: &GrayPlan) -> Result<Vec<f64>> {
    if alpha.len() != plan.codewords.len() {
        return Err(Error::Argument(format!(
            "{} angles for a plan with {} codewords",
            alpha.len(),
            plan.codewords.len()
        )));
    }
    let t = term_angles(alpha);
    Ok(plan.codewords.iter().map(|&g| t[g as usize]).collect())
}

/// The UC gate's matrix on the register `[target, controls…]`.
pub fn uc_diagonal(alpha: &[f64]) -> ComplexMatrix {
    let n = alpha.len();
    let mut d: Vec<C64> = Vec::with_capacity(2 * n);
    d.extend(alpha.iter().map(|&a| cis(-a / 2.0)));
    d.extend(alpha.iter().map(|&a| cis(a / 2.0)));
    crate::numerics::diag(&d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UcSpec {
    pub target: usize,
    pub controls: Vec<usize>,
    pub angles: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UcOptions {
    /// Rz on every fresh parity (including mid-ladder), the skip rule after
    /// ladders, and stopping once every term is placed.
    pub leg_heuristic: bool,
    /// Withhold the final parity clean-up and report it as pending CNOTs.
    pub merge_rightmost: bool,
}

impl Default for UcOptions {
    fn default() -> Self {
        UcOptions { leg_heuristic: true, merge_rightmost: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateOp {
    Cnot(usize, usize),
    /// Rz on the target with the angle of this term.
    Rz(u64),
}

/// Angle-independent gate skeleton of one UC gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UcTemplate {
    pub target: usize,
    pub controls: Vec<usize>,
    pub ops: Vec<TemplateOp>,
    /// Controls whose CNOT into the target was withheld; the emitted gates
    /// followed by these CNOTs realize the UC gate.
    pub pending: Vec<usize>,
    pub fallback_terms: usize,
    pub cnot_count: usize,
}

impl UcTemplate {
    /// Gates for concrete UC angles.
    pub fn instantiate(&self, alpha: &[f64]) -> Vec<Gate> {
        let theta = term_angles(alpha);
        self.instantiate_terms(&theta)
    }

    /// Gates for precomputed term angles, as from [`term_angles`].
    pub fn instantiate_terms(&self, theta: &[f64]) -> Vec<Gate> {
        self.ops
            .iter()
            .filter_map(|op| match *op {
                TemplateOp::Cnot(a, b) => Some(Gate::Cnot(a, b)),
                TemplateOp::Rz(s) => {
                    let th = theta[s as usize];
                    (th != 0.0).then_some(Gate::Rz(self.target, th))
                }
            })
            .collect()
    }

    pub fn pending_gates(&self) -> Vec<Gate> {
        self.pending.iter().map(|&c| Gate::Cnot(c, self.target)).collect()
    }
}

struct Tracker<'a> {
    cm: &'a CouplingMap,
    target: usize,
    k: usize,
    /// Bit index of each physical wire's original value.
    local: HashMap<usize, usize>,
    parity: HashMap<usize, u128>,
    explored: Vec<bool>,
    n_explored: usize,
    ops: Vec<TemplateOp>,
    cnots: usize,
    place_rz: bool,
}

impl<'a> Tracker<'a> {
    fn new(cm: &'a CouplingMap, target: usize, controls: &[usize], place_rz: bool) -> Self {
        let k = controls.len();
        let mut local = HashMap::new();
        for (p, &c) in controls.iter().enumerate() {
            local.insert(c, k - 1 - p);
        }
        local.insert(target, k);
        Tracker {
            cm,
            target,
            k,
            local,
            parity: HashMap::new(),
            explored: vec![false; 1 << k],
            n_explored: 0,
            ops: Vec::new(),
            cnots: 0,
            place_rz,
        }
    }

    fn get(&mut self, w: usize) -> Result<u128> {
        if let Some(&p) = self.parity.get(&w) {
            return Ok(p);
        }
        let next = self.local.len();
        let bit = *self.local.entry(w).or_insert(next);
        if bit >= 128 {
            return Err(Error::Internal("parity tracker exceeds 128 wires".into()));
        }
        let p = 1u128 << bit;
        self.parity.insert(w, p);
        Ok(p)
    }

    /// The term carried by the target when its parity is `t ⊕ S` with `S`
    /// a subset of controls.
    fn term_of(&self, mask: u128) -> Option<u64> {
        let tbit = 1u128 << self.k;
        let low = tbit - 1;
        (mask & tbit != 0 && mask & !(tbit | low) == 0).then_some((mask & low) as u64)
    }

    fn all_explored(&self) -> bool {
        self.n_explored == self.explored.len()
    }

    fn try_rz(&mut self) -> Result<()> {
        let m = self.get(self.target)?;
        if let Some(s) = self.term_of(m) {
            if !self.explored[s as usize] {
                self.explored[s as usize] = true;
                self.n_explored += 1;
                self.ops.push(TemplateOp::Rz(s));
            }
        }
        Ok(())
    }

    fn cnot(&mut self, a: usize, b: usize) -> Result<()> {
        let pa = self.get(a)?;
        let pb = self.get(b)?;
        self.parity.insert(b, pa ^ pb);
        self.ops.push(TemplateOp::Cnot(a, b));
        self.cnots += 1;
        if b == self.target && self.place_rz {
            self.try_rz()?;
        }
        Ok(())
    }

    fn path(&self, from: usize, is_ctrl: &[bool]) -> Vec<usize> {
        self.cm.path_preferring(from, self.target, |q| is_ctrl[q])
    }

    /// Physical controls whose bits are set in the pattern-layout `mask`.
    fn controls_of(&self, controls: &[usize], mask: u64) -> Vec<usize> {
        controls.iter().enumerate().filter(|(p, _)| mask >> (self.k - 1 - p) & 1 == 1).map(|(_, &c)| c).collect()
    }
}

/// CNOTs that XOR the values of `sources` into `target`, restoring every
/// other qubit. Uses a shared Steiner tree when it beats one ladder per
/// source.
pub fn xor_into(target: usize, sources: &[usize], cm: &CouplingMap, prefer: &dyn Fn(usize) -> bool) -> Vec<(usize, usize)> {
    if sources.is_empty() {
        return Vec::new();
    }
    let mut ladders = Vec::new();
    let mut sorted = sources.to_vec();
    sorted.sort_unstable();
    for &s in &sorted {
        ladders.extend(ladder_along(&cm.path_preferring(s, target, prefer)));
    }
    if sources.len() == 1 {
        return ladders;
    }
    let tree = steiner_xor(target, &sorted, cm);
    if tree.len() < ladders.len() {
        tree
    } else {
        ladders
    }
}

fn steiner_xor(root: usize, sources: &[usize], cm: &CouplingMap) -> Vec<(usize, usize)> {
    // Tree grown by attaching the closest remaining source via its
    // canonical path to the nearest tree node.
    let mut parent: HashMap<usize, usize> = HashMap::new();
    let mut in_tree = vec![root];
    let mut remaining: Vec<usize> = sources.iter().copied().filter(|&s| s != root).collect();
    while !remaining.is_empty() {
        let (_, r, x) = remaining
            .iter()
            .flat_map(|&r| in_tree.iter().map(move |&x| (cm.dist(r, x), r, x)))
            .min()
            .expect("non-empty");
        let p = cm.path(r, x);
        for w in p.windows(2) {
            if w[0] == root || parent.contains_key(&w[0]) {
                break;
            }
            parent.insert(w[0], w[1]);
            in_tree.push(w[0]);
        }
        remaining.retain(|q| *q != root && !parent.contains_key(q));
    }

    let mut out = Vec::new();
    let mut pending: Vec<usize> = sources.to_vec();
    let mut guard = 0;
    while !pending.is_empty() {
        guard += 1;
        assert!(guard <= sources.len() + parent.len() + 2, "Steiner accumulation does not terminate");
        // Minimal rooted subtree spanning `pending`.
        let mut sub: Vec<usize> = Vec::new();
        for &s in &pending {
            let mut u = s;
            while u != root && !sub.contains(&u) {
                sub.push(u);
                u = parent[&u];
            }
        }
        out.extend(accumulate(root, &parent, &sub));
        let mut next: Vec<usize> = sub.iter().copied().filter(|u| !pending.contains(u)).collect();
        next.sort_unstable();
        pending = next;
    }
    out
}

/// Adds the XOR of every node in the rooted subtree `nodes` into `root`.
fn accumulate(root: usize, parent: &HashMap<usize, usize>, nodes: &[usize]) -> Vec<(usize, usize)> {
    let mut children: HashMap<usize, Vec<usize>> = HashMap::new();
    for &u in nodes {
        children.entry(parent[&u]).or_default().push(u);
    }
    for v in children.values_mut() {
        v.sort_unstable();
    }
    let mut order = Vec::with_capacity(nodes.len());
    let mut stack = vec![(root, false)];
    while let Some((u, expanded)) = stack.pop() {
        if expanded {
            if u != root {
                order.push(u);
            }
            continue;
        }
        stack.push((u, true));
        if let Some(ch) = children.get(&u) {
            for &c in ch.iter().rev() {
                stack.push((c, false));
            }
        }
    }
    let mut g: Vec<(usize, usize)> = order.iter().map(|&u| (u, parent[&u])).collect();
    g.extend(order.iter().rev().filter(|&&u| parent[&u] != root).map(|&u| (u, parent[&u])));
    g
}

/// Gate skeleton for a UC gate following `plan`.
pub fn synthesize_template(plan: &GrayPlan, cm: &CouplingMap, opts: UcOptions) -> Result<UcTemplate> {
    let (target, controls) = (plan.target, plan.controls.as_slice());
    let k = controls.len();
    if k >= 63 {
        return Err(Error::Argument(format!("{k} controls exceed the supported width")));
    }
    let heur = opts.leg_heuristic;
    let mut tr = Tracker::new(cm, target, controls, heur);
    let mut is_ctrl = vec![false; cm.num_qubits()];
    controls.iter().for_each(|&c| is_ctrl[c] = true);
    let prefer = |q: usize| is_ctrl[q];
    let cbit = |q: usize| -> u128 { 1u128 << (k - 1 - controls.iter().position(|&c| c == q).expect("control")) };
    tr.try_rz()?;

    let mut prev_ladder = false;
    for &c in &plan.flips {
        if heur && tr.all_explored() {
            break;
        }
        let d = cm.dist(c, target);
        if d == 1 {
            if heur && prev_ladder {
                let res = tr.get(target)? ^ tr.get(c)?;
                if tr.term_of(res).is_some_and(|s| tr.explored[s as usize]) {
                    prev_ladder = false;
                    continue;
                }
            }
            tr.cnot(c, target)?;
            prev_ladder = false;
        } else {
            for (a, b) in ladder_along(&tr.path(c, &is_ctrl)) {
                tr.cnot(a, b)?;
            }
            prev_ladder = true;
        }
        if !heur {
            tr.try_rz()?;
        }
    }

    let mut fallback_terms = 0;
    for s in 0..(1u64 << k) {
        if tr.explored[s as usize] {
            continue;
        }
        fallback_terms += 1;
        let tmask = tr.get(target)?;
        let cur = tr.term_of(tmask).ok_or_else(|| Error::Internal("target parity left the control span".into()))?;
        let sources = tr.controls_of(controls, cur ^ s);
        let gates = xor_into(target, &sources, cm, &prefer);
        for (a, b) in gates {
            tr.cnot(a, b)?;
        }
        tr.try_rz()?;
        if !tr.explored[s as usize] {
            return Err(Error::Internal(format!("term {s:#b} still missing after fallback")));
        }
    }

    let tmask = tr.get(target)?;
    let residual = tr.term_of(tmask).ok_or_else(|| Error::Internal("target parity left the control span".into()))?;
    let rest = tr.controls_of(controls, residual);
    let mut pending = Vec::new();
    if opts.merge_rightmost {
        pending = rest;
    } else {
        let gates = xor_into(target, &rest, cm, &prefer);
        tr.place_rz = false;
        for (a, b) in gates {
            tr.cnot(a, b)?;
        }
    }
    for (&w, &p) in &tr.parity {
        let own = 1u128 << tr.local[&w];
        let want = if w == target { own ^ pending.iter().map(|&c| cbit(c)).fold(0, |x, y| x ^ y) } else { own };
        if p != want {
            return Err(Error::Internal(format!("wire {w} not restored after UC synthesis")));
        }
    }
    Ok(UcTemplate {
        target,
        controls: controls.to_vec(),
        cnot_count: tr.cnots,
        ops: tr.ops,
        pending,
        fallback_terms,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UcOutput {
    pub gates: Vec<Gate>,
    /// Withheld CNOTs that complete the gate, see [`UcOptions::merge_rightmost`].
    pub pending: Vec<Gate>,
    pub fallback_terms: usize,
}

/// Gates realizing `spec` along `plan`.
pub fn synthesize_uc(spec: &UcSpec, plan: &GrayPlan, cm: &CouplingMap, opts: UcOptions) -> Result<UcOutput> {
    if spec.angles.len() != 1usize << spec.controls.len() {
        return Err(Error::Argument(format!(
            "{} angles for {} controls",
            spec.angles.len(),
            spec.controls.len()
        )));
    }
    if plan.target != spec.target || plan.controls != spec.controls {
        return Err(Error::Argument("plan does not match the UC gate".into()));
    }
    let t = synthesize_template(plan, cm, opts)?;
    Ok(UcOutput { gates: t.instantiate(&spec.angles), pending: t.pending_gates(), fallback_terms: t.fallback_terms })
}

/// Outcome of moving a UC target towards the deepest target with SWAPs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapChoice {
    pub swaps: Vec<(usize, usize)>,
    pub target: usize,
    pub controls: Vec<usize>,
    pub plan: GrayPlan,
    pub total_cost: usize,
}

/// Tries each position along the canonical path from `target` towards
/// `final_target` and keeps the cheapest plan, counting 3 CNOTs per SWAP.
/// Positions that would split `keep_adjacent` (a pair of physical qubits
/// whose contents must stay coupled) end the search.
pub fn optimize_with_swaps(
    target: usize,
    controls: &[usize],
    final_target: usize,
    cm: &CouplingMap,
    keep_adjacent: Option<(usize, usize)>,
) -> SwapChoice {
    let base = choose_gray(target, controls, cm);
    let mut best = SwapChoice {
        swaps: Vec::new(),
        target,
        controls: controls.to_vec(),
        total_cost: base.estimated_cost,
        plan: base,
    };
    if target == final_target {
        return best;
    }
    let path = cm.path(target, final_target);
    let mut t = target;
    let mut ctrls = controls.to_vec();
    let mut pair = keep_adjacent;
    let mut swaps = Vec::new();
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mv = |q: usize| if q == a { b } else if q == b { a } else { q };
        t = mv(t);
        ctrls.iter_mut().for_each(|q| *q = mv(*q));
        if let Some((p, q)) = pair {
            let moved = (mv(p), mv(q));
            if !cm.is_edge(moved.0, moved.1) {
                break;
            }
            pair = Some(moved);
        }
        swaps.push((a, b));
        let plan = choose_gray(t, &ctrls, cm);
        let total = plan.estimated_cost + 3 * swaps.len();
        if total < best.total_cost {
            best = SwapChoice { swaps: swaps.clone(), target: t, controls: ctrls.clone(), plan, total_cost: total };
        }
    }
    best
}

/// Emitted gates followed by the pending CNOTs.
pub fn uc_circuit(out: &UcOutput, num_qubits: usize) -> Circuit {
    let mut c = Circuit::new(num_qubits);
    c.extend(out.gates.iter().copied());
    c.extend(out.pending.iter().copied());
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::circuit_to_unitary;
    use crate::numerics::frobenius;
    use crate::topology::Topology;

    #[test]
    fn ladder_costs() {
        assert_eq!(ladder_cost(1), 1);
        assert_eq!(ladder_cost(2), 4);
        assert_eq!(ladder_cost(3), 8);
        let line = Topology::Line(4).build().unwrap();
        assert_eq!(ladder_cnot(0, 1, &line), vec![Gate::Cnot(0, 1)]);
        let g = ladder_cnot(0, 3, &line);
        let pairs: Vec<_> = g.iter().map(|g| g.two_qubit().unwrap()).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3), (1, 2), (0, 1), (1, 2), (2, 3), (1, 2)]);
    }

    #[test]
    fn greedy_plan_on_line_end() {
        // Target 0 at the end of the line 0-1-2 with controls 1 and 2.
        let line = Topology::Line(3).build().unwrap();
        let p = choose_gray(0, &[1, 2], &line);
        assert_eq!(p.by_rank, vec![1, 2]);
        assert_eq!(p.frequencies(), vec![2, 2]);
        assert_eq!(p.estimated_cost, 2 + 2 * 4);
        let other = GrayPlan::with_ranks(0, &[1, 2], vec![2, 1], &line);
        assert_eq!(other.estimated_cost, 10);
        let line4 = Topology::Line(4).build().unwrap();
        let p = choose_gray(0, &[1, 2, 3], &line4);
        assert_eq!(p.frequencies(), vec![4, 2, 2]);
        assert_eq!(p.estimated_cost, 4 + 2 * 4 + 2 * 8);
        let other = GrayPlan::with_ranks(0, &[1, 2, 3], vec![3, 2, 1], &line4);
        assert!(p.estimated_cost < other.estimated_cost);
    }

    #[test]
    fn angle_transform_small_cases() {
        let cm = Topology::Complete(2).build().unwrap();
        let p = choose_gray(0, &[1], &cm);
        assert_eq!(p.codewords, vec![0, 1]);
        let th = angle_transform(&[0.4, 0.2], &p).unwrap();
        assert!((th[0] - 0.3).abs() < 1e-15 && (th[1] - 0.1).abs() < 1e-15);
        let cm = Topology::Complete(4).build().unwrap();
        let p = choose_gray(0, &[1, 2, 3], &cm);
        let th = angle_transform(&[0.7; 8], &p).unwrap();
        assert!((th[0] - 0.7).abs() < 1e-15 && th[1..].iter().all(|x| x.abs() < 1e-15));
        assert!(angle_transform(&[0.0; 3], &p).is_err());
    }

    fn check_uc(cm: &CouplingMap, target: usize, controls: &[usize], opts: UcOptions) -> UcTemplate {
        let k = controls.len();
        let alpha: Vec<f64> = (0..1 << k).map(|j| 0.3 + 0.77 * j as f64 - 0.1 * (j * j) as f64).collect();
        let spec = UcSpec { target, controls: controls.to_vec(), angles: alpha.clone() };
        let plan = choose_gray(target, controls, cm);
        let out = synthesize_uc(&spec, &plan, cm, opts).unwrap();
        let circ = uc_circuit(&out, cm.num_qubits());
        let mut reg = vec![target];
        reg.extend_from_slice(controls);
        let extra_q: Vec<usize> = circ.active_qubits().into_iter().filter(|q| !reg.contains(q)).collect();
        reg.extend(extra_q);
        let u = circuit_to_unitary(&circ, Some(&reg)).unwrap();
        let extra = reg.len() - 1 - k;
        let expect = uc_diagonal(&alpha).kronecker(&ComplexMatrix::identity(1 << extra, 1 << extra));
        assert!(frobenius(&(u - expect)) < 1e-9, "UC oracle mismatch on {}", cm.name());
        synthesize_template(&plan, cm, opts).unwrap()
    }

    #[test]
    fn path_example_counts() {
        let line = Topology::Line(4).build().unwrap();
        let naive = check_uc(&line, 0, &[1, 2], UcOptions { leg_heuristic: false, merge_rightmost: false });
        assert_eq!(naive.cnot_count, 10);
        let exact = check_uc(&line, 0, &[1, 2], UcOptions::default());
        assert_eq!(exact.cnot_count, 8);
        let tail = check_uc(&line, 0, &[1, 2], UcOptions { leg_heuristic: true, merge_rightmost: true });
        assert_eq!(tail.cnot_count, 5);
        assert_eq!(tail.fallback_terms, 0);
    }

    #[test]
    fn all_to_all_is_logical() {
        let cm = Topology::Complete(6).build().unwrap();
        for k in 1..=5 {
            let controls: Vec<usize> = (1..=k).collect();
            let t = check_uc(&cm, 0, &controls, UcOptions::default());
            assert_eq!(t.cnot_count, 1 << k);
            assert_eq!(t.fallback_terms, 0);
        }
    }

    #[test]
    fn estimate_matches_without_heuristic() {
        let g = Topology::Grid { width: 2, height: 3 }.build().unwrap();
        let plan = choose_gray(0, &[5, 3, 1, 4], &g);
        let opts = UcOptions { leg_heuristic: false, merge_rightmost: false };
        let t = check_uc(&g, 0, &[5, 3, 1, 4], opts);
        assert_eq!(t.cnot_count, plan.estimated_cost);
        let h = check_uc(&g, 0, &[5, 3, 1, 4], UcOptions::default());
        assert!(h.cnot_count <= plan.estimated_cost);
    }

    #[test]
    fn xor_into_restores_other_wires() {
        let g = Topology::Grid { width: 3, height: 3 }.build().unwrap();
        let sources = [0, 2, 6, 8];
        let gates = xor_into(4, &sources, &g, &|_| false);
        let mut c = Circuit::new(9);
        c.extend(gates.iter().map(|&(a, b)| Gate::Cnot(a, b)));
        let mut expect = Circuit::new(9);
        expect.extend(sources.iter().map(|&s| Gate::Cnot(s, 4)));
        let (a, b) = (circuit_to_unitary(&c, None).unwrap(), circuit_to_unitary(&expect, None).unwrap());
        assert!(frobenius(&(a - b)) < 1e-12);
    }

    #[test]
    fn swaps_only_when_cheaper() {
        let k = Topology::Complete(5).build().unwrap();
        let s = optimize_with_swaps(0, &[1, 2, 3, 4], 4, &k, None);
        assert!(s.swaps.is_empty());
        // Peripheral target on a line, controls clustered at the far end.
        let line = Topology::Line(7).build().unwrap();
        let s = optimize_with_swaps(0, &[6, 5, 4, 3], 3, &line, None);
        assert!(!s.swaps.is_empty());
        assert!(s.total_cost < choose_gray(0, &[6, 5, 4, 3], &line).estimated_cost);
        assert_eq!(s.plan.target, s.target);
    }
}
