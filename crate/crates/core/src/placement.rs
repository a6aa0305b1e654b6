//! Choice and ordering of the physical qubits that carry the recursion's
//! logical lines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::CouplingMap;

/// Subset sizes up to this many candidates are searched exhaustively.
pub const EXHAUSTIVE_THRESHOLD: u128 = 50_000;

/// Physical qubits `v_0..v_{n-1}` for the logical lines, with their total
/// pairwise distance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub qubits: Vec<usize>,
    pub cost: usize,
}

impl Placement {
    pub fn new(qubits: Vec<usize>, cm: &CouplingMap) -> Self {
        let cost = cost_dist(&qubits, cm);
        Placement { qubits, cost }
    }
}

/// Sum of `d(u, v)` over ordered pairs of the subset.
pub fn cost_dist(subset: &[usize], cm: &CouplingMap) -> usize {
    subset.iter().map(|&u| subset.iter().map(|&v| cm.dist(u, v)).sum::<usize>()).sum()
}

/// The edge whose endpoints are jointly closest to the whole graph.
pub fn closeness_seed(cm: &CouplingMap) -> Option<(usize, usize)> {
    let total: Vec<usize> = (0..cm.num_qubits()).map(|u| (0..cm.num_qubits()).map(|w| cm.dist(u, w)).sum()).collect();
    cm.edges().iter().copied().min_by_key(|&(a, b)| (total[a] + total[b], a, b))
}

/// Number of UC gates targeting position `i` in a full synthesis.
pub fn uc_gate_count(i: u32) -> u64 {
    (0..=i).map(|j| 3 * 4u64.pow(j)).sum()
}

/// Whether `C(n, k) ≤ limit`, computed exactly.
pub fn binomial_at_most(n: usize, k: usize, limit: u128) -> bool {
    if k > n {
        return true;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc = C(n, i) here, and C(n, i+1) = C(n, i)·(n−i)/(i+1) is exact.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > limit {
            return false;
        }
    }
    true
}

fn exhaustive(cm: &CouplingMap, n: usize) -> Vec<usize> {
    let v = cm.num_qubits();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut best: Option<(usize, Vec<usize>)> = None;
    loop {
        let cost = cost_dist(&idx, cm);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, idx.clone()));
        }
        // Next combination in lexicographic order.
        let Some(i) = (0..n).rev().find(|&i| idx[i] != i + v - n) else { break };
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
    best.expect("at least one subset").1
}

fn greedy(cm: &CouplingMap, n: usize) -> Vec<usize> {
    let (a, b) = closeness_seed(cm).expect("map has an edge");
    let mut s = vec![a, b];
    s.truncate(n);
    let mut inside = vec![false; cm.num_qubits()];
    for &q in &s {
        inside[q] = true;
    }
    while s.len() < n {
        let w = (0..cm.num_qubits())
            .filter(|&w| !inside[w])
            .min_by_key(|&w| (s.iter().map(|&u| cm.dist(w, u)).sum::<usize>(), w))
            .expect("enough qubits");
        inside[w] = true;
        s.push(w);
    }
    s
}

/// Orders a subset most-peripheral first, so the central qubits take the
/// deep positions, then makes the last two positions adjacent when the
/// subset allows it.
pub fn peripheral_order(subset: &[usize], cm: &CouplingMap) -> Vec<usize> {
    let total = |u: usize| subset.iter().map(|&v| cm.dist(u, v)).sum::<usize>();
    let mut order = subset.to_vec();
    order.sort_by_key(|&u| (std::cmp::Reverse(total(u)), u));
    let n = order.len();
    if n >= 2 && !cm.is_edge(order[n - 2], order[n - 1]) {
        let last = order[n - 1];
        if let Some(pos) = (0..n - 1).rev().find(|&p| cm.is_edge(order[p], last)) {
            let q = order.remove(pos);
            order.insert(n - 2, q);
        }
    }
    order
}

/// Selects `n` qubits minimizing total pairwise distance (exhaustively when
/// `C(|V|, n) ≤ threshold`, greedily otherwise) and orders them.
pub fn select_placement(cm: &CouplingMap, n: usize, threshold: u128) -> Result<Placement> {
    if n > cm.num_qubits() {
        return Err(Error::Argument(format!("{n} qubits requested on a {}-qubit map", cm.num_qubits())));
    }
    if n == 0 {
        return Err(Error::Argument("placement needs at least one qubit".into()));
    }
    let subset = if n == 1 {
        vec![closeness_seed(cm).map_or(0, |e| e.0)]
    } else if binomial_at_most(cm.num_qubits(), n, threshold) {
        exhaustive(cm, n)
    } else {
        greedy(cm, n)
    };
    Ok(Placement::new(peripheral_order(&subset, cm), cm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Topology;

    #[test]
    fn cost_examples() {
        let line = Topology::Line(3).build().unwrap();
        assert_eq!(cost_dist(&[0], &line), 0);
        assert_eq!(cost_dist(&[0, 1], &line), 2);
        assert_eq!(cost_dist(&[0, 1, 2], &line), 8);
    }

    #[test]
    fn closeness_examples() {
        let line = Topology::Line(5).build().unwrap();
        assert_eq!(closeness_seed(&line), Some((1, 2)));
        let k4 = Topology::Complete(4).build().unwrap();
        assert_eq!(closeness_seed(&k4), Some((0, 1)));
        let star = CouplingMap::build("star", 5, &[(3, 0), (3, 1), (3, 2), (3, 4)]).unwrap();
        assert_eq!(closeness_seed(&star), Some((0, 3)));
    }

    #[test]
    fn uc_counts() {
        assert_eq!(uc_gate_count(0), 3);
        assert_eq!(uc_gate_count(1), 15);
        assert_eq!(uc_gate_count(2), 63);
    }

    #[test]
    fn binomial_threshold() {
        assert!(binomial_at_most(20, 6, EXHAUSTIVE_THRESHOLD)); // 38760
        assert!(!binomial_at_most(20, 7, EXHAUSTIVE_THRESHOLD)); // 77520
        assert!(!binomial_at_most(156, 3, EXHAUSTIVE_THRESHOLD));
        assert!(binomial_at_most(156, 156, EXHAUSTIVE_THRESHOLD));
        assert!(!binomial_at_most(156, 78, EXHAUSTIVE_THRESHOLD));
    }

    #[test]
    fn selection_examples() {
        let line = Topology::Line(5).build().unwrap();
        let p = select_placement(&line, 3, EXHAUSTIVE_THRESHOLD).unwrap();
        let mut s = p.qubits.clone();
        s.sort();
        assert_eq!(s, vec![0, 1, 2]);
        assert_eq!(p.cost, 8);
        assert_eq!(p.qubits, vec![0, 2, 1]);
        let all = select_placement(&line, 5, EXHAUSTIVE_THRESHOLD).unwrap();
        let mut s = all.qubits.clone();
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 3, 4]);
        assert!(select_placement(&line, 6, EXHAUSTIVE_THRESHOLD).is_err());
    }

    #[test]
    fn deep_pair_is_adjacent_on_builtin_maps() {
        for t in [Topology::Garnet, Topology::HEAVY_HEX_156, Topology::Line(9), Topology::Grid { width: 2, height: 4 }] {
            let cm = t.build().unwrap();
            for n in 2..=8.min(cm.num_qubits()) {
                let p = select_placement(&cm, n, EXHAUSTIVE_THRESHOLD).unwrap();
                assert!(cm.is_edge(p.qubits[n - 2], p.qubits[n - 1]), "{t} n={n}: {:?}", p.qubits);
            }
        }
    }
}
