//! Oracle suites shared by the integration tests and the acceptance run.
//! Each returns a short description on success and the first mismatch on
//! failure.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zxz_synth::blockzxz::synth::{synthesize_with, SynthOptions};
use zxz_synth::circuit::{circuit_to_unitary, Circuit, Gate};
use zxz_synth::gray::{choose_gray, ladder_cnot, synthesize_uc, uc_circuit, uc_diagonal, GrayPlan, UcOptions, UcSpec};
use zxz_synth::numerics::{frobenius, haar_random_unitary, identity, kron};
use zxz_synth::placement::{cost_dist, select_placement, uc_gate_count};
use zxz_synth::topology::{CouplingMap, Topology};

pub type Check = Result<String, String>;

/// Connected graph on `v` nodes: a random tree plus extra edges.
pub fn random_connected(v: usize, extra: f64, rng: &mut ChaCha8Rng) -> CouplingMap {
    let mut edges = Vec::new();
    for w in 1..v {
        edges.push((rng.random_range(0..w), w));
    }
    for a in 0..v {
        for b in a + 1..v {
            if !edges.contains(&(a, b)) && rng.random_bool(extra) {
                edges.push((a, b));
            }
        }
    }
    CouplingMap::build(format!("random-{v}"), v, &edges).expect("connected by construction")
}

fn floyd_warshall(cm: &CouplingMap) -> Vec<Vec<usize>> {
    let v = cm.num_qubits();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; v]; v];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in cm.edges() {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..v {
        for i in 0..v {
            for j in 0..v {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

pub fn distances_match_floyd_warshall(graphs: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for g in 0..graphs {
        let v = rng.random_range(2..=30);
        let cm = random_connected(v, rng.random_range(0.0..0.3), &mut rng);
        let fw = floyd_warshall(&cm);
        for (a, row) in fw.iter().enumerate() {
            for (b, &d) in row.iter().enumerate() {
                if cm.dist(a, b) != d {
                    return Err(format!("graph {g}: d({a},{b}) = {} but Floyd-Warshall gives {d}", cm.dist(a, b)));
                }
                let p = cm.path(a, b);
                if p.len() != d + 1 || p.windows(2).any(|w| !cm.is_edge(w[0], w[1])) {
                    return Err(format!("graph {g}: path {a}->{b} is not a shortest walk: {p:?}"));
                }
            }
        }
    }
    Ok(format!("{graphs} random graphs"))
}

pub fn small_graphs() -> Vec<CouplingMap> {
    let mut out = Vec::new();
    for v in 2..=6 {
        out.push(Topology::Line(v).build().unwrap());
        out.push(Topology::Complete(v).build().unwrap());
        let star: Vec<(usize, usize)> = (1..v).map(|w| (0, w)).collect();
        out.push(CouplingMap::build(format!("star-{v}"), v, &star).unwrap());
        if v >= 3 {
            let cyc: Vec<(usize, usize)> = (0..v).map(|w| (w, (w + 1) % v)).collect();
            out.push(CouplingMap::build(format!("cycle-{v}"), v, &cyc).unwrap());
        }
    }
    out.push(Topology::Grid { width: 2, height: 3 }.build().unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let v = rng.random_range(3..=6);
        out.push(random_connected(v, 0.25, &mut rng));
    }
    out
}

pub fn ladders_equal_cnot() -> Check {
    let graphs = small_graphs();
    let mut pairs = 0;
    for cm in &graphs {
        let v = cm.num_qubits();
        for a in 0..v {
            for b in 0..v {
                if a == b {
                    continue;
                }
                let mut lad = Circuit::new(v);
                lad.extend(ladder_cnot(a, b, cm));
                if lad.gates.iter().any(|g| g.two_qubit().is_some_and(|(x, y)| !cm.is_edge(x, y))) {
                    return Err(format!("{}: ladder {a}->{b} uses an uncoupled pair", cm.name()));
                }
                let mut direct = Circuit::new(v);
                direct.push(Gate::Cnot(a, b));
                let diff = frobenius(&(circuit_to_unitary(&lad, None).unwrap() - circuit_to_unitary(&direct, None).unwrap()));
                if diff > 1e-12 {
                    return Err(format!("{}: ladder {a}->{b} differs from CNOT by {diff:e}", cm.name()));
                }
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} ordered pairs on {} graphs", graphs.len()))
}

pub fn exhaustive_dominates_greedy(graphs: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = 0;
    for g in 0..graphs {
        let v = rng.random_range(4..=12);
        let cm = random_connected(v, rng.random_range(0.0..0.35), &mut rng);
        for n in 2..=v.min(7) {
            let ex = select_placement(&cm, n, u128::MAX).map_err(|e| e.to_string())?;
            let gr = select_placement(&cm, n, 0).map_err(|e| e.to_string())?;
            if ex.cost > gr.cost {
                return Err(format!("graph {g}, n={n}: exhaustive {} > greedy {}", ex.cost, gr.cost));
            }
            if ex.cost != cost_dist(&ex.qubits, &cm) || gr.cost != cost_dist(&gr.qubits, &cm) {
                return Err(format!("graph {g}, n={n}: stored cost is stale"));
            }
            cases += 1;
        }
    }
    Ok(format!("{graphs} random graphs, {cases} subset sizes"))
}

/// Frequency rank `r` of `k` controls flips `2^{k−1−r}` times, the last rank
/// once more for the closing step.
fn expected_frequency(k: usize, r: usize) -> usize {
    if r + 1 == k {
        2
    } else {
        1 << (k - 1 - r)
    }
}

fn check_plan(p: &GrayPlan) -> Result<(), String> {
    let k = p.controls.len();
    let n = 1usize << k;
    if k == 0 {
        return if p.codewords == [0] && p.flips.is_empty() { Ok(()) } else { Err("k=0: plan is not trivial".into()) };
    }
    if p.codewords.len() != n || p.flips.len() != n {
        return Err(format!("k={k}: {} codewords, {} flips", p.codewords.len(), p.flips.len()));
    }
    let mut seen = vec![false; n];
    for &g in &p.codewords {
        if std::mem::replace(&mut seen[g as usize], true) {
            return Err(format!("k={k}: codeword {g:#b} repeats"));
        }
    }
    for i in 0..n {
        let (a, b) = (p.codewords[i], p.codewords[(i + 1) % n]);
        if (a ^ b).count_ones() != 1 {
            return Err(format!("k={k}: step {i} changes {} bits", (a ^ b).count_ones()));
        }
        let flipped = p.controls[k - 1 - (a ^ b).trailing_zeros() as usize];
        if flipped != p.flips[i] {
            return Err(format!("k={k}: step {i} flips {flipped}, plan says {}", p.flips[i]));
        }
    }
    let freq = p.frequencies();
    for (r, &c) in p.by_rank.iter().enumerate() {
        let pos = p.controls.iter().position(|&x| x == c).unwrap();
        if freq[pos] != expected_frequency(k, r) {
            return Err(format!("k={k}: rank {r} flips {} times", freq[pos]));
        }
    }
    Ok(())
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Gray plans for `m` lines (`m − 1` controls): every rank assignment for
/// `m ≤ 4`, the greedy plan on several maps up to `m = 8`.
pub fn gray_census() -> Check {
    let k9 = Topology::Complete(9).build().unwrap();
    let mut plans = 0;
    for m in 1..=4usize {
        let controls: Vec<usize> = (1..m).collect();
        for ranks in permutations(&controls) {
            check_plan(&GrayPlan::with_ranks(0, &controls, ranks, &k9))?;
            plans += 1;
        }
    }
    let maps = [Topology::Line(9), Topology::Garnet, Topology::Grid { width: 3, height: 3 }, Topology::HEAVY_HEX_156];
    for t in maps {
        let cm = t.build().unwrap();
        for m in 1..=8usize {
            let controls: Vec<usize> = (1..m).collect();
            let p = choose_gray(0, &controls, &cm);
            check_plan(&p)?;
            let mut ranked = p.by_rank.clone();
            ranked.sort_by_key(|&c| (cm.dist(c, 0), c));
            if ranked != p.by_rank {
                return Err(format!("{t}: controls not ranked by distance"));
            }
            plans += 1;
        }
    }
    Ok(format!("{plans} plans"))
}

fn uc_matches(cm: &CouplingMap, target: usize, controls: &[usize], alpha: &[f64], opts: UcOptions) -> Result<(), String> {
    let spec = UcSpec { target, controls: controls.to_vec(), angles: alpha.to_vec() };
    let plan = choose_gray(target, controls, cm);
    let out = synthesize_uc(&spec, &plan, cm, opts).map_err(|e| e.to_string())?;
    let circ = uc_circuit(&out, cm.num_qubits());
    if out.fallback_terms != 0 {
        return Err(format!("{}: fallback used for {target}<-{controls:?}", cm.name()));
    }
    let mut reg = vec![target];
    reg.extend_from_slice(controls);
    let others: Vec<usize> = circ.active_qubits().into_iter().filter(|q| !reg.contains(q)).collect();
    let extra = others.len();
    reg.extend(others);
    let got = circuit_to_unitary(&circ, Some(&reg)).map_err(|e| e.to_string())?;
    let want = kron(&uc_diagonal(alpha), &identity(1 << extra));
    let diff = frobenius(&(got - want));
    if diff > 1e-10 {
        return Err(format!("{}: UC {target}<-{controls:?} ({opts:?}) differs by {diff:e}", cm.name()));
    }
    Ok(())
}

/// UC gates on up to 5 lines: every target, random control subsets, exact
/// and withheld-tail variants, against the dense diagonal.
pub fn uc_oracle(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maps = [Topology::Line(5), Topology::Grid { width: 2, height: 3 }, Topology::Complete(5)];
    let mut cases = 0;
    for t in maps {
        let cm = t.build().unwrap();
        let v = cm.num_qubits();
        for target in 0..v {
            for k in 0..=4usize.min(v - 1) {
                for _ in 0..3 {
                    let mut pool: Vec<usize> = (0..v).filter(|&q| q != target).collect();
                    let mut controls = Vec::new();
                    for _ in 0..k {
                        controls.push(pool.remove(rng.random_range(0..pool.len())));
                    }
                    let alpha: Vec<f64> = (0..1 << k).map(|_| rng.random_range(-3.0..3.0)).collect();
                    for tail in [false, true] {
                        for heur in [false, true] {
                            uc_matches(&cm, target, &controls, &alpha, UcOptions { leg_heuristic: heur, merge_rightmost: tail })?;
                            cases += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{cases} UC instances"))
}

/// Per-line UC counts of full syntheses: `3·4^i` gates target line `i`, so
/// lines `0..=i` together carry `uc_gate_count(i)`.
pub fn uc_count_audit() -> Check {
    let maps = [Topology::Garnet, Topology::Complete(6), Topology::Line(6)];
    for t in maps {
        let cm = t.build().unwrap();
        for n in 3..=6 {
            let u = haar_random_unitary(n, 40 + n as u64).unwrap();
            let r = synthesize_with(&u, &cm, &SynthOptions::default()).map_err(|e| e.to_string())?;
            let per = &r.stats.uc_per_line;
            let mut acc = 0;
            for (i, &c) in per.iter().enumerate().take(n - 2) {
                acc += c;
                if c != 3 * 4u64.pow(i as u32) || acc != uc_gate_count(i as u32) {
                    return Err(format!("{t} n={n}: line {i} has {c} UC gates, cumulative {acc}"));
                }
            }
            if per[n - 2..].iter().any(|&c| c != 0) {
                return Err(format!("{t} n={n}: UC gates on the leaf lines"));
            }
            if r.stats.leaves != 1 << (2 * (n - 2)) {
                return Err(format!("{t} n={n}: {} two-qubit leaves", r.stats.leaves));
            }
        }
    }
    Ok("garnet, complete:6, line:6 for n = 3..6".into())
}
