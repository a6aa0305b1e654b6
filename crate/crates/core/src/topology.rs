//! Coupling maps: undirected hardware graphs with all-pairs hop distances
//! and one canonical shortest path per ordered pair.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingMap {
    name: String,
    num_qubits: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    dist: Vec<Vec<u32>>,
    /// `next_hop[u][v]` is the neighbour of `u` on the canonical path to `v`.
    next_hop: Vec<Vec<usize>>,
}

impl CouplingMap {
    /// Builds the map and its distance tables by one BFS per node. Neighbours
    /// are scanned in increasing index order, which fixes the canonical paths.
    pub fn build(name: impl Into<String>, num_qubits: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::Argument("coupling map needs at least one qubit".into()));
        }
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= num_qubits || b >= num_qubits {
                return Err(Error::Argument(format!("edge ({a},{b}) out of range for {num_qubits} qubits")));
            }
            if a == b {
                return Err(Error::Argument(format!("self-loop on qubit {a}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();

        let mut adj = vec![Vec::new(); num_qubits];
        for &(a, b) in &norm {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }

        let components = components(&adj);
        if components.len() > 1 {
            return Err(Error::Disconnected(components));
        }

        let mut dist = vec![vec![u32::MAX; num_qubits]; num_qubits];
        let mut next_hop = vec![vec![usize::MAX; num_qubits]; num_qubits];
        let mut queue = VecDeque::new();
        for root in 0..num_qubits {
            // BFS from `root`; the discovering node is the next hop towards root.
            dist[root][root] = 0;
            next_hop[root][root] = root;
            queue.push_back(root);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if dist[root][v] == u32::MAX {
                        dist[root][v] = dist[root][u] + 1;
                        next_hop[v][root] = u;
                        queue.push_back(v);
                    }
                }
            }
        }
        Ok(CouplingMap { name: name.into(), num_qubits, edges: norm, adj, dist, next_hop })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Sorted edge list with `a < b` in every pair.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    #[inline]
    pub fn dist(&self, u: usize, v: usize) -> usize {
        self.dist[u][v] as usize
    }

    #[inline]
    pub fn is_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.dist[u][v] == 1
    }

    #[inline]
    pub fn next_hop(&self, u: usize, v: usize) -> usize {
        self.next_hop[u][v]
    }

    /// Canonical shortest path from `u` to `v`, both endpoints included.
    pub fn path(&self, u: usize, v: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dist(u, v) + 1);
        out.push(u);
        let mut cur = u;
        while cur != v {
            cur = self.next_hop[cur][v];
            out.push(cur);
        }
        out
    }

    /// A shortest path from `u` to `v` that passes through as many nodes
    /// satisfying `prefer` as possible; ties resolve to the lowest-index
    /// neighbour at each step, so with no preferred node this is [`path`].
    ///
    /// [`path`]: CouplingMap::path
    pub fn path_preferring(&self, u: usize, v: usize, prefer: impl Fn(usize) -> bool) -> Vec<usize> {
        let d = self.dist(u, v);
        if d <= 1 {
            return self.path(u, v);
        }
        // score[w] = most preferred nodes on a shortest w→v path, excluding w and v.
        let mut layers: Vec<Vec<usize>> = vec![Vec::new(); d + 1];
        let mut seen = vec![false; self.num_qubits];
        layers[d].push(u);
        seen[u] = true;
        for k in (1..=d).rev() {
            let (head, tail) = layers.split_at_mut(k);
            for &w in &tail[0] {
                for &x in &self.adj[w] {
                    if self.dist(x, v) == k - 1 && !seen[x] {
                        seen[x] = true;
                        head[k - 1].push(x);
                    }
                }
            }
        }
        let mut score = vec![0usize; self.num_qubits];
        let mut best_next = vec![usize::MAX; self.num_qubits];
        for layer in layers.iter().skip(1) {
            for &w in layer {
                let mut best: Option<(usize, usize)> = None;
                for &x in &self.adj[w] {
                    if self.dist(x, v) + 1 != self.dist(w, v) {
                        continue;
                    }
                    let s = score[x] + usize::from(x != v && prefer(x));
                    if best.is_none_or(|(bs, _)| s > bs) {
                        best = Some((s, x));
                    }
                }
                let (s, x) = best.expect("shortest-path predecessor exists");
                score[w] = s;
                best_next[w] = x;
            }
        }
        let mut out = vec![u];
        let mut cur = u;
        while cur != v {
            cur = best_next[cur];
            out.push(cur);
        }
        out
    }

    pub fn to_file(&self) -> CouplingFile {
        CouplingFile {
            name: self.name.clone(),
            num_qubits: self.num_qubits,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }

    pub fn from_file(f: &CouplingFile) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (i, &[a, b]) in f.edges.iter().enumerate() {
            if a >= f.num_qubits || b >= f.num_qubits {
                return Err(Error::Format(format!(
                    "edge #{i} [{a},{b}] out of range for num_qubits {}",
                    f.num_qubits
                )));
            }
            if a == b {
                return Err(Error::Format(format!("edge #{i} [{a},{b}] is a self-loop")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::Format(format!("edge #{i} [{a},{b}] is a duplicate")));
            }
        }
        let edges: Vec<(usize, usize)> = f.edges.iter().map(|&[a, b]| (a, b)).collect();
        CouplingMap::build(f.name.clone(), f.num_qubits, &edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("coupling file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: CouplingFile = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("coupling JSON, line {} column {}: {e}", e.line(), e.column())))?;
        CouplingMap::from_file(&f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::Format(format!("cannot write {}: {e}", path.display())))
    }
}

fn components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut comp = vec![usize::MAX; adj.len()];
    let mut out = Vec::new();
    for s in 0..adj.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut i = 0;
        while i < members.len() {
            let u = members[i];
            i += 1;
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = id;
                    members.push(v);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// JSON form: `{"name": ..., "num_qubits": N, "edges": [[a, b], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingFile {
    pub name: String,
    pub num_qubits: usize,
    pub edges: Vec<[usize; 2]>,
}

/// Built-in topology families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Line(usize),
    Complete(usize),
    Grid { width: usize, height: usize },
    /// IBM heavy-hex lattice with `cell_rows` rows of `cells_per_row` cells.
    HeavyHex { cell_rows: usize, cells_per_row: usize },
    Garnet,
}

impl Topology {
    /// The 156-qubit heavy-hex instance: 8 rows of 16 qubits joined by 7
    /// rows of 4 bridge qubits.
    pub const HEAVY_HEX_156: Topology = Topology::HeavyHex { cell_rows: 7, cells_per_row: 4 };

    pub fn build(self) -> Result<CouplingMap> {
        let name = self.to_string();
        match self {
            Topology::Line(n) => {
                positive(n, "line length")?;
                let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
                CouplingMap::build(name, n, &e)
            }
            Topology::Complete(n) => {
                positive(n, "complete size")?;
                let e: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
                CouplingMap::build(name, n, &e)
            }
            Topology::Grid { width, height } => {
                positive(width, "grid width")?;
                positive(height, "grid height")?;
                let mut e = Vec::new();
                for y in 0..height {
                    for x in 0..width {
                        let i = y * width + x;
                        if x + 1 < width {
                            e.push((i, i + 1));
                        }
                        if y + 1 < height {
                            e.push((i, i + width));
                        }
                    }
                }
                CouplingMap::build(name, width * height, &e)
            }
            Topology::HeavyHex { cell_rows, cells_per_row } => {
                positive(cell_rows, "heavy-hex cell rows")?;
                positive(cells_per_row, "heavy-hex cells per row")?;
                heavy_hex(name, cell_rows, cells_per_row)
            }
            Topology::Garnet => garnet(name),
        }
    }
}

fn positive(v: usize, what: &str) -> Result<()> {
    if v == 0 {
        Err(Error::Argument(format!("{what} must be positive")))
    } else {
        Ok(())
    }
}

/// Heavy-hex lattice.
///
/// ```text
///   row 0:  0 ─ 1 ─ 2 ─ 3 ─ 4 ─ … ─ 15
///                       │               bridges at columns 3, 7, 11, 15
///   row 1:  0 ─ 1 ─ 2 ─ 3 ─ 4 ─ … ─ 15
///               │                       bridges at columns 1, 5, 9, 13
///   row 2:  …
/// ```
///
/// Data rows hold `4·cells_per_row` qubits; each gap between consecutive
/// rows holds `cells_per_row` bridge qubits, numbered after the row above.
fn heavy_hex(name: String, cell_rows: usize, cells_per_row: usize) -> Result<CouplingMap> {
    let row_len = 4 * cells_per_row;
    let mut edges = Vec::new();
    let mut next = 0usize;
    let mut prev_row: Option<(usize, Vec<usize>, usize)> = None;
    for r in 0..=cell_rows {
        let start = next;
        next += row_len;
        for c in 1..row_len {
            edges.push((start + c - 1, start + c));
        }
        if let Some((prev_start, bridges, bridge_start)) = prev_row.take() {
            for (j, &c) in bridges.iter().enumerate() {
                edges.push((prev_start + c, bridge_start + j));
                edges.push((bridge_start + j, start + c));
            }
        }
        if r < cell_rows {
            let offset = if r % 2 == 0 { 3 } else { 1 };
            let bridges: Vec<usize> = (0..cells_per_row).map(|j| 4 * j + offset).collect();
            let bridge_start = next;
            next += bridges.len();
            prev_row = Some((start, bridges, bridge_start));
        }
    }
    CouplingMap::build(name, next, &edges)
}

/// The 20-qubit square lattice, rows numbered top to bottom.
///
/// ```text
///            0   1
///        2   3   4   5   6
///        7   8   9  10  11
///       12  13  14  15  16
///           17  18  19
/// ```
///
/// Vertically aligned qubits are coupled, as are horizontal neighbours.
fn garnet(name: String) -> Result<CouplingMap> {
    // (first column, last column) per row, on a shared column axis.
    const ROWS: [(i32, i32); 5] = [(1, 2), (0, 4), (0, 4), (0, 4), (1, 3)];
    let mut index = std::collections::HashMap::new();
    let mut n = 0usize;
    for (y, &(a, b)) in ROWS.iter().enumerate() {
        for x in a..=b {
            index.insert((x, y as i32), n);
            n += 1;
        }
    }
    let mut edges = Vec::new();
    for (&(x, y), &i) in &index {
        for q in [(x + 1, y), (x, y + 1)] {
            if let Some(&j) = index.get(&q) {
                edges.push((i, j));
            }
        }
    }
    CouplingMap::build(name, n, &edges)
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Topology::Line(n) => write!(f, "line-{n}"),
            Topology::Complete(n) => write!(f, "complete-{n}"),
            Topology::Grid { width, height } => write!(f, "grid-{width}x{height}"),
            Topology::HeavyHex { cell_rows, cells_per_row } => {
                if (cell_rows, cells_per_row) == (7, 4) {
                    write!(f, "heavyhex-156")
                } else {
                    write!(f, "heavyhex-{cell_rows}x{cells_per_row}")
                }
            }
            Topology::Garnet => write!(f, "garnet"),
        }
    }
}

/// Shorthand grammar: `complete:N`, `line:N`, `grid:WxH`, `heavyhex:156`,
/// `heavyhex:RxC` (cell rows × cells per row) and `garnet`.
impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("unknown topology '{s}'"));
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let pair = |t: &str| -> Result<(usize, usize)> {
            let (a, b) = t.split_once(['x', 'X']).ok_or_else(bad)?;
            Ok((num(a)?, num(b)?))
        };
        let s_trim = s.trim();
        if s_trim.eq_ignore_ascii_case("garnet") {
            return Ok(Topology::Garnet);
        }
        let (kind, arg) = s_trim.split_once([':', '-']).ok_or_else(bad)?;
        match kind.to_ascii_lowercase().as_str() {
            "line" => Ok(Topology::Line(num(arg)?)),
            "complete" => Ok(Topology::Complete(num(arg)?)),
            "grid" => {
                let (width, height) = pair(arg)?;
                Ok(Topology::Grid { width, height })
            }
            "heavyhex" => {
                if arg.trim() == "156" {
                    Ok(Topology::HEAVY_HEX_156)
                } else {
                    let (cell_rows, cells_per_row) = pair(arg)?;
                    Ok(Topology::HeavyHex { cell_rows, cells_per_row })
                }
            }
            _ => Err(bad()),
        }
    }
}
