//! Colorings, list assignments, set colorings, and the verification predicates.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ConflictInstance, Graph, Hypergraph};

/// Colors are opaque positive integers.
pub type Color = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Coloring {
    pub colors: Vec<Color>,
}

impl Coloring {
    pub fn new(colors: Vec<Color>) -> Result<Self> {
        if let Some(v) = colors.iter().position(|&c| c == 0) {
            return Err(Error::Param(format!("vertex {v} has color 0; colors are positive")));
        }
        Ok(Coloring { colors })
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn color(&self, v: usize) -> Color {
        self.colors[v]
    }

    pub fn distinct_colors(&self) -> usize {
        let mut c = self.colors.clone();
        c.sort_unstable();
        c.dedup();
        c.len()
    }

    pub fn max_color(&self) -> Color {
        self.colors.iter().copied().max().unwrap_or(0)
    }
}

/// Per-vertex sets of allowed colors, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListAssignment {
    lists: Vec<Vec<Color>>,
}

impl ListAssignment {
    pub fn new(lists: Vec<Vec<Color>>) -> Result<Self> {
        let mut out = Vec::with_capacity(lists.len());
        for (v, mut l) in lists.into_iter().enumerate() {
            l.sort_unstable();
            l.dedup();
            if l.is_empty() {
                return Err(Error::Param(format!("list of vertex {v} is empty")));
            }
            if l[0] == 0 {
                return Err(Error::Param(format!("list of vertex {v} contains color 0")));
            }
            out.push(l);
        }
        Ok(ListAssignment { lists: out })
    }

    /// Every vertex gets `{1, ..., k}`.
    pub fn uniform(n: usize, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Param("palette size must be positive".into()));
        }
        Ok(ListAssignment {
            lists: vec![(1..=k).collect(); n],
        })
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn list(&self, v: usize) -> &[Color] {
        &self.lists[v]
    }

    pub fn lists(&self) -> &[Vec<Color>] {
        &self.lists
    }

    pub fn contains(&self, v: usize, c: Color) -> bool {
        self.lists[v].binary_search(&c).is_ok()
    }

    /// Smallest list size; 0 for an empty assignment.
    pub fn min_size(&self) -> usize {
        self.lists.iter().map(Vec::len).min().unwrap_or(0)
    }
}

/// An `(a:b)`-coloring: each vertex receives a `b`-subset of `{1, ..., a}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetColoring {
    pub a: u32,
    pub b: u32,
    sets: Vec<Vec<Color>>,
}

impl SetColoring {
    pub fn new(a: u32, b: u32, sets: Vec<Vec<Color>>) -> Result<Self> {
        let mut out = Vec::with_capacity(sets.len());
        for (v, mut s) in sets.into_iter().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.len() != b as usize {
                return Err(Error::Param(format!(
                    "vertex {v} has {} distinct colors, expected {b}",
                    s.len()
                )));
            }
            if s.iter().any(|&c| c == 0 || c > a) {
                return Err(Error::Param(format!("vertex {v} uses a color outside 1..={a}")));
            }
            out.push(s);
        }
        Ok(SetColoring { a, b, sets: out })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn set(&self, v: usize) -> &[Color] {
        &self.sets[v]
    }

    pub fn sets(&self) -> &[Vec<Color>] {
        &self.sets
    }

    /// The `(k:1)` set coloring induced by an ordinary coloring.
    pub fn from_coloring(phi: &Coloring) -> Self {
        let a = phi.max_color();
        SetColoring {
            a,
            b: 1,
            sets: phi.colors.iter().map(|&c| vec![c]).collect(),
        }
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

fn check_t(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::Param("multiplicity bound t must be at least 1".into()));
    }
    Ok(())
}

pub fn is_proper(g: &Graph, phi: &Coloring) -> Result<bool> {
    check_len(g.n(), phi.len())?;
    Ok(g.edges().all(|(u, v)| phi.colors[u] != phi.colors[v]))
}

/// Whether some color occurs between 1 and `t` times among `colors`.
pub fn has_rare_color(colors: &mut [Color], t: usize) -> bool {
    colors.sort_unstable();
    colors
        .chunk_by(|a, b| a == b)
        .any(|run| run.len() <= t)
}

pub fn edge_is_t_conflict_free(edge: &[usize], phi: &[Color], t: usize) -> bool {
    let mut cs: Vec<Color> = edge.iter().map(|&v| phi[v]).collect();
    has_rare_color(&mut cs, t)
}

pub fn is_t_conflict_free(h: &Hypergraph, phi: &Coloring, t: usize) -> Result<bool> {
    check_t(t)?;
    check_len(h.n(), phi.len())?;
    Ok(h
        .edges()
        .iter()
        .all(|e| edge_is_t_conflict_free(e, &phi.colors, t)))
}

/// Proper on `G`, `t`-conflict-free on `H`, and within the lists when given.
pub fn is_pcf(
    inst: &ConflictInstance,
    phi: &Coloring,
    lists: Option<&ListAssignment>,
    t: usize,
) -> Result<bool> {
    check_t(t)?;
    check_len(inst.n(), phi.len())?;
    if let Some(l) = lists {
        check_len(inst.n(), l.len())?;
        if (0..inst.n()).any(|v| !l.contains(v, phi.colors[v])) {
            return Ok(false);
        }
    }
    Ok(is_proper(&inst.graph, phi)? && is_t_conflict_free(&inst.hypergraph, phi, t)?)
}

/// Every two-colored component of `G` is a path on at most `max_len` vertices.
pub fn bichromatic_paths_ok(g: &Graph, phi: &Coloring, max_len: usize) -> Result<bool> {
    if !is_proper(g, phi)? {
        return Err(Error::Precondition("coloring is not proper".into()));
    }
    if max_len == 0 {
        return Ok(g.n() == 0);
    }
    let mut by_pair: HashMap<(Color, Color), Vec<(usize, usize)>> = HashMap::new();
    for (u, v) in g.edges() {
        let (a, b) = (phi.colors[u], phi.colors[v]);
        by_pair.entry((a.min(b), a.max(b))).or_default().push((u, v));
    }
    let mut parent: Vec<usize> = (0..g.n()).collect();
    let mut degree = vec![0usize; g.n()];
    for edges in by_pair.values() {
        for &(u, v) in edges {
            parent[u] = u;
            parent[v] = v;
            degree[u] = 0;
            degree[v] = 0;
        }
        let mut cyclic = false;
        for &(u, v) in edges {
            degree[u] += 1;
            degree[v] += 1;
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                cyclic = true;
            } else {
                parent[ru] = rv;
            }
        }
        if cyclic || edges.iter().any(|&(u, v)| degree[u] > 2 || degree[v] > 2) {
            return Ok(false);
        }
        // A component with k vertices that is a path has k - 1 edges.
        let mut edge_count: HashMap<usize, usize> = HashMap::new();
        for &(u, _) in edges {
            *edge_count.entry(find(&mut parent, u)).or_default() += 1;
        }
        if edge_count.values().any(|&m| m + 1 > max_len) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Color classes stable in `G`, and every hyperedge sees at least `b` colors exactly once.
pub fn is_fractional_pcf(inst: &ConflictInstance, psi: &SetColoring) -> Result<bool> {
    check_len(inst.n(), psi.len())?;
    let disjoint = |u: usize, v: usize| {
        let (x, y) = (psi.set(u), psi.set(v));
        let (mut i, mut j) = (0, 0);
        while i < x.len() && j < y.len() {
            match x[i].cmp(&y[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    };
    if !inst.graph.edges().all(|(u, v)| disjoint(u, v)) {
        return Ok(false);
    }
    for e in inst.hypergraph.edges() {
        let mut all: Vec<Color> = e.iter().flat_map(|&v| psi.set(v).iter().copied()).collect();
        all.sort_unstable();
        let unique = all.chunk_by(|a, b| a == b).filter(|r| r.len() == 1).count();
        if unique < psi.b as usize {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cor16Report {
    /// Small color sets only induce components of at most two vertices.
    pub stmt2: bool,
    /// Distinct vertices share at most `b/2` colors.
    pub stmt3: bool,
    /// Whether `stmt2` was decided by enumerating color sets.
    pub stmt2_enumerated: bool,
}

/// Palettes at most this large are checked by enumerating color sets.
pub const COR16_ENUMERATION_LIMIT: u32 = 12;

pub fn cor16_properties(inst: &ConflictInstance, psi: &SetColoring) -> Result<Cor16Report> {
    check_len(inst.n(), psi.len())?;
    let n = inst.n();
    let b = psi.b as usize;
    let overlap = |u: usize, v: usize| {
        psi.set(u).iter().filter(|c| psi.set(v).binary_search(c).is_ok()).count()
    };
    let stmt3 = (0..n).all(|u| (u + 1..n).all(|v| 2 * overlap(u, v) <= b));

    let g = &inst.graph;
    let (stmt2, enumerated) = if psi.a <= COR16_ENUMERATION_LIMIT {
        // Largest size m with 2m < 5b; larger sets only grow the induced subgraph,
        // so sets of size min(a, m) are the only ones that need checking.
        let m = (5 * b).saturating_sub(1) / 2;
        let size = m.min(psi.a as usize);
        let masks: Vec<u32> = psi
            .sets()
            .iter()
            .map(|s| s.iter().fold(0u32, |acc, &c| acc | (1 << (c - 1))))
            .collect();
        let mut ok = true;
        for c in subsets_of_size(psi.a as usize, size) {
            let inside: Vec<bool> = masks.iter().map(|&m| m & !c == 0).collect();
            if has_connected_triple(g, |v| inside[v]) {
                ok = false;
                break;
            }
        }
        (ok, true)
    } else {
        let mut ok = true;
        'outer: for x in 0..n {
            let ns = g.neighbors(x);
            for i in 0..ns.len() {
                for j in i + 1..ns.len() {
                    let mut u: Vec<Color> = psi
                        .set(x)
                        .iter()
                        .chain(psi.set(ns[i]))
                        .chain(psi.set(ns[j]))
                        .copied()
                        .collect();
                    u.sort_unstable();
                    u.dedup();
                    if 2 * u.len() < 5 * b {
                        ok = false;
                        break 'outer;
                    }
                }
            }
        }
        (ok, false)
    };
    Ok(Cor16Report {
        stmt2,
        stmt3,
        stmt2_enumerated: enumerated,
    })
}

/// A vertex with two neighbors inside the set, itself inside.
fn has_connected_triple(g: &Graph, inside: impl Fn(usize) -> bool) -> bool {
    (0..g.n()).any(|x| inside(x) && g.neighbors(x).iter().filter(|&&w| inside(w)).count() >= 2)
}

fn subsets_of_size(a: usize, k: usize) -> impl Iterator<Item = u32> {
    (0u32..(1u32 << a)).filter(move |m| m.count_ones() as usize == k)
}
