//! Constructive and exhaustive PCF coloring algorithms.
//!
//! All search here enforces conflict-freeness only on hyperedges that become
//! fully colored; a partial coloring is never rejected for a hyperedge that
//! still has an uncolored vertex.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coloring::{has_rare_color, is_pcf, Color, Coloring, ListAssignment};
use crate::error::{Error, Result};
use crate::graph::{degeneracy_ordering, ConflictInstance, Graph};
use crate::stirling::required_list_size;

pub const DEFAULT_NODE_CAP: u64 = 50_000_000;
pub const DEFAULT_RESTART_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Conflict multiplicity bound.
    pub t: usize,
    pub seed: u64,
    pub restart_cap: usize,
    /// Backtracking budget, counted in color assignments.
    pub node_cap: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            t: 1,
            seed: 0,
            restart_cap: DEFAULT_RESTART_CAP,
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::Param("t must be at least 1".into()));
        }
        if self.restart_cap == 0 || self.node_cap == 0 {
            return Err(Error::Param("restart_cap and node_cap must be positive".into()));
        }
        Ok(())
    }
}

/// Incremental partial-coloring state shared by every search below.
#[derive(Clone)]
struct Partial<'a> {
    inst: &'a ConflictInstance,
    t: usize,
    colors: Vec<Color>,
    uncolored_in_edge: Vec<usize>,
}

impl<'a> Partial<'a> {
    fn new(inst: &'a ConflictInstance, t: usize) -> Self {
        Partial {
            inst,
            t,
            colors: vec![0; inst.n()],
            uncolored_in_edge: inst.hypergraph.edges().iter().map(Vec::len).collect(),
        }
    }

    fn admissible(&self, v: usize, c: Color) -> bool {
        if self.inst.graph.neighbors(v).iter().any(|&w| self.colors[w] == c) {
            return false;
        }
        let h = &self.inst.hypergraph;
        h.incident(v).iter().all(|&k| {
            if self.uncolored_in_edge[k] != 1 {
                return true;
            }
            let mut cs: Vec<Color> = h.edges()[k]
                .iter()
                .map(|&w| if w == v { c } else { self.colors[w] })
                .collect();
            has_rare_color(&mut cs, self.t)
        })
    }

    fn assign(&mut self, v: usize, c: Color) {
        self.colors[v] = c;
        for &k in self.inst.hypergraph.incident(v) {
            self.uncolored_in_edge[k] -= 1;
        }
    }

    fn unassign(&mut self, v: usize) {
        self.colors[v] = 0;
        for &k in self.inst.hypergraph.incident(v) {
            self.uncolored_in_edge[k] += 1;
        }
    }

    fn into_coloring(self) -> Coloring {
        Coloring { colors: self.colors }
    }
}

/// `degeneracy + Delta(H) + 1`, the number of colors [`greedy_pcf`] may use.
pub fn greedy_bound(inst: &ConflictInstance) -> usize {
    degeneracy_ordering(&inst.graph).0 + inst.hypergraph.max_degree() + 1
}

/// Colors in a degenerate order; each vertex avoids its colored neighbors and,
/// for every hyperedge through it, the color of that hyperedge's earliest vertex.
pub fn greedy_pcf(inst: &ConflictInstance) -> Coloring {
    let (_, order) = degeneracy_ordering(&inst.graph);
    let n = inst.n();
    let mut rank = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }
    let h = &inst.hypergraph;
    let leader: Vec<usize> = h
        .edges()
        .iter()
        .map(|e| *e.iter().min_by_key(|&&w| rank[w]).expect("hyperedges are non-empty"))
        .collect();
    let mut colors = vec![0 as Color; n];
    for &v in &order {
        let mut blocked: BTreeSet<Color> = inst.graph.neighbors(v).iter().map(|&w| colors[w]).collect();
        blocked.extend(h.incident(v).iter().filter(|&&k| leader[k] != v).map(|&k| colors[leader[k]]));
        colors[v] = (1..).find(|c| !blocked.contains(c)).expect("unbounded palette");
    }
    Coloring { colors }
}

/// Exact value or, when the budget ran out, a bracket on `chi_pcf`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChiResult {
    pub lower: usize,
    pub upper: usize,
    /// A coloring with `upper` colors.
    pub witness: Coloring,
    pub nodes: u64,
}

impl ChiResult {
    pub fn exact(&self) -> Option<usize> {
        (self.lower == self.upper).then_some(self.upper)
    }
}

enum Found {
    Yes(Coloring),
    No,
    Budget,
}

/// Minimum number of colors of a proper `t`-conflict-free coloring.
pub fn exact_chi_pcf(inst: &ConflictInstance, cfg: &SolverConfig) -> Result<ChiResult> {
    cfg.validate()?;
    let n = inst.n();
    let greedy = greedy_pcf(inst);
    if n == 0 {
        return Ok(ChiResult { lower: 0, upper: 0, witness: greedy, nodes: 0 });
    }
    let mut upper = greedy.max_color() as usize;
    let mut witness = greedy;
    let mut lower = if inst.graph.edge_count() > 0 { 2 } else { 1 };
    let order = search_order(&inst.graph);
    let mut nodes = 0u64;
    while lower < upper {
        match k_colorable(inst, cfg.t, lower as Color, &order, cfg.node_cap, &mut nodes) {
            Found::Yes(phi) => {
                upper = lower;
                witness = phi;
            }
            Found::No => lower += 1,
            Found::Budget => break,
        }
    }
    Ok(ChiResult { lower, upper, witness, nodes })
}

/// Vertices by decreasing degree, each next vertex preferring many already-placed neighbors.
fn search_order(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut placed = vec![false; n];
    let mut weight = vec![0usize; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !placed[v])
            .max_by_key(|&v| (weight[v], g.degree(v), std::cmp::Reverse(v)))
            .expect("unplaced vertex remains");
        placed[v] = true;
        order.push(v);
        for &w in g.neighbors(v) {
            weight[w] += 1;
        }
    }
    order
}

fn k_colorable(
    inst: &ConflictInstance,
    t: usize,
    k: Color,
    order: &[usize],
    cap: u64,
    nodes: &mut u64,
) -> Found {
    fn rec(p: &mut Partial, order: &[usize], i: usize, k: Color, used: Color, cap: u64, nodes: &mut u64) -> Option<bool> {
        if i == order.len() {
            return Some(true);
        }
        let v = order[i];
        // A new color is always the smallest unused one.
        for c in 1..=k.min(used + 1) {
            if !p.admissible(v, c) {
                continue;
            }
            *nodes += 1;
            if *nodes > cap {
                return None;
            }
            p.assign(v, c);
            let r = rec(p, order, i + 1, k, used.max(c), cap, nodes);
            if r != Some(false) {
                if r.is_none() {
                    p.unassign(v);
                }
                return r;
            }
            p.unassign(v);
        }
        Some(false)
    }
    let mut p = Partial::new(inst, t);
    match rec(&mut p, order, 0, k, 0, cap, nodes) {
        Some(true) => Found::Yes(p.into_coloring()),
        Some(false) => Found::No,
        None => Found::Budget,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountResult {
    pub count: BigUint,
    /// False when the node budget ran out; `count` is then only a lower bound.
    pub complete: bool,
    pub nodes: u64,
}

pub fn count_pcf_colorings(inst: &ConflictInstance, lists: &ListAssignment, t: usize) -> Result<CountResult> {
    count_pcf_colorings_capped(inst, lists, t, DEFAULT_NODE_CAP)
}

/// Exhaustive count of proper `t`-conflict-free `L`-colorings, sharded on the first vertex's color.
pub fn count_pcf_colorings_capped(
    inst: &ConflictInstance,
    lists: &ListAssignment,
    t: usize,
    node_cap: u64,
) -> Result<CountResult> {
    if t == 0 {
        return Err(Error::Param("t must be at least 1".into()));
    }
    if lists.len() != inst.n() {
        return Err(Error::LengthMismatch { expected: inst.n(), got: lists.len() });
    }
    if inst.n() == 0 {
        return Ok(CountResult { count: BigUint::one(), complete: true, nodes: 0 });
    }
    let order = search_order(&inst.graph);
    let nodes = AtomicU64::new(0);
    let aborted = AtomicBool::new(false);
    let first = order[0];
    let shards: Vec<u128> = lists
        .list(first)
        .par_iter()
        .map(|&c| {
            let mut p = Partial::new(inst, t);
            if !p.admissible(first, c) {
                return 0;
            }
            p.assign(first, c);
            let mut local = 1u64;
            let mut counter = ShardCounter { shared: &nodes, aborted: &aborted, local: &mut local, cap: node_cap };
            let n = count_rec(&mut p, lists, &order, 1, &mut counter);
            nodes.fetch_add(local, AtomicOrdering::Relaxed);
            n
        })
        .collect();
    let count = shards.into_iter().fold(BigUint::zero(), |acc, x| acc + BigUint::from(x));
    Ok(CountResult {
        count,
        complete: !aborted.load(AtomicOrdering::Relaxed),
        nodes: nodes.load(AtomicOrdering::Relaxed),
    })
}

struct ShardCounter<'a> {
    shared: &'a AtomicU64,
    aborted: &'a AtomicBool,
    local: &'a mut u64,
    cap: u64,
}

impl ShardCounter<'_> {
    const FLUSH: u64 = 1 << 12;

    /// Records one node; false once the global budget is spent.
    fn tick(&mut self) -> bool {
        *self.local += 1;
        if *self.local >= Self::FLUSH {
            let total = self.shared.fetch_add(*self.local, AtomicOrdering::Relaxed) + *self.local;
            *self.local = 0;
            if total > self.cap {
                self.aborted.store(true, AtomicOrdering::Relaxed);
            }
        }
        !self.aborted.load(AtomicOrdering::Relaxed)
    }
}

fn count_rec(p: &mut Partial, lists: &ListAssignment, order: &[usize], i: usize, counter: &mut ShardCounter) -> u128 {
    if i == order.len() {
        return 1;
    }
    let v = order[i];
    if i + 1 == order.len() {
        return lists.list(v).iter().filter(|&&c| p.admissible(v, c)).count() as u128;
    }
    let mut total = 0u128;
    for &c in lists.list(v) {
        if !p.admissible(v, c) {
            continue;
        }
        if !counter.tick() {
            break;
        }
        p.assign(v, c);
        total += count_rec(p, lists, order, i + 1, counter);
        p.unassign(v);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RosenfeldVerdict {
    Pass,
    Fail,
    PremiseNotMet,
    Inconclusive,
}

impl RosenfeldVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            RosenfeldVerdict::Pass => "pass",
            RosenfeldVerdict::Fail => "fail",
            RosenfeldVerdict::PremiseNotMet => "premise-not-met",
            RosenfeldVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosenfeldReport {
    pub verdict: RosenfeldVerdict,
    pub required: BigRational,
    pub min_list: usize,
    /// Absent when the premise fails and nothing was counted.
    pub count: Option<CountResult>,
}

/// Counts colorings and compares against `beta^n` as `count * q^n >= p^n`.
pub fn rosenfeld_check(
    inst: &ConflictInstance,
    lists: &ListAssignment,
    beta: &BigRational,
    t: usize,
    node_cap: u64,
) -> Result<RosenfeldReport> {
    let required = required_list_size(inst, beta, t)?;
    let min_list = lists.min_size();
    if BigRational::from_integer(min_list.into()) < required {
        return Ok(RosenfeldReport { verdict: RosenfeldVerdict::PremiseNotMet, required, min_list, count: None });
    }
    let count = count_pcf_colorings_capped(inst, lists, t, node_cap)?;
    let n = inst.n() as u32;
    let p = beta.numer().to_biguint().expect("beta is positive").pow(n);
    let q = beta.denom().to_biguint().expect("beta is positive").pow(n);
    let enough = &count.count * q >= p;
    let verdict = match (enough, count.complete) {
        (true, _) => RosenfeldVerdict::Pass,
        (false, true) => RosenfeldVerdict::Fail,
        (false, false) => RosenfeldVerdict::Inconclusive,
    };
    Ok(RosenfeldReport { verdict, required, min_list, count: Some(count) })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOutcome {
    /// Present only when a verified coloring was found.
    pub coloring: Option<Coloring>,
    pub attempts: usize,
    pub nodes: u64,
}

/// Randomized restart backtracking; any returned coloring has passed [`is_pcf`].
pub fn sample_pcf(inst: &ConflictInstance, lists: &ListAssignment, cfg: &SolverConfig) -> Result<SampleOutcome> {
    cfg.validate()?;
    if lists.len() != inst.n() {
        return Err(Error::LengthMismatch { expected: inst.n(), got: lists.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut nodes = 0u64;
    for attempt in 1..=cfg.restart_cap {
        let mut order: Vec<usize> = (0..inst.n()).collect();
        order.shuffle(&mut rng);
        let mut p = Partial::new(inst, cfg.t);
        let mut budget = cfg.node_cap;
        if sample_rec(&mut p, lists, &order, 0, &mut rng, &mut budget) {
            nodes += cfg.node_cap - budget;
            let phi = p.into_coloring();
            if !is_pcf(inst, &phi, Some(lists), cfg.t)? {
                return Err(Error::Numeric("sampler produced an invalid coloring".into()));
            }
            return Ok(SampleOutcome { coloring: Some(phi), attempts: attempt, nodes });
        }
        nodes += cfg.node_cap - budget;
    }
    Ok(SampleOutcome { coloring: None, attempts: cfg.restart_cap, nodes })
}

fn sample_rec(
    p: &mut Partial,
    lists: &ListAssignment,
    order: &[usize],
    i: usize,
    rng: &mut ChaCha8Rng,
    budget: &mut u64,
) -> bool {
    if i == order.len() {
        return true;
    }
    let v = order[i];
    let mut options: Vec<Color> = lists.list(v).iter().copied().filter(|&c| p.admissible(v, c)).collect();
    options.shuffle(rng);
    for c in options {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        p.assign(v, c);
        if sample_rec(p, lists, order, i + 1, rng, budget) {
            return true;
        }
        p.unassign(v);
    }
    false
}

/// One removal of a vertex of degree at most 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub v: usize,
    /// Neighbors at removal time; `y == x` for degree 1, both absent for degree 0.
    pub x: Option<usize>,
    pub y: Option<usize>,
    /// Whether the edge `xy` was added.
    pub added_edge: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reduction {
    pub original: Graph,
    /// The remaining graph, relabeled `0..kernel_vertices.len()`.
    pub kernel: Graph,
    /// Original id of each kernel vertex.
    pub kernel_vertices: Vec<usize>,
    pub trace: Vec<ReductionStep>,
}

/// Removes minimum-degree vertices while that degree is at most 2 and more than one vertex remains.
pub fn reduce_low_degree(g: &Graph) -> Reduction {
    let n = g.n();
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| g.neighbors(v).iter().copied().collect()).collect();
    let mut alive: BTreeSet<usize> = (0..n).collect();
    let mut trace = Vec::new();
    while alive.len() > 1 {
        let v = *alive.iter().min_by_key(|&&v| (adj[v].len(), v)).expect("non-empty");
        if adj[v].len() > 2 {
            break;
        }
        let ns: Vec<usize> = adj[v].iter().copied().collect();
        let (x, y) = match ns.as_slice() {
            [] => (None, None),
            [a] => (Some(*a), Some(*a)),
            [a, b] => (Some(*a), Some(*b)),
            _ => unreachable!(),
        };
        for &w in &ns {
            adj[w].remove(&v);
        }
        adj[v].clear();
        alive.remove(&v);
        let mut added_edge = false;
        if let (Some(a), Some(b)) = (x, y) {
            if a != b && !adj[a].contains(&b) {
                adj[a].insert(b);
                adj[b].insert(a);
                added_edge = true;
            }
        }
        trace.push(ReductionStep { v, x, y, added_edge });
    }
    let kernel_vertices: Vec<usize> = alive.iter().copied().collect();
    let mut index = vec![usize::MAX; n];
    for (i, &v) in kernel_vertices.iter().enumerate() {
        index[v] = i;
    }
    let mut edges = Vec::new();
    for &u in &kernel_vertices {
        edges.extend(adj[u].iter().filter(|&&w| u < w).map(|&w| (index[u], index[w])));
    }
    let kernel = Graph::from_edges(kernel_vertices.len(), &edges).expect("kernel edges are valid");
    Reduction { original: g.clone(), kernel, kernel_vertices, trace }
}

/// A color that occurs exactly once among `colors`, preferring one different from `avoid`.
fn unique_color(colors: impl Iterator<Item = Color>, avoid: Color) -> Option<Color> {
    let mut counts = std::collections::BTreeMap::new();
    for c in colors {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    let singles: Vec<Color> = counts.into_iter().filter(|&(_, k)| k == 1).map(|(c, _)| c).collect();
    singles.iter().copied().find(|&c| c != avoid).or(singles.first().copied())
}

impl Reduction {
    /// The kernel with its neighborhood hypergraph.
    pub fn kernel_instance(&self) -> ConflictInstance {
        ConflictInstance::with_neighborhoods(self.kernel.clone())
    }

    /// Restriction of `lists` to the kernel, in kernel labels.
    pub fn kernel_lists(&self, lists: &ListAssignment) -> Result<ListAssignment> {
        ListAssignment::new(self.kernel_vertices.iter().map(|&v| lists.list(v).to_vec()).collect())
    }

    /// Extends a PCF `L`-coloring of the kernel back through the trace, giving each
    /// removed vertex the smallest list color outside the forbidden set.
    pub fn extend(&self, kernel_coloring: &Coloring, lists: &ListAssignment) -> Result<Coloring> {
        let n = self.original.n();
        if lists.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: lists.len() });
        }
        if kernel_coloring.len() != self.kernel_vertices.len() {
            return Err(Error::LengthMismatch { expected: self.kernel_vertices.len(), got: kernel_coloring.len() });
        }
        let mut colors = vec![0 as Color; n];
        for (i, &v) in self.kernel_vertices.iter().enumerate() {
            colors[v] = kernel_coloring.color(i);
        }
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (a, b) in self.kernel.edges() {
            let (u, w) = (self.kernel_vertices[a], self.kernel_vertices[b]);
            adj[u].insert(w);
            adj[w].insert(u);
        }
        for step in self.trace.iter().rev() {
            let v = step.v;
            let mut forbidden: BTreeSet<Color> = BTreeSet::new();
            if let (Some(x), Some(y)) = (step.x, step.y) {
                let cx = unique_color(adj[x].iter().map(|&z| colors[z]), colors[y]);
                let cy = unique_color(adj[y].iter().map(|&z| colors[z]), colors[x]);
                forbidden.insert(colors[x]);
                forbidden.insert(colors[y]);
                if step.added_edge {
                    adj[x].remove(&y);
                    adj[y].remove(&x);
                    for (u, other, cu) in [(x, y, cx), (y, x, cy)] {
                        match cu {
                            // Neighbors of u in G other than v.
                            Some(c) if c == colors[other] => forbidden.extend(adj[u].iter().map(|&z| colors[z])),
                            Some(c) => {
                                forbidden.insert(c);
                            }
                            None => {}
                        }
                    }
                } else {
                    forbidden.extend(cx);
                    forbidden.extend(cy);
                }
                adj[x].insert(v);
                adj[y].insert(v);
                adj[v].insert(x);
                adj[v].insert(y);
            }
            colors[v] = lists
                .list(v)
                .iter()
                .copied()
                .find(|c| !forbidden.contains(c))
                .ok_or_else(|| Error::Blocked {
                    vertex: v,
                    reason: format!("all {} list colors are forbidden", lists.list(v).len()),
                })?;
        }
        let phi = Coloring::new(colors)?;
        let inst = ConflictInstance::with_neighborhoods(self.original.clone());
        if !is_pcf(&inst, &phi, Some(lists), 1)? {
            return Err(Error::Numeric("extended coloring failed verification".into()));
        }
        Ok(phi)
    }
}

/// Exact `beta^n` as a rational, for reporting.
pub fn beta_power(beta: &BigRational, n: usize) -> BigRational {
    crate::rational::powi(beta, n as i64)
}

/// Best-effort `f64` view of a count.
pub fn count_to_f64(c: &BigUint) -> f64 {
    c.to_f64().unwrap_or(f64::INFINITY)
}
