//! Graphs, conflict hypergraphs and the instance pair `(G, H)`.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simple undirected graph on vertices `0..n` with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from an edge list. Parallel edges collapse; loops and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Param(format!(
                    "edge ({u}, {v}) has an endpoint outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::Param(format!("self-loop at vertex {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph { adjacency })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Adjacency bitmasks; only valid for `n <= 64`.
    pub fn adjacency_masks(&self) -> Vec<u64> {
        assert!(self.n() <= 64, "adjacency masks need n <= 64");
        self.adjacency
            .iter()
            .map(|ns| ns.iter().fold(0u64, |m, &v| m | (1u64 << v)))
            .collect()
    }
}

/// Hypergraph with non-empty, deduplicated edges stored as sorted vertex lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<Vec<usize>>,
    incidence: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn empty(n: usize) -> Self {
        Hypergraph {
            n,
            edges: Vec::new(),
            incidence: vec![Vec::new(); n],
        }
    }

    /// Builds a hypergraph, keeping the first occurrence of each distinct edge.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for mut e in edges {
            e.sort_unstable();
            e.dedup();
            if e.is_empty() {
                return Err(Error::Param("hyperedges must be non-empty".into()));
            }
            if let Some(&v) = e.iter().find(|&&v| v >= n) {
                return Err(Error::Param(format!(
                    "hyperedge vertex {v} outside 0..{n}"
                )));
            }
            if seen.insert(e.clone()) {
                kept.push(e);
            }
        }
        let mut incidence = vec![Vec::new(); n];
        for (i, e) in kept.iter().enumerate() {
            for &v in e {
                incidence[v].push(i);
            }
        }
        Ok(Hypergraph {
            n,
            edges: kept,
            incidence,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Indices of the edges containing `v`.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incidence[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incidence[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.incidence.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Largest edge size, 0 for an edgeless hypergraph.
    pub fn rank(&self) -> usize {
        self.edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Smallest size of an edge containing `v`, if any edge does.
    pub fn min_rank_at(&self, v: usize) -> Option<usize> {
        self.incidence[v].iter().map(|&i| self.edges[i].len()).min()
    }

    pub fn min_edge_size(&self) -> Option<usize> {
        self.edges.iter().map(Vec::len).min()
    }
}

/// The pair `(G, H)` on a shared vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictInstance {
    pub graph: Graph,
    pub hypergraph: Hypergraph,
}

impl ConflictInstance {
    pub fn new(graph: Graph, hypergraph: Hypergraph) -> Result<Self> {
        if graph.n() != hypergraph.n() {
            return Err(Error::Param(format!(
                "graph has {} vertices but hypergraph has {}",
                graph.n(),
                hypergraph.n()
            )));
        }
        Ok(ConflictInstance { graph, hypergraph })
    }

    /// `G` together with its open-neighborhood hypergraph.
    pub fn with_neighborhoods(graph: Graph) -> Self {
        let hypergraph = neighborhood_hypergraph(&graph);
        ConflictInstance { graph, hypergraph }
    }

    /// `G` with no conflict constraints.
    pub fn proper_only(graph: Graph) -> Self {
        let hypergraph = Hypergraph::empty(graph.n());
        ConflictInstance { graph, hypergraph }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

/// One edge `N(v)` per non-isolated vertex, deduplicated.
pub fn neighborhood_hypergraph(g: &Graph) -> Hypergraph {
    let edges = (0..g.n())
        .filter(|&v| g.degree(v) > 0)
        .map(|v| g.neighbors(v).to_vec());
    Hypergraph::new(g.n(), edges).expect("neighborhoods are valid hyperedges")
}

/// Vertex sets of all 4-vertex paths plus every 3-subset of each `N(v)`.
pub fn star_linear_hypergraph(g: &Graph) -> Hypergraph {
    let mut edges = Vec::new();
    // A path a-b-c-d is visited once through its middle edge {b, c} with b < c.
    for (b, c) in g.edges() {
        for &a in g.neighbors(b) {
            if a == c {
                continue;
            }
            for &d in g.neighbors(c) {
                if d == b || d == a {
                    continue;
                }
                edges.push(vec![a, b, c, d]);
            }
        }
    }
    for v in 0..g.n() {
        let ns = g.neighbors(v);
        for i in 0..ns.len() {
            for j in i + 1..ns.len() {
                for k in j + 1..ns.len() {
                    edges.push(vec![ns[i], ns[j], ns[k]]);
                }
            }
        }
    }
    Hypergraph::new(g.n(), edges).expect("paths and neighbor triples are valid hyperedges")
}

/// Degeneracy `d` and an order in which every vertex has at most `d` earlier neighbors.
pub fn degeneracy_ordering(g: &Graph) -> (usize, Vec<usize>) {
    let n = g.n();
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_deg + 1];
    for v in 0..n {
        buckets[degree[v]].push(v);
    }
    let mut removed = vec![false; n];
    let mut removal = Vec::with_capacity(n);
    let mut d = 0;
    let mut low = 0;
    while removal.len() < n {
        low = low.min(max_deg);
        let v = loop {
            match buckets[low].pop() {
                // Stale bucket entries are skipped lazily.
                Some(v) if !removed[v] && degree[v] == low => break v,
                Some(_) => {}
                None => low += 1,
            }
        };
        d = d.max(low);
        removed[v] = true;
        removal.push(v);
        for &w in g.neighbors(v) {
            if !removed[w] {
                degree[w] -= 1;
                buckets[degree[w]].push(w);
                low = low.min(degree[w]);
            }
        }
    }
    removal.reverse();
    (d, removal)
}

/// Random and structured graph families for experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphKind {
    Gnp { n: usize, p: f64 },
    Cycle { n: usize },
    Complete { n: usize },
    RandomRegular { n: usize, k: usize },
}

/// Deterministic for a fixed `(kind, seed)`.
pub fn generate(kind: GraphKind, seed: u64) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        GraphKind::Gnp { n, p } => {
            if n == 0 {
                return Err(Error::Param("gnp needs n >= 1".into()));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Param(format!("gnp probability {p} outside [0, 1]")));
            }
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(p) {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(n, &edges)
        }
        GraphKind::Cycle { n } => {
            if n < 3 {
                return Err(Error::Param(format!("cycle needs n >= 3, got {n}")));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::Complete { n } => {
            if n == 0 {
                return Err(Error::Param("complete graph needs n >= 1".into()));
            }
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    edges.push((u, v));
                }
            }
            Graph::from_edges(n, &edges)
        }
        GraphKind::RandomRegular { n, k } => random_regular(n, k, &mut rng),
    }
}

/// Pairing model with incremental rejection of loops and repeated pairs,
/// restarting when the remaining points cannot be matched.
fn random_regular(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Graph> {
    if n == 0 || k >= n.max(1) || (n * k) % 2 == 1 {
        return Err(Error::Param(format!(
            "random regular graph needs n >= 1, k < n and n*k even (n={n}, k={k})"
        )));
    }
    const RESTARTS: usize = 10_000;
    'restart: for _ in 0..RESTARTS {
        let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(k)).collect();
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        while !points.is_empty() {
            let mut placed = false;
            for _ in 0..64 {
                let i = rng.gen_range(0..points.len());
                let j = rng.gen_range(0..points.len());
                let (u, v) = (points[i], points[j]);
                let key = (u.min(v), u.max(v));
                if i == j || u == v || edges.contains(&key) {
                    continue;
                }
                edges.insert(key);
                let (hi, lo) = (i.max(j), i.min(j));
                points.swap_remove(hi);
                points.swap_remove(lo);
                placed = true;
                break;
            }
            if !placed {
                continue 'restart;
            }
        }
        let mut list: Vec<_> = edges.into_iter().collect();
        list.sort_unstable();
        return Graph::from_edges(n, &list);
    }
    Err(Error::Numeric(format!(
        "no {k}-regular graph on {n} vertices after {RESTARTS} restarts"
    )))
}

/// Random list assignment: each vertex draws `size` distinct colors from `1..=universe`.
pub fn random_lists(n: usize, size: usize, universe: u32, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<u32> = (1..=universe).collect();
    (0..n)
        .map(|_| {
            let mut l: Vec<u32> = pool.choose_multiple(&mut rng, size).copied().collect();
            l.sort_unstable();
            l
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn rejects_loops_and_out_of_range() {
        assert!(Graph::from_edges(3, &[(1, 1)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 3)]).is_err());
        assert!(Hypergraph::new(3, vec![vec![]]).is_err());
        assert!(Hypergraph::new(3, vec![vec![0, 5]]).is_err());
        let g = Graph::from_edges(3, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn instance_sizes_must_agree() {
        assert!(ConflictInstance::new(Graph::empty(3), Hypergraph::empty(4)).is_err());
    }

    #[test]
    fn neighborhoods_of_small_graphs() {
        assert_eq!(neighborhood_hypergraph(&Graph::empty(4)).edge_count(), 0);
        let c5 = generate(GraphKind::Cycle { n: 5 }, 0).unwrap();
        let h = neighborhood_hypergraph(&c5);
        assert_eq!(h.edge_count(), 5);
        assert!(h.edges().iter().all(|e| e.len() == 2));
        let p3 = path(3);
        let h = neighborhood_hypergraph(&p3);
        assert_eq!(h.edges(), &[vec![1], vec![0, 2]]);
    }

    #[test]
    fn star_linear_small_cases() {
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(star_linear_hypergraph(&star).edges(), &[vec![1, 2, 3]]);
        assert_eq!(star_linear_hypergraph(&path(4)).edges(), &[vec![0, 1, 2, 3]]);
        let k4 = generate(GraphKind::Complete { n: 4 }, 0).unwrap();
        let h = star_linear_hypergraph(&k4);
        // One 4-set, and four 3-subsets of neighborhoods.
        assert_eq!(h.edge_count(), 5);
    }

    #[test]
    fn degeneracy_examples() {
        assert_eq!(degeneracy_ordering(&Graph::empty(5)).0, 0);
        let k4 = generate(GraphKind::Complete { n: 4 }, 0).unwrap();
        assert_eq!(degeneracy_ordering(&k4).0, 3);
        let c5 = generate(GraphKind::Cycle { n: 5 }, 0).unwrap();
        assert_eq!(degeneracy_ordering(&c5).0, 2);
        assert_eq!(degeneracy_ordering(&path(6)).0, 1);
    }

    #[test]
    fn generator_examples() {
        let c5 = generate(GraphKind::Cycle { n: 5 }, 1).unwrap();
        assert_eq!(c5.edge_count(), 5);
        let k4 = generate(GraphKind::Complete { n: 4 }, 1).unwrap();
        assert_eq!(k4.edge_count(), 6);
        let e = generate(GraphKind::Gnp { n: 20, p: 0.0 }, 9).unwrap();
        assert_eq!(e.edge_count(), 0);
        assert!(generate(GraphKind::Gnp { n: 5, p: 1.5 }, 0).is_err());
        assert!(generate(GraphKind::RandomRegular { n: 5, k: 3 }, 0).is_err());
        assert!(generate(GraphKind::Cycle { n: 2 }, 0).is_err());
        let r = generate(GraphKind::RandomRegular { n: 30, k: 5 }, 3).unwrap();
        assert!((0..30).all(|v| r.degree(v) == 5));
    }

    #[test]
    fn star_linear_degree_bound_on_random_graphs() {
        for seed in 0..100u64 {
            let n = 5 + (seed as usize % 26);
            let g = generate(GraphKind::Gnp { n, p: 0.15 }, seed).unwrap();
            let h = star_linear_hypergraph(&g);
            let delta = g.max_degree() as f64;
            assert!(h.rank() <= 4);
            assert!(h.edges().iter().all(|e| e.len() >= 3));
            for v in 0..n {
                assert!(h.degree(v) as f64 <= 2.5 * delta.powi(3), "seed {seed}, vertex {v}");
            }
        }
    }

    proptest! {
        #[test]
        fn generation_is_reproducible(n in 1usize..40, p in 0.0f64..1.0, seed: u64) {
            let a = generate(GraphKind::Gnp { n, p }, seed).unwrap();
            let b = generate(GraphKind::Gnp { n, p }, seed).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn degeneracy_order_is_valid(n in 1usize..40, p in 0.0f64..0.6, seed: u64) {
            let g = generate(GraphKind::Gnp { n, p }, seed).unwrap();
            let (d, order) = degeneracy_ordering(&g);
            prop_assert!(d <= g.max_degree());
            let mut pos = vec![0; n];
            for (i, &v) in order.iter().enumerate() {
                pos[v] = i;
            }
            for v in 0..n {
                let earlier = g.neighbors(v).iter().filter(|&&w| pos[w] < pos[v]).count();
                prop_assert!(earlier <= d);
            }
        }

        #[test]
        fn neighborhood_degree_at_most_graph_degree(n in 1usize..40, p in 0.0f64..0.7, seed: u64) {
            let g = generate(GraphKind::Gnp { n, p }, seed).unwrap();
            let h = neighborhood_hypergraph(&g);
            prop_assert!(h.max_degree() <= g.max_degree());
        }
    }
}
