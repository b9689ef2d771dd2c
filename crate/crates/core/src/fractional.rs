//! Fractional PCF coloring: the stable-set LP, its dual, the randomized
//! stable-set construction for dual weights, and rounding to `(a:b)`-colorings.
//!
//! Columns of the LP are the non-empty stable sets of `G`. Row `v` of `A1`
//! is 1 on sets containing `v`; row `z` of `A2` is 1 on sets meeting `z` in
//! exactly one vertex. The LP is `min 1'x` subject to `A x >= 1`, `x >= 0`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coloring::{is_fractional_pcf, SetColoring};
use crate::error::{Error, Result};
use crate::ext::Verdict;
use crate::graph::{ConflictInstance, Graph};
use crate::rational::int;

/// Largest vertex count accepted by the exhaustive stable-set routines.
pub const MAX_STABLE_N: usize = 20;

fn check_size(n: usize) -> Result<()> {
    if n > MAX_STABLE_N {
        return Err(Error::TooLarge(format!("stable-set enumeration needs n <= {MAX_STABLE_N}, got {n}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StableSetSystem {
    pub n: usize,
    /// Every non-empty stable set as a vertex bitmask, in increasing numeric order.
    pub sets: Vec<u32>,
    /// Hyperedges as bitmasks, indexing the rows of `A2`.
    pub edge_masks: Vec<u32>,
}

impl StableSetSystem {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn a1(&self, v: usize, j: usize) -> bool {
        self.sets[j] >> v & 1 == 1
    }

    pub fn a2(&self, z: usize, j: usize) -> bool {
        (self.edge_masks[z] & self.sets[j]).count_ones() == 1
    }

    pub fn rows(&self) -> usize {
        self.n + self.edge_masks.len()
    }

    /// Rows in which column `j` has a 1: vertices first, then hyperedges offset by `n`.
    pub fn support(&self, j: usize) -> Vec<usize> {
        let s = self.sets[j];
        let mut rows: Vec<usize> = (0..self.n).filter(|&v| s >> v & 1 == 1).collect();
        rows.extend((0..self.edge_masks.len()).filter(|&z| (self.edge_masks[z] & s).count_ones() == 1).map(|z| self.n + z));
        rows
    }
}

pub fn mask_to_vertices(mask: u32) -> Vec<usize> {
    (0..32).filter(|&v| mask >> v & 1 == 1).collect()
}

pub fn enumerate_stable_sets(inst: &ConflictInstance) -> Result<StableSetSystem> {
    let n = inst.n();
    check_size(n)?;
    let adj: Vec<u32> = inst.graph.adjacency_masks().into_iter().map(|m| m as u32).collect();
    let mut sets = Vec::new();
    fn rec(v: usize, n: usize, current: u32, blocked: u32, adj: &[u32], out: &mut Vec<u32>) {
        if v == n {
            if current != 0 {
                out.push(current);
            }
            return;
        }
        rec(v + 1, n, current, blocked, adj, out);
        if blocked >> v & 1 == 0 {
            rec(v + 1, n, current | 1 << v, blocked | adj[v], adj, out);
        }
    }
    rec(0, n, 0, 0, &adj, &mut sets);
    sets.sort_unstable();
    let edge_masks = inst
        .hypergraph
        .edges()
        .iter()
        .map(|e| e.iter().fold(0u32, |m, &v| m | 1 << v))
        .collect();
    Ok(StableSetSystem { n, sets, edge_masks })
}

/// Per-vertex weights `f` and per-hyperedge weights `g`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualWeights {
    pub f: Vec<BigRational>,
    pub g: Vec<BigRational>,
}

impl DualWeights {
    pub fn total(&self) -> BigRational {
        self.f.iter().chain(&self.g).sum()
    }

    pub fn normalized(&self) -> Result<DualWeights> {
        let total = self.total();
        if !total.is_positive() {
            return Err(Error::Param("weights must have a positive total".into()));
        }
        Ok(DualWeights {
            f: self.f.iter().map(|x| x / &total).collect(),
            g: self.g.iter().map(|x| x / &total).collect(),
        })
    }

    fn check(&self, inst: &ConflictInstance) -> Result<()> {
        if self.f.len() != inst.n() {
            return Err(Error::LengthMismatch { expected: inst.n(), got: self.f.len() });
        }
        if self.g.len() != inst.hypergraph.edge_count() {
            return Err(Error::LengthMismatch { expected: inst.hypergraph.edge_count(), got: self.g.len() });
        }
        if self.f.iter().chain(&self.g).any(Signed::is_negative) {
            return Err(Error::Param("weights must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpResult {
    pub optimum: BigRational,
    /// Stable sets with positive weight.
    pub primal: Vec<(u32, BigRational)>,
    /// Optimal dual, unnormalized; its total equals `optimum`.
    pub dual: DualWeights,
    pub pivots: usize,
}

/// Dense exact revised simplex for `min c'x, A x >= 1, x >= 0` with Bland's rule.
struct Simplex<'a> {
    support: &'a [Vec<usize>],
    m: usize,
    basis: Vec<usize>,
    binv: Vec<Vec<BigRational>>,
    xb: Vec<BigRational>,
    pivots: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

impl<'a> Simplex<'a> {
    fn new(support: &'a [Vec<usize>], m: usize) -> Self {
        let n_struct = support.len();
        let binv = (0..m)
            .map(|i| (0..m).map(|k| if i == k { BigRational::one() } else { BigRational::zero() }).collect())
            .collect();
        Simplex {
            support,
            m,
            basis: (0..m).map(|i| n_struct + m + i).collect(),
            binv,
            xb: vec![BigRational::one(); m],
            pivots: 0,
        }
    }

    fn n_struct(&self) -> usize {
        self.support.len()
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n_struct() + self.m
    }

    fn cost(&self, j: usize, phase: Phase) -> BigRational {
        match phase {
            Phase::One if self.is_artificial(j) => BigRational::one(),
            Phase::Two if j < self.n_struct() => BigRational::one(),
            _ => BigRational::zero(),
        }
    }

    /// `B^-1 A_j`.
    fn column(&self, j: usize) -> Vec<BigRational> {
        let ns = self.n_struct();
        (0..self.m)
            .map(|i| {
                let row = &self.binv[i];
                if j < ns {
                    self.support[j].iter().map(|&r| &row[r]).sum()
                } else if j < ns + self.m {
                    -row[j - ns].clone()
                } else {
                    row[j - ns - self.m].clone()
                }
            })
            .collect()
    }

    fn prices(&self, phase: Phase) -> Vec<BigRational> {
        let cb: Vec<BigRational> = self.basis.iter().map(|&j| self.cost(j, phase)).collect();
        (0..self.m)
            .map(|r| {
                cb.iter()
                    .zip(&self.binv)
                    .filter(|(c, _)| !c.is_zero())
                    .map(|(c, row)| c * &row[r])
                    .sum()
            })
            .collect()
    }

    fn reduced_cost(&self, j: usize, pi: &[BigRational], phase: Phase) -> BigRational {
        let ns = self.n_struct();
        let c = self.cost(j, phase);
        if j < ns {
            c - self.support[j].iter().map(|&r| &pi[r]).sum::<BigRational>()
        } else if j < ns + self.m {
            c + &pi[j - ns]
        } else {
            c - &pi[j - ns - self.m]
        }
    }

    fn pivot(&mut self, p: usize, j: usize, w: &[BigRational]) {
        let piv = w[p].clone();
        for x in self.binv[p].iter_mut() {
            *x /= &piv;
        }
        self.xb[p] /= &piv;
        let prow = self.binv[p].clone();
        let px = self.xb[p].clone();
        for i in 0..self.m {
            if i == p || w[i].is_zero() {
                continue;
            }
            for (x, y) in self.binv[i].iter_mut().zip(&prow) {
                *x -= &w[i] * y;
            }
            self.xb[i] -= &w[i] * &px;
        }
        self.basis[p] = j;
        self.pivots += 1;
    }

    fn run(&mut self, phase: Phase) -> Result<()> {
        let total = self.n_struct() + 2 * self.m;
        let limit = if phase == Phase::One { total } else { self.n_struct() + self.m };
        loop {
            let pi = self.prices(phase);
            let entering = (0..limit)
                .filter(|j| !self.basis.contains(j))
                .find(|&j| self.reduced_cost(j, &pi, phase).is_negative());
            let Some(j) = entering else { return Ok(()) };
            let w = self.column(j);
            let mut leave: Option<(usize, BigRational)> = None;
            for i in 0..self.m {
                if !w[i].is_positive() {
                    continue;
                }
                let ratio = &self.xb[i] / &w[i];
                let better = match &leave {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((p, _)) = leave else {
                return Err(Error::Numeric("LP unbounded, which cannot happen for a covering LP".into()));
            };
            self.pivot(p, j, &w);
        }
    }

    /// Pivots zero-level artificials out of the basis.
    fn drive_out_artificials(&mut self) -> Result<()> {
        for i in 0..self.m {
            if !self.is_artificial(self.basis[i]) {
                continue;
            }
            let candidate = (0..self.n_struct() + self.m)
                .filter(|j| !self.basis.contains(j))
                .map(|j| (j, self.column(j)))
                .find(|(_, w)| !w[i].is_zero());
            let Some((j, w)) = candidate else {
                return Err(Error::Numeric("redundant row in covering LP".into()));
            };
            self.pivot(i, j, &w);
        }
        Ok(())
    }
}

/// Exact optimum of the fractional PCF LP together with a primal and a dual certificate.
pub fn fractional_pcf_lp(inst: &ConflictInstance) -> Result<LpResult> {
    let sys = enumerate_stable_sets(inst)?;
    let m = sys.rows();
    let n_edges = sys.edge_masks.len();
    if m == 0 {
        return Ok(LpResult {
            optimum: BigRational::zero(),
            primal: Vec::new(),
            dual: DualWeights { f: Vec::new(), g: vec![BigRational::zero(); n_edges] },
            pivots: 0,
        });
    }
    let support: Vec<Vec<usize>> = (0..sys.len()).map(|j| sys.support(j)).collect();
    let mut lp = Simplex::new(&support, m);
    lp.run(Phase::One)?;
    if lp.basis.iter().zip(&lp.xb).any(|(&j, x)| lp.is_artificial(j) && x.is_positive()) {
        return Err(Error::Numeric("covering LP reported infeasible".into()));
    }
    lp.drive_out_artificials()?;
    lp.run(Phase::Two)?;

    let mut x = vec![BigRational::zero(); sys.len()];
    for (&j, v) in lp.basis.iter().zip(&lp.xb) {
        if j < sys.len() {
            x[j] = v.clone();
        }
    }
    let y = lp.prices(Phase::Two);
    let optimum: BigRational = x.iter().sum();

    // Certificates: primal feasibility, dual feasibility, equal objectives.
    let mut cover = vec![BigRational::zero(); m];
    for (j, xj) in x.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
        for &r in &support[j] {
            cover[r] += xj;
        }
    }
    let primal_ok = cover.iter().all(|c| *c >= BigRational::one()) && x.iter().all(|v| !v.is_negative());
    let dual_ok = y.iter().all(|v| !v.is_negative())
        && support.iter().all(|rows| rows.iter().map(|&r| &y[r]).sum::<BigRational>() <= BigRational::one());
    let y_total: BigRational = y.iter().sum();
    if !(primal_ok && dual_ok && y_total == optimum) {
        return Err(Error::Numeric("LP certificates failed verification".into()));
    }
    let primal = x
        .into_iter()
        .enumerate()
        .filter(|(_, v)| v.is_positive())
        .map(|(j, v)| (sys.sets[j], v))
        .collect();
    Ok(LpResult {
        optimum,
        primal,
        dual: DualWeights { f: y[..sys.n].to_vec(), g: y[sys.n..].to_vec() },
        pivots: lp.pivots,
    })
}

/// Payoff of a vertex set: its `f` weight plus the `g` weight of hyperedges it meets exactly once.
pub fn payoff(inst: &ConflictInstance, w: &DualWeights, members: &[bool]) -> BigRational {
    let mut total: BigRational = (0..inst.n()).filter(|&v| members[v]).map(|v| &w.f[v]).sum();
    for (z, e) in inst.hypergraph.edges().iter().enumerate() {
        if e.iter().filter(|&&v| members[v]).count() == 1 {
            total += &w.g[z];
        }
    }
    total
}

fn mask_payoff(sys: &StableSetSystem, w: &DualWeights, mask: u32) -> BigRational {
    let mut total: BigRational = (0..sys.n).filter(|&v| mask >> v & 1 == 1).map(|v| &w.f[v]).sum();
    for (z, &e) in sys.edge_masks.iter().enumerate() {
        if (e & mask).count_ones() == 1 {
            total += &w.g[z];
        }
    }
    total
}

/// Maximum payoff over all stable sets; ties go to the numerically smallest mask.
pub fn best_stable_payoff(inst: &ConflictInstance, w: &DualWeights) -> Result<(u32, BigRational)> {
    w.check(inst)?;
    let sys = enumerate_stable_sets(inst)?;
    Ok(best_in_system(&sys, w))
}

fn best_in_system(sys: &StableSetSystem, w: &DualWeights) -> (u32, BigRational) {
    let mut best = (0u32, BigRational::zero());
    for &s in &sys.sets {
        let p = mask_payoff(sys, w, s);
        if p > best.1 {
            best = (s, p);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualityReport {
    pub t_star: BigRational,
    /// Best payoff under the normalized optimal dual.
    pub dual_payoff: BigRational,
    pub equality: bool,
    pub sampled: usize,
    pub min_sampled_payoff: Option<BigRational>,
    pub sampled_ok: bool,
    pub verdict: Verdict,
}

/// Checks `best payoff(normalized dual) = 1/t*` and `best payoff >= 1/t*` for random normalized weights.
pub fn duality_check(inst: &ConflictInstance, samples: usize, seed: u64) -> Result<DualityReport> {
    let lp = fractional_pcf_lp(inst)?;
    let sys = enumerate_stable_sets(inst)?;
    let t_star = lp.optimum.clone();
    if t_star.is_zero() {
        return Ok(DualityReport {
            t_star,
            dual_payoff: BigRational::zero(),
            equality: true,
            sampled: 0,
            min_sampled_payoff: None,
            sampled_ok: true,
            verdict: Verdict::Pass,
        });
    }
    let target = t_star.recip();
    let dual_payoff = best_in_system(&sys, &lp.dual.normalized()?).1;
    let equality = dual_payoff == target;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_sampled: Option<BigRational> = None;
    let (nf, ng) = (sys.n, sys.edge_masks.len());
    for _ in 0..samples {
        let raw: Vec<i64> = loop {
            let r: Vec<i64> = (0..nf + ng).map(|_| rng.gen_range(0..=100)).collect();
            if r.iter().any(|&x| x > 0) {
                break r;
            }
        };
        let w = DualWeights {
            f: raw[..nf].iter().map(|&x| int(x)).collect(),
            g: raw[nf..].iter().map(|&x| int(x)).collect(),
        }
        .normalized()?;
        let p = best_in_system(&sys, &w).1;
        min_sampled = Some(match min_sampled {
            Some(m) if m <= p => m,
            _ => p,
        });
    }
    let sampled_ok = min_sampled.as_ref().is_none_or(|m| *m >= target);
    Ok(DualityReport {
        t_star,
        dual_payoff,
        equality,
        sampled: samples,
        min_sampled_payoff: min_sampled,
        sampled_ok,
        verdict: if equality && sampled_ok { Verdict::Pass } else { Verdict::Fail },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    pub eps: f64,
    pub seed: u64,
    /// Replaces the default `p = ln(Delta) / Delta`.
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerRun {
    pub set: Vec<usize>,
    pub payoff: BigRational,
    pub p: f64,
    /// Vertices with `X_v = 1`.
    pub sampled: usize,
    /// Vertices with `X_v = 1` and `Y_v = 0`.
    pub kept: usize,
    pub colors_used: usize,
    /// `floor((1 + eps) p Delta) + 1`.
    pub color_budget: usize,
    /// `(1 - eps)^2 / ((1 + 2 eps) Delta)`, reported only.
    pub diagnostic: f64,
    pub meets_diagnostic: bool,
    /// `rank(H) > Delta(G)`.
    pub rank_warning: bool,
}

pub fn is_stable(g: &Graph, set: &[usize]) -> bool {
    let mut member = vec![false; g.n()];
    for &v in set {
        member[v] = true;
    }
    set.iter().all(|&v| g.neighbors(v).iter().all(|&w| !member[w]))
}

/// Samples `X_v ~ Bernoulli(p)`, drops vertices with more than `(1+eps) p Delta`
/// sampled neighbors, greedily colors what remains, and returns the best color class.
pub fn weighted_stable_sampler(inst: &ConflictInstance, w: &DualWeights, params: &SamplerParams) -> Result<SamplerRun> {
    w.check(inst)?;
    if !(params.eps > 0.0 && params.eps.is_finite()) {
        return Err(Error::Param(format!("eps must be positive, got {}", params.eps)));
    }
    let g = &inst.graph;
    let delta = g.max_degree();
    let p = match params.p {
        Some(p) if p > 0.0 && p <= 1.0 => p,
        Some(p) => return Err(Error::Param(format!("p must lie in (0, 1], got {p}"))),
        None if delta >= 2 => (delta as f64).ln() / delta as f64,
        None => return Err(Error::Precondition(format!("need Delta >= 2 for p = ln(Delta)/Delta, got {delta}"))),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let x: Vec<bool> = (0..g.n()).map(|_| rng.gen_bool(p)).collect();
    let cap = (1.0 + params.eps) * p * delta as f64;
    let kept: Vec<usize> = (0..g.n())
        .filter(|&v| x[v] && (g.neighbors(v).iter().filter(|&&u| x[u]).count() as f64) <= cap)
        .collect();
    let mut in_b = vec![false; g.n()];
    for &v in &kept {
        in_b[v] = true;
    }
    let mut color = vec![0usize; g.n()];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &v in &kept {
        let used: Vec<usize> = g.neighbors(v).iter().filter(|&&u| in_b[u]).map(|&u| color[u]).collect();
        let c = (1..).find(|c| !used.contains(c)).expect("unbounded palette");
        color[v] = c;
        if classes.len() < c {
            classes.resize(c, Vec::new());
        }
        classes[c - 1].push(v);
    }
    let mut best: (Vec<usize>, BigRational) = (Vec::new(), BigRational::zero());
    for class in &classes {
        let mut member = vec![false; g.n()];
        for &v in class {
            member[v] = true;
        }
        let pay = payoff(inst, w, &member);
        if pay > best.1 {
            best = (class.clone(), pay);
        }
    }
    if !is_stable(g, &best.0) {
        return Err(Error::Numeric("sampler produced a non-stable set".into()));
    }
    let diagnostic = if delta == 0 {
        f64::INFINITY
    } else {
        (1.0 - params.eps).powi(2) / ((1.0 + 2.0 * params.eps) * delta as f64)
    };
    let total = crate::rational::to_f64(&w.total());
    Ok(SamplerRun {
        meets_diagnostic: crate::rational::to_f64(&best.1) >= diagnostic * total,
        set: best.0,
        payoff: best.1,
        p,
        sampled: x.iter().filter(|&&b| b).count(),
        kept: kept.len(),
        colors_used: classes.len(),
        color_budget: cap.floor() as usize + 1,
        diagnostic,
        rank_warning: inst.hypergraph.rank() > delta,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundResult {
    pub coloring: SetColoring,
    /// Whether the trimmed coloring passed [`is_fractional_pcf`].
    pub verified: bool,
    /// Vertices covered more than `b` times before trimming.
    pub trimmed: Vec<usize>,
}

/// Turns the LP primal into an `(a:b)`-coloring with `b` the common denominator:
/// each stable set becomes `x_S b` consecutive color classes, and each vertex keeps
/// its `b` lowest colors.
pub fn round_to_ab(inst: &ConflictInstance, lp: &LpResult) -> Result<RoundResult> {
    let n = inst.n();
    let d = lp
        .primal
        .iter()
        .fold(BigInt::one(), |acc, (_, x)| acc.lcm(x.denom()));
    let b = d.to_u32().ok_or_else(|| Error::TooLarge(format!("common denominator {d} exceeds u32")))?;
    let mut colors: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut next = 1u32;
    for (mask, x) in &lp.primal {
        let copies = (x * BigRational::from_integer(d.clone())).to_integer().to_u32().ok_or_else(|| {
            Error::TooLarge("color class multiplicity exceeds u32".into())
        })?;
        for _ in 0..copies {
            for v in mask_to_vertices(*mask) {
                colors[v].push(next);
            }
            next += 1;
        }
    }
    let a = next - 1;
    let mut trimmed = Vec::new();
    for (v, cs) in colors.iter_mut().enumerate() {
        if cs.len() < b as usize {
            return Err(Error::Numeric(format!("vertex {v} covered {} < {b} times", cs.len())));
        }
        if cs.len() > b as usize {
            trimmed.push(v);
            cs.truncate(b as usize);
        }
    }
    let coloring = SetColoring::new(a, b, colors)?;
    let verified = is_fractional_pcf(inst, &coloring)?;
    Ok(RoundResult { coloring, verified, trimmed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernoffReport {
    pub n: u64,
    pub p: f64,
    pub delta: f64,
    pub trials: usize,
    pub mean: f64,
    /// `2 exp(-delta^2 E[X] / 3)`; may exceed 1.
    pub bound: f64,
    pub empirical: f64,
    pub sigma: f64,
    pub pass: bool,
}

/// Monte-Carlo frequency of `|X - E X| >= delta E X` for `X ~ Binomial(n, p)`.
pub fn chernoff_diagnostic(n: u64, p: f64, delta: f64, trials: usize, seed: u64) -> Result<ChernoffReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Param(format!("need 0 < delta < 1, got {delta}")));
    }
    if !(0.0..=1.0).contains(&p) || trials == 0 {
        return Err(Error::Param("need 0 <= p <= 1 and at least one trial".into()));
    }
    let dist = Binomial::new(n, p).map_err(|e| Error::Param(e.to_string()))?;
    let mean = n as f64 * p;
    const CHUNK: usize = 4096;
    let hits: usize = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let len = CHUNK.min(trials - chunk * CHUNK);
            (0..len)
                .filter(|_| (dist.sample(&mut rng) as f64 - mean).abs() >= delta * mean)
                .count()
        })
        .sum();
    let empirical = hits as f64 / trials as f64;
    let bound = 2.0 * (-delta * delta * mean / 3.0).exp();
    let q = bound.min(1.0);
    let sigma = (q * (1.0 - q) / trials as f64).sqrt();
    Ok(ChernoffReport {
        n,
        p,
        delta,
        trials,
        mean,
        bound,
        empirical,
        sigma,
        pass: empirical <= bound + 3.0 * sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind, Hypergraph};
    use crate::rational::ratio;
    use crate::solvers::{exact_chi_pcf, SolverConfig};
    use proptest::prelude::*;

    fn cycle(n: usize) -> Graph {
        generate(GraphKind::Cycle { n }, 0).unwrap()
    }

    fn complete(n: usize) -> Graph {
        generate(GraphKind::Complete { n }, 0).unwrap()
    }

    fn brute_stable_count(g: &Graph) -> usize {
        (1u32..1 << g.n()).filter(|&m| is_stable(g, &mask_to_vertices(m))).count()
    }

    #[test]
    fn stable_set_examples() {
        let k3 = enumerate_stable_sets(&ConflictInstance::proper_only(complete(3))).unwrap();
        assert_eq!(k3.sets, vec![1, 2, 4]);
        let c5 = enumerate_stable_sets(&ConflictInstance::proper_only(cycle(5))).unwrap();
        assert_eq!(c5.len(), brute_stable_count(&cycle(5)));
        assert_eq!(c5.len(), 10);
        let e3 = enumerate_stable_sets(&ConflictInstance::proper_only(Graph::empty(3))).unwrap();
        assert_eq!(e3.len(), 7);
        let nb = enumerate_stable_sets(&ConflictInstance::with_neighborhoods(cycle(5))).unwrap();
        // N(0) = {1, 4}; the set {1, 3} meets it once.
        let z = nb.edge_masks.iter().position(|&m| m == 0b10010).unwrap();
        let j = nb.sets.iter().position(|&s| s == 0b01010).unwrap();
        assert!(nb.a2(z, j) && nb.a1(1, j) && !nb.a1(0, j));
        assert!(enumerate_stable_sets(&ConflictInstance::proper_only(Graph::empty(21))).is_err());
    }

    #[test]
    fn lp_examples() {
        assert_eq!(fractional_pcf_lp(&ConflictInstance::proper_only(complete(3))).unwrap().optimum, int(3));
        let c5 = fractional_pcf_lp(&ConflictInstance::proper_only(cycle(5))).unwrap();
        assert_eq!(c5.optimum, ratio(5, 2));
        let nb = fractional_pcf_lp(&ConflictInstance::with_neighborhoods(cycle(5))).unwrap();
        assert!(nb.optimum >= ratio(5, 2) && nb.optimum <= int(5));
        assert_eq!(nb.optimum, ratio(5, 2));
        assert_eq!(nb.dual.total(), nb.optimum);
        let one = fractional_pcf_lp(&ConflictInstance::proper_only(Graph::empty(1))).unwrap();
        assert_eq!(one.optimum, int(1));
    }

    #[test]
    fn classical_fractional_chromatic_numbers() {
        for n in 1..=5 {
            assert_eq!(fractional_pcf_lp(&ConflictInstance::proper_only(complete(n))).unwrap().optimum, int(n as i64));
        }
        for k in 1..=4i64 {
            let g = cycle(2 * k as usize + 1);
            let lp = fractional_pcf_lp(&ConflictInstance::proper_only(g)).unwrap();
            assert_eq!(lp.optimum, int(2) + ratio(1, k));
        }
    }

    #[test]
    fn payoff_examples() {
        let c5 = ConflictInstance::proper_only(cycle(5));
        let mut f = vec![int(0); 5];
        f[2] = int(1);
        let (s, p) = best_stable_payoff(&c5, &DualWeights { f, g: vec![] }).unwrap();
        assert_eq!(p, int(1));
        assert!(s >> 2 & 1 == 1);
        let uniform = DualWeights { f: vec![ratio(1, 5); 5], g: vec![] };
        assert_eq!(best_stable_payoff(&c5, &uniform).unwrap().1, ratio(2, 5));
        let nb = ConflictInstance::with_neighborhoods(cycle(5));
        let mut g = vec![int(0); 5];
        g[0] = int(1);
        let (s, p) = best_stable_payoff(&nb, &DualWeights { f: vec![int(0); 5], g }).unwrap();
        assert_eq!(p, int(1));
        let z = &nb.hypergraph.edges()[0];
        assert_eq!(z.iter().filter(|&&v| s >> v & 1 == 1).count(), 1);
    }

    #[test]
    fn duality_examples() {
        let rep = duality_check(&ConflictInstance::with_neighborhoods(cycle(5)), 100, 1).unwrap();
        assert!(rep.equality && rep.sampled_ok);
        let k3 = ConflictInstance::proper_only(complete(3));
        let rep = duality_check(&k3, 100, 2).unwrap();
        assert_eq!(rep.dual_payoff, ratio(1, 3));
        let lp = fractional_pcf_lp(&k3).unwrap();
        assert_eq!(lp.dual.normalized().unwrap().f, vec![ratio(1, 3); 3]);
        let one = duality_check(&ConflictInstance::proper_only(Graph::empty(1)), 10, 3).unwrap();
        assert_eq!((one.t_star, one.dual_payoff), (int(1), int(1)));
    }

    #[test]
    fn duality_on_all_small_graphs() {
        for n in 1..=4usize {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            for bits in 0u32..1 << pairs.len() {
                let edges: Vec<_> = pairs.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, e)| *e).collect();
                let g = Graph::from_edges(n, &edges).unwrap();
                let inst = ConflictInstance::with_neighborhoods(g);
                let rep = duality_check(&inst, 20, bits as u64).unwrap();
                assert_eq!(rep.verdict, Verdict::Pass, "n={n} edges={edges:?}");
            }
        }
    }

    #[test]
    fn sampler_examples() {
        let inst = ConflictInstance::proper_only(Graph::empty(6));
        let w = DualWeights { f: vec![ratio(1, 6); 6], g: vec![] };
        let run = weighted_stable_sampler(&inst, &w, &SamplerParams { eps: 0.1, seed: 0, p: Some(1.0) }).unwrap();
        assert_eq!(run.set, (0..6).collect::<Vec<_>>());
        assert_eq!(run.payoff, int(1));
        assert!(weighted_stable_sampler(&inst, &w, &SamplerParams { eps: 0.1, seed: 0, p: None }).is_err());
        let g = generate(GraphKind::RandomRegular { n: 50, k: 10 }, 42).unwrap();
        let inst = ConflictInstance::with_neighborhoods(g.clone());
        let w = DualWeights { f: vec![ratio(1, 100); 50], g: vec![ratio(1, 100); inst.hypergraph.edge_count()] };
        let params = SamplerParams { eps: 0.1, seed: 7, p: None };
        let run = weighted_stable_sampler(&inst, &w, &params).unwrap();
        assert!(is_stable(&g, &run.set));
        assert!(run.colors_used <= run.color_budget);
        assert_eq!(weighted_stable_sampler(&inst, &w, &params).unwrap(), run);
    }

    #[test]
    fn rounding_examples() {
        let c5 = ConflictInstance::proper_only(cycle(5));
        let r = round_to_ab(&c5, &fractional_pcf_lp(&c5).unwrap()).unwrap();
        assert!(r.verified);
        assert_eq!((r.coloring.a, r.coloring.b), (5, 2));
        let k3 = ConflictInstance::proper_only(complete(3));
        let r = round_to_ab(&k3, &fractional_pcf_lp(&k3).unwrap()).unwrap();
        assert_eq!((r.coloring.a, r.coloring.b), (3, 1));
        assert!(r.verified && r.trimmed.is_empty());
    }

    #[test]
    fn chernoff_examples() {
        let r = chernoff_diagnostic(1000, 0.5, 0.5, 2000, 1).unwrap();
        assert!(r.pass && r.empirical == 0.0);
        let r = chernoff_diagnostic(100, 0.1, 0.3, 2000, 2).unwrap();
        assert!((r.bound - 1.482).abs() < 1e-3);
        assert!(r.pass);
        assert!(chernoff_diagnostic(10, 0.5, 1.0, 10, 0).is_err());
    }

    fn small_instance() -> impl Strategy<Value = ConflictInstance> {
        (1usize..7, 0.1f64..0.8, any::<u64>(), any::<bool>()).prop_map(|(n, p, seed, nb)| {
            let g = generate(GraphKind::Gnp { n, p }, seed).unwrap();
            if nb {
                ConflictInstance::with_neighborhoods(g)
            } else {
                ConflictInstance::proper_only(g)
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn lp_is_below_integral_optimum(inst in small_instance()) {
            let lp = fractional_pcf_lp(&inst).unwrap();
            let chi = exact_chi_pcf(&inst, &SolverConfig::default()).unwrap();
            prop_assert!(lp.optimum <= int(chi.upper as i64));
        }

        #[test]
        fn verified_rounding_matches_optimum(inst in small_instance()) {
            let lp = fractional_pcf_lp(&inst).unwrap();
            let r = round_to_ab(&inst, &lp).unwrap();
            if r.verified {
                prop_assert!(is_fractional_pcf(&inst, &r.coloring).unwrap());
                prop_assert_eq!(ratio(r.coloring.a as i64, r.coloring.b as i64), lp.optimum);
            }
        }

        #[test]
        fn sampler_output_is_stable(seed in any::<u64>(), eps in 0.05f64..0.9) {
            let g = generate(GraphKind::Gnp { n: 30, p: 0.2 }, seed).unwrap();
            prop_assume!(g.max_degree() >= 2);
            let inst = ConflictInstance::with_neighborhoods(g.clone());
            let w = DualWeights { f: vec![int(1); 30], g: vec![int(1); inst.hypergraph.edge_count()] };
            let run = weighted_stable_sampler(&inst, &w, &SamplerParams { eps, seed, p: None }).unwrap();
            prop_assert!(is_stable(&g, &run.set));
        }

        #[test]
        fn stable_enumeration_matches_brute_force(inst in small_instance()) {
            let sys = enumerate_stable_sets(&inst).unwrap();
            prop_assert_eq!(sys.len(), brute_stable_count(&inst.graph));
        }
    }

    #[test]
    fn hypergraph_rows_use_exact_meeting() {
        let h = Hypergraph::new(3, vec![vec![0, 1, 2]]).unwrap();
        let inst = ConflictInstance::new(Graph::empty(3), h).unwrap();
        // Full set at 2/3 plus each singleton at 1/3; dual f = 1/3, g = 2/3.
        let lp = fractional_pcf_lp(&inst).unwrap();
        assert_eq!(lp.optimum, ratio(5, 3));
        assert_eq!(lp.dual.g, vec![ratio(2, 3)]);
    }
}
