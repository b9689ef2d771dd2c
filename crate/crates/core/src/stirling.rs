//! Exact associated Stirling numbers, the exact list-size sums built from them,
//! closed-form upper bounds for those sums, and the list-size calculators.
//!
//! `S_t(d, i)` counts partitions of `{1..d}` into `i` blocks of size at least `t`.
//! Exact quantities are `BigUint`/`BigRational`; anything involving `e`, logs or
//! irrational powers is evaluated as [`Ext`] and compared with a margin.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::{certify_le, Ext, Verdict};
use crate::graph::ConflictInstance;
use crate::rational::{self, int, ratio};
use crate::surd::Surd;

/// Relative margin for verdicts that involve transcendental constants.
pub const BOUND_MARGIN: f64 = 1e-9;

/// Rows the shared tables grow to in one step once touched.
pub const DEFAULT_MAX_D: usize = 500;

/// Rows `0..=max_d` of `S_t(d, i)`, row `d` holding `i = 0..=d/t`.
#[derive(Debug, Clone)]
pub struct StirlingTable {
    t: usize,
    rows: Vec<Vec<BigUint>>,
}

impl StirlingTable {
    pub fn new(t: usize, max_d: usize) -> Self {
        assert!(t >= 1, "part size bound must be at least 1");
        let mut table = StirlingTable {
            t,
            rows: vec![vec![BigUint::one()]],
        };
        table.extend_to(max_d);
        table
    }

    fn extend_to(&mut self, max_d: usize) {
        let t = self.t;
        for d in self.rows.len()..=max_d {
            let binom = binomial(d - 1, t - 1);
            let row: Vec<BigUint> = (0..=d / t)
                .map(|i| {
                    if i == 0 {
                        return BigUint::zero();
                    }
                    let mut v = self.get(d - 1, i) * BigUint::from(i);
                    if d >= t {
                        v += &binom * self.get(d - t, i - 1);
                    }
                    v
                })
                .collect();
            self.rows.push(row);
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn max_d(&self) -> usize {
        self.rows.len() - 1
    }

    /// `S_t(d, i)`; zero outside the support. Panics if `d > max_d`.
    pub fn get(&self, d: usize, i: usize) -> BigUint {
        self.rows[d].get(i).cloned().unwrap_or_default()
    }

    pub fn row(&self, d: usize) -> &[BigUint] {
        &self.rows[d]
    }
}

fn cache() -> &'static Mutex<HashMap<usize, Arc<StirlingTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<StirlingTable>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Shared, lazily grown table covering at least rows `0..=max_d`.
pub fn shared_table(t: usize, max_d: usize) -> Arc<StirlingTable> {
    let mut guard = cache().lock().expect("stirling cache poisoned");
    let entry = guard
        .entry(t)
        .or_insert_with(|| Arc::new(StirlingTable::new(t, 0)));
    if entry.max_d() < max_d {
        let mut grown = (**entry).clone();
        let step = if t == 1 { max_d } else { DEFAULT_MAX_D };
        grown.extend_to(max_d.max(step));
        *entry = Arc::new(grown);
    }
    Arc::clone(entry)
}

pub fn stirling_assoc(t: usize, d: usize, i: usize) -> Result<BigUint> {
    if t == 0 {
        return Err(Error::Param("part size bound t must be at least 1".into()));
    }
    Ok(shared_table(t, d).get(d, i))
}

/// Largest `d` accepted by the enumeration oracle.
pub const BRUTE_FORCE_MAX_D: usize = 12;

/// Counts of partitions of `{1..d}` into blocks of size at least `t`, indexed by block count.
pub fn brute_force_row(t: usize, d: usize) -> Result<Vec<u64>> {
    if d > BRUTE_FORCE_MAX_D {
        return Err(Error::TooLarge(format!(
            "brute-force enumeration limited to d <= {BRUTE_FORCE_MAX_D}, got {d}"
        )));
    }
    if t == 0 {
        return Err(Error::Param("part size bound t must be at least 1".into()));
    }
    let mut counts = vec![0u64; d + 1];
    // Restricted growth strings: element k joins an existing block or opens the next one.
    fn rec(k: usize, d: usize, blocks: usize, t: usize, sizes: &mut [usize], counts: &mut [u64]) {
        if k == d {
            if sizes[..blocks].iter().all(|&s| s >= t) {
                counts[blocks] += 1;
            }
            return;
        }
        let deficit: usize = sizes[..blocks].iter().map(|&s| t.saturating_sub(s)).sum();
        if deficit > d - k {
            return;
        }
        for b in 0..=blocks {
            sizes[b] += 1;
            rec(k + 1, d, blocks.max(b + 1), t, sizes, counts);
            sizes[b] -= 1;
        }
    }
    let mut sizes = vec![0usize; d + 1];
    rec(0, d, 0, t, &mut sizes, &mut counts);
    Ok(counts)
}

pub fn brute_force_stirling(t: usize, d: usize, i: usize) -> Result<BigUint> {
    let row = brute_force_row(t, d)?;
    Ok(BigUint::from(row.get(i).copied().unwrap_or(0)))
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc = acc * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    acc
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

fn big(x: BigUint) -> BigRational {
    rational::from_biguint(&x)
}

fn check_beta(beta: &BigRational) -> Result<()> {
    if !beta.is_positive() {
        return Err(Error::Param(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

/// `sum_{i=1}^{floor(d/part_min)} S_{part_min}(d, i) * beta^(i-d+1)`, exactly.
pub fn pcf_sum_exact(d: usize, beta: &BigRational, part_min: usize) -> Result<BigRational> {
    check_beta(beta)?;
    if part_min == 0 {
        return Err(Error::Param("part size bound must be at least 1".into()));
    }
    let table = shared_table(part_min, d);
    Ok(partial_sum(&table, d, beta, 1, d / part_min))
}

/// `sum_{i=lo}^{hi} S(d, i) * beta^(i-d+1)` over the given table.
fn partial_sum(table: &StirlingTable, d: usize, beta: &BigRational, lo: usize, hi: usize) -> BigRational {
    let mut sum = BigRational::zero();
    for i in lo.max(1)..=hi {
        sum += big(table.get(d, i)) * rational::powi(beta, i as i64 - d as i64 + 1);
    }
    sum
}

/// The two counting upper bounds on `S_2(d, i)` and their minimum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoBasic {
    /// Leaders-and-followers bound `C(d,i) i^(d-i) 2^(-i)`.
    pub bound1: BigRational,
    /// Pairs-and-triples bound, including the perfect-matching term when `d` is even.
    pub bound2: BigRational,
    pub min: BigRational,
}

pub fn bound_two_basic(d: usize, i: usize) -> Result<TwoBasic> {
    if i == 0 || 2 * i > d {
        return Err(Error::Param(format!("need 1 <= i <= d/2, got d={d}, i={i}")));
    }
    let bound1 =
        big(binomial(d, i) * BigUint::from(i).pow((d - i) as u32)) / big(BigUint::one() << i);

    let mut bound2 = BigRational::zero();
    if d % 2 == 0 {
        bound2 += big(factorial(d)) / big(factorial(d / 2) * (BigUint::one() << (d / 2)));
    }
    for j in (3 * i).saturating_sub(d)..i {
        let pairs = binomial(d, 2 * j) * factorial(2 * j) / (factorial(j) * (BigUint::one() << j));
        let m = i - j;
        let triples = binomial(d - 2 * j, 3 * m) * factorial(3 * m)
            / (factorial(m) * BigUint::from(6u32).pow(m as u32));
        let rest = BigUint::from(m).pow((d - 2 * j - 3 * m) as u32);
        bound2 += big(pairs * triples * rest);
    }
    let min = bound1.clone().min(bound2.clone());
    Ok(TwoBasic { bound1, bound2, min })
}

/// `beta * (d/beta)^ceil(d/2) / (1 - d/beta)`, requiring `d < beta`.
pub fn bound_simple(d: usize, beta: &BigRational) -> Result<BigRational> {
    check_beta(beta)?;
    let x = int(d as i64) / beta;
    if x >= BigRational::one() {
        return Err(Error::Precondition(format!("need d < beta, got d={d}, beta={beta}")));
    }
    Ok(beta * rational::powi(&x, d.div_ceil(2) as i64) / (BigRational::one() - x))
}

/// Parameters shared by the range-split bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundParams {
    pub r: BigRational,
    pub beta: BigRational,
    pub eps: BigRational,
    pub c: BigRational,
    pub d: usize,
}

/// The three `(eps, c)` pairs matching the three palette regimes.
pub fn standard_eps_c() -> [(BigRational, BigRational); 3] {
    [
        (ratio(3275413, 5000000), ratio(16377, 50000)),
        (ratio(2, 3), ratio(409, 1250)),
        (ratio(4, 5), ratio(8, 25)),
    ]
}

impl BoundParams {
    fn check_common(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Precondition("d must be positive".into()));
        }
        if !self.r.is_positive() {
            return Err(Error::Precondition("R must be positive".into()));
        }
        if int(self.d as i64) > self.r {
            return Err(Error::Precondition(format!(
                "need d <= R, got d={}, R={}",
                self.d, self.r
            )));
        }
        if !(self.eps.is_positive() && self.eps < BigRational::one()) {
            return Err(Error::Precondition(format!("need 0 < eps < 1, got {}", self.eps)));
        }
        if !(self.c.is_positive() && &self.c * int(2) < self.eps) {
            return Err(Error::Precondition(format!("need 0 < c < eps/2, got c={}", self.c)));
        }
        if &self.eps * &self.r > self.beta || self.beta > self.r {
            return Err(Error::Precondition(format!(
                "need eps*R <= beta <= R, got beta={}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Exact partial sum over `1 <= i <= c d` against its closed-form bound.
#[derive(Debug, Clone)]
pub struct LowerSum {
    pub partial: BigRational,
    pub rhs: BigRational,
    pub verdict: Verdict,
    /// `ln(R^3.5) / ln(2 eps / (eps + 2c))`.
    pub threshold: Ext,
    /// Once `d` reaches the threshold: whether `partial <= R^(-1/2) / 2` holds exactly.
    pub tail_ok: Option<bool>,
}

pub fn bound_lower_sum(p: &BoundParams) -> Result<LowerSum> {
    p.check_common()?;
    let d = p.d;
    let hi = rational::floor_to_i64(&(&p.c * int(d as i64))).max(0) as usize;
    let table = shared_table(2, d);
    let partial = partial_sum(&table, d, &p.beta, 1, hi.min(d / 2));
    let base = ratio(1, 2) + &p.c / &p.eps;
    let rhs = int((d * d) as i64) * &p.beta / int(2) * rational::powi(&base, d as i64);
    let verdict = if partial <= rhs { Verdict::Pass } else { Verdict::Fail };
    let q = Ext::from_ratio(&(&p.eps * int(2) / (&p.eps + &p.c * int(2))));
    let threshold = &(&Ext::parse("3.5") * &Ext::from_ratio(&p.r).ln()) / &q.ln();
    let tail_ok = (Ext::from_i64(d as i64) >= threshold)
        .then(|| &partial * &partial * int(4) * &p.r <= BigRational::one());
    Ok(LowerSum {
        partial,
        rhs,
        verdict,
        threshold,
        tail_ok,
    })
}

/// Exact partial sum over `c d <= i <= d/2` against its closed-form bound.
#[derive(Debug, Clone)]
pub struct UpperSum {
    pub partial: BigRational,
    pub rhs: Ext,
    pub verdict: Verdict,
    /// Larger of the two `d` thresholds past which the sum is at most `R^(-1/2)/2`;
    /// `None` when `eps^(1-c) <= 0.7524` makes one of them infinite.
    pub threshold: Option<Ext>,
    pub tail_ok: Option<bool>,
}

pub fn bound_upper_sum(p: &BoundParams) -> Result<UpperSum> {
    p.check_common()?;
    if p.r < int(50) {
        return Err(Error::Precondition(format!("need R >= 50, got {}", p.r)));
    }
    if p.eps < ratio(3, 5) {
        return Err(Error::Precondition(format!("need eps >= 0.6, got {}", p.eps)));
    }
    if p.c < ratio(3, 10) {
        return Err(Error::Precondition(format!("need c >= 0.3, got {}", p.c)));
    }
    let d = p.d;
    let lo = rational::ceil_to_i64(&(&p.c * int(d as i64))).max(1) as usize;
    let table = shared_table(2, d);
    let partial = partial_sum(&table, d, &p.beta, lo, d / 2);

    let r = Ext::from_ratio(&p.r);
    let eps = Ext::from_ratio(&p.eps);
    let one_minus_c = Ext::from_ratio(&(BigRational::one() - &p.c));
    let dd = Ext::from_i64(d as i64);
    let four = Ext::from_i64(4);
    let c7524 = Ext::parse("0.7524");
    let first = &(&r.powi(3) / &four) * &Ext::parse("0.9126").powi(d);
    let inner = &(&Ext::one() / &eps).powf(&one_minus_c) * &c7524;
    let second = &(&dd.powi(4) / &four) * &inner.powi(d);
    let rhs = &first + &second;
    let verdict = certify_le(&Ext::from_ratio(&partial), &rhs, BOUND_MARGIN);

    let gap = &eps.powf(&one_minus_c) / &c7524;
    let threshold = (gap > Ext::one()).then(|| {
        let ln_r = r.ln();
        let t1 = &(&Ext::parse("4.5") * &ln_r) / &gap.ln();
        let t2 = &(&Ext::parse("3.5") * &ln_r) / &Ext::parse("1.09577").ln();
        t1.max(&t2)
    });
    let tail_ok = threshold
        .as_ref()
        .filter(|t| dd >= **t)
        .map(|_| &partial * &partial * int(4) * &p.r <= BigRational::one());
    Ok(UpperSum {
        partial,
        rhs,
        verdict,
        threshold,
        tail_ok,
    })
}

/// One exact term compared against its closed-form estimate.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub lhs: BigRational,
    pub rhs: Ext,
    pub verdict: Verdict,
}

/// The all-triples term `C(d,3i) (3i)!/(i! 6^i) i^(d-3i) beta^(i-d+1)`
/// against `(beta d / e) (d/beta)^(d-i) 0.549474^d`.
pub fn estimate_j0(d: usize, i: usize, beta: &BigRational) -> Result<Estimate> {
    check_beta(beta)?;
    if i == 0 || 3 * i > d {
        return Err(Error::Precondition(format!("need 1 <= i <= d/3, got d={d}, i={i}")));
    }
    let count = binomial(d, 3 * i) * factorial(3 * i)
        / (factorial(i) * BigUint::from(6u32).pow(i as u32))
        * BigUint::from(i).pow((d - 3 * i) as u32);
    let lhs = big(count) * rational::powi(beta, i as i64 - d as i64 + 1);
    let b = Ext::from_ratio(beta);
    let dd = Ext::from_i64(d as i64);
    let rhs = &(&(&b * &dd) / &Ext::e())
        * &(&(&dd / &b).powi(d - i) * &Ext::parse("0.549474").powi(d));
    let verdict = certify_le(&Ext::from_ratio(&lhs), &rhs, BOUND_MARGIN);
    Ok(Estimate { lhs, rhs, verdict })
}

/// The no-leftover term with `d - 3i + j = 0` against `(d beta / e) 0.9126^d`.
pub fn estimate_matching_tail(d: usize, i: usize, j: usize, beta: &BigRational) -> Result<Estimate> {
    check_beta(beta)?;
    if !(i > j && j > 0 && d + j == 3 * i) {
        return Err(Error::Precondition(format!(
            "need i > j > 0 and d - 3i + j = 0, got d={d}, i={i}, j={j}"
        )));
    }
    if beta * int(5) < int(3 * d as i64) {
        return Err(Error::Precondition(format!("need beta >= 0.6 d, got beta={beta}")));
    }
    let m = i - j;
    let count = factorial(d)
        / (factorial(j) * (BigUint::one() << j) * factorial(m) * BigUint::from(6u32).pow(m as u32));
    let lhs = big(count) * rational::powi(beta, i as i64 - d as i64 + 1);
    let dd = Ext::from_i64(d as i64);
    let rhs = &(&(&dd * &Ext::from_ratio(beta)) / &Ext::e()) * &Ext::parse("0.9126").powi(d);
    let verdict = certify_le(&Ext::from_ratio(&lhs), &rhs, BOUND_MARGIN);
    Ok(Estimate { lhs, rhs, verdict })
}

/// Which `d` range and hypotheses a sum certification uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClmVariant {
    /// `3 <= d <= beta^(19/20)` with `beta >= max(0.6R, 600)`, `0.6R >= 14`, `R >= 750`.
    Full,
    /// `3 <= d <= 9` with `beta >= 0.6R`, `R >= 750`.
    Clm0,
    /// `10 <= d <= beta^(2/3)` with `beta >= 0.6R >= 14`.
    Clm1a,
    /// `beta^(2/3) <= d <= beta^(19/20)` with `beta >= max(0.6R, 600)`, `R >= 750`.
    Clm1b,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClmRow {
    pub d: usize,
    pub sum: BigRational,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClmReport {
    pub variant: ClmVariant,
    pub r: BigRational,
    pub beta: BigRational,
    pub d_lo: usize,
    pub d_hi: usize,
    pub rows: Vec<ClmRow>,
    pub first_failure: Option<usize>,
    pub all_pass: bool,
}

/// Largest integer `d >= 0` with `d^q <= x^p`, for rational `x > 0`.
pub fn floor_root_pow(x: &BigRational, p: u32, q: u32) -> usize {
    let (num, den) = (x.numer().pow(p), x.denom().pow(p));
    let ok = |d: usize| BigInt::from(d).pow(q) * &den <= num;
    let (mut lo, mut hi) = (0usize, 1usize);
    while ok(hi) {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Certifies `sum_i S_2(d,i) beta^(i-d+1) <= R^(-1/2)` for every `d` in the
/// variant's range capped at `d_max`, via the squared integer comparison
/// `N^2 R_num <= p^(2(d-1)) R_den` with `beta = p/q` and
/// `N = sum_i S_2(d,i) p^i q^(d-1-i)`.
pub fn verify_clm1(
    r: &BigRational,
    beta: &BigRational,
    d_max: usize,
    variant: ClmVariant,
) -> Result<ClmReport> {
    check_beta(beta)?;
    let six_tenths_r = r * ratio(3, 5);
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!("{what} fails (R={r}, beta={beta})")))
        }
    };
    let (d_lo, d_cap) = match variant {
        ClmVariant::Full => {
            need(*beta >= six_tenths_r, "beta >= 0.6R")?;
            need(six_tenths_r >= int(14), "0.6R >= 14")?;
            need(*beta >= int(600), "beta >= 600")?;
            need(*r >= int(750), "R >= 750")?;
            (3, floor_root_pow(beta, 19, 20))
        }
        ClmVariant::Clm0 => {
            need(*beta >= six_tenths_r, "beta >= 0.6R")?;
            need(*r >= int(750), "R >= 750")?;
            (3, 9)
        }
        ClmVariant::Clm1a => {
            need(*beta >= six_tenths_r, "beta >= 0.6R")?;
            need(six_tenths_r >= int(14), "0.6R >= 14")?;
            (10, floor_root_pow(beta, 2, 3))
        }
        ClmVariant::Clm1b => {
            need(*beta >= six_tenths_r, "beta >= 0.6R")?;
            need(*beta >= int(600), "beta >= 600")?;
            need(*r >= int(750), "R >= 750")?;
            let below = floor_root_pow(beta, 2, 3);
            // Smallest d with d^3 >= beta^2.
            let exact = BigInt::from(below).pow(3) * beta.denom().pow(2) == beta.numer().pow(2);
            (if exact { below } else { below + 1 }, floor_root_pow(beta, 19, 20))
        }
    };
    let d_hi = d_cap.min(d_max);
    let table = shared_table(2, d_hi.max(d_lo));
    let (p, q) = (beta.numer().clone(), beta.denom().clone());
    let (rn, rd) = (r.numer().clone(), r.denom().clone());
    let mut rows: Vec<ClmRow> = (d_lo..=d_hi)
        .into_par_iter()
        .map(|d| {
            let mut n = BigInt::zero();
            for i in 1..=d / 2 {
                n += BigInt::from(table.get(d, i)) * p.pow(i as u32) * q.pow((d - 1 - i) as u32);
            }
            let pass = &n * &n * &rn <= p.pow(2 * (d as u32 - 1)) * &rd;
            let sum = BigRational::new(n, p.pow(d as u32 - 1));
            ClmRow { d, sum, pass }
        })
        .collect();
    rows.sort_by_key(|row| row.d);
    let first_failure = rows.iter().find(|row| !row.pass).map(|row| row.d);
    Ok(ClmReport {
        variant,
        r: r.clone(),
        beta: beta.clone(),
        d_lo,
        d_hi,
        all_pass: first_failure.is_none(),
        first_failure,
        rows,
    })
}

/// `max_v Delta(G) + beta + sum_{e ni v} sum_i S_{t+1}(|e|, i) beta^(i-|e|+1)`.
pub fn required_list_size(inst: &ConflictInstance, beta: &BigRational, t: usize) -> Result<BigRational> {
    check_beta(beta)?;
    if t == 0 {
        return Err(Error::Param("multiplicity bound t must be at least 1".into()));
    }
    let h = &inst.hypergraph;
    let edge_terms: Vec<BigRational> = h
        .edges()
        .iter()
        .map(|e| pcf_sum_exact(e.len(), beta, t + 1))
        .collect::<Result<_>>()?;
    let worst = (0..inst.n())
        .map(|v| h.incident(v).iter().map(|&k| &edge_terms[k]).sum::<BigRational>())
        .max()
        .unwrap_or_else(BigRational::zero);
    Ok(int(inst.graph.max_degree() as i64) + beta + worst)
}

/// Palette size for graphs of maximum degree `Delta`, and the regimes in which it is guaranteed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AMain {
    pub a: BigInt,
    /// `Delta >= 1.24811e8` and `0.6550826 Delta <= beta <= Delta`.
    pub regime_low: bool,
    /// `Delta >= 8000` and `2/3 Delta <= beta <= Delta`.
    pub regime_mid: bool,
    /// `Delta >= 750` and `0.8 Delta <= beta <= Delta`.
    pub regime_high: bool,
}

impl AMain {
    pub fn any_regime(&self) -> bool {
        self.regime_low || self.regime_mid || self.regime_high
    }
}

/// `ceil(Delta + beta + sqrt(Delta))`, exactly.
pub fn a_main(delta: u64, beta: &BigRational) -> Result<AMain> {
    check_beta(beta)?;
    let dr = BigRational::from_integer(delta.into());
    let value = &Surd::sqrt_of(BigRational::one(), &dr)? + &(&dr + beta);
    let in_regime =
        |min_delta: u64, coef: BigRational| delta >= min_delta && *beta <= dr && *beta >= coef * &dr;
    Ok(AMain {
        a: value.ceil(),
        regime_low: in_regime(124_811_000, ratio(3275413, 5000000)),
        regime_mid: in_regime(8000, ratio(2, 3)),
        regime_high: in_regime(750, ratio(4, 5)),
    })
}

fn check_rank_structure(
    inst: &ConflictInstance,
    rank_ok: impl Fn(usize) -> bool,
    rank_desc: &str,
) -> Result<()> {
    let h = &inst.hypergraph;
    if let Some(e) = h.edges().iter().find(|e| e.len() < 3) {
        return Err(Error::Hypothesis(format!(
            "every hyperedge needs at least 3 vertices; found one of size {}",
            e.len()
        )));
    }
    if !rank_ok(h.rank()) {
        return Err(Error::Hypothesis(format!("rank {} exceeds {rank_desc}", h.rank())));
    }
    Ok(())
}

/// The two fixed-rank palette formulas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixedRankBranch {
    /// Requires `R >= (1 + 1/eps) r`.
    General { eps: BigRational },
    /// Requires `r <= 4`.
    RankAtMostFour,
}

/// Palette size for hypergraphs of rank at most `r`, with `R` given exactly in `Q(sqrt D)`.
pub fn a_fixed_rank(
    inst: &ConflictInstance,
    big_r: &Surd,
    r: u64,
    branch: &FixedRankBranch,
) -> Result<BigInt> {
    check_rank_structure(inst, |k| k as u64 <= r, &format!("r = {r}"))?;
    if big_r.signum() != Ordering::Greater {
        return Err(Error::Param("R must be positive".into()));
    }
    let delta_g = int(inst.graph.max_degree() as i64);
    let h = &inst.hypergraph;
    match branch {
        FixedRankBranch::General { eps } => {
            if !eps.is_positive() {
                return Err(Error::Param(format!("eps must be positive, got {eps}")));
            }
            let needed = (BigRational::one() + BigRational::one() / eps) * int(r as i64);
            if big_r.cmp_rational(&needed) == Ordering::Less {
                return Err(Error::Hypothesis(format!("need R >= (1 + 1/eps) r = {needed}")));
            }
            let mut worst = Surd::int(0);
            for v in 0..inst.n() {
                let Some(mr) = h.min_rank_at(v) else { continue };
                let k = mr.div_ceil(2) as i64;
                let coef = int(h.degree(v) as i64) * rational::powi(&int(r as i64), k);
                let term = &big_r.powi(1 - k)? * &coef;
                if term.try_add(&-&worst)?.signum() == Ordering::Greater {
                    worst = term;
                }
            }
            let value = big_r.try_add(&(&worst * &(BigRational::one() + eps)))?;
            Ok((&value + &delta_g).ceil())
        }
        FixedRankBranch::RankAtMostFour => {
            if r > 4 {
                return Err(Error::Hypothesis(format!("need r <= 4, got {r}")));
            }
            Ok(fixed_rank_four_value(&delta_g, &int(h.max_degree() as i64), big_r)?.ceil())
        }
    }
}

/// `Delta(G) + R + Delta(H) (3/R + 1/R^2)` before the ceiling.
pub fn fixed_rank_four_value(delta_g: &BigRational, delta_h: &BigRational, big_r: &Surd) -> Result<Surd> {
    let inv = big_r.recip()?;
    let inv2 = inv.try_mul(&inv)?;
    let per_vertex = (&inv * &int(3)).try_add(&inv2)?;
    Ok(&big_r.try_add(&(&per_vertex * delta_h))? + delta_g)
}

/// The palette `sqrt(30) Delta^(3/2) + Delta + 1/3` as an exact surd.
pub fn star_linear_palette(delta: u64) -> Result<Surd> {
    let d = int(delta as i64);
    let root = Surd::sqrt_of(d.clone(), &(&d * int(30)))?;
    Ok(&root + &(d + ratio(1, 3)))
}

/// `R = sqrt(7.5) Delta^(3/2)` as an exact surd.
pub fn star_linear_r(delta: u64) -> Result<Surd> {
    let d = int(delta as i64);
    Surd::sqrt_of(d.clone(), &(&d * ratio(15, 2)))
}

/// Log-space palette size for large-rank hypergraphs.
#[derive(Debug, Clone)]
pub struct AHyper {
    /// The formula value before the ceiling.
    pub value: Ext,
    /// The ceiling, when the value is small enough to resolve and not within `1e-30` of an integer.
    pub a: Option<BigInt>,
    /// Whether `R >= e^(5e6)`, the regime in which the palette is guaranteed.
    pub regime: bool,
}

pub fn a_hyper(inst: &ConflictInstance, big_r: &Ext, beta: &Ext) -> Result<AHyper> {
    if big_r <= &Ext::one() {
        return Err(Error::Param("R must exceed 1".into()));
    }
    check_rank_structure(inst, |k| Ext::from_i64(k as i64) <= *big_r, "R")?;
    let low = &Ext::parse("0.6550826") * big_r;
    if beta < &low || beta > big_r {
        return Err(Error::Hypothesis(format!(
            "need 0.6550826 R <= beta <= R (R={big_r}, beta={beta})"
        )));
    }
    let h = &inst.hypergraph;
    let ln_r = big_r.ln();
    let ln_beta = beta.ln();
    let ln2 = Ext::from_i64(2).ln();
    let floor_term = (&(&ln_r * &ln_r) * &(&Ext::one() - &Ext::parse("1e-8")).ln()).exp();
    let mut worst = Ext::zero();
    for v in 0..inst.n() {
        let Some(mr) = h.min_rank_at(v) else { continue };
        let k = mr.div_ceil(2) as i64;
        let log_first =
            &(&ln2 + &(&Ext::from_i64(1 - k) * &ln_beta)) + &(&Ext::from_i64(2 * k) * &ln_r.ln());
        let term = &Ext::from_i64(h.degree(v) as i64) * &log_first.exp().max(&floor_term);
        worst = worst.max(&term);
    }
    let value = &(&Ext::from_i64(inst.graph.max_degree() as i64) + beta) + &worst;
    let tiny = BigRational::new(BigInt::one(), BigInt::from(10).pow(30));
    let a = value
        .to_ratio()
        .filter(|x| x.abs() < int(2).pow(120))
        .and_then(|x| {
            let c = x.ceil();
            let gap = &c - &x;
            (gap.is_zero() || (gap > tiny && gap < BigRational::one() - &tiny))
                .then(|| c.to_integer())
        });
    let regime = ln_r >= Ext::from_i64(5_000_000);
    Ok(AHyper { value, a, regime })
}

/// Outcome of checking `n^n / e^(n-1) <= n! <= n^(n+1) / e^(n-1)` for `1 <= n <= n_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorialReport {
    pub n_max: usize,
    pub verdict: Verdict,
    pub failures: Vec<usize>,
    pub inconclusive: Vec<usize>,
}

/// Compares in log space, with `ln n!` accumulated as an exact-order sum of logs.
pub fn factorial_bounds_check(n_max: usize) -> Result<FactorialReport> {
    if n_max == 0 {
        return Err(Error::Param("n_max must be at least 1".into()));
    }
    let mut failures = Vec::new();
    let mut inconclusive = Vec::new();
    let mut ln_fact = Ext::zero();
    for n in 1..=n_max {
        let ln_n = Ext::from_i64(n as i64).ln();
        ln_fact = &ln_fact + &ln_n;
        if n == 1 {
            // All three sides equal 1.
            continue;
        }
        let nn = Ext::from_i64(n as i64);
        let shift = Ext::from_i64(n as i64 - 1);
        let lower = &(&nn * &ln_n) - &shift;
        let upper = &(&(&nn + &Ext::one()) * &ln_n) - &shift;
        let v = certify_le(&lower, &ln_fact, BOUND_MARGIN)
            .and(certify_le(&ln_fact, &upper, BOUND_MARGIN));
        match v {
            Verdict::Pass => {}
            Verdict::Fail => failures.push(n),
            Verdict::Inconclusive => inconclusive.push(n),
        }
    }
    let verdict = if !failures.is_empty() {
        Verdict::Fail
    } else if !inconclusive.is_empty() {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(FactorialReport {
        n_max,
        verdict,
        failures,
        inconclusive,
    })
}

pub fn factorial_f64(n: usize) -> f64 {
    factorial(n).to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, star_linear_hypergraph, Graph, GraphKind, Hypergraph};
    use proptest::prelude::*;

    fn n(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn small_values() {
        assert_eq!(stirling_assoc(2, 3, 1).unwrap(), n(1));
        assert_eq!(stirling_assoc(2, 4, 2).unwrap(), n(3));
        assert_eq!(stirling_assoc(2, 4, 1).unwrap(), n(1));
        assert_eq!(stirling_assoc(2, 5, 2).unwrap(), n(10));
        assert_eq!(stirling_assoc(2, 0, 0).unwrap(), n(1));
        assert_eq!(stirling_assoc(2, 5, 3).unwrap(), n(0));
        assert_eq!(stirling_assoc(1, 4, 0).unwrap(), n(0));
        assert!(stirling_assoc(0, 4, 1).is_err());
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_stirling(2, 2, 1).unwrap(), n(1));
        assert_eq!(brute_force_stirling(2, 6, 3).unwrap(), n(15));
        assert_eq!(brute_force_stirling(1, 4, 2).unwrap(), n(7));
        assert!(brute_force_stirling(2, 13, 3).is_err());
    }

    #[test]
    fn recurrence_matches_enumeration() {
        for t in 1..=3 {
            for d in 0..=10 {
                let row = brute_force_row(t, d).unwrap();
                for (i, &c) in row.iter().enumerate() {
                    assert_eq!(stirling_assoc(t, d, i).unwrap(), n(c), "t={t} d={d} i={i}");
                }
            }
        }
    }

    #[test]
    fn row_sums_count_singleton_free_partitions() {
        // Inclusion-exclusion over singleton blocks with Bell numbers from the Bell triangle.
        let mut bell = vec![1i64];
        let mut row = vec![1i64];
        for _ in 0..10 {
            let mut next = vec![*row.last().unwrap()];
            for x in &row {
                let v = next.last().unwrap() + x;
                next.push(v);
            }
            bell.push(next[0]);
            row = next;
        }
        for d in 2..=9usize {
            let mut total: i64 = 0;
            for k in 0..=d {
                let sign = if k % 2 == 0 { 1 } else { -1 };
                total += sign * binomial(d, k).to_i64().unwrap() * bell[d - k];
            }
            let sum: BigUint = (0..=d / 2).map(|i| stirling_assoc(2, d, i).unwrap()).sum();
            assert_eq!(sum, n(total as u64), "d={d}");
            let brute: u64 = brute_force_row(2, d).unwrap().iter().sum();
            assert_eq!(brute, total as u64);
        }
    }

    #[test]
    fn monotone_and_bounded_by_powers() {
        let t = shared_table(2, 40);
        for i in 1..=20usize {
            for d in 2 * i..40 {
                assert!(t.get(d, i) <= t.get(d + 1, i));
                assert!(t.get(d, i) <= BigUint::from(i).pow(d as u32));
            }
        }
    }

    #[test]
    fn pcf_sum_examples() {
        assert_eq!(pcf_sum_exact(3, &int(2), 2).unwrap(), ratio(1, 2));
        assert_eq!(pcf_sum_exact(4, &int(600), 2).unwrap(), ratio(1801, 360000));
        assert_eq!(pcf_sum_exact(1, &int(7), 2).unwrap(), int(0));
        assert!(pcf_sum_exact(3, &int(0), 2).is_err());
    }

    #[test]
    fn two_basic_examples() {
        let b = bound_two_basic(4, 2).unwrap();
        assert_eq!(b.bound1, int(6));
        assert!(b.min >= int(3));
        assert_eq!(bound_two_basic(2, 1).unwrap().bound2, int(1));
        assert_eq!(bound_two_basic(6, 3).unwrap().bound2, int(15));
        assert!(bound_two_basic(5, 3).is_err());
    }

    #[test]
    fn simple_bound_examples() {
        let v = bound_simple(3, &int(600)).unwrap();
        assert_eq!(v, ratio(3, 199));
        assert!(pcf_sum_exact(3, &int(600), 2).unwrap() <= v);
        assert_eq!(bound_simple(1, &int(2)).unwrap(), int(2));
        let v = bound_simple(10, &int(100)).unwrap();
        assert!((rational::to_f64(&v) - 0.0011111).abs() < 1e-6);
        assert!(pcf_sum_exact(10, &int(100), 2).unwrap() <= v);
        assert!(bound_simple(5, &int(5)).is_err());
    }

    #[test]
    fn simple_bound_is_sound_on_a_grid() {
        for d in 1..60usize {
            for beta in [d + 1, 2 * d, 5 * d, 100] {
                if beta <= d {
                    continue;
                }
                let beta = int(beta as i64);
                assert!(pcf_sum_exact(d, &beta, 2).unwrap() <= bound_simple(d, &beta).unwrap());
            }
        }
    }

    fn params(d: usize, r: i64, beta: BigRational, eps: BigRational, c: BigRational) -> BoundParams {
        BoundParams { r: int(r), beta, eps, c, d }
    }

    #[test]
    fn lower_sum_examples() {
        let p = params(20, 100, int(80), ratio(4, 5), ratio(8, 25));
        let l = bound_lower_sum(&p).unwrap();
        assert_eq!(l.rhs, int(16000) * rational::powi(&ratio(9, 10), 20));
        assert!((rational::to_f64(&l.rhs) - 1945.23).abs() < 0.01);
        assert!(l.verdict.is_pass());
        let edge = params(20, 100, int(80), ratio(4, 5), ratio(2, 5));
        assert!(bound_lower_sum(&edge).is_err());
        let p = params(240, 1000, int(800), ratio(4, 5), ratio(8, 25));
        let l = bound_lower_sum(&p).unwrap();
        assert!(l.threshold.to_f64() < 240.0);
        assert_eq!(l.tail_ok, Some(true));
    }

    #[test]
    fn upper_sum_examples() {
        let p = params(30, 100, int(80), ratio(4, 5), ratio(8, 25));
        assert!(bound_upper_sum(&p).unwrap().verdict.is_pass());
        assert!(bound_upper_sum(&params(50, 50, int(40), ratio(4, 5), ratio(8, 25))).is_ok());
        assert!(bound_upper_sum(&params(51, 50, int(40), ratio(4, 5), ratio(8, 25))).is_err());
        assert!(estimate_j0(30, 10, &int(30)).unwrap().verdict.is_pass());
        assert!(estimate_matching_tail(10, 4, 2, &int(6)).unwrap().verdict.is_pass());
        assert!(estimate_matching_tail(10, 4, 1, &int(6)).is_err());
    }

    #[test]
    fn clm1_examples() {
        let rep = verify_clm1(&int(750), &int(600), 3, ClmVariant::Full).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert!(rep.all_pass);
        assert_eq!(rep.rows[0].sum, ratio(1, 600));
        assert!(verify_clm1(&int(750), &int(750), 4, ClmVariant::Full).unwrap().all_pass);
        assert!(verify_clm1(&int(700), &int(600), 10, ClmVariant::Full).is_err());
        assert!(verify_clm1(&int(1000), &int(590), 10, ClmVariant::Full).is_err());
        assert_eq!(floor_root_pow(&int(600), 19, 20), 435);
        let a = verify_clm1(&int(750), &int(600), 1000, ClmVariant::Clm1a).unwrap();
        assert_eq!((a.d_lo, a.d_hi), (10, 71));
        let b = verify_clm1(&int(750), &int(600), 100, ClmVariant::Clm1b).unwrap();
        assert_eq!(b.d_lo, 72);
        assert!(a.all_pass && b.all_pass);
    }

    #[test]
    fn required_list_size_examples() {
        let h = Hypergraph::new(3, vec![vec![0, 1, 2]]).unwrap();
        let inst = ConflictInstance::new(Graph::empty(3), h).unwrap();
        assert_eq!(required_list_size(&inst, &int(2), 1).unwrap(), ratio(5, 2));
        let k3 = ConflictInstance::proper_only(generate(GraphKind::Complete { n: 3 }, 0).unwrap());
        assert_eq!(required_list_size(&k3, &int(1), 1).unwrap(), int(3));
        let c5 = ConflictInstance::with_neighborhoods(generate(GraphKind::Cycle { n: 5 }, 0).unwrap());
        assert_eq!(required_list_size(&c5, &int(2), 1).unwrap(), int(6));
    }

    #[test]
    fn a_calculators() {
        let m = a_main(750, &int(600)).unwrap();
        assert_eq!(m.a, BigInt::from(1378));
        assert!(m.regime_high && !m.regime_mid && !m.regime_low);
        let m = a_main(1, &int(1)).unwrap();
        assert_eq!(m.a, BigInt::from(3));
        assert!(!m.any_regime());
        for delta in [4u64, 9, 16] {
            let r = star_linear_r(delta).unwrap();
            let dh = int(delta as i64).pow(3) * ratio(5, 2);
            let v = fixed_rank_four_value(&int(delta as i64), &dh, &r).unwrap();
            assert_eq!(v, star_linear_palette(delta).unwrap());
        }
    }

    #[test]
    fn fixed_rank_checks_hypotheses() {
        let g = generate(GraphKind::Gnp { n: 12, p: 0.3 }, 5).unwrap();
        let delta = g.max_degree() as u64;
        let inst = ConflictInstance::new(g.clone(), star_linear_hypergraph(&g)).unwrap();
        let r = star_linear_r(delta).unwrap();
        let a = a_fixed_rank(&inst, &r, 4, &FixedRankBranch::RankAtMostFour).unwrap();
        assert!(a <= star_linear_palette(delta).unwrap().ceil());
        assert!(a_fixed_rank(&inst, &r, 3, &FixedRankBranch::RankAtMostFour).is_err());
        let nb = ConflictInstance::with_neighborhoods(g);
        assert!(a_fixed_rank(&nb, &r, 10, &FixedRankBranch::RankAtMostFour).is_err());
        let general = FixedRankBranch::General { eps: int(1) };
        assert!(a_fixed_rank(&inst, &Surd::int(100), 4, &general).unwrap() > BigInt::from(100));
        assert!(a_fixed_rank(&inst, &Surd::int(5), 4, &general).is_err());
    }

    #[test]
    fn hyper_calculator() {
        let g = generate(GraphKind::Cycle { n: 6 }, 0).unwrap();
        let h = Hypergraph::new(6, vec![vec![0, 1, 2], vec![2, 3, 4, 5]]).unwrap();
        let inst = ConflictInstance::new(g, h).unwrap();
        let out = a_hyper(&inst, &Ext::from_i64(1000), &Ext::from_i64(800)).unwrap();
        assert!(!out.regime);
        assert!(out.a.is_some());
        let huge = Ext::from_i64(5_000_001).exp();
        let out = a_hyper(&inst, &huge, &huge).unwrap();
        assert!(out.regime && out.a.is_none());
        assert!(a_hyper(&inst, &Ext::from_i64(1000), &Ext::from_i64(100)).is_err());
        let nb = ConflictInstance::with_neighborhoods(generate(GraphKind::Cycle { n: 6 }, 0).unwrap());
        assert!(a_hyper(&nb, &Ext::from_i64(1000), &Ext::from_i64(800)).is_err());
    }

    #[test]
    fn factorial_bounds() {
        let rep = factorial_bounds_check(1000).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(factorial_bounds_check(0).is_err());
        let e4 = std::f64::consts::E.powi(4);
        assert!(5f64.powi(5) / e4 <= factorial_f64(5) && factorial_f64(5) <= 5f64.powi(6) / e4);
    }

    proptest! {
        #[test]
        fn two_basic_bounds_are_sound(d in 2usize..40, frac in 0.0f64..1.0) {
            let i = 1 + ((d / 2 - 1) as f64 * frac) as usize;
            let b = bound_two_basic(d, i).unwrap();
            let exact = big(stirling_assoc(2, d, i).unwrap());
            prop_assert!(b.bound1 >= exact && b.bound2 >= exact);
        }

        #[test]
        fn clm_sums_stay_below_inverse_root(r in 750i64..1200, extra in 0i64..400, d in 3usize..60) {
            let beta = int(r) * ratio(3, 5) + int(extra);
            let beta = beta.max(int(600));
            let s = pcf_sum_exact(d, &beta, 2).unwrap();
            prop_assert!(&s * &s * int(r) <= BigRational::one());
        }
    }
}
