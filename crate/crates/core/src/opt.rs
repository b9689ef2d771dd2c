//! Verification of the two-variable bound `f(x, y) < 0.7524` and two small calculus facts.
//!
//! With `s = 1 - 2x` and `t = x - y` the function becomes `g(s, t)` on
//! `Omega = {0 < s < 1, 0 < t < min(s, (1 - s)/2)}`, where `log g` is strictly concave.
//! Its unique critical point comes from the root `r0` of `h(r)` with `t = r(2-r)/(r+2)`
//! and `s = r t`. Everything that decides a verdict is evaluated in [`Ext`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::{certify_le_abs, Ext, Verdict};

/// Required clearance for the `< 0.7524` verdict.
pub const OPT_MARGIN: f64 = 1e-6;
/// Distance kept from the boundary of `Omega` when sampling.
pub const BOUNDARY_INSET: f64 = 1e-9;

pub fn opt_bound() -> Ext {
    Ext::parse("0.7524")
}

/// Published upper bound on `log g(s0, t0)`.
pub fn log_g_bound() -> Ext {
    Ext::parse("-0.2845001")
}

/// A point in either coordinate system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "coords", rename_all = "lowercase")]
pub enum OptPoint {
    Xy { x: f64, y: f64 },
    St { s: f64, t: f64 },
}

impl OptPoint {
    pub fn st(self) -> (f64, f64) {
        match self {
            OptPoint::Xy { x, y } => (1.0 - 2.0 * x, x - y),
            OptPoint::St { s, t } => (s, t),
        }
    }

    pub fn xy(self) -> (f64, f64) {
        match self {
            OptPoint::Xy { x, y } => (x, y),
            OptPoint::St { s, t } => {
                let x = (1.0 - s) / 2.0;
                (x, x - t)
            }
        }
    }
}

pub fn in_xy_domain(x: f64, y: f64) -> bool {
    0.0 < x && x < 0.5 && y < x && y > (3.0 * x - 1.0).max(0.0)
}

pub fn in_st_domain(s: f64, t: f64) -> bool {
    0.0 < s && s < 1.0 && t > 0.0 && t < s.min((1.0 - s) / 2.0)
}

/// `log f(x, y)` from the original four-factor form.
pub fn log_f_xy(x: f64, y: f64) -> Result<Ext> {
    if !in_xy_domain(x, y) {
        return Err(Error::Precondition(format!("({x}, {y}) outside 0 < x < 1/2, max(3x-1, 0) < y < x")));
    }
    let (xe, ye) = (Ext::from_f64(x), Ext::from_f64(y));
    let a = &xe - &ye;
    let b = &(&Ext::one() - &(&Ext::from_i64(3) * &xe)) + &ye;
    let (ln_a, ln_b) = (a.ln(), b.ln());
    let first = &ln_a - &ln_b;
    let second = &(&(&Ext::from_i64(2) * &xe) - &ye)
        * &(&(&ln_b - &Ext::one()) - &(&Ext::from_i64(2) * &ln_a));
    let third = &a * &(&ln_b - &Ext::from_i64(6).ln());
    let fourth = &ye * &(&(&ln_b - &Ext::from_i64(2).ln()) - &ye.ln());
    Ok(&(&first + &second) + &(&third + &fourth))
}

pub fn f_xy(p: OptPoint) -> Result<f64> {
    let (x, y) = p.xy();
    Ok(log_f_xy(x, y)?.exp().to_f64())
}

/// `log g(s, t)` from the simplified product form.
pub fn log_g_st(s: f64, t: f64) -> Result<Ext> {
    if !in_st_domain(s, t) {
        return Err(Error::Precondition(format!("({s}, {t}) outside 0 < s < 1, 0 < t < min(s, (1-s)/2)")));
    }
    Ok(log_g_ext(&Ext::from_f64(s), &Ext::from_f64(t)))
}

fn log_g_ext(s: &Ext, t: &Ext) -> Ext {
    let one = Ext::one();
    let half = Ext::parse("0.5");
    let ln_2e = &Ext::from_i64(2).ln() + &one;
    let ln_3e = &Ext::from_i64(3).ln() + &one;
    let st = s - t;
    let u = &(&(&one - s) * &half) - t;
    let ln_t = t.ln();
    let mut acc = -(&st * &st.ln());
    acc = &acc - &(&half * &ln_2e);
    acc = &acc + &(s * &(&(&half * &ln_2e) + &ln_t));
    acc = &acc - &(t * &(&ln_3e + &(&Ext::from_i64(2) * &ln_t)));
    &acc - &(&u * &u.ln())
}

pub fn g_st(p: OptPoint) -> Result<f64> {
    let (s, t) = p.st();
    Ok(log_g_st(s, t)?.exp().to_f64())
}

/// Unchecked `f64` evaluation of `log g`, for screening only.
pub fn log_g_f64(s: f64, t: f64) -> f64 {
    let u = (1.0 - s) / 2.0 - t;
    let ln_2e = 2f64.ln() + 1.0;
    -(s - t) * (s - t).ln() + (s - 1.0) / 2.0 * ln_2e + s * t.ln()
        - t * (3f64.ln() + 1.0)
        - 2.0 * t * t.ln()
        - u * u.ln()
}

/// Closed-form `(d/ds, d/dt) log g`.
pub fn grad_log_g(s: f64, t: f64) -> [f64; 2] {
    let u = (1.0 - s) / 2.0 - t;
    [
        -(s - t).ln() + 2f64.ln() / 2.0 + t.ln() + u.ln() / 2.0,
        (s - t).ln() + s / t - (3f64.ln() + 1.0) - 2.0 * t.ln() + u.ln(),
    ]
}

fn grad_log_g_ext(s: &Ext, t: &Ext) -> [Ext; 2] {
    let half = Ext::parse("0.5");
    let u = &(&(&Ext::one() - s) * &half) - t;
    let (ln_st, ln_t, ln_u) = ((s - t).ln(), t.ln(), u.ln());
    let ds = &(&(&ln_t - &ln_st) + &(&half * &Ext::from_i64(2).ln())) + &(&half * &ln_u);
    let ln_3e = &Ext::from_i64(3).ln() + &Ext::one();
    let dt = &(&(&ln_st + &(s / t)) - &ln_3e) + &(&ln_u - &(&Ext::from_i64(2) * &ln_t));
    [ds, dt]
}

/// Closed-form second partials `[[gss, gst], [gst, gtt]]` of `log g`.
pub fn hessian_log_g(s: f64, t: f64) -> [[f64; 2]; 2] {
    let w = 1.0 - s - 2.0 * t;
    let gss = -1.0 / (s - t) - 1.0 / (2.0 * w);
    let gst = 1.0 / (s - t) + 1.0 / t - 1.0 / w;
    let gtt = -1.0 / (s - t) - s / (t * t) - 2.0 / t - 2.0 / w;
    [[gss, gst], [gst, gtt]]
}

/// Whether the Hessian of `log g` at `p` is negative definite.
pub fn hessian_negdef(p: OptPoint) -> Result<bool> {
    let (s, t) = p.st();
    if !in_st_domain(s, t) {
        return Err(Error::Precondition(format!("({s}, {t}) outside Omega")));
    }
    let [[a, b], [_, c]] = hessian_log_g(s, t);
    Ok(a < 0.0 && a * c - b * b > 0.0)
}

/// `h(r) = (r+2)(r-1)^3 e^r + 6e r(r-2)`.
pub fn h_r(r: &Ext) -> Ext {
    let one = Ext::one();
    let two = Ext::from_i64(2);
    let lead = &(&(r + &two) * &(r - &one).powi(3)) * &r.exp();
    let tail = &(&Ext::from_i64(6) * &Ext::e()) * &(r * &(r - &two));
    &lead + &tail
}

pub fn h_r_f64(r: f64) -> f64 {
    h_r(&Ext::from_f64(r)).to_f64()
}

/// `t = r(2-r)/(r+2)`.
pub fn t_of_r(r: &Ext) -> Ext {
    let two = Ext::from_i64(2);
    &(r * &(&two - r)) / &(r + &two)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: Ext,
    pub hi: Ext,
}

impl Bracket {
    pub fn width(&self) -> Ext {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Ext {
        &(&self.lo + &self.hi) / &Ext::from_i64(2)
    }

    /// Whether the bracket lies strictly inside `(lo, hi)` given as decimals.
    pub fn inside(&self, lo: &str, hi: &str) -> bool {
        Ext::parse(lo) < self.lo && self.hi < Ext::parse(hi)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub r0: Bracket,
    pub t0: Bracket,
    pub s0: Bracket,
    /// Upper bound on `log g(s0, t0)` from the tangent plane at the bracket centre.
    pub log_g_upper: Ext,
    /// `log_g_upper <= -0.2845001`.
    pub verdict: Verdict,
}

/// Bisection width for `r0`.
pub const CRITICAL_WIDTH: &str = "1e-30";

pub fn find_critical() -> Result<CriticalPoint> {
    let mut lo = Ext::parse("1.5");
    let mut hi = Ext::from_i64(2);
    if !(h_r(&lo).is_negative() && h_r(&hi) > Ext::zero()) {
        return Err(Error::Numeric("h does not change sign on [1.5, 2]".into()));
    }
    let width = Ext::parse(CRITICAL_WIDTH);
    while &hi - &lo > width {
        let mid = &(&lo + &hi) / &Ext::from_i64(2);
        if h_r(&mid).is_negative() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // t is decreasing in r on the bracket, and s = r t is a product of positives.
    let t0 = Bracket { lo: t_of_r(&hi), hi: t_of_r(&lo) };
    let s0 = Bracket { lo: &lo * &t0.lo, hi: &hi * &t0.hi };
    let r0 = Bracket { lo, hi };

    // Concavity: log g(z*) <= log g(c) + |grad(c)| * |z* - c| for the bracket centre c.
    let (sc, tc) = (s0.mid(), t0.mid());
    let [gs, gt] = grad_log_g_ext(&sc, &tc);
    let reach = &s0.width() + &t0.width();
    let log_g_upper = &log_g_ext(&sc, &tc) + &(&(&gs.abs() + &gt.abs()) * &reach);
    let verdict = certify_le_abs(&log_g_upper, &log_g_bound(), 1e-12);
    Ok(CriticalPoint { r0, t0, s0, log_g_upper, verdict })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridMax {
    pub step: f64,
    pub s: f64,
    pub t: f64,
    pub value: Ext,
    pub log_value: Ext,
    /// `value < 0.7524` with clearance [`OPT_MARGIN`].
    pub verdict: Verdict,
    /// Euclidean distance from the located maximum to the centre of `(s0, t0)`.
    pub distance_to_critical: f64,
    pub near_critical: bool,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn golden_max(mut a: f64, mut b: f64, iters: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn t_range(s: f64) -> (f64, f64) {
    (BOUNDARY_INSET, s.min((1.0 - s) / 2.0) - BOUNDARY_INSET)
}

/// Grid screening of `g` over `Omega` followed by nested golden-section refinement
/// in a `2 step` window around the best grid point.
pub fn grid_max_g(step: f64, refine: usize) -> Result<GridMax> {
    if !(step > 0.0 && step <= 1e-2) {
        return Err(Error::Param(format!("need 0 < step <= 0.01, got {step}")));
    }
    let rows = (1.0 / step).ceil() as usize;
    let (bs, bt, _) = (1..rows)
        .into_par_iter()
        .map(|i| {
            let s = i as f64 * step;
            let (t_lo, t_hi) = t_range(s);
            let mut best = (s, f64::NAN, f64::NEG_INFINITY);
            let mut j = 1usize;
            loop {
                let t = j as f64 * step;
                if t > t_hi {
                    break;
                }
                if t >= t_lo {
                    let v = log_g_f64(s, t);
                    if v > best.2 {
                        best = (s, t, v);
                    }
                }
                j += 1;
            }
            best
        })
        .filter(|b| b.2.is_finite())
        .reduce(
            || (f64::NAN, f64::NAN, f64::NEG_INFINITY),
            |a, b| if b.2 > a.2 || (b.2 == a.2 && b.0 < a.0) { b } else { a },
        );
    if !bs.is_finite() {
        return Err(Error::Numeric("grid contains no interior point".into()));
    }

    let inner = |s: f64| {
        let (lo, hi) = t_range(s);
        let (lo, hi) = ((bt - 2.0 * step).max(lo), (bt + 2.0 * step).min(hi));
        if lo >= hi {
            return (lo, f64::NEG_INFINITY);
        }
        golden_max(lo, hi, refine, |t| log_g_f64(s, t))
    };
    let s_lo = (bs - 2.0 * step).max(BOUNDARY_INSET);
    let s_hi = (bs + 2.0 * step).min(1.0 - BOUNDARY_INSET);
    let (mut s, mut refined) = golden_max(s_lo, s_hi, refine, |s| inner(s).1);
    let mut t = inner(s).0;
    if !(refined >= log_g_f64(bs, bt)) {
        (s, t) = (bs, bt);
        refined = log_g_f64(bs, bt);
    }
    debug_assert!(refined.is_finite());

    let log_value = log_g_st(s, t)?;
    let value = log_value.exp();
    let verdict = certify_le_abs(&value, &opt_bound(), OPT_MARGIN);
    let crit = find_critical()?;
    let (s0, t0) = (crit.s0.mid().to_f64(), crit.t0.mid().to_f64());
    let distance_to_critical = (s - s0).hypot(t - t0);
    Ok(GridMax {
        step,
        s,
        t,
        value,
        log_value,
        verdict,
        distance_to_critical,
        near_critical: distance_to_critical <= 2.0 * step,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinPropertyRow {
    pub p: f64,
    pub triples: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitRow {
    pub x: f64,
    pub value: f64,
    pub tolerance: f64,
    pub within: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalculusReport {
    pub min_property: Vec<MinPropertyRow>,
    pub limit: Vec<LimitRow>,
    /// `|value - 1|` strictly decreases along the sample points.
    pub monotone: bool,
    pub all_ok: bool,
}

/// `x (1-p)^x`.
pub fn decay_product(x: f64, p: f64) -> f64 {
    x * (1.0 - p).powf(x)
}

/// `x (1 - ln x / x)^x` in extended precision.
pub fn log_limit_value(x: f64) -> Ext {
    let xe = Ext::from_f64(x);
    let ln_x = xe.ln();
    (&ln_x + &(&xe * &(&Ext::one() - &(&ln_x / &xe)).ln())).exp()
}

pub fn calculus_checks() -> CalculusReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let min_property: Vec<MinPropertyRow> = [0.1, 0.5, 0.9]
        .into_iter()
        .map(|p| {
            let failures = (0..200)
                .filter(|_| {
                    let a: f64 = rng.gen_range(0.0..40.0);
                    let b: f64 = rng.gen_range(a..=40.0);
                    let x: f64 = rng.gen_range(a..=b);
                    let lhs = decay_product(x, p);
                    let rhs = decay_product(a, p).min(decay_product(b, p));
                    lhs < rhs - 1e-12 * rhs.abs().max(1.0)
                })
                .count();
            MinPropertyRow { p, triples: 200, failures }
        })
        .collect();
    let limit: Vec<LimitRow> = [1e3, 1e4, 1e5, 1e6]
        .into_iter()
        .map(|x: f64| {
            let value = log_limit_value(x).to_f64();
            let tolerance = 2.0 * x.ln().powi(2) / x;
            LimitRow { x, value, tolerance, within: (value - 1.0).abs() <= tolerance }
        })
        .collect();
    let monotone = limit
        .windows(2)
        .all(|w| (w[1].value - 1.0).abs() < (w[0].value - 1.0).abs());
    let all_ok = monotone
        && min_property.iter().all(|r| r.failures == 0)
        && limit.iter().all(|r| r.within);
    CalculusReport { min_property, limit, monotone, all_ok }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn omega_point(s: f64, frac: f64) -> (f64, f64) {
        (s, frac * s.min((1.0 - s) / 2.0))
    }

    #[test]
    fn f_examples() {
        assert!(f_xy(OptPoint::Xy { x: 0.3, y: 0.15 }).unwrap() < 0.7524);
        let f = f_xy(OptPoint::Xy { x: 0.25, y: 0.2 }).unwrap();
        let g = g_st(OptPoint::St { s: 0.5, t: 0.05 }).unwrap();
        assert!((f - g).abs() < 1e-12);
        assert!(f_xy(OptPoint::Xy { x: 0.3, y: 0.3 - 1e-9 }).unwrap() < 1e-2);
        assert!(f_xy(OptPoint::Xy { x: 0.3, y: 0.2999 }).unwrap() < 0.04);
        assert!(f_xy(OptPoint::Xy { x: 0.5, y: 0.2 }).is_err());
        assert!(g_st(OptPoint::St { s: 0.5, t: 0.3 }).is_err());
    }

    #[test]
    fn g_vanishes_as_t_shrinks() {
        let vals: Vec<f64> = [1e-3, 1e-6, 1e-9, 1e-12]
            .iter()
            .map(|&t| g_st(OptPoint::St { s: 0.5, t }).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(vals[3] < 1e-4);
    }

    #[test]
    fn h_examples() {
        let six_e = 6.0 * std::f64::consts::E;
        assert!((h_r_f64(1.0) + six_e).abs() < 1e-12);
        assert!((h_r_f64(2.0) - 4.0 * std::f64::consts::E.powi(2)).abs() < 1e-12);
        assert!(h_r(&Ext::parse("1.72153083")).is_negative());
        assert!(h_r(&Ext::parse("1.72153084")) > Ext::zero());
    }

    #[test]
    fn critical_point_brackets() {
        let c = find_critical().unwrap();
        assert!(c.r0.width() <= Ext::parse("1e-8"));
        assert!(c.r0.inside("1.72153083", "1.72153084"));
        assert!(c.t0.inside("0.1288161367", "0.1288161525"));
        assert!(c.s0.inside("0.22176095", "0.22176098"));
        assert_eq!(c.verdict, Verdict::Pass);
        let (s, t) = (c.s0.mid().to_f64(), c.t0.mid().to_f64());
        let [gs, gt] = grad_log_g(s, t);
        assert!(gs.abs() < 1e-6 && gt.abs() < 1e-6);
        assert!(hessian_negdef(OptPoint::St { s, t }).unwrap());
    }

    #[test]
    fn grid_search() {
        let fine = grid_max_g(1e-3, 60).unwrap();
        assert_eq!(fine.verdict, Verdict::Pass);
        assert!(fine.value >= Ext::parse("-0.2846").exp());
        assert!(fine.near_critical);
        assert!((fine.s - 0.2218).abs() < 1e-3 && (fine.t - 0.1288).abs() < 1e-3);
        let coarse = grid_max_g(1e-2, 60).unwrap();
        assert_eq!(coarse.verdict, Verdict::Pass);
        assert!(coarse.near_critical);
        let half = grid_max_g(5e-3, 60).unwrap();
        assert!(half.value.to_f64() >= coarse.value.to_f64() - 1e-12);
        assert!(grid_max_g(0.02, 10).is_err());
        assert!(grid_max_g(0.0, 10).is_err());
    }

    #[test]
    fn hessian_negative_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let (s, t) = omega_point(rng.gen_range(1e-3..1.0 - 1e-3), rng.gen_range(1e-3..1.0 - 1e-3));
            assert!(hessian_negdef(OptPoint::St { s, t }).unwrap(), "({s}, {t})");
        }
        assert!(hessian_negdef(OptPoint::St { s: 0.5, t: 0.5 }).is_err());
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        let lg = |s: f64, t: f64| log_g_st(s, t).unwrap();
        let d1 = |a: Ext, b: Ext| (&a - &b).to_f64() / (2.0 * h);
        for _ in 0..100 {
            let (s, t) = omega_point(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95));
            let [gs, gt] = grad_log_g(s, t);
            assert!(close(gs, d1(lg(s + h, t), lg(s - h, t)), 1e-6));
            assert!(close(gt, d1(lg(s, t + h), lg(s, t - h)), 1e-6));
            let [[hss, hst], [_, htt]] = hessian_log_g(s, t);
            let gsp = |s: f64, t: f64| grad_log_g(s, t);
            assert!(close(hss, (gsp(s + h, t)[0] - gsp(s - h, t)[0]) / (2.0 * h), 1e-6));
            assert!(close(hst, (gsp(s, t + h)[0] - gsp(s, t - h)[0]) / (2.0 * h), 1e-6));
            assert!(close(htt, (gsp(s, t + h)[1] - gsp(s, t - h)[1]) / (2.0 * h), 1e-6));
        }
    }

    #[test]
    fn calculus() {
        assert_eq!(decay_product(2.0, 0.5), 0.5);
        assert!(decay_product(2.0, 0.5) >= decay_product(1.0, 0.5).min(decay_product(3.0, 0.5)));
        assert_eq!(decay_product(4.0, 0.3), decay_product(4.0, 0.3).min(decay_product(4.0, 0.3)));
        let rep = calculus_checks();
        assert!(rep.all_ok, "{rep:?}");
        assert!((rep.limit[3].value - 1.0).abs() <= rep.limit[3].tolerance);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn substitution_identity(x in 1e-3f64..0.499, frac in 0.01f64..0.99) {
            let y_lo = (3.0 * x - 1.0).max(0.0);
            let y = y_lo + frac * (x - y_lo);
            prop_assume!(in_xy_domain(x, y));
            let f = log_f_xy(x, y).unwrap().exp().to_f64();
            let (s, t) = OptPoint::Xy { x, y }.st();
            prop_assume!(in_st_domain(s, t));
            let g = log_g_st(s, t).unwrap().exp().to_f64();
            prop_assert!((f - g).abs() <= 1e-12 * g.max(1.0));
        }

        #[test]
        fn sampled_values_stay_below_bound(s in 1e-3f64..0.999, frac in 1e-3f64..0.999) {
            let (s, t) = omega_point(s, frac);
            prop_assert!(log_g_f64(s, t) < -0.2845);
        }
    }
}
