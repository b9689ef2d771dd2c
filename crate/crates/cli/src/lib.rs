//! Command-line front end. [`run`] parses argv, executes one subcommand and
//! returns the process exit code: 0 on pass, 1 on a failed or inconclusive
//! check, 2 on usage and input errors.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use pcf_core::coloring::{bichromatic_paths_ok, is_fractional_pcf, is_pcf, is_proper};
use pcf_core::fractional::{
    duality_check, fractional_pcf_lp, round_to_ab, weighted_stable_sampler, DualWeights, SamplerParams,
};
use pcf_core::graph::{degeneracy_ordering, generate, neighborhood_hypergraph, random_lists, star_linear_hypergraph};
use pcf_core::io::{
    parse_coloring, parse_graph, parse_hypergraph, parse_lists, parse_set_coloring, write_coloring, write_graph,
    write_lists, write_set_coloring,
};
use pcf_core::opt::{calculus_checks, find_critical, grid_max_g, hessian_negdef, OptPoint};
use pcf_core::rational::{self, RationalPair};
use pcf_core::solvers::{
    count_pcf_colorings_capped, exact_chi_pcf, greedy_bound, greedy_pcf, reduce_low_degree, rosenfeld_check,
    sample_pcf, RosenfeldVerdict, SolverConfig, DEFAULT_NODE_CAP, DEFAULT_RESTART_CAP,
};
use pcf_core::stirling::{
    bound_lower_sum, bound_two_basic, bound_upper_sum, factorial, factorial_bounds_check, pcf_sum_exact,
    shared_table, verify_clm1, BoundParams, ClmVariant,
};
use pcf_core::{ConflictInstance, Error, Ext, GraphKind, ListAssignment, Verdict};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "pcf", version, about = "Proper conflict-free coloring toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON record path; the graph file for `gen`, the CSV file for `bench`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; falls back to the JOBS environment variable.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a coloring or an (a:b)-coloring against an instance.
    Verify(VerifyArgs),
    /// Greedy coloring along a degeneracy ordering.
    Greedy(GreedyArgs),
    /// Exact chi_pcf by backtracking.
    Exact(ExactArgs),
    /// Count proper t-conflict-free list colorings.
    Count(CountArgs),
    /// Compare the coloring count with beta^n when the list-size premise holds.
    RosenfeldCheck(RosenfeldArgs),
    /// Seeded restart sampler for a list coloring.
    Sample(SampleArgs),
    /// Remove vertices of degree at most 2 and optionally extend a kernel coloring.
    Reduce(ReduceArgs),
    /// Exact certification of the Stirling-sum bounds on a grid of d.
    StirlingCheck(StirlingArgs),
    /// Certify the critical point and maximum of the optimization function.
    OptCheck(OptArgs),
    /// Solve the fractional PCF linear program exactly.
    FracLp(InstanceArgs),
    /// Check LP duality against best stable-set payoffs.
    FracDualCheck(DualCheckArgs),
    /// Randomized stable-set construction for given weights.
    FracSample(FracSampleArgs),
    /// Round the LP optimum to an (a:b)-coloring.
    FracRound(FracRoundArgs),
    /// Generate a graph file.
    Gen(GenArgs),
    /// Run a suite of subcommands and report a CSV of runtimes and verdicts.
    Bench(BenchArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify(_) => "verify",
            Command::Greedy(_) => "greedy",
            Command::Exact(_) => "exact",
            Command::Count(_) => "count",
            Command::RosenfeldCheck(_) => "rosenfeld-check",
            Command::Sample(_) => "sample",
            Command::Reduce(_) => "reduce",
            Command::StirlingCheck(_) => "stirling-check",
            Command::OptCheck(_) => "opt-check",
            Command::FracLp(_) => "frac-lp",
            Command::FracDualCheck(_) => "frac-dual-check",
            Command::FracSample(_) => "frac-sample",
            Command::FracRound(_) => "frac-round",
            Command::Gen(_) => "gen",
            Command::Bench(_) => "bench",
        }
    }
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// `auto-neighborhood`, `auto-star-linear`, or a hypergraph file.
    #[arg(long, default_value = "auto-neighborhood")]
    pub hypergraph: String,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    #[arg(long, conflicts_with = "uniform")]
    pub lists: Option<PathBuf>,
    /// Give every vertex the list {1, ..., K}.
    #[arg(long, value_name = "K")]
    pub uniform: Option<u32>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, conflicts_with = "set_coloring")]
    pub coloring: Option<PathBuf>,
    #[arg(long)]
    pub set_coloring: Option<PathBuf>,
    #[arg(long)]
    pub lists: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    /// Also require every bichromatic component to be a path on at most this many vertices.
    #[arg(long)]
    pub bichromatic: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GreedyArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long)]
    pub coloring_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    pub node_cap: u64,
    #[arg(long)]
    pub coloring_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub lists: ListArgs,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    pub node_cap: u64,
}

#[derive(Debug, Args)]
pub struct RosenfeldArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub lists: ListArgs,
    /// Positive rational, e.g. `3/2` or `1.5`.
    #[arg(long)]
    pub beta: String,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    pub node_cap: u64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub lists: ListArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, default_value_t = DEFAULT_RESTART_CAP)]
    pub restart_cap: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    pub node_cap: u64,
    #[arg(long)]
    pub coloring_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub kernel_out: Option<PathBuf>,
    /// Coloring of the kernel to extend back to the whole graph; needs lists.
    #[arg(long)]
    pub kernel_coloring: Option<PathBuf>,
    #[command(flatten)]
    pub lists: ListArgs,
    #[arg(long)]
    pub coloring_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Lemma {
    Clm1,
    Lower,
    Upper,
    Simple,
    TwoBasic,
    Knuth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Full,
    Clm0,
    Clm1a,
    Clm1b,
}

impl From<Variant> for ClmVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Full => ClmVariant::Full,
            Variant::Clm0 => ClmVariant::Clm0,
            Variant::Clm1a => ClmVariant::Clm1a,
            Variant::Clm1b => ClmVariant::Clm1b,
        }
    }
}

#[derive(Debug, Args)]
pub struct StirlingArgs {
    #[arg(long, value_enum)]
    pub lemma: Lemma,
    #[arg(long = "R")]
    pub r: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub dmax: usize,
    #[arg(long)]
    pub dmin: Option<usize>,
    #[arg(long, default_value = "0.8")]
    pub eps: String,
    #[arg(long, default_value = "0.32")]
    pub c: String,
    #[arg(long, value_enum, default_value_t = Variant::Full)]
    pub variant: Variant,
    /// Row-level CSV destination.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, default_value_t = 60)]
    pub refine: usize,
}

#[derive(Debug, Args)]
pub struct DualCheckArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FracSampleArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Overrides the default sampling probability `ln(Delta)/Delta`.
    #[arg(long)]
    pub p: Option<f64>,
    /// `uniform`, `lp-dual`, or a JSON file `{"f": [...], "g": [...]}` of rational strings.
    #[arg(long, default_value = "uniform")]
    pub weights: String,
}

#[derive(Debug, Args)]
pub struct FracRoundArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long)]
    pub coloring_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Gnp,
    Cycle,
    Complete,
    RandomRegular,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Required for the random kinds and for `--lists-out`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lists_out: Option<PathBuf>,
    #[arg(long)]
    pub list_size: Option<usize>,
    #[arg(long)]
    pub universe: Option<u32>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// One subcommand per line; relative paths resolve against the suite's directory.
    #[arg(long)]
    pub suite: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Core(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Numeric(_) | Error::Blocked { .. }) => 1,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: u32,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub inputs: Vec<InputRecord>,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub verdict: String,
    pub outputs: Vec<String>,
    pub result: Value,
}

#[derive(Default)]
struct Ctx {
    inputs: Vec<InputRecord>,
    outputs: Vec<String>,
    seed: Option<u64>,
}

impl Ctx {
    fn read(&mut self, path: &Path) -> CliResult<String> {
        let bytes = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        self.inputs.push(InputRecord {
            path: path.display().to_string(),
            sha256: format!("{:x}", Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))
    }

    fn write(&mut self, path: &Path, text: &str) -> CliResult<()> {
        fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    fn parsed<T>(&mut self, path: &Path, parse: impl FnOnce(&str) -> pcf_core::Result<T>) -> CliResult<T> {
        let text = self.read(path)?;
        parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    fn instance(&mut self, a: &InstanceArgs) -> CliResult<ConflictInstance> {
        let g = self.parsed(&a.graph, parse_graph)?;
        let h = match a.hypergraph.as_str() {
            "auto-neighborhood" => neighborhood_hypergraph(&g),
            "auto-star-linear" => star_linear_hypergraph(&g),
            path => self.parsed(Path::new(path), |t| parse_hypergraph(t, g.n()))?,
        };
        Ok(ConflictInstance::new(g, h)?)
    }

    fn lists(&mut self, a: &ListArgs, n: usize) -> CliResult<ListAssignment> {
        match (&a.lists, a.uniform) {
            (Some(p), None) => self.parsed(p, |t| parse_lists(t, n)),
            (None, Some(k)) => Ok(ListAssignment::uniform(n, k)?),
            _ => Err(CliError::Usage("one of --lists or --uniform is required".into())),
        }
    }
}

struct Outcome {
    verdict: String,
    result: Value,
}

fn outcome(ok: bool, result: Value) -> Outcome {
    Outcome { verdict: pass_fail(ok).into(), result }
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn pair(x: &BigRational) -> RationalPair {
    x.into()
}

fn pairs(xs: &[BigRational]) -> Vec<RationalPair> {
    xs.iter().map(pair).collect()
}

fn one_based(vs: &[usize]) -> Vec<usize> {
    vs.iter().map(|v| v + 1).collect()
}

fn parse_rational(flag: &str, s: &str) -> CliResult<BigRational> {
    rational::parse(s).map_err(|_| CliError::Usage(format!("--{flag}: not a rational number: {s:?}")))
}

fn required<'a>(flag: &str, v: &'a Option<String>) -> CliResult<&'a str> {
    v.as_deref().ok_or_else(|| CliError::Usage(format!("--{flag} is required for this lemma")))
}

fn decimal(x: &BigRational) -> String {
    Ext::from_ratio(x).to_decimal(15)
}

fn execute(cmd: &Command, out: Option<&Path>, ctx: &mut Ctx) -> CliResult<Outcome> {
    match cmd {
        Command::Verify(a) => verify(a, ctx),
        Command::Greedy(a) => {
            let inst = ctx.instance(&a.instance)?;
            let phi = greedy_pcf(&inst);
            let bound = greedy_bound(&inst);
            let pcf = is_pcf(&inst, &phi, None, 1)?;
            if let Some(p) = &a.coloring_out {
                ctx.write(p, &write_coloring(&phi))?;
            }
            let used = phi.distinct_colors();
            Ok(outcome(
                pcf && used <= bound,
                json!({
                    "colors_used": used,
                    "bound": bound,
                    "degeneracy": degeneracy_ordering(&inst.graph).0,
                    "max_degree_h": inst.hypergraph.max_degree(),
                    "pcf": pcf,
                }),
            ))
        }
        Command::Exact(a) => {
            let inst = ctx.instance(&a.instance)?;
            let cfg = SolverConfig { t: a.t, node_cap: a.node_cap, ..SolverConfig::default() };
            let res = exact_chi_pcf(&inst, &cfg)?;
            if let Some(p) = &a.coloring_out {
                ctx.write(p, &write_coloring(&res.witness))?;
            }
            Ok(Outcome {
                verdict: if res.exact().is_some() { "pass" } else { "inconclusive" }.into(),
                result: json!({ "chi_pcf": res.exact(), "lower": res.lower, "upper": res.upper, "nodes": res.nodes }),
            })
        }
        Command::Count(a) => {
            let inst = ctx.instance(&a.instance)?;
            let lists = ctx.lists(&a.lists, inst.n())?;
            let c = count_pcf_colorings_capped(&inst, &lists, a.t, a.node_cap)?;
            Ok(Outcome {
                verdict: if c.complete { "pass" } else { "inconclusive" }.into(),
                result: json!({ "count": c.count.to_string(), "complete": c.complete, "nodes": c.nodes }),
            })
        }
        Command::RosenfeldCheck(a) => {
            let inst = ctx.instance(&a.instance)?;
            let lists = ctx.lists(&a.lists, inst.n())?;
            let beta = parse_rational("beta", &a.beta)?;
            let rep = rosenfeld_check(&inst, &lists, &beta, a.t, a.node_cap)?;
            Ok(Outcome {
                verdict: rep.verdict.as_str().into(),
                result: json!({
                    "verdict": rep.verdict.as_str(),
                    "required_list_size": pair(&rep.required),
                    "min_list_size": rep.min_list,
                    "count": rep.count.as_ref().map(|c| c.count.to_string()),
                    "complete": rep.count.as_ref().map(|c| c.complete),
                    "beta_pow_n": pair(&pcf_core::solvers::beta_power(&beta, inst.n())),
                    "premise_met": rep.verdict != RosenfeldVerdict::PremiseNotMet,
                }),
            })
        }
        Command::Sample(a) => {
            ctx.seed = Some(a.seed);
            let inst = ctx.instance(&a.instance)?;
            let lists = ctx.lists(&a.lists, inst.n())?;
            let cfg = SolverConfig { t: a.t, seed: a.seed, restart_cap: a.restart_cap, node_cap: a.node_cap };
            let s = sample_pcf(&inst, &lists, &cfg)?;
            if let (Some(p), Some(phi)) = (&a.coloring_out, &s.coloring) {
                ctx.write(p, &write_coloring(phi))?;
            }
            Ok(outcome(
                s.coloring.is_some(),
                json!({
                    "found": s.coloring.is_some(),
                    "colors_used": s.coloring.as_ref().map(|c| c.distinct_colors()),
                    "attempts": s.attempts,
                    "nodes": s.nodes,
                }),
            ))
        }
        Command::Reduce(a) => {
            let g = ctx.parsed(&a.graph, parse_graph)?;
            let red = reduce_low_degree(&g);
            if let Some(p) = &a.kernel_out {
                ctx.write(p, &write_graph(&red.kernel))?;
            }
            let trace: Vec<Value> = red
                .trace
                .iter()
                .map(|s| json!({ "v": s.v + 1, "x": s.x.map(|x| x + 1), "y": s.y.map(|y| y + 1), "added_edge": s.added_edge }))
                .collect();
            let mut result = json!({
                "n": g.n(),
                "kernel_n": red.kernel_vertices.len(),
                "kernel_vertices": one_based(&red.kernel_vertices),
                "trace": trace,
            });
            if let Some(kc) = &a.kernel_coloring {
                let lists = ctx.lists(&a.lists, g.n())?;
                let kphi = ctx.parsed(kc, |t| parse_coloring(t, red.kernel_vertices.len()))?;
                let phi = red.extend(&kphi, &lists)?;
                if let Some(p) = &a.coloring_out {
                    ctx.write(p, &write_coloring(&phi))?;
                }
                result["extended_colors_used"] = json!(phi.distinct_colors());
            }
            Ok(outcome(true, result))
        }
        Command::StirlingCheck(a) => stirling_check(a, ctx),
        Command::OptCheck(a) => {
            let cp = find_critical()?;
            let grid = grid_max_g(a.step, a.refine)?;
            let centre = OptPoint::St { s: cp.s0.mid().to_f64(), t: cp.t0.mid().to_f64() };
            let negdef = hessian_negdef(centre)?;
            let calc = calculus_checks();
            let within = cp.r0.inside("1.72153083", "1.72153084")
                && cp.t0.inside("0.1288161367", "0.1288161525")
                && cp.s0.inside("0.22176095", "0.22176098");
            let ok = within && cp.verdict.is_pass() && grid.verdict.is_pass() && grid.near_critical && negdef && calc.all_ok;
            Ok(outcome(
                ok,
                json!({
                    "critical": cp,
                    "brackets_within_targets": within,
                    "grid": grid,
                    "hessian_negdef": negdef,
                    "calculus": calc,
                }),
            ))
        }
        Command::FracLp(a) => {
            let inst = ctx.instance(a)?;
            let lp = fractional_pcf_lp(&inst)?;
            Ok(outcome(true, lp_json(&lp)))
        }
        Command::FracDualCheck(a) => {
            ctx.seed = Some(a.seed);
            let inst = ctx.instance(&a.instance)?;
            let rep = duality_check(&inst, a.samples, a.seed)?;
            Ok(Outcome {
                verdict: rep.verdict.as_str().into(),
                result: json!({
                    "t_star": pair(&rep.t_star),
                    "dual_payoff": pair(&rep.dual_payoff),
                    "equality": rep.equality,
                    "sampled": rep.sampled,
                    "min_sampled_payoff": rep.min_sampled_payoff.as_ref().map(pair),
                    "sampled_ok": rep.sampled_ok,
                }),
            })
        }
        Command::FracSample(a) => {
            ctx.seed = Some(a.seed);
            let inst = ctx.instance(&a.instance)?;
            let w = weights(ctx, &a.weights, &inst)?;
            let run = weighted_stable_sampler(&inst, &w, &SamplerParams { eps: a.eps, seed: a.seed, p: a.p })?;
            Ok(outcome(
                true,
                json!({
                    "set": one_based(&run.set),
                    "payoff": pair(&run.payoff),
                    "weight_total": pair(&w.total()),
                    "p": run.p,
                    "sampled": run.sampled,
                    "kept": run.kept,
                    "colors_used": run.colors_used,
                    "color_budget": run.color_budget,
                    "diagnostic": run.diagnostic,
                    "meets_diagnostic": run.meets_diagnostic,
                    "rank_warning": run.rank_warning,
                }),
            ))
        }
        Command::FracRound(a) => {
            let inst = ctx.instance(&a.instance)?;
            let lp = fractional_pcf_lp(&inst)?;
            let r = round_to_ab(&inst, &lp)?;
            if let Some(p) = &a.coloring_out {
                ctx.write(p, &write_set_coloring(&r.coloring))?;
            }
            let verified = r.verified && is_fractional_pcf(&inst, &r.coloring)?;
            Ok(outcome(
                verified,
                json!({
                    "optimum": pair(&lp.optimum),
                    "a": r.coloring.a,
                    "b": r.coloring.b,
                    "verified": verified,
                    "trimmed": one_based(&r.trimmed),
                }),
            ))
        }
        Command::Gen(a) => gen(a, out, ctx),
        Command::Bench(_) => Err(CliError::Usage("bench cannot run inside a suite".into())),
    }
}

fn verify(a: &VerifyArgs, ctx: &mut Ctx) -> CliResult<Outcome> {
    let inst = ctx.instance(&a.instance)?;
    let n = inst.n();
    match (&a.coloring, &a.set_coloring) {
        (Some(path), None) => {
            let phi = ctx.parsed(path, |t| parse_coloring(t, n))?;
            let lists = match &a.lists {
                Some(p) => Some(ctx.parsed(p, |t| parse_lists(t, n))?),
                None => None,
            };
            let pcf = is_pcf(&inst, &phi, lists.as_ref(), a.t)?;
            let bichromatic = match a.bichromatic {
                Some(len) => Some(is_proper(&inst.graph, &phi)? && bichromatic_paths_ok(&inst.graph, &phi, len)?),
                None => None,
            };
            Ok(outcome(
                pcf && bichromatic.unwrap_or(true),
                json!({ "pcf": pcf, "bichromatic_ok": bichromatic, "colors_used": phi.distinct_colors() }),
            ))
        }
        (None, Some(path)) => {
            let psi = ctx.parsed(path, |t| parse_set_coloring(t, n))?;
            let ok = is_fractional_pcf(&inst, &psi)?;
            Ok(outcome(ok, json!({ "fractional_pcf": ok, "a": psi.a, "b": psi.b })))
        }
        _ => Err(CliError::Usage("one of --coloring or --set-coloring is required".into())),
    }
}

fn lp_json(lp: &pcf_core::fractional::LpResult) -> Value {
    let primal: Vec<Value> = lp
        .primal
        .iter()
        .map(|(mask, x)| json!({ "set": one_based(&pcf_core::fractional::mask_to_vertices(*mask)), "weight": pair(x) }))
        .collect();
    json!({
        "optimum": pair(&lp.optimum),
        "optimum_approx": rational::to_f64(&lp.optimum),
        "primal": primal,
        "dual": { "f": pairs(&lp.dual.f), "g": pairs(&lp.dual.g) },
        "pivots": lp.pivots,
    })
}

#[derive(Deserialize)]
struct WeightsFile {
    f: Vec<String>,
    g: Vec<String>,
}

fn weights(ctx: &mut Ctx, spec: &str, inst: &ConflictInstance) -> CliResult<DualWeights> {
    match spec {
        "uniform" => Ok(DualWeights {
            f: vec![rational::int(1); inst.n()],
            g: vec![rational::int(1); inst.hypergraph.edge_count()],
        }),
        "lp-dual" => Ok(fractional_pcf_lp(inst)?.dual),
        path => {
            let file: WeightsFile = ctx.parsed(Path::new(path), |t| {
                serde_json::from_str(t).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
            })?;
            let conv = |xs: &[String]| -> CliResult<Vec<BigRational>> {
                xs.iter().map(|s| parse_rational("weights", s)).collect()
            };
            Ok(DualWeights { f: conv(&file.f)?, g: conv(&file.g)? })
        }
    }
}

fn gen(a: &GenArgs, out: Option<&Path>, ctx: &mut Ctx) -> CliResult<Outcome> {
    let need_seed = |what: &str| a.seed.ok_or_else(|| CliError::Usage(format!("--seed is required for {what}")));
    let (kind, seed) = match a.kind {
        Kind::Gnp => {
            let p = a.p.ok_or_else(|| CliError::Usage("--p is required for gnp".into()))?;
            (GraphKind::Gnp { n: a.n, p }, need_seed("gnp")?)
        }
        Kind::RandomRegular => {
            let k = a.k.ok_or_else(|| CliError::Usage("--k is required for random-regular".into()))?;
            (GraphKind::RandomRegular { n: a.n, k }, need_seed("random-regular")?)
        }
        Kind::Cycle => (GraphKind::Cycle { n: a.n }, a.seed.unwrap_or(0)),
        Kind::Complete => (GraphKind::Complete { n: a.n }, a.seed.unwrap_or(0)),
    };
    ctx.seed = a.seed;
    let out = out.ok_or_else(|| CliError::Usage("--out is required for gen".into()))?;
    let g = generate(kind, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    ctx.write(out, &write_graph(&g))?;
    if let Some(p) = &a.lists_out {
        let seed = need_seed("--lists-out")?;
        let size = a.list_size.ok_or_else(|| CliError::Usage("--list-size is required with --lists-out".into()))?;
        let universe = a.universe.unwrap_or(size as u32);
        if (universe as usize) < size || size == 0 {
            return Err(CliError::Usage("--universe must be at least --list-size, which must be positive".into()));
        }
        let lists = ListAssignment::new(random_lists(g.n(), size, universe, seed.wrapping_add(1)))?;
        ctx.write(p, &write_lists(&lists))?;
    }
    Ok(outcome(true, json!({ "n": g.n(), "m": g.edge_count(), "max_degree": g.max_degree() })))
}

struct StirlingRow {
    d: usize,
    exact: BigRational,
    bound: String,
    verdict: Verdict,
}

fn stirling_rows(a: &StirlingArgs) -> CliResult<Vec<StirlingRow>> {
    let dmin = a.dmin.unwrap_or(1);
    let beta = || -> CliResult<BigRational> {
        let b = parse_rational("beta", required("beta", &a.beta)?)?;
        if b <= rational::int(0) {
            return Err(CliError::Usage("--beta must be positive".into()));
        }
        Ok(b)
    };
    let r = || parse_rational("R", required("R", &a.r)?);
    let ok = |b: bool| if b { Verdict::Pass } else { Verdict::Fail };
    let mut rows = Vec::new();
    match a.lemma {
        Lemma::Clm1 => {
            let rep = verify_clm1(&r()?, &beta()?, a.dmax, a.variant.into())?;
            let bound = Ext::from_ratio(&rep.r).sqrt();
            let bound = (&Ext::one() / &bound).to_decimal(15);
            for row in rep.rows.into_iter().filter(|row| row.d >= dmin) {
                rows.push(StirlingRow { d: row.d, exact: row.sum, bound: bound.clone(), verdict: ok(row.pass) });
            }
        }
        Lemma::Lower | Lemma::Upper => {
            let (r, beta) = (r()?, beta()?);
            let eps = parse_rational("eps", &a.eps)?;
            let c = parse_rational("c", &a.c)?;
            for d in dmin.max(1)..=a.dmax {
                let p = BoundParams { r: r.clone(), beta: beta.clone(), eps: eps.clone(), c: c.clone(), d };
                rows.push(if a.lemma == Lemma::Lower {
                    let s = bound_lower_sum(&p)?;
                    StirlingRow { d, bound: decimal(&s.rhs), exact: s.partial, verdict: s.verdict }
                } else {
                    let s = bound_upper_sum(&p)?;
                    StirlingRow { d, bound: s.rhs.to_decimal(15), exact: s.partial, verdict: s.verdict }
                });
            }
        }
        Lemma::Simple => {
            let beta = beta()?;
            for d in dmin.max(1)..=a.dmax {
                let bound = pcf_core::stirling::bound_simple(d, &beta)?;
                let exact = pcf_sum_exact(d, &beta, 2)?;
                rows.push(StirlingRow { d, bound: decimal(&bound), verdict: ok(exact <= bound), exact });
            }
        }
        Lemma::TwoBasic => {
            let beta = beta()?;
            let table = shared_table(2, a.dmax.max(2));
            for d in dmin.max(2)..=a.dmax {
                let mut bound = BigRational::from_integer(0.into());
                let mut termwise = true;
                for i in 1..=d / 2 {
                    let b = bound_two_basic(d, i)?;
                    termwise &= b.min >= BigRational::from_integer(BigInt::from(table.get(d, i)));
                    bound += b.min * rational::powi(&beta, i as i64 - d as i64 + 1);
                }
                let exact = pcf_sum_exact(d, &beta, 2)?;
                rows.push(StirlingRow { d, bound: decimal(&bound), verdict: ok(termwise && exact <= bound), exact });
            }
        }
        Lemma::Knuth => {
            let rep = factorial_bounds_check(a.dmax)?;
            for n in dmin.max(1)..=a.dmax {
                let ln_n = Ext::from_i64(n as i64).ln();
                let upper = (&(&Ext::from_i64(n as i64 + 1) * &ln_n) - &Ext::from_i64(n as i64 - 1)).exp();
                let verdict = if rep.failures.contains(&n) {
                    Verdict::Fail
                } else if rep.inconclusive.contains(&n) {
                    Verdict::Inconclusive
                } else {
                    Verdict::Pass
                };
                rows.push(StirlingRow {
                    d: n,
                    exact: BigRational::from_integer(BigInt::from(factorial(n))),
                    bound: upper.to_decimal(15),
                    verdict,
                });
            }
        }
    }
    Ok(rows)
}

fn stirling_check(a: &StirlingArgs, ctx: &mut Ctx) -> CliResult<Outcome> {
    let rows = stirling_rows(a)?;
    let count = |v: Verdict| rows.iter().filter(|r| r.verdict == v).count();
    let (pass, fail, inconclusive) = (count(Verdict::Pass), count(Verdict::Fail), count(Verdict::Inconclusive));
    let verdict = if fail > 0 {
        Verdict::Fail
    } else if inconclusive > 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Input(format!("csv: {e}"));
    w.write_record(["d", "exact_sum_num", "exact_sum_den", "bound", "verdict"]).map_err(csv_err)?;
    for r in &rows {
        w.write_record([
            r.d.to_string(),
            r.exact.numer().to_string(),
            r.exact.denom().to_string(),
            r.bound.clone(),
            r.verdict.as_str().to_string(),
        ])
        .map_err(csv_err)?;
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| CliError::Input(format!("csv: {e}")))?)
        .expect("csv output is UTF-8");
    let mut result = json!({
        "lemma": a.lemma.to_possible_value().map(|v| v.get_name().to_string()),
        "rows": rows.len(),
        "pass": pass,
        "fail": fail,
        "inconclusive": inconclusive,
        "first_failure": rows.iter().find(|r| r.verdict == Verdict::Fail).map(|r| r.d),
        "d_range": rows.first().zip(rows.last()).map(|(f, l)| [f.d, l.d]),
    });
    match &a.csv {
        Some(p) => ctx.write(p, &text)?,
        None => result["csv"] = json!(text),
    }
    Ok(Outcome { verdict: verdict.as_str().into(), result })
}

fn resolve_jobs(flag: Option<usize>) -> CliResult<usize> {
    if let Some(j) = flag {
        return Ok(j);
    }
    match std::env::var("JOBS") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("JOBS: not a thread count: {v:?}"))),
        Err(_) => Ok(0),
    }
}

/// Runs one parsed command; returns the exit code, the verdict, and the record when it succeeded.
fn run_command(cli: &Cli, argv: &[String]) -> (i32, String, Option<RunRecord>, Option<CliError>) {
    let start = Instant::now();
    let mut ctx = Ctx::default();
    let json_out = match cli.command {
        Command::Gen(_) => None,
        _ => cli.out.as_deref(),
    };
    match execute(&cli.command, cli.out.as_deref(), &mut ctx) {
        Ok(out) => {
            if let Some(p) = json_out {
                ctx.outputs.push(p.display().to_string());
            }
            let record = RunRecord {
                schema: SCHEMA,
                subcommand: cli.command.name().into(),
                argv: argv.to_vec(),
                inputs: ctx.inputs,
                seed: ctx.seed,
                wall_time_s: start.elapsed().as_secs_f64(),
                verdict: out.verdict.clone(),
                outputs: ctx.outputs,
                result: out.result,
            };
            let code = if out.verdict == "pass" { 0 } else { 1 };
            (code, out.verdict, Some(record), None)
        }
        Err(e) => (e.exit_code(), "error".into(), None, Some(e)),
    }
}

fn emit_record(record: &RunRecord, out: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(record).expect("record serializes");
    match out {
        Some(p) => fs::write(p, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

const PATH_FLAGS: &[&str] = &[
    "--graph",
    "--hypergraph",
    "--lists",
    "--coloring",
    "--set-coloring",
    "--weights",
    "--kernel-coloring",
    "--coloring-out",
    "--kernel-out",
    "--lists-out",
    "--csv",
    "--out",
];

fn resolve_suite_tokens(line: &str, base: &Path) -> Vec<String> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let mut resolved = Vec::with_capacity(tokens.len());
    for (i, tok) in tokens.iter().enumerate() {
        let after_path_flag = i > 0 && PATH_FLAGS.contains(&tokens[i - 1]);
        let keyword = matches!(*tok, "auto-neighborhood" | "auto-star-linear" | "uniform" | "lp-dual");
        if after_path_flag && !keyword && Path::new(tok).is_relative() {
            resolved.push(base.join(tok).display().to_string());
        } else {
            resolved.push(tok.to_string());
        }
    }
    resolved
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub index: usize,
    pub command: String,
    pub exit_code: i32,
    pub verdict: String,
    pub wall_ms: u128,
}

fn bench_line(index: usize, line: &str, base: &Path) -> BenchRow {
    let start = Instant::now();
    let tokens = resolve_suite_tokens(line, base);
    let argv: Vec<String> = std::iter::once("pcf".to_string()).chain(tokens).collect();
    let (exit_code, verdict) = match Cli::try_parse_from(&argv) {
        Err(e) => (2, format!("usage-error: {}", e.kind())),
        Ok(cli) if matches!(cli.command, Command::Bench(_)) => (2, "usage-error: nested bench".into()),
        Ok(cli) => match run_command(&cli, &argv[1..]) {
            (code, verdict, Some(record), _) => match cli.out.as_deref().filter(|_| cli.command.name() != "gen") {
                Some(p) => match emit_record(&record, Some(p)) {
                    Ok(()) => (code, verdict),
                    Err(e) => (e.exit_code(), format!("error: {e}")),
                },
                None => (code, verdict),
            },
            (code, _, None, Some(e)) => (code, format!("error: {e}")),
            (code, verdict, None, None) => (code, verdict),
        },
    };
    BenchRow { index, command: line.trim().to_string(), exit_code, verdict, wall_ms: start.elapsed().as_millis() }
}

/// Runs every suite line in parallel; rows come back in suite order.
pub fn bench_suite(suite: &Path) -> CliResult<Vec<BenchRow>> {
    let text = fs::read_to_string(suite).map_err(|e| CliError::Input(format!("{}: {e}", suite.display())))?;
    let base = suite.parent().unwrap_or(Path::new(".")).to_path_buf();
    let lines: Vec<(usize, &str)> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .collect();
    Ok(lines.into_par_iter().map(|(i, l)| bench_line(i, l, &base)).collect())
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "command", "exit_code", "verdict", "wall_ms"]).expect("in-memory write");
    for r in rows {
        w.write_record([r.index.to_string(), r.command.clone(), r.exit_code.to_string(), r.verdict.clone(), r.wall_ms.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

fn dispatch(cli: &Cli, argv: &[String]) -> i32 {
    if let Command::Bench(b) = &cli.command {
        let rows = match bench_suite(&b.suite) {
            Ok(rows) => rows,
            Err(e) => {
                eprintln!("error: {e}");
                return e.exit_code();
            }
        };
        let text = bench_csv(&rows);
        match &cli.out {
            Some(p) => {
                if let Err(e) = fs::write(p, &text) {
                    eprintln!("error: {}: {e}", p.display());
                    return 2;
                }
            }
            None => print!("{text}"),
        }
        return if rows.iter().all(|r| r.exit_code == 0) { 0 } else { 1 };
    }
    let (code, _, record, err) = run_command(cli, argv);
    if let Some(e) = err {
        eprintln!("error: {e}");
        return code;
    }
    let out = match cli.command {
        Command::Gen(_) => None,
        _ => cli.out.as_deref(),
    };
    if let Err(e) = emit_record(record.as_ref().expect("record on success"), out) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    code
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let jobs = match resolve_jobs(cli.jobs) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return 2;
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    pool.install(|| dispatch(&cli, &argv))
}
