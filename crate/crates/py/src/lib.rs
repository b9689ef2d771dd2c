//! Python bindings. Vertices are 0-based; rationals cross the boundary as
//! `fractions.Fraction` (or strings such as `"3/2"` on input).

use num_bigint::BigInt;
use num_rational::BigRational;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pcf_core::coloring::is_pcf;
use pcf_core::fractional::{duality_check, fractional_pcf_lp, mask_to_vertices};
use pcf_core::graph::{generate as core_generate, neighborhood_hypergraph, star_linear_hypergraph};
use pcf_core::solvers::{count_pcf_colorings_capped, exact_chi_pcf, greedy_pcf, sample_pcf, SolverConfig, DEFAULT_NODE_CAP};
use pcf_core::{opt, rational, stirling, Coloring, ConflictInstance, Graph, GraphKind, Hypergraph, ListAssignment};

fn err(e: pcf_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction(py: Python<'_>, x: &BigRational) -> PyResult<PyObject> {
    let cls = py.import_bound("fractions")?.getattr("Fraction")?;
    Ok(cls.call1((x.numer().clone(), x.denom().clone()))?.unbind())
}

/// Accepts a `Fraction`, an `int`, or a string like `"3/2"` or `"0.8"`.
fn to_rational(x: &Bound<'_, PyAny>) -> PyResult<BigRational> {
    if let Ok(s) = x.extract::<String>() {
        return rational::parse(&s).map_err(err);
    }
    if let Ok(i) = x.extract::<BigInt>() {
        return Ok(BigRational::from_integer(i));
    }
    let num: BigInt = x.getattr("numerator")?.extract()?;
    let den: BigInt = x.getattr("denominator")?.extract()?;
    Ok(BigRational::new(num, den))
}

#[derive(FromPyObject)]
enum HyperSpec {
    Named(String),
    Edges(Vec<Vec<usize>>),
}

/// A graph together with its conflict hypergraph.
#[pyclass(frozen)]
struct Instance {
    inner: ConflictInstance,
}

#[pymethods]
impl Instance {
    /// `hypergraph` is `"neighborhood"`, `"star-linear"`, or a list of vertex lists.
    #[new]
    #[pyo3(signature = (n, edges, hypergraph = None))]
    fn new(n: usize, edges: Vec<(usize, usize)>, hypergraph: Option<HyperSpec>) -> PyResult<Self> {
        let g = Graph::from_edges(n, &edges).map_err(err)?;
        let h = match hypergraph {
            None => neighborhood_hypergraph(&g),
            Some(HyperSpec::Named(s)) => match s.as_str() {
                "neighborhood" => neighborhood_hypergraph(&g),
                "star-linear" => star_linear_hypergraph(&g),
                other => return Err(PyValueError::new_err(format!("unknown hypergraph {other:?}"))),
            },
            Some(HyperSpec::Edges(es)) => Hypergraph::new(n, es).map_err(err)?,
        };
        Ok(Instance { inner: ConflictInstance::new(g, h).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn hyperedges(&self) -> Vec<Vec<usize>> {
        self.inner.hypergraph.edges().to_vec()
    }

    fn greedy(&self) -> Vec<u32> {
        greedy_pcf(&self.inner).colors
    }

    #[pyo3(signature = (coloring, t = 1, lists = None))]
    fn is_pcf(&self, coloring: Vec<u32>, t: usize, lists: Option<Vec<Vec<u32>>>) -> PyResult<bool> {
        let phi = Coloring::new(coloring).map_err(err)?;
        let lists = lists.map(ListAssignment::new).transpose().map_err(err)?;
        is_pcf(&self.inner, &phi, lists.as_ref(), t).map_err(err)
    }

    /// Exact chi_pcf; raises if the node budget runs out first.
    #[pyo3(signature = (t = 1, node_cap = DEFAULT_NODE_CAP))]
    fn chi_pcf(&self, py: Python<'_>, t: usize, node_cap: u64) -> PyResult<usize> {
        let cfg = SolverConfig { t, node_cap, ..SolverConfig::default() };
        let res = py.allow_threads(|| exact_chi_pcf(&self.inner, &cfg)).map_err(err)?;
        res.exact()
            .ok_or_else(|| PyValueError::new_err(format!("budget exhausted: {} <= chi <= {}", res.lower, res.upper)))
    }

    #[pyo3(signature = (lists, t = 1, node_cap = DEFAULT_NODE_CAP))]
    fn count(&self, py: Python<'_>, lists: Vec<Vec<u32>>, t: usize, node_cap: u64) -> PyResult<(BigInt, bool)> {
        let lists = ListAssignment::new(lists).map_err(err)?;
        let c = py.allow_threads(|| count_pcf_colorings_capped(&self.inner, &lists, t, node_cap)).map_err(err)?;
        Ok((c.count.into(), c.complete))
    }

    #[pyo3(signature = (lists, seed, t = 1))]
    fn sample(&self, py: Python<'_>, lists: Vec<Vec<u32>>, seed: u64, t: usize) -> PyResult<Option<Vec<u32>>> {
        let lists = ListAssignment::new(lists).map_err(err)?;
        let cfg = SolverConfig { t, seed, ..SolverConfig::default() };
        let out = py.allow_threads(|| sample_pcf(&self.inner, &lists, &cfg)).map_err(err)?;
        Ok(out.coloring.map(|c| c.colors))
    }

    /// `{"optimum", "primal": [(set, weight)], "dual_f", "dual_g"}` with exact fractions.
    fn fractional_lp<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let lp = py.allow_threads(|| fractional_pcf_lp(&self.inner)).map_err(err)?;
        let d = PyDict::new_bound(py);
        d.set_item("optimum", fraction(py, &lp.optimum)?)?;
        let primal = lp
            .primal
            .iter()
            .map(|(m, x)| Ok((mask_to_vertices(*m), fraction(py, x)?)))
            .collect::<PyResult<Vec<_>>>()?;
        d.set_item("primal", primal)?;
        let conv = |xs: &[BigRational]| xs.iter().map(|x| fraction(py, x)).collect::<PyResult<Vec<_>>>();
        d.set_item("dual_f", conv(&lp.dual.f)?)?;
        d.set_item("dual_g", conv(&lp.dual.g)?)?;
        Ok(d)
    }

    #[pyo3(signature = (samples = 100, seed = 0))]
    fn duality_holds(&self, py: Python<'_>, samples: usize, seed: u64) -> PyResult<bool> {
        let rep = py.allow_threads(|| duality_check(&self.inner, samples, seed)).map_err(err)?;
        Ok(rep.verdict.is_pass())
    }
}

#[pyfunction]
fn stirling_assoc(t: usize, d: usize, i: usize) -> PyResult<BigInt> {
    Ok(stirling::stirling_assoc(t, d, i).map_err(err)?.into())
}

#[pyfunction]
#[pyo3(signature = (d, beta, part_min = 2))]
fn pcf_sum_exact(py: Python<'_>, d: usize, beta: &Bound<'_, PyAny>, part_min: usize) -> PyResult<PyObject> {
    let beta = to_rational(beta)?;
    fraction(py, &stirling::pcf_sum_exact(d, &beta, part_min).map_err(err)?)
}

/// Whether every d in range passes; returns `(all_pass, first_failure, d_hi)`.
#[pyfunction]
#[pyo3(signature = (r, beta, d_max = usize::MAX))]
fn verify_clm1(
    py: Python<'_>,
    r: &Bound<'_, PyAny>,
    beta: &Bound<'_, PyAny>,
    d_max: usize,
) -> PyResult<(bool, Option<usize>, usize)> {
    let (r, beta) = (to_rational(r)?, to_rational(beta)?);
    let rep = py
        .allow_threads(|| stirling::verify_clm1(&r, &beta, d_max, stirling::ClmVariant::Full))
        .map_err(err)?;
    Ok((rep.all_pass, rep.first_failure, rep.d_hi))
}

#[pyfunction]
fn a_main(delta: u64, beta: &Bound<'_, PyAny>) -> PyResult<BigInt> {
    Ok(stirling::a_main(delta, &to_rational(beta)?).map_err(err)?.a)
}

/// Brackets as `(lo, hi)` decimal strings, plus the certified upper bound on `log g`.
#[pyfunction]
fn find_critical(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let cp = opt::find_critical().map_err(err)?;
    let d = PyDict::new_bound(py);
    for (k, b) in [("r0", &cp.r0), ("t0", &cp.t0), ("s0", &cp.s0)] {
        d.set_item(k, (b.lo.to_decimal(25), b.hi.to_decimal(25)))?;
    }
    d.set_item("log_g_upper", cp.log_g_upper.to_decimal(25))?;
    d.set_item("verdict", cp.verdict.as_str())?;
    Ok(d)
}

/// Returns `(n, edges)` for `kind` in `gnp`, `cycle`, `complete`, `random-regular`.
#[pyfunction]
#[pyo3(signature = (kind, n, seed, p = None, k = None))]
fn generate(kind: &str, n: usize, seed: u64, p: Option<f64>, k: Option<usize>) -> PyResult<(usize, Vec<(usize, usize)>)> {
    let missing = |what: &str| PyValueError::new_err(format!("{kind} needs {what}"));
    let kind = match kind {
        "gnp" => GraphKind::Gnp { n, p: p.ok_or_else(|| missing("p"))? },
        "cycle" => GraphKind::Cycle { n },
        "complete" => GraphKind::Complete { n },
        "random-regular" => GraphKind::RandomRegular { n, k: k.ok_or_else(|| missing("k"))? },
        other => return Err(PyValueError::new_err(format!("unknown graph kind {other:?}"))),
    };
    let g = core_generate(kind, seed).map_err(err)?;
    Ok((g.n(), g.edges().collect()))
}

#[pymodule]
pub fn pcf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_function(wrap_pyfunction!(stirling_assoc, m)?)?;
    m.add_function(wrap_pyfunction!(pcf_sum_exact, m)?)?;
    m.add_function(wrap_pyfunction!(verify_clm1, m)?)?;
    m.add_function(wrap_pyfunction!(a_main, m)?)?;
    m.add_function(wrap_pyfunction!(find_critical, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
