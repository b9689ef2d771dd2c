use pyo3::prelude::*;

#[test]
fn module_runs_inside_embedded_interpreter() {
    use pcf::pcf;
    pyo3::append_to_inittab!(pcf);
    pyo3::prepare_freethreaded_python();
    Python::with_gil(|py| {
        let code = r#"
from fractions import Fraction
import pcf
n, edges = pcf.generate("cycle", 5, seed=0)
inst = pcf.Instance(n, edges)
assert inst.chi_pcf() == 5
assert inst.fractional_lp()["optimum"] == Fraction(5, 2)
assert pcf.Instance(n, edges, hypergraph=[]).fractional_lp()["optimum"] == Fraction(5, 2)
assert pcf.pcf_sum_exact(4, "600") == Fraction(1801, 360000)
assert pcf.stirling_assoc(2, 6, 3) == 15
try:
    pcf.Instance(2, [(0, 5)])
    raise AssertionError("bad edge accepted")
except ValueError:
    pass
"#;
        py.run_bound(code, None, None).unwrap_or_else(|e| panic!("{e}"));
    });
}
