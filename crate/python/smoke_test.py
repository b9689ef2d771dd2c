"""Smoke test for the `pcf` extension module; run after installing the wheel built by maturin."""

from fractions import Fraction

import pcf


def main() -> None:
    n, edges = pcf.generate("cycle", 5, seed=0)
    c5 = pcf.Instance(n, edges)
    assert c5.chi_pcf() == 5
    assert len(c5.hyperedges) == 5

    phi = c5.greedy()
    assert c5.is_pcf(phi)
    assert not c5.is_pcf([1, 2, 1, 2, 3])

    count, complete = c5.count([[1, 2, 3, 4, 5]] * 5)
    assert (count, complete) == (120, True)

    plain = pcf.Instance(n, edges, hypergraph=[])
    lp = plain.fractional_lp()
    assert lp["optimum"] == Fraction(5, 2)
    assert sum(lp["dual_f"]) == lp["optimum"]
    assert c5.duality_holds(samples=20, seed=1)

    sampled = c5.sample([list(range(1, 7))] * 5, seed=3)
    assert sampled is not None and c5.is_pcf(sampled)

    assert pcf.stirling_assoc(2, 4, 2) == 3
    assert pcf.pcf_sum_exact(4, 600) == Fraction(1801, 360000)
    assert pcf.pcf_sum_exact(3, "2") == Fraction(1, 2)
    assert pcf.a_main(750, 600) == 1378
    ok, first_failure, d_hi = pcf.verify_clm1(750, 600)
    assert ok and first_failure is None and d_hi == 435

    cp = pcf.find_critical()
    lo, hi = cp["r0"]
    assert 1.72153083 < float(lo) <= float(hi) < 1.72153084
    assert cp["verdict"] == "pass"

    try:
        pcf.Instance(3, [(0, 0)])
    except ValueError:
        pass
    else:
        raise AssertionError("self-loop accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
