"""Smoke test for the prequant_py extension module."""

import math

import prequant_py as pq


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    mono = pq.Connection.sphere_monopole(2)
    # int 2 dz^dtheta = 8 pi, Chern number 4
    assert mono.degree() == 4

    # oint k (z - 1) dtheta at z = 0.25 is 2 pi k (z - 1)
    re, im = mono.holonomy_latitude(0.25)
    want = 2 * math.pi * 2 * (0.25 - 1)
    assert close(re, math.cos(want), 1e-9) and close(im, math.sin(want), 1e-9)

    shifted = mono.shifted_by_random_exact(7)
    phi = pq.recover_gauge(shifted, mono, [0.0, 0.0])
    assert phi.is_hermitian
    assert phi.path_disagreement < 1e-5
    assert close(abs(complex(*phi.value([0.0, 0.0]))), 0.0, 1e-12)

    spec = pq.bs_spectrum(mono)
    assert spec.total_count() == 5
    for got, n in zip(spec.regular_levels, range(3, 0, -1)):
        assert close(got, 1 - n / 2, 1e-6), spec
    assert pq.riemann_roch(2, 0) == 5
    assert pq.riemann_roch(3, 1) == 3

    torus = pq.Connection.torus(1)
    periods = pq.connection_periods(torus.shifted_by_constant(0.3), torus)
    assert close(periods[0][1], -2 * math.pi * 0.3, 1e-9), periods
    try:
        pq.recover_gauge(torus.shifted_by_constant(0.3), torus, [0.0, 0.0])
    except RuntimeError as err:
        assert "obstruction" in str(err)
    else:
        raise AssertionError("expected an obstruction on the torus")

    assert "bs-sphere" in pq.scenario_names()
    code, report = pq.run_scenario("bs-sphere", [("params.k", "3")], seed=1)
    assert code == 0 and "pass = true" in report
    try:
        pq.run_scenario("bs-sphere", [("params.nope", "1")])
    except ValueError:
        pass
    else:
        raise AssertionError("expected a config error")
    print("prequant_py smoke test passed")


if __name__ == "__main__":
    main()
