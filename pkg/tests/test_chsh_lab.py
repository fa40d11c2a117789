import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cvepr.chsh_lab import (
    FIGURES,
    AsymptoticBranch,
    BellConfig,
    BellSurface,
    Branch,
    b2_imaginary,
    b3_asymptotic_max,
    b3_imaginary,
    b3_real,
    bell_b2,
    bell_b3,
    bipartite_b2,
    branch_function,
    general_b3,
    maximize_bell,
    parity_provider,
    pattern_amplitudes,
    scan_surface,
)
from cvepr.gaussian_core import SQRT2, Regime
from cvepr.wigner_engine import SingularIntegralError, parity_of, wigner_nopa2_closed

# 8 * 3^(-9/8): lambda = 9 limit of the imaginary branch at s -> sqrt2+
B3_SQRT2_LIMIT = 2.3244947809912955
# 1 + 2 sqrt(2/3) - (2/3)^(3/2): real branch as s -> 1+
B3_REAL_LIMIT = 2.0886621079036347


def test_limits_are_what_they_claim():
    assert B3_SQRT2_LIMIT == pytest.approx(8 * 3 ** (-9 / 8), rel=1e-15)
    assert B3_REAL_LIMIT == pytest.approx(1 + 2 * math.sqrt(2 / 3) - (2 / 3) ** 1.5, rel=1e-15)


def test_pattern_amplitudes():
    a = math.sqrt(0.1)
    np.testing.assert_allclose(pattern_amplitudes("imaginary", 0.2), [1j * a] * 3)
    np.testing.assert_allclose(pattern_amplitudes("real_pair", 0.2), [-a, a, 0])
    with pytest.raises(ValueError):
        pattern_amplitudes("general", 0.2)


def test_config_rejects_negative_J():
    with pytest.raises(ValueError):
        BellConfig("imaginary", -0.1, 2.0)


def test_single_parity_example():
    p = parity_provider("epr", 3, 2.0)
    assert p([0, 0, 0]) == pytest.approx(1.0)
    assert p([1j * math.sqrt(0.1), 0, 0]) == pytest.approx(math.exp(-0.28), rel=1e-13)


def test_zero_displacement_is_classical_bound():
    assert bell_b3(parity_provider("epr", 3, 2.0), 0, 0, 0).b == pytest.approx(2.0)
    assert bell_b2(parity_provider("epr", 2, 2.0), 0, 0).b == pytest.approx(2.0)
    for fn in (b3_imaginary, b3_real, b2_imaginary):
        assert fn(1.7, 0.0).b == 2.0


def test_branch_examples():
    a = pattern_amplitudes("imaginary", 0.1)
    assert bell_b3(parity_provider("epr", 3, 1.5), *a).b == pytest.approx(b3_imaginary(1.5, 0.1).b, abs=1e-12)
    a = pattern_amplitudes("real_pair", 0.05)
    assert bell_b3(parity_provider("epr", 3, 1.2), *a).b == pytest.approx(b3_real(1.2, 0.05).b, abs=1e-12)


@given(st.floats(1.02, 3.0).filter(lambda s: abs(s - SQRT2) > 1e-3), st.floats(0, 2))
def test_branches_match_parity_route(s, J):
    for branch, fn in (("imaginary", b3_imaginary), ("real_pair", b3_real)):
        a = pattern_amplitudes(branch, J)
        ref = fn(s, J).b
        # exponent round-off is relative, so B inherits it scaled by log|B|
        rel = 1e-12 * max(1.0, math.log(abs(ref) + 1.0))
        for route in ("closed", "engine"):
            direct = bell_b3(parity_provider("epr", 3, s, route), *a).b
            assert direct == pytest.approx(ref, abs=1e-9, rel=rel)


@given(st.floats(1.02, 3.0), st.floats(0, 2))
def test_bipartite_branch_matches_engine_and_nopa(s, J):
    assert bipartite_b2(s, J) == pytest.approx(b2_imaginary(s, J).b, abs=1e-12, rel=1e-12)
    r = math.atanh(1 / s**2)
    a = 1j * math.sqrt(J / 2)

    def P(x, y):
        return parity_of(wigner_nopa2_closed(r, [x, y]), 2)

    nopa = P(0, 0) + P(0, a) + P(a, 0) - P(a, a)
    assert nopa == pytest.approx(bipartite_b2(s, J), abs=1e-9)


def test_regime_tags():
    assert b3_imaginary(1.2, 0.1).regime is Regime.FORMAL
    assert b3_imaginary(1.5, 0.1).regime is Regime.NORMALIZABLE
    assert b2_imaginary(1.01, 0.1).regime is Regime.NORMALIZABLE


def test_singular_regulators():
    with pytest.raises(SingularIntegralError):
        b3_imaginary(SQRT2, 0.1)
    with pytest.raises(ValueError):
        b3_real(1.0, 0.1)


def test_violates_flag():
    assert b3_imaginary(SQRT2 + 1e-3, 3e-4).violates
    assert not b3_real(3.0, 1.0).violates
    # |B| > 2 counts, and the formal regime goes far below -2
    assert b3_imaginary(1.2, 0.5).b < -2 and b3_imaginary(1.2, 0.5).violates


def test_asymptotic_max():
    assert b3_asymptotic_max(9) == (9 - 1) * (3 / 9) ** (9 / 8)
    assert b3_asymptotic_max(9) == pytest.approx(B3_SQRT2_LIMIT, rel=1e-15)
    br = AsymptoticBranch(9)
    x = br.x_star
    assert 3 * x - x**9 == pytest.approx(b3_asymptotic_max(br), rel=1e-14)
    with pytest.raises(ValueError):
        AsymptoticBranch(1.0)


@given(st.floats(1.01, 20))
def test_asymptotic_max_is_a_maximum(lam):
    br = AsymptoticBranch(lam)
    xs = np.linspace(0, 1, 2001)
    assert np.max(3 * xs - xs**lam) <= b3_asymptotic_max(br) + 1e-12


def test_imaginary_branch_approaches_limit_from_below():
    gaps, jstars = [], []
    for eps in (1e-2, 1e-3, 1e-4):
        s = SQRT2 + eps
        res = maximize_bell("imaginary", [(s, s), (0, 1)])
        gaps.append(B3_SQRT2_LIMIT - res.max)
        jstars.append(res.argmax[1])
        # leading order: J* = 3 delta ln3 / 32 with delta = s^2 - 2
        assert res.argmax[1] == pytest.approx(3 * (s * s - 2) * math.log(3) / 32, rel=20 * eps)
    assert all(g > 0 for g in gaps)
    assert gaps[0] > gaps[1] > gaps[2]
    for a, b in zip(jstars, jstars[1:]):
        assert a / b == pytest.approx(10, rel=0.02)


def test_imaginary_branch_never_violates_near_one():
    s = np.linspace(1.0001, 1.3, 300)
    J = np.linspace(0, 2, 300)
    B = branch_function("imaginary")(s[:, None], J[None, :])
    assert B.max() <= 2 + 1e-9


def test_maximize_b2_is_fast():
    t0 = time.perf_counter()
    res = maximize_bell("bipartite", [(1.0001, 1.0001), (0, 1)])
    assert time.perf_counter() - t0 < 1.0
    assert res.max == pytest.approx(2.19, abs=0.01)
    assert res.report()["argmax"] == res.argmax


def test_maximize_real_branch():
    res = maximize_bell("real_pair", [(1.0001, 1.0001), (0, 1)])
    assert res.max == pytest.approx(B3_REAL_LIMIT, abs=1e-3)
    assert res.converged


def test_maximize_callable_objective():
    res = maximize_bell(lambda x: -((x[0] - 1.3) ** 2) - (x[1] - 0.4) ** 2, [(1.1, 2.0), (0, 1)])
    assert res.argmax == pytest.approx([1.3, 0.4], abs=1e-6)


def test_maximize_rejects_bad_domains():
    with pytest.raises(ValueError):
        maximize_bell("imaginary", [(1.3, 1.5), (0, 1)])
    with pytest.raises(ValueError):
        maximize_bell("real_pair", [(1.5, 1.2), (0, 1)])


def test_general_branch_reduces_to_patterns():
    a = math.sqrt(0.05)
    assert general_b3(1.5, [0, a, 0, a, 0, a]) == pytest.approx(b3_imaginary(1.5, 0.1).b, abs=1e-12)
    assert general_b3(1.5, [-a, 0, a, 0, 0, 0]) == pytest.approx(b3_real(1.5, 0.1).b, abs=1e-12)


def test_scan_surface_and_csv():
    surf = scan_surface("real_pair", [1.1, 1.2, 1.5], [0.0, 0.05, 0.1])
    assert surf.B.shape == (3, 3)
    assert surf.B[1, 1] == pytest.approx(b3_real(1.2, 0.05).b, rel=1e-15)
    lines = surf.to_csv().splitlines()
    assert lines[0] == "branch,s,J,B,regime"
    assert len(lines) == 10
    assert lines[1].startswith("real_pair,1.1000000000000001,0,2,formal")


def test_scan_is_independent_of_threads(monkeypatch):
    s, J = np.linspace(1.01, 1.3, 17), np.linspace(0, 1, 9)
    monkeypatch.setenv("CV_EPR_THREADS", "1")
    one = scan_surface("imaginary", s, J).to_csv()
    monkeypatch.setenv("CV_EPR_THREADS", "4")
    assert scan_surface("imaginary", s, J).to_csv() == one


def test_surface_rejects_unsorted_axes():
    with pytest.raises(ValueError):
        BellSurface("x", np.array([1.2, 1.1]), np.array([0.0]), np.zeros((2, 1)), ("f", "f"))


def test_scan_rejects_singular_grid():
    with pytest.raises(ValueError):
        scan_surface("imaginary", [1.2, SQRT2], [0.0])


def test_figure_presets_avoid_singular_values():
    for p in FIGURES.values():
        s = p.s_values()
        assert np.all(np.diff(s) > 0) and s[0] > p.limit
        assert p.J_values()[0] == 0
        if p.branch is Branch.IMAGINARY and p.limit == 1.0:
            assert s[-1] < SQRT2
