import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cvepr.gaussian_core import (
    SQRT2,
    Regime,
    Regulator,
    SqueezingParam,
    amplitudes_from_quadratures,
    beamsplitter_matrix,
    eigen_relations,
    epr_ket,
    jacobi_mode_map,
    ket_from_dict,
    nopa2_ket,
    nopa3_from_beamsplitters,
    nopa3_ket,
    squeezing_correspondence,
)

# frozen oracle values
# bipartite: |psi> ~ sum_n s^(-2n)|n,n>, so N^-2 = sum_n s^(-4n) = 1/(1 - s^-4)
NORM_EPR2_S2 = math.sqrt(1.0 - 2.0**-4)  # 0.9682458365518543
# tripartite |N|^2 = (s^4 - 1) sqrt(s^4 - 4) / s^6 at s = 2
NORM2_EPR3_S2 = 15 * math.sqrt(12) / 64  # 0.8118988160479111
TANH_06 = 0.5370495669980353


def test_regulator_rejects_s_at_or_below_one():
    for bad in (1.0, 0.5, -2.0, math.nan, math.inf):
        with pytest.raises(ValueError):
            Regulator(bad)


def test_squeezing_rejects_negative():
    with pytest.raises(ValueError):
        SqueezingParam(-0.1)


def test_regime_classification():
    assert Regulator(1.2).classification(3) is Regime.FORMAL
    assert Regulator(SQRT2).classification(3) is Regime.SINGULAR
    assert Regulator(1.5).classification(3) is Regime.NORMALIZABLE
    assert Regulator(1.01).classification(2) is Regime.NORMALIZABLE


def test_epr2_example():
    spec = epr_ket(2, 2.0)
    assert spec.coupling[0, 1] == 0.25
    assert np.all(spec.drive == 0)
    assert spec.norm == pytest.approx(NORM_EPR2_S2, rel=1e-14)


def test_epr3_normalisation_closed_form():
    spec = epr_ket(3, 2.0)
    assert spec.norm**2 == pytest.approx(NORM2_EPR3_S2, rel=1e-13)


@given(st.floats(1.4143, 6.0))
def test_epr3_norm_formula(s):
    spec = epr_ket(3, s)
    expected = (s**4 - 1) * math.sqrt(s**4 - 4) / s**6
    assert spec.norm**2 == pytest.approx(expected, rel=1e-9)


def test_epr3_singular_and_formal():
    sing = epr_ket(3, SQRT2)
    assert sing.regime is Regime.SINGULAR and sing.norm == 0.0
    formal = epr_ket(3, 1.2)
    assert formal.regime is Regime.FORMAL
    assert math.isnan(formal.norm)
    assert formal.determinant() < 0
    assert formal.formal_norm_squared() > 0


def test_epr_coupling_spectrum():
    s = 1.7
    ev = np.sort(np.linalg.eigvalsh(np.real(epr_ket(3, s).coupling)))
    np.testing.assert_allclose(ev, [-1 / s**2, -1 / s**2, 2 / s**2], rtol=1e-14)


def test_epr_drive_and_prefactor():
    eta = [0.4j, 0.2, -0.1 + 0.3j]
    spec = epr_ket(3, 2.0, eta)
    np.testing.assert_allclose(spec.drive, np.array(eta) / 2.0)
    assert spec.scalar_prefactor == pytest.approx(math.exp(-(0.16 + 0.04 + 0.1) / 16))


def test_epr_rejects_wrong_modes_and_eta_length():
    with pytest.raises(ValueError):
        epr_ket(4, 2.0)
    with pytest.raises(ValueError):
        epr_ket(3, 2.0, [0.1, 0.2])


def test_nopa2_vacuum_and_limit():
    vac = nopa2_ket(0.0)
    assert vac.coupling[0, 1] == 0 and vac.norm == 1.0
    big = nopa2_ket(15.0)
    assert big.coupling[0, 1] == pytest.approx(1.0) and big.norm < 1e-6


def test_nopa2_matches_epr2_through_correspondence():
    r = squeezing_correspondence(2.0).r
    assert r == pytest.approx(math.atanh(0.25))
    a, b = epr_ket(2, 2.0), nopa2_ket(r)
    np.testing.assert_array_max_ulp(np.real(a.coupling), np.real(b.coupling), maxulp=4)
    assert a.norm == pytest.approx(b.norm, rel=1e-14)


def test_nopa3_example():
    F = np.real(nopa3_ket(0.6).coupling)
    assert math.tanh(0.6) == pytest.approx(TANH_06, rel=1e-15)
    np.testing.assert_allclose(np.diag(F), -TANH_06 / 3, rtol=1e-14)
    assert F[0, 1] == pytest.approx(2 * TANH_06 / 3, rel=1e-14)
    assert F[0, 0] == pytest.approx(-0.179, abs=5e-4) and F[0, 1] == pytest.approx(0.358, abs=5e-4)


@given(st.floats(0.0, 2.5))
def test_nopa3_norm_matches_determinant(r):
    spec = nopa3_ket(r)
    t = math.tanh(r)
    assert spec.norm**4 == pytest.approx((1 - t * t) ** 3, rel=1e-9, abs=1e-300)
    assert spec.norm**4 == pytest.approx(spec.determinant(), rel=1e-9, abs=1e-300)


@given(st.floats(0.0, 3.0))
def test_beamsplitter_construction(r):
    np.testing.assert_allclose(nopa3_from_beamsplitters(r).coupling, nopa3_ket(r).coupling, atol=1e-12)


def test_beamsplitter_matrix_orthogonal():
    B = beamsplitter_matrix(0, 2, 0.37)
    np.testing.assert_allclose(B.T @ B, np.eye(3), atol=1e-15)


def test_squeezing_correspondence_examples():
    assert squeezing_correspondence(SQRT2).r == pytest.approx(0.5 * math.log(3), abs=1e-15)
    assert squeezing_correspondence(1e6).r < 1e-11
    assert squeezing_correspondence(1 + 1e-9).r > 9


def test_jacobi_map_rows():
    M = jacobi_mode_map()
    np.testing.assert_allclose(M @ M.T, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(M[0], np.array([1, 0, -1]) / math.sqrt(2))
    np.testing.assert_allclose(M[1], np.array([1, -2, 1]) / math.sqrt(6))
    np.testing.assert_allclose(M[2], np.ones(3) / math.sqrt(3))


def test_quadrature_relation_at_s1_limit():
    # at s -> 1 the first relation is a pure position difference
    rel = [r for r in eigen_relations(3, 1.0 + 1e-12) if r.label == "quadrature[0]"][0]
    x, p = rel.quadrature_coeffs()
    np.testing.assert_allclose(p, 0.0, atol=1e-11)
    assert abs(x[0]) == pytest.approx(math.sqrt(2), rel=1e-10)


def test_third_quadrature_relation_at_sqrt2_is_momentum_sum():
    rel = [r for r in eigen_relations(3, SQRT2) if r.label == "quadrature[2]"][0]
    x, p = rel.quadrature_coeffs()
    np.testing.assert_allclose(x, 0.0, atol=1e-14)
    assert p[0] == pytest.approx(p[1]) == pytest.approx(p[2])


def test_relative_mode_bogoliubov_at_sqrt2():
    rel = [r for r in eigen_relations(3, SQRT2) if r.label == "jacobi[0]"][0]
    u, v = rel.normalized_bogoliubov()
    assert (u, v) == pytest.approx((2 / math.sqrt(3), 1 / math.sqrt(3)), rel=1e-14)
    assert rel.squeezing_parameter() == pytest.approx(0.5 * math.log(3), abs=1e-12)


def test_eigen_relation_count_and_eigenvalues():
    eta = [0.1, 0.2j, -0.3]
    rels = eigen_relations(3, 2.0, eta)
    assert len(rels) == 9
    ann = [r for r in rels if r.label.startswith("annihilation")]
    np.testing.assert_allclose([r.eigenvalue for r in ann], np.array(eta) / 2.0)


def test_json_round_trip():
    spec = epr_ket(3, 2.0, [0.1j, 0.0, -0.2])
    d = json.loads(spec.to_json())
    assert d["F"][0][1] == 0.25 and d["eta"][0] == [0.0, 0.1]
    back = ket_from_dict(d)
    np.testing.assert_array_equal(back.coupling, spec.coupling)
    np.testing.assert_array_equal(back.drive, spec.drive)
    assert ket_from_dict(json.loads(nopa3_ket(0.6).to_json())).param == 0.6


def test_formal_json_norm_is_null():
    assert json.loads(epr_ket(3, 1.2).to_json())["norm"] is None


def test_quadrature_amplitudes():
    np.testing.assert_allclose(amplitudes_from_quadratures([1, 0, 0, 1]), [1 / SQRT2, 1j / SQRT2])
    with pytest.raises(ValueError):
        amplitudes_from_quadratures([1, 2, 3])


def test_spec_is_immutable():
    spec = epr_ket(3, 2.0)
    with pytest.raises(ValueError):
        spec.coupling[0, 0] = 1.0
