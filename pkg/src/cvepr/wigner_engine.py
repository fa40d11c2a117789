"""Wigner functions of Gaussian kets as displaced-parity expectation values.

Two independent routes live here:

* the general pipeline, which writes ``<psi| Pi(alpha) |psi>`` in
  anti-normal order, inserts coherent states and evaluates the resulting
  complex Gaussian (Berezin) integral through a ``2N x 2N`` block matrix;
* the closed forms for the tripartite EPR-type and NOPA-type kets.

Amplitudes follow ``alpha_j = (x_j + i p_j)/sqrt2`` and ``W = (2/pi)^N <Pi>``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gaussian_core import (
    GaussianKetSpec,
    Regime,
    Regulator,
    epr_ket,
    _as_eta,
    _as_regulator,
    _as_squeezing,
    as_amplitudes,
)

# exp() of anything beyond this is clipped to inf / 0 and flagged
EXPONENT_LIMIT = 700.0


class SingularIntegralError(ArithmeticError):
    pass


class ShiftConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class WignerValue:
    """A Wigner value plus the regime of the ket it came from.

    ``log_w`` is ``log W`` and stays finite when ``w`` is clipped.
    """

    w: float
    regime: Regime
    log_w: float
    clipped: bool = False

    def __float__(self):
        return self.w


def parity_of(value: WignerValue, modes: int) -> float:
    """``(pi/2)^N W``."""
    return float(value.w * (math.pi / 2) ** modes)


def _finish(log_w: float, regime: Regime) -> WignerValue:
    if log_w > EXPONENT_LIMIT:
        return WignerValue(math.inf, regime, log_w, clipped=True)
    if log_w < -EXPONENT_LIMIT:
        return WignerValue(0.0, regime, log_w, clipped=True)
    return WignerValue(math.exp(log_w), regime, log_w)


def _check_regulator(s, modes: int) -> Regulator:
    reg = _as_regulator(s)
    if reg.classification(modes) is Regime.SINGULAR:
        raise SingularIntegralError(f"s={reg.s!r} is a singular regulator for {modes} modes")
    return reg


def _point(pt, modes: int) -> np.ndarray:
    amps = as_amplitudes(pt)
    if amps.shape[0] != modes:
        raise ValueError(f"phase point has {amps.shape[0]} amplitudes, spec has {modes} modes")
    return amps


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    """Blocks of the Berezin quadratic form; ``assembled()`` returns ``((C, D), (A, B))``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def assembled(self) -> np.ndarray:
        return np.block([[self.C, self.D], [self.A, self.B]])

    def check_symmetry(self, atol: float = 0.0) -> bool:
        return (
            np.allclose(self.A, self.A.T, rtol=0, atol=atol)
            and np.allclose(self.D, self.D.T, rtol=0, atol=atol)
            and np.allclose(self.C, self.B.T, rtol=0, atol=atol)
        )


def sqrt_det_homotopy(M: np.ndarray) -> complex:
    """``det(M)^(1/2)`` continued from ``det(I)^(1/2) = 1`` along ``I + t(M - I)``.

    The eigenvalues of ``I + t(M - I)`` move on straight lines from 1 to the
    eigenvalues of ``M``, so each factor's continuous square root is the
    principal one unless an eigenvalue lands on the negative real axis,
    where the path runs through 0 and the branch is genuinely undefined.
    """
    ev = np.linalg.eigvals(M)
    scale = max(1.0, float(np.max(np.abs(ev))))
    out = 1.0 + 0j
    for lam in ev:
        if abs(lam) <= 1e-14 * scale:
            raise SingularIntegralError("block matrix is singular")
        out *= cmath.sqrt(complex(lam))
    return out


def berezin_integral(m: BlockMatrix, mu_nu: Sequence[complex]) -> tuple[complex, complex]:
    """Closed form of ``int prod d^2z/pi exp(-1/2 (z,z*)[[A,B],[C,D]](z;z*) + (mu,nu*).(z;z*))``.

    Returns ``(prefactor, exponent)`` with ``prefactor = det((C,D),(A,B))^(-1/2)``
    and ``exponent = 1/2 (mu, nu*) ((C,D),(A,B))^(-1) (nu*; mu)``.
    """
    if not m.check_symmetry(atol=1e-12):
        raise ValueError("block matrix needs A = A^T, D = D^T, C = B^T")
    K = m.assembled()
    v = np.asarray(mu_nu, dtype=complex).reshape(-1)
    n = K.shape[0] // 2
    if v.shape[0] != 2 * n:
        raise ValueError(f"vector length {v.shape[0]} does not match a {2 * n}x{2 * n} block matrix")
    sq = sqrt_det_homotopy(K)
    try:
        sol = np.linalg.solve(K, np.concatenate([v[n:], v[:n]]))
    except np.linalg.LinAlgError as exc:
        raise SingularIntegralError("block matrix is singular") from exc
    return 1.0 / sq, 0.5 * complex(v @ sol)


def block_matrix_for(spec: GaussianKetSpec) -> BlockMatrix:
    F = np.asarray(spec.coupling, dtype=complex)
    eye = np.eye(spec.modes, dtype=complex)
    return BlockMatrix(A=-F.conj(), B=eye, C=eye, D=-F)


def wigner_displaced_parity(spec: GaussianKetSpec, pt) -> WignerValue:
    """Wigner function of ``spec`` at ``pt`` through the Berezin-integral pipeline.

    In the formal regime the ket has no finite norm; there the product
    ``|N|^2 det^(-1/2)`` is continued as ``|det|^(1/2) |det|^(-1/2)``, the
    same algebra that cancels the two factors for a normalisable ket.
    """
    if spec.regime is Regime.SINGULAR:
        raise SingularIntegralError(f"{spec.family} ket at a singular regulator has no Wigner function")
    alpha = _point(pt, spec.modes)
    lam = np.asarray(spec.drive, dtype=complex)
    mu = lam.conj() - 2 * alpha.conj()
    nu = 2 * alpha - lam
    prefactor, exponent = berezin_integral(block_matrix_for(spec), np.concatenate([mu, nu]))
    if spec.regime is Regime.FORMAL:
        log_amp = math.log(spec.formal_norm_squared()) + math.log(abs(prefactor))
    else:
        log_amp = 2 * math.log(spec.norm) + math.log(prefactor.real)
        if abs(prefactor.imag) > 1e-12 * abs(prefactor.real):
            raise SingularIntegralError("determinant is not positive for a normalisable ket")
    log_w = (
        spec.modes * math.log(2 / math.pi)
        + log_amp
        + 2 * math.log(spec.scalar_prefactor)
        + 2 * float(np.sum(np.abs(alpha) ** 2))
        + exponent.real
    )
    return _finish(log_w, spec.regime)


@dataclass(frozen=True)
class WignerCoefficients:
    C1: float
    C2: float
    C3: float
    C4: float
    denom: float

    @classmethod
    def for_regulator(cls, s) -> "WignerCoefficients":
        s = _check_regulator(s, 3).s
        s2, s4, s8 = s**2, s**4, s**8
        return cls(
            C1=-2 * (s8 - s4 - 4),
            C2=4 * s2 * (s4 - 2),
            C3=-4 * s4,
            C4=4 * s2,
            denom=(s4 - 4) * (s4 - 1),
        )


def _epr3_exponent(c: WignerCoefficients, a: complex, b: complex, g: complex) -> float:
    ac, bc, gc = a.conjugate(), b.conjugate(), g.conjugate()
    mod2 = abs(a) ** 2 + abs(b) ** 2 + abs(g) ** 2
    pairs = a * b + a * g + b * g
    mixed = a * bc + a * gc + b * ac + b * gc + g * ac + g * bc
    squares = a * a + b * b + g * g
    bracket = c.C1 * mod2 + c.C2 * 2 * pairs.real + c.C3 * mixed.real + c.C4 * 2 * squares.real
    return bracket / c.denom


def wigner_epr3_closed(s, pt) -> WignerValue:
    """Closed-form Wigner function of the tripartite EPR-type ket (``eta = 0``)."""
    reg = _check_regulator(s, 3)
    a, b, g = (complex(z) for z in _point(pt, 3))
    expo = _epr3_exponent(WignerCoefficients.for_regulator(reg), a, b, g)
    return _finish(math.log(8 / math.pi**3) + expo, reg.classification(3))


def wigner_epr3_polar(s, mags: Sequence[float], phases: Sequence[float]) -> WignerValue:
    reg = _check_regulator(s, 3)
    c = WignerCoefficients.for_regulator(reg)
    ra, rb, rg = (float(x) for x in mags)
    pa, pb, pg = (float(x) for x in phases)
    if min(ra, rb, rg) < 0:
        raise ValueError("magnitudes must be non-negative")
    bracket = (
        c.C1 * (ra**2 + rb**2 + rg**2)
        + 2 * c.C2 * (ra * rb * math.cos(pa + pb) + rb * rg * math.cos(pb + pg) + rg * ra * math.cos(pg + pa))
        + 2 * c.C3 * (ra * rb * math.cos(pb - pa) + rb * rg * math.cos(pg - pb) + rg * ra * math.cos(pg - pa))
        + 2 * c.C4 * (ra**2 * math.cos(2 * pa) + rb**2 * math.cos(2 * pb) + rg**2 * math.cos(2 * pg))
    )
    return _finish(math.log(8 / math.pi**3) + bracket / c.denom, reg.classification(3))


def wigner_nopa3_closed(r, pt) -> WignerValue:
    r = _as_squeezing(r).r
    a, b, g = (complex(z) for z in _point(pt, 3))
    mod2 = abs(a) ** 2 + abs(b) ** 2 + abs(g) ** 2
    squares = 2 * (a * a + b * b + g * g).real
    pairs = 2 * (a * b + b * g + g * a).real
    expo = -2 * math.cosh(2 * r) * mod2 - math.sinh(2 * r) / 3 * squares + 4 * math.sinh(2 * r) / 3 * pairs
    return _finish(math.log(8 / math.pi**3) + expo, Regime.NORMALIZABLE)


def wigner_nopa2_closed(r, pt) -> WignerValue:
    """Two-mode squeezed vacuum ``sqrt(1 - tanh^2 r) exp(tanh r a^dag b^dag)|00>``."""
    r = _as_squeezing(r).r
    a, b = (complex(z) for z in _point(pt, 2))
    expo = -2 * math.cosh(2 * r) * (abs(a) ** 2 + abs(b) ** 2) + 4 * math.sinh(2 * r) * (a * b).real
    return _finish(math.log(4 / math.pi**2) + expo, Regime.NORMALIZABLE)


def wigner_epr2(s, pt) -> WignerValue:
    """Bipartite EPR-type ket (``eta = 0``), evaluated on the general pipeline."""
    return wigner_displaced_parity(epr_ket(2, s), pt)


def eta_shift(pt_shifted, eta, s) -> tuple[np.ndarray, float]:
    """Absorb the ``eta`` drives into a displacement of the phase point.

    ``pt_shifted`` holds ``alpha'``; returns ``alpha = alpha' + eta/(2s)`` and
    ``E = exp(sum(alpha' eta* + alpha'* eta)/s)``.  With these,
    ``W_eta(alpha) = E * W_0(alpha')``.  Each pair must satisfy
    ``alpha' eta* + alpha'* eta = 0``.
    """
    s = _as_regulator(s).s
    ap = as_amplitudes(pt_shifted)
    eta = _as_eta(eta, ap.shape[0])
    cross = 2 * (ap * eta.conj()).real
    scale = np.maximum(1.0, np.abs(ap) * np.abs(eta))
    bad = np.nonzero(np.abs(cross) > 1e-12 * scale)[0]
    if bad.size:
        raise ShiftConstraintError(
            f"alpha' eta* + alpha'* eta != 0 for mode(s) {bad.tolist()}: {cross[bad].tolist()}"
        )
    factor = math.exp(float(np.sum(cross)) / s)
    return ap + eta / (2 * s), factor


def exponent_quadratic_form(fn, modes: int) -> np.ndarray:
    """Real symmetric ``Q`` with ``log W(xi) - log W(0) = -xi^T Q xi``.

    ``xi = (Re alpha_1, Im alpha_1, ...)``; ``fn`` maps an amplitude vector to
    a :class:`WignerValue` whose log is a quadratic form, and ``Q`` is read
    off by polarisation.
    """
    n = 2 * modes
    base = fn(np.zeros(modes, dtype=complex)).log_w

    def amp(xi):
        return xi[0::2] + 1j * xi[1::2]

    def q(xi):
        return -(fn(amp(xi)).log_w - base)

    E = np.eye(n)
    diag = np.array([q(E[i]) for i in range(n)])
    Q = np.diag(diag)
    for i in range(n):
        for j in range(i + 1, n):
            Q[i, j] = Q[j, i] = 0.5 * (q(E[i] + E[j]) - diag[i] - diag[j])
    return Q


def gaussian_total_integral(fn, modes: int) -> float:
    """``int W d^2alpha_1 ... d^2alpha_N`` for a Gaussian ``W`` centred at 0.

    Raises if the exponent is not negative definite.
    """
    Q = exponent_quadratic_form(fn, modes)
    ev = np.linalg.eigvalsh(Q)
    if ev.min() <= 0:
        raise ArithmeticError("exponent is not negative definite; the integral diverges")
    w0 = fn(np.zeros(modes, dtype=complex)).w
    return float(w0 * math.pi**modes / math.sqrt(np.prod(ev)))
