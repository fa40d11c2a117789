"""Gaussian kets of the form ``N * exp(lam . a^dag + 1/2 a^dag^T F a^dag)|0>``.

Two families are built here: the regularised EPR-type kets (regulator ``s``)
and the NOPA-type squeezed vacua (squeezing ``r``), in two and three modes.
Every ket is stored as coefficient data only; nothing is expanded in a basis.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

SQRT2 = math.sqrt(2.0)

# |s - s0| below this (relative) counts as sitting on a singular regulator
_SINGULAR_RTOL = 1e-12


class Regime(str, Enum):
    FORMAL = "formal"
    SINGULAR = "singular"
    NORMALIZABLE = "normalizable"


@dataclass(frozen=True)
class Regulator:
    """The regularisation parameter ``s > 1``."""

    s: float

    def __post_init__(self):
        s = float(self.s)
        if not math.isfinite(s) or s <= 1.0:
            raise ValueError(f"regulator must satisfy s > 1, got s={self.s!r}")
        object.__setattr__(self, "s", s)

    def classification(self, modes: int) -> Regime:
        if modes == 2:
            return Regime.NORMALIZABLE
        if modes != 3:
            raise ValueError(f"no regime classification for {modes} modes")
        if abs(self.s - SQRT2) <= _SINGULAR_RTOL * SQRT2:
            return Regime.SINGULAR
        return Regime.FORMAL if self.s < SQRT2 else Regime.NORMALIZABLE


@dataclass(frozen=True)
class SqueezingParam:
    r: float

    def __post_init__(self):
        r = float(self.r)
        if not math.isfinite(r) or r < 0.0:
            raise ValueError(f"squeezing must be finite and >= 0, got r={self.r!r}")
        object.__setattr__(self, "r", r)


def _as_regulator(s) -> Regulator:
    return s if isinstance(s, Regulator) else Regulator(s)


def _as_squeezing(r) -> SqueezingParam:
    return r if isinstance(r, SqueezingParam) else SqueezingParam(r)


def _as_eta(eta, modes: int) -> np.ndarray:
    if eta is None:
        return np.zeros(modes, dtype=complex)
    arr = np.asarray(eta, dtype=complex).reshape(-1)
    if arr.shape[0] != modes:
        raise ValueError(f"eta has {arr.shape[0]} entries, expected {modes}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("eta entries must be finite")
    return arr


def spectral_norm(F: np.ndarray) -> float:
    return float(np.linalg.norm(F, 2))


def unit_norm(F: np.ndarray) -> float:
    """``det(I - F^dag F)^(1/4)``, the unit-norm constant of ``exp(1/2 a^dag F a^dag)|0>``."""
    d = np.linalg.det(np.eye(F.shape[0]) - F.conj().T @ F).real
    return float(d ** 0.25)


@dataclass(frozen=True, eq=False)
class GaussianKetSpec:
    """Coefficient data of ``norm * prefactor * exp(drive . a^dag + 1/2 a^dag^T coupling a^dag)|0>``.

    ``norm`` follows the unit-norm convention ``det(I - F^dag F)^(1/4)``; it is
    0 at a singular regulator and NaN in the formal regime (use
    :meth:`formal_norm_squared` there).  ``family`` is one of ``"epr"`` or
    ``"nopa"``; ``param`` is the matching ``s`` or ``r``.
    """

    modes: int
    norm: float
    drive: np.ndarray
    coupling: np.ndarray
    scalar_prefactor: float
    regime: Regime
    family: str
    param: float
    eta: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in ("drive", "coupling", "eta"):
            val = getattr(self, name)
            if val is not None:
                val = np.array(val, dtype=complex)
                val.setflags(write=False)
                object.__setattr__(self, name, val)
        F = self.coupling
        if F.shape != (self.modes, self.modes) or not np.array_equal(F, F.T):
            raise ValueError("coupling must be an exactly symmetric N x N matrix")

    @property
    def is_normalizable(self) -> bool:
        return self.regime is Regime.NORMALIZABLE

    @property
    def s(self) -> float | None:
        return self.param if self.family == "epr" else None

    @property
    def r(self) -> float | None:
        return self.param if self.family == "nopa" else None

    def coupling_spectral_norm(self) -> float:
        return spectral_norm(self.coupling)

    def determinant(self) -> float:
        """``det(I - F^dag F)``; negative in the formal regime."""
        F = self.coupling
        return float(np.linalg.det(np.eye(self.modes) - F.conj().T @ F).real)

    def formal_norm_squared(self) -> float:
        """``|det(I - F^dag F)|^(1/2)``: the analytically continued ``|N|^2``."""
        return math.sqrt(abs(self.determinant()))

    def to_dict(self) -> dict:
        d = {
            "modes": self.modes,
            "family": self.family,
            "s" if self.family == "epr" else "r": self.param,
            "eta": [[z.real, z.imag] for z in (self.eta if self.eta is not None else [])],
            "F": self._coupling_rows(),
            "norm": None if math.isnan(self.norm) else self.norm,
            "regime": self.regime.value,
        }
        return d

    def _coupling_rows(self) -> list:
        F = np.asarray(self.coupling)
        if np.all(np.imag(F) == 0):
            return np.real(F).tolist()
        return [[[z.real, z.imag] for z in row] for row in F]

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _epr_coupling(modes: int, s: float) -> np.ndarray:
    f = 1.0 / s**2
    return f * (np.ones((modes, modes)) - np.eye(modes))


def epr_ket(modes: int, s, eta=None) -> GaussianKetSpec:
    """Regularised EPR-type ket in 2 or 3 modes.

    The bipartite ket takes the two entries of ``eta`` as the drives of the
    two modes directly, so the single-parameter form ``(eta, -eta*)`` must be
    passed explicitly.  The scalar prefactor is ``exp(-sum|eta_j|^2 / 4s^2)``
    in both cases, which for ``(eta, -eta*)`` reproduces ``exp(-|eta|^2/2s^2)``.
    """
    if modes not in (2, 3):
        raise ValueError(f"EPR-type kets exist for 2 or 3 modes, got {modes}")
    reg = _as_regulator(s)
    eta = _as_eta(eta, modes)
    s = reg.s
    regime = reg.classification(modes)
    F = _epr_coupling(modes, s)
    if regime is Regime.NORMALIZABLE:
        norm = unit_norm(F)
    elif regime is Regime.SINGULAR:
        norm = 0.0
    else:
        norm = math.nan
    prefactor = math.exp(-float(np.sum(np.abs(eta) ** 2)) / (4 * s**2))
    return GaussianKetSpec(
        modes=modes,
        norm=norm,
        drive=eta / s,
        coupling=F,
        scalar_prefactor=prefactor,
        regime=regime,
        family="epr",
        param=s,
        eta=eta,
    )


def nopa2_ket(r) -> GaussianKetSpec:
    r = _as_squeezing(r).r
    t = math.tanh(r)
    F = np.array([[0.0, t], [t, 0.0]])
    return GaussianKetSpec(
        modes=2,
        norm=math.sqrt(1.0 - t * t),
        drive=np.zeros(2),
        coupling=F,
        scalar_prefactor=1.0,
        regime=Regime.NORMALIZABLE,
        family="nopa",
        param=r,
        eta=np.zeros(2),
    )


def _nopa3_coupling(t: float) -> np.ndarray:
    return t * (np.full((3, 3), 2.0 / 3.0) - np.eye(3))


def nopa3_ket(r) -> GaussianKetSpec:
    """Three-mode NOPA-like ket: ``F_ii = -tanh(r)/3``, ``F_ij = 2 tanh(r)/3``."""
    r = _as_squeezing(r).r
    t = math.tanh(r)
    return GaussianKetSpec(
        modes=3,
        norm=(1.0 - t * t) ** 0.75,
        drive=np.zeros(3),
        coupling=_nopa3_coupling(t),
        scalar_prefactor=1.0,
        regime=Regime.NORMALIZABLE,
        family="nopa",
        param=r,
        eta=np.zeros(3),
    )


def beamsplitter_matrix(i: int, j: int, theta: float, modes: int = 3) -> np.ndarray:
    """Mode substitution ``a_i -> a_i cos + a_j sin``, ``a_j -> -a_i sin + a_j cos``."""
    O = np.eye(modes)
    c, s = math.cos(theta), math.sin(theta)
    O[i, i], O[i, j], O[j, i], O[j, j] = c, s, -s, c
    return O


def nopa3_from_beamsplitters(r) -> GaussianKetSpec:
    """Build the three-mode NOPA ket from single-mode squeezers and two beamsplitters.

    Mode 1 is momentum squeezed (``+tanh r``), modes 2 and 3 position
    squeezed (``-tanh r``).  ``B12(arccos 1/sqrt3)`` acts first and
    ``B23(pi/4)`` second; substituting both mode maps into the exponent turns
    ``F0`` into ``O^T F0 O`` with ``O = M12 @ M23``.
    """
    r = _as_squeezing(r).r
    t = math.tanh(r)
    F0 = np.diag([t, -t, -t])
    O = beamsplitter_matrix(0, 1, math.acos(1 / math.sqrt(3))) @ beamsplitter_matrix(1, 2, math.pi / 4)
    F = O.T @ F0 @ O
    F = 0.5 * (F + F.T)
    # single-mode squeezers are unit norm; the passive transform keeps it
    norm = (1.0 - t * t) ** 0.75
    return GaussianKetSpec(
        modes=3,
        norm=norm,
        drive=np.zeros(3),
        coupling=F,
        scalar_prefactor=1.0,
        regime=Regime.NORMALIZABLE,
        family="nopa",
        param=r,
        eta=np.zeros(3),
    )


def squeezing_correspondence(s) -> SqueezingParam:
    """NOPA squeezing matching regulator ``s`` through ``tanh r = 1/s^2``."""
    s = _as_regulator(s).s
    return SqueezingParam(math.atanh(1.0 / s**2))


def jacobi_mode_map() -> np.ndarray:
    """Orthogonal map from modes (1, 2, 3) to (a_rel, b_rel, a_cm)."""
    return np.array(
        [
            [1.0, 0.0, -1.0],
            [1.0, -2.0, 1.0],
            [1.0, 1.0, 1.0],
        ]
    ) / np.array([[math.sqrt(2)], [math.sqrt(6)], [math.sqrt(3)]])


@dataclass(frozen=True, eq=False)
class EigenRelation:
    """``sum_j (ann_j a_j + cre_j a_j^dag) |psi> = eigenvalue |psi>``."""

    annihilation: np.ndarray
    creation: np.ndarray
    eigenvalue: complex
    label: str = ""

    @property
    def mode_coeffs(self) -> list[tuple[complex, complex]]:
        return [(complex(c), complex(a)) for c, a in zip(self.creation, self.annihilation)]

    def quadrature_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        """Coefficients of ``X_j`` and ``P_j`` with ``a = (X + iP)/sqrt2``."""
        x = (self.annihilation + self.creation) / SQRT2
        p = 1j * (self.annihilation - self.creation) / SQRT2
        return x, p

    def bogoliubov(self) -> tuple[float, float]:
        """``(u, v)`` with the relation read as ``u b + v b^dag`` on one normalised mode ``b``.

        Only meaningful when both coefficient vectors are parallel, which
        holds for every relation built here.
        """
        u = float(np.linalg.norm(self.annihilation))
        v = float(np.linalg.norm(self.creation))
        if u and v and np.vdot(self.annihilation, self.creation).real < 0:
            v = -v
        return u, v

    def normalized_bogoliubov(self) -> tuple[float, float]:
        u, v = self.bogoliubov()
        k = math.sqrt(abs(u * u - v * v))
        if k == 0.0:
            raise ValueError("relation is not a Bogoliubov combination (|u| = |v|)")
        return u / k, v / k

    def squeezing_parameter(self) -> float:
        """``artanh`` of the smaller over the larger of ``|u|, |v|``."""
        u, v = (abs(x) for x in self.bogoliubov())
        hi = max(u, v)
        return math.atanh(min(u, v) / hi) if hi else 0.0


def eigen_relations(modes: int, s, eta=None) -> list[EigenRelation]:
    """Three families of eigen-relations of the tripartite EPR-type ket.

    Returns nine relations in order: annihilation form (3), quadrature form
    (3), Jacobi-mode form (3).
    """
    if modes != 3:
        raise ValueError("eigen-relations are only tabulated for three modes")
    s = _as_regulator(s).s
    eta = _as_eta(eta, 3)
    f = 1.0 / s**2
    e1, e2, e3 = eta
    rels = []

    for i in range(3):
        ann = np.zeros(3, dtype=complex)
        ann[i] = 1.0
        cre = -f * (np.ones(3) - np.eye(3)[i])
        rels.append(EigenRelation(ann, cre.astype(complex), complex(eta[i] / s), f"annihilation[{i}]"))

    # (1/sqrt2)(s+1/s)(X_i - X_j) + (i/sqrt2)(s-1/s)(P_i - P_j)  ==  s(a_i-a_j) + (a_i^dag-a_j^dag)/s
    diff12 = np.array([1.0, -1.0, 0.0])
    diff23 = np.array([0.0, 1.0, -1.0])
    total = np.ones(3)
    rels.append(EigenRelation(s * diff12 + 0j, diff12 / s + 0j, complex(e1 - e2), "quadrature[0]"))
    rels.append(EigenRelation(s * diff23 + 0j, diff23 / s + 0j, complex(e2 - e3), "quadrature[1]"))
    rels.append(EigenRelation(s * total + 0j, -2.0 / s * total + 0j, complex(e1 + e2 + e3), "quadrature[2]"))

    M = jacobi_mode_map()
    rels.append(EigenRelation(s * M[0] + 0j, M[0] / s + 0j, complex((e1 - e3) / SQRT2), "jacobi[0]"))
    rels.append(
        EigenRelation(s * M[1] + 0j, M[1] / s + 0j, complex((e1 - 2 * e2 + e3) / math.sqrt(6)), "jacobi[1]")
    )
    rels.append(
        EigenRelation(s * M[2] + 0j, -2.0 / s * M[2] + 0j, complex((e1 + e2 + e3) / math.sqrt(3)), "jacobi[2]")
    )
    return rels


def ket_from_dict(d: dict) -> GaussianKetSpec:
    """Rebuild a spec from :meth:`GaussianKetSpec.to_dict` output."""
    modes = int(d["modes"])
    if d.get("family") == "nopa":
        return nopa2_ket(d["r"]) if modes == 2 else nopa3_ket(d["r"])
    eta = [complex(re, im) for re, im in d.get("eta") or []] or None
    return epr_ket(modes, d["s"], eta)


def as_amplitudes(values: Sequence[complex] | np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError("amplitudes must be finite")
    return arr


def amplitudes_from_quadratures(xp: Sequence[float]) -> np.ndarray:
    """``(x1, p1, x2, p2, ...) -> alpha_j = (x_j + i p_j)/sqrt2``."""
    xp = np.asarray(xp, dtype=float).reshape(-1)
    if xp.size % 2:
        raise ValueError("quadrature list must have even length")
    return (xp[0::2] + 1j * xp[1::2]) / SQRT2
