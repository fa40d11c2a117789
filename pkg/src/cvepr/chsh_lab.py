"""CHSH combinations of displaced-parity expectations and their maximisation.

Displacement patterns are parametrised by ``J``, the squared quadrature
displacement: the all-imaginary pattern puts ``p_j = sqrt(J)`` on every mode,
i.e. ``alpha_j = i sqrt(J/2)``; the real pair puts ``x_1 = -sqrt(J)``,
``x_2 = +sqrt(J)``.  With this reading the closed-form branches below are
exactly the CHSH combination evaluated on the pattern.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .gaussian_core import Regime, Regulator, SqueezingParam, epr_ket, nopa2_ket, nopa3_ket, SQRT2
from .wigner_engine import (
    SingularIntegralError,
    wigner_displaced_parity,
    wigner_epr3_closed,
    wigner_nopa2_closed,
    wigner_nopa3_closed,
)

CLASSICAL_BOUND = 2.0


class Branch(str, Enum):
    IMAGINARY = "imaginary"
    REAL_PAIR = "real_pair"
    GENERAL = "general"
    BIPARTITE = "bipartite"


# regulator values where each branch blows up
SINGULAR_S = {
    Branch.IMAGINARY: (1.0, SQRT2),
    Branch.REAL_PAIR: (1.0,),
    Branch.GENERAL: (1.0, SQRT2),
    Branch.BIPARTITE: (1.0,),
}


@dataclass(frozen=True)
class BellValue:
    b: float
    regime: Regime

    @property
    def violates(self) -> bool:
        return abs(self.b) > CLASSICAL_BOUND

    def __float__(self):
        return self.b


@dataclass(frozen=True)
class BellConfig:
    branch: Branch
    J: float
    s_or_r: Regulator | SqueezingParam
    phases: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.J >= 0:
            raise ValueError(f"J must be >= 0, got {self.J!r}")
        object.__setattr__(self, "branch", Branch(self.branch))

    def amplitudes(self) -> np.ndarray:
        return pattern_amplitudes(self.branch, self.J, self.phases)


def pattern_amplitudes(branch, J: float, phases: Sequence[float] = ()) -> np.ndarray:
    """Displacements ``(alpha, beta[, gamma])`` for a patterned branch."""
    branch = Branch(branch)
    a = math.sqrt(J / 2)
    if branch is Branch.IMAGINARY:
        return np.array([1j * a] * 3)
    if branch is Branch.REAL_PAIR:
        return np.array([-a, a, 0.0], dtype=complex)
    if branch is Branch.BIPARTITE:
        return np.array([1j * a] * 2)
    if len(phases) != 3:
        raise ValueError("the general branch needs three phases")
    return np.array([a * np.exp(1j * p) for p in phases])


@dataclass(frozen=True)
class ParityProvider:
    """``Pi(amps) = (pi/2)^N W(amps)`` for one ket family at fixed parameter.

    ``route="closed"`` uses the closed forms where they exist; the
    bipartite EPR-type ket has none and always goes through the engine.
    """

    family: str
    modes: int
    param: float
    route: str = "closed"

    def __post_init__(self):
        if self.family not in ("epr", "nopa"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.modes not in (2, 3):
            raise ValueError("providers exist for 2 or 3 modes")
        if self.route not in ("closed", "engine"):
            raise ValueError(f"unknown route {self.route!r}")
        if self.family == "epr":
            Regulator(self.param)
        else:
            SqueezingParam(self.param)

    @property
    def effective_route(self) -> str:
        if self.family == "epr" and self.modes == 2:
            return "engine"
        return self.route

    @property
    def regime(self) -> Regime:
        if self.family == "nopa":
            return Regime.NORMALIZABLE
        return Regulator(self.param).classification(self.modes)

    def spec(self):
        if self.family == "epr":
            return epr_ket(self.modes, self.param)
        return nopa2_ket(self.param) if self.modes == 2 else nopa3_ket(self.param)

    def wigner(self, amps):
        if self.effective_route == "engine":
            return wigner_displaced_parity(self.spec(), amps)
        if self.family == "epr":
            return wigner_epr3_closed(self.param, amps)
        if self.modes == 3:
            return wigner_nopa3_closed(self.param, amps)
        return wigner_nopa2_closed(self.param, amps)

    def __call__(self, amps) -> float:
        return self.wigner(amps).w * (math.pi / 2) ** self.modes


def parity_provider(family: str, modes: int, param: float, route: str = "closed") -> ParityProvider:
    return ParityProvider(family, modes, float(param), route)


def bell_b2(provider: ParityProvider, alpha: complex, beta: complex) -> BellValue:
    if provider.modes != 2:
        raise ValueError("B2 needs a bipartite provider")
    P = provider
    b = P([0, 0]) + P([0, beta]) + P([alpha, 0]) - P([alpha, beta])
    return BellValue(float(b), provider.regime)


def bell_b3(provider: ParityProvider, alpha: complex, beta: complex, gamma: complex) -> BellValue:
    if provider.modes != 3:
        raise ValueError("B3 needs a tripartite provider")
    P = provider
    b = P([0, 0, gamma]) + P([0, beta, 0]) + P([alpha, 0, 0]) - P([alpha, beta, gamma])
    return BellValue(float(b), provider.regime)


# closed-form branches; array-friendly so scans can vectorise


def _b3_imaginary(s, J):
    u = np.asarray(s, dtype=float) ** 2
    single = -J * (u * u - u + 2) / ((u + 1) * (u - 2))
    triple = -3 * J * (u + 2) / (u - 2)
    # the formal regime can overflow to -inf; that is the value, not an error
    with np.errstate(over="ignore"):
        return 3 * np.exp(single) - np.exp(triple)


def _b3_real(s, J):
    u = np.asarray(s, dtype=float) ** 2
    single = -J * (u * u + u + 2) / ((u - 1) * (u + 2))
    pair = -2 * J * (u + 1) / (u - 1)
    with np.errstate(over="ignore"):
        return 1 + 2 * np.exp(single) - np.exp(pair)


def _b2_imaginary(s, J):
    u = np.asarray(s, dtype=float) ** 2
    single = -J * (u * u + 1) / (u * u - 1)
    pair = -2 * J * (u + 1) / (u - 1)
    return 1 + 2 * np.exp(single) - np.exp(pair)


def _check_branch_args(s, J, singular) -> Regulator:
    reg = Regulator(s)
    if any(abs(reg.s - s0) <= 1e-12 * s0 for s0 in singular):
        raise SingularIntegralError(f"s={reg.s!r} is singular for this branch")
    if not J >= 0:
        raise ValueError(f"J must be >= 0, got {J!r}")
    return reg


def b3_imaginary(s, J: float) -> BellValue:
    reg = _check_branch_args(s, J, SINGULAR_S[Branch.IMAGINARY])
    return BellValue(float(_b3_imaginary(reg.s, J)), reg.classification(3))


def b3_real(s, J: float) -> BellValue:
    reg = _check_branch_args(s, J, SINGULAR_S[Branch.REAL_PAIR])
    return BellValue(float(_b3_real(reg.s, J)), reg.classification(3))


def b2_imaginary(s, J: float) -> BellValue:
    """Bipartite all-imaginary branch ``1 + 2 exp(-J (s^4+1)/(s^4-1)) - exp(-2J (s^2+1)/(s^2-1))``."""
    reg = _check_branch_args(s, J, SINGULAR_S[Branch.BIPARTITE])
    return BellValue(float(_b2_imaginary(reg.s, J)), Regime.NORMALIZABLE)


@dataclass(frozen=True)
class AsymptoticBranch:
    lambda_: float

    def __post_init__(self):
        if not self.lambda_ > 1:
            raise ValueError(f"exponent ratio must exceed 1, got {self.lambda_!r}")

    @property
    def x_star(self) -> float:
        lam = self.lambda_
        return (3 / lam) ** (1 / (lam - 1))


def b3_asymptotic_max(branch: AsymptoticBranch | float) -> float:
    """Maximum of ``3x - x^lambda`` over ``x``: ``(lambda-1)(3/lambda)^(lambda/(lambda-1))``."""
    if not isinstance(branch, AsymptoticBranch):
        branch = AsymptoticBranch(float(branch))
    lam = branch.lambda_
    return (lam - 1) * (3 / lam) ** (lam / (lam - 1))


def branch_function(branch) -> Callable:
    """Vectorised ``B(s, J)`` for the closed-form branches."""
    branch = Branch(branch)
    table = {Branch.IMAGINARY: _b3_imaginary, Branch.REAL_PAIR: _b3_real, Branch.BIPARTITE: _b2_imaginary}
    if branch not in table:
        raise ValueError(f"branch {branch.value!r} has no closed form")
    return table[branch]


def general_b3(s: float, xs: Sequence[float]) -> float:
    """``B3`` at ``alpha, beta, gamma = (xs[0] + i xs[1]), ...`` from the closed-form Wigner function."""
    a, b, g = (xs[0] + 1j * xs[1], xs[2] + 1j * xs[3], xs[4] + 1j * xs[5])
    return bell_b3(parity_provider("epr", 3, s), a, b, g).b


def bipartite_b2(s: float, J: float) -> float:
    a = pattern_amplitudes(Branch.BIPARTITE, J)
    return bell_b2(parity_provider("epr", 2, s), a[0], a[1]).b


# --- maximisation -----------------------------------------------------------


@dataclass
class MaxResult:
    branch: str
    domain: list
    max: float
    argmax: list
    iterations: int
    converged: bool
    regime: str = ""
    evaluations: int = 0

    @property
    def value(self) -> BellValue:
        return BellValue(self.max, Regime(self.regime) if self.regime else Regime.NORMALIZABLE)

    def report(self) -> dict:
        return {
            "branch": self.branch,
            "domain": self.domain,
            "max": self.max,
            "argmax": self.argmax,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _axis_points(lo: float, hi: float, n: int, geometric: bool) -> np.ndarray:
    pts = np.linspace(lo, hi, n)
    if geometric and hi > lo:
        w = hi - lo
        pts = np.concatenate([pts, lo + np.geomspace(1e-9 * w, w, n)])
    return np.unique(pts)


def _objective_for(branch: Branch) -> Callable[[np.ndarray], float]:
    if branch is Branch.GENERAL:
        return lambda x: general_b3(x[0], x[1:])
    if branch is Branch.BIPARTITE:
        return lambda x: bipartite_b2(x[0], x[1])
    fn = branch_function(branch)
    return lambda x: float(fn(x[0], x[1]))


def maximize_bell(
    objective,
    domain: Sequence[tuple[float, float]],
    grid: int = 41,
    top_k: int = 4,
    seeds: Sequence[Sequence[float]] = (),
    geometric_axes: Sequence[int] | None = None,
    xatol: float = 1e-10,
) -> MaxResult:
    """Grid scan then Nelder-Mead refinement from the ``top_k`` best cells.

    ``objective`` is a :class:`Branch` (or its name) or a callable on the
    full parameter vector, whose first entry is always ``s``.  Axes with
    ``lo == hi`` are held fixed.  Grid axes listed in ``geometric_axes``
    (default: ``s`` and ``J`` for the patterned branches, ``s`` only for
    the general one) are densified geometrically towards their lower end,
    where the singular limits sit.  Refinement works in box-normalised
    coordinates and stops once the simplex is smaller than ``xatol``.
    """
    if isinstance(objective, (str, Branch)):
        branch = Branch(objective)
        fn = _objective_for(branch)
        singular = SINGULAR_S[branch]
        name = branch.value
    else:
        branch, fn, singular, name = None, objective, (), getattr(objective, "__name__", "custom")
    box = np.array(domain, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2 or box.shape[0] == 0:
        raise ValueError("domain must be a non-empty list of (lo, hi) pairs")
    if np.any(box[:, 1] < box[:, 0]):
        raise ValueError("empty domain: some lo > hi")
    s_lo, s_hi = box[0]
    for s0 in singular:
        if s_lo - 1e-6 < s0 < s_hi + 1e-6:
            raise ValueError(f"s-range [{s_lo}, {s_hi}] comes within 1e-6 of the singular value {s0}")
    if geometric_axes is None:
        geometric_axes = (0,) if branch is Branch.GENERAL else tuple(range(min(2, len(box))))

    free = np.nonzero(box[:, 1] > box[:, 0])[0]
    lo, width = box[free, 0], box[free, 1] - box[free, 0]
    evals = 0

    def full(u):
        x = box[:, 0].copy()
        x[free] = lo + np.clip(u, 0.0, 1.0) * width
        return x

    def f(x):
        nonlocal evals
        evals += 1
        try:
            v = float(fn(x))
        except (ArithmeticError, ValueError, FloatingPointError) as exc:
            raise RuntimeError(f"objective evaluation failed at {x.tolist()}: {exc}") from exc
        return v if math.isfinite(v) else -math.inf

    axes = [
        _axis_points(box[i, 0], box[i, 1], grid, i in geometric_axes) if i in free else np.array([box[i, 0]])
        for i in range(len(box))
    ]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(box))
    candidates = [np.asarray(p, dtype=float) for p in mesh]
    candidates += [np.asarray(p, dtype=float) for p in seeds]
    scores = np.array([f(x) for x in candidates])
    order = np.argsort(-scores, kind="stable")

    best_x = candidates[order[0]]
    best_v = scores[order[0]]
    iterations = 0
    converged = free.size == 0
    if free.size:
        for idx in order[:top_k]:
            x0 = candidates[idx]
            u0 = (x0[free] - lo) / width
            # simplex edge ~ local grid spacing along each free axis
            steps = []
            for k, i in enumerate(free):
                pts = axes[i]
                j = np.searchsorted(pts, x0[i])
                nb = [abs(pts[m] - x0[i]) for m in (j - 1, j, j + 1) if 0 <= m < len(pts) and pts[m] != x0[i]]
                steps.append(max(min(nb) if nb else width[k] / grid, 1e-12 * width[k]) / width[k])
            simplex = [u0]
            for k, h in enumerate(steps):
                v = u0.copy()
                v[k] = v[k] + h if v[k] + h <= 1.0 else v[k] - h
                simplex.append(v)
            res = minimize(
                lambda u: -f(full(u)),
                u0,
                method="Nelder-Mead",
                bounds=[(0.0, 1.0)] * free.size,
                options={
                    "initial_simplex": np.array(simplex),
                    "xatol": xatol,
                    "fatol": 1e-15,
                    "maxiter": 20000,
                    "maxfev": 40000,
                },
            )
            iterations += int(res.nit)
            # Nelder-Mead keeps its best vertex, so a run never ends below its seed
            if -res.fun >= best_v:
                best_v, best_x = -float(res.fun), full(res.x)
                converged = bool(res.success)
    regime = Regulator(best_x[0]).classification(2 if branch is Branch.BIPARTITE else 3).value
    return MaxResult(
        branch=name,
        domain=box.tolist(),
        max=float(best_v),
        argmax=[float(v) for v in best_x],
        iterations=iterations,
        converged=converged,
        regime=regime,
        evaluations=evals,
    )


# --- surfaces ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BellSurface:
    branch: str
    s: np.ndarray
    J: np.ndarray
    B: np.ndarray  # shape (len(s), len(J))
    regimes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        for name in ("s", "J"):
            ax = getattr(self, name)
            if ax.size > 1 and not np.all(np.diff(ax) > 0):
                raise ValueError(f"{name} axis must be strictly increasing")
        if self.B.shape != (self.s.size, self.J.size):
            raise ValueError("B must have shape (len(s), len(J))")

    def argmax(self) -> tuple[int, int]:
        i, j = np.unravel_index(int(np.argmax(self.B)), self.B.shape)
        return int(i), int(j)

    def max(self) -> float:
        return float(np.max(self.B))

    def rows(self):
        for i, s in enumerate(self.s):
            for j, J in enumerate(self.J):
                yield self.branch, float(s), float(J), float(self.B[i, j]), self.regimes[i]

    def to_csv(self, fh=None) -> str | None:
        out = io.StringIO() if fh is None else fh
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["branch", "s", "J", "B", "regime"])
        for branch, s, J, b, regime in self.rows():
            w.writerow([branch, f"{s:.17g}", f"{J:.17g}", f"{b:.17g}", regime])
        return out.getvalue() if fh is None else None


def _workers() -> int:
    env = os.environ.get("CV_EPR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def scan_surface(branch, s_values: Sequence[float], J_values: Sequence[float]) -> BellSurface:
    """Evaluate a closed-form branch on the outer product of ``s_values`` and ``J_values``."""
    branch = Branch(branch)
    fn = branch_function(branch)
    s = np.asarray(s_values, dtype=float)
    J = np.asarray(J_values, dtype=float)
    if np.any(J < 0):
        raise ValueError("J values must be >= 0")
    for s0 in SINGULAR_S[branch]:
        if np.any(np.abs(s - s0) <= 1e-12 * s0):
            raise ValueError(f"s grid contains the singular value {s0}")
    if np.any(s <= 1.0):
        raise ValueError("s values must exceed 1")
    chunks = np.array_split(np.arange(s.size), max(1, min(_workers(), s.size)))

    def run(idx):
        return fn(s[idx, None], J[None, :])

    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(run, chunks))
    B = np.concatenate(parts, axis=0)
    modes = 2 if branch is Branch.BIPARTITE else 3
    regimes = tuple(Regulator(v).classification(modes).value for v in s)
    return BellSurface(branch.value, s, J, B, regimes)


@dataclass(frozen=True)
class FigurePreset:
    figure: int
    branch: Branch
    limit: float
    s_span: float
    J_max: float
    steps: int = 200
    margin: float = 1e-4

    def s_values(self) -> np.ndarray:
        return self.limit + np.geomspace(self.margin, self.s_span, self.steps)

    def J_values(self) -> np.ndarray:
        return np.concatenate([[0.0], np.geomspace(1e-8 * self.J_max, self.J_max, self.steps - 1)])


FIGURES = {
    1: FigurePreset(1, Branch.BIPARTITE, 1.0, 0.5, 1.0),
    2: FigurePreset(2, Branch.IMAGINARY, 1.0, 0.3, 2.0),
    3: FigurePreset(3, Branch.REAL_PAIR, 1.0, 0.5, 1.0),
    4: FigurePreset(4, Branch.IMAGINARY, SQRT2, 0.5, 1.0),
}


def figure_surface(k: int) -> BellSurface:
    try:
        p = FIGURES[int(k)]
    except KeyError:
        raise ValueError(f"no preset for figure {k!r}; choose 1-4") from None
    return scan_surface(p.branch, p.s_values(), p.J_values())
