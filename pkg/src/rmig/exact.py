"""Exact small-n engine built on orthogonal-polynomial recurrences.

For the eigenvalue weight exp(-n * p_theta(x)) the monic orthogonal
polynomials are generated by the discretized Stieltjes procedure on a dense
Gauss-Legendre grid over a truncation window (moment-based algorithms are
catastrophically ill-conditioned; Stieltjes on a discrete measure is stable).
Squared norms h_l give the partition function exactly,

    int Delta(l)^2 prod_k exp(-n p(l_k)) dl = n! * prod_{l<n} h_l,

and the Christoffel-Darboux structure gives the one- and two-point
correlation densities. All geometric quantities (metric, connections) come
from central finite differences of the pressure with one level of Richardson
extrapolation.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .errors import (
    ExactEngineCapError,
    StepSizeError,
    TruncationError,
)
from .model import SUPPORT_POSITIVE, ModelSpec, ProductModel
from .poly import GridDensity, Polynomial

__all__ = [
    "EXACT_N_CAP",
    "CorrelationDensity",
    "RecurrenceTable",
    "build_recurrence",
    "connection_exact",
    "log_partition_eigen",
    "log_weyl_constant",
    "metric_exact",
    "one_point_density",
    "pressure_exact",
    "pressure_gradient_exact",
    "third_pressure_tensor",
    "two_point_density",
]

EXACT_N_CAP = 24
GRID_SIZE = 4096
#: the weight must drop by this many nats from its peak at the window edges
WINDOW_DROP = 64.0 * math.log(10.0)
FD_STEP_SECOND = 1e-3
FD_STEP_THIRD = 5e-3

_GL_CACHE: dict = {}
_PRESSURE_CACHE: dict = {}
_TABLE_CACHE: dict = {}


def _gauss_legendre(num: int):
    if num not in _GL_CACHE:
        _GL_CACHE[num] = roots_legendre(num)
    return _GL_CACHE[num]


def clear_caches() -> None:
    _PRESSURE_CACHE.clear()
    _TABLE_CACHE.clear()


# ---------------------------------------------------------------------------
# truncation window
# ---------------------------------------------------------------------------


def _potential_minimum(pot: Polynomial, positive: bool) -> float:
    dcoeffs = pot.derivative().coeffs
    candidates = [0.0] if positive else []
    if len(dcoeffs) > 1 or dcoeffs[0] != 0.0:
        roots = np.roots(list(reversed(dcoeffs)))
        for r in roots:
            if abs(r.imag) < 1e-9:
                x = float(r.real)
                if not positive or x >= 0.0:
                    candidates.append(x)
    if not candidates:
        candidates = [0.0]
    vals = [pot(x) for x in candidates]
    return candidates[int(np.argmin(vals))]


def _grow_edge(pot, n, xstar, pmin, direction: float) -> float:
    target = pmin + WINDOW_DROP / n
    w = 1.0
    for _ in range(200):
        if pot(xstar + direction * w) >= target:
            break
        w *= 1.5
    else:
        raise TruncationError("could not confine the weight; widen the window "
                              "or check the potential")
    lo, hi = w / 1.5 if w > 1.0 else 0.0, w
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if pot(xstar + direction * mid) >= target:
            hi = mid
        else:
            lo = mid
    return xstar + direction * hi


def truncation_window(spec: ModelSpec, theta) -> tuple:
    """Interval outside which exp(-n p_theta) is below 1e-64 of its peak."""
    pot = spec.potential_at(theta)
    positive = spec.support == SUPPORT_POSITIVE
    xstar = _potential_minimum(pot, positive)
    pmin = pot(xstar)
    hi = _grow_edge(pot, spec.n, xstar, pmin, +1.0)
    lo = 0.0 if positive else _grow_edge(pot, spec.n, xstar, pmin, -1.0)
    if not lo < hi:
        raise TruncationError("degenerate truncation window")
    return (lo, hi)


# ---------------------------------------------------------------------------
# recurrence construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecurrenceTable:
    """Jacobi data for the weight exp(-n * p_theta) on its window.

    alphas/betas are the monic three-term recurrence coefficients
    (P_{l+1} = (x - alpha_l) P_l - beta_l P_{l-1}, beta_l = h_l / h_{l-1});
    log_norms holds log h_l.
    """

    alphas: np.ndarray
    betas: np.ndarray
    log_norms: np.ndarray
    weight_theta: tuple
    levels: int
    window: tuple
    spec: ModelSpec

    def cache_key(self) -> str:
        doc = {"spec": self.spec.to_json_dict(), "theta": list(self.weight_theta),
               "levels": self.levels, "window": list(self.window)}
        payload = json.dumps(doc, sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()

    def to_json_dict(self) -> dict:
        return {
            "alphas": self.alphas.tolist(),
            "betas": self.betas.tolist(),
            "log_norms": self.log_norms.tolist(),
            "weight_theta": list(self.weight_theta),
            "levels": self.levels,
            "window": list(self.window),
            "spec": self.spec.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RecurrenceTable":
        return cls(
            alphas=np.asarray(doc["alphas"], float),
            betas=np.asarray(doc["betas"], float),
            log_norms=np.asarray(doc["log_norms"], float),
            weight_theta=tuple(doc["weight_theta"]),
            levels=int(doc["levels"]),
            window=tuple(doc["window"]),
            spec=ModelSpec.from_json_dict(doc["spec"]),
        )

    def polynomial_values(self, x: np.ndarray) -> np.ndarray:
        """Values P_l(x) for l = 0..levels-1, shape (levels, len(x))."""
        x = np.asarray(x, float)
        out = np.empty((self.levels, x.size))
        pm1 = np.zeros_like(x)
        p0 = np.ones_like(x)
        for l in range(self.levels):
            out[l] = p0
            beta = self.betas[l - 1] if l >= 1 else 0.0
            p0, pm1 = (x - self.alphas[l]) * p0 - beta * pm1, p0
        return out


def _grid_for_window(window):
    s, w = _gauss_legendre(GRID_SIZE)
    lo, hi = window
    mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return mid + rad * s, rad * w


def build_recurrence(spec: ModelSpec, theta, levels: int | None = None
                     ) -> RecurrenceTable:
    """Discretized Stieltjes procedure for the weight exp(-n p_theta)."""
    theta = spec.validate_theta(theta)
    n = spec.n
    if levels is None:
        levels = n
    if levels < n:
        raise ValueError(f"levels={levels} must be >= matrix size n={n}")
    key = (spec, theta, levels)
    hit = _TABLE_CACHE.get(key)
    if hit is not None:
        return hit

    window = truncation_window(spec, theta)
    x, w = _grid_for_window(window)
    pot = spec.potential_at(theta, _validate=False)
    logw = -float(n) * pot(x)
    shift = float(np.max(logw))
    if not np.isfinite(shift):
        raise TruncationError("weight is not finite on the truncation window")
    wt = w * np.exp(logw - shift)
    if not np.any(wt > 0):
        raise TruncationError("weight underflows everywhere on the truncation "
                              "window; widen the window")

    alphas = np.empty(levels)
    betas = np.empty(max(levels - 1, 0))
    log_norms = np.empty(levels)
    pm1 = np.zeros_like(x)
    p0 = np.ones_like(x)
    h_prev = None
    for l in range(levels):
        p2 = p0 * p0
        h = float(np.dot(wt, p2))
        if not (h > 0 and np.isfinite(h)):
            raise TruncationError(f"squared norm underflowed at level {l}; "
                                  "widen the window or lower `levels`")
        alphas[l] = float(np.dot(wt, x * p2)) / h
        log_norms[l] = math.log(h) + shift
        beta = 0.0
        if l >= 1:
            beta = h / h_prev
            betas[l - 1] = beta
        h_prev = h
        p0, pm1 = (x - alphas[l]) * p0 - beta * pm1, p0

    table = RecurrenceTable(alphas=alphas, betas=betas, log_norms=log_norms,
                            weight_theta=theta, levels=levels, window=window,
                            spec=spec)
    if len(_TABLE_CACHE) > 2048:
        _TABLE_CACHE.clear()
    _TABLE_CACHE[key] = table
    return table


# ---------------------------------------------------------------------------
# partition function and pressure
# ---------------------------------------------------------------------------


def log_partition_eigen(table: RecurrenceTable, n: int) -> float:
    """log of the eigenvalue-space partition function: log n! + sum log h_l."""
    if table.levels < n:
        raise ValueError(f"table holds {table.levels} norms, need {n}")
    return math.lgamma(n + 1) + float(np.sum(table.log_norms[:n]))


def log_weyl_constant(n: int) -> float:
    """log C_n with C_n = (2 pi)^{n(n-1)/2} / prod_{j<=n} j!.

    C_n converts the eigenvalue partition function into the self-adjoint
    matrix integral taken with respect to the metric volume element of
    <X, Y> = Tr(XY); with this convention the Gaussian chart pressure is
    exactly theta1^2/(4 theta2) + (1/2) log(pi / (n theta2)).
    """
    return (0.5 * n * (n - 1) * math.log(2.0 * math.pi)
            - sum(math.lgamma(j + 1) for j in range(1, n + 1)))


def pressure_exact(spec: ModelSpec | ProductModel, theta,
                   convention: str = "eigenvalue") -> float:
    """(1/n^2) log Z; matrix convention adds (1/n^2) log C_n.

    Metric, connections, and all theta-derivatives are convention-invariant.
    """
    if convention not in ("eigenvalue", "matrix"):
        raise ValueError(f"unknown convention {convention!r}")
    if isinstance(spec, ProductModel):
        parts = spec.split_theta(theta)
        return sum(pressure_exact(c, t, convention)
                   for c, t in zip(spec.components, parts))
    theta = spec.validate_theta(theta)
    n = spec.n
    if n > EXACT_N_CAP:
        raise ExactEngineCapError(
            f"n={n} exceeds the exact-engine cap {EXACT_N_CAP}; use the MCMC path")
    key = (spec, theta, convention)
    hit = _PRESSURE_CACHE.get(key)
    if hit is not None:
        return hit
    table = build_recurrence(spec, theta, levels=n)
    val = log_partition_eigen(table, n)
    if convention == "matrix":
        val += log_weyl_constant(n)
    val /= float(n) ** 2
    if len(_PRESSURE_CACHE) > 65536:
        _PRESSURE_CACHE.clear()
    _PRESSURE_CACHE[key] = val
    return val


# ---------------------------------------------------------------------------
# correlation densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationDensity:
    """One-point density (as a GridDensity) or two-point density values."""

    kind: str
    grid: GridDensity | None = None
    nodes: np.ndarray | None = None
    values: np.ndarray | None = None


def _normalized_kernel_rows(table: RecurrenceTable, x: np.ndarray) -> np.ndarray:
    """phi_l(x) = P_l(x) sqrt(w(x) / h_l); then K(s,t) = (1/n) sum phi phi."""
    spec, theta = table.spec, table.weight_theta
    pot = spec.potential_at(theta, _validate=False)
    logw = -float(spec.n) * pot(x)
    vals = table.polynomial_values(x)
    rows = np.empty((spec.n, x.size))
    for l in range(spec.n):
        rows[l] = vals[l] * np.exp(0.5 * (logw - table.log_norms[l]))
    return rows


def one_point_density(spec: ModelSpec, theta,
                      table: RecurrenceTable | None = None) -> CorrelationDensity:
    """Exact normalized one-point eigenvalue density on the window grid."""
    theta = spec.validate_theta(theta)
    if table is None:
        table = build_recurrence(spec, theta, levels=spec.n)
    x, w = _grid_for_window(table.window)
    rows = _normalized_kernel_rows(table, x)
    u1 = np.sum(rows * rows, axis=0) / float(spec.n)
    grid = GridDensity(x, w * u1, table.window, density=u1, quad_weights=w)
    return CorrelationDensity(kind="one-point", grid=grid)


def two_point_density(spec: ModelSpec, theta, nodes,
                      table: RecurrenceTable | None = None) -> CorrelationDensity:
    """Exact two-point density u_2(s, t) on a node set (n >= 2).

    u_2(s,t) = n/(n-1) * (K(s,s) K(t,t) - K(s,t)^2) with K the normalized
    Christoffel-Darboux kernel; symmetric, and integrates to 1.
    """
    if spec.n < 2:
        raise ValueError("two-point density needs n >= 2")
    theta = spec.validate_theta(theta)
    if table is None:
        table = build_recurrence(spec, theta, levels=spec.n)
    nodes = np.asarray(nodes, float)
    rows = _normalized_kernel_rows(table, nodes)
    K = rows.T @ rows / float(spec.n)
    diag = np.diag(K)
    n = spec.n
    u2 = (n / (n - 1.0)) * (np.outer(diag, diag) - K * K)
    return CorrelationDensity(kind="two-point", nodes=nodes, values=u2)


# ---------------------------------------------------------------------------
# finite-difference geometry
# ---------------------------------------------------------------------------


def _require_room(spec, theta, margin: float) -> None:
    box = spec.theta_box
    for i, (t, (lo, hi)) in enumerate(zip(theta, box)):
        if t - margin <= lo or t + margin >= hi:
            raise StepSizeError(
                f"theta[{i}]={t:g} too close to the box ({lo:g}, {hi:g}) for "
                f"finite-difference step {margin:g}")


def _fd_hessian(fn, theta: np.ndarray, h: float) -> np.ndarray:
    m = theta.size
    H = np.empty((m, m))
    f0 = fn(tuple(theta))
    for i in range(m):
        ei = np.zeros(m)
        ei[i] = h
        H[i, i] = (fn(tuple(theta + ei)) - 2.0 * f0 + fn(tuple(theta - ei))) / h**2
        for j in range(i):
            ej = np.zeros(m)
            ej[j] = h
            H[i, j] = H[j, i] = (
                fn(tuple(theta + ei + ej)) - fn(tuple(theta + ei - ej))
                - fn(tuple(theta - ei + ej)) + fn(tuple(theta - ei - ej))
            ) / (4.0 * h * h)
    return H


def _richardson_hessian(fn, theta: np.ndarray, h: float) -> np.ndarray:
    coarse = _fd_hessian(fn, theta, h)
    fine = _fd_hessian(fn, theta, h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def metric_exact(spec: ModelSpec | ProductModel, theta,
                 convention: str = "eigenvalue",
                 step: float = FD_STEP_SECOND) -> np.ndarray:
    """Fisher metric as the theta-Hessian of the pressure (central
    differences, one Richardson level). Convention-independent."""
    if isinstance(spec, ProductModel):
        parts = spec.split_theta(theta)
        G = np.zeros((spec.m, spec.m))
        for sl, comp, part in zip(spec.block_slices(), spec.components, parts):
            G[sl, sl] = metric_exact(comp, part, convention, step)
        return G
    theta = np.asarray(spec.validate_theta(theta), float)
    if spec.m == 0:
        return np.zeros((0, 0))
    _require_room(spec, theta, step)

    def fn(th):
        return pressure_exact(spec, th, convention)

    H = _richardson_hessian(fn, theta, step)
    return 0.5 * (H + H.T)


def pressure_gradient_exact(spec: ModelSpec, theta,
                            convention: str = "eigenvalue",
                            step: float = FD_STEP_SECOND) -> np.ndarray:
    """Central-difference gradient of the pressure (equals -eta)."""
    theta = np.asarray(spec.validate_theta(theta), float)
    if spec.m == 0:
        return np.zeros(0)
    _require_room(spec, theta, step)
    g = np.empty(spec.m)
    for i in range(spec.m):
        ei = np.zeros(spec.m)
        ei[i] = step
        coarse = (pressure_exact(spec, tuple(theta + ei), convention)
                  - pressure_exact(spec, tuple(theta - ei), convention)) / (2 * step)
        fine = (pressure_exact(spec, tuple(theta + ei / 2), convention)
                - pressure_exact(spec, tuple(theta - ei / 2), convention)) / step
        g[i] = (4.0 * fine - coarse) / 3.0
    return g


def third_pressure_tensor(spec: ModelSpec, theta, step: float = FD_STEP_THIRD,
                          convention: str = "eigenvalue") -> np.ndarray:
    """Fully symmetric tensor of third pressure derivatives, T[k, i, j]."""
    theta = np.asarray(spec.validate_theta(theta), float)
    m = spec.m
    if m == 0:
        return np.zeros((0, 0, 0))
    _require_room(spec, theta, step + FD_STEP_SECOND)

    def fn(th):
        return pressure_exact(spec, th, convention)

    def tensor_at(h):
        T = np.empty((m, m, m))
        for k in range(m):
            ek = np.zeros(m)
            ek[k] = h
            Hp = _richardson_hessian(fn, theta + ek, FD_STEP_SECOND)
            Hm = _richardson_hessian(fn, theta - ek, FD_STEP_SECOND)
            T[k] = (Hp - Hm) / (2.0 * h)
        return T

    T = (4.0 * tensor_at(step / 2.0) - tensor_at(step)) / 3.0
    sym = np.zeros_like(T)
    for perm in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
        sym += np.transpose(T, perm)
    return sym / 6.0


def connection_exact(spec: ModelSpec, theta, alpha: float,
                     step: float = FD_STEP_THIRD,
                     convention: str = "eigenvalue") -> np.ndarray:
    """Alpha-connection coefficients in the natural chart.

    In exponential coordinates the first defining term vanishes and the
    centered triple moment equals minus the third pressure derivative, so

        Gamma^(alpha)_{kij} = ((1 - alpha) / 2) * d^3 psi / dk di dj.

    The (1)-connection vanishes identically, and duality
    d_k g_ij = Gamma^(a)_{kij} + Gamma^(-a)_{kji} holds by construction.
    Convention-independent: the additive constant cancels in differences.
    """
    if not -1.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [-1, 1]")
    if spec.m == 0:
        return np.zeros((0, 0, 0))
    if alpha == 1.0:
        return np.zeros((spec.m,) * 3)
    return 0.5 * (1.0 - alpha) * third_pressure_tensor(spec, theta, step,
                                                       convention)
