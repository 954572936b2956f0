"""Large-n limits: one-cut equilibrium measures, logarithmic energy, free
pressure, conjugate variable, and free Fisher information.

The equilibrium density for a confining polynomial potential p solves the
singular integral equation 2 p.v. int q(y)/(x-y) dy = p'(x) on its support.
In Chebyshev variables on [a, b] the solution is closed-form: expanding
p'(m + rho*s) = sum_k c_k T_k(s), the endpoint conditions are c_0 = 0 and
c_1 = 4/rho, and

    q(x) = (1/2pi) h(x) sqrt((x-a)(b-x)),
    h(m + rho*s) = (1/rho) sum_{k>=1} c_k U_{k-1}(s).

All integrals of polynomials against such measures are evaluated exactly by
Gauss-Chebyshev quadrature, and the logarithmic energy has a terminating
Chebyshev-moment series, so no tolerance tuning enters this module.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    MultiCutError,
    ReconstructionWarning,
    SolverError,
    TruncationDomainError,
)
from .exact import _grow_edge, _potential_minimum
from .model import ModelSpec
from .poly import DEGREE_CAP, GridDensity, Polynomial, is_confining, pv_stieltjes

__all__ = [
    "EquilibriumMeasure",
    "FreeReport",
    "build_free_report",
    "conjugate_variable",
    "cubic_density_integral",
    "equilibrium_residual",
    "free_fisher",
    "free_pressure",
    "limit_pressure_and_legendre",
    "log_energy",
    "reconstruct_potential",
    "solve_one_cut",
]

RESIDUAL_TOL = 1e-6
NEGATIVITY_TOL = 1e-10


# ---------------------------------------------------------------------------
# Chebyshev utilities
# ---------------------------------------------------------------------------


def _cheb_nodes_first(M: int):
    j = np.arange(1, M + 1)
    return np.cos((2.0 * j - 1.0) * math.pi / (2.0 * M))


def _cheb_nodes_weights_second(M: int):
    j = np.arange(1, M + 1)
    ang = j * math.pi / (M + 1)
    return np.cos(ang), (math.pi / (M + 1)) * np.sin(ang) ** 2


def _cheb_t_values(k_max: int, s: np.ndarray) -> np.ndarray:
    """T_k(s) for k = 0..k_max, shape (k_max+1, len(s))."""
    out = np.empty((k_max + 1, s.size))
    out[0] = 1.0
    if k_max >= 1:
        out[1] = s
    for k in range(2, k_max + 1):
        out[k] = 2.0 * s * out[k - 1] - out[k - 2]
    return out


def _chebu_power_coeffs(k: int) -> np.ndarray:
    """Power-basis coefficients of U_k (ascending)."""
    prev = np.array([1.0])
    if k == 0:
        return prev
    cur = np.array([0.0, 2.0])
    for _ in range(2, k + 1):
        nxt = np.zeros(cur.size + 1)
        nxt[1:] = 2.0 * cur
        nxt[:prev.size] -= prev
        prev, cur = cur, nxt
    return cur


def _power_to_chebu(coeffs) -> np.ndarray:
    """Expand a power-basis polynomial in { U_j }: back-substitute from the
    top degree (U_j has leading coefficient 2^j)."""
    work = np.array(coeffs, dtype=float)
    deg = work.size - 1
    out = np.zeros(deg + 1)
    for j in range(deg, -1, -1):
        u = _chebu_power_coeffs(j)
        out[j] = work[j] / u[-1]
        work[:u.size] -= out[j] * u
    return out


def _compose_affine(coeffs_s, mid: float, rad: float) -> Polynomial:
    """Polynomial in s = (x - mid)/rad -> Polynomial in x."""
    return Polynomial(tuple(coeffs_s)).dilate(rad).translate(mid)


# ---------------------------------------------------------------------------
# the measure
# ---------------------------------------------------------------------------


@dataclass(frozen=True, init=False)
class EquilibriumMeasure:
    """One-cut density q(x) = (1/2pi) h(x) sqrt((x-a)(b-x)) on [a, b]."""

    a: float
    b: float
    h: Polynomial

    def __init__(self, a, b, h):
        a, b = float(a), float(b)
        if not a < b:
            raise ValueError("need a < b")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "h", h if isinstance(h, Polynomial)
                           else Polynomial(tuple(h)))

    # -- geometry of the interval -------------------------------------------
    @property
    def mid(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def rad(self) -> float:
        return 0.5 * (self.b - self.a)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        root = np.sqrt(np.maximum((x - self.a) * (self.b - x), 0.0))
        return self.h(x) * root / (2.0 * math.pi)

    # -- exact quadrature ------------------------------------------------------
    def _s_weights(self, extra_degree: int):
        M = (self.h.degree + extra_degree) // 2 + 2
        s, w = _cheb_nodes_weights_second(M)
        return s, w

    def integrate_poly(self, f: Polynomial) -> float:
        """Exact integral of a polynomial against the density."""
        s, w = self._s_weights(f.degree)
        x = self.mid + self.rad * s
        vals = self.h(x) * f(x)
        return float(self.rad ** 2 / (2.0 * math.pi) * np.dot(w, vals))

    def mass(self) -> float:
        return self.integrate_poly(Polynomial((1.0,)))

    def moment(self, k: int) -> float:
        return self.integrate_poly(Polynomial((0.0,) * k + (1.0,)))

    def chebyshev_moments(self) -> np.ndarray:
        """M_k = int T_k((x-mid)/rad) dq for k = 0..deg(h)+2 (exact; higher
        moments vanish because h * T_k is orthogonal to the edge weight)."""
        kmax = self.h.degree + 2
        M = kmax + self.h.degree // 2 + 2
        s, w = _cheb_nodes_weights_second(M)
        x = self.mid + self.rad * s
        hv = self.h(x)
        tv = _cheb_t_values(kmax, s)
        return np.asarray(self.rad ** 2 / (2.0 * math.pi)
                          * (tv * (w * hv)).sum(axis=1))

    # -- carriers ---------------------------------------------------------------
    def to_grid(self, num: int = 2048) -> GridDensity:
        return GridDensity.from_density(self.density, (self.a, self.b), num)

    def translated(self, c: float) -> "EquilibriumMeasure":
        return EquilibriumMeasure(self.a + c, self.b + c, self.h.translate(c))

    def dilated(self, s: float) -> "EquilibriumMeasure":
        if s <= 0:
            raise ValueError("dilation factor must be positive")
        return EquilibriumMeasure(self.a * s, self.b * s,
                                  (1.0 / s**2) * self.h.dilate(s))

    def to_json_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "h": self.h.to_json()}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "EquilibriumMeasure":
        return cls(doc["a"], doc["b"], Polynomial.from_json(doc["h"]))


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


def _initial_guess(p: Polynomial) -> tuple:
    """Second-moment heuristic from a coarse Gibbs histogram of exp(-p)."""
    xstar = _potential_minimum(p, positive=False)
    pmin = p(xstar)
    hi = _grow_edge(p, 1, xstar, pmin, +1.0)
    lo = _grow_edge(p, 1, xstar, pmin, -1.0)
    xs = np.linspace(lo, hi, 4001)
    w = np.exp(-(p(xs) - pmin))
    w /= w.sum()
    mean = float(np.dot(w, xs))
    std = float(math.sqrt(max(np.dot(w, (xs - mean) ** 2), 1e-12)))
    return mean - 2.0 * std, mean + 2.0 * std


def solve_one_cut(p: Polynomial, max_iter: int = 60) -> EquilibriumMeasure:
    """Equilibrium measure of a confining polynomial, one-cut regime.

    Newton iteration on the support endpoints with the analytic Jacobian;
    every quadrature is Gauss-Chebyshev and exact for the polynomial
    integrands. Raises MultiCutError when the candidate density dips
    negative, SolverError when Newton stalls.
    """
    if not is_confining(p):
        raise ValueError("potential must be confining (even degree >= 2, "
                         "positive leading coefficient)")
    if p.degree > DEGREE_CAP:
        raise ValueError(f"degree {p.degree} exceeds cap {DEGREE_CAP}")
    pprime = p.derivative()
    ppp = pprime.derivative()
    M = max(2 * p.degree + 8, 24)
    nodes = _cheb_nodes_first(M)

    def system(a, b):
        mid, rad = 0.5 * (a + b), 0.5 * (b - a)
        x = mid + rad * nodes
        pv = pprime(x)
        pvv = ppp(x)
        scale = math.pi / M
        g = np.array([scale * pv.sum(), scale * np.dot(x, pv) - 2.0 * math.pi])
        dxa = 0.5 * (1.0 - nodes)
        dxb = 0.5 * (1.0 + nodes)
        J = np.array([
            [scale * np.dot(pvv, dxa), scale * np.dot(pvv, dxb)],
            [scale * np.dot(pv + x * pvv, dxa), scale * np.dot(pv + x * pvv, dxb)],
        ])
        return g, J

    a, b = _initial_guess(p)
    trace = []
    for _ in range(max_iter):
        g, J = system(a, b)
        res = float(np.max(np.abs(g)))
        trace.append((a, b, res))
        if res < 1e-12:
            break
        try:
            step = np.linalg.solve(J, g)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular endpoint Jacobian: {exc}", trace)
        damp = 1.0
        for _ in range(10):
            a_new, b_new = a - damp * step[0], b - damp * step[1]
            if b_new - a_new > 1e-9:
                g_new, _ = system(a_new, b_new)
                if float(np.max(np.abs(g_new))) < res or res < 1e-10:
                    break
            damp *= 0.5
        a, b = a - damp * step[0], b - damp * step[1]
    else:
        raise SolverError("endpoint Newton did not converge", trace)

    mid, rad = 0.5 * (a + b), 0.5 * (b - a)
    x = mid + rad * nodes
    pv = pprime(x)
    tv = _cheb_t_values(p.degree - 1, nodes)
    c = (2.0 / M) * tv @ pv          # c_k = (2/pi) int p' T_k / sqrt(1-s^2)
    # h in s-coordinates: (1/rho) sum_{k>=1} c_k U_{k-1}(s)
    hs = np.zeros(max(p.degree - 1, 1))
    for k in range(1, p.degree):
        u = _chebu_power_coeffs(k - 1)
        hs[:u.size] += c[k] * u / rad
    h = _compose_affine(hs, mid, rad)
    measure = EquilibriumMeasure(a, b, h)

    probe = mid + rad * np.cos(np.linspace(0.0, math.pi, 1024))
    hvals = h(probe)
    if np.min(hvals) < -NEGATIVITY_TOL * max(1.0, float(np.max(np.abs(hvals)))):
        raise MultiCutError(
            "equilibrium density is negative inside the support: the "
            "potential is outside the one-cut regime")
    res = equilibrium_residual(measure, p)
    if res > RESIDUAL_TOL:
        raise SolverError(
            f"integral-equation residual {res:.2e} exceeds {RESIDUAL_TOL:g}",
            trace)
    return measure


def equilibrium_residual(measure: EquilibriumMeasure, p: Polynomial,
                         num_points: int = 481, grid_size: int = 8192) -> float:
    """sup over the interior 98% of support of |2 pv_stieltjes(q, x) - p'(x)|."""
    grid = measure.to_grid(grid_size)
    pprime = p.derivative()
    span = measure.b - measure.a
    xs = np.linspace(measure.a + 0.01 * span, measure.b - 0.01 * span,
                     num_points)
    worst = 0.0
    for x in xs:
        worst = max(worst, abs(2.0 * pv_stieltjes(grid, float(x)) - pprime(x)))
    return worst


# ---------------------------------------------------------------------------
# energies and the conjugate variable
# ---------------------------------------------------------------------------


def log_energy(measure: EquilibriumMeasure) -> float:
    """Logarithmic energy chi = double integral of log|x - y| dq dq.

    Exact via the expansion log|s - t| = -log 2 - 2 sum_k T_k(s) T_k(t) / k:
    the Chebyshev moments of a polynomial-factor one-cut density terminate,
    so the series is a finite sum.
    """
    mk = measure.chebyshev_moments()
    mass = mk[0]
    tail = sum(mk[k] ** 2 / k for k in range(1, mk.size))
    return float(mass * mass * (math.log(measure.rad) - math.log(2.0))
                 - 2.0 * tail)


def conjugate_variable(measure: EquilibriumMeasure):
    """x -> 2 p.v. int q(y)/(x - y) dy.

    On support this is the polynomial rho * sum_j u_j T_{j+1}(s) (the
    Tricomi identity applied to the U-expansion of h); off support it is a
    plain Stieltjes integral. The returned callable carries the on-support
    polynomial as ``.poly``.
    """
    u = _power_to_chebu(_h_in_s(measure))
    coeffs_s = np.zeros(u.size + 1)
    for j, uj in enumerate(u):
        tk = np.polynomial.chebyshev.cheb2poly([0.0] * (j + 1) + [1.0])
        coeffs_s[:tk.size] += measure.rad * uj * tk
    poly = _compose_affine(coeffs_s, measure.mid, measure.rad)
    grid_holder = {}

    def conj(x):
        x_arr = np.asarray(x, dtype=float)
        scalar = x_arr.ndim == 0
        x_arr = np.atleast_1d(x_arr)
        out = np.empty_like(x_arr)
        inside = (x_arr >= measure.a) & (x_arr <= measure.b)
        out[inside] = poly(x_arr[inside])
        if np.any(~inside):
            if "grid" not in grid_holder:
                grid_holder["grid"] = measure.to_grid()
            grid = grid_holder["grid"]
            out[~inside] = [2.0 * pv_stieltjes(grid, float(v))
                            for v in x_arr[~inside]]
        return float(out[0]) if scalar else out

    conj.poly = poly
    return conj


def _h_in_s(measure: EquilibriumMeasure) -> np.ndarray:
    """Power coefficients of H(s) = h(mid + rad * s)."""
    hp = measure.h.translate(-measure.mid)      # h(x + mid)
    return np.array([c * measure.rad ** k for k, c in enumerate(hp.coeffs)])


def free_fisher(measure: EquilibriumMeasure) -> float:
    """Free Fisher information: int (conjugate variable)^2 dq (exact)."""
    conj_poly = conjugate_variable(measure).poly
    return measure.integrate_poly(conj_poly * conj_poly)


def cubic_density_integral(measure: EquilibriumMeasure) -> float:
    """int q(x)^3 dx, exact; (4 pi^2/3) times this equals the free Fisher
    information for one-cut measures."""
    deg = 3 * measure.h.degree + 2
    M = deg // 2 + 2
    s, w = _cheb_nodes_weights_second(M)
    x = measure.mid + measure.rad * s
    hv = measure.h(x)
    vals = hv ** 3 * (1.0 - s * s)
    return float(measure.rad ** 4 / (8.0 * math.pi ** 3) * np.dot(w, vals))


def free_pressure(h: Polynomial, R: float) -> float:
    """sup over probability measures on [-R, R] of (-int h dmu + chi(mu)).

    For a confining polynomial whose equilibrium support sits inside
    [-R, R], the supremum is attained at the equilibrium measure.
    """
    measure = solve_one_cut(h)
    if measure.a < -R or measure.b > R:
        raise TruncationDomainError(
            f"equilibrium support [{measure.a:.4g}, {measure.b:.4g}] escapes "
            f"[-{R:g}, {R:g}]; the constrained supremum would bind at the "
            "boundary")
    return -measure.integrate_poly(h) + log_energy(measure)


def limit_pressure_and_legendre(spec: ModelSpec, theta) -> tuple:
    """n -> infinity limits of the pressure and of its Legendre transform.

        lim psi  = chi(q_theta) - int p_theta dq_theta
        lim phi  = chi(q_theta) - int p dq_theta
    """
    theta = spec.validate_theta(theta)
    pot = spec.potential_at(theta, _validate=False)
    measure = solve_one_cut(pot)
    chi = log_energy(measure)
    return (chi - measure.integrate_poly(pot),
            chi - measure.integrate_poly(spec.base))


# ---------------------------------------------------------------------------
# potential reconstruction
# ---------------------------------------------------------------------------


def reconstruct_potential(q: GridDensity, degree: int,
                          residual_tol: float = 1e-4) -> Polynomial:
    """Recover the potential generating a one-cut density.

    Fits a degree-1 lower polynomial to 2 * pv_stieltjes on the interior 95%
    of the support and antidifferentiates with constant 0. A large fit
    residual (measure not generated by a polynomial potential of this
    degree) raises ReconstructionWarning but still returns the fit.
    """
    if degree < 2:
        raise ValueError("potential degree must be >= 2")
    a, b = q.support
    span = b - a
    xs = np.linspace(a + 0.025 * span, b - 0.025 * span, 400)
    vals = np.array([2.0 * pv_stieltjes(q, float(x)) for x in xs])
    coeffs = np.polynomial.polynomial.polyfit(xs, vals, degree - 1)
    fit = np.polynomial.polynomial.polyval(xs, coeffs)
    residual = float(np.max(np.abs(fit - vals)))
    if residual > residual_tol:
        warnings.warn(
            f"reconstruction residual {residual:.2e} above {residual_tol:g}: "
            "measure may not come from a polynomial potential of degree "
            f"{degree}", ReconstructionWarning, stacklevel=2)
    return Polynomial(tuple(coeffs)).antiderivative(0.0)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass
class FreeReport:
    """Large-n summary for one potential."""

    measure: EquilibriumMeasure
    chi: float
    free_pressure: float
    conjugate_coeffs: tuple
    phi_free: float
    phi_free_cubic: float
    limit_pressure: float
    limit_legendre: float

    def to_json_dict(self) -> dict:
        return {
            "measure": self.measure.to_json_dict(),
            "chi": self.chi,
            "free_pressure": self.free_pressure,
            "conjugate_coeffs": list(self.conjugate_coeffs),
            "free_fisher": self.phi_free,
            "free_fisher_cubic_identity": self.phi_free_cubic,
            "limit_pressure": self.limit_pressure,
            "limit_legendre": self.limit_legendre,
        }


def build_free_report(spec: ModelSpec, theta, radius: float | None = None
                      ) -> FreeReport:
    theta = spec.validate_theta(theta)
    pot = spec.potential_at(theta, _validate=False)
    measure = solve_one_cut(pot)
    if radius is None:
        radius = 1.5 * max(abs(measure.a), abs(measure.b))
    chi = log_energy(measure)
    phi_free = free_fisher(measure)
    if phi_free <= 0:
        raise SolverError("free Fisher information must be positive for a "
                          "nondegenerate measure")
    lp, ll = limit_pressure_and_legendre(spec, theta)
    return FreeReport(
        measure=measure,
        chi=chi,
        free_pressure=free_pressure(pot, radius),
        conjugate_coeffs=conjugate_variable(measure).poly.coeffs,
        phi_free=phi_free,
        phi_free_cubic=(4.0 * math.pi ** 2 / 3.0) * cubic_density_integral(measure),
        limit_pressure=lp,
        limit_legendre=ll,
    )
