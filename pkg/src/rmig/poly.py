"""Real polynomial arithmetic and principal-value Stieltjes transforms.

Every other module consumes these two carriers: :class:`Polynomial` holds
potentials, perturbations, and their derivatives; :class:`GridDensity` is the
discretization of a probability density on an interval, accurate enough to
feed singular-integral evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Polynomial",
    "GridDensity",
    "eval_poly",
    "is_confining",
    "pv_stieltjes",
]

#: degree budget for potentials handed to quadrature / recurrence engines
DEGREE_CAP = 32


def _normalized_coeffs(coeffs) -> tuple:
    cs = [float(c) for c in coeffs]
    while len(cs) > 1 and cs[-1] == 0.0:
        cs.pop()
    if not cs:
        cs = [0.0]
    return tuple(cs)


@dataclass(frozen=True, init=False)
class Polynomial:
    """Real polynomial; ``coeffs[k]`` multiplies ``x**k``.

    The trailing coefficient is nonzero unless this is the zero polynomial,
    so ``degree == len(coeffs) - 1`` for nonzero polynomials.
    """

    coeffs: tuple

    def __init__(self, coeffs=(0.0,)):
        object.__setattr__(self, "coeffs", _normalized_coeffs(coeffs))

    # -- queries -----------------------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    @property
    def leading(self) -> float:
        return self.coeffs[-1]

    def __call__(self, x):
        return eval_poly(self, x)

    # -- calculus ----------------------------------------------------------
    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial((0.0,))
        return Polynomial(tuple(k * c for k, c in enumerate(self.coeffs) if k > 0))

    def antiderivative(self, constant: float = 0.0) -> "Polynomial":
        out = [float(constant)]
        out.extend(c / (k + 1) for k, c in enumerate(self.coeffs))
        return Polynomial(tuple(out))

    # -- algebra -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial((float(other),))
        if not isinstance(other, Polynomial):
            return NotImplemented
        na, nb = self.coeffs, other.coeffs
        size = max(len(na), len(nb))
        out = [0.0] * size
        for k, c in enumerate(na):
            out[k] += c
        for k, c in enumerate(nb):
            out[k] += c
        return Polynomial(tuple(out))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial((float(other),))
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Polynomial(tuple(float(other) * c for c in self.coeffs))
        if not isinstance(other, Polynomial):
            return NotImplemented
        out = np.convolve(np.asarray(self.coeffs), np.asarray(other.coeffs))
        return Polynomial(tuple(out))

    __rmul__ = __mul__

    def translate(self, c: float) -> "Polynomial":
        """Return q with q(x) = p(x - c)."""
        out = np.array([self.coeffs[-1]])
        shift = np.array([-float(c), 1.0])
        for a in reversed(self.coeffs[:-1]):
            out = np.convolve(out, shift)
            out[0] += a
        return Polynomial(tuple(out))

    def dilate(self, s: float) -> "Polynomial":
        """Return q with q(x) = p(x / s)."""
        s = float(s)
        return Polynomial(tuple(c / s**k for k, c in enumerate(self.coeffs)))

    # -- serialization -------------------------------------------------------
    def to_json(self) -> list:
        return list(self.coeffs)

    @classmethod
    def from_json(cls, data) -> "Polynomial":
        return cls(tuple(float(c) for c in data))


def eval_poly(p: Polynomial, x):
    """Horner evaluation; scalar in, scalar out; arrays pass through."""
    if np.isscalar(x):
        acc = 0.0
        for c in reversed(p.coeffs):
            acc = acc * x + c
        return acc
    x = np.asarray(x, dtype=float)
    acc = np.zeros_like(x)
    for c in reversed(p.coeffs):
        acc = acc * x + c
    return acc


def is_confining(p: Polynomial) -> bool:
    """True iff the Gibbs weight exp(-p) is normalizable on the full line:
    even degree >= 2 with positive leading coefficient."""
    return p.degree >= 2 and p.degree % 2 == 0 and p.leading > 0.0


# ---------------------------------------------------------------------------
# grid densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True, init=False)
class GridDensity:
    """Probability density discretized on an interval.

    ``weights[j]`` is quadrature weight times density value at ``nodes[j]``,
    so plain dot products integrate against the density. When available,
    ``density`` and ``quad_weights`` keep the two factors separate, which the
    principal-value transform needs; ``phi`` stores arccos-coordinates for
    grids built on Chebyshev nodes (used for high-order interpolation).
    """

    nodes: np.ndarray
    weights: np.ndarray
    support: tuple
    density: np.ndarray | None
    quad_weights: np.ndarray | None
    phi: np.ndarray | None

    def __init__(self, nodes, weights, support, density=None, quad_weights=None,
                 phi=None):
        nodes = np.asarray(nodes, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be equal-length 1-D arrays")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        lo, hi = float(support[0]), float(support[1])
        if nodes[0] < lo or nodes[-1] > hi:
            raise ValueError("nodes must lie inside the support interval")
        if np.any(weights < -1e-12):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", np.maximum(weights, 0.0))
        object.__setattr__(self, "support", (lo, hi))
        object.__setattr__(self, "density",
                           None if density is None else np.asarray(density, float))
        object.__setattr__(self, "quad_weights",
                           None if quad_weights is None
                           else np.asarray(quad_weights, float))
        object.__setattr__(self, "phi",
                           None if phi is None else np.asarray(phi, float))

    @classmethod
    def from_density(cls, fn, support, num: int = 2048) -> "GridDensity":
        """Discretize a density callable on Chebyshev-Gauss nodes.

        The nodes cluster at the endpoints, matching the square-root edge
        behavior of one-cut densities.
        """
        lo, hi = float(support[0]), float(support[1])
        mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
        j = np.arange(1, num + 1)
        phi = (2.0 * j - 1.0) * math.pi / (2.0 * num)     # descending nodes
        s = np.cos(phi)
        nodes = mid + rad * s
        order = np.argsort(nodes)
        nodes = nodes[order]
        phi = phi[order]
        qw = rad * (math.pi / num) * np.sqrt(np.maximum(1.0 - s[order] ** 2, 0.0))
        dens = np.asarray(fn(nodes), dtype=float)
        return cls(nodes, qw * dens, (lo, hi), density=dens, quad_weights=qw,
                   phi=phi)

    def mass(self) -> float:
        return float(np.sum(self.weights))

    def check_normalized(self, tol: float = 1e-10) -> None:
        if abs(self.mass() - 1.0) > tol:
            raise ValueError(f"density mass {self.mass():.3e} differs from 1 "
                             f"beyond tol={tol:g}")

    def integrate(self, fn) -> float:
        """Integrate a callable against the density."""
        return float(np.dot(self.weights, np.asarray(fn(self.nodes), float)))

    def density_at(self, x: float) -> float:
        """Interpolated density value at an interior point."""
        if self.density is None:
            raise ValueError("GridDensity carries no pointwise density values")
        if self.phi is not None:
            return self._interp_phi(x)
        return float(np.interp(x, self.nodes, self.density))

    def _interp_phi(self, x: float) -> float:
        # nodes are mid + rad*cos(phi) with phi uniform: cubic Lagrange in phi
        lo, hi = self.support
        mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
        t = min(1.0, max(-1.0, (x - mid) / rad))
        phix = math.acos(t)
        num = len(self.nodes)
        step = math.pi / num
        # node i has phi = pi - (i + 1/2) * step (ascending nodes)
        u = (math.pi - phix) / step - 0.5
        i0 = int(math.floor(u))
        lo_i = min(max(i0 - 1, 0), num - 4)
        idx = np.arange(lo_i, lo_i + 4)
        ph = math.pi - (idx + 0.5) * step
        val = 0.0
        for a in range(4):
            la = 1.0
            for b in range(4):
                if a != b:
                    la *= (phix - ph[b]) / (ph[a] - ph[b])
            val += la * self.density[idx[a]]
        return float(val)


def pv_stieltjes(q: GridDensity, x: float, diagnostics: dict | None = None) -> float:
    """Principal value of ``int q(y) / (x - y) dy``.

    Off support this is a plain quadrature. On support the singularity is
    removed analytically by the subtraction trick::

        p.v. int q(y)/(x-y) dy
            = int (q(y) - q(x))/(x - y) dy + q(x) * log((x-a)/(b-x))

    which is non-singular. Evaluation exactly on a grid node skips that node
    (the removed term is restored from a local derivative estimate) and is
    flagged in ``diagnostics``.
    """
    x = float(x)
    a, b = q.support
    nodes = q.nodes
    if not (a < x < b):
        return float(np.sum(q.weights / (x - nodes)))
    if q.density is None or q.quad_weights is None:
        raise ValueError("on-support principal value needs density and "
                         "quadrature weights (build with from_density)")
    qx = q.density_at(x)
    diffs = x - nodes
    hit = np.abs(diffs) < 1e-13 * max(1.0, abs(x))
    vals = np.empty_like(diffs)
    np.divide(q.density - qx, diffs, out=vals, where=~hit)
    if hit.any():
        if diagnostics is not None:
            diagnostics["node_hit"] = True
        # limit of the subtracted integrand at y = x is -q'(x)
        for i in np.nonzero(hit)[0]:
            lo_i = max(1, min(int(i), len(nodes) - 2))
            slope = ((q.density[lo_i + 1] - q.density[lo_i - 1])
                     / (nodes[lo_i + 1] - nodes[lo_i - 1]))
            vals[i] = -slope
    out = float(np.dot(q.quad_weights, vals))
    out += qx * math.log((x - a) / (b - x))
    return out
