"""Exponential-family random matrix models on eigenvalue coordinates.

A model is a base potential plus parameterized perturbations; the joint
eigenvalue density (beta = 2) is

    prod_{i<j} (l_i - l_j)^2 * prod_k exp(-n * p_theta(l_k))

optionally restricted to the positive half-line. Independent matrices
compose by direct sum: parameters concatenate, pressures add, and the
geometry assembles block-diagonally.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CompositionError, NonConvexPotentialWarning, ParameterDomainError
from .poly import DEGREE_CAP, Polynomial, is_confining

__all__ = [
    "SUPPORT_FULL",
    "SUPPORT_POSITIVE",
    "ModelSpec",
    "ProductModel",
    "as_config",
    "compose_independent",
    "log_joint_eigenvalue_density",
    "trace_statistic",
]

SUPPORT_FULL = "full"
SUPPORT_POSITIVE = "positive"

#: log-density returned for coincident eigenvalues (density vanishes there)
NEG_INF = float("-inf")


def _as_polynomial(p) -> Polynomial:
    if isinstance(p, Polynomial):
        return p
    return Polynomial(tuple(float(c) for c in p))


def _confining_on_half_line(p: Polynomial) -> bool:
    # integrability of exp(-n p) on (0, inf): growth at +inf is enough
    return p.degree >= 1 and p.leading > 0.0


def _probe_convexity(p: Polynomial, radius: float = 6.0) -> bool:
    xs = np.linspace(-radius, radius, 241)
    return bool(np.all(p.derivative().derivative()(xs) >= -1e-12))


@dataclass(frozen=True, init=False)
class ModelSpec:
    """An exponential family: base potential, perturbations, parameter box."""

    base: Polynomial
    perturbations: tuple
    theta_box: tuple
    n: int
    support: str

    def __init__(self, base, perturbations=(), theta_box=(), n=1,
                 support=SUPPORT_FULL):
        base = _as_polynomial(base)
        perturbations = tuple(_as_polynomial(f) for f in perturbations)
        theta_box = tuple((float(lo), float(hi)) for lo, hi in theta_box)
        if len(theta_box) != len(perturbations):
            raise ParameterDomainError("theta_box must pair one (lo, hi) with "
                                       "each perturbation")
        if n < 1:
            raise ParameterDomainError("matrix size n must be >= 1")
        if support not in (SUPPORT_FULL, SUPPORT_POSITIVE):
            raise ParameterDomainError(f"unknown support constraint {support!r}")
        for lo, hi in theta_box:
            if not lo < hi:
                raise ParameterDomainError("theta_box intervals must satisfy lo < hi")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "perturbations", perturbations)
        object.__setattr__(self, "theta_box", theta_box)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "support", support)
        self._validate_corners()

    # -- validation ----------------------------------------------------------
    def _corner_potentials(self):
        if not self.theta_box:
            yield self.base
            return
        for corner in itertools.product(*self.theta_box):
            yield self.potential_at(corner, _validate=False)

    def _validate_corners(self):
        # every potential coefficient is affine in theta, so positivity of the
        # leading coefficient on the box is decided at the corners
        for pot in self._corner_potentials():
            if pot.degree > DEGREE_CAP:
                raise ParameterDomainError(
                    f"potential degree {pot.degree} exceeds cap {DEGREE_CAP}")
            ok = (_confining_on_half_line(pot) if self.support == SUPPORT_POSITIVE
                  else is_confining(pot))
            if not ok:
                raise ParameterDomainError(
                    f"potential {pot.coeffs} at a parameter-box corner is not "
                    f"confining on support {self.support!r}")
        if self.support == SUPPORT_FULL and not _probe_convexity(self.base):
            warnings.warn("base potential is confining but not convex; one-cut "
                          "behavior is not guaranteed", NonConvexPotentialWarning,
                          stacklevel=3)

    # -- queries ---------------------------------------------------------------
    @property
    def m(self) -> int:
        return len(self.perturbations)

    def validate_theta(self, theta) -> tuple:
        theta = tuple(float(t) for t in np.asarray(theta, dtype=float).ravel())
        if len(theta) != self.m:
            raise ParameterDomainError(
                f"theta has {len(theta)} components, model has m={self.m}")
        for i, (t, (lo, hi)) in enumerate(zip(theta, self.theta_box)):
            if not lo < t < hi:
                raise ParameterDomainError(
                    f"theta[{i}]={t:g} outside open box ({lo:g}, {hi:g})")
        return theta

    def potential_at(self, theta, _validate: bool = True) -> Polynomial:
        """Coefficient-wise base + sum_i theta_i * F_i (no normalization term)."""
        if _validate:
            theta = self.validate_theta(theta)
        pot = self.base
        for t, f in zip(theta, self.perturbations):
            pot = pot + float(t) * f
        return pot

    def contains(self, lambdas) -> bool:
        if self.support == SUPPORT_POSITIVE:
            return bool(np.all(np.asarray(lambdas) > 0))
        return True

    # -- serialization -----------------------------------------------------------
    def to_json_dict(self) -> dict:
        return {
            "base": self.base.to_json(),
            "perturbations": [f.to_json() for f in self.perturbations],
            "theta_box": [[lo, hi] for lo, hi in self.theta_box],
            "n": self.n,
            "support": "positive" if self.support == SUPPORT_POSITIVE else "full",
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ModelSpec":
        known = {"base", "perturbations", "theta_box", "n", "support"}
        extra = set(doc) - known
        if extra:
            raise ParameterDomainError(f"unknown model keys: {sorted(extra)}")
        return cls(
            base=Polynomial.from_json(doc.get("base", [0.0])),
            perturbations=tuple(Polynomial.from_json(f)
                                for f in doc.get("perturbations", [])),
            theta_box=tuple((float(lo), float(hi))
                            for lo, hi in doc.get("theta_box", [])),
            n=int(doc.get("n", 1)),
            support=doc.get("support", "full"),
        )


def as_config(lambdas, spec: ModelSpec | None = None) -> np.ndarray:
    """Canonical eigenvalue configuration: sorted ascending, support-checked."""
    lam = np.sort(np.asarray(lambdas, dtype=float).ravel())
    if spec is not None:
        if lam.size != spec.n:
            raise ParameterDomainError(
                f"configuration has {lam.size} eigenvalues, model has n={spec.n}")
        if not spec.contains(lam):
            raise ParameterDomainError("eigenvalues violate the support constraint")
    return lam


def log_joint_eigenvalue_density(spec: ModelSpec, theta, lambdas) -> float:
    """Unnormalized log joint density of the eigenvalues.

    Returns -inf for coincident eigenvalues (the Vandermonde factor vanishes).
    """
    theta = spec.validate_theta(theta)
    lam = as_config(lambdas, spec)
    n = spec.n
    pot = spec.potential_at(theta, _validate=False)
    if n > 1:
        diffs = lam[None, :] - lam[:, None]
        iu = np.triu_indices(n, k=1)
        gaps = np.abs(diffs[iu])
        if np.any(gaps == 0.0):
            return NEG_INF
        vandermonde = 2.0 * float(np.sum(np.log(gaps)))
    else:
        vandermonde = 0.0
    return vandermonde - n * float(np.sum(pot(lam)))


def trace_statistic(lambdas, f: Polynomial) -> float:
    """Tr f(A) = sum_i f(lambda_i)."""
    lam = np.asarray(lambdas, dtype=float)
    return float(np.sum(f(lam)))


# ---------------------------------------------------------------------------
# independent composition
# ---------------------------------------------------------------------------


@dataclass(frozen=True, init=False)
class ProductModel:
    """Direct sum of independent single-matrix models sharing one matrix size.

    The parameter space is the concatenation of the component boxes; the
    pressure is the sum of component pressures; metrics assemble
    block-diagonally with identically zero cross-blocks.
    """

    components: tuple

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise CompositionError("need at least one component")
        n0 = components[0].n
        for c in components:
            if not isinstance(c, ModelSpec):
                raise CompositionError("components must be ModelSpec instances")
            if c.n != n0:
                raise CompositionError(
                    f"components disagree on matrix size: {c.n} != {n0}")
        object.__setattr__(self, "components", components)

    @property
    def n(self) -> int:
        return self.components[0].n

    @property
    def m(self) -> int:
        return sum(c.m for c in self.components)

    @property
    def theta_box(self) -> tuple:
        return tuple(box for c in self.components for box in c.theta_box)

    def split_theta(self, theta) -> list:
        theta = tuple(float(t) for t in np.asarray(theta, float).ravel())
        if len(theta) != self.m:
            raise ParameterDomainError(
                f"theta has {len(theta)} components, product model has m={self.m}")
        out, k = [], 0
        for c in self.components:
            part = theta[k:k + c.m]
            c.validate_theta(part)
            out.append(part)
            k += c.m
        return out

    def block_slices(self) -> list:
        out, k = [], 0
        for c in self.components:
            out.append(slice(k, k + c.m))
            k += c.m
        return out

    def to_json_dict(self) -> dict:
        return {"components": [c.to_json_dict() for c in self.components]}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ProductModel":
        return cls(tuple(ModelSpec.from_json_dict(d) for d in doc["components"]))


def compose_independent(specs) -> ProductModel:
    """Combine independent models; errors on mismatched matrix sizes."""
    return ProductModel(tuple(specs))
