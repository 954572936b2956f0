"""Finite-n information geometry: dual coordinates, Fisher metric,
alpha-connections, Legendre transform, entropy, and closed-form references.

Conventions (fixed throughout the library):

* dual coordinates  eta_i = (1/n) E[Tr F_i]; the pressure gradient is
  d psi / d theta_i = -eta_i for the Gibbs weight exp(-n Tr(p + theta.F)).
* Fisher metric     g_ij = Cov(Tr F_i, Tr F_j) = d^2 psi, a covariance and
  therefore positive semi-definite (a sign-flipped pairing could not be one).
* Legendre transform  phi = sum_i theta_i eta_i + psi, identically equal to
  the trace-difference form (1/n) E[Tr p_{theta,n}] - (1/n) E[Tr p].
* entropy           H = -[(1/n) E[Tr p_theta] + psi].

All estimators are pure functions over an immutable SampleBatch; the exact
path evaluates the same quantities by quadrature and finite differences.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import exact as _exact
from .errors import ExactEngineCapError, UnstableEstimateWarning
from .mcmc import SampleBatch, SamplerConfig, effective_sample_size, sample
from .model import ModelSpec, ProductModel
from .poly import Polynomial

__all__ = [
    "DEFAULT_ALPHAS",
    "DualCoords",
    "GeometryReport",
    "alpha_connection",
    "convergence_sweep",
    "dual_coordinates",
    "entropy",
    "fisher_metric",
    "geometry_report",
    "gue_closed_forms",
    "legendre_transform",
    "lue_closed_form",
    "product_fisher_metric",
    "trace_pairing_diagnostic",
]

DEFAULT_ALPHAS = (-1.0, -0.5, 0.0, 0.5, 1.0)
MIN_EFFECTIVE_SAMPLES = 100


@dataclass(frozen=True)
class DualCoords:
    """Expectation coordinates eta_i = (1/n) E[Tr F_i] with standard errors."""

    eta: np.ndarray
    stderr: np.ndarray


@dataclass
class GeometryReport:
    """Bundle of finite-n geometric estimates at one parameter point."""

    theta: tuple
    method: str
    convention: str
    pressure: float
    pressure_stderr: float
    eta: DualCoords
    metric: np.ndarray
    metric_stderr: np.ndarray
    connections: dict
    legendre: float
    legendre_stderr: float
    entropy: float
    entropy_stderr: float
    warnings: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "theta": list(self.theta),
            "method": self.method,
            "convention": self.convention,
            "pressure": self.pressure,
            "pressure_stderr": self.pressure_stderr,
            "eta": self.eta.eta.tolist(),
            "eta_stderr": self.eta.stderr.tolist(),
            "metric": self.metric.tolist(),
            "metric_stderr": self.metric_stderr.tolist(),
            "connections": {repr(a): t.tolist()
                            for a, t in sorted(self.connections.items())},
            "legendre": self.legendre,
            "legendre_stderr": self.legendre_stderr,
            "entropy": self.entropy,
            "entropy_stderr": self.entropy_stderr,
            "warnings": list(self.warnings),
        }


# ---------------------------------------------------------------------------
# chain combination helpers
# ---------------------------------------------------------------------------


def _combine_chain_values(per_chain: np.ndarray) -> tuple:
    """Mean and between-chain stderr for per-chain statistics (chains first)."""
    chains = per_chain.shape[0]
    mean = per_chain.mean(axis=0)
    if chains < 2:
        return mean, np.full_like(np.asarray(mean, float), np.nan)
    stderr = per_chain.std(axis=0, ddof=1) / math.sqrt(chains)
    return mean, stderr


def _trace_matrix(batch: SampleBatch, polys) -> np.ndarray:
    return np.column_stack([batch.trace_values(f) for f in polys]) \
        if polys else np.empty((batch.configs.shape[0], 0))


# ---------------------------------------------------------------------------
# dual coordinates
# ---------------------------------------------------------------------------


def dual_coordinates(spec: ModelSpec, theta, batch: SampleBatch | None = None
                     ) -> DualCoords:
    """eta_i = (1/n) E[Tr F_i]; exact path integrates against the one-point
    density, sampling path averages cached trace statistics."""
    theta = spec.validate_theta(theta)
    m = spec.m
    if m == 0:
        return DualCoords(np.zeros(0), np.zeros(0))
    if batch is None:
        dens = _exact.one_point_density(spec, theta).grid
        eta = np.array([dens.integrate(f) for f in spec.perturbations])
        return DualCoords(eta, np.zeros(m))
    traces = _trace_matrix(batch, spec.perturbations) / float(spec.n)
    per = np.stack([batch.per_chain(traces[:, j]).mean(axis=1)
                    for j in range(m)], axis=1)
    mean, stderr = _combine_chain_values(per)
    return DualCoords(mean, stderr)


# ---------------------------------------------------------------------------
# Fisher metric
# ---------------------------------------------------------------------------


def _mcmc_covariance(batch: SampleBatch, polys) -> tuple:
    m = len(polys)
    traces = _trace_matrix(batch, polys)
    covs = np.empty((batch.chains, m, m))
    for c in range(batch.chains):
        rows = np.stack([batch.per_chain(traces[:, j])[c] for j in range(m)])
        covs[c] = np.cov(rows, ddof=1) if m > 1 else \
            np.array([[np.var(rows[0], ddof=1)]])
    return _combine_chain_values(covs)


def _warn_if_unstable(batch: SampleBatch, polys) -> list:
    notes = []
    for f in polys:
        vals = batch.trace_values(f)
        total = sum(effective_sample_size(row) for row in batch.per_chain(vals))
        if total < MIN_EFFECTIVE_SAMPLES:
            msg = (f"~{total:.0f} effective samples behind Tr-statistic of "
                   f"degree {f.degree}; estimate may be unstable")
            warnings.warn(msg, UnstableEstimateWarning, stacklevel=3)
            notes.append(msg)
    return notes


def fisher_metric(spec: ModelSpec, theta, batch: SampleBatch | None = None,
                  convention: str = "eigenvalue") -> tuple:
    """(metric, stderr): covariance of trace statistics, equal to the
    pressure Hessian. Exact path returns zero stderr."""
    theta = spec.validate_theta(theta)
    if spec.m == 0:
        return np.zeros((0, 0)), np.zeros((0, 0))
    if batch is None:
        g = _exact.metric_exact(spec, theta, convention)
        return g, np.zeros_like(g)
    _warn_if_unstable(batch, spec.perturbations)
    return _mcmc_covariance(batch, spec.perturbations)


def product_fisher_metric(product: ProductModel, theta,
                          batches: list | None = None) -> tuple:
    """Full metric of an independent product model.

    Exact path assembles the block diagonal; the sampling path estimates all
    blocks including (identically zero) cross-blocks, for validation.
    """
    parts = product.split_theta(theta)
    if batches is None:
        g = _exact.metric_exact(product, theta)
        return g, np.zeros_like(g)
    if len(batches) != len(product.components):
        raise ValueError("need one batch per component")
    traces, chains = [], batches[0].chains
    for comp, part, batch in zip(product.components, parts, batches):
        for f in comp.perturbations:
            traces.append(batch.per_chain(batch.trace_values(f)))
    m = len(traces)
    covs = np.empty((chains, m, m))
    for c in range(chains):
        rows = np.stack([tr[c] for tr in traces])
        covs[c] = np.cov(rows, ddof=1) if m > 1 else \
            np.array([[np.var(rows[0], ddof=1)]])
    return _combine_chain_values(covs)


# ---------------------------------------------------------------------------
# alpha-connections
# ---------------------------------------------------------------------------


def alpha_connection(spec: ModelSpec, theta, alpha: float,
                     batch: SampleBatch | None = None,
                     include_vanishing_term: bool = False) -> tuple:
    """Connection coefficients Gamma^(alpha)_{ijk} at theta.

    Sampling path: -((1-alpha)/2) * n * E[c_i c_j c_k] with centered traces
    (the first defining term vanishes identically in the natural chart; pass
    include_vanishing_term=True to add its sample estimate for debugging).
    Exact path: ((1-alpha)/2) * third pressure derivative.
    """
    theta = spec.validate_theta(theta)
    m = spec.m
    if m == 0:
        return np.zeros((0, 0, 0)), np.zeros((0, 0, 0))
    if batch is None:
        t = _exact.connection_exact(spec, theta, alpha)
        return t, np.zeros_like(t)
    n = spec.n
    traces = _trace_matrix(batch, spec.perturbations)
    per = np.empty((batch.chains, m, m, m))
    factor = -0.5 * (1.0 - alpha) * n
    for c in range(batch.chains):
        rows = np.stack([batch.per_chain(traces[:, j])[c] for j in range(m)])
        cent = rows - rows.mean(axis=1, keepdims=True)
        third = np.einsum("it,jt,kt->ijk", cent, cent, cent) / rows.shape[1]
        per[c] = factor * third
        if include_vanishing_term:
            # n * d2psi/dtheta_k dtheta_i * mean(c_j): zero in expectation
            hess = _exact.metric_exact(spec, theta)
            per[c] += n * np.einsum("ki,j->ijk", hess, cent.mean(axis=1))
    return _combine_chain_values(per)


# ---------------------------------------------------------------------------
# Legendre transform and entropy
# ---------------------------------------------------------------------------


def _pressure_or_raise(spec: ModelSpec, theta, convention: str) -> float:
    if spec.n > _exact.EXACT_N_CAP:
        raise ExactEngineCapError(
            "pressure (and hence Legendre transform / entropy) needs the "
            f"quadrature engine, capped at n={_exact.EXACT_N_CAP}")
    return _exact.pressure_exact(spec, theta, convention)


def legendre_transform(spec: ModelSpec, theta, batch: SampleBatch | None = None,
                       convention: str = "eigenvalue") -> tuple:
    """phi = sum_i theta_i eta_i + psi == (1/n) E Tr(p_{theta,n} - p)."""
    theta = spec.validate_theta(theta)
    psi = _pressure_or_raise(spec, theta, convention)
    if batch is None:
        eta = dual_coordinates(spec, theta).eta
        return float(np.dot(theta, eta)) + psi, 0.0
    traces = _trace_matrix(batch, spec.perturbations) / float(spec.n)
    per_draw = traces @ np.asarray(theta) if spec.m else \
        np.zeros(batch.configs.shape[0])
    per = batch.per_chain(per_draw).mean(axis=1)
    mean, stderr = _combine_chain_values(per)
    return float(mean) + psi, float(stderr)


def entropy(spec: ModelSpec, theta, batch: SampleBatch | None = None,
            convention: str = "eigenvalue") -> tuple:
    """H = -[(1/n) E Tr p_theta + psi]; adding a constant to the base
    potential leaves H unchanged."""
    theta = spec.validate_theta(theta)
    psi = _pressure_or_raise(spec, theta, convention)
    pot = spec.potential_at(theta, _validate=False)
    if batch is None:
        dens = _exact.one_point_density(spec, theta).grid
        return -(dens.integrate(pot) + psi), 0.0
    per_draw = np.sum(pot(batch.configs), axis=1) / float(spec.n)
    per = batch.per_chain(per_draw).mean(axis=1)
    mean, stderr = _combine_chain_values(per)
    return -(float(mean) + psi), float(stderr)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def gue_closed_forms(mu: float, sigma: float, n: int) -> tuple:
    """Reference values for the Gaussian chart.

    Returns (pressure, metric) where the metric is the classical Gaussian
    Fisher information in (mu, sigma)-coordinates, diag(1/sigma^2,
    2/sigma^2), and the pressure is evaluated at the natural parameters
    theta1 = -mu/sigma^2, theta2 = 1/(2 sigma^2):

        psi = theta1^2 / (4 theta2) + (1/2) log(pi / (n theta2)).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    th1 = -mu / sigma**2
    th2 = 1.0 / (2.0 * sigma**2)
    pressure = th1 * th1 / (4.0 * th2) + 0.5 * math.log(math.pi / (n * th2))
    metric = np.array([[1.0 / sigma**2, 0.0], [0.0, 2.0 / sigma**2]])
    return pressure, metric


def lue_closed_form(t: float) -> float:
    """Quoted reference value 1/(2 t^2) for the positive-half-line chart with
    rate parameter 1/t.

    Note: the covariance of Tr A in that ensemble is 1/t^2, twice this value;
    the discrepancy is surfaced (deliberately) by the acceptance suite.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    return 1.0 / (2.0 * t * t)


def trace_pairing_diagnostic(spec: ModelSpec, theta, f: Polynomial,
                             g: Polynomial,
                             batch: SampleBatch | None = None) -> float:
    """(1/n) E[Tr(f g)]: the rejected candidate inner product.

    Kept only as a diagnostic statistic: it does not equal the pressure
    Hessian, so it is never used as the metric.
    """
    theta = spec.validate_theta(theta)
    prod = f * g
    if batch is None:
        dens = _exact.one_point_density(spec, theta).grid
        return dens.integrate(prod)
    return float(np.mean(batch.trace_values(prod))) / spec.n


# ---------------------------------------------------------------------------
# reports and sweeps
# ---------------------------------------------------------------------------


def geometry_report(spec: ModelSpec, theta, method: str = "exact",
                    sampler: SamplerConfig | None = None,
                    alphas=DEFAULT_ALPHAS, convention: str = "eigenvalue",
                    workers: int = 1) -> GeometryReport:
    """Assemble pressure, eta, metric, connections, Legendre value, entropy."""
    theta = spec.validate_theta(theta)
    if method not in ("exact", "mcmc"):
        raise ValueError(f"unknown method {method!r}")
    batch = None
    if method == "mcmc":
        if sampler is None:
            raise ValueError("mcmc method needs a SamplerConfig")
        batch = sample(spec, theta, sampler, workers=workers)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UnstableEstimateWarning)
        psi = _pressure_or_raise(spec, theta, convention)
        eta = dual_coordinates(spec, theta, batch)
        g, g_se = fisher_metric(spec, theta, batch)
        conns = {}
        for a in alphas:
            conns[float(a)] = alpha_connection(spec, theta, a, batch)[0]
        phi, phi_se = legendre_transform(spec, theta, batch, convention)
        H, H_se = entropy(spec, theta, batch, convention)
    notes = sorted({str(w.message) for w in caught
                    if issubclass(w.category, UnstableEstimateWarning)})
    return GeometryReport(theta=theta, method=method, convention=convention,
                          pressure=psi, pressure_stderr=0.0, eta=eta,
                          metric=g, metric_stderr=g_se, connections=conns,
                          legendre=phi, legendre_stderr=phi_se, entropy=H,
                          entropy_stderr=H_se, warnings=notes)


@dataclass
class ConvergenceRow:
    n: int
    metric: np.ndarray
    stderr: np.ndarray


@dataclass
class ConvergenceTable:
    rows: list
    slope: float

    def to_json_dict(self) -> dict:
        return {"rows": [{"n": r.n, "metric": r.metric.tolist(),
                          "stderr": r.stderr.tolist()} for r in self.rows],
                "slope": self.slope}


def convergence_sweep(spec: ModelSpec, theta, n_list, method: str = "exact",
                      sampler: SamplerConfig | None = None,
                      workers: int = 1) -> ConvergenceTable:
    """Metric per matrix size plus the log-log slope of |g(n) - g(n_max)|.

    The largest n serves as the reference; for models whose metric carries a
    1/n^2 correction the fitted slope sits near -2.
    """
    n_list = sorted(int(n) for n in n_list)
    if len(set(n_list)) != len(n_list):
        raise ValueError("n_list entries must be distinct")
    rows = []
    for n in n_list:
        spec_n = ModelSpec(spec.base, spec.perturbations, spec.theta_box, n,
                           spec.support)
        if method == "exact":
            g, se = fisher_metric(spec_n, theta)
        else:
            if sampler is None:
                raise ValueError("mcmc method needs a SamplerConfig")
            batch = sample(spec_n, theta, sampler, workers=workers)
            g, se = fisher_metric(spec_n, theta, batch)
        rows.append(ConvergenceRow(n=n, metric=g, stderr=se))
    slope = float("nan")
    if len(rows) >= 3:
        ref = rows[-1].metric
        ns, gaps = [], []
        for r in rows[:-1]:
            gap = float(np.linalg.norm(r.metric - ref))
            if gap > 0:
                ns.append(math.log(r.n))
                gaps.append(math.log(gap))
        if len(ns) >= 2:
            slope = float(np.polyfit(ns, gaps, 1)[0])
    return ConvergenceTable(rows=rows, slope=slope)
