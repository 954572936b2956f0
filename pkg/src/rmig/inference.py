"""Statistical harnesses: Cramér-Rao bound checks over independent
observations, fluctuation covariances, loop-equation residuals, and the free
Cramér-Rao comparison.

The error covariance uses the trace inner product E[Tr(.)Tr(.)] (positive
sign; positive semi-definiteness of the bound demands it). For estimators of
the expectation coordinates eta over k independent observations, the bound
matrix is g/k: the metric on the k-fold product in eta-coordinates is
k * g^{-1}, and the bound is its inverse.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import exact as _exact
from .errors import CompositionError
from .geometry import dual_coordinates, fisher_metric
from .mcmc import SampleBatch, SamplerConfig, sample
from .model import ModelSpec, trace_statistic
from .poly import Polynomial

__all__ = [
    "CRReport",
    "Estimator",
    "FluctuationReport",
    "LoopCheck",
    "check_unbiased",
    "cramer_rao_check",
    "estimate_value",
    "fluctuation_covariance",
    "free_cramer_rao_check",
    "loop_equation_residual",
]

DECISION_BAND = 3.0  # standard MC hypothesis-testing band, in stderr units


@dataclass(frozen=True)
class Estimator:
    """Estimator over k observations as a sum of per-argument trace
    statistics: component i evaluates to (1/n) sum_j Tr f_ij(A_j).

    Passing one polynomial per component (instead of k) is shorthand for the
    symmetric estimator f_ij = f_i1 shared across observations; the efficient
    estimator for the dual coordinates uses f_i = F_i / k.
    """

    components: tuple
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        normalized = []
        for comp in self.components:
            if isinstance(comp, Polynomial):
                comp = (comp,) * self.k
            comp = tuple(comp)
            if len(comp) != self.k:
                raise ValueError(
                    f"component needs 1 or k={self.k} polynomials, "
                    f"got {len(comp)}")
            normalized.append(comp)
        object.__setattr__(self, "components", tuple(normalized))

    @property
    def m(self) -> int:
        return len(self.components)

    @property
    def is_symmetric(self) -> bool:
        return all(all(f == comp[0] for f in comp) for comp in self.components)

    @classmethod
    def efficient(cls, spec: ModelSpec, k: int) -> "Estimator":
        return cls(tuple((1.0 / k) * f for f in spec.perturbations), k)

    @classmethod
    def weighted(cls, spec: ModelSpec, weights) -> "Estimator":
        """sum_j w_j Tr F_i(A_j)/n: unbiased for eta when the weights sum to
        one, efficient only for equal weights."""
        weights = tuple(float(w) for w in weights)
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to one for unbiasedness")
        return cls(tuple(tuple(w * f for w in weights)
                         for f in spec.perturbations), len(weights))


def estimate_value(est: Estimator, observations, n: int) -> np.ndarray:
    """Per-component (1/n) sum_j Tr f_ij(A_j) for k observations."""
    observations = list(observations)
    if len(observations) != est.k:
        raise CompositionError(
            f"estimator expects k={est.k} observations, got {len(observations)}")
    out = np.zeros(est.m)
    for i, comp in enumerate(est.components):
        out[i] = sum(trace_statistic(obs, f)
                     for obs, f in zip(observations, comp)) / n
    return out


# ---------------------------------------------------------------------------
# sampling over independent observation streams
# ---------------------------------------------------------------------------


def _observation_streams(spec: ModelSpec, theta, cfg: SamplerConfig, k: int,
                         workers: int = 1) -> list:
    """k independent batches with seeds derived from (cfg.seed, stream)."""
    seeds = [int(s.generate_state(1)[0])
             for s in np.random.SeedSequence(cfg.seed).spawn(k)]
    batches = []
    for s in seeds:
        cfg_s = SamplerConfig(steps=cfg.steps, seed=s, chains=cfg.chains,
                              burn_in=cfg.burn_in,
                              proposal_scale=cfg.proposal_scale,
                              thinning=cfg.thinning, tune=cfg.tune)
        batches.append(sample(spec, theta, cfg_s, workers=workers))
    return batches


def _estimate_series(est: Estimator, batches) -> np.ndarray:
    """Estimates per paired draw, shape (draws, m); draws pair up across the
    k streams by retained index."""
    n = batches[0].spec.n
    draws = batches[0].configs.shape[0]
    out = np.zeros((draws, est.m))
    for i, comp in enumerate(est.components):
        acc = np.zeros(draws)
        for batch, f in zip(batches, comp):
            acc += batch.trace_values(f)
        out[:, i] = acc / n
    return out


def check_unbiased(est: Estimator, spec: ModelSpec, theta, cfg: SamplerConfig,
                   targets=None, workers: int = 1) -> tuple:
    """(bias, stderr) per component; default targets are the exact dual
    coordinates (the efficient estimator estimates eta)."""
    theta = spec.validate_theta(theta)
    if targets is None:
        targets = dual_coordinates(spec, theta).eta
    targets = np.asarray(targets, float)
    batches = _observation_streams(spec, theta, cfg, est.k, workers)
    series = _estimate_series(est, batches)
    ref = batches[0]
    per = np.stack([ref.per_chain(series[:, i]).mean(axis=1)
                    for i in range(est.m)], axis=1)
    bias = per.mean(axis=0) - targets
    stderr = per.std(axis=0, ddof=1) / math.sqrt(ref.chains)
    return bias, stderr


# ---------------------------------------------------------------------------
# Cramér-Rao
# ---------------------------------------------------------------------------


@dataclass
class CRReport:
    """Outcome of a Cramér-Rao verification run."""

    error_cov: np.ndarray
    error_cov_stderr: np.ndarray
    metric_inverse: np.ndarray
    psd_slack: float
    psd_slack_stderr: float
    verdict: str
    unbiased: bool
    notes: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "error_cov": self.error_cov.tolist(),
            "error_cov_stderr": self.error_cov_stderr.tolist(),
            "metric_inverse": self.metric_inverse.tolist(),
            "psd_slack": self.psd_slack,
            "psd_slack_stderr": self.psd_slack_stderr,
            "verdict": self.verdict,
            "unbiased": self.unbiased,
            "notes": list(self.notes),
        }


def cramer_rao_check(est: Estimator, spec: ModelSpec, theta,
                     cfg: SamplerConfig, noise_std: float = 0.0,
                     workers: int = 1) -> CRReport:
    """Verify error_cov >= bound in the PSD order for an eta-coordinate
    estimator over k independent observations.

    error_cov is the trace inner product n^2 * E[(est - eta)(est - eta)^T];
    the bound for eta-coordinates on the k-fold product model is g/k.
    noise_std > 0 adds independent seeded Gaussian noise to every estimate
    component, modeling a deliberately inflated (inefficient) estimator.
    """
    theta = spec.validate_theta(theta)
    n = spec.n
    notes = []
    targets = dual_coordinates(spec, theta).eta
    batches = _observation_streams(spec, theta, cfg, est.k, workers)
    series = _estimate_series(est, batches)
    if noise_std > 0.0:
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence((cfg.seed, 0x9E3779B9)).spawn(1)[0]))
        series = series + rng.normal(0.0, noise_std, series.shape)

    ref = batches[0]
    per_bias = np.stack([ref.per_chain(series[:, i]).mean(axis=1)
                         for i in range(est.m)], axis=1)
    bias = per_bias.mean(axis=0) - targets
    bias_se = per_bias.std(axis=0, ddof=1) / math.sqrt(ref.chains)
    unbiased = bool(np.all(np.abs(bias) <= DECISION_BAND
                           * np.maximum(bias_se, 1e-300)))
    if not unbiased:
        notes.append("estimator failed the unbiasedness pre-check; "
                     "the bound below is reported but flagged")

    # bound for eta-coordinates: the k-fold product metric in eta-coordinates
    # is k * g^{-1}, whose inverse is g / k (no explicit inversion needed)
    g, _ = fisher_metric(spec, theta)
    bound = g / est.k
    cond = float(np.linalg.cond(g)) if est.m else 1.0
    if not np.isfinite(cond) or cond > 1e8:
        notes.append(f"metric nearly singular (condition number {cond:.3e}); "
                     "the eta-chart is degenerate along some direction")

    errs = series - targets[None, :]
    chains = ref.chains
    per_cov = np.empty((chains, est.m, est.m))
    per_slack = np.empty(chains)
    for c in range(chains):
        rows = np.stack([ref.per_chain(errs[:, i])[c] for i in range(est.m)])
        cov = n * n * (rows @ rows.T) / rows.shape[1]
        per_cov[c] = cov
        per_slack[c] = np.linalg.eigvalsh(cov - bound)[0]
    error_cov = per_cov.mean(axis=0)
    error_cov_se = per_cov.std(axis=0, ddof=1) / math.sqrt(chains)
    slack = float(np.linalg.eigvalsh(error_cov - bound)[0])
    slack_se = float(per_slack.std(ddof=1) / math.sqrt(chains))

    if slack >= -DECISION_BAND * slack_se:
        verdict = "bound-holds"
    elif slack >= -2.0 * DECISION_BAND * slack_se:
        verdict = "bound-violated-within-error"
    else:
        verdict = "bound-violated"
    return CRReport(error_cov=error_cov, error_cov_stderr=error_cov_se,
                    metric_inverse=bound, psd_slack=slack,
                    psd_slack_stderr=slack_se, verdict=verdict,
                    unbiased=unbiased, notes=notes)


# ---------------------------------------------------------------------------
# fluctuations
# ---------------------------------------------------------------------------


@dataclass
class FluctuationReport:
    """Per-n covariance of centered trace statistics vs the metric at 0."""

    n_values: list
    beta: list            # per-n (m, m) covariance estimate
    beta_stderr: list
    metric_mcmc: list     # fisher_metric on the same draws (code-path check)
    metric_exact: list    # quadrature metric when n is within the cap
    extrapolated: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "n": list(self.n_values),
            "beta": [b.tolist() for b in self.beta],
            "beta_stderr": [b.tolist() for b in self.beta_stderr],
            "metric_mcmc": [m.tolist() for m in self.metric_mcmc],
            "metric_exact": [None if m is None else m.tolist()
                             for m in self.metric_exact],
            "extrapolated": self.extrapolated.tolist(),
        }


def fluctuation_covariance(spec: ModelSpec, n_list, cfg: SamplerConfig,
                           workers: int = 1) -> FluctuationReport:
    """Fluctuations beta_ij = Cov(Tr F_i, Tr F_j) at theta = 0 per matrix
    size, against the metric evaluated on the same draws and (when possible)
    the quadrature metric."""
    theta = spec.validate_theta(tuple(0.0 for _ in range(spec.m)))
    betas, beta_ses, g_mcmc, g_exact = [], [], [], []
    for n in n_list:
        spec_n = ModelSpec(spec.base, spec.perturbations, spec.theta_box,
                           int(n), spec.support)
        batch = sample(spec_n, theta, cfg, workers=workers)
        traces = np.column_stack([batch.trace_values(f)
                                  for f in spec_n.perturbations])
        chains = batch.chains
        per = np.empty((chains, spec.m, spec.m))
        for c in range(chains):
            rows = np.stack([batch.per_chain(traces[:, j])[c]
                             for j in range(spec.m)])
            cent = rows - rows.mean(axis=1, keepdims=True)
            per[c] = cent @ cent.T / (rows.shape[1] - 1)
        betas.append(per.mean(axis=0))
        beta_ses.append(per.std(axis=0, ddof=1) / math.sqrt(chains))
        g_mcmc.append(fisher_metric(spec_n, theta, batch)[0])
        g_exact.append(fisher_metric(spec_n, theta)[0]
                       if n <= _exact.EXACT_N_CAP else None)
    return FluctuationReport(n_values=[int(n) for n in n_list], beta=betas,
                             beta_stderr=beta_ses, metric_mcmc=g_mcmc,
                             metric_exact=g_exact, extrapolated=betas[-1])


# ---------------------------------------------------------------------------
# loop equation
# ---------------------------------------------------------------------------


@dataclass
class LoopCheck:
    residual: float
    scale: float
    stderr: float
    terms: tuple

    def to_json_dict(self) -> dict:
        return {"residual": self.residual, "scale": self.scale,
                "stderr": self.stderr, "terms": list(self.terms)}


def loop_equation_residual(spec: ModelSpec, theta, phi: Polynomial,
                           batch: SampleBatch) -> LoopCheck:
    """Monte-Carlo residual of the first loop (Schwinger-Dyson) equation

        n(n-1) E2[ (phi(t)-phi(s))/(t-s) ] - n^2 E1[ p' phi ] + n E1[ phi' ] = 0

    with E1, E2 the normalized one- and two-point expectations. E2 uses all
    ordered pairs of distinct eigenvalues within each retained configuration;
    a coincident pair falls back to phi' at the midpoint.
    """
    theta = spec.validate_theta(theta)
    n = spec.n
    pprime = spec.potential_at(theta, _validate=False).derivative()
    phiprime = phi.derivative()
    lam = batch.configs
    phiv = phi(lam)
    draws = lam.shape[0]
    e2 = np.zeros(draws)
    if n >= 2:
        off = ~np.eye(n, dtype=bool)
        chunk = max(1, (1 << 22) // (n * n))
        for lo in range(0, draws, chunk):
            ls = lam[lo:lo + chunk]
            ps = phiv[lo:lo + chunk]
            dl = ls[:, :, None] - ls[:, None, :]
            dp = ps[:, :, None] - ps[:, None, :]
            quot = np.zeros_like(dl)
            tiny = np.abs(dl) < 1e-12
            np.divide(dp, dl, out=quot, where=~tiny)
            tiny &= off[None, :, :]
            if tiny.any():
                mids = 0.5 * (ls[:, :, None] + ls[:, None, :])
                quot[tiny] = phiprime(mids[tiny])
            e2[lo:lo + chunk] = quot[:, off].mean(axis=1)
    e1_pp = np.mean(pprime(lam) * phiv, axis=1)
    e1_dp = np.mean(phiprime(lam), axis=1)
    per_draw = (n * (n - 1) * e2 - n * n * e1_pp + n * e1_dp)

    per_chain = batch.per_chain(per_draw).mean(axis=1)
    residual = float(per_chain.mean())
    stderr = float(per_chain.std(ddof=1) / math.sqrt(batch.chains)) \
        if batch.chains >= 2 else float("nan")
    terms = (float(n * (n - 1) * e2.mean()), float(-n * n * e1_pp.mean()),
             float(n * e1_dp.mean()))
    scale = max(abs(t) for t in terms) or 1.0
    return LoopCheck(residual=residual, scale=scale, stderr=stderr, terms=terms)


# ---------------------------------------------------------------------------
# free Cramér-Rao
# ---------------------------------------------------------------------------


@dataclass
class FreeCRRow:
    n: int
    second_moment: float
    stderr: float


@dataclass
class FreeCRReport:
    rows: list
    inverse_free_fisher: float
    centered: bool
    holds: bool

    def to_json_dict(self) -> dict:
        return {"rows": [{"n": r.n, "second_moment": r.second_moment,
                          "stderr": r.stderr} for r in self.rows],
                "inverse_free_fisher": self.inverse_free_fisher,
                "centered": self.centered, "holds": self.holds}


def free_cramer_rao_check(spec: ModelSpec, n_list, cfg: SamplerConfig,
                          workers: int = 1) -> FreeCRReport:
    """Compare (1/n) E[Tr A^2] against 1/Phi for the base potential.

    The comparison assumes a centered model ((1/n) E[Tr A] ~ 0); violation is
    flagged but the rows are still reported. `holds` records whether the
    inequality is satisfied at the largest n within the 3-stderr band.
    """
    from .freelimit import free_fisher, solve_one_cut

    theta = spec.validate_theta(tuple(0.0 for _ in range(spec.m)))
    x = Polynomial((0.0, 1.0))
    x2 = Polynomial((0.0, 0.0, 1.0))
    measure = solve_one_cut(spec.base)
    inv_phi = 1.0 / free_fisher(measure)
    rows = []
    centered = True
    for i, n in enumerate(sorted(int(v) for v in n_list)):
        spec_n = ModelSpec(spec.base, spec.perturbations, spec.theta_box, n,
                           spec.support)
        batch = sample(spec_n, theta, cfg, workers=workers)
        if i == 0:
            mean1 = batch.per_chain(batch.trace_values(x) / n).mean(axis=1)
            m1, se1 = float(mean1.mean()), float(mean1.std(ddof=1)
                                                 / math.sqrt(batch.chains))
            if abs(m1) > DECISION_BAND * max(se1, 1e-300):
                centered = False
                warnings.warn("model is not centered; free Cramér-Rao "
                              "comparison reported anyway", UserWarning,
                              stacklevel=2)
        per = batch.per_chain(batch.trace_values(x2) / n).mean(axis=1)
        rows.append(FreeCRRow(n=n, second_moment=float(per.mean()),
                              stderr=float(per.std(ddof=1)
                                           / math.sqrt(batch.chains))))
    last = rows[-1]
    holds = last.second_moment + DECISION_BAND * last.stderr >= inv_phi
    return FreeCRReport(rows=rows, inverse_free_fisher=inv_phi,
                        centered=centered, holds=holds)
