"""Coulomb-gas eigenvalue sampling and direct Gaussian-ensemble draws.

The workhorse is Metropolis-within-Gibbs over eigenvalue coordinates: each
sweep proposes one Gaussian move per coordinate and accepts by the
log-density ratio, which only touches the n-1 affected repulsion terms.
Chains draw from independent Philox streams derived from (seed, chain), so
results are reproducible and independent of thread scheduling.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import SamplingDiagnosticsError, SingleChainWarning
from .exact import _potential_minimum
from .model import SUPPORT_POSITIVE, ModelSpec
from .poly import Polynomial

__all__ = [
    "SampleBatch",
    "SamplerConfig",
    "batch_mean_and_stderr",
    "sample",
    "sample_gue_direct",
]

ACCEPTANCE_FLOOR = 0.01
TUNE_INTERVAL = 50
TUNE_BAND = (0.30, 0.45)


@dataclass(frozen=True)
class SamplerConfig:
    """Chain layout and proposal parameters. burn_in defaults to 20% of steps."""

    steps: int
    seed: int
    chains: int = 4
    burn_in: int | None = None
    proposal_scale: float = 0.5
    thinning: int = 1
    tune: bool = True

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError("steps must be >= 2")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if self.proposal_scale <= 0:
            raise ValueError("proposal_scale must be positive")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.seed < 0 or int(self.seed) >= 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.resolved_burn_in >= self.steps:
            raise ValueError("burn_in must be smaller than steps")

    @property
    def resolved_burn_in(self) -> int:
        if self.burn_in is not None:
            return int(self.burn_in)
        return int(0.2 * self.steps)

    def to_json_dict(self) -> dict:
        return {
            "steps": self.steps,
            "seed": int(self.seed),
            "chains": self.chains,
            "burn_in": self.resolved_burn_in,
            "proposal_scale": self.proposal_scale,
            "thinning": self.thinning,
            "tune": self.tune,
        }


def _poly_key(f: Polynomial) -> str:
    return ",".join(repr(c) for c in f.coeffs)


@dataclass
class SampleBatch:
    """Retained eigenvalue configurations plus chain metadata.

    configs has shape (draws, n); chain_index labels the chain of each row.
    trace_cache maps a polynomial identifier to its per-draw trace statistics.
    """

    configs: np.ndarray
    chain_index: np.ndarray
    acceptance: np.ndarray
    spec: ModelSpec
    theta: tuple
    sampler: SamplerConfig
    trace_cache: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.configs.shape[1]

    @property
    def chains(self) -> int:
        return int(self.acceptance.size)

    @property
    def draws_per_chain(self) -> int:
        return self.configs.shape[0] // self.chains

    def trace_values(self, f: Polynomial) -> np.ndarray:
        """Tr f(A) per retained draw, cached by polynomial identity."""
        key = _poly_key(f)
        vals = self.trace_cache.get(key)
        if vals is None:
            vals = np.sum(f(self.configs), axis=1)
            self.trace_cache[key] = vals
        return vals

    def per_chain(self, values: np.ndarray) -> np.ndarray:
        """Reshape per-draw values to (chains, draws_per_chain)."""
        values = np.asarray(values)
        return values.reshape(self.chains, self.draws_per_chain)

    # -- export ----------------------------------------------------------------
    def metadata_dict(self) -> dict:
        return {
            "model": self.spec.to_json_dict(),
            "theta": list(self.theta),
            "sampler": self.sampler.to_json_dict(),
            "acceptance": [float(a) for a in self.acceptance],
            "draws": int(self.configs.shape[0]),
        }

    def export_csv(self, path, metadata_path=None) -> None:
        """Rows (chain, step, lambda_1..lambda_n) plus a JSON metadata header."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["chain", "step"]
                            + [f"lambda_{i + 1}" for i in range(self.n)])
            per = self.draws_per_chain
            for row, (c, lam) in enumerate(zip(self.chain_index, self.configs)):
                writer.writerow([int(c), row % per] + [repr(v) for v in lam])
        if metadata_path is not None:
            with open(metadata_path, "w") as fh:
                json.dump(self.metadata_dict(), fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Metropolis-within-Gibbs
# ---------------------------------------------------------------------------


def _horner(coeffs):
    rev = tuple(reversed(coeffs))

    def fn(x):
        acc = 0.0
        for c in rev:
            acc = acc * x + c
        return acc

    return fn


def _run_chain(spec: ModelSpec, theta, cfg: SamplerConfig, stream):
    rng = np.random.Generator(np.random.Philox(stream))
    n = spec.n
    pot_poly = spec.potential_at(theta, _validate=False)
    pot = _horner(pot_poly.coeffs)
    positive = spec.support == SUPPORT_POSITIVE

    # overdispersed start around the potential minimum, deterministic per stream
    lam = _potential_minimum(pot_poly, positive) + rng.standard_normal(n)
    if positive:
        lam = np.abs(lam) + 1e-3
    lam = np.sort(lam)

    scale = cfg.proposal_scale
    burn = cfg.resolved_burn_in
    keep = (cfg.steps - burn + cfg.thinning - 1) // cfg.thinning
    out = np.empty((keep, n))
    kept = 0
    accepted_tail = 0
    tune_hits = 0

    for t in range(cfg.steps):
        steps = rng.standard_normal(n) * scale
        logu = np.log(rng.random(n))
        for i in range(n):
            cur = lam[i]
            prop = cur + steps[i]
            if positive and prop < 0.0:
                prop = -prop
            d_new = np.abs(prop - lam[:i])
            d_new2 = np.abs(prop - lam[i + 1:])
            if (d_new == 0.0).any() or (d_new2 == 0.0).any():
                continue
            d_old = np.abs(cur - lam[:i])
            d_old2 = np.abs(cur - lam[i + 1:])
            delta = 2.0 * (np.log(d_new).sum() + np.log(d_new2).sum()
                           - np.log(d_old).sum() - np.log(d_old2).sum())
            delta -= n * (pot(prop) - pot(cur))
            if logu[i] < delta:
                lam[i] = prop
                if t < burn:
                    tune_hits += 1
                else:
                    accepted_tail += 1
        if cfg.tune and t < burn and (t + 1) % TUNE_INTERVAL == 0:
            rate = tune_hits / float(TUNE_INTERVAL * n)
            if rate > TUNE_BAND[1]:
                scale *= 1.25
            elif rate < TUNE_BAND[0]:
                scale *= 0.8
            tune_hits = 0
        if t >= burn and (t - burn) % cfg.thinning == 0:
            out[kept] = np.sort(lam)
            kept += 1

    rate = accepted_tail / float(max(cfg.steps - burn, 1) * n)
    return out[:kept], rate, scale


def sample(spec: ModelSpec, theta, cfg: SamplerConfig, workers: int = 1
           ) -> SampleBatch:
    """Sample the Coulomb-gas eigenvalue density.

    Deterministic given cfg.seed, independently of `workers` (chains own
    their random streams). Raises SamplingDiagnosticsError when post-burn-in
    acceptance collapses below 1%.
    """
    theta = spec.validate_theta(theta)
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.chains)

    def job(c):
        return _run_chain(spec, theta, cfg, streams[c])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(cfg.chains)))
    else:
        results = [job(c) for c in range(cfg.chains)]

    rates = np.array([r[1] for r in results])
    if np.any(rates < ACCEPTANCE_FLOOR):
        raise SamplingDiagnosticsError(
            f"acceptance rate {rates.min():.3%} below {ACCEPTANCE_FLOOR:.0%}; "
            "try a smaller proposal_scale")
    configs = np.concatenate([r[0] for r in results], axis=0)
    chain_index = np.repeat(np.arange(cfg.chains), results[0][0].shape[0])
    batch = SampleBatch(configs=configs, chain_index=chain_index,
                        acceptance=rates, spec=spec, theta=theta, sampler=cfg)
    for f in spec.perturbations:
        batch.trace_values(f)
    return batch


# ---------------------------------------------------------------------------
# direct Gaussian sampler
# ---------------------------------------------------------------------------


def _gue_model(n: int, mu: float, sigma: float) -> ModelSpec:
    # potential (x - mu)^2 / (2 sigma^2), no perturbations
    s2 = sigma * sigma
    return ModelSpec(Polynomial((mu * mu / (2 * s2), -mu / s2, 1.0 / (2 * s2))),
                     n=n)


def sample_gue_direct(n: int, mu: float, sigma: float, count: int, seed: int,
                      chains: int = 4) -> SampleBatch:
    """Exact i.i.d. draws from exp(-n Tr((A - mu)^2 / (2 sigma^2))).

    Entry variances are sigma^2/n for the real diagonal and for each complex
    off-diagonal entry; eigenvalues come from direct diagonalization.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    per = count // chains
    if per < 1:
        raise ValueError("count must be >= chains")
    streams = np.random.SeedSequence(seed).spawn(chains)
    iu = np.triu_indices(n, k=1)
    offd_std = sigma / math.sqrt(2.0 * n)
    diag_std = sigma / math.sqrt(n)
    configs = np.empty((per * chains, n))
    row = 0
    for c in range(chains):
        rng = np.random.Generator(np.random.Philox(streams[c]))
        for _ in range(per):
            A = np.zeros((n, n), dtype=complex)
            if iu[0].size:
                re = rng.normal(0.0, offd_std, iu[0].size)
                im = rng.normal(0.0, offd_std, iu[0].size)
                A[iu] = re + 1j * im
                A += A.conj().T
            A[np.diag_indices(n)] = rng.normal(mu, diag_std, n)
            configs[row] = np.linalg.eigvalsh(A)
            row += 1
    cfg = SamplerConfig(steps=max(per, 2), seed=seed, chains=chains, burn_in=0,
                        tune=False)
    return SampleBatch(configs=configs,
                       chain_index=np.repeat(np.arange(chains), per),
                       acceptance=np.ones(chains),
                       spec=_gue_model(n, mu, sigma), theta=(), sampler=cfg)


# ---------------------------------------------------------------------------
# error bars
# ---------------------------------------------------------------------------


def _autocov(values: np.ndarray) -> np.ndarray:
    v = values - values.mean()
    size = len(v)
    nfft = 1 << (2 * size - 1).bit_length()
    f = np.fft.rfft(v, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:size].real / size
    return acov

def _windowed_stderr(values: np.ndarray) -> float:
    """Geyer initial-positive-sequence standard error for one chain."""
    acov = _autocov(values)
    var = acov[0]
    if var <= 0:
        return 0.0
    s = var
    t = 1
    while t + 1 < len(acov):
        pair = acov[t] + acov[t + 1]
        if pair <= 0:
            break
        s += 2.0 * pair
        t += 2
    return math.sqrt(max(s, 0.0) / len(values))


def effective_sample_size(values: np.ndarray) -> float:
    acov = _autocov(values)
    if acov[0] <= 0:
        return float(len(values))
    se = _windowed_stderr(values)
    if se == 0.0:
        return float(len(values))
    return acov[0] / (se * se)


def batch_mean_and_stderr(batch: SampleBatch, values) -> tuple:
    """Mean of a per-draw statistic with a conservative standard error.

    With >= 2 chains the error comes from the between-chain spread of chain
    means; a single chain falls back to an autocorrelation-windowed estimate
    (flagged via SingleChainWarning).
    """
    values = np.asarray(values, dtype=float)
    if batch.chains >= 2:
        means = batch.per_chain(values).mean(axis=1)
        return float(means.mean()), float(means.std(ddof=1)
                                          / math.sqrt(batch.chains))
    warnings.warn("single chain: falling back to autocorrelation-windowed "
                  "standard error", SingleChainWarning, stacklevel=2)
    return float(values.mean()), _windowed_stderr(values)
