"""Command-line interface: JSON configs in, seeded reproducible reports out.

A run is described by a JSON document (``--config``) whose scalar fields can
be overridden with dotted flags (``--sampler.steps=200000``). Every report
embeds the fully materialized config and a content hash of its body, so a
(config, seed) pair maps to a byte-identical report body. Exit codes:
0 success, 2 usage, 3 solver/convergence failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import exact, freelimit, geometry, inference
from .errors import (
    ExactEngineCapError,
    MultiCutError,
    ParameterDomainError,
    SamplingDiagnosticsError,
    SolverError,
    StepSizeError,
    TruncationDomainError,
    TruncationError,
    UsageError,
)
from .mcmc import SamplerConfig, sample
from .model import ModelSpec, ProductModel, compose_independent
from .poly import Polynomial

__all__ = ["COMMANDS", "RunConfig", "main", "run", "validate_config"]

COMMANDS = (
    "pressure", "metric", "connections", "legendre", "entropy", "equilibrium",
    "free-report", "cramer-rao", "fluctuations", "loop-check",
    "convergence-sweep", "compose",
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_IO = 4

_SOLVER_ERRORS = (SolverError, MultiCutError, TruncationError,
                  TruncationDomainError, ExactEngineCapError, StepSizeError,
                  SamplingDiagnosticsError)

_SAMPLER_KEYS = {"steps", "seed", "chains", "burn_in", "proposal_scale",
                 "thinning", "tune"}
_TOP_KEYS = {"command", "model", "models", "theta", "thetas", "method",
             "sampler", "output", "out", "phi", "n_list", "k", "noise_std",
             "alphas", "radius", "density_points"}
_SAMPLER_DEFAULTS = {"chains": 4, "proposal_scale": 0.5, "thinning": 1,
                     "tune": True, "steps": 20000}


@dataclass
class RunConfig:
    """Materialized run description (defaults filled, invariants checked)."""

    command: str
    model: object            # ModelSpec | ProductModel | None
    theta: tuple
    method: str
    sampler: SamplerConfig | None
    output: str
    out: str | None
    extras: dict = field(default_factory=dict)
    workers: int = 1

    def to_json_dict(self) -> dict:
        doc = {
            "command": self.command,
            "theta": list(self.theta),
            "method": self.method,
            "output": self.output,
        }
        if isinstance(self.model, ProductModel):
            doc["models"] = [c.to_json_dict() for c in self.model.components]
        elif isinstance(self.model, ModelSpec):
            doc["model"] = self.model.to_json_dict()
        if self.sampler is not None:
            doc["sampler"] = self.sampler.to_json_dict()
        # the output path is an I/O detail and stays out of the hashed body
        doc.update({k: v for k, v in sorted(self.extras.items())})
        return doc


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _load_model(doc) -> ModelSpec:
    if isinstance(doc, str):
        with open(doc) as fh:
            doc = json.load(fh)
    if not isinstance(doc, dict):
        raise UsageError("model must be an inline object or a file path")
    try:
        return ModelSpec.from_json_dict(doc)
    except ParameterDomainError as exc:
        raise UsageError(f"invalid model: {exc}") from exc


def validate_config(doc: dict) -> RunConfig:
    """Parse and invariant-check a config document; fill all defaults."""
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    command = doc.get("command")
    if command not in COMMANDS:
        raise UsageError(f"command must be one of {', '.join(COMMANDS)}; "
                         f"got {command!r}")
    method = doc.get("method", "exact")
    if method not in ("exact", "mcmc", "both"):
        raise UsageError(f"method must be exact|mcmc|both, got {method!r}")

    model = None
    if command == "compose":
        models_doc = doc.get("models")
        if not models_doc:
            raise UsageError("compose needs a 'models' list")
        model = compose_independent([_load_model(m) for m in models_doc])
    else:
        if "model" not in doc:
            raise UsageError(f"command {command!r} needs a 'model'")
        model = _load_model(doc["model"])

    theta = tuple(float(t) for t in doc.get("theta", []))
    try:
        if isinstance(model, (ModelSpec, ProductModel)):
            if command == "compose":
                model.split_theta(theta)
            else:
                model.validate_theta(theta)
    except ParameterDomainError as exc:
        raise UsageError(str(exc)) from exc

    needs_sampler = (method in ("mcmc", "both")
                     or command in ("cramer-rao", "fluctuations", "loop-check"))
    sampler = None
    if "sampler" in doc or needs_sampler:
        sdoc = dict(doc.get("sampler", {}))
        unknown = set(sdoc) - _SAMPLER_KEYS
        if unknown:
            raise UsageError(f"unknown sampler keys: {sorted(unknown)}")
        for key, val in _SAMPLER_DEFAULTS.items():
            sdoc.setdefault(key, val)
        if needs_sampler and sdoc.get("seed") is None:
            raise UsageError("seed is mandatory for runs that sample "
                             "(method=mcmc/both or sampling commands)")
        if sdoc.get("seed") is None:
            sdoc["seed"] = 0
        try:
            sampler = SamplerConfig(**sdoc)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid sampler config: {exc}") from exc

    output = doc.get("output", "table")
    if output not in ("table", "json", "csv"):
        raise UsageError(f"output must be table|json|csv, got {output!r}")

    extras = {}
    if command == "loop-check":
        extras["phi"] = [float(c) for c in doc.get("phi", [0.0, 1.0])]
    if command in ("fluctuations", "convergence-sweep"):
        extras["n_list"] = [int(v) for v in doc.get("n_list", [4, 8, 16])]
        if any(v < 1 for v in extras["n_list"]):
            raise UsageError("n_list entries must be positive")
    if command == "cramer-rao":
        extras["k"] = int(doc.get("k", 1))
        if extras["k"] < 1:
            raise UsageError("k must be >= 1")
        extras["noise_std"] = float(doc.get("noise_std", 0.0))
    if command == "connections":
        extras["alphas"] = [float(a) for a in
                            doc.get("alphas", list(geometry.DEFAULT_ALPHAS))]
    if command == "free-report" and "radius" in doc:
        extras["radius"] = float(doc["radius"])
    if command == "equilibrium":
        extras["density_points"] = int(doc.get("density_points", 0))
        if extras["density_points"] < 0:
            raise UsageError("density_points must be nonnegative")
    return RunConfig(command=command, model=model, theta=theta, method=method,
                     sampler=sampler, output=output, out=doc.get("out"),
                     extras=extras)


# ---------------------------------------------------------------------------
# command bodies
# ---------------------------------------------------------------------------


def _f(x) -> float:
    return float(x)


def _agreement(a, b, se, band=3.0) -> bool:
    tol = band * max(se, 1e-300)
    return bool(abs(a - b) <= max(tol, 0.05 * max(abs(a), abs(b), 1e-12)))


def _batch_for(cfg: RunConfig):
    return sample(cfg.model, cfg.theta, cfg.sampler, workers=cfg.workers)


def _body_pressure(cfg: RunConfig) -> dict:
    rows = {}
    for conv in ("eigenvalue", "matrix"):
        rows[conv] = _f(exact.pressure_exact(cfg.model, cfg.theta, conv))
    return {"pressure": rows}


def _metric_payload(cfg: RunConfig) -> dict:
    out = {}
    if cfg.method in ("exact", "both"):
        g, _ = geometry.fisher_metric(cfg.model, cfg.theta)
        out["exact"] = g.tolist()
    if cfg.method in ("mcmc", "both"):
        batch = _batch_for(cfg)
        g, se = geometry.fisher_metric(cfg.model, cfg.theta, batch)
        out["mcmc"] = g.tolist()
        out["mcmc_stderr"] = se.tolist()
        out["acceptance"] = [_f(a) for a in batch.acceptance]
    if cfg.method == "both":
        gx = np.asarray(out["exact"])
        gm = np.asarray(out["mcmc"])
        gs = np.asarray(out["mcmc_stderr"])
        out["agree"] = [[_agreement(gx[i, j], gm[i, j], gs[i, j])
                         for j in range(gx.shape[1])] for i in range(gx.shape[0])]
    return out


def _body_metric(cfg: RunConfig) -> dict:
    return {"metric": _metric_payload(cfg)}


def _body_connections(cfg: RunConfig) -> dict:
    alphas = cfg.extras["alphas"]
    out = {}
    batch = _batch_for(cfg) if cfg.method in ("mcmc", "both") else None
    for a in alphas:
        entry = {}
        if cfg.method in ("exact", "both"):
            entry["exact"] = exact.connection_exact(cfg.model, cfg.theta,
                                                    a).tolist()
        if batch is not None:
            t, se = geometry.alpha_connection(cfg.model, cfg.theta, a, batch)
            entry["mcmc"] = t.tolist()
            entry["mcmc_stderr"] = se.tolist()
        out[repr(float(a))] = entry
    return {"connections": out}


def _body_scalar(cfg: RunConfig, fn) -> dict:
    out = {}
    if cfg.method in ("exact", "both"):
        val, _ = fn(cfg.model, cfg.theta, None)
        out["exact"] = _f(val)
    if cfg.method in ("mcmc", "both"):
        batch = _batch_for(cfg)
        val, se = fn(cfg.model, cfg.theta, batch)
        out["mcmc"] = _f(val)
        out["mcmc_stderr"] = _f(se)
    if cfg.method == "both":
        out["agree"] = _agreement(out["exact"], out["mcmc"], out["mcmc_stderr"])
    return out


def _body_equilibrium(cfg: RunConfig) -> dict:
    pot = cfg.model.potential_at(cfg.theta)
    measure = freelimit.solve_one_cut(pot)
    body = {"equilibrium": measure.to_json_dict()}
    body["equilibrium"]["residual"] = _f(
        freelimit.equilibrium_residual(measure, pot))
    body["equilibrium"]["chi"] = _f(freelimit.log_energy(measure))
    points = cfg.extras.get("density_points", 0)
    if points:
        xs = np.linspace(measure.a, measure.b, points)
        body["equilibrium"]["density"] = {
            "x": [_f(v) for v in xs],
            "q": [_f(v) for v in measure.density(xs)],
        }
    return body


def _body_free_report(cfg: RunConfig) -> dict:
    rep = freelimit.build_free_report(cfg.model, cfg.theta,
                                      cfg.extras.get("radius"))
    return {"free_report": rep.to_json_dict()}


def _body_cramer_rao(cfg: RunConfig) -> dict:
    est = inference.Estimator.efficient(cfg.model, cfg.extras["k"])
    rep = inference.cramer_rao_check(est, cfg.model, cfg.theta, cfg.sampler,
                                     noise_std=cfg.extras["noise_std"],
                                     workers=cfg.workers)
    return {"cramer_rao": rep.to_json_dict()}


def _body_fluctuations(cfg: RunConfig) -> dict:
    rep = inference.fluctuation_covariance(cfg.model, cfg.extras["n_list"],
                                           cfg.sampler, workers=cfg.workers)
    return {"fluctuations": rep.to_json_dict()}


def _body_loop_check(cfg: RunConfig) -> dict:
    batch = _batch_for(cfg)
    phi = Polynomial(tuple(cfg.extras["phi"]))
    rep = inference.loop_equation_residual(cfg.model, cfg.theta, phi, batch)
    doc = rep.to_json_dict()
    doc["consistent"] = bool(abs(rep.residual) <= 3.0 * rep.stderr)
    return {"loop_check": doc}


def _body_sweep(cfg: RunConfig) -> dict:
    method = "mcmc" if cfg.method == "mcmc" else "exact"
    rep = geometry.convergence_sweep(cfg.model, cfg.theta,
                                     cfg.extras["n_list"], method=method,
                                     sampler=cfg.sampler, workers=cfg.workers)
    return {"convergence_sweep": rep.to_json_dict()}


def _body_compose(cfg: RunConfig) -> dict:
    product = cfg.model
    body = {"components": [c.to_json_dict() for c in product.components]}
    if cfg.method in ("exact", "both"):
        g, _ = geometry.product_fisher_metric(product, cfg.theta)
        body["metric_exact"] = g.tolist()
    if cfg.method in ("mcmc", "both"):
        parts = product.split_theta(cfg.theta)
        batches = []
        streams = np.random.SeedSequence(cfg.sampler.seed).spawn(
            len(product.components))
        for comp, part, stream in zip(product.components, parts, streams):
            scfg = SamplerConfig(steps=cfg.sampler.steps,
                                 seed=int(stream.generate_state(1)[0]),
                                 chains=cfg.sampler.chains,
                                 burn_in=cfg.sampler.burn_in,
                                 proposal_scale=cfg.sampler.proposal_scale,
                                 thinning=cfg.sampler.thinning,
                                 tune=cfg.sampler.tune)
            batches.append(sample(comp, part, scfg, workers=cfg.workers))
        g, se = geometry.product_fisher_metric(product, cfg.theta, batches)
        body["metric_mcmc"] = g.tolist()
        body["metric_mcmc_stderr"] = se.tolist()
        cross_max = 0.0
        for i, sl_i in enumerate(product.block_slices()):
            for j, sl_j in enumerate(product.block_slices()):
                if i != j:
                    blk = np.abs(g[sl_i, sl_j])
                    if blk.size:
                        cross_max = max(cross_max, float(blk.max()))
        body["max_cross_block"] = cross_max
    return {"compose": body}


_BODIES = {
    "pressure": _body_pressure,
    "metric": _body_metric,
    "connections": _body_connections,
    "legendre": lambda cfg: {"legendre": _body_scalar(
        cfg, lambda m, t, b: geometry.legendre_transform(m, t, b))},
    "entropy": lambda cfg: {"entropy": _body_scalar(
        cfg, lambda m, t, b: geometry.entropy(m, t, b))},
    "equilibrium": _body_equilibrium,
    "free-report": _body_free_report,
    "cramer-rao": _body_cramer_rao,
    "fluctuations": _body_fluctuations,
    "loop-check": _body_loop_check,
    "convergence-sweep": _body_sweep,
    "compose": _body_compose,
}


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _render_table(doc, indent=0, out=None):
    pad = "  " * indent
    for key in sorted(doc) if isinstance(doc, dict) else []:
        val = doc[key]
        if isinstance(val, dict):
            out.write(f"{pad}{key}:\n")
            _render_table(val, indent + 1, out)
        elif isinstance(val, list):
            out.write(f"{pad}{key}: {_fmt_list(val)}\n")
        elif isinstance(val, float):
            out.write(f"{pad}{key}: {val:.6g}\n")
        else:
            out.write(f"{pad}{key}: {val}\n")


def _fmt_list(val):
    parts = []
    for v in val:
        if isinstance(v, list):
            parts.append(_fmt_list(v))
        elif isinstance(v, float):
            parts.append(f"{v:.6g}")
        elif isinstance(v, bool) or v is None:
            parts.append(str(v).lower() if v is not None else "null")
        else:
            parts.append(str(v))
    return "[" + ", ".join(parts) + "]"


def _flatten(doc, prefix=""):
    rows = []
    if isinstance(doc, dict):
        for key in sorted(doc):
            rows.extend(_flatten(doc[key], f"{prefix}{key}."))
    elif isinstance(doc, list):
        for i, val in enumerate(doc):
            rows.extend(_flatten(val, f"{prefix}{i}."))
    else:
        rows.append((prefix[:-1], doc))
    return rows


def _render_csv(body, out):
    writer = csv.writer(out)
    writer.writerow(["field", "value"])
    for key, val in _flatten(body):
        writer.writerow([key, repr(val) if isinstance(val, float) else val])


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def run(cfg: RunConfig) -> tuple:
    """Execute one command; returns (exit_code, report dict)."""
    body = _BODIES[cfg.command](cfg)
    body["config"] = cfg.to_json_dict()
    digest = hashlib.sha256(_canonical_json(body).encode()).hexdigest()
    report = {
        "meta": {
            "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "content_hash": digest,
        },
        "body": body,
    }
    return EXIT_OK, report


def _emit(cfg: RunConfig, report: dict) -> None:
    if cfg.output == "json":
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    elif cfg.output == "csv":
        buf = io.StringIO()
        _render_csv(report["body"], buf)
        text = buf.getvalue()
    else:
        buf = io.StringIO()
        _render_table(report["body"], 0, buf)
        buf.write(f"content_hash: {report['meta']['content_hash']}\n")
        text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _apply_overrides(doc: dict, overrides) -> dict:
    for token in overrides:
        if not token.startswith("--") or "=" not in token:
            raise UsageError(f"cannot parse override {token!r}; expected "
                             "--path.to.field=value")
        path, _, raw = token[2:].partition("=")
        keys = path.split(".")
        target = doc
        for key in keys[:-1]:
            target = target.setdefault(key, {})
            if not isinstance(target, dict):
                raise UsageError(f"override path {path!r} crosses a scalar")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        target[keys[-1]] = value
    return doc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmig",
        description="Information geometry of random matrix ensembles.",
        epilog=("CSV output flattens the report body to 'field,value' rows; "
                "table output prints 6 significant digits. Any config scalar "
                "can be overridden with --path.to.field=value."),
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS,
                        help="overrides the config file's command")
    parser.add_argument("--config", help="path to a JSON run config")
    parser.add_argument("--seed", type=int, help="sampler seed (u64)")
    parser.add_argument("--method", choices=("exact", "mcmc", "both"))
    parser.add_argument("--output", choices=("table", "json", "csv"))
    parser.add_argument("--out", help="write the report to this path")
    parser.add_argument("--workers", type=int, default=1,
                        help="thread count for independent chains")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    args, leftover = parser.parse_known_args(argv)
    try:
        doc = {}
        if args.config:
            try:
                with open(args.config) as fh:
                    doc = json.load(fh)
            except OSError as exc:
                print(f"error: cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
            except json.JSONDecodeError as exc:
                raise UsageError(f"config is not valid JSON: {exc}") from exc
        if args.command:
            doc["command"] = args.command
        if args.method:
            doc["method"] = args.method
        if args.output:
            doc["output"] = args.output
        if args.out:
            doc["out"] = args.out
        if args.seed is not None:
            doc.setdefault("sampler", {})["seed"] = args.seed
        _apply_overrides(doc, leftover)
        cfg = validate_config(doc)
        cfg.workers = max(1, args.workers)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        code, report = run(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ParameterDomainError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        _emit(cfg, report)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
