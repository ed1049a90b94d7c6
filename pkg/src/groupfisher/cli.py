"""Command-line entry point.

    groupfisher --config run.yaml --out results/ [--seed N] [--quiet]

Writes ``summary.json``, CSV tables and ``SCHEMA.md`` to the output
directory.  Exit status is 0 on success, 2 when a result fails its own
check (divergent or infinite information, score moments off, too many
zero-density samples) and 1 on errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import closed, lan, minimize, variational
from .config import ConfigError, RunConfig, load
from .distributions import DistributionError, make_distribution
from .models import location_scale_params, make_model

log = logging.getLogger("groupfisher")

THREADS_ENV = "GROUPFISHER_THREADS"

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2

# file name -> [(column, description)]
TABLES = {
    "scores.csv": [("x1..xk", "evaluation point"), ("score1..scorep", "score vector at the point")],
    "matrix.csv": [("i", "row index (0-based)"), ("j", "column index (0-based)"), ("value", "information matrix entry"),
                   ("error", "quadrature error estimate of the entry (empty for variational)")],
    "profile.csv": [("degree", "basis degree"), ("value", "finite-basis supremum in the requested direction")],
    "weights.csv": [("index", "candidate index (0 is the base when included)"), ("weight", "mixing weight"),
                    ("candidate", "candidate description as JSON")],
    "trace.csv": [("iteration", "optimizer iteration"), ("value", "objective value"),
                  ("gap", "Frank-Wolfe duality gap")],
    "lan_remainders.csv": [("n", "sample size"), ("replication", "replication index"),
                           ("remainder", "log-likelihood ratio minus its quadratic expansion")],
    "lan_summary.csv": [("n", "sample size"), ("mean", "mean remainder"), ("variance", "remainder variance"),
                        ("median_abs", "median absolute remainder"), ("excluded", "zero-density samples dropped")],
    "moments.csv": [("i", "row index"), ("j", "column index"), ("covariance", "Monte Carlo score covariance"),
                    ("se", "standard error of the covariance entry"), ("information", "closed-form information")],
}


def fmt(x) -> str:
    """Floats with 17 significant digits, everything else via ``str``."""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def schema_markdown() -> str:
    lines = ["# Output tables", "", "Floating point values carry 17 significant digits.", ""]
    for name, cols in TABLES.items():
        lines += [f"## {name}", "", "| column | meaning |", "|---|---|"]
        lines += [f"| {c} | {d} |" for c, d in cols]
        lines.append("")
    lines += ["## summary.json", "",
              "`config` echoes the effective configuration, `result` holds values and diagnostics, "
              "`status` is `ok` or the reason for a non-zero exit.", ""]
    return "\n".join(lines)


class Failed(Exception):
    """A computation finished but its result fails a check (exit status 2)."""


def _theta(cfg: RunConfig, model):
    if cfg.theta is None:
        return model.identity_parameter()
    if isinstance(cfg.theta, dict):
        extra = set(cfg.theta) - {"location", "scale"}
        if extra:
            raise ConfigError(f"unknown key {'theta.' + sorted(extra)[0]!r}")
        if model.tag == "scaleK":
            return location_scale_params([], cfg.theta["scale"])
        return location_scale_params(cfg.theta.get("location", [0.0] * model.k), cfg.theta["scale"])
    return np.atleast_1d(np.asarray(cfg.theta, dtype=float))


def _direction(cfg, model):
    if cfg.direction is None:
        if model.p != 1:
            raise ConfigError("'direction' is required when the parameter has more than one coordinate")
        return np.ones(1)
    a = np.asarray(cfg.direction, dtype=float)
    return a / np.linalg.norm(a)


def _build(cfg: RunConfig):
    m = cfg.model
    model = make_model(m["tag"], m.get("k"), m.get("sigma1", 1.0), m.get("sigma2", 1.0))
    dist = make_distribution(cfg.dist)
    if dist.k != model.k:
        raise ConfigError(f"distribution dimension {dist.k} differs from model dimension {model.k}")
    return model, dist, model.check(_theta(cfg, model))


def _neighborhood(cfg, dist):
    section = cfg.neighborhood
    if "eps" not in section:
        raise ConfigError("missing required key 'neighborhood.eps'")
    cands = []
    if section.get("atoms") is not None:
        a = section["atoms"]
        cands += minimize.atom_grid(a.get("lo", -10.0), a.get("hi", 10.0), int(a.get("n", 401)))
    if section.get("tails") is not None:
        t = section["tails"]
        cands += minimize.exp_tail_templates(t.get("starts"), t.get("rates"))
    return minimize.ContaminationNeighborhood(dist, float(section["eps"]), cands, bool(section.get("include_base", True)))


def run(cfg: RunConfig, out: Path, threads: int = 1) -> tuple[int, dict]:
    """Execute one configuration; returns ``(exit status, summary)``."""
    out.mkdir(parents=True, exist_ok=True)
    model, dist, theta = _build(cfg)
    tol = cfg.tolerances
    res = cfg.quadrature.get("resolution")
    written = []
    status = "ok"

    def table(name, header, rows):
        write_csv(out / name, header, rows)
        written.append(name)

    cmd = cfg.command
    log.info("running %s for %s", cmd, model.tag)
    if cmd == "score":
        if cfg.points is None:
            raise ConfigError("missing required key 'points'")
        pts = np.asarray(cfg.points, dtype=float).reshape(-1, model.k)
        vals = closed.score(model, theta, dist)(pts)
        table("scores.csv", [f"x{i + 1}" for i in range(model.k)] + [f"score{i + 1}" for i in range(model.p)],
              np.hstack([pts, vals]).tolist())
        result = {"points": pts.tolist(), "scores": vals.tolist()}
    elif cmd in ("fisher", "fisher-var"):
        if cmd == "fisher":
            est = closed.fisher_matrix(model, theta, dist, resolution=res or 1.0)
        else:
            est = variational.variational_matrix(model, theta, dist, cfg.degree, res)
        p = model.p
        err = est.error if est.error is not None else np.full((p, p), np.nan)
        table("matrix.csv", ["i", "j", "value", "error"],
              [(i, j, est.matrix[i, j], "" if np.isnan(err[i, j]) else err[i, j]) for i in range(p) for j in range(p)])
        result = est.to_dict()
        if not est.finite:
            status = est.status
    elif cmd == "converge":
        a = _direction(cfg, model)
        degrees = cfg.degrees or list(range(1, cfg.degree + 1))
        ref = closed.fisher_matrix(model, theta, dist)
        reference = ref.directional(a) if ref.finite else None
        prof = variational.convergence_profile(model, theta, dist, a, degrees, res, reference,
                                               cfg.quadrature.get("method", "gram"))
        table("profile.csv", ["degree", "value"], prof.rows())
        result = {"degrees": list(prof.degrees), "values": list(prof.values), "status": prof.status,
                  "reference": reference, "gap": prof.gap, "quadrature_error": prof.quadrature_error}
        if prof.status != "finite":
            status = prof.status
    elif cmd == "minimize":
        nb = _neighborhood(cfg, dist)
        opts = {"tol": float(tol.get("gap", minimize.GAP_TOL)),
                "max_iter": int(tol.get("max_iter", minimize.MAX_ITER))}
        try:
            if cfg.neighborhood.get("objective", "directional") == "trace_inverse":
                floor = float(tol.get("floor", minimize.POSITIVITY_FLOOR))
                r = minimize.minimize_trace_inverse(model, theta, nb, cfg.degree, floor=floor, **opts)
            else:
                r = minimize.minimize_directional(model, theta, nb, _direction(cfg, model), cfg.degree, **opts)
        except minimize.NonConvergence as exc:
            table("trace.csv", ["iteration", "value", "gap"], exc.trace)
            raise
        table("trace.csv", ["iteration", "value", "gap"], r.trace)
        labels = [json.dumps(c.describe(), sort_keys=True) for c in nb.members]
        table("weights.csv", ["index", "weight", "candidate"],
              [(i, w, lab) for i, (w, lab) in enumerate(zip(r.weights, labels)) if w > 0])
        result = r.to_dict()
    elif cmd == "lan":
        section = cfg.lan
        h = section.get("h", [1.0] * model.p)
        try:
            rep = lan.lan_experiment(model, theta, dist, h, section.get("n_list", [100, 1000, 10000]),
                                     int(section.get("replications", 200)), cfg.seed, workers=threads)
        except lan.ExcessiveExclusions as exc:
            rep, status = exc.report, "excessive_exclusions"
        table("lan_remainders.csv", ["n", "replication", "remainder"], rep.rows())
        table("lan_summary.csv", ["n", "mean", "variance", "median_abs", "excluded"],
              [(s["n"], s["mean"], s["variance"], s["median_abs"], s["excluded"])
               for s in map(rep.summary, rep.n_list)])
        result = rep.to_dict()
    elif cmd == "moments":
        mo = lan.score_moments(model, theta, dist, int(cfg.moments.get("N", 1_000_000)), cfg.seed)
        p = model.p
        table("moments.csv", ["i", "j", "covariance", "se", "information"],
              [(i, j, mo.cov[i, j], mo.cov_se[i, j], mo.information[i, j]) for i in range(p) for j in range(p)])
        result = mo.to_dict()
        if not mo.passed:
            status = "moments_mismatch"
    else:  # pragma: no cover - RunConfig validates the command
        raise ConfigError(f"unknown command {cmd!r}")

    (out / "SCHEMA.md").write_text(schema_markdown(), encoding="utf-8")
    code = EXIT_OK if status == "ok" else EXIT_FAILED
    summary = {"version": cfg.version, "command": cmd, "config": cfg.to_dict(), "status": status,
               "exit_code": code, "threads": threads, "outputs": written, "result": _jsonable(result)}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return code, summary


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="groupfisher", description="Fisher information in group models.")
    ap.add_argument("--config", required=True, metavar="PATH", help="YAML or JSON run configuration")
    ap.add_argument("--out", metavar="DIR", help="output directory (default: output.dir or ./groupfisher-out)")
    ap.add_argument("--seed", type=int, help="override the configured seed")
    ap.add_argument("--quiet", action="store_true", help="only report warnings and errors")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        out = Path(args.out or cfg.output.get("dir", "groupfisher-out"))
        code, summary = run(cfg, out, default_threads())
    except (ConfigError, DistributionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # module errors, reported with context
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if not args.quiet:
        print(json.dumps({"status": summary["status"], "outputs": summary["outputs"]}))
    return code


if __name__ == "__main__":
    sys.exit(main())
