"""Command-line front end: JSON configs in, deterministic CSV/JSON out.

Subcommands: phase-diagram, simulate, speed, verify, criteria.  All outputs
are byte-reproducible given (config, seed, workers): the worker count only
participates in random-stream derivation (replicates are sharded round-robin
and executed sequentially), and JSON is emitted with sorted keys.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .branching import OffspringDistribution
from .conductance import BetaPopulation, sample_beta_population
from .criteria import classify_speed
from .exceptions import InsufficientDataError, VertexCapError
from .reversal import run_verification_suite
from .specfun import ParamSet
from .speed import evaluate_speed
from .walk import (
    detect_epochs,
    simulate_errw_lazy,
    simulate_rwde_lazy,
    speed_direct,
    speed_regen,
)

__all__ = ["main"]


class ConfigError(ValueError):
    """Schema violation, reported with the dotted path of the offending field."""


def _get(cfg: dict, path: str, typ, *, required: bool = True, default=None):
    node = cfg
    parts = path.split(".")
    for i, part in enumerate(parts):
        if not isinstance(node, dict) or part not in node:
            if required:
                raise ConfigError(f"missing config field: {'.'.join(parts[: i + 1])}")
            return default
        node = node[part]
    if typ is float and isinstance(node, int):
        node = float(node)
    if not isinstance(node, typ):
        raise ConfigError(f"config field {path}: expected {typ.__name__}, got {type(node).__name__}")
    return node


def _positive(cfg: dict, path: str, typ):
    val = _get(cfg, path, typ)
    if val <= 0:
        raise ConfigError(f"config field {path}: must be positive, got {val}")
    return val


def _params(cfg: dict) -> ParamSet:
    return ParamSet(_positive(cfg, "params.alpha_p", float), _positive(cfg, "params.alpha_c", float))


def _offspring(cfg: dict) -> OffspringDistribution:
    raw = _get(cfg, "offspring", dict)
    try:
        return OffspringDistribution.from_dict(raw)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"config field offspring: {exc}") from exc


def _axis(cfg: dict, path: str):
    lo = _positive(cfg, f"{path}.min", float)
    hi = _positive(cfg, f"{path}.max", float)
    n = _positive(cfg, f"{path}.n", int)
    if hi < lo:
        raise ConfigError(f"config field {path}: max {hi} < min {lo}")
    return np.linspace(lo, hi, n)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _round(x, nd=12):
    return None if x is None else round(float(x), nd)


def cmd_phase_diagram(cfg: dict, seed: int, workers: int, out: str | None) -> int:
    dist = _offspring(cfg)
    ap_axis = _axis(cfg, "grid.alpha_p")
    ac_axis = _axis(cfg, "grid.alpha_c")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["alpha_p", "alpha_c", "transient", "positive_speed", "r", "phi0", "criterion_value"])
    for ac in ac_axis:
        for ap in ap_axis:
            rep = classify_speed(ParamSet(float(ap), float(ac)), dist)
            writer.writerow([
                f"{ap:.12g}",
                f"{ac:.12g}",
                int(rep.transient),
                int(rep.positive_speed),
                "" if rep.r is None else f"{rep.r:.12g}",
                "" if rep.phi0 is None else f"{rep.phi0:.12g}",
                f"{rep.criterion_value:.12g}",
            ])
    _emit(buf.getvalue(), out)
    return 0


def cmd_simulate(cfg: dict, seed: int, workers: int, out: str | None) -> int:
    p = _params(cfg)
    dist = _offspring(cfg)
    n_steps = _positive(cfg, "n_steps", int)
    replicates = _positive(cfg, "replicates", int)
    walk_kind = _get(cfg, "walk", str, required=False, default="rwde")
    if walk_kind not in ("rwde", "errw"):
        raise ConfigError(f"config field walk: expected 'rwde' or 'errw', got {walk_kind!r}")
    simulate = simulate_rwde_lazy if walk_kind == "rwde" else simulate_errw_lazy

    directs, regens = [], []
    n_discarded = n_insufficient = n_overflow = 0
    regen_counts = []
    for rep in range(replicates):
        worker = rep % workers
        rng = np.random.default_rng(np.random.SeedSequence([seed, worker, rep]))
        try:
            traj = simulate(dist, p, n_steps, rng)
        except VertexCapError:
            n_overflow += 1
            continue
        if traj.known_extinct:
            n_discarded += 1  # finite tree: conditioned-on-survival laws exclude it
            continue
        directs.append(speed_direct(traj))
        _, regen, _ = detect_epochs(traj)
        regen_counts.append(len(regen))
        try:
            regens.append(speed_regen(traj))
        except InsufficientDataError:
            n_insufficient += 1

    def summary(vals):
        if not vals:
            return {"mean": None, "se": None, "n": 0}
        arr = np.asarray(vals)
        se = arr.std(ddof=1) / np.sqrt(len(arr)) if len(arr) > 1 else None
        return {"mean": _round(arr.mean()), "se": _round(se) if se is not None else None, "n": len(arr)}

    result = {
        "walk": walk_kind,
        "n_steps": n_steps,
        "replicates": replicates,
        "speed_direct": summary(directs),
        "speed_regen": summary(regens),
        "regenerations_per_run": summary(regen_counts),
        "discard_rate": _round(n_discarded / replicates),
        "insufficient_regen_rate": _round(n_insufficient / replicates),
        "vertex_cap_overflows": n_overflow,
        "boundary_hit_rate": 0.0,  # lazy trees have no truncation frontier
    }
    _emit(_json_text(result), out)
    return 0


def _load_or_build_pool(cfg: dict, p: ParamSet, dist: OffspringDistribution, seed: int) -> BetaPopulation:
    pool_file = _get(cfg, "pool.file", str, required=False)
    if pool_file:
        pop = BetaPopulation.load(pool_file)
        if pop.params != p or pop.dist.probs != dist.probs:
            raise ConfigError(
                "config field pool.file: pool metadata "
                f"(alpha_p={pop.params.alpha_p}, alpha_c={pop.params.alpha_c}) "
                "does not match the requested parameters"
            )
        return pop
    pool_size = _positive(cfg, "pool.size", int)
    iterations = _positive(cfg, "pool.iterations", int)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    return sample_beta_population(p, dist, pool_size, iterations, rng)


def cmd_speed(cfg: dict, seed: int, workers: int, out: str | None) -> int:
    p = _params(cfg)
    dist = _offspring(cfg)
    n_mc = _positive(cfg, "n_mc", int)
    pop = _load_or_build_pool(cfg, p, dist, seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    est = evaluate_speed(p, dist, pop, n_mc, rng)
    rep = classify_speed(p, dist)
    result = {
        "speed": _round(est.speed),
        "se": _round(est.se),
        "n_mc": est.n_mc,
        "saturated_fraction": _round(est.saturated_fraction),
        "flagged": est.flagged,
        "regime": {k: (_round(v) if isinstance(v, float) else v) for k, v in rep.to_dict().items()},
    }
    _emit(_json_text(result), out)
    return 0


def cmd_verify(cfg: dict, seed: int, workers: int, out: str | None) -> int:
    report = run_verification_suite(seed)
    _emit(_json_text(report), out)
    return 0 if report["all_pass"] else 1


def cmd_criteria(cfg: dict, seed: int, workers: int, out: str | None) -> int:
    rep = classify_speed(_params(cfg), _offspring(cfg))
    result = {k: (_round(v) if isinstance(v, float) else v) for k, v in rep.to_dict().items()}
    _emit(_json_text(result), out)
    return 0


_COMMANDS = {
    "phase-diagram": cmd_phase_diagram,
    "simulate": cmd_simulate,
    "speed": cmd_speed,
    "verify": cmd_verify,
    "criteria": cmd_criteria,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="errw",
        description="Reinforced / Dirichlet-environment random walks on Galton-Watson trees",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
    args = parser.parse_args(argv)

    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except OSError as exc:
            print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
            return 2
        except json.JSONDecodeError as exc:
            print(f"error: config {args.config} is not valid JSON: {exc}", file=sys.stderr)
            return 2
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](cfg, args.seed, args.workers, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
