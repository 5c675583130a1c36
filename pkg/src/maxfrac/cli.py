"""Batch front end.

    maxfrac --config system.json --command attractor --out runs/cantor

Exit status: 0 success, 1 configuration error, 2 verification failure,
3 non-convergence (including hitting an atom or point cap). Every failure
leaves ``diagnostic.json`` in the output directory and echoes it on stderr.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .errors import CapExceededError, ConvergenceError
from .functions import Coordinate, from_json as function_from_json
from .ifs import IfsSystem, attractor, verify_phi_max
from .measure import (DiscreteMeasure, PrunePolicy, contraction_profile, dual_iterate,
                      invariant_measure)
from .metric import PointCloud
from .render import ImageConfig, write_pgm
from .transport import wasserstein1, wasserstein1_1d

COMMANDS = ("attractor", "measure", "verify", "dual", "profile", "distance")

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_NONCONVERGED = 0, 1, 2, 3


class ConfigError(Exception):
    pass


class VerificationFailed(Exception):
    def __init__(self, message, payload):
        super().__init__(message)
        self.payload = payload


@dataclass
class RunConfig:
    command: str
    out: Path
    system: IfsSystem | None = None
    tol: float = 1e-4
    max_iter: int = 200
    n: int | None = None
    eps: float = 1.0
    seed: int = 0
    n_pairs: int = 1000
    prune: PrunePolicy | None = field(default_factory=PrunePolicy)
    raw: dict = field(default_factory=dict)
    image: ImageConfig = field(default_factory=ImageConfig)

    @classmethod
    def build(cls, data: dict, args) -> "RunConfig":
        system_spec = data if "maps" in data else data.get("system")
        command = args.command or data.get("command")
        if command not in COMMANDS:
            raise ConfigError(f"command must be one of {', '.join(COMMANDS)}; got {command!r}")
        try:
            system = IfsSystem.from_json(system_spec) if system_spec else None
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid system spec: {exc}") from exc
        if system is None and command != "distance":
            raise ConfigError(f"command {command!r} needs a system spec")
        prune = None
        if not args.no_prune and data.get("prune", {}) is not None:
            spec = data.get("prune", {})
            prune = PrunePolicy(float(spec.get("w_min", 1e-14)), float(spec.get("budget", 1e-8)))
        cfg = cls(
            command=command, out=Path(args.out or data.get("out", ".")), system=system,
            tol=float(args.tol if args.tol is not None else data.get("tol", 1e-4)),
            max_iter=int(data.get("max_iter", 200)),
            n=args.n if args.n is not None else data.get("n"),
            eps=float(data.get("eps", 1.0)),
            seed=int(args.seed if args.seed is not None else data.get("seed", 0)),
            n_pairs=int(data.get("n_pairs", 1000)),
            prune=prune, raw=data, image=ImageConfig.from_json(data.get("render")),
        )
        if cfg.tol <= 0 or cfg.max_iter < 1 or cfg.n_pairs < 1 or cfg.eps <= 0:
            raise ConfigError("tol, eps, max_iter and n_pairs must be positive")
        if cfg.n is not None and int(cfg.n) < 0:
            raise ConfigError("n must be >= 0")
        return cfg


def _domain(cfg: RunConfig) -> PointCloud:
    """Explicit ``domain`` from the config, else an attractor approximation."""
    if "domain" in cfg.raw:
        return io.cloud_from_json(cfg.raw["domain"], cfg.system.dim)
    seed = PointCloud(np.zeros((1, cfg.system.dim)))
    return attractor(cfg.system, seed, float(cfg.raw.get("domain_tol", 1e-3)), cfg.max_iter).cloud


def _render(cfg: RunConfig, path: Path, obj):
    dim = obj.dim if hasattr(obj, "dim") else obj.points.shape[1]
    if dim <= 2:
        write_pgm(path, obj, cfg.image)


def cmd_attractor(cfg: RunConfig) -> dict:
    seed = io.cloud_from_json(cfg.raw.get("seed_cloud", [[0.0] * cfg.system.dim]), cfg.system.dim)
    try:
        res = attractor(cfg.system, seed, cfg.tol, cfg.max_iter)
    except ConvergenceError as exc:
        io.write_trace_csv(cfg.out / "hausdorff_trace.csv", exc.result.trace, "hausdorff")
        io.write_cloud_csv(cfg.out / "attractor.csv", exc.result.cloud)
        raise
    io.write_cloud_csv(cfg.out / "attractor.csv", res.cloud)
    io.write_trace_csv(cfg.out / "hausdorff_trace.csv", res.trace, "hausdorff")
    _render(cfg, cfg.out / "attractor.pgm", res.cloud)
    return {"points": len(res.cloud), "steps": len(res.trace), "last_step": res.trace[-1],
            "ratio": res.ratio, "error_bound": res.error_bound}


def cmd_measure(cfg: RunConfig) -> dict:
    dim = cfg.system.dim
    nu0 = io.measure_from_json(cfg.raw["nu0"]) if "nu0" in cfg.raw else \
        DiscreteMeasure.dirac(np.zeros(dim))
    try:
        res = invariant_measure(cfg.system, nu0, cfg.tol, cfg.max_iter, cfg.prune)
    except ConvergenceError as exc:
        io.write_trace_csv(cfg.out / "w1_trace.csv", exc.result.trace, "w1")
        raise
    mu = res.measure
    io.write_measure_csv(cfg.out / "atoms.csv", mu)
    io.write_trace_csv(cfg.out / "w1_trace.csv", res.trace, "w1")
    moments = mu.moments()
    moments.update(steps=len(res.trace), pruned_mass=res.diagnostics.pruned_mass)
    io.write_json(cfg.out / "moments.json", moments)
    _render(cfg, cfg.out / "measure.pgm", mu)
    return moments


def cmd_verify(cfg: RunConfig) -> dict:
    report = verify_phi_max(cfg.system, _domain(cfg), cfg.n_pairs, cfg.seed,
                            float(cfg.raw.get("verify_tol", 0.0)))
    payload = report.to_json()
    io.write_json(cfg.out / "verify.json", payload)
    if not report.passed:
        raise VerificationFailed("max-contraction condition fails on a sampled pair", payload)
    return payload


def cmd_dual(cfg: RunConfig) -> dict:
    g = function_from_json(cfg.raw["g"]) if "g" in cfg.raw else Coordinate(0)
    cloud = _domain(cfg)
    n_max = 12 if cfg.n is None else int(cfg.n)
    rows = []
    for n in range(n_max + 1):
        vals = dual_iterate(cfg.system, g, n, cloud.points)
        hi, lo = float(vals.max()), float(vals.min())
        rows.append((n, hi, lo, hi - lo, 0.5 * (hi + lo)))
    io.write_csv(cfg.out / "dual.csv", ["n", "sup", "inf", "spread", "c_hat"], rows)
    return {"n": n_max, "spread": rows[-1][3], "c_hat": rows[-1][4], "cloud_points": len(cloud)}


def cmd_profile(cfg: RunConfig) -> dict:
    n_max = 10 if cfg.n is None else int(cfg.n)
    prof = contraction_profile(cfg.system, _domain(cfg), cfg.eps, n_max, cfg.n_pairs, cfg.seed)
    io.write_csv(cfg.out / "profile.csv",
                 ["n", "a_hat", "recursion_ok", "claim_envelope", "claim_ok"],
                 ((n, a, int(ok43), env, int(okc)) for n, a, ok43, env, okc in prof.rows()))
    payload = {"eps": cfg.eps, "n_max": n_max, "n_pairs": prof.n_pairs,
               "recursion_violations": prof.recursion_violations,
               "claim_violations": prof.claim_violations}
    io.write_json(cfg.out / "profile.json", payload)
    if prof.recursion_violations or prof.claim_violations:
        raise VerificationFailed("pointwise recursion inequality violated", payload)
    return payload


def cmd_distance(cfg: RunConfig) -> dict:
    try:
        mu = io.measure_from_json(cfg.raw["mu"])
        nu = io.measure_from_json(cfg.raw["nu"])
    except KeyError as exc:
        raise ConfigError(f"distance needs 'mu' and 'nu' measures; missing {exc}") from exc
    res = wasserstein1(mu, nu)
    io.write_plan_csv(cfg.out / "plan.csv", res.plan)
    io.write_potentials_csv(cfg.out / "potentials_mu.csv", res.potential_source)
    io.write_potentials_csv(cfg.out / "potentials_nu.csv", res.potential_target)
    payload = {"w1": res.cost, "dual_objective": res.dual_objective, "gap": res.gap}
    if mu.dim == 1:
        payload["w1_cdf"] = wasserstein1_1d(mu, nu)
    io.write_json(cfg.out / "distance.json", payload)
    return payload


HANDLERS = {"attractor": cmd_attractor, "measure": cmd_measure, "verify": cmd_verify,
            "dual": cmd_dual, "profile": cmd_profile, "distance": cmd_distance}


def run(cfg: RunConfig) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    try:
        summary = HANDLERS[cfg.command](cfg)
    except VerificationFailed as exc:
        return _fail(cfg.out, EXIT_VERIFY, "verification_failed", str(exc), exc.payload)
    except ConvergenceError as exc:
        trace = getattr(exc.result, "trace", [])
        return _fail(cfg.out, EXIT_NONCONVERGED, "not_converged", str(exc), {"trace": trace})
    except CapExceededError as exc:
        return _fail(cfg.out, EXIT_NONCONVERGED, "cap_exceeded", str(exc), {})
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        return _fail(cfg.out, EXIT_CONFIG, "config_error", str(exc), {})
    io.write_json(cfg.out / "summary.json", {"command": cfg.command, "status": "ok", **summary})
    return EXIT_OK


def _fail(out: Path | None, code: int, kind: str, message: str, detail: dict) -> int:
    diag = {"status": kind, "exit_code": code, "message": message, "detail": detail}
    text = io.dumps(diag)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "diagnostic.json").write_text(text + "\n")
        except OSError:
            pass
    print(text, file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maxfrac", description=__doc__.split("\n\n")[0])
    ap.add_argument("--config", required=True, help="JSON system spec or run config")
    ap.add_argument("--command", choices=COMMANDS, help="overrides the config's command")
    ap.add_argument("--out", help="output directory (default: config 'out' or .)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--tol", type=float)
    ap.add_argument("--n", type=int, help="iteration depth for dual/profile")
    ap.add_argument("--no-prune", action="store_true", help="disable atom pruning")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out) if args.out else None
    try:
        data = io.read_json(args.config)
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        cfg = RunConfig.build(data, args)
    except (OSError, ValueError, ConfigError) as exc:
        return _fail(out, EXIT_CONFIG, "config_error", str(exc), {})
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
