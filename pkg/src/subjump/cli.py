"""Command-line front end.

``subjump <command> --config cfg.json --out DIR`` writes CSV tables and a
``<command>.json`` summary into ``DIR``.  Exit codes: 0 pass, 1 error or
failed verification, 2 refusal because the criterion integral diverges.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import jsonschema
import numpy as np

from .effective_scale import EffectiveScale, certify_effective_bounds, verify_corollary_inequalities
from .errors import CriterionDivergent
from .heat_kernel import HeatKernelModel, phi_sup
from .mc_lab import build_graph, exit_time_diffusion, exit_time_subordinated, fit_exponent, jump_tail_stats
from .scale_fn import ScaleFunction, empirical_scale_bounds
from .subordination import (
    ComparabilityReport,
    SamplerConfig,
    SubordinatorSampler,
    build_levy_measure,
    criterion_equivalent,
    criterion_integral,
    exponent_rule,
    is_divergent,
    laplace_exponent,
    sufficient_condition,
    truncated_laplace_exponent,
    verify_jump_comparability,
)

EXIT_OK, EXIT_FAIL, EXIT_REFUSED = 0, 1, 2

_POS = {"type": "number", "exclusiveMinimum": 0}
_GRID = {"type": "array", "minItems": 1, "items": _POS}
_SCALE = {
    "type": "object",
    "required": ["c0", "segments"],
    "additionalProperties": False,
    "properties": {
        "c0": _POS,
        "segments": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["r_max", "beta"],
                "additionalProperties": False,
                "properties": {"r_max": {"anyOf": [_POS, {"const": "inf"}]}, "beta": _POS},
            },
        },
    },
}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "psi_c": _SCALE,
        "psi_j": _SCALE,
        "model": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["gaussian", "subgaussian"]},
                "n": {"type": "integer", "minimum": 1},
                "psi_c": _SCALE,
                "alpha_v": _POS,
                "c_V": _POS,
                "C1": _POS,
                "c1": _POS,
                "c2": _POS,
                "c3": _POS,
                "delta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
        },
        "grids": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: _GRID for k in ("d_grid", "r_grid", "lambda_grid", "R_grid", "t_grid")},
        },
        "sampler": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilon": _POS,
                "horizon": _POS,
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "samples": {"type": "integer", "minimum": 0},
            },
        },
        "simulate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["diffusion", "subordinated"]},
                "graph": {
                    "type": "object",
                    "required": ["kind"],
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"enum": ["lattice", "sierpinski"]},
                        "n": {"type": "integer", "minimum": 1, "maximum": 3},
                        "level": {"type": "integer", "minimum": 0, "maximum": 9},
                    },
                },
                "radii": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
                "paths": {"type": "integer", "minimum": 2},
                "tail_samples": {"type": "integer", "minimum": 0},
                "tail_d_grid": _GRID,
            },
        },
        "out": {"type": "string"},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"C_max": _POS, "slope_tol": _POS, "max_drift": _POS},
        },
    },
}

DEFAULT_GRIDS = {
    "d_grid": np.logspace(-2, 2, 17).tolist(),
    "r_grid": np.logspace(-3, 3, 25).tolist(),
    "lambda_grid": np.logspace(-3, 3, 7).tolist(),
    "R_grid": np.logspace(-2, 2, 9).tolist(),
    "t_grid": np.logspace(-2, 2, 9).tolist(),
}


class ConfigError(ValueError):
    pass


def _path(parts) -> str:
    return "config" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in parts)


def validate_config(cfg: dict) -> None:
    """Schema check plus the constraints JSON Schema cannot express.

    Raises :class:`ConfigError` naming the offending field path.
    """
    errors = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"{_path(e.absolute_path)}: {e.message}")
    for key, grid in cfg.get("grids", {}).items():
        _increasing(grid, ("grids", key))
    sim = cfg.get("simulate", {})
    if "radii" in sim:
        _increasing(sim["radii"], ("simulate", "radii"))
    if "tail_d_grid" in sim:
        _increasing(sim["tail_d_grid"], ("simulate", "tail_d_grid"))
    for key in ("psi_c", "psi_j"):
        if key in cfg:
            _scale(cfg[key], (key,))
    if "model" in cfg and "psi_c" in cfg["model"]:
        _scale(cfg["model"]["psi_c"], ("model", "psi_c"))


def _increasing(values, where) -> None:
    for i in range(1, len(values)):
        if not values[i] > values[i - 1]:
            raise ConfigError(f"{_path((*where, i))}: grid must be strictly increasing")


def _scale(obj, where) -> ScaleFunction:
    try:
        return ScaleFunction.from_json(obj)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{_path(where)}: {exc}") from None


@dataclass
class Context:
    config: dict
    out: Path
    seed: Optional[int]
    max_C: Optional[float]
    workers: int = 1

    def scale(self, key: str) -> ScaleFunction:
        if key not in self.config:
            raise ConfigError(f"{_path((key,))}: required for this command")
        return ScaleFunction.from_json(self.config[key])

    def grid(self, key: str) -> list:
        return list(self.config.get("grids", {}).get(key, DEFAULT_GRIDS[key]))

    def tol(self, key: str, default: float) -> float:
        if key == "C_max" and self.max_C is not None:
            return self.max_C
        return float(self.config.get("tolerances", {}).get(key, default))

    def sampler(self) -> dict:
        return self.config.get("sampler", {})

    def require_seed(self) -> int:
        seed = self.seed if self.seed is not None else self.sampler().get("seed")
        if seed is None:
            raise ConfigError("config.sampler.seed: required for stochastic commands (or pass --seed)")
        return int(seed)

    def model(self) -> HeatKernelModel:
        if "model" not in self.config:
            raise ConfigError("config.model: required for this command")
        obj = dict(self.config["model"])
        psi_c = self.scale("psi_c")
        if obj["kind"] == "subgaussian":
            obj.setdefault("psi_c", self.config["psi_c"])
            if "alpha_v" not in obj:
                raise ConfigError("config.model.alpha_v: required for a subgaussian model")
        elif "n" not in obj:
            raise ConfigError("config.model.n: required for a gaussian model")
        try:
            model = HeatKernelModel.from_json(obj)
        except ValueError as exc:
            raise ConfigError(f"config.model: {exc}") from None
        if model.psi_c != psi_c:
            raise ConfigError("config.model.psi_c: must match config.psi_c")
        return model


@dataclass
class Outcome:
    summary: dict
    tables: dict
    code: int = EXIT_OK


def _num(x):
    """JSON-safe number: infinities and NaN become ``None``."""
    x = float(x)
    return x if math.isfinite(x) else None


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def cmd_criterion(ctx: Context) -> Outcome:
    psi_c, psi_j = ctx.scale("psi_c"), ctx.scale("psi_j")
    crit = criterion_integral(psi_c, psi_j)
    equiv = criterion_equivalent(psi_c, psi_j)
    suff = sufficient_condition(psi_j)
    summary = {
        "crit": _num(crit),
        "equiv": _num(equiv),
        "suff": _num(suff),
        "exponent_rule": "finite" if exponent_rule(psi_c, psi_j) else "divergent",
        "decision": "divergent" if is_divergent(crit) else "finite",
    }
    return Outcome(summary, {})


def cmd_phi(ctx: Context) -> Outcome:
    psi_c = ctx.scale("psi_c")
    R, t = np.meshgrid(ctx.grid("R_grid"), ctx.grid("t_grid"), indexing="ij")
    phi = np.atleast_1d(phi_sup(psi_c, R.ravel(), t.ravel()))
    table = _csv(["R", "t", "Phi"], zip(R.ravel(), t.ravel(), phi))
    return Outcome({"rows": int(phi.size), "infinite_rows": int(np.sum(~np.isfinite(phi)))}, {"phi.csv": table})


def _stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tag,)))


def cmd_subordinator(ctx: Context) -> Outcome:
    nu = build_levy_measure(ctx.scale("psi_c"), ctx.scale("psi_j"))
    nu.require_finite("subordinator")
    s = ctx.sampler()
    cfg = SamplerConfig(epsilon=float(s.get("epsilon", 1e-3)), horizon=float(s.get("horizon", 1.0)))
    lam = ctx.grid("lambda_grid")
    phi = [laplace_exponent(nu, x) for x in lam]
    phi_eps = [truncated_laplace_exponent(nu, x, cfg.epsilon) for x in lam]
    table = _csv(["lambda", "phi", "phi_eps"], zip(lam, phi, phi_eps))
    sampler = SubordinatorSampler(nu, cfg.epsilon)
    summary = {
        "epsilon": cfg.epsilon,
        "horizon": cfg.horizon,
        "tail_mass": sampler.tail_mass,
        "small_jump_drift": sampler.small_drift,
        "levy_mass": _num(nu.levy_mass()),
        "criterion": nu.criterion_value,
    }
    samples = int(s.get("samples", 0))
    if samples:
        seed = ctx.require_seed()
        S = sampler.increments(_stream(seed, 4), cfg.horizon, samples)
        rows, worst = [], 0.0
        for x, pe in zip(lam, phi_eps):
            e = np.exp(-x * S)
            mean, se = float(e.mean()), float(e.std(ddof=1) / math.sqrt(samples))
            target = math.exp(-cfg.horizon * pe)
            # when every draw underflows the resolution 1/N is the honest error
            z = abs(mean - target) / max(se, 1.0 / samples)
            worst = max(worst, z)
            rows.append((x, mean, se, target, z))
        summary["sample"] = {"samples": samples, "seed": seed, "max_z": _num(worst), "within_3se": bool(worst <= 3)}
        return Outcome(summary, {"subordinator.csv": table, "laplace_mc.csv": _csv(["lambda", "empirical", "stderr", "target", "z"], rows)})
    return Outcome(summary, {"subordinator.csv": table})


def cmd_jumpkernel(ctx: Context) -> Outcome:
    psi_c, psi_j = ctx.scale("psi_c"), ctx.scale("psi_j")
    nu = build_levy_measure(psi_c, psi_j)
    nu.require_finite("jump kernel")
    model = ctx.model()
    rep = verify_jump_comparability(
        model, nu, psi_j, model.volume, ctx.grid("d_grid"),
        C_max=ctx.tol("C_max", 1e3), slope_tol=ctx.tol("slope_tol", 0.05),
    )
    return Outcome(rep.summary(nu.criterion_value), {"jumpkernel.csv": rep.to_csv()}, EXIT_OK if rep.passed else EXIT_FAIL)


def cmd_effscale(ctx: Context) -> Outcome:
    psi_c, psi_j = ctx.scale("psi_c"), ctx.scale("psi_j")
    hat = EffectiveScale.build(psi_c, psi_j)
    r = ctx.grid("r_grid")
    check = verify_corollary_inequalities(psi_c, psi_j, r, max_drift=ctx.tol("max_drift", 0.05))
    bounds = certify_effective_bounds(psi_c, psi_j)
    summary = {
        "constants": check.constants,
        "refined": check.refined,
        "drift": check.drift,
        "max_drift": check.max_drift,
        "pass": check.passed,
        "bounds": {"C": bounds.C, "beta_lo": bounds.beta_lo, "beta_hi": bounds.beta_hi},
    }
    return Outcome(summary, {"effscale.csv": hat.table(r)}, EXIT_OK if check.passed else EXIT_FAIL)


def cmd_simulate(ctx: Context) -> Outcome:
    sim = ctx.config.get("simulate", {})
    mode = sim.get("mode", "subordinated" if "psi_j" in ctx.config else "diffusion")
    seed = ctx.require_seed()
    graph = build_graph(sim.get("graph", {"kind": "lattice", "n": 1}))
    paths = int(sim.get("paths", 10_000))
    tables = {}
    if mode == "diffusion":
        radii = sim.get("radii", [4, 8, 16, 32])
        est = exit_time_diffusion(graph, radii=radii, paths_per_radius=paths, seed=seed, workers=ctx.workers)
        summary = {"mode": mode, "exit_times": est.summary()}
    else:
        psi_c, psi_j = ctx.scale("psi_c"), ctx.scale("psi_j")
        nu = build_levy_measure(psi_c, psi_j)
        nu.require_finite("subordinated simulation")
        cfg = SamplerConfig(epsilon=float(ctx.sampler().get("epsilon", 0.5)), seed=seed)
        radii = sim.get("radii", [16, 32, 64, 128])
        est = exit_time_subordinated(graph, nu, cfg, radii=radii, paths=paths, workers=ctx.workers)
        hat = EffectiveScale.build(psi_c, psi_j)
        target = empirical_scale_bounds(hat, np.asarray(radii, dtype=float))
        summary = {
            "mode": mode,
            "exit_times": est.summary(),
            "psi_hat_exponents": [target.beta_lo, target.beta_hi],
        }
        tail_samples = int(sim.get("tail_samples", 0))
        if tail_samples:
            tails = jump_tail_stats(
                graph, nu, cfg, samples=tail_samples,
                d_grid=sim.get("tail_d_grid", [8, 16, 32, 64, 128, 256]), workers=ctx.workers,
            )
            summary["tails"] = tails.summary()
            tables["tails.csv"] = tails.to_csv()
    tables["exit_times.csv"] = est.to_csv()
    return Outcome(summary, tables)


COMMANDS: dict[str, Callable[[Context], Outcome]] = {
    "criterion": cmd_criterion,
    "phi": cmd_phi,
    "subordinator": cmd_subordinator,
    "jumpkernel": cmd_jumpkernel,
    "effscale": cmd_effscale,
    "simulate": cmd_simulate,
}


def _run_one(name: str, ctx: Context) -> Outcome:
    try:
        return COMMANDS[name](ctx)
    except CriterionDivergent as exc:
        return Outcome({"refused": True, "message": str(exc)}, {}, EXIT_REFUSED)


def cmd_report(ctx: Context) -> Outcome:
    sections, tables, codes = {}, {}, []
    for name in COMMANDS:
        if name == "jumpkernel" and "model" not in ctx.config:
            sections[name] = {"skipped": "no model in config"}
            continue
        if name == "simulate" and "simulate" not in ctx.config:
            sections[name] = {"skipped": "no simulate block in config"}
            continue
        res = _run_one(name, ctx)
        sections[name] = {"summary": res.summary, "tables": res.tables}
        tables.update(res.tables)
        codes.append(res.code)
    code = EXIT_FAIL if EXIT_FAIL in codes else (EXIT_REFUSED if EXIT_REFUSED in codes else EXIT_OK)
    return Outcome({"config": ctx.config, "exit_code": code, "sections": sections}, tables, code)


def _recorded(out: Path, name: str) -> dict:
    own = out / f"{name}.json"
    if own.exists():
        return json.loads(own.read_text())
    return json.loads((out / "report.json").read_text())["sections"][name]["summary"]


def cmd_recheck(ctx: Context) -> Outcome:
    """Re-ingest written tables and confirm the recorded pass flags."""
    checks = {}
    jk = ctx.out / "jumpkernel.csv"
    if jk.exists():
        recorded = _recorded(ctx.out, "jumpkernel")
        rep = ComparabilityReport.from_csv(jk.read_text(), recorded["C_max"], recorded["slope_tol"])
        checks["jumpkernel"] = {"recorded": recorded["pass"], "recomputed": rep.passed}
    et = ctx.out / "exit_times.csv"
    if et.exists():
        rows = list(csv.DictReader(io.StringIO(et.read_text())))
        r = [float(x["r"]) for x in rows]
        m = [float(x["mean"]) for x in rows]
        w = [(float(x["mean"]) / float(x["stderr"])) ** 2 if float(x["stderr"]) > 0 else 1e12 for x in rows]
        recorded = _recorded(ctx.out, "simulate")["exit_times"]["exponent"]
        checks["simulate"] = {"recorded": recorded, "recomputed": fit_exponent(r, m, w)[0] if len(r) >= 3 else None}
    ok = bool(checks) and all(c["recorded"] == c["recomputed"] for c in checks.values())
    return Outcome({"checks": checks, "reproduced": ok}, {}, EXIT_OK if ok else EXIT_FAIL)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write(out: Path, name: str, res: Outcome) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for fname, text in res.tables.items():
        (out / fname).write_text(text)
    (out / f"{name}.json").write_text(dump_json(res.summary))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (JSON)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="overrides sampler.seed")
    common.add_argument("--max-C", dest="max_C", type=float, help="comparability threshold")
    common.add_argument("--workers", type=int, default=1, help="threads for Monte Carlo blocks")
    parser = argparse.ArgumentParser(prog="subjump", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "report", "recheck"):
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = {}
        if args.config is not None:
            try:
                config = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        elif args.command != "recheck":
            raise ConfigError("--config is required")
        if not isinstance(config, dict):
            raise ConfigError("config: must be a JSON object")
        validate_config(config)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be a 64-bit unsigned integer")
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        out = args.out or Path(config.get("out", "out"))
        ctx = Context(config, out, args.seed, args.max_C, args.workers)
        if args.command == "report":
            res = cmd_report(ctx)
        elif args.command == "recheck":
            res = cmd_recheck(ctx)
        else:
            res = _run_one(args.command, ctx)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _write(out, args.command, res)
    if res.code == EXIT_REFUSED:
        print(res.summary.get("message", "criterion divergent: construction refused"), file=sys.stderr)
    if args.command == "report":
        print(f"report written to {out / 'report.json'}")
    else:
        print(dump_json(res.summary), end="")
    return res.code


if __name__ == "__main__":
    sys.exit(main())
