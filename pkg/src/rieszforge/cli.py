"""Command line front end: generate, metrics, bench.

Runs are described by an INI file; every section and key is validated
against a closed schema so typos fail loudly instead of silently falling
back to defaults. Exit codes: 0 success, 2 configuration or usage errors,
1 runtime failures.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from configparser import ConfigParser, Error as ConfigParserError
from pathlib import Path

import numpy as np

from . import _kernels
from .geometry import Circle, FlatTorus, Sphere2, SphericalShell, UnitCube
from .metrics import (
    audit_Z_bounds,
    covering_radius_estimate,
    distribution_test,
    energy_ratios,
    separation,
    theoretical_limit,
)
from .neighbors import CellGrid
from .optimize import OptimizerParams, descend
from .weights import (
    ConstRadius,
    HardCutoff,
    LogRadius,
    PolyCutoff,
    RieszParams,
    UniformDensity,
    ZPolyDensity,
)

__all__ = ["main"]

_MEMBERSHIP_TOL = 1e-9

_SECTION_KEYS = {
    "manifold": {"manifold", "radius", "r0", "r1", "dim", "sides"},
    "riesz": {
        "s",
        "cutoff",
        "cutoff_order",
        "radius",
        "radius_scale",
        "density",
        "density_a",
        "density_b",
        "weight",
    },
    "optimizer": {
        "iters",
        "armijo_c",
        "backtrack",
        "step_fraction",
        "tol",
        "paranoid",
        "seed",
        "deterministic",
    },
    "run": {"n", "seed", "deterministic"},
    "metrics": {"covering_samples", "bins", "z_deltas"},
    "io": {"out"},
    "bench": {"n_list"},
}


class ConfigError(Exception):
    """Bad configuration or usage; maps to exit code 2."""


class RunError(Exception):
    """Failure while executing a validated run; maps to exit code 1."""


def _load_sections(path):
    parser = ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except (OSError, ConfigParserError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    sections = {}
    for name in parser.sections():
        if name not in _SECTION_KEYS:
            raise ConfigError(f"unknown section [{name}] in {path}")
        allowed = _SECTION_KEYS[name]
        body = {}
        for key, value in parser.items(name):
            if key not in allowed:
                raise ConfigError(f"unknown key '{key}' in section [{name}] of {path}")
            body[key] = value.strip()
        sections[name] = body
    return sections


def _want_float(sec, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key '{key}' in [{sec}] is not a number: {raw!r}")


def _want_int(sec, key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"key '{key}' in [{sec}] is not an integer: {raw!r}")


def _want_bool(sec, key, raw):
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"key '{key}' in [{sec}] is not a boolean: {raw!r}")


def _build_manifold(sections):
    sec = sections.get("manifold", {})
    kind = sec.get("manifold", "sphere").lower()
    try:
        if kind == "circle":
            radius = _want_float("manifold", "radius", sec.get("radius", "1.0"))
            return Circle(radius), {"kind": "circle", "radius": radius}
        if kind == "sphere":
            radius = _want_float("manifold", "radius", sec.get("radius", "1.0"))
            return Sphere2(radius), {"kind": "sphere", "radius": radius}
        if kind == "shell":
            r0 = _want_float("manifold", "r0", sec.get("r0", "0.55"))
            r1 = _want_float("manifold", "r1", sec.get("r1", "1.0"))
            return SphericalShell(r0, r1), {"kind": "shell", "r0": r0, "r1": r1}
        if kind == "cube":
            dim = _want_int("manifold", "dim", sec.get("dim", "2"))
            return UnitCube(dim), {"kind": "cube", "dim": dim}
        if kind == "torus":
            raw = sec.get("sides", "1.0,1.0")
            sides = tuple(
                _want_float("manifold", "sides", part) for part in raw.split(",")
            )
            return FlatTorus(sides), {"kind": "torus", "sides": list(sides)}
    except ValueError as exc:
        raise ConfigError(f"bad [manifold] settings: {exc}")
    raise ConfigError(
        f"unknown manifold {kind!r}; choose circle, sphere, shell, cube or torus"
    )


def _build_params(sections, manifold):
    sec = sections.get("riesz", {})
    if "s" not in sec:
        raise ConfigError("missing key 's' in section [riesz]")
    s = _want_float("riesz", "s", sec["s"])
    d = manifold.intrinsic_dim

    schedule_kind = sec.get("radius", "log").lower()
    scale = _want_float("riesz", "radius_scale", sec.get("radius_scale", "1.0"))
    if schedule_kind == "log":
        schedule = LogRadius(scale, d)
    elif schedule_kind == "const":
        schedule = ConstRadius(scale, d)
    else:
        raise ConfigError(f"unknown radius schedule {schedule_kind!r}; choose log or const")

    cutoff_kind = sec.get("cutoff", "poly").lower()
    if cutoff_kind == "poly":
        order = _want_int("riesz", "cutoff_order", sec.get("cutoff_order", "3"))
        cutoff = PolyCutoff(order)
    elif cutoff_kind == "hard":
        cutoff = HardCutoff()
    else:
        raise ConfigError(f"unknown cutoff {cutoff_kind!r}; choose poly or hard")

    weight = sec.get("weight", "unit").lower()
    if weight not in ("unit", "density"):
        raise ConfigError(f"unknown weight mode {weight!r}; choose unit or density")
    density = None
    if weight == "density":
        density_kind = sec.get("density", "uniform").lower()
        if density_kind == "uniform":
            density = UniformDensity(manifold)
        elif density_kind == "zpoly":
            a = _want_float("riesz", "density_a", sec.get("density_a", "1.0"))
            b = _want_float("riesz", "density_b", sec.get("density_b", "1.0"))
            try:
                density = ZPolyDensity(manifold, a, b)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad density settings: {exc}")
        else:
            raise ConfigError(
                f"unknown density {density_kind!r}; choose uniform or zpoly"
            )

    try:
        params = RieszParams(
            s=s, dim=d, radius=schedule, cutoff=cutoff, density=density, weight_mode=weight
        )
    except ValueError as exc:
        raise ConfigError(str(exc))
    return params


def _build_optimizer(sections):
    sec = sections.get("optimizer", {})
    kwargs = {}
    if "iters" in sec:
        kwargs["max_iters"] = _want_int("optimizer", "iters", sec["iters"])
    if "armijo_c" in sec:
        kwargs["armijo_c"] = _want_float("optimizer", "armijo_c", sec["armijo_c"])
    if "backtrack" in sec:
        kwargs["backtrack_factor"] = _want_float("optimizer", "backtrack", sec["backtrack"])
    if "step_fraction" in sec:
        kwargs["step_fraction"] = _want_float(
            "optimizer", "step_fraction", sec["step_fraction"]
        )
    if "tol" in sec:
        kwargs["rel_energy_tol"] = _want_float("optimizer", "tol", sec["tol"])
    if "paranoid" in sec:
        kwargs["paranoid"] = _want_bool("optimizer", "paranoid", sec["paranoid"])
    try:
        return OptimizerParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _run_settings(sections, args):
    """Seed and determinism: CLI flags beat [run], which beats [optimizer] aliases."""
    run = sections.get("run", {})
    opt = sections.get("optimizer", {})
    seed = 0
    if "seed" in opt:
        seed = _want_int("optimizer", "seed", opt["seed"])
    if "seed" in run:
        seed = _want_int("run", "seed", run["seed"])
    if args.seed is not None:
        seed = args.seed
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {seed}")

    deterministic = False
    if "deterministic" in opt:
        deterministic = _want_bool("optimizer", "deterministic", opt["deterministic"])
    if "deterministic" in run:
        deterministic = _want_bool("run", "deterministic", run["deterministic"])
    if args.deterministic:
        deterministic = True

    out = sections.get("io", {}).get("out")
    if getattr(args, "out", None):
        out = args.out
    return seed, deterministic, out


def _points_header(p):
    return ",".join(("x", "y", "z")[:p])


def _write_points_csv(path, pts):
    np.savetxt(path, pts, fmt="%.17g", delimiter=",", header=_points_header(pts.shape[1]), comments="")


def _write_trace_csv(path, trace):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iter,energy,grad_norm,step,backtracks\n")
        for rec in trace:
            fh.write(
                f"{rec.iteration},{rec.energy:.17g},{rec.grad_max:.17g},"
                f"{rec.step:.17g},{rec.backtracks}\n"
            )


def _read_points_csv(path, ambient):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise RunError(f"cannot read points file {path}: {exc}")
    rows = []
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        if lineno == 1 and text.replace(",", "").replace(" ", "").isalpha():
            continue  # header row
        parts = text.split(",")
        try:
            row = [float(part) for part in parts]
        except ValueError:
            raise RunError(f"{path}:{lineno}: cannot parse row {text!r}")
        if len(row) != ambient:
            raise RunError(
                f"{path}:{lineno}: expected {ambient} coordinates, found {len(row)}"
            )
        rows.append(row)
    if not rows:
        raise RunError(f"{path}: no points found")
    return np.ascontiguousarray(np.array(rows, dtype=np.float64))


def _manifold_report(desc):
    return dict(desc)


def _ensure_out(out):
    if out is None:
        raise ConfigError("no output directory: set [io] out or pass --out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_generate(args):
    sections = _load_sections(args.config)
    manifold, desc = _build_manifold(sections)
    params = _build_params(sections, manifold)
    opt = _build_optimizer(sections)
    seed, deterministic, out = _run_settings(sections, args)

    run = sections.get("run", {})
    if "n" not in run:
        raise ConfigError("missing key 'n' in section [run]")
    n = _want_int("run", "n", run["n"])
    if n < 2:
        raise ConfigError(f"need at least two points, got n={n}")

    outdir = _ensure_out(out)
    started = time.perf_counter()
    initial = manifold.sample_uniform(n, seed)
    result = descend(initial, manifold, params, opt)
    elapsed = time.perf_counter() - started

    pts_path = outdir / "points.csv"
    trace_path = outdir / "trace.csv"
    report_path = outdir / "report.json"
    _write_points_csv(pts_path, result.config.points)
    _write_trace_csv(trace_path, result.trace)

    samples, bins, deltas = _metrics_settings(sections)
    report = {
        "backend": _kernels.BACKEND,
        "threads": _kernels.thread_cap(),
        "deterministic": deterministic,
        "seed": seed,
        "n": n,
        "s": params.s,
        "dim": params.dim,
        "manifold": _manifold_report(desc),
        "parameters": params.describe(),
        "optimizer": {
            "iterations": result.iterations,
            "reason": result.reason,
            "line_search_failed": result.line_search_failed,
            "grid_rebuilds": result.rebuilds,
            "max_iters": opt.max_iters,
        },
        "energy": {
            "initial": result.initial_energy,
            "final": result.final_energy,
            "pair_terms_evaluated": result.pair_terms_evaluated,
        },
        "max_membership_violation": result.max_membership_violation,
        "metrics": _metrics_payload(
            manifold, params, result.config, seed, samples, bins, deltas
        ),
    }
    if not deterministic:
        # wall time would break byte-identical reruns, so it is only
        # reported for non-deterministic runs
        report["elapsed_seconds"] = elapsed
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")

    print(f"wrote {pts_path}")
    print(f"wrote {trace_path}")
    print(f"wrote {report_path}")
    print(
        f"generate: n={n} energy {result.initial_energy:.6g} -> "
        f"{result.final_energy:.6g} after {result.iterations} iterations ({result.reason})"
    )
    return 0


def _check_membership(manifold, pts):
    violation = manifold.membership_violation(pts)
    worst = int(np.argmax(violation))
    worst_value = float(violation[worst])
    if worst_value > _MEMBERSHIP_TOL:
        raise RunError(
            f"point {worst} is off the manifold by {worst_value:.3e} "
            f"(tolerance {_MEMBERSHIP_TOL:.0e})"
        )
    return worst, worst_value


def _metrics_settings(sections):
    msec = sections.get("metrics", {})
    samples = None
    if "covering_samples" in msec:
        samples = _want_int("metrics", "covering_samples", msec["covering_samples"])
    bins = 10
    if "bins" in msec:
        bins = _want_int("metrics", "bins", msec["bins"])
    deltas = None
    if "z_deltas" in msec:
        deltas = [
            _want_float("metrics", "z_deltas", part)
            for part in msec["z_deltas"].split(",")
        ]
    return samples, bins, deltas


def _metrics_payload(manifold, params, config, seed, samples, bins, deltas):
    n = config.n
    sep = separation(config, box=manifold.periodic_box)
    cov = covering_radius_estimate(manifold, config, samples=samples, seed=seed)
    ratios = energy_ratios(config, manifold, params)
    limit = theoretical_limit(params, manifold)
    dist_report = distribution_test(manifold, config, params.density, bins=bins)
    scale_n = float(n) ** (1.0 / params.dim)
    payload = {
        "separation": sep,
        "covering_estimate": cov,
        "covering_samples": samples if samples is not None else 50 * n,
        "mesh_ratio": cov / sep if sep > 0 else None,
        "scaled_separation": sep * scale_n,
        "scaled_covering": cov * scale_n,
        "energy": {
            "truncated": ratios.energy_truncated,
            "full": ratios.energy_full,
            "pair_terms": ratios.pair_terms,
        },
        "ratios": {
            "truncated": ratios.truncated,
            "full": ratios.full,
            "exponent": ratios.exponent,
        },
        "limit": {
            "value": limit.value,
            "status": limit.status,
            "lattice_constant": limit.lattice_constant,
        },
        "distribution": {
            "regions": dist_report.regions,
            "max_rel_deviation": dist_report.max_rel_deviation,
        },
    }
    if deltas:
        rows = audit_Z_bounds(
            config,
            params.s,
            deltas,
            box=manifold.periodic_box,
            scale=manifold.diameter,
        )
        payload["z_audit"] = [
            {
                "delta": row.delta,
                "z_count": row.z_count,
                "bound": row.bound,
                "slack": row.slack,
                "satisfied": row.satisfied,
                "z_normalized": row.z_normalized,
            }
            for row in rows
        ]
    return payload


def cmd_metrics(args):
    sections = _load_sections(args.config)
    manifold, desc = _build_manifold(sections)
    params = _build_params(sections, manifold)
    seed, deterministic, out = _run_settings(sections, args)
    samples, bins, deltas = _metrics_settings(sections)

    if not args.points:
        raise ConfigError("metrics needs --points <csv> with a configuration to score")
    pts = _read_points_csv(args.points, manifold.ambient_dim)
    if pts.shape[0] < 2:
        raise RunError("metrics needs at least two points")
    worst, worst_value = _check_membership(manifold, pts)
    config = manifold._configuration(pts)

    report = {
        "backend": _kernels.BACKEND,
        "n": config.n,
        "s": params.s,
        "dim": params.dim,
        "seed": seed,
        "manifold": _manifold_report(desc),
        "parameters": params.describe(),
        "membership": {"max_violation": worst_value, "worst_index": worst},
    }
    report.update(_metrics_payload(manifold, params, config, seed, samples, bins, deltas))

    text = json.dumps(report, sort_keys=True, indent=2)
    if out is not None:
        outdir = _ensure_out(out)
        path = outdir / "metrics.json"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.write("\n")
        print(f"wrote {path}")
    print(text)
    return 0


def cmd_bench(args):
    from .energy import energy_full, energy_truncated
    from .neighbors import count_Z

    sections = _load_sections(args.config)
    manifold, desc = _build_manifold(sections)
    params = _build_params(sections, manifold)
    seed, deterministic, out = _run_settings(sections, args)

    raw = sections.get("bench", {}).get("n_list", "1000,10000,100000")
    n_list = [_want_int("bench", "n_list", part) for part in raw.split(",")]
    if any(n < 2 for n in n_list):
        raise ConfigError("bench sizes must be at least 2")

    box = manifold.periodic_box
    compiled = "compiled" in _kernels.available_backends()
    header = (
        "n,brute_pairs,pair_terms,candidates,z_count,delta,build_seconds,"
        "python_seconds,compiled_seconds,brute_seconds,speedup,speedup_vs_brute"
    )
    lines = [header]
    for n in n_list:
        config = manifold.sample_uniform(n, seed)
        delta = params.radius_sup(n)

        started = time.perf_counter()
        try:
            CellGrid(config.points, delta, box=box)
        except ValueError:
            pass  # grid may be unbuildable (coarse periodic box); timing still reported
        build_seconds = time.perf_counter() - started

        py_started = time.perf_counter()
        bd = energy_truncated(
            config, params, box=box, scale=manifold.diameter, backend="python"
        )
        python_seconds = time.perf_counter() - py_started
        truncated_seconds = python_seconds

        if compiled:
            c_started = time.perf_counter()
            energy_truncated(
                config, params, box=box, scale=manifold.diameter, backend="compiled"
            )
            compiled_seconds = time.perf_counter() - c_started
            truncated_seconds = compiled_seconds
            speedup = python_seconds / compiled_seconds if compiled_seconds > 0 else math.inf
            compiled_text = f"{compiled_seconds:.6g}"
            speedup_text = f"{speedup:.6g}"
        else:
            compiled_text = ""
            speedup_text = ""

        b_started = time.perf_counter()
        energy_full(config, params, box=box, scale=manifold.diameter)
        brute_seconds = time.perf_counter() - b_started
        vs_brute = brute_seconds / truncated_seconds if truncated_seconds > 0 else math.inf

        z = count_Z(config, delta, box=box)
        brute = n * (n - 1) // 2
        lines.append(
            f"{n},{brute},{bd.pair_terms_evaluated},{bd.candidate_distance_evals},"
            f"{z},{delta:.17g},{build_seconds:.6g},{python_seconds:.6g},"
            f"{compiled_text},{brute_seconds:.6g},{speedup_text},{vs_brute:.6g}"
        )

    text = "\n".join(lines) + "\n"
    if out is not None:
        outdir = _ensure_out(out)
        path = outdir / "bench.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {path}")
    print(text, end="")
    return 0


def _parser():
    parser = argparse.ArgumentParser(
        prog="riesz-forge",
        description="Generate and score low-energy point configurations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="INI run description")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed")
        p.add_argument(
            "--deterministic",
            action="store_true",
            help="keep reruns with the same seed byte-identical",
        )

    gen = sub.add_parser("generate", help="sample, descend, write points")
    common(gen)
    gen.set_defaults(func=cmd_generate)

    met = sub.add_parser("metrics", help="score an existing configuration")
    common(met)
    met.add_argument("--points", default=None, help="points CSV to score")
    met.set_defaults(func=cmd_metrics)

    ben = sub.add_parser("bench", help="scaling and backend comparison table")
    common(ben)
    ben.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
