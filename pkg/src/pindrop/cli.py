"""Command-line front end: JSON/CSV plumbing over the whole library.

Conventions shared by every subcommand:

* inputs arrive as inline JSON (``--input``), a file (``--input-file``,
  ``-`` for stdin), or piped stdin; outputs go to stdout or ``--output``
  (relative paths resolve against ``--output-dir`` / ``$PINDROP_OUTPUT_DIR``);
* ``--seed`` pins every randomized path;
* a ``--config`` file of ``key = value`` lines supplies defaults for any
  long option; explicit flags win;
* exit codes: 0 success, 1 bad usage or invalid input, 2 a library
  self-check failed.
"""

from __future__ import annotations

import json
import math
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import __version__
from .bounds import (
    basic_ratio,
    chi,
    half_scale_threshold,
    lambda_wolff,
    legacy_bounds,
    phi,
    phi_argmax,
    psi_pack,
    psi_su,
    stability_t1,
    wolff_constants,
)
from .distlab import figure1_data, l2_support_bound_check, lower_bound_pipeline
from .dyadic import (
    DyadicMeasure,
    LineMeasure,
    bad_direction_fraction,
    bourgain_decompose,
    energy,
    energy_pairwise,
    four_corner_measure,
    l2_norm_sq,
    marstrand_fraction,
    product_cantor_measure,
    project,
    random_measure,
    uniform_measure,
)
from .lipdrop import (
    PLFunction,
    construct_partition_basic,
    hard_points,
    sequence_from_function,
    tdrop_exact,
    total_drop,
)
from .seqpart import IntegerPartition, drop_M, drop_S, mtau, mtau_bruteforce
from .witnesses import verify_witness, witness_basic


# ---------------------------------------------------------------------------
# plumbing helpers


def _parse_config(path: str) -> dict:
    """Read ``key = value`` lines; '#' starts a comment, blanks are skipped."""
    values: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep or not key.strip():
            raise click.UsageError(f"malformed config line: {raw!r}")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _cfg(ctx: click.Context, name: str, value, cast):
    """Apply a config-file default when the flag was not given explicitly."""
    cfg = (ctx.obj or {}).get("config", {})
    if name in cfg and ctx.get_parameter_source(name) == click.core.ParameterSource.DEFAULT:
        try:
            return cast(cfg[name])
        except (TypeError, ValueError) as exc:
            raise click.UsageError(f"config value {name}={cfg[name]!r}: {exc}") from exc
    return value


def _read_payload(inline: str | None, path: str | None) -> str:
    if inline is not None and path is not None:
        raise click.UsageError("pass --input or --input-file, not both")
    if inline is not None:
        return inline
    if path is not None and path != "-":
        try:
            return Path(path).read_text()
        except OSError as exc:
            raise click.UsageError(f"cannot read {path}: {exc}") from exc
    stream = click.get_text_stream("stdin")
    if path is None and stream.isatty():
        raise click.UsageError("no input: pass --input, --input-file, or pipe JSON on stdin")
    data = stream.read()
    if not data.strip():
        raise click.UsageError("empty input")
    return data


def _parse_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"invalid JSON input: {exc}") from exc


def _emit(ctx: click.Context, text: str, output: str | None) -> None:
    if output is None or output == "-":
        click.echo(text)
        return
    path = Path(output)
    out_dir = (ctx.obj or {}).get("output_dir")
    if not path.is_absolute() and out_dir:
        path = Path(out_dir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n")
    click.echo(str(path), err=True)


def _plain(obj):
    """JSON-safe copy: numpy scalars/arrays unwrapped, integral floats as ints."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and obj.is_integer() and abs(obj) <= 2.0**53:
        return int(obj)
    return obj


def _dumps(obj) -> str:
    return json.dumps(_plain(obj), separators=(",", ":"))


def _require(name: str, value, option: str):
    if value is None:
        raise click.UsageError(f"--eval {name} needs {option}")
    return value


_GENERATORS = ("uniform", "four-corner", "product-cantor", "random")


def _make_measure(ctx, kind, base_exp, depth, s, u, max_cells) -> DyadicMeasure:
    if kind == "uniform":
        return uniform_measure(base_exp, depth)
    if kind == "four-corner":
        return four_corner_measure(base_exp, depth)
    if kind == "product-cantor":
        return product_cantor_measure(base_exp, depth, s, u)
    seed = (ctx.obj or {}).get("seed")
    return random_measure(base_exp, depth, seed if seed is not None else 0, max_cells=max_cells)


def _load_measure(inline, input_file) -> DyadicMeasure:
    return DyadicMeasure.from_json(_read_payload(inline, input_file))


def _measure_source_options(fn):
    for deco in reversed(
        (
            click.option("--kind", type=click.Choice(_GENERATORS), default=None,
                         help="Generate the measure instead of reading one."),
            click.option("--input", "inline", default=None, help="Inline measure JSON."),
            click.option("--input-file", default=None, help="Measure JSON file, '-' for stdin."),
            click.option("--T", "base_exp", type=int, default=1, show_default=True,
                         help="Subdivision exponent: each step splits cells 2^T-fold per axis."),
            click.option("--depth", type=int, default=8, show_default=True),
            click.option("--s", type=float, default=1.2, show_default=True,
                         help="Product-Cantor planar exponent."),
            click.option("--u", type=float, default=2.0, show_default=True,
                         help="Product-Cantor coordinate-ratio parameter."),
            click.option("--max-cells", type=int, default=4096, show_default=True,
                         help="Cell budget for --kind random."),
        )
    ):
        fn = deco(fn)
    return fn


def _resolve_measure(ctx, kind, inline, input_file, base_exp, depth, s, u, max_cells):
    kind = _cfg(ctx, "kind", kind, str)
    if kind is not None and (inline is not None or input_file is not None):
        raise click.UsageError("pass --kind or an input measure, not both")
    if kind is None and inline is None and input_file is None:
        kind = "uniform"
    if kind is not None:
        if kind not in _GENERATORS:
            raise click.UsageError(f"unknown measure kind {kind!r}")
        base_exp = _cfg(ctx, "base_exp", base_exp, int)
        depth = _cfg(ctx, "depth", depth, int)
        return _make_measure(ctx, kind, base_exp, depth, s, u, max_cells)
    return _load_measure(inline, input_file)


# ---------------------------------------------------------------------------
# root group


@click.group(name="pindrop")
@click.version_option(__version__, prog_name="pindrop")
@click.option("--seed", type=int, default=None, help="Seed for every randomized path.")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Workers for independent experiment runs (distexp run --seeds).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="key=value defaults file; explicit flags override it.")
@click.option("--output-dir", default=None, envvar="PINDROP_OUTPUT_DIR",
              help="Directory for relative --output paths [env: PINDROP_OUTPUT_DIR].")
@click.pass_context
def cli(ctx, seed, jobs, config_path, output_dir):
    """Drop calculus, dyadic-measure regularization, and pinned-distance counts."""
    config = _parse_config(config_path) if config_path else {}
    ctx.obj = {"config": config}
    ctx.obj["seed"] = _cfg(ctx, "seed", seed, int)
    ctx.obj["jobs"] = max(1, _cfg(ctx, "jobs", jobs, int))
    ctx.obj["output_dir"] = _cfg(ctx, "output_dir", output_dir, str)


# ---------------------------------------------------------------------------
# sequence commands


@cli.command(name="mtau")
@click.option("--tau", type=float, default=0.0, show_default=True,
              help="Relaxation: blocks may lag the running minimum by tau*length.")
@click.option("--input", "inline", default=None, help="JSON array of drop increments in [-1,1].")
@click.option("--input-file", default=None, help="File with the JSON array, '-' for stdin.")
@click.option("--prefix-len", type=int, default=None, help="Optimize only the first L entries.")
@click.option("--bruteforce", is_flag=True, help="Cross-check against exhaustive enumeration.")
@click.option("--output", default=None)
@click.pass_context
def mtau_cmd(ctx, tau, inline, input_file, prefix_len, bruteforce, output):
    """Minimal retained drop of a sequence over tau-good partitions."""
    tau = _cfg(ctx, "tau", tau, float)
    sigma = _parse_json(_read_payload(inline, input_file))
    value, partition = mtau(sigma, tau, prefix_len=prefix_len)
    result = {"value": value, "partition": list(partition.points)}
    if bruteforce:
        ref, _ = mtau_bruteforce(sigma, tau, prefix_len=prefix_len)
        assert ref == value, f"dynamic program {value} != exhaustive {ref}"
        result["bruteforce"] = ref
    _emit(ctx, _dumps(result), output)


@cli.command(name="drop")
@click.option("--partition", "partition_json", required=True,
              help="JSON array of breakpoints 0=N_0<...<N_q.")
@click.option("--tau", type=float, default=None, help="Also report tau-goodness.")
@click.option("--input", "inline", default=None, help="JSON array of drop increments.")
@click.option("--input-file", default=None)
@click.option("--output", default=None)
@click.pass_context
def drop_cmd(ctx, partition_json, tau, inline, input_file, output):
    """Evaluate one partition: retained drop M, total drop S, goodness."""
    sigma = _parse_json(_read_payload(inline, input_file))
    part = IntegerPartition(_parse_json(partition_json))
    result = {
        "M": drop_M(sigma, part),
        "S": drop_S(sigma),
        "partition": list(part.points),
        "good": part.is_good(),
    }
    if tau is not None:
        result["tau"] = tau
        result["tau_good"] = part.is_tau_good(tau)
    _emit(ctx, _dumps(result), output)


# ---------------------------------------------------------------------------
# function commands


@cli.command(name="tdrop")
@click.option("--input", "inline", default=None,
              help='Function JSON {"a": ..., "breakpoints": [[x, y], ...]}.')
@click.option("--input-file", default=None)
@click.option("--output", default=None)
@click.pass_context
def tdrop_cmd(ctx, inline, input_file, output):
    """Exact minimal total drop of a piecewise-linear profile and its hard set."""
    fn = PLFunction.from_json(_read_payload(inline, input_file))
    hard = hard_points(fn)
    result = {
        "value": tdrop_exact(fn),
        "hard_intervals": [[float(lo), float(hi)] for lo, hi in hard],
        "a": fn.a,
    }
    _emit(ctx, _dumps(result), output)


@cli.command(name="construct")
@click.option("--D", "slope_lo", type=float, required=True, help="Lower envelope slope.")
@click.option("--C", "slope_hi", type=float, required=True, help="Upper envelope slope.")
@click.option("--stop-scale", type=float, default=None,
              help="Truncation scale of the recursion (default a*2^-40).")
@click.option("--discretize", "ell", type=int, default=None,
              help="Also emit the integer partition at 2^-ell resolution.")
@click.option("--input", "inline", default=None, help="Function JSON (see tdrop).")
@click.option("--input-file", default=None)
@click.option("--output", default=None)
@click.pass_context
def construct_cmd(ctx, slope_lo, slope_hi, stop_scale, ell, inline, input_file, output):
    """Build a good partition whose drop nearly attains the envelope bound."""
    fn = PLFunction.from_json(_read_payload(inline, input_file))
    part = construct_partition_basic(fn, slope_lo, slope_hi, stop_scale=stop_scale)
    achieved = total_drop(fn, part)  # includes the truncation residual
    bound = (fn.a - fn(fn.a)) * basic_ratio(slope_hi, slope_lo)
    result = {
        "points": [float(p) for p in part.points],
        "good": part.is_good(),
        "drop": achieved,
        "envelope_bound": bound,
        "optimum": tdrop_exact(fn),
    }
    if ell is not None:
        sigma = sequence_from_function(fn, ell)
        value, ipart = mtau(sigma, 0.0)
        result["discretized"] = {"ell": ell, "value": value, "partition": list(ipart.points)}
    _emit(ctx, _dumps(result), output)


# ---------------------------------------------------------------------------
# closed-form bounds


_BOUND_SPECS = {
    "lambda": (lambda_wolff, ("D",)),
    "chi": (chi, ("s", "u")),
    "psi-pack": (psi_pack, ("s",)),
    "psi-su": (psi_su, ("s", "u")),
    "phi": (phi, ("D",)),
    "phi-argmax": (phi_argmax, ("D",)),
    "basic-ratio": (basic_ratio, ("C", "D")),
    "half-scale": (half_scale_threshold, ("C", "D")),
    "stability-t1": (stability_t1, ("D", "delta")),
    "wolff-constants": (wolff_constants, ("D",)),
    "legacy": (legacy_bounds, ("s", "t")),
}


@cli.command(name="bounds")
@click.option("--eval", "name", required=True, type=click.Choice(sorted(_BOUND_SPECS)),
              help="Which closed-form quantity to evaluate.")
@click.option("--D", "param_d", type=float, default=None)
@click.option("--C", "param_c", type=float, default=None)
@click.option("--s", "param_s", type=float, default=None)
@click.option("--u", "param_u", type=float, default=None)
@click.option("--t", "param_t", type=float, default=None)
@click.option("--delta", "param_delta", type=float, default=None)
@click.option("--output", default=None)
@click.pass_context
def bounds_cmd(ctx, name, param_d, param_c, param_s, param_u, param_t, param_delta, output):
    """Evaluate one closed-form exponent bound; prints a bare JSON value."""
    fn, wanted = _BOUND_SPECS[name]
    supplied = {"D": param_d, "C": param_c, "s": param_s, "u": param_u,
                "t": param_t, "delta": param_delta}
    args = [_require(name, supplied[key], f"--{key}") for key in wanted]
    _emit(ctx, _dumps(fn(*args)), output)


# ---------------------------------------------------------------------------
# witnesses


@cli.command(name="witness")
@click.option("--kind", required=True,
              type=click.Choice(["basic", "initial", "f1", "f2", "f3"]))
@click.option("--a", "param_a", type=float, default=1.0, show_default=True)
@click.option("--b", "param_b", type=float, default=None,
              help="Endpoint value f(a); defaults to D*a.")
@click.option("--C", "param_c", type=float, default=None)
@click.option("--D", "param_d", type=float, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--eta", type=float, default=None)
@click.option("--xi", type=float, default=None)
@click.option("--stop-scale", type=float, default=None)
@click.option("--function-only", is_flag=True, help="Emit just the function JSON.")
@click.option("--output", default=None)
@click.pass_context
def witness_cmd(ctx, kind, param_a, param_b, param_c, param_d, delta, eta, xi,
                stop_scale, function_only, output):
    """Build a sharpness witness and verify its predicted quantities."""
    if param_d is None:
        raise click.UsageError("every witness kind needs --D")
    params: dict = {"D": param_d}
    if kind == "basic":
        if param_c is None:
            raise click.UsageError("--kind basic needs --C")
        params.update(a=param_a, b=param_d * param_a if param_b is None else param_b, C=param_c)
    elif kind in ("f1", "f2"):
        if delta is None:
            raise click.UsageError(f"--kind {kind} needs --delta")
        params.update(delta=delta)
    elif kind == "f3":
        if eta is None or xi is None:
            raise click.UsageError("--kind f3 needs --eta and --xi")
        params.update(eta=eta, xi=xi)
    report = verify_witness(kind, params, stop_scale=stop_scale)
    if function_only:
        _emit(ctx, _dumps(report["function"]), output)
    else:
        _emit(ctx, _dumps(report), output)


# ---------------------------------------------------------------------------
# measures


@cli.group(name="measure")
def measure_group():
    """Generate and analyze sparse dyadic measures on the unit square."""


@measure_group.command(name="gen")
@_measure_source_options
@click.option("--output", default=None)
@click.pass_context
def measure_gen(ctx, kind, inline, input_file, base_exp, depth, s, u, max_cells, output):
    """Emit a measure as JSON (generated, or re-serialized from input)."""
    if kind is None and inline is None and input_file is None:
        kind = "uniform"
    mu = _resolve_measure(ctx, kind, inline, input_file, base_exp, depth, s, u, max_cells)
    _emit(ctx, mu.to_json(), output)


@measure_group.command(name="energy")
@_measure_source_options
@click.option("--exponent", type=float, default=1.0, show_default=True,
              help="Riesz exponent in (0, 2).")
@click.option("--pairwise", is_flag=True, help="Also run the O(n^2) off-diagonal oracle.")
@click.option("--output", default=None)
@click.pass_context
def measure_energy(ctx, kind, inline, input_file, base_exp, depth, s, u, max_cells,
                   exponent, pairwise, output):
    """Multiscale Riesz-type energy of a measure."""
    mu = _resolve_measure(ctx, kind, inline, input_file, base_exp, depth, s, u, max_cells)
    exponent = _cfg(ctx, "exponent", exponent, float)
    result = {"exponent": exponent, "dyadic": energy(mu, exponent)}
    if pairwise:
        pw = energy_pairwise(mu, exponent)
        result["pairwise"] = pw
        result["log2_ratio"] = math.log2(result["dyadic"] / pw) if pw > 0 else None
    _emit(ctx, _dumps(result), output)


@measure_group.command(name="decompose")
@_measure_source_options
@click.option("--eps", type=float, default=0.1, show_default=True,
              help="Residual budget exponent: leftover mass <= 2^(-eps*T*depth).")
@click.option("--full", is_flag=True, help="Embed each piece's full cell list.")
@click.option("--output", default=None)
@click.pass_context
def measure_decompose(ctx, kind, inline, input_file, base_exp, depth, s, u, max_cells,
                      eps, full, output):
    """Split a measure into scale-regular pieces plus a small residual."""
    mu = _resolve_measure(ctx, kind, inline, input_file, base_exp, depth, s, u, max_cells)
    eps = _cfg(ctx, "eps", eps, float)
    pieces, residual = bourgain_decompose(mu, eps)
    rows = []
    for piece in pieces:
        row = {
            "mass": piece.mass,
            "sigma": [float(v) for v in piece.sigma],
            "cells": len(piece),
        }
        if full:
            row["measure"] = json.loads(piece.measure.to_json())
        rows.append(row)
    result = {
        "eps": eps,
        "piece_count": len(pieces),
        "residual_mass": residual,
        "pieces": rows,
    }
    _emit(ctx, _dumps(result), output)


@measure_group.command(name="project")
@_measure_source_options
@click.option("--theta", type=float, default=0.0, show_default=True,
              help="Direction angle in radians.")
@click.option("--axis", type=click.Choice(["x", "y"]), default=None,
              help="Exact coordinate direction (overrides --theta).")
@click.option("--level", type=int, default=None, help="Output bin level (default: depth).")
@click.option("--output", default=None)
@click.pass_context
def measure_project(ctx, kind, inline, input_file, base_exp, depth, s, u, max_cells,
                    theta, axis, level, output):
    """Push a measure to the line along one direction."""
    mu = _resolve_measure(ctx, kind, inline, input_file, base_exp, depth, s, u, max_cells)
    direction = {"x": (1.0, 0.0), "y": (0.0, 1.0)}.get(axis, theta)
    nu = project(mu, direction, m=level)
    result = {
        "T": nu.base_exp,
        "depth": nu.depth,
        "bin_width": nu.bin_width,
        "bins": [[int(i), float(mass)] for i, mass in zip(nu.idx, nu.masses)],
        "l2_norm_sq": l2_norm_sq(nu),
        "support_count": nu.support_count,
        "support_lower_bound_ok": l2_support_bound_check(nu),
    }
    _emit(ctx, _dumps(result), output)


@measure_group.command(name="badscan")
@_measure_source_options
@click.option("--eps", type=float, default=0.1, show_default=True,
              help="Energy-growth threshold exponent defining a bad direction.")
@click.option("--tau", type=float, default=0.1, show_default=True,
              help="Minimal block length fraction k >= tau*j.")
@click.option("--start-level", type=int, default=0, show_default=True)
@click.option("--n-theta", type=int, default=64, show_default=True)
@click.option("--marstrand-scale", "scale_r", type=float, default=None,
              help="Also report the fraction of directions with projection "
                   "L2 norm above R times the unit-exponent energy.")
@click.option("--output", default=None)
@click.pass_context
def measure_badscan(ctx, kind, inline, input_file, base_exp, depth, s, u, max_cells,
                    eps, tau, start_level, n_theta, scale_r, output):
    """Scan directions for localized projections with inflated L2 norm."""
    mu = _resolve_measure(ctx, kind, inline, input_file, base_exp, depth, s, u, max_cells)
    leaf_keys, _ = mu.cells(mu.depth)
    fraction = bad_direction_fraction(mu, int(leaf_keys[0]), start_level, eps, tau,
                                      n_theta=n_theta)
    result = {
        "eps": eps,
        "tau": tau,
        "n_theta": n_theta,
        "bad_fraction": fraction,
    }
    if scale_r is not None:
        result["marstrand_scale"] = scale_r
        result["marstrand_fraction"] = marstrand_fraction(mu, scale_r, n_theta=n_theta)
    _emit(ctx, _dumps(result), output)


# ---------------------------------------------------------------------------
# distance experiments


@cli.group(name="distexp")
def distexp_group():
    """Pinned-distance box-counting experiments."""


def _parse_pin(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise click.UsageError("--pin expects 'x,y'")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise click.UsageError(f"--pin expects numbers: {exc}") from exc


@distexp_group.command(name="run")
@_measure_source_options
@click.option("--pin", default="2,0.5", show_default=True, help="Pin point 'x,y'.")
@click.option("--tau", type=float, default=0.05, show_default=True)
@click.option("--eps", type=float, default=0.1, show_default=True)
@click.option("--beta", type=float, default=0.1, show_default=True)
@click.option("--seeds", default=None,
              help="Comma list of seeds: run one random measure per seed "
                   "(parallel under --jobs).")
@click.option("--output", default=None)
@click.pass_context
def distexp_run(ctx, kind, inline, input_file, base_exp, depth, s, u, max_cells,
                pin, tau, eps, beta, seeds, output):
    """Full lower-bound pipeline: decompose, optimize drops, count distances."""
    pin_xy = _parse_pin(_cfg(ctx, "pin", pin, str))
    tau = _cfg(ctx, "tau", tau, float)
    eps = _cfg(ctx, "eps", eps, float)
    beta = _cfg(ctx, "beta", beta, float)
    s = _cfg(ctx, "s", s, float)
    u = _cfg(ctx, "u", u, float)

    def run_one(mu: DyadicMeasure) -> list[dict]:
        reports = lower_bound_pipeline(mu, pin_xy, tau=tau, eps=eps, beta=beta, s=s, u=u)
        return [json.loads(r.to_json()) for r in reports]

    if seeds is not None:
        if kind is not None and kind != "random":
            raise click.UsageError("--seeds applies to randomly generated measures only")
        base_exp = _cfg(ctx, "base_exp", base_exp, int)
        depth = _cfg(ctx, "depth", depth, int)
        try:
            seed_list = [int(v) for v in seeds.split(",") if v.strip() != ""]
        except ValueError as exc:
            raise click.UsageError(f"--seeds expects integers: {exc}") from exc
        if not seed_list:
            raise click.UsageError("--seeds given but empty")
        measures = [random_measure(base_exp, depth, sd, max_cells=max_cells)
                    for sd in seed_list]
        jobs = min((ctx.obj or {}).get("jobs", 1), len(measures))
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                all_reports = list(pool.map(run_one, measures))
        else:
            all_reports = [run_one(mu) for mu in measures]
        result = [{"seed": sd, "reports": reps}
                  for sd, reps in zip(seed_list, all_reports)]
        _emit(ctx, _dumps(result), output)
        return
    mu = _resolve_measure(ctx, kind, inline, input_file, base_exp, depth, s, u, max_cells)
    _emit(ctx, _dumps(run_one(mu)), output)


@distexp_group.command(name="figure1")
@click.option("--step", type=float, default=0.01, show_default=True)
@click.option("--output", default=None)
@click.pass_context
def distexp_figure1(ctx, step, output):
    """CSV of the exponent reference curves over s in [1, 1.5]."""
    step = _cfg(ctx, "step", step, float)
    _emit(ctx, figure1_data(step=step).rstrip("\n"), output)


# ---------------------------------------------------------------------------
# selftest


def _selftest_checks(seed: int, deep: bool):
    rng = np.random.default_rng(seed)
    n_sequences = 200 if deep else 60
    n_densities = 1000 if deep else 200

    def check_dp_vs_bruteforce():
        for _ in range(n_sequences):
            ell = int(rng.integers(1, 11))
            sigma = rng.uniform(-1.0, 1.0, size=ell)
            for tau in (0.0, 0.2):
                fast, part = mtau(sigma, tau)
                slow, _ = mtau_bruteforce(sigma, tau)
                assert fast == slow, f"dp {fast} != brute force {slow}"
                assert drop_M(sigma, part) == fast

    def check_bound_identities():
        from fractions import Fraction

        d0 = Fraction(1, 1) * 0
        exact = (1 + d0) * (37 - 50 * d0 + 60 * d0**2) / (18 * (3 - 4 * d0 + 5 * d0**2))
        assert exact == Fraction(37, 54)
        for s_val in np.linspace(0.05, 1.45, 101):
            assert abs(psi_su(s_val, 2.0) - 2.0 * s_val / 3.0) <= 1e-12
        for s_val in np.linspace(1.0 + 1e-9, 2.0 - 1e-9, 101):
            assert abs(1.0 - psi_pack(s_val) - phi(s_val - 1.0)) <= 1e-12
        for d_val in np.linspace(0.0, 1.0 / 3.0, 101, endpoint=False):
            consts = wolff_constants(d_val)
            assert abs(consts["xi"] * (1.0 - 2.0 * consts["eta"]) - lambda_wolff(d_val)) <= 1e-12

    def check_witnesses():
        for kind, params in (
            ("basic", {"a": 1.0, "b": 0.3, "C": 0.6, "D": 0.15}),
            ("initial", {"D": 0.2}),
            ("f1", {"D": 0.2, "delta": 0.05}),
            ("f2", {"D": 0.2, "delta": 0.05}),
        ):
            report = verify_witness(kind, params)
            assert report["ok"], f"witness {kind} failed: {report['drop_abs_error']}"

    def check_construction():
        fn = witness_basic(1.0, 0.3, 0.6, 0.15)
        part = construct_partition_basic(fn, 0.15, 0.6)
        achieved = total_drop(fn, part)  # includes the truncation residual
        bound = (fn.a - fn(fn.a)) * basic_ratio(0.6, 0.15)
        assert part.is_good()
        assert achieved <= bound + (1.0 - 0.15) * fn.a * 2.0**-40 + 1e-9

    def check_discretization():
        fn = witness_basic(1.0, 0.3, 0.6, 0.15)
        ell, tau = 64, 0.01
        sigma = sequence_from_function(fn, ell)
        value, _ = mtau(sigma, tau)
        budget = 36.0 * tau + 12.0 * math.log2(ell) / ell
        assert abs(value / ell - tdrop_exact(fn)) <= budget

    def check_decomposition():
        for mu in (random_measure(1, 8, seed), four_corner_measure(1, 8)):
            pieces, residual = bourgain_decompose(mu, 0.1)
            assert residual <= 2.0 ** (-0.1 * mu.base_exp * mu.depth) + 1e-12
            total = residual
            for piece in pieces:
                total += piece.mass
            assert abs(total - 1.0) <= 1e-9
            rerun, residual2 = bourgain_decompose(mu, 0.1)
            assert residual2 == residual and len(rerun) == len(pieces)

    def check_projection():
        mu = uniform_measure(1, 6)
        nu = project(mu, 0.3)
        assert abs(nu.total_mass - 1.0) <= 1e-12
        assert marstrand_fraction(mu, 4.0, n_theta=512) == 0.0

    def check_energy():
        mu = uniform_measure(1, 10)
        assert abs(energy(mu, 1.0) - (1.0 - 2.0**-10)) <= 1e-12

    def check_support_bound():
        for _ in range(n_densities):
            n = int(rng.integers(1, 80))
            idx = rng.choice(800, size=n, replace=False)
            masses = rng.random(n) + 1e-9
            masses /= masses.sum()
            assert l2_support_bound_check(LineMeasure(1, 8, idx, masses))

    def check_pipeline_uniform():
        reports = lower_bound_pipeline(uniform_measure(1, 10), (2.0, 0.5))
        assert len(reports) == 1 and reports[0].main_term == 1.0
        assert reports[0].empirical_count >= 0.9

    return [
        ("dp-vs-bruteforce", check_dp_vs_bruteforce),
        ("bound-identities", check_bound_identities),
        ("witness-equalities", check_witnesses),
        ("partition-construction", check_construction),
        ("discretization-budget", check_discretization),
        ("regular-decomposition", check_decomposition),
        ("projection-mass", check_projection),
        ("energy-closed-form", check_energy),
        ("l2-support-bound", check_support_bound),
        ("pipeline-uniform", check_pipeline_uniform),
    ]


@cli.command(name="selftest")
@click.option("--deep", is_flag=True, help="Larger sample sizes (slower).")
@click.pass_context
def selftest_cmd(ctx, deep):
    """Run the library invariant suite; exits 0 only if every check passes."""
    seed = (ctx.obj or {}).get("seed")
    failures = []
    for name, check in _selftest_checks(0 if seed is None else seed, deep):
        try:
            check()
        except Exception as exc:  # noqa: BLE001 - report and aggregate
            failures.append(name)
            click.echo(f"FAIL {name}: {exc}")
        else:
            click.echo(f"ok   {name}")
    if failures:
        raise AssertionError(f"{len(failures)} selftest check(s) failed: {', '.join(failures)}")
    click.echo(f"all {len(_SELFTEST_NAMES)} checks passed")


_SELFTEST_NAMES = [name for name, _ in _selftest_checks(0, False)]


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    """Run the CLI; returns 0 (ok), 1 (usage/validation), or 2 (internal)."""
    try:
        rv = cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        code = exc.exit_code
        return 0 if code is None else int(code)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except (ValueError, TypeError, KeyError, OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except AssertionError as exc:
        click.echo(f"internal check failed: {exc}", err=True)
        return 2
    except Exception:  # noqa: BLE001 - any other escape is an internal failure
        traceback.print_exc()
        return 2
    return 0 if rv is None else int(rv)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
