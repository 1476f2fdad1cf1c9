"""Command line entry point: ``freemix p-estimate | density | demo``.

JSON summaries go to stdout, curves to CSV files. Exit codes: 0 success,
1 usage or invalid input, 2 degenerate moment denominator, 3 numerical
solver failure. Files written with a fixed ``--seed`` are byte-identical
across runs; wall-clock runtime is only ever printed, never written.
"""
import os
import sys
import time

import click
import numpy as np

from . import __version__
from .classical import classical_sum
from .experiments import MODELS, build_pair
from .free import FreeSumQuery, default_free_grid, free_sum_mc, nfold_free_density
from .io import dumps, read_spectrum, write_density_csv, write_diagnostics, write_json
from .mixture import DegenerateError, EstimateConfig, estimate, moment_report
from .rng import RngSeed
from .spectral import (GridSpec, SmoothingSpec, density_from_spectrum, ks_distance,
                       l1_distance, silverman_bandwidth)

OUTPUT_ENV = "FREEMIX_OUTPUT_DIR"
DENSITY_METHODS = ("exact", "classical", "free-mc", "free-analytic", "convex")
DEMOS = {
    "blockdiag": ("block-goe", {"m": 64, "ell": 8, "samples": 200}),
    "kms": ("kms", {"m": 64, "rho": 0.5, "samples": 200}),
    "anderson": ("anderson", {"m": 512, "var": 1.0, "samples": 100}),
    "spinchain": ("spin-chain", {"n": 3, "d": 5, "ensemble": "bernoulli", "samples": 1}),
}
_MODEL_KEYS = ("m", "ell", "beta", "rho", "var", "n", "d", "ensemble", "coupling")


def _output_dir(explicit=None):
    return explicit or os.environ.get(OUTPUT_ENV) or "."


def model_options(f):
    opts = [
        click.option("--m", type=int, help="Matrix dimension."),
        click.option("--ell", type=int, help="Block size (block-goe)."),
        click.option("--beta", type=click.IntRange(1, 2), help="1 real, 2 complex."),
        click.option("--rho", type=float, help="Toeplitz decay (kms)."),
        click.option("--var", type=float, help="Variance of the diagonal disorder."),
        click.option("--n", type=int, help="Chain length (spin-chain)."),
        click.option("--d", type=int, help="Local dimension (spin-chain)."),
        click.option("--ensemble", type=click.Choice(["gue", "goe", "projector", "bernoulli"]),
                     help="Local term ensemble (spin-chain)."),
        click.option("--coupling", type=click.Choice(["haar", "permutation", "identity"]),
                     help="Eigenvector coupling (diag-gauss)."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _model_kwargs(kw, seed):
    out = {k: kw.get(k) for k in _MODEL_KEYS}
    out["seed"] = seed
    return out


def _config(method, samples, free_samples, seed, grid=None, points=512):
    return EstimateConfig(method=method, samples=samples, free_samples=free_samples, grid=grid,
                          points=points, rng=RngSeed(seed))


def _grid(xmin, xmax, points):
    if (xmin is None) != (xmax is None):
        raise click.UsageError("give both --xmin and --xmax or neither")
    return None if xmin is None else GridSpec(xmin, xmax, points)


def _echo(obj):
    click.echo(dumps(obj), nl=False)


@click.group()
@click.version_option(__version__, prog_name="freemix")
def cli():
    """Free/classical mixtures for the spectrum of a sum of matrices."""


@cli.command("p-estimate")
@click.option("--model", type=click.Choice(MODELS), required=True)
@model_options
@click.option("--samples", type=click.IntRange(1), default=200, show_default=True)
@click.option("--seed", type=click.IntRange(0), default=0, show_default=True)
@click.option("--method", type=click.Choice(["auto", "moments", "ipr", "closed"]),
              default="auto", show_default=True)
def p_estimate(model, samples, seed, method, **kw):
    """Print the moment report and mixing weight as JSON."""
    pair, params = build_pair(model, **_model_kwargs(kw, seed))
    report, _ = moment_report(pair, EstimateConfig(method=method, samples=samples, density=False,
                                                   rng=RngSeed(seed)))
    out = report.to_dict()
    out["config"] = {"model": model, "params": params, "samples": samples, "seed": seed,
                     "method": method}
    if pair.p_closed is not None:
        out["p_closed"] = pair.p_closed
    _echo(out)


@cli.command()
@click.option("--method", type=click.Choice(DENSITY_METHODS), required=True)
@click.option("--out", type=click.Path(dir_okay=False), help="CSV path.")
@click.option("--model", type=click.Choice(MODELS))
@model_options
@click.option("--spectrum", type=click.Path(exists=True, dir_okay=False),
              help="Eigenvalue file (one value or value,weight per line).")
@click.option("--spectrum2", type=click.Path(exists=True, dir_okay=False),
              help="Second summand for classical / free-mc (defaults to --spectrum).")
@click.option("--folds", type=click.IntRange(1), help="N for free-analytic.")
@click.option("--xmin", type=float)
@click.option("--xmax", type=float)
@click.option("--points", type=click.IntRange(2), default=512, show_default=True)
@click.option("--bandwidth", type=float, help="Gaussian kernel width (default Silverman).")
@click.option("--samples", type=click.IntRange(1), default=200, show_default=True)
@click.option("--free-samples", type=click.IntRange(1), default=200, show_default=True)
@click.option("--p-method", type=click.Choice(["auto", "moments", "ipr", "closed"]),
              default="auto", show_default=True)
@click.option("--seed", type=click.IntRange(0), default=0, show_default=True)
def density(method, out, model, spectrum, spectrum2, folds, xmin, xmax, points, bandwidth,
            samples, free_samples, p_method, seed, **kw):
    """Write one density curve to CSV and print a JSON summary."""
    start = time.perf_counter()
    grid = _grid(xmin, xmax, points)
    out = out or os.path.join(_output_dir(), f"density-{method}.csv")
    summary = {"method": method, "out": out, "seed": seed, "points": points}

    if method == "free-analytic":
        if spectrum is None or folds is None:
            raise click.UsageError("free-analytic needs --spectrum and --folds")
        base = read_spectrum(spectrum)
        grid = grid or default_free_grid(base, folds, points)
        smoothing = SmoothingSpec("gaussian", bandwidth)
        curve = nfold_free_density(FreeSumQuery(base, folds, grid, smoothing=smoothing),
                                   normalize=False)
        sidecar = os.path.splitext(out)[0] + ".diagnostics.json"
        if folds > 1:
            write_diagnostics(curve, sidecar)
            summary.update(diagnostics=sidecar, raw_integral=curve.meta["raw_integral"])
        summary.update(spectrum=spectrum, folds=folds, normalized=False)
    elif spectrum is not None and method in ("classical", "free-mc"):
        s1 = read_spectrum(spectrum)
        s2 = read_spectrum(spectrum2) if spectrum2 else s1
        if method == "classical":
            atoms = classical_sum(s1, s2)
        else:
            atoms = free_sum_mc(s1, s2, kw.get("beta") or 1, free_samples, RngSeed(seed))
            summary["free_samples"] = free_samples
        grid = grid or GridSpec.covering(atoms, points=points)
        bw = bandwidth or silverman_bandwidth(atoms)
        curve = density_from_spectrum(atoms, grid, SmoothingSpec("gaussian", bw))
        summary.update(spectrum=spectrum, spectrum2=spectrum2 or spectrum)
    else:
        if model is None:
            raise click.UsageError(f"--method {method} needs --model "
                                   "(or --spectrum for classical / free-mc)")
        pair, params = build_pair(model, **_model_kwargs(kw, seed))
        config = _config(p_method, samples, free_samples, seed, grid, points)
        if bandwidth:
            config.smoothing = SmoothingSpec("gaussian", bandwidth)
        report, mixed = estimate(pair, config)
        key = {"exact": "exact", "classical": "classical", "free-mc": "free"}.get(method)
        curve = mixed if method == "convex" else mixed.meta["components"][key]
        summary.update(model=model, params=params, samples=samples, free_samples=free_samples,
                       p_method=report.p_method)
        if method == "convex":
            summary.update(p=report.p_clamped, p_raw=report.p_raw, report=report.to_dict())

    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    write_density_csv(curve, out)
    summary.update(integral=curve.integral(), xmin=float(curve.grid[0]),
                   xmax=float(curve.grid[-1]), bandwidth=curve.meta.get("bandwidth"),
                   runtime=time.perf_counter() - start)
    _echo(summary)


def run_demo(name, out_dir, seed=0, points=512, **overrides):
    """Write the four density CSVs and ``report.json`` for one demo; return the report."""
    model, defaults = DEMOS[name]
    params = dict(defaults)
    params.update({k: v for k, v in overrides.items() if v is not None})
    samples = params.pop("samples")
    pair, model_params = build_pair(model, seed=seed, **params)
    config = _config("auto", samples, 200, seed, points=points)
    report, mixed = estimate(pair, config)
    comps = mixed.meta["components"]
    curves = {"exact": comps["exact"], "classical": comps["classical"], "free": comps["free"],
              "convex": mixed}
    os.makedirs(out_dir, exist_ok=True)
    for key, curve in curves.items():
        write_density_csv(curve, os.path.join(out_dir, f"{key}.csv"))
    distances = {key: {"l1": l1_distance(curve, comps["exact"]),
                       "ks": ks_distance(curve, comps["exact"])}
                 for key, curve in curves.items() if key != "exact"}
    result = {
        "demo": name,
        "model": model,
        "params": model_params,
        "samples": samples,
        "seed": seed,
        "grid": {"xmin": float(mixed.grid[0]), "xmax": float(mixed.grid[-1]), "points": points},
        "bandwidth": comps["exact"].meta["bandwidth"],
        "free_engine": mixed.meta["free_engine"],
        "report": report.to_dict(),
        "p": report.p_clamped,
        "distances": distances,
    }
    if pair.p_closed is not None:
        result["p_closed"] = pair.p_closed
        moments, _ = moment_report(pair, EstimateConfig(method="moments", samples=samples,
                                                        density=False, rng=RngSeed(seed)))
        result["p_moments"] = moments.p_raw
        result["p_moments_stderr"] = moments.p_stderr
    write_json(result, os.path.join(out_dir, "report.json"))
    return result


@cli.command()
@click.argument("name", type=click.Choice(sorted(DEMOS)))
@click.option("--out-dir", type=click.Path(file_okay=False),
              help=f"Output directory (default ${OUTPUT_ENV}/<name>, else ./<name>).")
@click.option("--m", type=int)
@click.option("--ell", type=int)
@click.option("--rho", type=float)
@click.option("--var", type=float)
@click.option("--n", type=int)
@click.option("--d", type=int)
@click.option("--samples", type=click.IntRange(1))
@click.option("--points", type=click.IntRange(2), default=512, show_default=True)
@click.option("--seed", type=click.IntRange(0), default=0, show_default=True)
def demo(name, out_dir, seed, points, **kw):
    """Reproduce one of the worked examples into an output directory."""
    start = time.perf_counter()
    out_dir = out_dir or os.path.join(_output_dir(), name)
    allowed = {"blockdiag": ("m", "ell", "var"), "kms": ("m", "rho", "var"),
               "anderson": ("m", "var"), "spinchain": ("n", "d")}[name]
    bad = [k for k, v in kw.items() if v is not None and k not in allowed + ("samples",)]
    if bad:
        raise click.UsageError(f"demo {name} does not take --{', --'.join(bad)}")
    result = run_demo(name, out_dir, seed, points, **kw)
    result["out_dir"] = out_dir
    result["runtime"] = time.perf_counter() - start
    _echo(result)


def run(argv=None):
    """Invoke the CLI and return its exit code instead of exiting."""
    try:
        cli.main(args=argv, prog_name="freemix", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except DegenerateError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        click.echo(f"solver failure: {exc}", err=True)
        return 3
    except (ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


def main():
    sys.exit(run())
