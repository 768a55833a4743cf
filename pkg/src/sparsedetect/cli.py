"""Command line interface.

Subcommands: calibrate, test, power, figure, lambda, boundary, appendix-a.
Calibrated thresholds are cached in a line-oriented file under the
directory named by SPARSEDETECT_CACHE_DIR (default ./.sparsedetect).
A flat key=value config file can pre-set any long option; explicit flags
win.  Every CSV output carries a provenance header sufficient to re-run
it exactly.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path
from typing import Dict, Optional

import click
import numpy as np

from . import __version__
from .calibration import (
    CacheFormatError,
    CriticalValueTable,
    TestKind,
    UncalibratedError,
    calibrate as _calibrate,
    reject as _reject,
    test_statistic,
)
from .families import (
    AlternativeModel,
    Family,
    FixedScale,
    GFamily,
    InverseRootLogScale,
    PolynomialDecayScale,
    PowerScale,
    RootLogScale,
)
from .harness import FIGURE_IDS, ExperimentSpec, figure_spec, run_grid, write_grid_csv
from .theory import (
    ExpTail,
    GaussTail,
    PolyTail,
    appendix_a_thresholds,
    critical_sparsity,
    lambda_curve,
)

CACHE_ENV = "SPARSEDETECT_CACHE_DIR"
CACHE_FILE = "critical_values.txt"

_SCALES = ("fixed", "root-log", "inv-root-log", "poly-critical", "power")


def _cache_path() -> Path:
    return Path(os.environ.get(CACHE_ENV, ".sparsedetect")) / CACHE_FILE


def _load_table() -> CriticalValueTable:
    path = _cache_path()
    if path.exists():
        try:
            return CriticalValueTable.load(path)
        except CacheFormatError as exc:
            raise click.ClickException(str(exc))
    return CriticalValueTable()


def _save_table(table: CriticalValueTable) -> None:
    path = _cache_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    table.save(path)


def _read_config(path: Optional[str]) -> Dict[str, str]:
    if path is None:
        return {}
    cfg: Dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise click.ClickException(f"cannot read config file: {exc}")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise click.ClickException(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, val = line.split("=", 1)
        cfg[key.strip()] = val.strip()
    return cfg


def _resolve(flag, cfg: Dict[str, str], key: str, default, cast):
    """Flag > config file > default."""
    if flag is not None:
        return flag
    if key in cfg:
        return cast(cfg[key])
    return default


def _family(name: str, nu: Optional[float]) -> GFamily:
    fam = Family(name)
    if fam is Family.STUDENT_T:
        if nu is None:
            raise click.ClickException("--family student-t requires --nu")
        return GFamily(fam, nu=nu)
    return GFamily(fam)


def _scale(kind: str, r: float, beta: float, nu: Optional[float], rho: Optional[float]):
    if kind == "fixed":
        return FixedScale(r)
    if kind == "root-log":
        return RootLogScale(r)
    if kind == "inv-root-log":
        return InverseRootLogScale(r)
    if kind == "poly-critical":
        return PolynomialDecayScale(r, beta, nu if nu is not None else 1.0)
    if kind == "power":
        if rho is None:
            raise click.ClickException("--scale power requires --rho")
        return PowerScale(rho)
    raise click.ClickException(f"unknown scale rule {kind!r}")


def _floats(text: str):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _provenance(fh, **kv):
    fh.write(f"# sparsedetect={__version__}\n")
    fh.write(f"# command={' '.join(sys.argv[1:])}\n")
    for k, v in kv.items():
        fh.write(f"# {k}={v}\n")


def _open_out(out: Optional[str]):
    return open(out, "w") if out else sys.stdout


@click.group()
@click.version_option(__version__)
def main():
    """Sparse-signal global-null testing toolkit."""


@main.command("calibrate")
@click.option("--test", "test", required=True, type=click.Choice([t.value for t in TestKind if t is not TestKind.HYBRID]))
@click.option("--n", type=int, required=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--reps", type=int, default=20000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=os.cpu_count(), show_default="cpu count")
def cmd_calibrate(test, n, alpha, reps, seed, threads):
    """Monte Carlo null calibration; prints the threshold and updates the cache."""
    if not 0.0 < alpha < 1.0:
        raise click.BadParameter("alpha must lie in (0, 1)", param_hint="--alpha")
    table = _load_table()
    try:
        thr = table.get(test, n, alpha, reps, seed)
    except UncalibratedError:
        thr = _calibrate(TestKind(test), n, alpha, reps, seed, table=table, n_jobs=threads)
        _save_table(table)
    click.echo(f"{thr:.17g}")


@main.command("test")
@click.option("--test", "test", required=True, type=click.Choice([t.value for t in TestKind]))
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True,
              help="whitespace-separated data vector")
def cmd_test(test, alpha, data):
    """Apply a calibrated test to one data vector from a file."""
    x = np.loadtxt(data).ravel()
    table = _load_table()
    try:
        decision = _reject(TestKind(test), x, table, alpha)
    except UncalibratedError as exc:
        raise click.ClickException(f"uncalibrated: {exc}")
    if TestKind(test) is not TestKind.HYBRID:
        click.echo(f"statistic {test_statistic(TestKind(test), x):.17g}")
    click.echo("reject" if decision else "accept")
    # decision is informational; exit 0 means the computation completed


@main.command("power")
@click.option("--test", "tests", multiple=True,
              type=click.Choice([t.value for t in TestKind]))
@click.option("--n", type=int, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--beta", "betas", type=str, default=None, help="comma-separated grid")
@click.option("--r", "r_values", type=str, default=None, help="comma-separated grid")
@click.option("--family", type=click.Choice([f.value for f in Family]), default=None)
@click.option("--scale", type=click.Choice(_SCALES), default=None)
@click.option("--nu", type=float, default=None)
@click.option("--rho", type=float, default=None)
@click.option("--reps", type=int, default=None)
@click.option("--calib-reps", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--threads", type=int, default=os.cpu_count(), show_default="cpu count")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None)
def cmd_power(tests, n, alpha, betas, r_values, family, scale, nu, rho, reps,
              calib_reps, seed, threads, out, config):
    """Estimate power over a (test, beta, r) grid; emits CSV."""
    cfg = _read_config(config)
    tests = tuple(tests) or tuple(v for v in cfg.get("tests", "").split(",") if v) or ("max",)
    n = _resolve(n, cfg, "n", 50000, int)
    alpha = _resolve(alpha, cfg, "alpha", 0.05, float)
    betas = _floats(_resolve(betas, cfg, "beta", "0.5", str))
    r_values = _floats(_resolve(r_values, cfg, "r", "1", str))
    family = _resolve(family, cfg, "family", "laplace", str)
    scale = _resolve(scale, cfg, "scale", "fixed", str)
    nu = _resolve(nu, cfg, "nu", None, float)
    rho = _resolve(rho, cfg, "rho", None, float)
    reps = _resolve(reps, cfg, "reps", 1000, int)
    calib_reps = _resolve(calib_reps, cfg, "calib_reps", 20000, int)
    seed = _resolve(seed, cfg, "seed", 0, int)

    fam = _family(family, nu)
    template = _scale(scale, r_values[0], betas[0], nu, rho)
    try:
        spec = ExperimentSpec(
            n=n, alpha=alpha, tests=tuple(TestKind(t) for t in tests), betas=betas,
            r_values=r_values, family=fam, scale_rule_template=template,
            power_reps=reps, calib_reps=calib_reps, seed=seed,
        )
    except ValueError as exc:
        raise click.ClickException(str(exc))
    table = _load_table()
    results = run_grid(spec, table=table, n_jobs=threads)
    _save_table(table)
    fh = _open_out(out)
    try:
        write_grid_csv(fh, results, spec)
    finally:
        if fh is not sys.stdout:
            fh.close()


@main.command("figure")
@click.option("--id", "figure_id", required=True, type=click.Choice(FIGURE_IDS))
@click.option("--n", type=int, default=50000, show_default=True)
@click.option("--reps", type=int, default=1000, show_default=True)
@click.option("--calib-reps", type=int, default=20000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=os.cpu_count(), show_default="cpu count")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="default <figure-id>.csv")
def cmd_figure(figure_id, n, reps, calib_reps, seed, threads, out):
    """Reproduce a named power-curve dataset."""
    spec = figure_spec(figure_id, n=n, power_reps=reps, calib_reps=calib_reps, seed=seed)
    table = _load_table()
    results = run_grid(spec, table=table, n_jobs=threads)
    _save_table(table)
    out = out or f"{figure_id}.csv"
    with open(out, "w") as fh:
        write_grid_csv(fh, results, spec, provenance={"figure": figure_id})
    click.echo(f"wrote {out}")


@main.command("lambda")
@click.option("--family", required=True, type=click.Choice([f.value for f in Family]))
@click.option("--nu", type=float, default=None)
@click.option("--beta", type=float, required=True)
@click.option("--n", type=int, required=True)
@click.option("--scale", type=click.Choice(_SCALES), default="fixed", show_default=True)
@click.option("--critical-scale", is_flag=True, help="shorthand for --scale poly-critical")
@click.option("--r", type=float, default=1.0, show_default=True)
@click.option("--rho", type=float, default=None)
@click.option("--deltas", type=str, default=None, help="comma-separated grid, default 0.05..1")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def cmd_lambda(family, nu, beta, n, scale, critical_scale, r, rho, deltas, out):
    """Exceedance-exponent curve lambda(delta) against (1-delta)/2; emits CSV."""
    if critical_scale:
        scale = "poly-critical"
    fam = _family(family, nu)
    rule = _scale(scale, r, beta, nu, rho)
    grid = _floats(deltas) if deltas else tuple(0.05 * k for k in range(1, 21))
    model = AlternativeModel(n=n, beta=beta, family=fam, scale=rule)
    curve = lambda_curve(model, grid)
    fh = _open_out(out)
    try:
        _provenance(fh, family=family, nu=nu, beta=beta, n=n, scale=scale, r=r, rho=rho)
        fh.write("delta,lambda,reference,n,beta,family,r\n")
        for d, lam, ref in curve.rows():
            fh.write(
                f"{d:.17g},{lam:.17g},{ref:.17g},{n},{beta:.17g},{family},"
                f"{'' if curve.r is None else format(curve.r, '.17g')}\n"
            )
    finally:
        if fh is not sys.stdout:
            fh.close()


@main.command("boundary")
@click.option("--gauss-tail", is_flag=True)
@click.option("--exp-tail", is_flag=True)
@click.option("--poly-tail", is_flag=True)
@click.option("--r", type=float, default=None)
@click.option("--nu", type=float, default=None)
@click.option("--rho", type=float, default=None)
def cmd_boundary(gauss_tail, exp_tail, poly_tail, r, nu, rho):
    """Closed-form critical sparsity level for a tail class."""
    picked = [f for f, on in
              (("gauss", gauss_tail), ("exp", exp_tail), ("poly", poly_tail)) if on]
    if len(picked) != 1:
        raise click.UsageError("choose exactly one of --gauss-tail / --exp-tail / --poly-tail")
    try:
        if picked[0] == "gauss":
            if r is None:
                raise click.UsageError("--gauss-tail requires --r")
            value = critical_sparsity(GaussTail(r))
        elif picked[0] == "exp":
            if r is None:
                raise click.UsageError("--exp-tail requires --r")
            value = critical_sparsity(ExpTail(r))
        else:
            if nu is None or rho is None:
                raise click.UsageError("--poly-tail requires --nu and --rho")
            value = critical_sparsity(PolyTail(nu, rho))
    except ValueError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{value:.17g}")


@main.command("appendix-a")
def cmd_appendix_a():
    """Scale thresholds of the exponential-tail counterexample (max test, HC)."""
    r_max, r_hc = appendix_a_thresholds()
    click.echo(f"max-test {r_max:.17g}")
    click.echo(f"hc {r_hc:.17g}")


if __name__ == "__main__":
    main()
