"""Command line front end: ``orbitherm [global flags] <experiment>``."""
import json
import logging
import os
import sys
from pathlib import Path

import click

from . import drivers, outputs
from ._accel import set_threads
from .config import parse_config
from .errors import ConfigError, OrbithermError, StaleTableError

log = logging.getLogger("orbitherm")


def _table(ctx, cfg, n_min=None):
    """Periodic-orbit table, prefilled from the cache on an exact hash match."""
    table = drivers.make_table(cfg, n_min=n_min)
    root = ctx.obj["cache"]
    if root is None:
        return table
    name = "table" if n_min is None else f"table_n{n_min}"
    path = outputs.table_path(root, cfg.hash, name)
    if path.exists():
        try:
            ids = outputs.load_table(table, path)
            log.info("cache hit %s (%d potentials)", path, len(ids))
        except (StaleTableError, KeyError, ValueError) as exc:
            log.warning("ignoring cache %s: %s", path, exc)
    ctx.obj["tables"].append((table, path))
    return table


def _run(ctx, name, fn):
    cfg = ctx.obj["cfg"]
    try:
        res = fn(cfg)
    except OrbithermError as exc:
        click.echo(f"error: {exc}", err=True)
        partial = getattr(exc, "partial", None)
        if partial:
            click.echo(json.dumps(partial, default=str), err=True)
        ctx.exit(outputs.EXIT_ERROR)
    for table, path in ctx.obj["tables"]:
        outputs.save_table(table, path)
    code = outputs.emit_outputs(res, cfg, ctx.obj["out"])
    for v in res.verdicts:
        click.echo(f"{'PASS' if v.passed else 'FAIL'} {name}.{v.name} {v.detail}")
    ctx.exit(code)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="experiment config (JSON)")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out", show_default=True)
@click.option("--threads", type=int, default=1, show_default=True, help="numba worker threads")
@click.option("--cache", "cache", type=click.Path(file_okay=False), default=None,
              help="table cache directory (default $ORBITHERM_CACHE, else no cache)")
@click.option("--verbose", "-v", is_flag=True)
@click.pass_context
def main(ctx, config_path, out_dir, threads, cache, verbose):
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    set_threads(threads)
    try:
        cfg = parse_config(Path(config_path).read_bytes())
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        ctx.exit(outputs.EXIT_ERROR)
    if cache is None and "ORBITHERM_CACHE" in os.environ:
        cache = outputs.cache_dir()
    ctx.obj = {"cfg": cfg, "out": out_dir, "cache": cache, "tables": []}


@main.command()
@click.pass_context
def check(ctx):
    """Ping-pong and group sanity."""
    _run(ctx, "check", drivers.run_check)


@main.command()
@click.pass_context
def exponents(ctx):
    """Critical exponent; with experiment.n_list, the nested-family decay."""
    cfg = ctx.obj["cfg"]
    if "n_list" in cfg.experiment:
        _run(ctx, "exponents", drivers.run_exponent_decay)
    else:
        _run(ctx, "exponents", drivers.run_exponents)


@main.command("pressure-curve")
@click.pass_context
def pressure_curve(ctx):
    """P(t phi), Gibbs averages and entropy over t_grid."""
    _run(ctx, "pressure-curve", lambda c: drivers.run_pressure_curve(c, _table(ctx, c)))


@main.command("zero-temp")
@click.pass_context
def zero_temp(ctx):
    _run(ctx, "zero-temp", lambda c: drivers.run_zero_temp(c, _table(ctx, c)))


@main.command()
@click.option("--target", "targets", type=float, multiple=True, help="target entropy (repeatable)")
@click.pass_context
def intermediate(ctx, targets):
    _run(ctx, "intermediate",
         lambda c: drivers.run_intermediate_entropy(c, list(targets) or None, _table(ctx, c)))


@main.command()
@click.pass_context
def nonergodic(ctx):
    _run(ctx, "nonergodic", lambda c: drivers.run_nonergodic(c, _table(ctx, c)))


@main.command()
@click.option("--levels", type=int, default=None)
@click.option("--eps", "eps", type=float, multiple=True)
@click.pass_context
def divergence(ctx, levels, eps):
    _run(ctx, "divergence", lambda c: drivers.run_divergence(
        c, levels, list(eps) or None, _table(ctx, c, n_min=c.n_range[1])))


@main.command("no-maximizer")
@click.pass_context
def no_maximizer(ctx):
    _run(ctx, "no-maximizer", lambda c: drivers.run_no_maximizer(c, _table(ctx, c)))


@main.command()
@click.option("--word", default=None, help="target orbit word, e.g. aB")
@click.pass_context
def density(ctx, word):
    _run(ctx, "density", lambda c: drivers.run_density_demo(c, word, _table(ctx, c)))


if __name__ == "__main__":
    sys.exit(main())
