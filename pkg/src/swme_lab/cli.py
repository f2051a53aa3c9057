"""Command line front end: runs, table sweeps, model comparisons, scans."""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from .harness import builtin_scenarios, compare_models, run_scenario, table_matrix
from .models import hyperbolicity_scan, make_model
from .scheme import DryStateError
from .steady import NoSteadyState

_SCENARIOS = sorted(builtin_scenarios())
_MODELS = ["swe", "swme1", "swme2", "swme", "swlme", "hswme", "betahswme"]


@click.group()
def main() -> None:
    """Finite-volume solver for shallow-water moment models over topography."""


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3e}" if (v != 0 and (abs(v) < 1e-3 or abs(v) >= 1e4)) else f"{v:g}"
    return str(v)


def _print_rows(rows: list[dict]) -> None:
    if not rows:
        return
    cols = list(rows[0])
    widths = [max(len(c), max(len(_fmt(r.get(c, ""))) for r in rows)) for c in cols]
    click.echo("  ".join(c.ljust(w) for c, w in zip(cols, widths)))
    for r in rows:
        click.echo("  ".join(_fmt(r.get(c, "")).ljust(w) for c, w in zip(cols, widths)))


@main.command()
@click.option("--scenario", required=True, type=click.Choice(_SCENARIOS))
@click.option("--model", type=click.Choice(_MODELS), default=None,
              help="Closure to use (scenario default otherwise).")
@click.option("--n", "--N", "n_moments", type=int, default=None,
              help="Number of moments N.")
@click.option("--order", type=click.Choice(["1", "2"]), default=None)
@click.option("--wb/--no-wb", default=None,
              help="Well-balanced or baseline reconstruction.")
@click.option("--cells", type=int, default=None)
@click.option("--cfl", type=float, default=None)
@click.option("--tend", type=float, default=None)
@click.option("--g", type=float, default=None, help="Gravity constant.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Output directory for csv/json/png files.")
@click.option("--plot/--no-plot", default=True)
def run(scenario, model, n_moments, order, wb, cells, cfl, tend, g, out, plot):
    """Run one scenario and report steady L1 errors when applicable."""
    scn = builtin_scenarios()[scenario]
    try:
        r = run_scenario(scn, model=model, N=n_moments,
                         order=None if order is None else int(order), wb=wb,
                         cells=cells, cfl=cfl, t_end=tend, g=g,
                         out_dir=out, plot=plot)
    except (DryStateError, NoSteadyState, ValueError) as e:
        raise click.ClickException(str(e))
    click.echo(f"{scenario}: model={r.model.kind.value} N={r.model.N} "
               f"order={r.order} {'wb' if r.wb else 'baseline'} "
               f"cells={r.grid.n} t={r.t:g} steps={r.steps} "
               f"walltime={r.walltime:.2f}s")
    if r.error is not None:
        parts = [f"h={r.error.h:.3e}", f"u={r.error.u:.3e}"]
        if len(r.error.alpha):
            parts.append(f"max_alpha={r.error.alpha.max():.3e}")
        click.echo("L1 errors vs initial steady state: " + ", ".join(parts))
    active = {k: v for k, v in r.diagnostics.items() if v}
    if active:
        click.echo(f"diagnostics: {active}")
    if r.out_dir is not None:
        click.echo(f"wrote {r.out_dir}/initial.csv final.csv manifest.json"
                   + (" profile.png" if plot else ""))


@main.command()
@click.option("--scenarios", default="test1,test2,test3,test4",
              help="Comma-separated scenario names.")
@click.option("--orders", default="1,2", help="Comma-separated orders.")
@click.option("--schemes", default="wb,baseline",
              help="Comma-separated subset of {wb, baseline}.")
@click.option("--cells", type=int, default=None)
@click.option("--tend", type=float, default=None)
@click.option("--jobs", type=int, default=1, help="Parallel worker processes.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write all rows to this CSV file.")
def tables(scenarios, orders, schemes, cells, tend, jobs, out):
    """Steady-error table over scenarios, orders, and reconstruction schemes."""
    names = [s.strip() for s in scenarios.split(",") if s.strip()]
    known = builtin_scenarios()
    for name in names:
        if name not in known:
            raise click.ClickException(f"unknown scenario {name!r}")
    order_list = tuple(int(o) for o in orders.split(","))
    flag_map = {"wb": True, "baseline": False}
    try:
        wb_flags = tuple(flag_map[s.strip()] for s in schemes.split(",") if s.strip())
    except KeyError as e:
        raise click.ClickException(f"unknown scheme {e.args[0]!r}, want wb/baseline")
    rows = table_matrix(names, orders=order_list, wb_flags=wb_flags,
                        cells=cells, t_end=tend, jobs=jobs)
    _print_rows(rows)
    if out:
        cols = sorted({c for r in rows for c in r},
                      key=lambda c: (c not in ("scenario", "order", "wb"), c))
        lines = [",".join(cols)]
        lines += [",".join(repr(r.get(c, "")) if isinstance(r.get(c), str)
                           else str(r.get(c, "")) for c in cols) for r in rows]
        Path(out).write_text("\n".join(lines) + "\n")
        click.echo(f"wrote {out}")


@main.command()
@click.option("--scenario", default="test5", type=click.Choice(_SCENARIOS))
@click.option("--models", default="swlme,hswme,betahswme",
              help="Comma-separated closures to compare.")
@click.option("--order", type=click.Choice(["1", "2"]), default="1")
@click.option("--cells", type=int, default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--plot/--no-plot", default=True)
def compare(scenario, models, order, cells, out, plot):
    """Run several closures on one scenario and print shock metrics."""
    kinds = [m.strip() for m in models.split(",") if m.strip()]
    for kind in kinds:
        if kind not in _MODELS:
            raise click.ClickException(f"unknown model {kind!r}")
    scn = builtin_scenarios()[scenario]
    try:
        res = compare_models(scn, kinds, order=int(order), cells=cells,
                             out_dir=out, plot=plot)
    except (DryStateError, NoSteadyState, ValueError) as e:
        raise click.ClickException(str(e))
    rows = [{"model": k, **v} for k, v in res["metrics"].items()]
    _print_rows(rows)
    if out:
        click.echo(f"wrote {out}/compare.csv metrics.json"
                   + (" compare.png" if plot else ""))


@main.command("scan-hyperbolicity")
@click.option("--model", default="swme2", type=click.Choice(_MODELS))
@click.option("--n", "--N", "n_moments", type=int, default=None,
              help="Number of moments (models without a fixed N).")
@click.option("--alpha-range", type=float, default=4.0,
              help="Scan alpha_1, alpha_2 in [-range, range].")
@click.option("--samples", type=int, default=161, help="Grid points per axis.")
@click.option("--h", "depth", type=float, default=1.0)
@click.option("--u", "velocity", type=float, default=0.0)
@click.option("--g", type=float, default=1.0)
@click.option("--out", type=click.Path(dir_okay=False), default="scan.csv")
def scan_hyperbolicity(model, n_moments, alpha_range, samples, depth, velocity, g, out):
    """Map where the spectrum stays real in the (alpha_1, alpha_2) plane."""
    try:
        mdl = make_model(model, n_moments, g=g)
        a = np.linspace(-alpha_range, alpha_range, samples)
        ok = hyperbolicity_scan(mdl, a, a, h=depth, u=velocity)
    except ValueError as e:
        raise click.ClickException(str(e))
    A1, A2 = np.meshgrid(a, a, indexing="ij")
    np.savetxt(out, np.column_stack([A1.ravel(), A2.ravel(),
                                     ok.ravel().astype(int)]),
               delimiter=",", header="alpha1,alpha2,is_hyperbolic", comments="",
               fmt=["%.10g", "%.10g", "%d"])
    frac = float(ok.mean())
    click.echo(f"{mdl.kind.value} N={mdl.N}: hyperbolic on {frac:.1%} of the grid, "
               f"wrote {out}")


if __name__ == "__main__":
    sys.exit(main())
