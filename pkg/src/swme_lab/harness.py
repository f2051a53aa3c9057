"""Scenario definitions, runs, error reports, and file output.

A Scenario bundles domain, topography, initial data, model and solver
defaults under a name. run_scenario resolves overrides, integrates, and
optionally writes a self-describing output directory:

    initial.csv / final.csv   x,b,h,hu,halpha1..halphaN
    manifest.json             configuration, timings, diagnostics, errors
    profile.png               solution overview (optional)

Steady scenarios report L1 errors of the primitives against the initial
data, which is the well-balancing figure of merit.
"""

from __future__ import annotations

import json
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .basis import make_basis, project_profile
from .models import Model, make_model
from .scheme import Grid, new_diagnostics
from .steady import FlowRegime, NoSteadyState, SteadyConstants, SteadyStatus, solve_heights
from .timeint import integrate

__all__ = [
    "Scenario",
    "ErrorReport",
    "RunResult",
    "builtin_scenarios",
    "topography_by_name",
    "initial_state",
    "l1_error",
    "run_scenario",
    "compare_models",
    "table_matrix",
    "total_variation",
    "front_position",
]


def _topo_parabolic(x):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < 0.5, 2.0 - x ** 2, 1.75)


def _topo_cosine(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 1.3) & (x < 1.7)
    return np.where(inside, 0.25 * (1.0 + np.cos(5.0 * np.pi * (x + 0.5))), 0.0)


_TOPOGRAPHIES = {
    "flat": None,
    "parabolic_bump": _topo_parabolic,
    "cosine_bump": _topo_cosine,
}


def topography_by_name(name: str):
    if name not in _TOPOGRAPHIES:
        raise KeyError(f"unknown topography {name!r}, have {sorted(_TOPOGRAPHIES)}")
    return _TOPOGRAPHIES[name]


@dataclass(frozen=True)
class Scenario:
    """Named configuration: domain, topography, initial data, solver defaults."""

    name: str
    x_min: float
    x_max: float
    cells: int
    g: float
    model: str
    N: int
    cfl: float
    t_end: float
    topography: str = "flat"
    ic: dict = field(default_factory=dict)
    order: int = 1
    wb: bool = True
    steady_reference: bool = False
    description: str = ""


def builtin_scenarios() -> dict[str, Scenario]:
    base = dict(x_min=0.0, x_max=3.0, cells=1000, g=9.812, model="swlme", N=8,
                cfl=0.5, t_end=0.5, topography="cosine_bump", steady_reference=True)
    dam = dict(x_min=-0.4, x_max=0.4, cells=1000, g=1.0, model="swlme", N=8,
               cfl=0.5, t_end=0.1, topography="flat", wb=False)
    scenarios = [
        Scenario(name="test1", x_min=-1.0, x_max=1.0, cells=1000, g=9.812,
                 model="swlme", N=8, cfl=0.5, t_end=0.5,
                 topography="parabolic_bump",
                 ic={"kind": "lake", "surface": 3.0},
                 steady_reference=True,
                 description="lake at rest over a parabolic bump"),
        Scenario(name="test2", **base,
                 ic={"kind": "steady", "c1": 3.5, "c2": 21.15525, "cm": 0.0,
                     "regime": "subcritical"},
                 description="subcritical steady flow over a smooth bump"),
        Scenario(name="test3", **base,
                 ic={"kind": "steady", "c1": 2.5, "c2": 17.56957396120237,
                     "cm": 0.0, "regime": "transcritical", "split": 1.5},
                 description="transcritical steady flow, sonic point at the crest"),
        Scenario(name="test4", **base,
                 ic={"kind": "steady", "c1": 3.5, "c2": 21.15525, "cm": 0.25,
                     "regime": "subcritical"},
                 description="subcritical steady flow with nonzero moments"),
        Scenario(name="test5", **dam,
                 ic={"kind": "dam_break", "h_left": 5.0, "h_right": 1.0,
                     "u_m": 0.25, "alpha_by_index": {1: -0.25, 8: 0.25}},
                 description="moment dam break with two excited moments"),
        Scenario(name="test6", **dam,
                 ic={"kind": "dam_break", "h_left": 5.0, "h_right": 1.0,
                     "profile": "sqrt_shear"},
                 description="dam break with a sqrt velocity profile"),
    ]
    return {s.name: s for s in scenarios}


def _steady_initial(scn: Scenario, grid: Grid, model: Model) -> np.ndarray:
    ic = scn.ic
    N = model.N
    cm = ic.get("cm", 0.0)
    cm = np.full(N, float(cm)) if np.ndim(cm) == 0 else np.asarray(cm, dtype=float)
    C = SteadyConstants(c1=float(ic["c1"]), c2=float(ic["c2"]), cm=cm, g=model.g)
    x = grid.centers
    if ic.get("regime") == "transcritical":
        split = float(ic.get("split", 0.5 * (scn.x_min + scn.x_max)))
        sup = x > split
    elif ic.get("regime", "subcritical") == "supercritical":
        sup = np.ones(grid.n, dtype=bool)
    else:
        sup = np.zeros(grid.n, dtype=bool)
    h, status, hc, fc = solve_heights(C.c1, C.c2, C.D, grid.b_centers, model.g, sup)
    if np.any(status == SteadyStatus.NO_STEADY):
        k = int(np.argmax(status == SteadyStatus.NO_STEADY))
        raise NoSteadyState(
            f"scenario {scn.name}: no steady depth at x = {x[k]:.6g} "
            f"(b = {grid.b_centers[k]:.6g}, min f = {fc[k]:.6e})",
            h_crit=float(hc[k]), residual=float(fc[k]))
    U = np.empty((grid.n, model.ncomp))
    U[:, 0] = h
    U[:, 1] = C.c1
    U[:, 2:] = cm[None, :] * (h ** 2)[:, None]
    return U


def _dam_initial(scn: Scenario, grid: Grid, model: Model) -> np.ndarray:
    ic = scn.ic
    N = model.N
    split = float(ic.get("split", 0.0))
    h = np.where(grid.centers < split, float(ic["h_left"]), float(ic["h_right"]))
    if ic.get("profile") == "sqrt_shear":
        # depth-profile u(zeta) = 3/2 sqrt(zeta): mean 1, alternating moments
        u_m, alpha = project_profile(lambda z: 1.5 * np.sqrt(z), make_basis(N))
    else:
        u_m = float(ic.get("u_m", 0.0))
        alpha = np.zeros(N)
        for k, v in ic.get("alpha_by_index", {}).items():
            k = int(k)
            if 1 <= k <= N:
                alpha[k - 1] = float(v)
    U = np.empty((grid.n, model.ncomp))
    U[:, 0] = h
    U[:, 1] = h * u_m
    U[:, 2:] = h[:, None] * alpha[None, :]
    return U


def initial_state(scn: Scenario, grid: Grid, model: Model) -> np.ndarray:
    """Interior conserved states (n, N+2) for the scenario's initial data."""
    kind = scn.ic.get("kind")
    if kind == "lake":
        h = float(scn.ic["surface"]) - grid.b_centers
        if np.any(h <= 0.0):
            raise ValueError(f"scenario {scn.name}: lake surface below topography")
        U = np.zeros((grid.n, model.ncomp))
        U[:, 0] = h
        return U
    if kind == "steady":
        return _steady_initial(scn, grid, model)
    if kind == "dam_break":
        return _dam_initial(scn, grid, model)
    raise ValueError(f"scenario {scn.name}: unknown initial-data kind {kind!r}")


@dataclass(frozen=True)
class ErrorReport:
    """L1 norms of primitive differences: h, u, alpha_1..alpha_N."""

    h: float
    u: float
    alpha: np.ndarray

    def as_dict(self) -> dict:
        d = {"h": self.h, "u": self.u}
        for i, a in enumerate(self.alpha, start=1):
            d[f"alpha{i}"] = float(a)
        return d


def l1_error(grid: Grid, U_a: np.ndarray, U_b: np.ndarray) -> ErrorReport:
    """Cellwise L1 distance dx * sum |diff| of the primitive fields."""
    dx = grid.dx
    ha, hb = U_a[:, 0], U_b[:, 0]
    ua, ub = U_a[:, 1] / ha, U_b[:, 1] / hb
    ala, alb = U_a[:, 2:] / ha[:, None], U_b[:, 2:] / hb[:, None]
    return ErrorReport(
        h=float(dx * np.abs(ha - hb).sum()),
        u=float(dx * np.abs(ua - ub).sum()),
        alpha=dx * np.abs(ala - alb).sum(axis=0))


@dataclass
class RunResult:
    scenario: Scenario
    model: Model
    grid: Grid
    order: int
    wb: bool
    U0: np.ndarray
    U: np.ndarray
    t: float
    steps: int
    walltime: float
    diagnostics: dict
    error: ErrorReport | None
    out_dir: Path | None = None


def _git_describe() -> str | None:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0:
            return out.stdout.strip()
    except Exception:
        pass
    return None


def _package_version() -> str:
    try:
        from importlib.metadata import version
        return version("swme-lab")
    except Exception:
        return "unknown"


def _write_csv(path: Path, grid: Grid, U: np.ndarray) -> None:
    n, m = U.shape
    cols = [grid.centers, grid.b_centers] + [U[:, j] for j in range(m)]
    names = ["x", "b", "h", "hu"] + [f"halpha{i}" for i in range(1, m - 1)]
    np.savetxt(path, np.column_stack(cols), delimiter=",",
               header=",".join(names), comments="", fmt="%.17g")


def _plot_profile(path: Path, result: "RunResult") -> None:
    from matplotlib.figure import Figure
    grid, U0, U = result.grid, result.U0, result.U
    x = grid.centers
    b = grid.b_centers
    N = result.model.N
    fig = Figure(figsize=(11.0, 7.0))
    axes = fig.subplots(2, 2).ravel()
    axes[0].plot(x, b, color="0.4", lw=1.0, label="b")
    axes[0].plot(x, U0[:, 0] + b, "--", color="tab:gray", lw=1.0, label="h+b (t=0)")
    axes[0].plot(x, U[:, 0] + b, color="tab:blue", lw=1.2, label="h+b")
    axes[0].set_title("free surface")
    axes[0].legend(fontsize=8)
    axes[1].plot(x, U0[:, 1] / U0[:, 0], "--", color="tab:gray", lw=1.0)
    axes[1].plot(x, U[:, 1] / U[:, 0], color="tab:orange", lw=1.2)
    axes[1].set_title("u_m")
    panels = [(2, 1, "alpha_1"), (3, N, f"alpha_{N}")] if N else []
    for ax_i, mom, label in panels:
        axes[ax_i].plot(x, U0[:, 1 + mom] / U0[:, 0], "--", color="tab:gray", lw=1.0)
        axes[ax_i].plot(x, U[:, 1 + mom] / U[:, 0], color="tab:green", lw=1.2)
        axes[ax_i].set_title(label)
    for ax in axes:
        ax.grid(alpha=0.25)
    fig.suptitle(f"{result.scenario.name}: {result.model.kind.value}, "
                 f"order {result.order}, {'wb' if result.wb else 'baseline'}, "
                 f"t = {result.t:.3g}")
    fig.tight_layout()
    fig.savefig(path, dpi=130)


def run_scenario(scn: Scenario, *, model: str | None = None, N: int | None = None,
                 order: int | None = None, wb: bool | None = None,
                 cells: int | None = None, cfl: float | None = None,
                 t_end: float | None = None, g: float | None = None,
                 out_dir: str | Path | None = None, plot: bool = True) -> RunResult:
    """Integrate a scenario with optional overrides; write outputs if out_dir set."""
    kind = model if model is not None else scn.model
    N = N if N is not None else scn.N
    order = order if order is not None else scn.order
    wb = wb if wb is not None else scn.wb
    cells = cells if cells is not None else scn.cells
    cfl = cfl if cfl is not None else scn.cfl
    t_end = t_end if t_end is not None else scn.t_end
    g = g if g is not None else scn.g
    mdl = make_model(kind, N, g)
    grid = Grid(x_min=scn.x_min, x_max=scn.x_max, n=cells,
                topography=topography_by_name(scn.topography))
    U0 = initial_state(scn, grid, mdl)
    diag = new_diagnostics()
    t0 = time.perf_counter()
    res = integrate(U0, grid, mdl, t_end, cfl=cfl, order=order, wb=wb, diag=diag)
    walltime = time.perf_counter() - t0
    err = l1_error(grid, res.U, U0) if scn.steady_reference else None
    result = RunResult(scenario=scn, model=mdl, grid=grid, order=order, wb=wb,
                       U0=U0, U=res.U, t=res.t, steps=res.steps,
                       walltime=walltime, diagnostics=diag, error=err)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "initial.csv", grid, U0)
        _write_csv(out / "final.csv", grid, res.U)
        manifest = {
            "scenario": asdict(scn),
            "resolved": {"model": mdl.kind.value, "N": mdl.N, "g": mdl.g,
                         "order": order, "wb": wb, "cells": cells, "cfl": cfl,
                         "t_end": t_end},
            "version": _package_version(),
            "git": _git_describe(),
            "steps": res.steps,
            "final_time": res.t,
            "walltime_s": walltime,
            "diagnostics": diag,
            "errors_l1": err.as_dict() if err else None,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        if plot:
            _plot_profile(out / "profile.png", result)
        result.out_dir = out
    return result


# ---------------------------------------------------------------------------
# model comparison and table runs
# ---------------------------------------------------------------------------

def total_variation(v: np.ndarray) -> float:
    return float(np.abs(np.diff(v)).sum())


def front_position(x: np.ndarray, h: np.ndarray) -> float:
    """Rightmost position where the depth still exceeds the downstream level.

    The threshold sits 20% of the way from the downstream depth (last cell)
    to the maximum depth, which tracks the leading shock of a dam break.
    """
    thr = h[-1] + 0.2 * (h.max() - h[-1])
    above = np.nonzero(h >= thr)[0]
    return float(x[above[-1]]) if len(above) else float(x[0])


def compare_models(scn: Scenario, kinds: list[str], *, order: int | None = None,
                   cells: int | None = None, out_dir: str | Path | None = None,
                   plot: bool = True) -> dict:
    """Run several closures on the same scenario and collect shock metrics."""
    runs: dict[str, RunResult] = {}
    for kind in kinds:
        runs[kind] = run_scenario(scn, model=kind, order=order, cells=cells,
                                  out_dir=None, plot=False)
    first = next(iter(runs.values()))
    x = first.grid.centers
    N = first.model.N
    metrics = {}
    for kind, r in runs.items():
        aN = r.U[:, 1 + N] / r.U[:, 0] if N else np.zeros(len(x))
        metrics[kind] = {
            "tv_alpha_last": total_variation(aN),
            "front_position": front_position(x, r.U[:, 0]),
            "steps": r.steps,
            "walltime_s": r.walltime,
        }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cols = [x, first.grid.b_centers]
        names = ["x", "b"]
        for kind, r in runs.items():
            cols += [r.U[:, 0], r.U[:, 1] / r.U[:, 0]]
            names += [f"h_{kind}", f"u_{kind}"]
            if N:
                cols += [r.U[:, 2] / r.U[:, 0], r.U[:, 1 + N] / r.U[:, 0]]
                names += [f"alpha1_{kind}", f"alpha{N}_{kind}"]
        np.savetxt(out / "compare.csv", np.column_stack(cols), delimiter=",",
                   header=",".join(names), comments="", fmt="%.17g")
        (out / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
        if plot:
            _plot_compare(out / "compare.png", scn, runs, x, N)
    return {"runs": runs, "metrics": metrics}


def _plot_compare(path: Path, scn: Scenario, runs: dict, x: np.ndarray, N: int) -> None:
    from matplotlib.figure import Figure
    fig = Figure(figsize=(11.0, 7.0))
    axes = fig.subplots(2, 2).ravel()
    fields = [("h", lambda U: U[:, 0]), ("u_m", lambda U: U[:, 1] / U[:, 0])]
    if N:
        fields += [("alpha_1", lambda U: U[:, 2] / U[:, 0]),
                   (f"alpha_{N}", lambda U: U[:, 1 + N] / U[:, 0])]
    for ax, (label, get) in zip(axes, fields):
        for kind, r in runs.items():
            ax.plot(x, get(r.U), lw=1.1, label=kind)
        ax.set_title(label)
        ax.grid(alpha=0.25)
    axes[0].legend(fontsize=8)
    fig.suptitle(f"{scn.name}: model comparison at t = {scn.t_end:.3g}")
    fig.tight_layout()
    fig.savefig(path, dpi=130)


def _table_worker(args) -> dict:
    name, order, wb, cells, t_end = args
    scn = builtin_scenarios()[name]
    r = run_scenario(scn, order=order, wb=wb, cells=cells, t_end=t_end, plot=False)
    row = {"scenario": name, "order": order, "wb": wb,
           "steps": r.steps, "walltime_s": round(r.walltime, 3)}
    if r.error is not None:
        row.update({f"l1_{k}": v for k, v in r.error.as_dict().items()})
    return row


def table_matrix(names: list[str] | None = None, orders: tuple[int, ...] = (1, 2),
                 wb_flags: tuple[bool, ...] = (True, False),
                 cells: int | None = None, t_end: float | None = None,
                 jobs: int = 1) -> list[dict]:
    """Steady-error table over scenarios x orders x schemes, optionally parallel."""
    if names is None:
        names = ["test1", "test2", "test3", "test4"]
    tasks = [(name, order, wb, cells, t_end)
             for name in names for wb in wb_flags for order in orders]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_table_worker, tasks))
    else:
        rows = [_table_worker(t) for t in tasks]
    return rows
