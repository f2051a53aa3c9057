"""Explicit time integration with CFL step control.

Order 1 pairs the scheme with forward Euler, order 2 with the two-stage
strong-stability-preserving Runge-Kutta method (Heun form)

    y1    = y + dt f(y)
    y_new = 1/2 y + 1/2 (y1 + dt f(y1))

whose convex-combination structure inherits the total-variation bounds of
the Euler step. The CFL step is recomputed every step from the largest wave
speed over all cells and clipped to land exactly on the final time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .models import Model, max_speed_batch
from .scheme import DryStateError, Grid, new_diagnostics, pad_state, semidiscrete_rhs, sync_ghosts

__all__ = [
    "TimeStepper",
    "IntegrationResult",
    "compute_dt",
    "euler_step",
    "ssprk2_step",
    "integrate",
]


@dataclass(frozen=True)
class TimeStepper:
    """Step-control bundle: method name, CFL number, final time."""

    method: str
    cfl: float
    t_end: float

    def __post_init__(self):
        if self.method not in ("euler", "ssprk2"):
            raise ValueError(f"unknown method {self.method!r}, want euler or ssprk2")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must be in (0, 1], got {self.cfl}")
        if self.t_end < 0.0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")


def compute_dt(model: Model, U: np.ndarray, dx: float, cfl: float) -> float:
    """CFL step from the fastest wave over the interior states U (n, N+2).

    A completely degenerate spectrum (all speeds zero) falls back to the
    gravity-wave scale sqrt(g max h) so the loop always advances.
    """
    smax = float(np.max(max_speed_batch(model, U)))
    if smax <= 0.0:
        smax = float(np.sqrt(model.g * np.max(U[:, 0])))
    return cfl * dx / smax


def euler_step(y: np.ndarray, dt: float, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    return y + dt * f(y)


def ssprk2_step(y: np.ndarray, dt: float, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    y1 = y + dt * f(y)
    return 0.5 * y + 0.5 * (y1 + dt * f(y1))


@dataclass
class IntegrationResult:
    U: np.ndarray
    t: float
    steps: int
    diagnostics: dict = field(default_factory=dict)


def integrate(U0: np.ndarray, grid: Grid, model: Model, t_end: float,
              cfl: float = 0.5, order: int = 1, wb: bool = True,
              method: str | None = None, diag: dict | None = None,
              on_step: Callable[[float, float, np.ndarray], None] | None = None,
              max_steps: int = 2_000_000) -> IntegrationResult:
    """Evolve interior states U0 (n, N+2) to t_end; returns the final states.

    The time discretization follows the spatial order unless method is given
    explicitly. Topography comes from the grid and is never modified. Raises
    DryStateError with position and time when any depth reaches zero.
    """
    if method is None:
        method = "euler" if order == 1 else "ssprk2"
    stepper = TimeStepper(method=method, cfl=cfl, t_end=t_end)
    if diag is None:
        diag = new_diagnostics()
    n, m = grid.n, model.ncomp
    W = pad_state(np.array(U0, dtype=float), grid)
    t = 0.0
    steps = 0
    interior = slice(2, n + 2)

    def _checked_rhs(Wp: np.ndarray) -> np.ndarray:
        try:
            return semidiscrete_rhs(Wp, grid, model, order, wb=wb, diag=diag)
        except DryStateError as e:
            x = grid.centers[e.cell] if e.cell >= 0 else np.nan
            raise DryStateError(f"{e} (x = {x:.6g}, t = {t:.6g})", cell=e.cell) from None

    while t < t_end - 1e-14 * max(1.0, t_end):
        dt = compute_dt(model, W[interior, :m], grid.dx, stepper.cfl)
        dt = min(dt, t_end - t)
        R1 = _checked_rhs(W)
        if stepper.method == "euler":
            W[interior, :m] += dt * R1
        else:
            W1 = W.copy()
            W1[interior, :m] += dt * R1
            sync_ghosts(W1)
            R2 = _checked_rhs(W1)
            W[interior, :m] = 0.5 * W[interior, :m] + 0.5 * (W1[interior, :m] + dt * R2)
        sync_ghosts(W)
        t += dt
        steps += 1
        h = W[interior, 0]
        if np.any(h <= 0.0) or not np.all(np.isfinite(h)):
            bad = int(np.argmin(np.where(np.isfinite(h), h, -np.inf)))
            raise DryStateError(
                f"nonpositive depth h = {h[bad]:.6e} at x = {grid.centers[bad]:.6g}, "
                f"t = {t:.6g}", cell=bad)
        if on_step is not None:
            on_step(t, dt, W)
        if steps >= max_steps:
            raise RuntimeError(f"exceeded {max_steps} steps at t = {t:.6g} < {t_end}")
    return IntegrationResult(U=W[interior, :m].copy(), t=t, steps=steps,
                             diagnostics=diag)
