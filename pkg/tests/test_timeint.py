"""Time integration: step control, Runge-Kutta combinators, full loop behavior."""

import numpy as np
import pytest

from swme_lab import (DryStateError, Grid, StateVector, TimeStepper,
                      compute_dt, euler_step, integrate, make_model,
                      ssprk2_step)

G = 9.812


# ============================================================
# Step control
# ============================================================

def test_stepper_validation():
    TimeStepper(method="euler", cfl=0.5, t_end=1.0)
    with pytest.raises(ValueError, match="unknown method"):
        TimeStepper(method="rk4", cfl=0.5, t_end=1.0)
    with pytest.raises(ValueError, match="cfl"):
        TimeStepper(method="euler", cfl=0.0, t_end=1.0)
    with pytest.raises(ValueError, match="cfl"):
        TimeStepper(method="euler", cfl=1.5, t_end=1.0)
    with pytest.raises(ValueError, match="t_end"):
        TimeStepper(method="euler", cfl=0.5, t_end=-1.0)


def test_compute_dt_literal():
    # two cells: speeds |u| + sqrt(g h); the faster one sets the step
    model = make_model("swe", g=1.0)
    U = np.array([[1.0, 0.0],    # speed 1
                  [4.0, 4.0]])   # u = 1, c = 2: speed 3
    dt = compute_dt(model, U, dx=0.3, cfl=0.5)
    assert dt == pytest.approx(0.5 * 0.3 / 3.0, rel=1e-14)


def test_compute_dt_zero_speed_fallback():
    # a rest state of the pressureless-degenerate kind: max |lambda| can be 0
    # only if g h were 0, so emulate via a tiny-alpha swlme state with u = 0
    model = make_model("swe", g=4.0)
    U = np.array([[1.0, 0.0]])
    # speeds are sqrt(g h) = 2 here, no fallback; force the fallback branch
    # by checking the documented formula against a hand call
    from swme_lab.timeint import compute_dt as cd
    dt = cd(model, U, dx=1.0, cfl=0.5)
    assert dt == pytest.approx(0.5 / 2.0, rel=1e-14)


# ============================================================
# Runge-Kutta combinators on scalar ODEs
# ============================================================

def test_euler_step_linear_ode():
    y = euler_step(np.array([1.0]), 0.1, lambda y: -2.0 * y)
    assert y[0] == pytest.approx(0.8, abs=1e-15)


def test_ssprk2_step_matches_heun():
    f = lambda y: -2.0 * y
    y0 = np.array([1.0])
    y1 = y0 + 0.1 * f(y0)
    expect = 0.5 * y0 + 0.5 * (y1 + 0.1 * f(y1))
    assert ssprk2_step(y0, 0.1, f)[0] == pytest.approx(expect[0], abs=1e-16)


def test_ssprk2_is_second_order_on_smooth_ode():
    # y' = y, y(0) = 1, integrate to t = 1; halving dt must quarter the error
    def solve(nsteps):
        y = np.array([1.0])
        dt = 1.0 / nsteps
        for _ in range(nsteps):
            y = ssprk2_step(y, dt, lambda v: v)
        return abs(y[0] - np.e)

    e1, e2, e3 = solve(50), solve(100), solve(200)
    assert e1 / e2 == pytest.approx(4.0, rel=0.1)
    assert e2 / e3 == pytest.approx(4.0, rel=0.05)


def test_ssprk2_preserves_total_variation_on_upwind_advection():
    # convex-combination structure: TV never grows for monotone schemes
    n = 80
    dx = 1.0 / n
    u0 = np.where(np.arange(n) < n // 2, 1.0, 0.0) + \
        0.1 * np.sin(np.linspace(0.0, 6.0 * np.pi, n))

    def upwind(v):
        return -(v - np.roll(v, 1)) / dx

    def tv(v):
        # periodic total variation, wrap-around jump included
        return np.abs(np.diff(v)).sum() + abs(v[0] - v[-1])

    v = u0.copy()
    dt = 0.4 * dx
    bound = tv(v)
    for _ in range(100):
        v = ssprk2_step(v, dt, upwind)
        assert tv(v) <= bound + 1e-12
        bound = tv(v)


# ============================================================
# Full loop
# ============================================================

def test_integrate_lands_exactly_on_t_end():
    grid = Grid(0.0, 1.0, 12)
    model = make_model("swe", g=G)
    U0 = np.tile([1.0, 0.3], (12, 1))
    res = integrate(U0, grid, model, t_end=0.0371, cfl=0.5, order=1)
    assert res.t == pytest.approx(0.0371, abs=1e-15)
    assert res.steps > 0


def test_integrate_zero_time_returns_input():
    grid = Grid(0.0, 1.0, 8)
    model = make_model("swlme", N=1, g=G)
    U0 = np.tile([1.0, 0.2, 0.05], (8, 1))
    res = integrate(U0, grid, model, t_end=0.0)
    assert res.steps == 0
    assert np.all(res.U == U0)


def test_integrate_constant_state_stays_constant():
    grid = Grid(0.0, 1.0, 10)
    model = make_model("swlme", N=2, g=G)
    U0 = np.tile([2.0, 1.0, 0.4, -0.2], (10, 1))
    res = integrate(U0, grid, model, t_end=0.05, order=2)
    assert np.allclose(res.U, U0, atol=1e-13)


def test_integrate_conserves_mass_on_flat_bottom():
    grid = Grid(0.0, 1.0, 40)
    model = make_model("swlme", N=1, g=G)
    x = grid.centers
    U0 = np.zeros((40, 3))
    U0[:, 0] = 1.0 + 0.3 * np.exp(-((x - 0.5) / 0.07) ** 2)
    res = integrate(U0, grid, model, t_end=0.02, order=2, wb=True)
    assert res.U[:, 0].sum() * grid.dx == pytest.approx(
        U0[:, 0].sum() * grid.dx, abs=1e-12)


def test_integrate_respects_explicit_method_override():
    grid = Grid(0.0, 1.0, 10)
    model = make_model("swe", g=G)
    U0 = np.tile([1.0, 0.1], (10, 1))
    r_default = integrate(U0, grid, model, t_end=0.01, order=2)
    r_euler = integrate(U0, grid, model, t_end=0.01, order=2, method="euler")
    assert r_default.steps == r_euler.steps  # same dt logic either way


def test_integrate_reports_dry_position_and_time():
    # strong rarefaction: two streams separating leave a vacuum in the middle
    grid = Grid(0.0, 1.0, 21)
    model = make_model("swe", g=G)
    U0 = np.zeros((21, 2))
    U0[:, 0] = 0.05
    U0[:, 1] = np.where(grid.centers < 0.5, -2.0, 2.0) * 0.05
    with pytest.raises(DryStateError, match=r"x = .*t = "):
        integrate(U0, grid, model, t_end=1.0, order=1, wb=False)


def test_integrate_step_cap():
    grid = Grid(0.0, 1.0, 8)
    model = make_model("swe", g=G)
    U0 = np.tile([1.0, 0.5], (8, 1))
    with pytest.raises(RuntimeError, match="exceeded"):
        integrate(U0, grid, model, t_end=10.0, max_steps=3)


def test_integrate_on_step_callback_sees_monotone_time():
    grid = Grid(0.0, 1.0, 8)
    model = make_model("swe", g=G)
    U0 = np.tile([1.0, 0.5], (8, 1))
    times = []
    res = integrate(U0, grid, model, t_end=0.02,
                    on_step=lambda t, dt, W: times.append(t))
    assert len(times) == res.steps
    assert np.all(np.diff(times) > 0.0)
    assert times[-1] == pytest.approx(res.t, abs=0.0)
