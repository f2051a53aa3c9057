"""Smooth steady states, critical depths, and moment jump relations.

Away from shocks a steady solution of any of the moment closures carries
invariants

    C1     = h u_m
    C2     = u_m^2 / 2 + g (h + b) + (3/2) sum_i alpha_i^2 / (2i+1)
    C_i+2  = alpha_i / h,    i = 1..N

so the depth along a steady profile solves the quartic

    f(h) = D h^4 + 2 g h^3 + 2 h^2 (g b - C2) + C1^2 = 0,
    D    = 3 sum_i C_{i+2}^2 / (2i+1),

which has at most one root below the critical depth (supercritical branch)
and one above it (subcritical branch). This module provides the constants,
a vectorized safeguarded-Newton depth solver with closed-form fast paths,
regime classification, and the Rankine-Hugoniot jump family for moment
dam breaks.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Callable

import numpy as np

from .models import DRY_TOL, StateVector, _conserved, _moment_weights, _s2

__all__ = [
    "FlowRegime",
    "SteadyStatus",
    "SteadyConstants",
    "NoSteadyState",
    "constants_from_state",
    "constants_batch",
    "critical_height",
    "steady_height_at",
    "evaluate_steady_state",
    "solve_heights",
    "classify_regime",
    "classify_super_batch",
    "rh_jump",
]

SONIC_RTOL = 1e-9      # |f(h_c)| below this (times scale) counts as critical flow
NEWTON_RTOL = 1e-15    # residual target of the depth solve
REGIME_TOL = 1e-12     # |u| - c ties within this go to Subcritical


class FlowRegime(Enum):
    SUBCRITICAL = "subcritical"
    SUPERCRITICAL = "supercritical"


class SteadyStatus(IntEnum):
    OK = 0
    SONIC = 1        # the branch root collapsed onto the critical depth
    NO_STEADY = 2    # f has no positive root: constants admit no steady depth


class NoSteadyState(Exception):
    """Raised when steady constants admit no depth on the requested branch."""

    def __init__(self, message: str, h_crit: float = np.nan, residual: float = np.nan):
        super().__init__(message)
        self.h_crit = h_crit
        self.residual = residual


@dataclass(frozen=True)
class SteadyConstants:
    """Invariants (C1, C2, C_3..C_{N+2}) of a smooth steady profile, plus gravity."""

    c1: float
    c2: float
    cm: np.ndarray
    g: float

    def __post_init__(self):
        object.__setattr__(self, "cm", np.atleast_1d(np.asarray(self.cm, dtype=float)))

    @property
    def N(self) -> int:
        return len(self.cm)

    @property
    def D(self) -> float:
        """Quartic coefficient 3 sum C_{i+2}^2 / (2i+1)."""
        if self.N == 0:
            return 0.0
        return float(3.0 * (self.cm ** 2 @ _moment_weights(self.N)))


def constants_from_state(U, g: float, b: float | None = None) -> SteadyConstants:
    """Steady invariants of one state over topography height b."""
    if b is None:
        b = U.b if isinstance(U, StateVector) else 0.0
    W = _conserved(U)
    h = W[0]
    u = W[1] / h
    al = W[2:] / h
    c2 = 0.5 * u ** 2 + g * (h + b) + 1.5 * float(_s2(al))
    return SteadyConstants(c1=float(W[1]), c2=c2, cm=al / h, g=g)


def constants_batch(W: np.ndarray, b: np.ndarray, g: float):
    """Batched invariants: arrays c1, c2 (n,), cm (n, N), D (n,)."""
    h = W[:, 0]
    u = W[:, 1] / h
    al = W[:, 2:] / h[:, None]
    c1 = W[:, 1].copy()
    c2 = 0.5 * u ** 2 + g * (h + b) + 1.5 * _s2(al)
    cm = al / h[:, None]
    N = al.shape[1]
    D = 3.0 * (cm ** 2 @ _moment_weights(N)) if N else np.zeros(len(h))
    return c1, c2, cm, D


# ---------------------------------------------------------------------------
# depth solve
# ---------------------------------------------------------------------------

def _f(h, D, q, g, c1sq):
    return D * h ** 4 + 2.0 * g * h ** 3 + 2.0 * h ** 2 * q + c1sq

def _fp(h, D, q, g):
    return 4.0 * D * h ** 3 + 6.0 * g * h ** 2 + 4.0 * h * q


def _critical_depth(D, q, g):
    """Positive root of f' (the depth of minimal f), nan when there is none."""
    with np.errstate(invalid="ignore", divide="ignore"):
        disc = 9.0 * g ** 2 - 16.0 * D * q
        hc = np.where(D > 0.0,
                      (-3.0 * g + np.sqrt(np.maximum(disc, 0.0))) / (4.0 * D),
                      -2.0 * q / (3.0 * g))
    hc = np.where(disc < 0.0, np.nan, hc)
    return hc


def solve_heights(c1, c2, quartic, b, g, supercritical,
                  sonic_rtol: float = SONIC_RTOL):
    """Vectorized steady-depth solve.

    Parameters are broadcast to a common shape: c1, c2 the first two
    invariants, quartic the coefficient D of the depth polynomial, b the
    topography height, supercritical the requested branch per element.

    Returns (h, status, h_crit, f_crit) arrays in the broadcast shape. status
    values follow SteadyStatus; h is the critical depth for SONIC entries and
    unspecified for NO_STEADY entries.
    """
    c1, c2, D, b, sup = np.broadcast_arrays(
        np.asarray(c1, dtype=float), np.asarray(c2, dtype=float),
        np.asarray(quartic, dtype=float), np.asarray(b, dtype=float),
        np.asarray(supercritical, dtype=bool))
    shape = c1.shape
    c1, c2, D, b, sup = (np.ravel(a) for a in (c1, c2, D, b, sup))
    n = len(c1)
    h = np.full(n, np.nan)
    status = np.full(n, SteadyStatus.OK, dtype=np.int64)
    q = g * b - c2
    c1sq = c1 ** 2

    rest = c1 == 0.0
    lake = rest & (D == 0.0)
    if np.any(lake):
        # still water with zero moments: flat surface h + b = C2 / g
        hl = c2[lake] / g - b[lake]
        h[lake] = hl
        status[lake] = np.where(hl > DRY_TOL, SteadyStatus.OK, SteadyStatus.NO_STEADY)
    still = rest & (D != 0.0)
    if np.any(still):
        # still water with moments: positive root of D h^2 + 2 g h + 2 q
        disc = g ** 2 - 2.0 * D[still] * q[still]
        ok = disc >= 0.0
        root = np.where(ok, (-g + np.sqrt(np.maximum(disc, 0.0))) / D[still], np.nan)
        good = ok & (root > DRY_TOL)
        h[still] = root
        status[still] = np.where(good, SteadyStatus.OK, SteadyStatus.NO_STEADY)

    gen = ~rest
    hc_all = np.full(n, np.nan)
    fc_all = np.full(n, np.nan)
    if np.any(gen):
        hc = _critical_depth(D[gen], q[gen], g)
        valid = np.isfinite(hc) & (hc > 0.0)
        fc = np.where(valid, _f(np.where(valid, hc, 1.0), D[gen], q[gen], g, c1sq[gen]), c1sq[gen])
        scale = c1sq[gen] + np.where(
            valid,
            2.0 * g * hc ** 3 + 2.0 * hc ** 2 * np.abs(q[gen]) + D[gen] * hc ** 4,
            0.0)
        hc_all[gen] = hc
        fc_all[gen] = fc
        sonic = valid & (np.abs(fc) <= sonic_rtol * scale)
        failed = ~valid | (~sonic & (fc > 0.0))
        newton = gen.copy()
        newton[gen] &= ~(sonic | failed)
        idx_g = np.where(gen)[0]
        h[idx_g[sonic]] = hc[sonic]
        status[idx_g[sonic]] = SteadyStatus.SONIC
        status[idx_g[failed]] = SteadyStatus.NO_STEADY
        if np.any(newton):
            hn = _newton_branch(c1sq[newton], D[newton], q[newton], g,
                                c2[newton], hc_all[newton], sup[newton])
            h[newton] = hn

    return (h.reshape(shape), status.reshape(shape),
            hc_all.reshape(shape), fc_all.reshape(shape))


def _newton_branch(c1sq, D, q, g, c2, hc, sup):
    """Safeguarded Newton on the branch bracket, all arrays, f(hc) < 0 assured."""
    n = len(c1sq)
    lo = np.where(sup, 0.0, hc)
    hi = np.where(sup, hc, 2.0 * hc + np.cbrt(c1sq / (2.0 * g)) + np.abs(c2) / g)
    # expand the subcritical upper end until f >= 0 there
    need = ~sup & (_f(hi, D, q, g, c1sq) < 0.0)
    for _ in range(200):
        if not np.any(need):
            break
        hi[need] *= 2.0
        need &= _f(hi, D, q, g, c1sq) < 0.0

    with np.errstate(invalid="ignore", divide="ignore"):
        start_sup = np.where(D > 0.0,
                             (-3.0 * g + np.sqrt(np.maximum(9.0 * g ** 2 - 12.0 * D * q, 0.0)))
                             / (6.0 * D),
                             -q / (3.0 * g))
    start_sub = 2.0 * hc + np.abs(c1sq) ** (1.0 / 3.0) / g ** (1.0 / 3.0)
    h = np.where(sup, start_sup, start_sub)
    pad = 1e-3 * (hi - lo)
    h = np.clip(h, lo + pad, hi - pad)

    scale = c1sq + 2.0 * g * hc ** 3 + 2.0 * hc ** 2 * np.abs(q) + D * hc ** 4
    left_sign = np.where(sup, 1.0, -1.0)
    active = np.ones(n, dtype=bool)
    eps = np.finfo(float).eps
    for _ in range(100):
        fh = _f(h, D, q, g, c1sq)
        conv = np.abs(fh) <= NEWTON_RTOL * scale
        active &= ~conv
        if not np.any(active):
            break
        go_right = active & (fh * left_sign > 0.0)
        go_left = active & ~go_right
        lo[go_right] = h[go_right]
        hi[go_left] = h[go_left]
        fp = _fp(h, D, q, g)
        with np.errstate(invalid="ignore", divide="ignore"):
            step = np.where(fp != 0.0, fh / fp, np.inf)
        cand = h - step
        inside = (cand > lo) & (cand < hi)
        h_new = np.where(inside, cand, 0.5 * (lo + hi))
        stalled = np.abs(h_new - h) <= 4.0 * eps * np.abs(h)
        h = np.where(active, h_new, h)
        active &= ~stalled
        if not np.any(active):
            break
    return h


def critical_height(C: SteadyConstants, b: float) -> float:
    """Depth of minimal f for given constants and topography height."""
    hc = _critical_depth(np.array([C.D]), np.array([C.g * b - C.c2]), C.g)
    hc = float(hc[0])
    if not np.isfinite(hc) or hc <= 0.0:
        raise NoSteadyState(
            f"constants (C1={C.c1}, C2={C.c2}) admit no critical depth over b={b}",
            residual=C.c1 ** 2)
    return hc


def steady_height_at(C: SteadyConstants, b: float, regime: FlowRegime) -> float:
    """Depth of the steady profile with constants C at topography height b."""
    h, st, hc, fc = solve_heights(C.c1, C.c2, C.D, b,
                                  C.g, regime is FlowRegime.SUPERCRITICAL)
    st = SteadyStatus(int(st))
    if st is SteadyStatus.NO_STEADY:
        raise NoSteadyState(
            f"no steady depth over b={b}: min_h f = {float(fc):.6e} at "
            f"h_crit = {float(hc):.6g}",
            h_crit=float(hc), residual=float(fc))
    return float(h)


def evaluate_steady_state(C: SteadyConstants, x: float,
                          topography: Callable[[float], float],
                          regime: FlowRegime) -> StateVector:
    """Steady state at position x over the given topography function."""
    b = float(topography(x))
    h = steady_height_at(C, b, regime)
    return StateVector(h=h, hu=C.c1, halpha=C.cm * h * h, b=b)


# ---------------------------------------------------------------------------
# regime classification
# ---------------------------------------------------------------------------

def classify_super_batch(h: np.ndarray, u: np.ndarray, al: np.ndarray,
                         g: float) -> np.ndarray:
    """True where |u_m| exceeds the slow/fast wave speed c = sqrt(gh + 3 s2')."""
    c = np.sqrt(g * h + 3.0 * _s2(al))
    return np.abs(u) > c + REGIME_TOL * np.maximum(1.0, c)


def classify_regime(U, g: float) -> FlowRegime:
    """Regime of one state; ties within REGIME_TOL go to Subcritical."""
    W = _conserved(U)
    h = W[0]
    u = W[1] / h
    al = W[2:] / h
    if classify_super_batch(np.array([h]), np.array([u]), al[None, :], g)[0]:
        return FlowRegime.SUPERCRITICAL
    return FlowRegime.SUBCRITICAL


# ---------------------------------------------------------------------------
# jump relations
# ---------------------------------------------------------------------------

def _cubic_real_roots(a: float, b: float, c: float, d: float) -> np.ndarray:
    """Real roots of a y^3 + b y^2 + c y + d, a != 0, by the closed form."""
    B, C, D = b / a, c / a, d / a
    p = C - B ** 2 / 3.0
    q = 2.0 * B ** 3 / 27.0 - B * C / 3.0 + D
    scale = max(abs(p), abs(q), 1e-300)
    if max(abs(p), abs(q)) <= 1e-300:
        t = np.zeros(3)
    else:
        disc = -4.0 * p ** 3 - 27.0 * q ** 2
        if disc >= -1e-14 * scale ** 3 and p < 0.0:
            # three real roots (or a near-double root): trigonometric form
            m = 2.0 * np.sqrt(-p / 3.0)
            arg = np.clip(3.0 * q / (p * m), -1.0, 1.0)
            theta = np.arccos(arg) / 3.0
            t = m * np.cos(theta - 2.0 * np.pi * np.arange(3) / 3.0)
        else:
            # one real root: Cardano, arranged to avoid cancellation
            rad = np.sqrt(max(q ** 2 / 4.0 + p ** 3 / 27.0, 0.0))
            s = np.cbrt(-q / 2.0 - np.sign(q) * rad)
            t = np.array([s - p / (3.0 * s) if s != 0.0 else 0.0])
    y = t - B / 3.0
    # two Newton polish sweeps on the original coefficients
    for _ in range(2):
        fy = ((a * y + b) * y + c) * y + d
        fpy = (3.0 * a * y + 2.0 * b) * y + c
        y = np.where(fpy != 0.0, y - fy / fpy, y)
    return np.unique(y)


def rh_jump(h0: float, u0: float, alpha0, g: float) -> tuple[np.ndarray, bool]:
    """Downstream depths admitted by the jump conditions at a moment dam front.

    For an upstream state (h0, u0, alpha0) the depth ratios y = h/h0 solve

        Ma^2 Fr^2 y^3 + (1/2 + Ma^2 Fr^2) y^2 + (1/2 + Ma^2 Fr^2) y - Fr^2 = 0

    with Fr^2 = u0^2 / (g h0) and Ma^2 = sum_i (alpha_i0 / u0)^2 / (2i+1).
    Returns (heights, degenerate): h0 itself plus h0 times every positive real
    root, ascending. A resting state with nonzero moments has no meaningful
    Froude scaling; it is flagged degenerate and only h0 is returned.
    """
    if h0 <= DRY_TOL:
        raise ValueError(f"jump relations need h0 > 0, got {h0}")
    alpha0 = np.atleast_1d(np.asarray(alpha0, dtype=float))
    if u0 == 0.0:
        return np.array([h0]), bool(np.any(alpha0 != 0.0))
    fr2 = u0 ** 2 / (g * h0)
    ma2 = float(_s2(alpha0 / u0))
    if ma2 == 0.0:
        y = np.array([(-1.0 + np.sqrt(1.0 + 8.0 * fr2)) / 2.0])
    else:
        a = ma2 * fr2
        y = _cubic_real_roots(a, 0.5 + a, 0.5 + a, -fr2)
    y = y[y > 1e-13]
    heights = np.sort(np.concatenate([[h0], h0 * y]))
    return heights, False
