"""Well-balanced path-conservative finite-volume scheme.

The semidiscrete update of cell i reads

    dW_i/dt = -(D+_{i-1/2} + D-_{i+1/2}) / dx - [A(W_i) sigma_U,i - S(W_i) sigma_b,i]

with PVM(0,1) (HLL-type) fluctuations

    D+- = 1/2 [ F(U_r) - F(U_l) + B ΔU - S Δb +- Q (ΔU - A^{-1} S Δb) ],
    Q   = a0 I + a1 A,

everything evaluated at a Roe-type interface linearization A = J + B. States
at interfaces come either from a steady-state reconstruction (well-balanced
mode: each cell extends its own steady invariants to neighbor centers and
interfaces, limits the residuals, and the scheme then sees exact steady data
as constant) or from a plain componentwise reconstruction (baseline mode,
where the topography jump Δb at interfaces carries the source).

Cell arrays are padded with two ghost cells per side holding copies of the
nearest interior cell; the last column of the padded array carries the
topography value b.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .models import (Model, ModelKind, ROE_KINDS, StateVector, _conserved,
                     _s2, b_matrix_prim_batch, flux_batch,
                     jacobian_prim_batch, system_matrix_batch)
from .steady import classify_super_batch, constants_batch, solve_heights, SteadyStatus

__all__ = [
    "Grid",
    "RoeData",
    "DryStateError",
    "new_diagnostics",
    "sync_ghosts",
    "pad_state",
    "minmod",
    "roe_averages",
    "pvm_hll_fluctuations",
    "wb_reconstruct",
    "baseline_reconstruct",
    "semidiscrete_rhs",
]

CUBIC_DISC_RTOL = 1e-12    # tolerated negative discriminant before eigvals fallback
RESONANCE_RTOL = 1e-12     # |denom| below this (times scale) counts as resonant
MU_DEGENERATE_RTOL = 1e-13  # |mu| below this (times speed scale) takes the limit form
SEGMENT_GL_RTOL = 1e-2     # |dh| below this (times mean h) switches the path
                           # average to quadrature, dodging log cancellation

_GL5_NODES, _GL5_WEIGHTS = leggauss(5)
_GL5_NODES = 0.5 * (_GL5_NODES + 1.0)
_GL5_WEIGHTS = 0.5 * _GL5_WEIGHTS


class DryStateError(RuntimeError):
    """Water depth dropped to or below zero somewhere."""

    def __init__(self, message: str, cell: int = -1):
        super().__init__(message)
        self.cell = cell


def new_diagnostics() -> dict:
    """Fresh counter set filled in by reconstruction and flux assembly."""
    return {
        "steady_fallback_cells": 0,
        "sonic_interface_evals": 0,
        "cubic_fallbacks": 0,
        "complex_interface_spectra": 0,
        "resonant_interfaces": 0,
        "dense_solve_fallbacks": 0,
    }


@dataclass(frozen=True)
class Grid:
    """Uniform 1D mesh with an optional topography function b(x).

    topography is a vectorized callable on x arrays; None means flat bottom.
    """

    x_min: float
    x_max: float
    n: int
    topography: Callable | None = None

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"grid needs at least 3 cells, got {self.n}")
        if not self.x_max > self.x_min:
            raise ValueError("grid needs x_max > x_min")

    @cached_property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @cached_property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n) + 0.5) * self.dx

    @cached_property
    def interfaces(self) -> np.ndarray:
        return self.x_min + np.arange(self.n + 1) * self.dx

    def _b(self, x: np.ndarray) -> np.ndarray:
        if self.topography is None:
            return np.zeros_like(x)
        return np.asarray(self.topography(x), dtype=float)

    @cached_property
    def b_centers(self) -> np.ndarray:
        return self._b(self.centers)

    @cached_property
    def b_interfaces(self) -> np.ndarray:
        return self._b(self.interfaces)


def pad_state(U: np.ndarray, grid: Grid) -> np.ndarray:
    """Augment interior conserved states (n, m) with the b column and ghosts."""
    n, m = U.shape
    if n != grid.n:
        raise ValueError(f"state has {n} rows, grid has {grid.n} cells")
    W = np.empty((n + 4, m + 1))
    W[2:n + 2, :m] = U
    W[2:n + 2, m] = grid.b_centers
    sync_ghosts(W)
    return W


def sync_ghosts(W: np.ndarray) -> np.ndarray:
    """Copy the nearest interior cell into the two ghost cells on each side."""
    W[0] = W[2]
    W[1] = W[2]
    W[-1] = W[-3]
    W[-2] = W[-3]
    return W


def minmod(a, b, c):
    """Componentwise three-argument minmod; zero unless all arguments agree in sign."""
    a, b, c = np.broadcast_arrays(a, b, c)
    lo = np.minimum(np.minimum(a, b), c)
    hi = np.maximum(np.maximum(a, b), c)
    return np.where(lo > 0.0, lo, np.where(hi < 0.0, hi, 0.0))


# ---------------------------------------------------------------------------
# interface linearization
# ---------------------------------------------------------------------------

def _segment_mean_ratio(p_l, p_r, h_l, h_r):
    """int_0^1 p(s)/h(s) ds with p, h linear between the two ends.

    The closed form carries a log difference that cancels catastrophically
    for nearly equal depths; below SEGMENT_GL_RTOL relative depth jump a
    5-point Gauss rule on the rational integrand is exact to rounding and
    takes over.
    """
    dp = p_r - p_l
    dh = h_r - h_l
    hbar = 0.5 * (h_l + h_r)
    small = np.abs(dh) <= SEGMENT_GL_RTOL * hbar
    dh_safe = np.where(dh == 0.0, 1.0, dh)
    with np.errstate(invalid="ignore", divide="ignore"):
        log_val = dp / dh_safe + (p_l * dh - dp * h_l) / dh_safe ** 2 * np.log(h_r / h_l)
    quad_val = np.zeros_like(dp)
    for s, w in zip(_GL5_NODES, _GL5_WEIGHTS):
        quad_val += w * (p_l + s * dp) / (h_l + s * dh)
    return np.where(small, quad_val, log_val)


def _roe_primitives(model: Model, Ul: np.ndarray, Ur: np.ndarray):
    """Roe-averaged primitives plus the path-averaged transport coefficients."""
    hl, hr = Ul[:, 0], Ur[:, 0]
    ul, ur = Ul[:, 1] / hl, Ur[:, 1] / hr
    all_, alr = Ul[:, 2:] / hl[:, None], Ur[:, 2:] / hr[:, None]
    sl, sr = np.sqrt(hl), np.sqrt(hr)
    hR = 0.5 * (hl + hr)
    uR = (sl * ul + sr * ur) / (sl + sr)
    den = (sl * hr + sr * hl)[:, None]
    alR = (sl[:, None] * hr[:, None] * alr + sr[:, None] * hl[:, None] * all_) / den
    u_mb = _segment_mean_ratio(Ul[:, 1], Ur[:, 1], hl, hr)
    a1b = None
    if model.kind in (ModelKind.HSWME, ModelKind.BETA_HSWME):
        a1b = _segment_mean_ratio(Ul[:, 2], Ur[:, 2], hl, hr)
    return hR, uR, alR, u_mb, a1b


def _interface_matrices(model: Model, hR, uR, alR, u_mb, a1b):
    J = jacobian_prim_batch(model, hR, uR, alR)
    al_adv = alR
    if a1b is not None:
        al_adv = alR.copy()
        al_adv[:, 0] = a1b
    B = b_matrix_prim_batch(model, u_mb, al_adv)
    return J + B, B


@dataclass(frozen=True)
class RoeData:
    """Interface linearization: averaged primitives and assembled matrices."""

    h: float
    u: float
    alpha: np.ndarray
    u_trans: float
    alpha1_trans: float | None
    A: np.ndarray
    B: np.ndarray
    S: np.ndarray


def roe_averages(model: Model, U_l, U_r) -> RoeData:
    """Roe-type linearization of one interface.

    Satisfies A (U_r - U_l) = F(U_r) - F(U_l) + B (U_r - U_l) to rounding.
    Only swe/swme1/swlme/hswme/betahswme admit one; the quadratic closures
    of the full hierarchy do not, and raise.
    """
    if model.kind not in ROE_KINDS:
        raise ValueError(
            f"model {model.kind.value} has no Roe-type interface linearization; "
            "only swe, swme1, swlme, hswme and betahswme do")
    Ul = _conserved(U_l)[None, :]
    Ur = _conserved(U_r)[None, :]
    hR, uR, alR, u_mb, a1b = _roe_primitives(model, Ul, Ur)
    A, B = _interface_matrices(model, hR, uR, alR, u_mb, a1b)
    S = np.zeros(model.ncomp)
    S[1] = -model.g * hR[0]
    return RoeData(h=float(hR[0]), u=float(uR[0]), alpha=alR[0],
                   u_trans=float(u_mb[0]),
                   alpha1_trans=None if a1b is None else float(a1b[0]),
                   A=A[0], B=B[0], S=S)


def _interface_speeds(model: Model, hR, uR, alR, u_mb, A, diag):
    """Lower/upper wave speed bounds S_l, S_r of the interface matrices."""
    g, N = model.g, model.N
    if model.kind in (ModelKind.HSWME, ModelKind.BETA_HSWME):
        lam = np.linalg.eigvals(A)
        bad = np.abs(lam.imag) > 1e-10 * (1.0 + np.abs(lam.real))
        if np.any(bad) and diag is not None:
            diag["complex_interface_spectra"] += int(np.any(bad, axis=1).sum())
        return lam.real.min(axis=1), lam.real.max(axis=1)
    if N == 0:
        c = np.sqrt(g * hR)
        return uR - c, uR + c
    s2 = _s2(alR)
    mu = 2.0 * uR - u_mb
    K = g * hR - s2
    L = 4.0 * s2
    p = -(mu + 2.0 * uR)
    q = 2.0 * uR * mu + uR ** 2 - K - L
    r = L * uR - mu * (uR ** 2 - K)
    P = q - p ** 2 / 3.0
    Q = 2.0 * p ** 3 / 27.0 - p * q / 3.0 + r
    sc = np.maximum(np.abs(P) ** 1.5, np.abs(Q))
    disc = -4.0 * P ** 3 - 27.0 * Q ** 2
    bad = disc < -CUBIC_DISC_RTOL * np.maximum(sc, 1e-300) ** 2
    m2 = 2.0 * np.sqrt(np.maximum(-P, 0.0) / 3.0)
    denom3 = 2.0 * (np.maximum(-P, 0.0) / 3.0) ** 1.5
    cos3 = np.where(denom3 > 0.0, -Q / np.where(denom3 > 0.0, denom3, 1.0), 1.0)
    phi = np.arccos(np.clip(cos3, -1.0, 1.0))
    t_max = m2 * np.cos(phi / 3.0)
    t_min = m2 * np.cos((phi + 2.0 * np.pi) / 3.0)
    s_lo = t_min - p / 3.0
    s_hi = t_max - p / 3.0
    if N >= 2:
        s_lo = np.minimum(s_lo, mu)
        s_hi = np.maximum(s_hi, mu)
    if np.any(bad):
        if diag is not None:
            diag["cubic_fallbacks"] += int(bad.sum())
        lam = np.linalg.eigvals(A[bad]).real
        s_lo = s_lo.copy()
        s_hi = s_hi.copy()
        s_lo[bad] = lam.min(axis=1)
        s_hi[bad] = lam.max(axis=1)
    return s_lo, s_hi


def _topography_correction(model: Model, hR, uR, alR, u_mb, A, diag):
    """x = A^{-1} S per interface, shape (n, m): closed form where available."""
    g, m = model.g, model.ncomp
    n = len(hR)
    x = np.zeros((n, m))
    if model.kind in (ModelKind.SWE, ModelKind.SWME1, ModelKind.SWLME):
        s2 = _s2(alR) if model.N else np.zeros(n)
        mu = 2.0 * uR - u_mb
        gh = g * hR
        speed = np.abs(uR) + np.sqrt(gh + 3.0 * s2)
        us2 = uR * s2
        limit = (np.abs(mu) <= MU_DEGENERATE_RTOL * speed) & (us2 != 0.0)
        mu_safe = np.where(mu == 0.0, 1.0, mu)
        corr = np.where(us2 != 0.0, 4.0 * us2 / mu_safe, 0.0)
        denom = gh - uR ** 2 - s2 + corr
        scale = gh + uR ** 2 + s2 + np.abs(corr)
        resonant = ~limit & (np.abs(denom) <= RESONANCE_RTOL * scale)
        denom_safe = np.where(denom == 0.0, 1.0, denom)
        us2_safe = np.where(us2 == 0.0, 1.0, us2)
        xh = np.where(limit, -gh * mu / (4.0 * us2_safe), -gh / denom_safe)
        x[:, 0] = xh
        if model.N:
            s2_safe = np.where(s2 == 0.0, 1.0, s2)
            num = 2.0 * uR[:, None] * alR
            xm_reg = np.where(num == 0.0, 0.0, num * xh[:, None] / mu_safe[:, None])
            xm_lim = -gh[:, None] * alR / (2.0 * s2_safe[:, None])
            x[:, 2:] = np.where(limit[:, None], xm_lim, xm_reg)
        if np.any(resonant):
            x[resonant] = 0.0
            if diag is not None:
                diag["resonant_interfaces"] += int(resonant.sum())
        return x
    # hswme / betahswme: dense solves
    S = np.zeros((n, m))
    S[:, 1] = -g * hR
    try:
        return np.linalg.solve(A, S[..., None])[..., 0]
    except np.linalg.LinAlgError:
        pass
    for k in range(n):
        try:
            x[k] = np.linalg.solve(A[k], S[k])
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(A[k], S[k], rcond=None)
            if np.linalg.norm(A[k] @ sol - S[k]) <= 1e-8 * np.linalg.norm(S[k]):
                x[k] = sol
            else:
                x[k] = 0.0
                if diag is not None:
                    diag["resonant_interfaces"] += 1
        if diag is not None:
            diag["dense_solve_fallbacks"] += 1
    return x


def _pvm_batch(model: Model, Ul, Ur, bl, br, diag):
    """HLL-type fluctuations D-, D+ for batches of interface states."""
    if model.kind not in ROE_KINDS:
        raise ValueError(
            f"model {model.kind.value} has no Roe-type interface linearization; "
            "only swe, swme1, swlme, hswme and betahswme do")
    dU = Ur - Ul
    db = br - bl
    hR, uR, alR, u_mb, a1b = _roe_primitives(model, Ul, Ur)
    A, B = _interface_matrices(model, hR, uR, alR, u_mb, a1b)
    Fl = flux_batch(model, Ul)
    Fr = flux_batch(model, Ur)
    base = Fr - Fl + np.einsum("nij,nj->ni", B, dU)
    base[:, 1] += model.g * hR * db  # minus S db with S = (0, -g hR, 0, ...)
    s_lo, s_hi = _interface_speeds(model, hR, uR, alR, u_mb, A, diag)
    width = s_hi - s_lo
    degenerate = width <= 1e-14 * np.maximum(1.0, np.abs(s_lo) + np.abs(s_hi))
    width_safe = np.where(degenerate, 1.0, width)
    a0 = np.where(degenerate, np.abs(s_hi),
                  (s_hi * np.abs(s_lo) - s_lo * np.abs(s_hi)) / width_safe)
    a1 = np.where(degenerate, 0.0, (np.abs(s_hi) - np.abs(s_lo)) / width_safe)
    y = dU
    if np.any(db != 0.0):
        active = db != 0.0
        x = np.zeros_like(dU)
        sub = _topography_correction(
            model, hR[active], uR[active], alR[active], u_mb[active],
            A[active], diag)
        x[active] = sub
        y = dU - x * db[:, None]
    Qy = a0[:, None] * y + a1[:, None] * np.einsum("nij,nj->ni", A, y)
    Dm = 0.5 * (base - Qy)
    Dp = 0.5 * (base + Qy)
    return Dm, Dp


def pvm_hll_fluctuations(model: Model, U_l, U_r, b_l: float = 0.0,
                         b_r: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Fluctuations (D-, D+) of one interface with given side topography values."""
    Ul = _conserved(U_l)[None, :]
    Ur = _conserved(U_r)[None, :]
    Dm, Dp = _pvm_batch(model, Ul, Ur, np.array([b_l]), np.array([b_r]), None)
    return Dm[0], Dp[0]


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------

def _transcritical_branches(sup: np.ndarray, idx: np.ndarray):
    """Branch (supercritical?) used for each interior cell's left/right targets.

    A cell whose two neighbors disagree in regime is transcritical; its
    one-sided steady evaluations borrow the regime of the neighbor on that
    side, unless that neighbor is itself transcritical, in which case the
    cell keeps its own regime (this pins the sonic point to the crest).
    """
    tc = np.zeros(len(sup), dtype=bool)
    tc[1:-1] = sup[:-2] != sup[2:]
    br_l = np.where(tc[idx] & ~tc[idx - 1], sup[idx - 1], sup[idx])
    br_r = np.where(tc[idx] & ~tc[idx + 1], sup[idx + 1], sup[idx])
    return br_l, br_r


def wb_reconstruct(W: np.ndarray, grid: Grid, model: Model, order: int,
                   diag: dict | None = None):
    """Steady-state based reconstruction of interface values.

    Returns (wl, wr, sigma): augmented left/right states at the n+1
    interfaces and, for order 2, the limited slopes of the interior cells
    (n, m+1); sigma is None for order 1.

    Each interior cell extends its own steady invariants to its two
    interfaces (at the analytic topography value) and, for order 2, to the
    two neighbor centers (at their stored topography values, so the
    comparison residuals V have exactly zero topography component). Cells
    whose invariants admit no steady depth at some target fall back to
    constant extension, which reactivates the interface topography jumps.
    """
    n, m = grid.n, model.ncomp
    g = model.g
    dx = grid.dx
    h_all = W[:, 0]
    u_all = W[:, 1] / h_all
    al_all = W[:, 2:m] / h_all[:, None]
    b_all = W[:, m]
    sup = classify_super_batch(h_all, u_all, al_all, g)
    idx = np.arange(2, n + 2)
    br_l, br_r = _transcritical_branches(sup, idx)
    c1, c2, cm, D = constants_batch(W[idx, :m], b_all[idx], g)

    b_if = grid.b_interfaces
    targets = [b_if[:n], b_if[1:]]          # left interface, right interface
    branches = [br_l, br_r]
    if order == 2:
        targets += [b_all[idx - 1], b_all[idx + 1]]   # neighbor centers
        branches += [br_l, br_r]
    k = len(targets)
    tb = np.concatenate(targets)
    tbr = np.concatenate(branches)
    hs, status, _, _ = solve_heights(np.tile(c1, k), np.tile(c2, k),
                                     np.tile(D, k), tb, g, tbr)
    status = status.reshape(k, n)
    hs = hs.reshape(k, n)
    if diag is not None:
        diag["sonic_interface_evals"] += int((status == SteadyStatus.SONIC).sum())
    fallback = np.any(status == SteadyStatus.NO_STEADY, axis=0)
    if diag is not None and np.any(fallback):
        diag["steady_fallback_cells"] += int(fallback.sum())

    # steady extensions as augmented states, one block per target set
    ext = np.empty((k, n, m + 1))
    ext[:, :, 0] = hs
    ext[:, :, 1] = c1
    ext[:, :, 2:m] = cm[None, :, :] * (hs ** 2)[:, :, None]
    ext[:, :, m] = tb.reshape(k, n)
    if np.any(fallback):
        ext[:, fallback, :] = W[idx[fallback]][None, :, :]

    if order == 1:
        left_edge = ext[0]
        right_edge = ext[1]
        sigma = None
    else:
        Vm = W[idx - 1] - ext[2]
        Vp = W[idx + 1] - ext[3]
        sigma = minmod(-Vm / dx, (Vp - Vm) / (2.0 * dx), Vp / dx)
        left_edge = ext[0] - sigma * (0.5 * dx)
        right_edge = ext[1] + sigma * (0.5 * dx)

    wl = np.empty((n + 1, m + 1))
    wr = np.empty((n + 1, m + 1))
    wl[0] = W[1]
    wl[1:] = right_edge
    wr[n] = W[n + 2]
    wr[:n] = left_edge
    return wl, wr, sigma


def baseline_reconstruct(W: np.ndarray, grid: Grid, model: Model, order: int):
    """Componentwise reconstruction (not well-balanced), b treated like any field."""
    n, m = grid.n, model.ncomp
    dx = grid.dx
    idx = np.arange(2, n + 2)
    if order == 1:
        sigma = None
        left_edge = W[idx]
        right_edge = W[idx]
    else:
        dm = (W[idx] - W[idx - 1]) / dx
        dp = (W[idx + 1] - W[idx]) / dx
        dc = (W[idx + 1] - W[idx - 1]) / (2.0 * dx)
        sigma = minmod(dm, dc, dp)
        left_edge = W[idx] - sigma * (0.5 * dx)
        right_edge = W[idx] + sigma * (0.5 * dx)
    wl = np.empty((n + 1, m + 1))
    wr = np.empty((n + 1, m + 1))
    wl[0] = W[1]
    wl[1:] = right_edge
    wr[n] = W[n + 2]
    wr[:n] = left_edge
    return wl, wr, sigma


# ---------------------------------------------------------------------------
# semidiscrete operator
# ---------------------------------------------------------------------------

def semidiscrete_rhs(W: np.ndarray, grid: Grid, model: Model, order: int,
                     wb: bool = True, diag: dict | None = None) -> np.ndarray:
    """Right-hand side dU/dt of the interior cells, shape (n, N+2).

    W is the padded augmented array (n+4, N+3) with ghosts already synced
    (see pad_state / sync_ghosts); it is not modified. order is 1 or 2 and
    selects both the reconstruction and the presence of the volume term.
    """
    n, m = grid.n, model.ncomp
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if W.shape != (n + 4, m + 1):
        raise ValueError(f"padded state has shape {W.shape}, want {(n + 4, m + 1)}")
    h_int = W[2:n + 2, 0]
    if np.any(h_int <= 0.0) or not np.all(np.isfinite(h_int)):
        bad = int(np.argmin(np.where(np.isfinite(h_int), h_int, -np.inf)))
        raise DryStateError(
            f"nonpositive or non-finite depth h = {h_int[bad]:.6e} in cell {bad}",
            cell=bad)
    if wb:
        wl, wr, sigma = wb_reconstruct(W, grid, model, order, diag)
    else:
        wl, wr, sigma = baseline_reconstruct(W, grid, model, order)
    Dm, Dp = _pvm_batch(model, wl[:, :m], wr[:, :m], wl[:, m], wr[:, m], diag)
    dWdt = -(Dp[:-1] + Dm[1:]) / grid.dx
    if order == 2:
        A = system_matrix_batch(model, W[2:n + 2, :m])
        vol = np.einsum("nij,nj->ni", A, sigma[:, :m])
        vol[:, 1] += model.g * h_int * sigma[:, m]  # minus S sigma_b
        dWdt -= vol
    return dWdt
