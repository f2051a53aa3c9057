"""Scaled Legendre basis on [0, 1]: evaluation, moment tensors, profile projection.

The basis functions are phi_j(zeta) = (1/j!) d^j/dzeta^j (zeta - zeta^2)^j,
which are the Legendre polynomials shifted to [0, 1] (up to the classical
normalization phi_j(0) = 1). They satisfy

    int_0^1 phi_m phi_n dzeta = delta_mn / (2n + 1).

All polynomial coefficients are integers and are generated exactly, so basis
evaluation is a plain Horner sweep over a precomputed table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

__all__ = [
    "BasisSet",
    "MomentTensors",
    "make_basis",
    "eval_phi",
    "compute_moment_tensors",
    "project_profile",
    "friction_source",
    "friction_coupling",
]


def _phi_coefficients(j: int) -> np.ndarray:
    """Monomial coefficients of phi_j, ascending order. Exact integers for j <= 20."""
    coeffs = np.zeros(j + 1)
    for k in range(j + 1):
        num = (-1) ** k * math.comb(j, k) * math.factorial(j + k)
        den = math.factorial(k) * math.factorial(j)
        coeffs[k] = num // den  # always divides exactly
    return coeffs


@dataclass(frozen=True)
class BasisSet:
    """Basis of order N: phi_0 .. phi_N plus a Gauss-Legendre rule on [0, 1].

    The quadrature degree is chosen exact for triple products of basis
    polynomials (degree 3N), which is what the moment tensors need.
    """

    N: int
    coefficients: tuple[np.ndarray, ...]
    nodes: np.ndarray
    weights: np.ndarray

    def eval(self, j: int, zeta) -> np.ndarray | float:
        return eval_phi(self, j, zeta)


def make_basis(N: int) -> BasisSet:
    """Build a BasisSet of order N (N >= 0 non-constant functions phi_1..phi_N)."""
    if N < 0:
        raise ValueError(f"basis order must be >= 0, got {N}")
    n_nodes = math.ceil((3 * N + 2) / 2) + 1
    x, w = leggauss(n_nodes)
    # map from [-1, 1] to [0, 1]
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    coeffs = tuple(_phi_coefficients(j) for j in range(N + 1))
    return BasisSet(N=N, coefficients=coeffs, nodes=nodes, weights=weights)


def eval_phi(basis: BasisSet, j: int, zeta):
    """Evaluate phi_j at zeta (scalar or array), zeta in [0, 1]."""
    if not 0 <= j <= basis.N:
        raise IndexError(f"basis index {j} out of range 0..{basis.N}")
    c = basis.coefficients[j]
    z = np.asarray(zeta, dtype=float)
    out = np.full_like(z, c[-1])
    for ck in c[-2::-1]:
        out = out * z + ck
    if np.ndim(zeta) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class MomentTensors:
    """Closed-form coupling tensors of the moment system.

    A[i, j, k] = (2i+1) int phi_i phi_j phi_k
    B[i, j, k] = (2i+1) int phi_i' (int_0^zeta phi_j) phi_k
    C[i, j]    = int phi_i' phi_j'

    Arrays are indexed directly by basis index (0..N); the model equations only
    use indices 1..N. A is symmetric in (j, k) and C vanishes for odd i+j.
    """

    N: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray


def _poly_table(basis: BasisSet, transform: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Evaluate transformed basis polynomials at the quadrature nodes, shape (N+1, q)."""
    rows = []
    for c in basis.coefficients:
        tc = transform(c)
        z = basis.nodes
        out = np.full_like(z, tc[-1] if len(tc) else 0.0)
        for ck in tc[-2::-1]:
            out = out * z + ck
        rows.append(out)
    return np.array(rows)


def _derivative(c: np.ndarray) -> np.ndarray:
    if len(c) == 1:
        return np.zeros(1)
    return c[1:] * np.arange(1, len(c))


def _antiderivative(c: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], c / np.arange(1, len(c) + 1)])


def compute_moment_tensors(basis: BasisSet) -> MomentTensors:
    """Fill A, B, C by Gauss-Legendre quadrature exact for the involved degrees."""
    P = _poly_table(basis, lambda c: c)
    dP = _poly_table(basis, _derivative)
    iP = _poly_table(basis, _antiderivative)
    w = basis.weights
    pref = 2.0 * np.arange(basis.N + 1) + 1.0
    A = np.einsum("q,iq,jq,kq->ijk", w, P, P, P) * pref[:, None, None]
    B = np.einsum("q,iq,jq,kq->ijk", w, dP, iP, P) * pref[:, None, None]
    C = np.einsum("q,iq,jq->ij", w, dP, dP)
    return MomentTensors(N=basis.N, A=A, B=B, C=C)


def project_profile(u0: Callable[[float], float], basis: BasisSet,
                    tol: float = 1e-12) -> tuple[float, np.ndarray]:
    """Project a velocity profile u0(zeta) onto the basis.

    Returns (u_m, alpha) with u_m = int_0^1 u0 and
    alpha_i = (2i+1) int_0^1 u0 phi_i, i = 1..N, computed with adaptive
    quadrature so that non-polynomial profiles (sqrt(zeta) and friends) come
    out to ~1e-12.

    Raises RuntimeError when the quadrature error estimate exceeds tol.
    """
    moments = np.empty(basis.N + 1)
    for i in range(basis.N + 1):
        val, err = quad(lambda z: u0(z) * eval_phi(basis, i, z), 0.0, 1.0,
                        epsabs=1e-13, epsrel=1e-13, limit=200)
        if err > tol * (1.0 + abs(val)):
            raise RuntimeError(
                f"profile projection did not converge for moment {i}: "
                f"achieved tolerance {err:.3e} > {tol:.1e}")
        moments[i] = val
    u_m = moments[0]
    alpha = (2.0 * np.arange(1, basis.N + 1) + 1.0) * moments[1:]
    return u_m, alpha


def friction_coupling(i: int, j: int) -> float:
    """Coupling weight a_ij of the Newtonian friction closure.

    Nonzero only for even i+j (parity of Legendre derivatives), where it
    equals min(i,j)(min(i,j)+1)/2, i.e. one quarter of C[i, j].
    """
    if (i + j) % 2 != 0:
        return 0.0
    m = min(i, j)
    return 0.5 * m * (m + 1)


def friction_source(U: Sequence[float] | np.ndarray, nu: float, lam: float) -> np.ndarray:
    """Newtonian slip-law friction source for a conserved state (h, hu, halpha...).

    Component 0 (mass) is zero; component i+1 for i = 0..N is
    -(nu/lam)(2i+1)(u_m + sum_j alpha_j) - (nu/h) 4 (2i+1) sum_j a_ij alpha_j,
    the momentum row being the i = 0 case. With nu = 0 the source vanishes,
    which is how every bundled scenario runs.
    """
    U = np.asarray(U, dtype=float)
    h = U[0]
    if h <= 0.0:
        raise ValueError(f"friction_source needs h > 0, got h = {h}")
    if lam <= 0.0:
        raise ValueError(f"slip length must be positive, got {lam}")
    N = len(U) - 2
    P = np.zeros(N + 2)
    if nu == 0.0:
        return P
    u = U[1] / h
    alpha = U[2:] / h
    total = u + alpha.sum()
    for i in range(N + 1):
        couple = sum(friction_coupling(i, j) * alpha[j - 1] for j in range(1, N + 1))
        P[i + 1] = -(nu / lam) * (2 * i + 1) * total - (nu / h) * 4.0 * (2 * i + 1) * couple
    return P
