"""Moment closures of shallow free-surface flow over topography.

All models share the conserved layout U = (h, hu_m, h alpha_1, ..., h alpha_N)
and the quasilinear form

    dU/dt + dF(U)/dx + B(U) dU/dx = S(U) db/dx,      S = (0, -g h, 0, ..., 0)

so a model is the triple (F, B, S) plus whatever eigenstructure is known in
closed form. Supported closures:

  swe        classical shallow water, N = 0
  swme1      one-moment hierarchy member (coincides with swlme at N = 1)
  swme2      two-moment hierarchy member, loses hyperbolicity in parts of
             moment space
  swme       general hierarchy member, coupling tensors built at runtime
  swlme      linearized closure, provably hyperbolic with analytic
             eigenvalues and eigenvectors for every N
  hswme      regularization keeping only alpha_1 in flux and transport
  betahswme  hswme with one extra subdiagonal transport entry

The module exposes scalar-state operations (flux, system_matrix, eigenvalues,
...) and batched variants used by the solver, which take arrays of shape
(n, N+2) and return stacked results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

from .basis import MomentTensors, compute_moment_tensors, make_basis

__all__ = [
    "ModelKind",
    "Model",
    "StateVector",
    "make_model",
    "flux",
    "flux_jacobian",
    "nonconservative_matrix",
    "system_matrix",
    "topography_source",
    "eigenvalues",
    "eigenvalues_swlme",
    "eigenvectors_swlme",
    "max_wave_speed",
    "is_hyperbolic",
    "hyperbolicity_scan",
    "DRY_TOL",
    "IMAG_TOL",
]

DRY_TOL = 1e-12    # states with h <= DRY_TOL are rejected as dry
IMAG_TOL = 1e-10   # |Im| > IMAG_TOL * (1 + |Re|) counts as genuinely complex


class ModelKind(str, Enum):
    SWE = "swe"
    SWME1 = "swme1"
    SWME2 = "swme2"
    SWME_GENERAL = "swme"
    SWLME = "swlme"
    HSWME = "hswme"
    BETA_HSWME = "betahswme"


# kinds whose eigenvalues are known in closed form: u_m +- sqrt(g h + 3 s2')
# and u_m with multiplicity N, where s2' = sum alpha_i^2 / (2i+1)
_ANALYTIC_KINDS = frozenset({ModelKind.SWE, ModelKind.SWME1, ModelKind.SWLME})

# kinds with a Roe-type interface linearization (see scheme.roe_averages)
ROE_KINDS = frozenset(
    {ModelKind.SWE, ModelKind.SWME1, ModelKind.SWLME,
     ModelKind.HSWME, ModelKind.BETA_HSWME})


@dataclass(frozen=True)
class Model:
    """A moment closure: kind, number of moments N, gravity, coupling tensors."""

    kind: ModelKind
    N: int
    g: float
    tensors: MomentTensors | None = None

    @property
    def ncomp(self) -> int:
        return self.N + 2


def make_model(kind: ModelKind | str, N: int | None = None, g: float = 9.812) -> Model:
    """Validate (kind, N, g) and build a Model, with coupling tensors if needed."""
    kind = ModelKind(str(kind).lower())
    fixed = {ModelKind.SWE: 0, ModelKind.SWME1: 1, ModelKind.SWME2: 2}
    if kind in fixed:
        if N is None:
            N = fixed[kind]
        elif N != fixed[kind]:
            raise ValueError(f"model {kind.value} has N = {fixed[kind]}, got N = {N}")
    else:
        if N is None:
            raise ValueError(f"model {kind.value} needs an explicit moment count N")
        min_n = 0 if kind is ModelKind.SWLME else 1
        if N < min_n:
            raise ValueError(f"model {kind.value} needs N >= {min_n}, got N = {N}")
    if g <= 0.0:
        raise ValueError(f"gravity must be positive, got g = {g}")
    tensors = None
    if kind is ModelKind.SWME_GENERAL:
        tensors = compute_moment_tensors(make_basis(N))
    return Model(kind=kind, N=int(N), g=float(g), tensors=tensors)


@dataclass(frozen=True)
class StateVector:
    """One cell state: water depth h, momentum hu, moment densities h alpha_i."""

    h: float
    hu: float
    halpha: np.ndarray
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "halpha", np.atleast_1d(np.asarray(self.halpha, dtype=float)))
        vals = np.concatenate([[self.h, self.hu, self.b], self.halpha])
        if not np.all(np.isfinite(vals)):
            raise ValueError("state has non-finite components")
        if self.h <= DRY_TOL:
            raise ValueError(f"dry state: h = {self.h} <= {DRY_TOL}")

    @property
    def N(self) -> int:
        return len(self.halpha)

    @property
    def u(self) -> float:
        return self.hu / self.h

    @property
    def alpha(self) -> np.ndarray:
        return self.halpha / self.h

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.h, self.hu], self.halpha])

    @classmethod
    def from_primitives(cls, h: float, u: float, alpha: Iterable[float] = (),
                        b: float = 0.0) -> "StateVector":
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        return cls(h=h, hu=h * u, halpha=h * alpha, b=b)

    @classmethod
    def from_array(cls, U, b: float = 0.0) -> "StateVector":
        U = np.asarray(U, dtype=float)
        return cls(h=U[0], hu=U[1], halpha=U[2:].copy(), b=b)


def _conserved(U) -> np.ndarray:
    if isinstance(U, StateVector):
        return U.as_array()
    return np.asarray(U, dtype=float)


def _split(W: np.ndarray):
    """Primitive fields of a batch W with shape (n, N+2): h, u, alpha."""
    h = W[:, 0]
    u = W[:, 1] / h
    al = W[:, 2:] / h[:, None]
    return h, u, al


def _moment_weights(N: int) -> np.ndarray:
    """1 / (2i + 1) for i = 1..N."""
    return 1.0 / (2.0 * np.arange(1, N + 1) + 1.0)


def _s2(al: np.ndarray) -> np.ndarray:
    """sum_i alpha_i^2 / (2i+1) along the last axis."""
    N = al.shape[-1]
    if N == 0:
        return np.zeros(al.shape[:-1])
    return al ** 2 @ _moment_weights(N)


# ---------------------------------------------------------------------------
# flux
# ---------------------------------------------------------------------------

def flux_batch(model: Model, W: np.ndarray) -> np.ndarray:
    """Physical flux for a batch of conserved states, shape (n, N+2)."""
    h, u, al = _split(W)
    g, N = model.g, model.N
    F = np.empty_like(W)
    F[:, 0] = W[:, 1]
    kind = model.kind
    if kind in (ModelKind.HSWME, ModelKind.BETA_HSWME):
        a1 = al[:, 0]
        F[:, 1] = h * u ** 2 + 0.5 * g * h ** 2 + h * a1 ** 2 / 3.0
        F[:, 2] = 2.0 * h * u * a1
        if N >= 2:
            F[:, 3] = (2.0 / 3.0) * h * a1 ** 2
            F[:, 4:] = 0.0
        return F
    F[:, 1] = h * u ** 2 + 0.5 * g * h ** 2 + h * _s2(al)
    if N == 0:
        return F
    F[:, 2:] = 2.0 * h[:, None] * u[:, None] * al
    if kind is ModelKind.SWLME:
        return F
    if kind is ModelKind.SWME1:
        return F  # A_111 = 0, no quadratic correction
    if kind is ModelKind.SWME2:
        a1, a2 = al[:, 0], al[:, 1]
        F[:, 2] += h * (4.0 / 5.0) * a1 * a2
        F[:, 3] += h * ((2.0 / 3.0) * a1 ** 2 + (2.0 / 7.0) * a2 ** 2)
        return F
    # general hierarchy member: quadratic coupling through A_ijk
    A = model.tensors.A[1:, 1:, 1:]
    F[:, 2:] += h[:, None] * np.einsum("ijk,nj,nk->ni", A, al, al)
    return F


def flux(model: Model, U) -> np.ndarray:
    """Physical flux F(U) of one state."""
    return flux_batch(model, _conserved(U)[None, :])[0]


# ---------------------------------------------------------------------------
# quasilinear matrices
# ---------------------------------------------------------------------------

def jacobian_prim_batch(model: Model, h: np.ndarray, u: np.ndarray,
                        al: np.ndarray) -> np.ndarray:
    """dF/dU evaluated at given primitive fields, shape (n, N+2, N+2).

    Taking primitives rather than a state batch lets the scheme evaluate the
    Jacobian at averaged quantities that do not come from any single state.
    """
    g, N, m = model.g, model.N, model.ncomp
    n = len(h)
    J = np.zeros((n, m, m))
    J[:, 0, 1] = 1.0
    kind = model.kind
    if kind in (ModelKind.HSWME, ModelKind.BETA_HSWME):
        a1 = al[:, 0]
        J[:, 1, 0] = g * h - u ** 2 - a1 ** 2 / 3.0
        J[:, 1, 1] = 2.0 * u
        J[:, 1, 2] = (2.0 / 3.0) * a1
        J[:, 2, 0] = -2.0 * u * a1
        J[:, 2, 1] = 2.0 * a1
        J[:, 2, 2] = 2.0 * u
        if N >= 2:
            J[:, 3, 0] = -(2.0 / 3.0) * a1 ** 2
            J[:, 3, 2] = (4.0 / 3.0) * a1
        return J
    w = _moment_weights(N) if N else np.zeros(0)
    J[:, 1, 0] = g * h - u ** 2 - _s2(al)
    J[:, 1, 1] = 2.0 * u
    if N:
        J[:, 1, 2:] = 2.0 * al * w
        rng = np.arange(N)
        J[:, rng + 2, 0] = -2.0 * u[:, None] * al
        J[:, rng + 2, 1] = 2.0 * al
        J[:, rng + 2, rng + 2] = 2.0 * u[:, None]
    if kind in (ModelKind.SWE, ModelKind.SWLME, ModelKind.SWME1):
        return J
    if kind is ModelKind.SWME2:
        a1, a2 = al[:, 0], al[:, 1]
        J[:, 2, 0] += -(4.0 / 5.0) * a1 * a2
        J[:, 2, 2] += (4.0 / 5.0) * a2
        J[:, 2, 3] += (4.0 / 5.0) * a1
        J[:, 3, 0] += -((2.0 / 3.0) * a1 ** 2 + (2.0 / 7.0) * a2 ** 2)
        J[:, 3, 2] += (4.0 / 3.0) * a1
        J[:, 3, 3] += (4.0 / 7.0) * a2
        return J
    A = model.tensors.A[1:, 1:, 1:]
    quad = np.einsum("ijk,nj,nk->ni", A, al, al)
    J[:, 2:, 0] -= quad
    J[:, 2:, 2:] += 2.0 * np.einsum("ijk,nk->nij", A, al)
    return J


def b_matrix_prim_batch(model: Model, u: np.ndarray, al: np.ndarray) -> np.ndarray:
    """Nonconservative transport matrix B at given primitive fields.

    Only the moment block is populated. For swlme the block is -u_m I; for
    hswme/betahswme it depends on (u_m, alpha_1) only, which is what allows
    evaluating it at path-averaged coefficients at interfaces.
    """
    N, m = model.N, model.ncomp
    n = len(u)
    B = np.zeros((n, m, m))
    if N == 0:
        return B
    kind = model.kind
    rng = np.arange(N)
    if kind in (ModelKind.SWE, ModelKind.SWLME, ModelKind.SWME1):
        B[:, rng + 2, rng + 2] = -u[:, None]
        return B
    if kind in (ModelKind.HSWME, ModelKind.BETA_HSWME):
        a1 = al[:, 0]
        B[:, 2, 2] = -u
        if N >= 2:
            B[:, rng[1:] + 2, rng[1:] + 2] = u[:, None]
            # super-diagonal (i, i+1), i = 1..N-1: (i+2)/(2i+3) alpha_1
            i = np.arange(1, N)
            B[:, i + 1, i + 2] = ((i + 2) / (2 * i + 3)) * a1[:, None]
            # sub-diagonal (i, i-1), i = 2..N: -alpha_1 at i = 2, then (i-1)/(2i-1)
            B[:, 3, 2] = -a1
            i = np.arange(3, N + 1)
            if len(i):
                B[:, i + 1, i] = ((i - 1) / (2 * i - 1)) * a1[:, None]
            if kind is ModelKind.BETA_HSWME:
                beta = (N ** 2 - N) / (2.0 * N ** 2 + N - 1.0)
                B[:, N + 1, N] += beta * a1
        return B
    if kind is ModelKind.SWME2:
        a1, a2 = al[:, 0], al[:, 1]
        B[:, 2, 2] = -u + a2 / 5.0
        B[:, 2, 3] = -a1 / 5.0
        B[:, 3, 2] = -a1
        B[:, 3, 3] = -u - a2 / 7.0
        return B
    Bt = model.tensors.B[1:, 1:, 1:]
    B[:, rng + 2, rng + 2] = -u[:, None]
    B[:, 2:, 2:] += np.einsum("ijk,nk->nij", Bt, al)
    return B


def system_matrix_batch(model: Model, W: np.ndarray) -> np.ndarray:
    """A(U) = dF/dU + B(U) for a batch of conserved states."""
    h, u, al = _split(W)
    return jacobian_prim_batch(model, h, u, al) + b_matrix_prim_batch(model, u, al)


def flux_jacobian(model: Model, U) -> np.ndarray:
    W = _conserved(U)[None, :]
    h, u, al = _split(W)
    return jacobian_prim_batch(model, h, u, al)[0]


def nonconservative_matrix(model: Model, U) -> np.ndarray:
    W = _conserved(U)[None, :]
    _, u, al = _split(W)
    return b_matrix_prim_batch(model, u, al)[0]


def system_matrix(model: Model, U) -> np.ndarray:
    return system_matrix_batch(model, _conserved(U)[None, :])[0]


def topography_source(model: Model, U) -> np.ndarray:
    """S(U): the topography source is -g h in the momentum slot, zero elsewhere."""
    W = _conserved(U)
    S = np.zeros_like(W)
    S[1] = -model.g * W[0]
    return S


# ---------------------------------------------------------------------------
# eigenstructure
# ---------------------------------------------------------------------------

def _classify_spectrum(lam: np.ndarray) -> np.ndarray:
    """Return a real array when every eigenvalue is real up to IMAG_TOL."""
    if np.all(np.abs(lam.imag) <= IMAG_TOL * (1.0 + np.abs(lam.real))):
        return np.sort(lam.real)
    return lam[np.lexsort((lam.imag, lam.real))]


def eigenvalues_swlme(model: Model, U) -> np.ndarray:
    """Closed-form spectrum u_m - c, u_m (N times), u_m + c of the linearized model."""
    W = _conserved(U)
    h = W[0]
    u = W[1] / h
    al = W[2:] / h
    c = np.sqrt(model.g * h + 3.0 * _s2(al))
    return np.concatenate([[u - c], np.full(model.N, u), [u + c]])


def eigenvalues(model: Model, U) -> np.ndarray:
    """Spectrum of A(U), ascending.

    Uses the closed form for swe/swme1/swlme and dense eigenvalues otherwise.
    Returns a complex array (sorted by real part) when the state is outside
    the hyperbolicity region, a real array otherwise.
    """
    if model.kind in _ANALYTIC_KINDS:
        return np.sort(eigenvalues_swlme(model, U))
    lam = np.linalg.eigvals(system_matrix(model, U))
    return _classify_spectrum(lam)


def eigenvectors_swlme(model: Model, U) -> tuple[np.ndarray, np.ndarray]:
    """Analytic right eigenvectors of the linearized model.

    Returns (lam, R) with R[:, k] the eigenvector for lam[k], ordered
    u_m - c, u_m (N times), u_m + c. The u_m eigenspace is N-dimensional:
    with any nonzero alpha a pivot p = argmax |alpha_i| anchors one vector
    (1, u, w_p) and N-1 vectors (0, 0, w) orthogonal to the constraint row;
    with alpha = 0 the moment unit vectors do the job.
    """
    if model.kind is not ModelKind.SWLME:
        raise ValueError(f"analytic eigenvectors are for swlme, not {model.kind.value}")
    W = _conserved(U)
    g, N, m = model.g, model.N, model.ncomp
    h = W[0]
    u = W[1] / h
    al = W[2:] / h
    s2 = float(_s2(al))
    c = np.sqrt(g * h + 3.0 * s2)
    lam = np.concatenate([[u - c], np.full(N, u), [u + c]])
    R = np.zeros((m, m))
    R[0, 0] = 1.0
    R[1, 0] = u - c
    R[2:, 0] = 2.0 * al
    R[0, -1] = 1.0
    R[1, -1] = u + c
    R[2:, -1] = 2.0 * al
    if N:
        if np.all(al == 0.0):
            R[2:, 1:-1] = np.eye(N)
        else:
            p = int(np.argmax(np.abs(al)))
            bvec = 2.0 * al * _moment_weights(N)
            # anchored vector: row-1 balance needs sum_j b_j w_j = s2 - g h
            R[0, 1] = 1.0
            R[1, 1] = u
            R[2 + p, 1] = (s2 - g * h) / bvec[p]
            col = 2
            for j in range(N):
                if j == p:
                    continue
                R[2 + j, col] = 1.0
                R[2 + p, col] = -bvec[j] / bvec[p]
                col += 1
    R /= np.linalg.norm(R, axis=0)
    return lam, R


def max_speed_batch(model: Model, W: np.ndarray) -> np.ndarray:
    """max |lambda| per state; closed form where available, dense otherwise."""
    h, u, al = _split(W)
    if model.kind in _ANALYTIC_KINDS:
        return np.abs(u) + np.sqrt(model.g * h + 3.0 * _s2(al))
    A = system_matrix_batch(model, W)
    lam = np.linalg.eigvals(A)
    return np.max(np.abs(lam.real), axis=1)


def max_wave_speed(model: Model, U) -> float:
    return float(max_speed_batch(model, _conserved(U)[None, :])[0])


def is_hyperbolic(model: Model, U) -> bool:
    """True when the spectrum of A(U) is real up to IMAG_TOL."""
    lam = eigenvalues(model, U)
    return not np.iscomplexobj(lam)


def hyperbolicity_scan(model: Model, alpha1: np.ndarray, alpha2: np.ndarray,
                       h: float = 1.0, u: float = 0.0) -> np.ndarray:
    """Scan the (alpha_1, alpha_2) plane for real spectra.

    All other moments are zero. Returns a boolean array of shape
    (len(alpha1), len(alpha2)) with entry [i, j] for (alpha1[i], alpha2[j]).
    Needs N >= 2 so both scanned moments exist.
    """
    if model.N < 2:
        raise ValueError("hyperbolicity scan needs a model with N >= 2")
    a1 = np.asarray(alpha1, dtype=float)
    a2 = np.asarray(alpha2, dtype=float)
    A1, A2 = np.meshgrid(a1, a2, indexing="ij")
    n = A1.size
    W = np.zeros((n, model.ncomp))
    W[:, 0] = h
    W[:, 1] = h * u
    W[:, 2] = h * A1.ravel()
    W[:, 3] = h * A2.ravel()
    A = system_matrix_batch(model, W)
    lam = np.linalg.eigvals(A)
    ok = np.all(np.abs(lam.imag) <= IMAG_TOL * (1.0 + np.abs(lam.real)), axis=1)
    return ok.reshape(A1.shape)
