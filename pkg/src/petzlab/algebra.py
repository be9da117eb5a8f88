"""Tracial matrix algebras, matrix functions and (weighted) Schatten norms.

Elements of ``M_n`` are plain ``(n, n)`` complex numpy arrays. The trace is
normalized, ``tau = Tr / n``, so ``tau(I) = 1`` and a state is a positive
``A`` with ``tau(A) = 1`` (that is ``A = n * rho`` for a density matrix rho).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "TracialMatrixAlgebra",
    "ReferenceDensity",
    "as_reference",
    "tau",
    "hs_inner",
    "weighted_inner",
    "schatten_p_norm",
    "weighted_p_norm",
    "herm_eig",
    "matrix_function",
    "is_state",
    "check_state",
    "to_density_matrix",
    "from_density_matrix",
    "random_state",
    "random_reference",
    "TOL_HERM",
    "TOL_TRACE",
]

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD_REL = 1e-10
TOL_PD_REL = 1e-8


@dataclass(frozen=True)
class TracialMatrixAlgebra:
    """The full matrix algebra ``M_n`` with normalized trace ``Tr / n``."""

    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dim}")

    @property
    def trace_weight(self) -> float:
        return 1.0 / self.dim

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def unit(self, i: int, j: int) -> np.ndarray:
        e = np.zeros((self.dim, self.dim), dtype=complex)
        e[i, j] = 1.0
        return e

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return x.shape == (self.dim, self.dim) and bool(np.all(np.isfinite(x)))

    def element(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape != (self.dim, self.dim):
            raise ValueError(f"expected a {self.dim}x{self.dim} matrix, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("matrix has non-finite entries")
        return x


def _square(x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("matrix has non-finite entries")
    return x


def _same_algebra(x, y):
    if x.shape != y.shape:
        raise ValueError(f"elements live in different algebras: {x.shape} vs {y.shape}")


def tau(x) -> complex:
    """Normalized trace ``Tr(x) / n``."""
    x = _square(x)
    return np.trace(x) / x.shape[0]


def hs_inner(x, y) -> complex:
    """``tau(y^* x)``; linear in ``x``, conjugate linear in ``y``."""
    x, y = _square(x), _square(y)
    _same_algebra(x, y)
    return np.vdot(y, x) / x.shape[0]


# --------------------------------------------------------------------------
# spectral calculus
# --------------------------------------------------------------------------

def herm_eig(x):
    """Eigen-decomposition of the Hermitian part of ``x``.

    Returns ascending eigenvalues and a unitary whose columns are the
    eigenvectors, so that ``x ~= U @ diag(w) @ U^*``.
    """
    x = _square(x)
    h = 0.5 * (x + x.conj().T)
    w, u = np.linalg.eigh(h)
    return w, u


def _check_hermitian(x, tol=TOL_HERM):
    scale = max(1.0, np.linalg.norm(x))
    if np.linalg.norm(x - x.conj().T) > tol * scale:
        raise ValueError("matrix is not Hermitian")


def _clamped_eig(x, tol_psd_rel=TOL_PSD_REL):
    _check_hermitian(x)
    w, u = herm_eig(x)
    wmax = max(abs(w[-1]), abs(w[0]), np.finfo(float).tiny)
    if w[0] < -tol_psd_rel * wmax:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    return np.clip(w, 0.0, None), u


def _reassemble(w, u):
    return (u * w) @ u.conj().T


def matrix_function(x, f, t=None):
    """Apply a scalar function to a matrix through its spectrum.

    ``f`` is one of ``"sqrt"``, ``"inv_sqrt"``, ``"power"`` (needs ``t``) or
    ``"abs"``. Square roots and non-integer powers need a PSD input; tiny
    negative eigenvalues are clamped to zero first. ``"abs"`` is
    ``(x^* x)^{1/2}`` and works for any square matrix.
    """
    x = _square(np.asarray(x, dtype=complex))
    if f == "abs":
        _, s, vh = np.linalg.svd(x)
        v = vh.conj().T
        return _reassemble(s, v)
    if f == "sqrt":
        w, u = _clamped_eig(x)
        return _reassemble(np.sqrt(w), u)
    if f == "inv_sqrt":
        return matrix_function(x, "power", -0.5)
    if f == "power":
        if t is None:
            raise ValueError("power needs an exponent t")
        if float(t).is_integer() and t >= 0:
            _check_hermitian(x)
            w, u = herm_eig(x)
            return _reassemble(w ** int(t), u)
        w, u = _clamped_eig(x)
        if t < 0:
            if w[0] <= TOL_PD_REL * w[-1] or w[0] <= 0:
                raise ValueError("negative power of a singular matrix")
            return _reassemble(w ** t, u)
        return _reassemble(w ** t, u)
    raise ValueError(f"unknown matrix function {f!r}")


# --------------------------------------------------------------------------
# states and reference densities
# --------------------------------------------------------------------------

def is_state(a, tol_herm=TOL_HERM, tol_trace=TOL_TRACE, tol_psd_rel=TOL_PSD_REL) -> bool:
    try:
        check_state(a, tol_herm, tol_trace, tol_psd_rel)
    except ValueError:
        return False
    return True


def check_state(a, tol_herm=TOL_HERM, tol_trace=TOL_TRACE, tol_psd_rel=TOL_PSD_REL):
    """Raise ``ValueError`` unless ``a`` is positive with ``tau(a) = 1``."""
    a = _square(np.asarray(a, dtype=complex))
    _check_hermitian(a, tol_herm)
    w, _ = herm_eig(a)
    if w[0] < -tol_psd_rel * max(abs(w[-1]), 1.0):
        raise ValueError(f"state has negative eigenvalue {w[0]:.3e}")
    t = tau(a)
    if abs(t - 1.0) > tol_trace:
        raise ValueError(f"state has tau = {t:.12g}, expected 1")
    return a


def to_density_matrix(a) -> np.ndarray:
    """Convert a tau-normalized state to a unit-trace density matrix."""
    a = _square(a)
    return a / a.shape[0]


def from_density_matrix(rho) -> np.ndarray:
    rho = _square(rho)
    return rho * rho.shape[0]


class ReferenceDensity:
    """A strictly positive ``B`` with ``tau(B) = 1``, with cached powers.

    The eigen-decomposition is computed once; ``power(t)`` reuses it, which
    keeps ``B^{1/4}`` and ``B^{-1/4}`` exactly inverse up to rounding.
    """

    def __init__(self, matrix, tol_trace=TOL_TRACE, tol_pd_rel=TOL_PD_REL):
        m = _square(np.asarray(matrix, dtype=complex))
        _check_hermitian(m)
        w, u = herm_eig(m)
        if w[0] < tol_pd_rel * w[-1] or w[0] <= 0:
            raise ValueError(
                f"reference density is not strictly positive (eigenvalues {w[0]:.3e}..{w[-1]:.3e})"
            )
        if abs(np.mean(w) - 1.0) > tol_trace:
            raise ValueError(f"reference density has tau = {np.mean(w):.12g}, expected 1")
        self.matrix = _reassemble(w, u)
        self.eigenvalues = w
        self.eigenvectors = u
        self.matrix.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def condition_number(self) -> float:
        return float(self.eigenvalues[-1] / self.eigenvalues[0])

    def power(self, t: float) -> np.ndarray:
        return self._power(float(t))

    @lru_cache(maxsize=None)
    def _power(self, t):
        p = _reassemble(self.eigenvalues ** t, self.eigenvectors)
        p.flags.writeable = False
        return p

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __repr__(self):
        return f"ReferenceDensity(dim={self.dim}, cond={self.condition_number:.3g})"


def as_reference(b) -> ReferenceDensity:
    return b if isinstance(b, ReferenceDensity) else ReferenceDensity(b)


def weighted_inner(x, y, b) -> complex:
    """``<x, y>_B = tau(B^{-1/2} y^* B^{-1/2} x)``."""
    b = as_reference(b)
    x, y = _square(x), _square(y)
    _same_algebra(x, y)
    _same_algebra(x, b.matrix)
    bi = b.power(-0.5)
    return np.trace(bi @ y.conj().T @ bi @ x) / x.shape[0]


# --------------------------------------------------------------------------
# norms
# --------------------------------------------------------------------------

def _conjugate_exponent(p):
    if p == 1:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _check_p(p):
    p = float(p)
    if not p >= 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    return p


def schatten_p_norm(x, p) -> float:
    """``tau(|x|^p)^{1/p}``; ``p = inf`` gives the operator norm."""
    p = _check_p(p)
    x = _square(x)
    s = np.linalg.svd(x, compute_uv=False)
    if np.isinf(p):
        return float(s[0]) if s.size else 0.0
    if p == 1:
        return float(np.mean(s))
    smax = s[0]
    if smax == 0:
        return 0.0
    # scale out the largest singular value to avoid overflow for large p
    return float(smax * np.mean((s / smax) ** p) ** (1.0 / p))


def weighted_p_norm(x, b, p) -> float:
    """``||B^{-1/(2q)} x B^{-1/(2q)}||_p`` with ``1/p + 1/q = 1``.

    At ``p = 1`` the weight disappears; at ``p = inf`` this is
    ``||B^{-1/2} x B^{-1/2}||_inf``.
    """
    p = _check_p(p)
    b = as_reference(b)
    x = _square(x)
    _same_algebra(x, b.matrix)
    if p == 1:
        return schatten_p_norm(x, 1)
    s = -0.5 / _conjugate_exponent(p)
    w = b.power(s)
    return schatten_p_norm(w @ x @ w, p)


# --------------------------------------------------------------------------
# random generation
# --------------------------------------------------------------------------

def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _ginibre(rng, n, m=None):
    m = n if m is None else m
    return (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2)


def random_state(algebra, seed=None, rank=None) -> np.ndarray:
    """Random state ``G G^* / tau(G G^*)`` from a complex Ginibre matrix."""
    n = algebra.dim if isinstance(algebra, TracialMatrixAlgebra) else int(algebra)
    rng = _rng(seed)
    g = _ginibre(rng, n, n if rank is None else rank)
    a = g @ g.conj().T
    a = 0.5 * (a + a.conj().T)
    return a / tau(a).real


def random_reference(algebra, seed=None, cond_cap=100.0) -> ReferenceDensity:
    """Random strictly positive ``B`` with ``tau(B) = 1`` and cond(B) <= cond_cap.

    Eigenvalues are drawn log-uniformly in ``[1, cond_cap]`` and placed in a
    Haar-random eigenbasis.
    """
    if cond_cap < 1:
        raise ValueError("cond_cap must be >= 1")
    n = algebra.dim if isinstance(algebra, TracialMatrixAlgebra) else int(algebra)
    rng = _rng(seed)
    w = np.exp(rng.uniform(0.0, np.log(cond_cap), size=n))
    q, r = np.linalg.qr(_ginibre(rng, n))
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    b = _reassemble(w, q)
    b = 0.5 * (b + b.conj().T)
    return ReferenceDensity(b / tau(b).real)
