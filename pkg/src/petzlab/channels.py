"""Superoperators between matrix algebras.

A linear map ``phi: M_n -> M_m`` is stored as an ``(m*m, n*n)`` matrix acting
on coordinates in the orthonormal bases ``{sqrt(n) E_ij}`` of
``(M_n, hs_inner)`` and ``{sqrt(m) E_kl}`` of ``(M_m, hs_inner)``. With this
choice the coordinates of ``X`` are ``X.ravel() / sqrt(n)`` and the Hilbert
space adjoint of ``phi`` is simply the conjugate transpose of its matrix.

Trace preservation always refers to the normalized traces, so a Kraus
family ``{K_i}`` defines a channel iff ``sum K_i^* K_i = (m/n) I``.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .algebra import _ginibre, _rng, herm_eig, matrix_function, tau

__all__ = [
    "Superoperator",
    "from_kraus",
    "from_function",
    "identity",
    "conjugation",
    "compose",
    "adjoint",
    "apply",
    "choi_matrix",
    "is_cp",
    "is_tp",
    "is_unital",
    "is_strict",
    "pinching",
    "conditional_expectation_diag",
    "mixed_unitary",
    "random_channel",
    "random_unitary",
    "random_kraus",
    "depolarizing_like",
    "transpose_map",
]

TOL_CP_REL = 1e-9
TOL_TP = 1e-10
TOL_PD_REL = 1e-8


def vec(x) -> np.ndarray:
    x = np.asarray(x)
    return x.reshape(-1) / np.sqrt(x.shape[0])


def unvec(v, dim) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim) * np.sqrt(dim)


class Superoperator:
    """Linear map ``M_source -> M_target`` in the normalized unit bases.

    Verification results (``is_cp``, ``is_tp``, ``is_unital``,
    ``is_strict``) are computed lazily with the default tolerances and
    cached; the module-level functions accept explicit tolerances.
    """

    def __init__(self, matrix, source: int, target: int):
        matrix = np.array(matrix, dtype=complex)
        if matrix.shape != (target * target, source * source):
            raise ValueError(
                f"superoperator matrix for M_{source} -> M_{target} must be "
                f"{target * target}x{source * source}, got {matrix.shape}"
            )
        if not np.all(np.isfinite(matrix)):
            raise ValueError("superoperator matrix has non-finite entries")
        matrix.flags.writeable = False
        self.matrix = matrix
        self.source = int(source)
        self.target = int(target)

    def __call__(self, x) -> np.ndarray:
        return apply(self, x)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return compose(self, other)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        _check_same_shape(self, other)
        return Superoperator(self.matrix - other.matrix, self.source, self.target)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        _check_same_shape(self, other)
        return Superoperator(self.matrix + other.matrix, self.source, self.target)

    def __rmul__(self, c) -> "Superoperator":
        return Superoperator(c * self.matrix, self.source, self.target)

    def __pow__(self, k: int) -> "Superoperator":
        if self.source != self.target:
            raise ValueError("only endomorphisms can be raised to a power")
        return Superoperator(np.linalg.matrix_power(self.matrix, int(k)), self.source, self.target)

    @property
    def H(self) -> "Superoperator":
        return adjoint(self)

    @cached_property
    def is_cp(self) -> bool:
        return is_cp(self)

    @cached_property
    def is_tp(self) -> bool:
        return is_tp(self)

    @cached_property
    def is_unital(self) -> bool:
        return is_unital(self)

    @cached_property
    def is_strict(self) -> bool:
        return is_strict(self)

    def __repr__(self):
        return f"Superoperator(M_{self.source} -> M_{self.target})"


def _check_same_shape(f, g):
    if (f.source, f.target) != (g.source, g.target):
        raise ValueError("superoperators act between different algebras")


def apply(phi: Superoperator, x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.shape != (phi.source, phi.source):
        raise ValueError(f"expected an element of M_{phi.source}, got shape {x.shape}")
    return unvec(phi.matrix @ vec(x), phi.target)


def from_function(f, source: int, target: int | None = None) -> Superoperator:
    """Tabulate a linear map given as a Python callable."""
    target = source if target is None else target
    cols = []
    for i in range(source):
        for j in range(source):
            e = np.zeros((source, source), dtype=complex)
            e[i, j] = np.sqrt(source)  # orthonormal basis element
            y = np.asarray(f(e), dtype=complex)
            if y.shape != (target, target):
                raise ValueError(f"map returned shape {y.shape}, expected {(target, target)}")
            cols.append(vec(y))
    return Superoperator(np.stack(cols, axis=1), source, target)


def from_kraus(kraus, source: int | None = None, target: int | None = None) -> Superoperator:
    """``X -> sum_i K_i X K_i^*`` for ``m x n`` Kraus operators ``K_i``."""
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    if not kraus:
        raise ValueError("need at least one Kraus operator")
    m, n = kraus[0].shape
    source = n if source is None else source
    target = m if target is None else target
    for k in kraus:
        if k.shape != (target, source):
            raise ValueError(f"Kraus operator of shape {k.shape} does not map M_{source} -> M_{target}")
    # row-major vec(K X K^*) = (K kron conj(K)) vec(X)
    mat = sum(np.kron(k, k.conj()) for k in kraus)
    return Superoperator(np.sqrt(source / target) * mat, source, target)


def identity(n: int) -> Superoperator:
    return Superoperator(np.eye(n * n, dtype=complex), n, n)


def conjugation(k) -> Superoperator:
    """``X -> K X K^*``."""
    return from_kraus([k])


def compose(g: Superoperator, f: Superoperator) -> Superoperator:
    """``g o f``."""
    if f.target != g.source:
        raise ValueError(f"cannot compose M_{f.source}->M_{f.target} with M_{g.source}->M_{g.target}")
    return Superoperator(g.matrix @ f.matrix, f.source, g.target)


def adjoint(phi: Superoperator) -> Superoperator:
    """Adjoint with respect to the tau-weighted Hilbert-Schmidt forms."""
    return Superoperator(phi.matrix.conj().T, phi.target, phi.source)


def choi_matrix(phi: Superoperator) -> np.ndarray:
    """``sum_ij E_ij (x) phi(E_ij)``, an ``nm x nm`` matrix."""
    n, m = phi.source, phi.target
    # phi(E_ij) = unvec(S[:, col]) / sqrt(n) with col = i*n + j
    blocks = phi.matrix.reshape(m, m, n, n) * np.sqrt(m / n)
    return blocks.transpose(2, 0, 3, 1).reshape(n * m, n * m)


def is_cp(phi: Superoperator, tol_rel=TOL_CP_REL) -> bool:
    choi = choi_matrix(phi)
    if not np.allclose(choi, choi.conj().T, atol=1e-10 * max(1.0, np.abs(choi).max())):
        return False
    w, _ = herm_eig(choi)
    return bool(w[0] >= -tol_rel * max(w[-1], 0.0) - 1e-14)


def is_tp(phi: Superoperator, tol=TOL_TP) -> bool:
    # tau'(phi(E_ij)) = tau(E_ij) for all units  <=>  phi^*(I_m) = I_n
    dual_unit = apply(adjoint(phi), np.eye(phi.target))
    return bool(np.abs(dual_unit - np.eye(phi.source)).max() <= tol)


def is_unital(phi: Superoperator, tol=TOL_TP) -> bool:
    return bool(np.abs(apply(phi, np.eye(phi.source)) - np.eye(phi.target)).max() <= tol)


def is_strict(phi: Superoperator, tol_pd_rel=TOL_PD_REL) -> bool:
    """Whether ``phi`` maps positive invertible elements to positive invertible ones.

    For positive ``phi`` and ``B >= lambda_min(B) I`` we get
    ``phi(B) >= lambda_min(B) phi(I)``, so it suffices that ``phi(I) > 0``.
    """
    w, _ = herm_eig(apply(phi, np.eye(phi.source)))
    return bool(w[-1] > 0 and w[0] >= tol_pd_rel * w[-1])


def transpose_map(n: int) -> Superoperator:
    """``X -> X^T``; positive and trace preserving but not CP for n >= 2."""
    return from_function(lambda x: x.T, n)


# --------------------------------------------------------------------------
# zoo
# --------------------------------------------------------------------------

def _block_projections(blocks):
    blocks = [int(b) for b in blocks]
    if not blocks or any(b < 1 for b in blocks):
        raise ValueError(f"invalid block partition {blocks}")
    n = sum(blocks)
    projs, start = [], 0
    for b in blocks:
        p = np.zeros((n, n), dtype=complex)
        p[start:start + b, start:start + b] = np.eye(b)
        projs.append(p)
        start += b
    return projs


def pinching(blocks) -> Superoperator:
    """Zero the off-diagonal blocks of a block matrix with the given block sizes."""
    return from_kraus(_block_projections(blocks))


def conditional_expectation_diag(n: int) -> Superoperator:
    """Trace preserving conditional expectation onto the diagonal matrices."""
    return pinching([1] * int(n))


def mixed_unitary(weights, unitaries) -> Superoperator:
    """``X -> sum_i w_i U_i X U_i^*``; unital."""
    weights = np.asarray(weights, dtype=float)
    unitaries = [np.asarray(u, dtype=complex) for u in unitaries]
    if len(weights) != len(unitaries) or len(weights) == 0:
        raise ValueError("need one weight per unitary")
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise ValueError("weights must be a probability vector")
    n = unitaries[0].shape[0]
    for u in unitaries:
        if u.shape != (n, n) or not np.allclose(u @ u.conj().T, np.eye(n), atol=1e-10):
            raise ValueError("mixed_unitary needs square unitary matrices of equal size")
    return from_kraus([np.sqrt(w) * u for w, u in zip(weights, unitaries)])


def random_unitary(n: int, seed=None) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    rng = _rng(seed)
    q, r = np.linalg.qr(_ginibre(rng, n))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_kraus(n: int, m: int, rank: int, seed=None):
    """Random Kraus family normalized to ``sum K^* K = (m/n) I``."""
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if rank * m < n:
        raise ValueError(f"rank {rank} Kraus family into M_{m} cannot be trace preserving on M_{n}")
    rng = _rng(seed)
    ks = [_ginibre(rng, m, n) for _ in range(rank)]
    s = sum(k.conj().T @ k for k in ks)
    norm = matrix_function(s, "inv_sqrt") * np.sqrt(m / n)
    return [k @ norm for k in ks]


def random_channel(n: int, m: int | None = None, rank: int = 2, seed=None) -> Superoperator:
    m = n if m is None else m
    return from_kraus(random_kraus(n, m, rank, seed), n, m)


def depolarizing_like(n: int, lam: float) -> Superoperator:
    """``X -> lam X + (1 - lam) tau(X) I``."""
    if not 0 <= lam <= 1:
        raise ValueError("lam must lie in [0, 1]")
    return from_function(lambda x: lam * x + (1 - lam) * tau(x) * np.eye(n), n)
