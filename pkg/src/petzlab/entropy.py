"""Sandwiched quasi-relative entropies, fidelity and recoverability bounds."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .algebra import as_reference, herm_eig, matrix_function, schatten_p_norm, weighted_p_norm
from .channels import Superoperator, apply

__all__ = [
    "BoundReport",
    "sandwiched_entropy",
    "sandwiched_norm",
    "fidelity",
    "dpi_gap",
    "weighted_contraction_check",
    "recoverability_bound",
]

SLACK = 1e-9


def _conj_exp(p):
    return np.inf if p == 1 else (1.0 if np.isinf(p) else p / (p - 1.0))


def sandwiched_entropy(a, b, p: float) -> float:
    """``tau[(B^{-1/(2q)} A B^{-1/(2q)})^p]`` with ``1/p + 1/q = 1``.

    This is the trace itself, not its ``1/p``-th power. ``p = inf`` returns
    ``||B^{-1/2} A B^{-1/2}||_inf``, the limiting sup form.
    """
    p = float(p)
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    b = as_reference(b)
    a = np.asarray(a, dtype=complex)
    if np.isinf(p):
        return weighted_p_norm(a, b, np.inf)
    if p == 1:
        return float(np.trace(a).real / a.shape[0])
    w = b.power(-0.5 / _conj_exp(p))
    x = w @ a @ w
    ev, _ = herm_eig(x)
    ev = np.clip(ev, 0.0, None)
    return float(np.mean(ev ** p))


def sandwiched_norm(a, b, p: float) -> float:
    """``||A||_{B,p}``; the ``1/p``-th power of :func:`sandwiched_entropy` on states."""
    return weighted_p_norm(a, b, p)


def fidelity(a1, a2) -> float:
    """``tau|A1^{1/2} A2^{1/2}|`` for tau-normalized states.

    Equals ``Tr|sqrt(rho1) sqrt(rho2)|`` for the corresponding density
    matrices; computed from singular values of the product of square roots.
    """
    a1 = np.asarray(a1, dtype=complex)
    a2 = np.asarray(a2, dtype=complex)
    if a1.shape != a2.shape:
        raise ValueError("states live in different algebras")
    s = np.linalg.svd(matrix_function(a1, "sqrt") @ matrix_function(a2, "sqrt"), compute_uv=False)
    return float(np.mean(s))


def dpi_gap(phi: Superoperator, a, b, p: float) -> float:
    """``S_p(A|B) - S_p(phi(A)|phi(B))``; nonnegative for strict channels."""
    b = as_reference(b)
    sigma = apply(phi, b.matrix)
    sigma = 0.5 * (sigma + sigma.conj().T)
    return sandwiched_entropy(a, b, p) - sandwiched_entropy(apply(phi, a), sigma, p)


def weighted_contraction_check(phi: Superoperator, b, x, p: float) -> tuple[float, float]:
    """``(||phi(X)||_{phi(B),p}, ||X||_{B,p})``; the first never exceeds the second."""
    b = as_reference(b)
    sigma = apply(phi, b.matrix)
    sigma = 0.5 * (sigma + sigma.conj().T)
    return weighted_p_norm(apply(phi, x), sigma, p), weighted_p_norm(x, b, p)


@dataclass
class BoundReport:
    """``4[1 - F]^2 <= ||A - R phi A||_1^2 <= S_2(A|B) - S_2(phi A|phi B)``."""

    lhs: float
    mid: float
    rhs: float
    fidelity: float
    slack_lower: float
    slack_upper: float
    holds_lower: bool
    holds_upper: bool

    @property
    def holds(self) -> bool:
        return self.holds_lower and self.holds_upper

    def to_json(self) -> dict:
        return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v)) for k, v in asdict(self).items()}


def recoverability_bound(phi: Superoperator, b, a, recovery: Superoperator | None = None,
                         slack: float = SLACK) -> BoundReport:
    from .petz import petz_map

    b = as_reference(b)
    r = recovery or petz_map(phi, b)
    a = np.asarray(a, dtype=complex)
    ra = apply(r, apply(phi, a))
    ra = 0.5 * (ra + ra.conj().T)
    f = fidelity(a, ra)
    lhs = 4.0 * (1.0 - f) ** 2
    mid = schatten_p_norm(a - ra, 1) ** 2
    rhs = dpi_gap(phi, a, b, 2)
    return BoundReport(
        lhs=lhs,
        mid=mid,
        rhs=rhs,
        fidelity=f,
        slack_lower=mid - lhs,
        slack_upper=rhs - mid,
        holds_lower=lhs <= mid + slack,
        holds_upper=mid <= rhs + slack,
    )
