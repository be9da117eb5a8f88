"""Petz recovery, the limit projection of its iterates and state decomposition.

For a strict channel ``phi`` and reference ``B`` the Petz map

    R(Y) = B^{1/2} phi^*(phi(B)^{-1/2} Y phi(B)^{-1/2}) B^{1/2}

is the adjoint of ``phi`` between the weighted spaces ``(M, <.,.>_B)`` and
``(N, <.,.>_{phi(B)})``. Hence ``T = R o phi`` is a positive contraction of
``(M, <.,.>_B)``; the orthogonal projection ``psi`` onto its fixed space is
the limit of ``T^n`` and ``||T^n - psi||_{B,2} = delta^n`` where ``delta`` is
the largest eigenvalue of ``T`` below 1.

The weighted geometry is mapped to the plain Hilbert-Schmidt one by the
isometry ``C_B(X) = B^{-1/4} X B^{-1/4}``; all spectral work happens there.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import channels as ch
from .algebra import (
    ReferenceDensity,
    as_reference,
    herm_eig,
    matrix_function,
    schatten_p_norm,
    weighted_p_norm,
)
from .channels import Superoperator, apply, compose

__all__ = [
    "NumericalError",
    "GapAmbiguityWarning",
    "PetzAnalysis",
    "IterationTrace",
    "Decomposition",
    "petz_map",
    "weighted_conjugation",
    "weighted_frame",
    "fixed_point_analysis",
    "iteration_distance",
    "interpolation_bound",
    "iterate",
    "decompose",
    "l1_norm_probe",
    "l1_norm_probe_sequence",
]

EPS_FIX = 1e-8
AMBIGUITY_BAND = 1e-6
SYMMETRY_RESIDUAL_MAX = 1e-6
NEGATIVE_EIG_MAX = 1e-9


class NumericalError(RuntimeError):
    """A numerical invariant that theory guarantees was violated."""


class GapAmbiguityWarning(UserWarning):
    """Eigenvalues sit too close to 1 to separate the fixed space reliably."""


def petz_map(phi: Superoperator, b) -> Superoperator:
    """Petz recovery map of ``phi`` with respect to the reference ``b``."""
    b = as_reference(b)
    if b.dim != phi.source:
        raise ValueError(f"reference lives in M_{b.dim}, channel acts on M_{phi.source}")
    if not phi.is_cp or not phi.is_tp:
        raise ValueError("Petz map needs a completely positive, trace preserving channel")
    sigma = apply(phi, b.matrix)
    sigma = 0.5 * (sigma + sigma.conj().T)
    try:
        sigma_inv_sqrt = matrix_function(sigma, "inv_sqrt")
    except ValueError as exc:
        raise ValueError("channel is not strict: phi(B) is numerically singular") from exc
    inner = ch.conjugation(sigma_inv_sqrt)
    outer = ch.conjugation(b.power(0.5))
    return compose(outer, compose(ch.adjoint(phi), inner))


def weighted_conjugation(x, b, direction: str = "forward") -> np.ndarray:
    """``B^{-1/4} x B^{-1/4}`` (forward) or ``B^{1/4} x B^{1/4}`` (inverse)."""
    b = as_reference(b)
    if direction == "forward":
        w = b.power(-0.25)
    elif direction == "inverse":
        w = b.power(0.25)
    else:
        raise ValueError("direction must be 'forward' or 'inverse'")
    x = np.asarray(x, dtype=complex)
    return w @ x @ w


def weighted_frame(b) -> tuple[Superoperator, Superoperator]:
    """Superoperators ``(C_B, C_B^{-1})``."""
    b = as_reference(b)
    return ch.conjugation(b.power(-0.25)), ch.conjugation(b.power(0.25))


@dataclass
class PetzAnalysis:
    """Spectral data of ``T = R o phi`` in the weighted geometry."""

    phi: Superoperator
    reference: ReferenceDensity
    recovery: Superoperator
    iteration: Superoperator
    psi: Superoperator
    delta: float
    fixed_dim: int
    spectrum: np.ndarray
    basis_V: list
    warnings: list = field(default_factory=list)
    symmetry_residual: float = 0.0
    raw_spectrum: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.phi.source

    def to_json(self) -> dict:
        from .serialize import matrix_to_json

        return {
            "delta": float(self.delta),
            "fixed_dim": int(self.fixed_dim),
            "spectrum": [float(x) for x in self.spectrum],
            "psi": matrix_to_json(self.psi.matrix),
            "warnings": list(self.warnings),
        }


def fixed_point_analysis(
    phi: Superoperator,
    b,
    eps_fix: float = EPS_FIX,
    band: float = AMBIGUITY_BAND,
) -> PetzAnalysis:
    """Fixed-point projection ``psi`` and spectral gap ``delta`` of ``R o phi``.

    Eigenvalues ``>= 1 - eps_fix`` of the symmetrized, weight-conjugated
    iteration operator span the fixed space. Eigenvalues in
    ``[1 - band, 1 - eps_fix)`` trigger a :class:`GapAmbiguityWarning`.

    Raises:
        NumericalError: if the conjugated iteration operator is not Hermitian
            to within 1e-6, or has eigenvalues below ``-1e-9``.
    """
    if not 0 < eps_fix <= 1e-4:
        raise ValueError("eps_fix must lie in (0, 1e-4]")
    b = as_reference(b)
    n = phi.source
    if phi.target == 0 or not phi.is_strict:
        raise ValueError("channel is not strict")
    r = petz_map(phi, b)
    t = compose(r, phi)
    fwd, inv = weighted_frame(b)
    m = fwd.matrix @ t.matrix @ inv.matrix
    residual = float(np.linalg.norm(m - m.conj().T))
    if residual > SYMMETRY_RESIDUAL_MAX:
        raise NumericalError(
            f"iteration operator is not self-adjoint in the weighted frame (residual {residual:.3e})"
        )
    h = 0.5 * (m + m.conj().T)
    w, u = herm_eig(h)
    w, u = w[::-1], u[:, ::-1]
    if w[-1] < -NEGATIVE_EIG_MAX:
        raise NumericalError(f"iteration operator has negative eigenvalue {w[-1]:.3e}")
    if w[0] > 1 + SYMMETRY_RESIDUAL_MAX:
        raise NumericalError(f"iteration operator has eigenvalue {w[0]:.12g} > 1")
    raw = w.copy()
    w = np.clip(w, 0.0, 1.0)

    fixed = w >= 1 - eps_fix
    fixed_dim = int(fixed.sum())
    if fixed_dim == 0:
        raise NumericalError("no eigenvalue at 1; B should always be fixed")
    notes = []
    ambiguous = w[(w >= 1 - band) & ~fixed]
    if ambiguous.size:
        msg = f"eigenvalues {ambiguous.tolist()} lie in the ambiguity band [1-{band:g}, 1-{eps_fix:g})"
        warnings.warn(msg, GapAmbiguityWarning, stacklevel=2)
        notes.append(msg)
    delta = float(w[~fixed].max()) if fixed_dim < n * n else 0.0

    if fixed_dim == n * n:
        psi = ch.identity(n)
    else:
        uv = u[:, fixed]
        psi = Superoperator(inv.matrix @ (uv @ uv.conj().T) @ fwd.matrix, n, n)
    basis = [apply(inv, ch.unvec(u[:, k], n)) for k in np.flatnonzero(fixed)]
    return PetzAnalysis(
        phi=phi,
        reference=b,
        recovery=r,
        iteration=t,
        psi=psi,
        delta=delta,
        fixed_dim=fixed_dim,
        spectrum=w,
        basis_V=basis,
        warnings=notes,
        symmetry_residual=residual,
        raw_spectrum=raw,
    )


def _frame_matrix(analysis: PetzAnalysis, op: Superoperator) -> np.ndarray:
    fwd, inv = weighted_frame(analysis.reference)
    return fwd.matrix @ op.matrix @ inv.matrix


def iteration_distance(analysis: PetzAnalysis, n: int, method: str = "factored") -> float:
    """``||T^n - psi||`` as an operator on ``(L^2, ||.||_{B,2})``.

    ``method="factored"`` evaluates ``(T - psi)^n``, which equals
    ``T^n - psi`` because ``T psi = psi T = psi^2 = psi``; unlike the direct
    difference it does not bottom out at the rounding floor once ``delta^n``
    drops below ~1e-15. ``method="direct"`` forms ``T^n - psi`` literally.
    """
    t, psi = analysis.iteration, analysis.psi
    if method == "factored":
        d = _frame_matrix(analysis, t - psi)
        dn = np.linalg.matrix_power(d, n)
    elif method == "direct":
        dn = _frame_matrix(analysis, t ** n - psi)
    else:
        raise ValueError("method must be 'factored' or 'direct'")
    return float(np.linalg.norm(dn, 2))


def interpolation_bound(p: float, op_norm_b2: float, end_norm: float = 2.0) -> float:
    """Bound on ``||T^n - psi||_{B,p}`` from the ``L^2`` operator norm.

    For ``1 < p < 2`` interpolate between ``L^1`` (norm at most 2, as both
    maps are channels) and ``L^2``; for ``p > 2`` between ``L^2`` and
    ``L^inf``, where the weighted norm is again at most 2.
    """
    if p == 2:
        return op_norm_b2
    if 1 < p < 2:
        theta = 2.0 * (1.0 - 1.0 / p)
    elif 2 < p < np.inf:
        theta = 2.0 / p
    else:
        raise ValueError("interpolation needs 1 < p < inf")
    return end_norm ** (1.0 - theta) * op_norm_b2 ** theta


@dataclass
class IterationTrace:
    """Orbit ``A_n = T^n(A)`` and its distances to ``psi(A)``.

    Distances are computed from ``D_n = (T - psi)^n (A - psi(A))``, which
    equals ``A_n - psi(A)`` but avoids cancellation once the iterates are
    within rounding of the limit.
    """

    n: np.ndarray
    states: list
    limit: np.ndarray
    dist_l1: np.ndarray
    dist_B2: np.ndarray
    cert_delta_pow: np.ndarray
    dist_Bp: dict
    delta: float

    def to_csv(self) -> str:
        from .serialize import format_float

        ps = list(self.dist_Bp)
        header = ["n", "dist_l1", "dist_B2", "cert_delta_pow"] + [f"dist_Bp_{format_float(p)}" for p in ps]
        lines = [",".join(header)]
        for k, n in enumerate(self.n):
            row = [str(int(n)), format_float(self.dist_l1[k]), format_float(self.dist_B2[k]),
                   format_float(self.cert_delta_pow[k])]
            row += [format_float(self.dist_Bp[p][k]) for p in ps]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def iterate(phi, b, a, n_max: int, p_list=(), analysis: PetzAnalysis | None = None) -> IterationTrace:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    b = as_reference(b)
    an = analysis or fixed_point_analysis(phi, b)
    t, psi = an.iteration, an.psi
    a = np.asarray(a, dtype=complex)
    limit = apply(psi, a)
    d = a - limit
    cert0 = weighted_p_norm(d, b, 2)
    states, l1, b2, cert = [a], [], [], []
    bp = {float(p): [] for p in p_list}
    x = a
    for k in range(n_max + 1):
        if k:
            x = apply(t, x)
            states.append(x)
            d = apply(t, d) - apply(psi, d)
        l1.append(schatten_p_norm(d, 1))
        b2.append(weighted_p_norm(d, b, 2))
        cert.append(an.delta ** k * cert0)
        for p in bp:
            bp[p].append(weighted_p_norm(d, b, p))
    return IterationTrace(
        n=np.arange(n_max + 1),
        states=states,
        limit=limit,
        dist_l1=np.array(l1),
        dist_B2=np.array(b2),
        cert_delta_pow=np.array(cert),
        dist_Bp={p: np.array(v) for p, v in bp.items()},
        delta=an.delta,
    )


@dataclass
class Decomposition:
    """``A = A0 + C`` with ``A0`` recoverable and ``T^n(C) -> 0``."""

    a0: np.ndarray
    c: np.ndarray
    checks: dict
    analysis: PetzAnalysis

    def vanishing_constant(self) -> float:
        """``K`` with ``||T^n(C)||_1 <= K delta^n ||C||_1``.

        Chains ``||.||_1 <= ||.||_2 <= ||B^{1/2}|| ||.||_{B,2}`` and
        ``||.||_{B,2} <= ||B^{-1/2}|| ||.||_2 <= ||B^{-1/2}|| sqrt(n) ||.||_1``.
        """
        b = self.analysis.reference
        return math.sqrt(b.dim * b.condition_number)

    def vanishing_steps(self, target: float = 1e-8) -> int:
        """Smallest ``n`` with ``delta^n <= target`` (0 when ``delta = 0``)."""
        delta = self.analysis.delta
        if delta <= 0:
            return 1
        return max(1, math.ceil(math.log(target) / math.log(delta)))


def decompose(phi, b, a, analysis: PetzAnalysis | None = None, tol: float = 1e-9) -> Decomposition:
    b = as_reference(b)
    an = analysis or fixed_point_analysis(phi, b)
    a = np.asarray(a, dtype=complex)
    a0 = apply(an.psi, a)
    a0 = 0.5 * (a0 + a0.conj().T)
    c = a - a0
    w, _ = herm_eig(a0)
    scale = max(1.0, schatten_p_norm(a, 2))
    checks = {
        "reconstruction": bool(np.array_equal(a0 + c, a) or np.allclose(a0 + c, a, rtol=0, atol=1e-15 * scale)),
        "a0_trace_one": bool(abs(np.trace(a0).real / a.shape[0] - 1) <= tol),
        "a0_positive": bool(w[0] >= -tol * scale),
        "a0_recoverable": bool(np.abs(apply(an.iteration, a0) - a0).max() <= tol * scale),
        "c_hermitian": bool(np.abs(c - c.conj().T).max() <= tol * scale),
        "psi_c_zero": bool(np.abs(apply(an.psi, c)).max() <= tol * scale),
    }
    return Decomposition(a0=a0, c=c, checks=checks, analysis=an)


# --------------------------------------------------------------------------
# L^1 operator norm probe
# --------------------------------------------------------------------------

def _l1_ratio(d_mat, u, v, dim):
    x = np.outer(u, v.conj())
    nx = schatten_p_norm(x, 1)
    if nx == 0:
        return 0.0
    y = ch.unvec(d_mat @ ch.vec(x), dim)
    return schatten_p_norm(y, 1) / nx


def _split(z, dim):
    return z[:dim] + 1j * z[dim:2 * dim], z[2 * dim:3 * dim] + 1j * z[3 * dim:]


def _join(u, v):
    return np.concatenate([u.real, u.imag, v.real, v.imag])


def l1_norm_probe_sequence(
    phi,
    b,
    n_values,
    restarts: int = 32,
    seed=0,
    analysis: PetzAnalysis | None = None,
    states=(),
    maxiter: int = 200,
) -> np.ndarray:
    """Lower bounds for ``||T^n - psi||_{1 -> 1}`` for each ``n`` in ``n_values``.

    The operator norm on ``L^1`` is attained on rank-one ``u v^*``. For each
    ``n`` a seeded multi-start local search over unit ``u, v`` produces
    candidates; every ``n`` is then scored on the union of all candidates.
    Because ``T`` is an ``L^1`` contraction, the per-candidate ratio cannot
    grow with ``n``, so the returned sequence is non-increasing. Eigenvectors
    of the optional ``states``, and of the states minus their limits, are
    added as candidates, so the bound dominates the ratios observed on them.

    These are lower bounds only, not the exact induced norm.
    """
    b = as_reference(b)
    an = analysis or fixed_point_analysis(phi, b)
    dim = an.dim
    n_values = [int(n) for n in n_values]
    t, psi = an.iteration, an.psi
    d1 = (t - psi).matrix
    ops = {n: (np.linalg.matrix_power(d1, n) if n > 0 else np.eye(dim * dim) - psi.matrix) for n in n_values}
    rng = np.random.default_rng(seed)

    candidates = []
    for s in states:
        s = np.asarray(s, dtype=complex)
        for x in (s, s - apply(psi, s)):
            _, vecs = herm_eig(0.5 * (x + x.conj().T))
            candidates += [(vecs[:, k], vecs[:, k]) for k in range(dim)]

    for n in n_values:
        d = ops[n]
        if not np.any(np.abs(d) > 0):
            continue

        def objective(z, d=d):
            u, v = _split(z, dim)
            return -_l1_ratio(d, u, v, dim)

        for _ in range(restarts):
            z0 = rng.standard_normal(4 * dim)
            res = minimize(objective, z0, method="L-BFGS-B", options={"maxiter": maxiter})
            u, v = _split(res.x, dim)
            nu, nv = np.linalg.norm(u), np.linalg.norm(v)
            if nu > 0 and nv > 0:
                candidates.append((u / nu, v / nv))

    out = []
    for n in n_values:
        d = ops[n]
        out.append(max((_l1_ratio(d, u, v, dim) for u, v in candidates), default=0.0))
    return np.array(out)


def l1_norm_probe(phi, b, n: int, restarts: int = 32, seed=0, analysis=None, states=()) -> float:
    """Lower bound for ``||(R o phi)^n - psi||_{1 -> 1}`` by local search."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return float(l1_norm_probe_sequence(phi, b, [n], restarts, seed, analysis, states)[0])
