"""JSON wire formats for matrices, channels and experiment inputs.

Matrices are ``{"re": [[...]], "im": [[...]]}`` in row-major order. Floats
are written with Python's shortest round-trip ``repr`` so re-parsing is
exact and output is byte-stable.
"""

from __future__ import annotations

import json

import numpy as np

from . import channels as ch
from .algebra import ReferenceDensity, random_reference, random_state

__all__ = [
    "format_float",
    "matrix_to_json",
    "matrix_from_json",
    "channel_to_json",
    "channel_from_json",
    "reference_from_json",
    "state_from_json",
    "dumps",
]

CHANNEL_KINDS = ("pinching", "conditional_expectation_diag", "mixed_unitary", "kraus", "random", "depolarizing_like", "identity")


def format_float(x) -> str:
    return repr(float(x))


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj) -> np.ndarray:
    if isinstance(obj, dict):
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise ValueError("real and imaginary parts differ in shape")
        m = re + 1j * im
    else:
        m = np.asarray(obj, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"matrix must be two-dimensional, got shape {m.shape}")
    return m


def channel_from_json(spec: dict, dim: int | None = None) -> ch.Superoperator:
    """Build a channel from ``{"kind": ..., ...}``.

    Kinds: ``pinching`` (``blocks``), ``conditional_expectation_diag``,
    ``mixed_unitary`` (``weights``, ``unitaries``), ``kraus`` (``kraus``,
    optional ``source_dim``), ``random`` (``target_dim``, ``rank``, ``seed``),
    ``depolarizing_like`` (``lam``), ``identity``.
    """
    kind = spec.get("kind")
    if kind not in CHANNEL_KINDS:
        raise ValueError(f"unknown channel kind {kind!r}")
    n = spec.get("dim", dim)
    if kind == "pinching":
        phi = ch.pinching(spec["blocks"])
    elif kind == "conditional_expectation_diag":
        phi = ch.conditional_expectation_diag(n)
    elif kind == "mixed_unitary":
        phi = ch.mixed_unitary(spec["weights"], [matrix_from_json(u) for u in spec["unitaries"]])
    elif kind == "kraus":
        ks = [matrix_from_json(k) for k in spec["kraus"]]
        phi = ch.from_kraus(ks, spec.get("source_dim"), spec.get("target_dim"))
    elif kind == "random":
        phi = ch.random_channel(n, spec.get("target_dim", n), spec.get("rank", 2), spec.get("seed", 0))
    elif kind == "depolarizing_like":
        phi = ch.depolarizing_like(n, spec["lam"])
    else:
        phi = ch.identity(n)
    if n is not None and phi.source != n:
        raise ValueError(f"channel acts on M_{phi.source} but the algebra is M_{n}")
    return phi


def channel_to_json(phi: ch.Superoperator, kraus=None) -> dict:
    """Serialize as a ``kraus`` channel; Kraus operators come from the Choi matrix if not given."""
    if kraus is None:
        choi = ch.choi_matrix(phi)
        w, v = np.linalg.eigh(0.5 * (choi + choi.conj().T))
        n, m = phi.source, phi.target
        kraus = []
        for k in range(len(w)):
            if w[k] > 1e-12 * max(w[-1], 1e-300):
                # choi = sum_k v_k v_k^* with v_k[(i, row)] = K[row, i]
                kraus.append((np.sqrt(w[k]) * v[:, k].reshape(n, m)).T)
    return {
        "kind": "kraus",
        "source_dim": phi.source,
        "target_dim": phi.target,
        "kraus": [matrix_to_json(k) for k in kraus],
    }


def reference_from_json(spec, dim: int) -> ReferenceDensity:
    if spec is None or spec == "identity" or (isinstance(spec, dict) and spec.get("kind") == "identity"):
        return ReferenceDensity(np.eye(dim))
    if isinstance(spec, dict) and spec.get("kind") == "random":
        return random_reference(dim, spec.get("seed", 0), spec.get("cond_cap", 100.0))
    if isinstance(spec, dict) and spec.get("kind") == "explicit":
        return ReferenceDensity(matrix_from_json(spec["matrix"]))
    return ReferenceDensity(matrix_from_json(spec))


def state_from_json(spec, dim: int, reference: ReferenceDensity | None = None) -> np.ndarray:
    if isinstance(spec, dict) and spec.get("kind") == "random":
        return random_state(dim, spec.get("seed", 0))
    if spec == "reference" or (isinstance(spec, dict) and spec.get("kind") == "reference"):
        if reference is None:
            raise ValueError("state 'reference' needs a reference density")
        return np.array(reference.matrix)
    if isinstance(spec, dict) and spec.get("kind") == "explicit":
        return matrix_from_json(spec["matrix"])
    return matrix_from_json(spec)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
