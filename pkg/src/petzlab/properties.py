"""Seeded random instances and a registry of executable invariants.

Every property takes an :class:`Instance` and returns ``(passed, slack)``
where ``slack`` is the signed margin of the underlying inequality (negative
means violated, beyond tolerance). Reports are ordered by spec index so
identical inputs produce byte-identical JSON.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from . import channels as ch
from .algebra import (
    _ginibre,
    hs_inner,
    random_reference,
    random_state,
    schatten_p_norm,
    tau,
    weighted_inner,
    weighted_p_norm,
)
from .entropy import dpi_gap, fidelity, recoverability_bound, sandwiched_entropy, weighted_contraction_check
from .petz import PetzAnalysis, fixed_point_analysis, iterate, iteration_distance, weighted_conjugation

__all__ = [
    "InstanceSpec",
    "Instance",
    "InstanceRejected",
    "generate",
    "REGISTRY",
    "run_properties",
    "SuiteReport",
    "shrink",
]

MAX_RETRIES = 16
P_LIST = (1.0, 1.5, 2.0, 3.0, math.inf)


@dataclass(frozen=True)
class InstanceSpec:
    seed: int
    dim: int = 3
    target_dim: int | None = None
    kind: str = "random"
    rank: int = 3
    cond_cap: float = 100.0
    p_list: tuple = P_LIST
    n_max: int = 60

    def to_json(self) -> dict:
        d = asdict(self)
        d["p_list"] = [p if math.isfinite(p) else "inf" for p in self.p_list]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "InstanceSpec":
        d = dict(d)
        if "p_list" in d:
            d["p_list"] = tuple(float(p) for p in d["p_list"])
        return cls(**d)


class InstanceRejected(RuntimeError):
    pass


@dataclass
class Instance:
    spec: InstanceSpec
    phi: ch.Superoperator
    b: object
    a: np.ndarray
    retries: int = 0
    _analysis: PetzAnalysis | None = field(default=None, repr=False)

    @property
    def analysis(self) -> PetzAnalysis:
        if self._analysis is None:
            self._analysis = fixed_point_analysis(self.phi, self.b)
        return self._analysis

    def rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng([self.spec.seed, 7919, stream])


def _channel(spec: InstanceSpec, rng):
    n = spec.dim
    m = spec.target_dim or n
    if spec.kind == "random":
        return ch.random_channel(n, m, spec.rank, rng)
    if spec.kind == "unitary":
        return ch.conjugation(ch.random_unitary(n, rng))
    if spec.kind == "mixed_unitary":
        w = rng.dirichlet(np.ones(spec.rank))
        return ch.mixed_unitary(w, [ch.random_unitary(n, rng) for _ in range(spec.rank)])
    if spec.kind == "pinching":
        half = max(1, n // 2)
        return ch.pinching([half, n - half] if n > half else [n])
    if spec.kind == "depolarizing_like":
        return ch.depolarizing_like(n, float(rng.uniform()))
    raise ValueError(f"unknown instance kind {spec.kind!r}")


def generate(spec: InstanceSpec) -> Instance:
    """Deterministic ``(phi, B, A)`` for a spec; retries non-strict channels."""
    for retry in range(MAX_RETRIES + 1):
        rng = np.random.default_rng([spec.seed, retry])
        phi = _channel(spec, rng)
        if phi.is_strict:
            b = random_reference(spec.dim, rng, spec.cond_cap)
            a = random_state(spec.dim, rng)
            return Instance(spec, phi, b, a, retry)
    raise InstanceRejected(f"no strict channel for {spec} after {MAX_RETRIES} retries")


# --------------------------------------------------------------------------
# properties
# --------------------------------------------------------------------------

def _le(lhs, rhs, tol):
    slack = float(rhs + tol - lhs)
    return slack >= 0, slack


def _all(results):
    results = list(results)
    worst = min(s for _, s in results)
    return all(ok for ok, _ in results), worst


def _rand(inst, stream, n=None):
    return _ginibre(inst.rng(stream), n or inst.spec.dim)


def _target_dim(inst):
    return inst.phi.target


# algebra-core

def tau_faithful(inst):
    x = _rand(inst, 1)
    val = tau(x.conj().T @ x).real
    return _le(-val, -1e-14 * schatten_p_norm(x, 2) ** 2, 0.0)


def traciality(inst):
    x, y = _rand(inst, 2), _rand(inst, 3)
    err = abs(tau(x @ y) - tau(y @ x))
    return _le(err, 1e-12 * schatten_p_norm(x, 2) * schatten_p_norm(y, 2), 0.0)


def _opnorm_power(b, t):
    return float(np.max(b.eigenvalues ** t))


def norm_equivalence(inst):
    x, b = _rand(inst, 4), inst.b
    out = []
    for p in inst.spec.p_list:
        q = math.inf if p == 1 else (1.0 if math.isinf(p) else p / (p - 1))
        e = 0.0 if math.isinf(q) else 1.0 / q
        xp, xbp = schatten_p_norm(x, p), weighted_p_norm(x, b, p)
        out.append(_le(xbp, _opnorm_power(b, -e) * xp, 1e-10 * xp))
        out.append(_le(xp, _opnorm_power(b, e) * xbp, 1e-10 * xp))
    return _all(out)


def weighted_isometry(inst):
    x, y, b = _rand(inst, 5), _rand(inst, 6), inst.b
    err = abs(weighted_inner(x, y, b) - hs_inner(weighted_conjugation(x, b), weighted_conjugation(y, b)))
    return _le(err, 0.0, 1e-10)


# channels

def unital_dual_contraction(inst):
    y = _rand(inst, 7, _target_dim(inst))
    dual = ch.adjoint(inst.phi)
    return _le(schatten_p_norm(dual(y), np.inf), schatten_p_norm(y, np.inf), 1e-10)


def kraus_tp_equivalence(inst):
    """Sum K^*K = (m/n) I iff tau-TP, checked on the instance and a broken copy."""
    n, m = inst.spec.dim, _target_dim(inst)
    ks = ch.random_kraus(n, m, max(1, inst.spec.rank), inst.rng(8))
    s = sum(k.conj().T @ k for k in ks)
    good = np.abs(s - (m / n) * np.eye(n)).max() <= 1e-10
    ok_forward = good and ch.is_tp(ch.from_kraus(ks, n, m))
    broken = [1.1 * k for k in ks]
    ok_backward = not ch.is_tp(ch.from_kraus(broken, n, m))
    return bool(ok_forward and ok_backward), 0.0 if ok_forward and ok_backward else -1.0


def cp_compose_stable(inst):
    n = inst.spec.dim
    g = ch.random_channel(_target_dim(inst), n, 2, inst.rng(9))
    ok = ch.is_cp(ch.compose(g, inst.phi)) if (inst.phi.is_cp and g.is_cp) else True
    return ok, 0.0 if ok else -1.0


def trace_norm_contraction(inst):
    x = _rand(inst, 10)
    return _le(schatten_p_norm(inst.phi(x), 1), schatten_p_norm(x, 1), 1e-10)


# petz-engine

def psi_cptp(inst):
    psi = inst.analysis.psi
    ok = ch.is_cp(psi) and ch.is_tp(psi, 1e-9)
    resid = float(np.abs(ch.adjoint(psi)(np.eye(inst.spec.dim)) - np.eye(inst.spec.dim)).max())
    return bool(ok), 1e-9 - resid


def psi_projection_laws(inst):
    an = inst.analysis
    psi, t = an.psi.matrix, an.iteration.matrix
    res = max(
        np.abs(psi @ psi - psi).max(),
        np.abs(t @ psi - psi).max(),
        np.abs(psi @ t - psi).max(),
    )
    return _le(res, 0.0, 1e-9)


def psi_fixes_reference(inst):
    b = inst.b.matrix
    return _le(np.abs(inst.analysis.psi(b) - b).max(), 0.0, 1e-9)


def iteration_psd(inst):
    an = inst.analysis
    return _le(-float(an.raw_spectrum.min()), 0.0, 1e-9)


def fixed_space_duality(inst):
    an = inst.analysis
    out = []
    for x in an.basis_V:
        res = schatten_p_norm(an.iteration(x) - x, 2)
        out.append(_le(res, 0.0, 1e-8 * schatten_p_norm(x, 2)))
    # random vector orthogonal to V in <.,.>_B contracts by delta
    z = _rand(inst, 11)
    z = z - an.psi(z)
    nz = weighted_p_norm(z, inst.b, 2)
    if nz > 1e-12:
        out.append(_le(weighted_p_norm(an.iteration(z), inst.b, 2), (an.delta + 1e-8) * nz, 0.0))
    return _all(out)


def delta_certificate(inst):
    an = inst.analysis
    out = []
    for n in range(1, inst.spec.n_max + 1):
        out.append(_le(iteration_distance(an, n), an.delta ** n * (1 + 1e-8), 0.0))
    tr = iterate(inst.phi, inst.b, inst.a, inst.spec.n_max, analysis=an)
    for d, c in zip(tr.dist_B2, tr.cert_delta_pow):
        out.append(_le(d, c * (1 + 1e-8), 0.0))
    return _all(out)


def monotone_l1_convergence(inst):
    an = inst.analysis
    tr = iterate(inst.phi, inst.b, inst.a, inst.spec.n_max, analysis=an)
    d = tr.dist_l1
    out = [_le(d[k + 1], d[k] * (1 + 1e-8), 1e-15) for k in range(len(d) - 1)]
    if an.delta > 0:
        # ||D_k||_1 <= sqrt(n cond(B)) delta^k ||A - psi(A)||_1
        const = math.sqrt(inst.b.dim * inst.b.condition_number) * d[0] / schatten_p_norm(inst.a, 1)
        k = max(1, int(math.ceil(math.log(1e-8 / max(const, 1e-300)) / math.log(an.delta))))
        if 0 < k <= inst.spec.n_max:
            out.append(_le(d[k], 1e-8 * schatten_p_norm(inst.a, 1), 0.0))
    return _all(out)


# entropy-metrics

def dpi(inst):
    return _all(_le(-dpi_gap(inst.phi, inst.a, inst.b, p), 0.0, 1e-9) for p in inst.spec.p_list)


def weighted_contraction(inst):
    x = _rand(inst, 12)
    out = []
    for p in inst.spec.p_list:
        lhs, rhs = weighted_contraction_check(inst.phi, inst.b, x, p)
        out.append(_le(lhs, rhs, 1e-9))
    return _all(out)


def recoverability_chain(inst):
    rep = recoverability_bound(inst.phi, inst.b, inst.a, inst.analysis.recovery)
    return rep.holds, min(rep.slack_lower, rep.slack_upper) + 1e-9


def fidelity_bounds(inst):
    a2 = random_state(inst.spec.dim, inst.rng(13))
    f = fidelity(inst.a, a2)
    return _all([
        _le(f, 1.0, 1e-10),
        _le(-f, 0.0, 1e-10),
        _le(2 * (1 - f), schatten_p_norm(inst.a - a2, 1), 1e-10),
    ])


def entropy_norm_consistency(inst):
    out = []
    for p in inst.spec.p_list:
        if math.isinf(p):
            continue
        s = sandwiched_entropy(inst.a, inst.b, p)
        out.append(_le(abs(s - weighted_p_norm(inst.a, inst.b, p) ** p), 0.0, 1e-10 * max(1.0, s)))
    return _all(out)


def entropy_order_in_p(inst):
    """Empirical: S_p(A|B) non-decreasing in finite p (not a stated result)."""
    ps = sorted(p for p in inst.spec.p_list if math.isfinite(p))
    s = [sandwiched_entropy(inst.a, inst.b, p) for p in ps]
    return _all([_le(s[k], s[k + 1], 1e-10 * max(1.0, s[k + 1])) for k in range(len(s) - 1)] or [(True, 0.0)])


REGISTRY: dict[str, Callable] = {
    "tau_faithful": tau_faithful,
    "traciality": traciality,
    "norm_equivalence": norm_equivalence,
    "weighted_isometry": weighted_isometry,
    "unital_dual_contraction": unital_dual_contraction,
    "kraus_tp_equivalence": kraus_tp_equivalence,
    "cp_compose_stable": cp_compose_stable,
    "trace_norm_contraction": trace_norm_contraction,
    "psi_cptp": psi_cptp,
    "psi_projection_laws": psi_projection_laws,
    "psi_fixes_reference": psi_fixes_reference,
    "iteration_psd": iteration_psd,
    "fixed_space_duality": fixed_space_duality,
    "delta_certificate": delta_certificate,
    "monotone_l1_convergence": monotone_l1_convergence,
    "dpi": dpi,
    "weighted_contraction": weighted_contraction,
    "recoverability_chain": recoverability_chain,
    "fidelity_bounds": fidelity_bounds,
    "entropy_norm_consistency": entropy_norm_consistency,
    "entropy_order_in_p": entropy_order_in_p,
}


@dataclass
class PropertyStats:
    name: str
    passed: int = 0
    failed: int = 0
    worst_slack: float = math.inf
    counterexamples: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "fail": self.failed,
            "worst_slack": None if math.isinf(self.worst_slack) else self.worst_slack,
            "counterexamples": [s.to_json() for s in self.counterexamples],
        }


@dataclass
class SuiteReport:
    properties: list
    rejected: list = field(default_factory=list)

    @property
    def exit_status(self) -> int:
        return 1 if any(p.failed for p in self.properties) or self.rejected else 0

    def __getitem__(self, name) -> PropertyStats:
        for p in self.properties:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_json(self) -> dict:
        out = {"properties": [p.to_json() for p in self.properties]}
        if self.rejected:
            out["rejected"] = [s.to_json() for s in self.rejected]
        return out


def run_properties(specs, registry=None, max_counterexamples: int = 5) -> SuiteReport:
    """Run each named property on every generated instance.

    Exceptions raised by a property count as failures with slack ``-inf``.
    """
    names = list(REGISTRY) if registry is None else list(registry)
    for name in names:
        if name not in REGISTRY:
            raise KeyError(f"unknown property {name!r}")
    stats = [PropertyStats(n) for n in names]
    rejected = []
    for spec in specs:
        try:
            inst = generate(spec)
        except InstanceRejected:
            rejected.append(spec)
            continue
        for st in stats:
            try:
                ok, slack = REGISTRY[st.name](inst)
            except Exception:  # noqa: BLE001 - failures are data here
                ok, slack = False, -math.inf
            st.worst_slack = min(st.worst_slack, float(slack))
            if ok:
                st.passed += 1
            else:
                st.failed += 1
                if len(st.counterexamples) < max_counterexamples:
                    st.counterexamples.append(spec)
    return SuiteReport(stats, rejected)


def _fails(spec, prop):
    if isinstance(prop, str):
        try:
            inst = generate(spec)
        except (InstanceRejected, ValueError):
            # an invalid candidate spec does not reproduce the failure
            return False
        prop = REGISTRY[prop]
        call = lambda: prop(inst)  # noqa: E731
    else:
        call = lambda: prop(spec)  # noqa: E731
    try:
        ok, _ = call()
    except Exception:  # noqa: BLE001
        return True
    return not ok


def shrink(spec: InstanceSpec, prop) -> InstanceSpec:
    """Greedily lower dimension, rank and ``n_max`` while ``prop`` still fails.

    ``prop`` is a registry name or a callable ``spec -> (passed, slack)``.
    Returns the input unchanged if it does not fail or cannot be reduced.
    """
    if not _fails(spec, prop):
        return spec
    current = spec
    progress = True
    while progress:
        progress = False
        for cand in _smaller(current):
            if _fails(cand, prop):
                current = cand
                progress = True
                break
    return current


def _smaller(spec):
    if spec.dim > 1:
        yield replace(spec, dim=spec.dim - 1)
    if spec.target_dim is not None and spec.target_dim > 1:
        yield replace(spec, target_dim=spec.target_dim - 1)
    if spec.rank > 1:
        yield replace(spec, rank=spec.rank - 1)
    if spec.n_max > 1:
        yield replace(spec, n_max=max(1, spec.n_max // 2))
