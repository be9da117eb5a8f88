import math
import warnings

import numpy as np
import pytest
from scipy.linalg import fractional_matrix_power, sqrtm

from petzlab import channels as ch
from petzlab.algebra import (
    ReferenceDensity,
    hs_inner,
    is_state,
    random_reference,
    random_state,
    schatten_p_norm,
    weighted_inner,
    weighted_p_norm,
)
from petzlab.petz import (
    GapAmbiguityWarning,
    NumericalError,
    decompose,
    fixed_point_analysis,
    interpolation_bound,
    iterate,
    iteration_distance,
    l1_norm_probe,
    l1_norm_probe_sequence,
    petz_map,
    weighted_conjugation,
)


def ginibre(seed, n=3):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def petz_oracle(ks, b, y, n, m):
    """R(Y) straight from Kraus operators and scipy matrix roots."""
    sigma = sum(k @ b @ k.conj().T for k in ks)
    si = np.linalg.inv(sqrtm(sigma))
    z = si @ y @ si
    dual = (n / m) * sum(k.conj().T @ z @ k for k in ks)
    bh = sqrtm(b)
    return bh @ dual @ bh


def spectrum_oracle(t):
    """Eigenvalues of the raw iteration matrix, descending (similar to the symmetrized one)."""
    return np.sort(np.linalg.eigvals(t.matrix).real)[::-1]


# petz_map ------------------------------------------------------------------

def test_petz_identity_channel():
    for seed in range(3):
        b = random_reference(3, seed=seed)
        r = petz_map(ch.identity(3), b)
        assert np.abs(r.matrix - np.eye(9)).max() <= 1e-12


def test_petz_pinching_unit_reference():
    p = ch.pinching((2, 2))
    r = petz_map(p, np.eye(4))
    assert np.abs(r.matrix - p.matrix).max() <= 1e-12


@pytest.mark.parametrize("n, m", [(2, 2), (3, 3), (3, 2), (2, 4)])
def test_petz_against_formula(n, m):
    ks = ch.random_kraus(n, m, 3, seed=n + 10 * m)
    phi = ch.from_kraus(ks, n, m)
    b = random_reference(n, seed=7)
    r = petz_map(phi, b)
    y = ginibre(3, m)
    assert np.abs(r(y) - petz_oracle(ks, b.matrix, y, n, m)).max() <= 1e-10
    assert r.is_cp and r.is_tp
    assert np.abs(r(phi(b.matrix)) - b.matrix).max() <= 1e-9


def test_petz_is_weighted_adjoint():
    phi = ch.random_channel(3, 2, rank=3, seed=1)
    b = random_reference(3, seed=2)
    sigma = ReferenceDensity(phi(b.matrix))
    r = petz_map(phi, b)
    x, y = ginibre(5, 3), ginibre(6, 2)
    assert abs(weighted_inner(phi(x), y, sigma) - weighted_inner(x, r(y), b)) <= 1e-10


def test_petz_rejects_non_strict():
    from petzlab.algebra import tau

    collapse = ch.from_function(lambda x: 2 * tau(x) * np.diag([1.0, 0.0]), 2)
    with pytest.raises(ValueError):
        petz_map(collapse, np.eye(2))
    with pytest.raises(ValueError):
        petz_map(ch.transpose_map(2), np.eye(2))
    with pytest.raises(ValueError):
        petz_map(ch.identity(2), np.eye(3) )


# weighted conjugation ------------------------------------------------------

def test_weighted_conjugation():
    x = ginibre(0)
    assert np.allclose(weighted_conjugation(x, np.eye(3)), x)
    b = random_reference(3, seed=1)
    assert np.allclose(weighted_conjugation(b.matrix, b), fractional_matrix_power(b.matrix, 0.5), atol=1e-12)
    back = weighted_conjugation(weighted_conjugation(x, b), b, "inverse")
    assert np.abs(back - x).max() <= 1e-10
    y = ginibre(2)
    assert abs(weighted_inner(x, y, b) - hs_inner(weighted_conjugation(x, b), weighted_conjugation(y, b))) <= 1e-10
    with pytest.raises(ValueError):
        weighted_conjugation(x, b, "sideways")


# fixed_point_analysis -------------------------------------------------------

def test_analysis_identity():
    b = random_reference(3, seed=0)
    an = fixed_point_analysis(ch.identity(3), b)
    assert an.fixed_dim == 9 and an.delta == 0
    assert np.array_equal(an.psi.matrix, np.eye(9))


def test_analysis_pinching():
    p = ch.pinching((2, 2))
    an = fixed_point_analysis(p, np.eye(4))
    assert an.fixed_dim == 8
    assert an.delta <= 1e-10
    assert np.abs(an.psi.matrix - p.matrix).max() <= 1e-10
    assert np.allclose(an.spectrum, [1] * 8 + [0] * 8, atol=1e-12)


def test_analysis_unitary_conjugation():
    u = ch.random_unitary(3, seed=4)
    an = fixed_point_analysis(ch.conjugation(u), random_reference(3, seed=5))
    assert an.fixed_dim == 9 and an.delta == 0


def test_analysis_random_qubit_certificate():
    phi = ch.random_channel(2, rank=2, seed=11)
    b = random_reference(2, seed=12)
    an = fixed_point_analysis(phi, b)
    assert 0 < an.delta < 1
    oracle = spectrum_oracle(an.iteration)
    assert an.delta == pytest.approx(oracle[an.fixed_dim], abs=1e-10)
    assert np.allclose(an.spectrum, oracle, atol=1e-10)
    for n in range(1, 61):
        assert iteration_distance(an, n) <= an.delta ** n * (1 + 1e-8)


def test_direct_and_factored_distance_agree_before_roundoff_floor():
    phi = ch.random_channel(3, rank=2, seed=3)
    an = fixed_point_analysis(phi, random_reference(3, seed=4))
    for n in range(1, 8):
        d1, d2 = iteration_distance(an, n, "direct"), iteration_distance(an, n, "factored")
        assert d1 == pytest.approx(d2, abs=1e-13)
        assert d1 == pytest.approx(an.delta ** n, rel=1e-8)
    with pytest.raises(ValueError):
        iteration_distance(an, 1, "other")


def test_psi_laws():
    for seed in range(10):
        n = 2 + seed % 3
        phi = ch.random_channel(n, rank=2, seed=seed)
        b = random_reference(n, seed=100 + seed)
        an = fixed_point_analysis(phi, b)
        psi, t = an.psi.matrix, an.iteration.matrix
        assert np.abs(psi @ psi - psi).max() <= 1e-9
        assert np.abs(t @ psi - psi).max() <= 1e-9
        assert np.abs(psi @ t - psi).max() <= 1e-9
        assert an.psi.is_cp and ch.is_tp(an.psi, 1e-9)
        assert np.abs(an.psi(b.matrix) - b.matrix).max() <= 1e-9
        assert an.raw_spectrum.min() >= -1e-9
        for x in an.basis_V:
            assert schatten_p_norm(an.iteration(x) - x, 2) <= 1e-8 * schatten_p_norm(x, 2)
        # basis of V is orthonormal for the weighted inner product
        g = np.array([[weighted_inner(x, y, b) for y in an.basis_V] for x in an.basis_V])
        assert np.allclose(g, np.eye(an.fixed_dim), atol=1e-10)


def test_fixed_space_contains_commutant_for_unital_mixture():
    # a mixed-unitary channel of diagonal unitaries fixes every diagonal matrix
    d1 = np.diag(np.exp(1j * np.array([0.3, 1.1, 2.0])))
    d2 = np.diag(np.exp(1j * np.array([1.7, 0.2, 0.9])))
    phi = ch.mixed_unitary([0.5, 0.5], [d1, d2])
    an = fixed_point_analysis(phi, np.eye(3))
    assert an.fixed_dim == 3
    x = np.diag([0.2, 1.0, 1.8])
    assert np.allclose(an.psi(x), x)


def test_analysis_json():
    an = fixed_point_analysis(ch.pinching((1, 1)), np.eye(2))
    js = an.to_json()
    assert set(js) == {"delta", "fixed_dim", "spectrum", "psi", "warnings"}
    assert js["fixed_dim"] == 2


def test_ambiguity_band_warns():
    # depolarizing close to identity has eigenvalue lam^2 close to 1
    lam = 1 - 1e-7
    with pytest.warns(GapAmbiguityWarning):
        an = fixed_point_analysis(ch.depolarizing_like(2, lam), np.eye(2))
    assert an.warnings


def test_non_self_adjoint_is_hard_error(monkeypatch):
    import petzlab.petz as pz

    phi = ch.random_channel(2, seed=0)
    bogus = ch.random_channel(2, seed=1)
    monkeypatch.setattr(pz, "petz_map", lambda phi, b: ch.adjoint(bogus))
    with pytest.raises(NumericalError):
        pz.fixed_point_analysis(phi, np.eye(2))


def test_eps_fix_range():
    with pytest.raises(ValueError):
        fixed_point_analysis(ch.identity(2), np.eye(2), eps_fix=1e-3)


# iterate -------------------------------------------------------------------

def test_iterate_fixed_state():
    phi = ch.random_channel(3, seed=1)
    b = random_reference(3, seed=2)
    tr = iterate(phi, b, b.matrix, 10, [1.5])
    assert np.max(tr.dist_l1) <= 1e-12 and np.max(tr.dist_B2) <= 1e-12
    assert np.max(tr.dist_Bp[1.5]) <= 1e-12


def test_iterate_certificates():
    for seed in range(10):
        n = 2 + seed % 3
        phi = ch.random_channel(n, rank=2, seed=seed)
        b = random_reference(n, seed=50 + seed)
        a = random_state(n, seed=90 + seed)
        an = fixed_point_analysis(phi, b)
        tr = iterate(phi, b, a, 40, [1.25, 1.5, 3.0], analysis=an)
        assert all(is_state(x, tol_trace=1e-9) for x in tr.states)
        assert np.all(tr.dist_B2 <= tr.cert_delta_pow * (1 + 1e-8))
        assert np.all(np.diff(tr.dist_l1) <= 1e-15 + 1e-8 * tr.dist_l1[:-1])
        norm_a = {p: weighted_p_norm(a, b, p) for p in tr.dist_Bp}
        for k in range(41):
            for p, col in tr.dist_Bp.items():
                assert col[k] <= interpolation_bound(p, an.delta ** k) * norm_a[p] * (1 + 1e-8)


def test_iterate_direct_distance_matches_stable_column():
    phi = ch.random_channel(2, rank=3, seed=8)
    b = random_reference(2, seed=9)
    a = random_state(2, seed=10)
    tr = iterate(phi, b, a, 5)
    for k in range(6):
        direct = weighted_p_norm(tr.states[k] - tr.limit, b, 2)
        assert direct == pytest.approx(tr.dist_B2[k], abs=1e-13)


def test_iterate_csv():
    phi = ch.random_channel(2, seed=0)
    tr = iterate(phi, np.eye(2), random_state(2, seed=1), 3, [1.5])
    lines = tr.to_csv().splitlines()
    assert lines[0] == "n,dist_l1,dist_B2,cert_delta_pow,dist_Bp_1.5"
    assert len(lines) == 5
    with pytest.raises(ValueError):
        iterate(phi, np.eye(2), np.eye(2), 0)


def test_interpolation_bound_values():
    assert interpolation_bound(2, 0.3) == 0.3
    assert interpolation_bound(1.5, 0.25) == pytest.approx(2 ** (1 / 3) * 0.25 ** (2 / 3))
    assert interpolation_bound(4, 0.25) == pytest.approx(2 ** 0.5 * 0.25 ** 0.5)
    with pytest.raises(ValueError):
        interpolation_bound(1, 0.5)


# decompose -----------------------------------------------------------------

def test_decompose_reference_and_recoverable():
    phi = ch.random_channel(3, seed=3)
    b = random_reference(3, seed=4)
    d = decompose(phi, b, b.matrix)
    assert np.abs(d.c).max() <= 1e-9 and np.allclose(d.a0, b.matrix)
    a0 = d.analysis.psi(random_state(3, seed=5))
    d2 = decompose(phi, b, a0, d.analysis)
    assert np.abs(d2.c).max() <= 1e-9


def test_decompose_random_state():
    for seed in range(10):
        n = 2 + seed % 3
        phi = ch.random_channel(n, rank=2, seed=seed)
        b = random_reference(n, seed=seed + 1)
        a = random_state(n, seed=seed + 2)
        d = decompose(phi, b, a)
        assert all(d.checks.values()), d.checks
        scale = np.abs(a).max()
        np.testing.assert_allclose(d.a0 + d.c, a, rtol=0, atol=4 * np.finfo(float).eps * scale)
        an = d.analysis
        k = d.vanishing_steps()
        x = d.c
        for _ in range(k):
            x = an.iteration(x) - an.psi(x)
        bound = d.vanishing_constant() * an.delta ** k * schatten_p_norm(d.c, 1)
        assert schatten_p_norm(x, 1) <= bound * (1 + 1e-8)


def test_decompose_uniqueness():
    # pinching has a large fixed space, so distinct recoverable states exist
    phi = ch.pinching((1, 2))
    b = ReferenceDensity(np.diag([0.5, 1.0, 1.5]))
    a = random_state(3, seed=23)
    d = decompose(phi, b, a)
    assert d.analysis.fixed_dim == 5
    other = d.analysis.psi(random_state(3, seed=24))
    assert np.abs(other - d.a0).max() > 1e-3
    c_alt = a - other
    # a competing split leaves a nonzero psi-component in the remainder
    assert np.abs(d.analysis.psi(c_alt)).max() > 1e-3
    assert np.abs(d.analysis.psi(d.c)).max() <= 1e-9


# l1 probe ------------------------------------------------------------------

def test_probe_identity_is_zero():
    assert l1_norm_probe(ch.identity(2), np.eye(2), 3, restarts=2) == 0.0


def test_probe_monotone_and_dominates_states():
    phi = ch.random_channel(2, rank=2, seed=5)
    b = random_reference(2, seed=6)
    states = [random_state(2, seed=s) for s in range(3)]
    an = fixed_point_analysis(phi, b)
    ns = list(range(0, 8))
    seq = l1_norm_probe_sequence(phi, b, ns, restarts=4, seed=0, analysis=an, states=states)
    assert np.all(seq[1:] <= seq[:-1] * (1 + 1e-8))
    for a in states:
        h = a - an.psi(a)
        x = h
        for n in ns:
            if n:
                x = an.iteration(x) - an.psi(x)
            assert seq[n] >= schatten_p_norm(x, 1) / schatten_p_norm(h, 1) * (1 - 1e-12)


def test_probe_is_deterministic():
    phi = ch.random_channel(2, rank=2, seed=7)
    b = random_reference(2, seed=8)
    v1 = l1_norm_probe(phi, b, 2, restarts=3, seed=4)
    v2 = l1_norm_probe(phi, b, 2, restarts=3, seed=4)
    assert v1 == v2 and v1 > 0
    with pytest.raises(ValueError):
        l1_norm_probe(phi, b, -1)


def test_probe_bounded_by_two():
    # both T^n and psi are L^1 contractions
    phi = ch.random_channel(2, rank=2, seed=9)
    seq = l1_norm_probe_sequence(phi, random_reference(2, seed=1), [0, 1, 5], restarts=4)
    assert np.all(seq <= 2 + 1e-9)
