import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorsub import catalog, linalg
from lorsub.linalg import DegenerateMetricError, NotSymmetricError


def test_frozen_signatures(frozen):
    for case in frozen["signatures"]:
        assert linalg.signature(np.array(case["matrix"], dtype=float)).as_tuple() == tuple(case["signature"])


def test_simple_signatures():
    assert linalg.signature(np.eye(4)).as_tuple() == (4, 0, 0)
    assert linalg.signature(np.diag([1.0, 1.0, -1.0])).as_tuple() == (2, 1, 0)
    assert linalg.signature(np.zeros((0, 0))).as_tuple() == (0, 0, 0)


def test_non_symmetric_rejected():
    with pytest.raises(NotSymmetricError):
        linalg.signature(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NotSymmetricError):
        linalg.signature(np.ones((2, 3)))


def test_fiber_gram_of_r5_r2():
    entry = catalog.load_example("ls-r5-r2")
    p = np.array([0.3, -0.2, 0.1, 0.5, 0.0])
    g = entry.chart.metric_at(p)
    V = np.array([v.at(p) for v in entry.declared.vertical])
    gram = V @ g @ V.T
    want = tuple(int(np.sum(f(np.linalg.eigvalsh(gram)))) for f in (lambda e: e > 1e-12, lambda e: e < -1e-12))
    assert linalg.signature(gram).as_tuple() == want + (0,) == (2, 1, 0)
    frame = linalg.pseudo_orthonormalize(V, g)
    assert sorted(frame.signs) == [-1, 1, 1]
    assert frame.gram_residual(g) <= 1e-12


def test_null_space_examples():
    assert len(linalg.null_space(np.zeros((2, 2)))) == 2
    assert linalg.null_space(np.eye(3)) == []
    entry = catalog.load_example("ls-r5-r2")
    J = entry.fmap.jacobian([0.1, 0.2, 0.3, 0.4, 0.5])
    ker = linalg.null_space(J)
    assert len(ker) == 3
    for v in ker:
        assert np.max(np.abs(J @ v)) <= 1e-12


def test_orthogonal_complements():
    comp = linalg.g_orthogonal_complement([np.array([1.0, 0.0])], np.eye(2))
    assert len(comp) == 1 and abs(comp[0][0]) < 1e-15
    entry = catalog.load_example("lps-r7-r5")
    p = np.array([0.2, -0.1, 0.3, 0.4, -0.5, 0.6, 0.1])
    g = entry.chart.metric_at(p)
    V = np.array([v.at(p) for v in entry.declared.vertical])
    H = linalg.g_orthogonal_complement(V, g)
    assert len(H) == 5
    xi = entry.structure.xi.at(p)
    # xi lies in the horizontal space
    coef, *_ = np.linalg.lstsq(np.array(H).T, xi, rcond=None)
    assert np.max(np.abs(np.array(H).T @ coef - xi)) <= 1e-12
    back = linalg.g_orthogonal_complement(H, g)
    assert linalg.rank(np.vstack([V, back])) == 2


def test_mu_complement_in_r5_r3():
    entry = catalog.load_example("ls-r5-r3")
    p = np.array([0.25, -0.4, 0.1, 0.3, -0.2])
    g = entry.chart.metric_at(p)
    phi = entry.structure.phi.at(p)
    V = np.array([v.at(p) for v in entry.declared.vertical])
    H = np.array(linalg.g_orthogonal_complement(V, g))
    phiV = (phi @ V.T).T
    # inside the horizontal space, the g-complement of phi(ker) is span{xi}
    basis = linalg.pseudo_orthonormalize(H, g)
    P = linalg.projector(basis, g)
    inside = [P @ w for w in linalg.g_orthogonal_complement(phiV, g)]
    inside = [w for w in inside if np.linalg.norm(w) > 1e-9]
    assert linalg.rank(np.array(inside)) == 1
    xi = entry.structure.xi.at(p)
    w = inside[0]
    assert np.linalg.norm(w - (w @ xi) / (xi @ xi) * xi) <= 1e-9 * np.linalg.norm(w)


def test_pseudo_orthonormalize_examples():
    f = linalg.pseudo_orthonormalize(np.eye(3), np.eye(3))
    assert f.signs == (1, 1, 1)
    np.testing.assert_allclose(np.abs(f.vectors), np.eye(3))
    entry = catalog.load_example("model-r2n1(1,-1)")
    p = np.array([0.3, 0.2, -0.4])
    f = linalg.pseudo_orthonormalize([entry.structure.xi.at(p)], entry.chart.metric_at(p))
    assert f.signs == (-1,)


def test_null_pair_is_handled_and_null_span_rejected():
    g = np.array([[0.0, 1.0], [1.0, 0.0]])
    f = linalg.pseudo_orthonormalize(np.eye(2), g)
    assert sorted(f.signs) == [-1, 1]
    assert f.gram_residual(g) <= 1e-14
    with pytest.raises(DegenerateMetricError):
        linalg.pseudo_orthonormalize([np.array([1.0, 0.0])], g)
    with pytest.raises(DegenerateMetricError):
        linalg.check_nondegenerate(np.diag([1.0, 0.0]))


# ---------------------------------------------------------------------------
# Sylvester's law: Q D Q^T has the sign pattern of D
# ---------------------------------------------------------------------------

@st.composite
def congruent(draw):
    n = draw(st.integers(1, 7))
    signs = draw(st.lists(st.sampled_from([-1, 0, 1]), min_size=n, max_size=n))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    mags = rng.uniform(0.2, 3.0, n)
    Q = rng.normal(size=(n, n))
    while abs(np.linalg.det(Q)) < 0.1:
        Q = rng.normal(size=(n, n))
    M = Q @ np.diag(np.array(signs) * mags) @ Q.T
    return M, (signs.count(1), signs.count(-1), signs.count(0))


@settings(max_examples=200, deadline=None)
@given(congruent())
def test_signature_is_congruence_invariant(case):
    M, want = case
    assert linalg.signature(M, 1e-9).as_tuple() == want


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6), st.integers(0, 3))
def test_null_space_rank_nullity(seed, rows, cols_extra):
    rng = np.random.default_rng(seed)
    cols = rows + cols_extra
    r = rng.integers(0, rows + 1)
    m = rng.normal(size=(rows, r)) @ rng.normal(size=(r, cols))
    ker = linalg.null_space(m)
    assert linalg.rank(m) + len(ker) == cols
    for v in ker:
        assert np.max(np.abs(m @ v)) <= 1e-9 * max(1.0, np.linalg.norm(m))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 6))
def test_orthonormalized_frame_spans_input(seed, n):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, n + 1))
    g = np.diag(np.where(rng.random(n) < 0.3, -1.0, 1.0))
    B = rng.normal(size=(k, n))
    gram = B @ g @ B.T
    if np.min(np.abs(np.linalg.eigvalsh(gram))) < 1e-3:
        return
    f = linalg.pseudo_orthonormalize(B, g)
    assert len(f) == k
    assert f.gram_residual(g) <= 1e-9
    assert linalg.rank(np.vstack([B, f.vectors])) == k
    P = linalg.projector(f, g)
    np.testing.assert_allclose(P @ P, P, atol=1e-8)
    np.testing.assert_allclose(P @ B.T, B.T, atol=1e-8)


def test_all_null_basis_keeps_its_span():
    g = np.diag([1.0, -1.0, 1.0, -1.0])
    null = np.array([[1, 1, 0, 0], [1, -1, 0, 0], [0, 0, 1, 1], [0, 0, 1, -1]], dtype=float)
    f = linalg.pseudo_orthonormalize(null, g)
    assert sorted(f.signs) == [-1, -1, 1, 1]
    assert f.gram_residual(g) <= 1e-12
    assert linalg.rank(f.vectors) == 4
