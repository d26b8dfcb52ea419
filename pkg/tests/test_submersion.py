import numpy as np
import pytest

from lorsub import catalog, linalg
from lorsub.geometry import Chart
from lorsub.submersion import (
    DeclaredFrames,
    MissingDeclaredFieldsError,
    SmoothMap,
    SubmersionError,
    SubmersionPoint,
    analyze_split,
    map_identities,
    oneill_A,
    oneill_identities,
    oneill_T,
    pushforward,
    second_fundamental_form,
    tension_and_harmonic,
)

TOL = 1e-9


def _polar():
    # (r, t) -> r; fibers are circles of radius r
    src = Chart(["r", "t"], [["1", "0"], ["0", "r^2"]])
    tgt = Chart(["s"], [["1"]])
    F = SmoothMap(src, tgt, ["r"])
    D = DeclaredFrames((src.vector(["0", "1"]),), (src.vector(["1", "0"]),))
    return F, D


def _heisenberg():
    # dx^2 + dy^2 + (dz - x dy)^2 -> (x, y) with the flat metric
    src = Chart(["x", "y", "z"], [["1", "0", "0"], ["0", "1 + x^2", "-x"], ["0", "-x", "1"]])
    tgt = Chart(["u", "v"], [["1", "0"], ["0", "1"]])
    F = SmoothMap(src, tgt, ["x", "y"])
    D = DeclaredFrames((src.vector(["0", "0", "1"]),), (src.vector(["1", "0", "0"]), src.vector(["0", "1", "x"])))
    return F, D


def test_projector_matches_jacobian_formula(frozen):
    """P_H = g^-1 J^T (J g^-1 J^T)^-1 J, frozen from sympy."""
    entry = catalog.load_example("ls-r5-r2")
    for row in frozen["r5_r2"]:
        p = np.array(row["point"])
        sp = SubmersionPoint(entry.fmap, p, entry.declared)
        np.testing.assert_allclose(sp.PH.val, row["P_H"], atol=1e-12)
        split = analyze_split(entry.fmap, p)
        np.testing.assert_allclose(np.eye(5) - linalg.projector(split.vertical, sp.loc.G.val), row["P_H"],
                                   atol=1e-12)


def test_isometry_witness(frozen):
    entry = catalog.load_example("ls-r5-r2")
    H1 = entry.declared.horizontal[0]
    gN = entry.fmap.target.metric_at([0, 0])
    for row in frozen["r5_r2"]:
        p = np.array(row["point"])
        h = H1.at(p)
        assert h @ entry.chart.metric_at(p) @ h == pytest.approx(row["g(H1, H1)"]) == pytest.approx(2.0)
        Fh = pushforward(entry.fmap, H1, p)
        assert Fh @ gN @ Fh == pytest.approx(row["gN(F* H1, F* H1)"]) == pytest.approx(2.0)


def test_split_of_r5_r2():
    entry = catalog.load_example("ls-r5-r2")
    s = analyze_split(entry.fmap, [0.1, 0.2, -0.3, 0.4, 0.5], TOL, entry.declared)
    assert s.is_submersion
    assert s.fiber_signature.as_tuple() == (2, 1, 0)
    assert s.target_signature.as_tuple() == (2, 0, 0)
    assert all(v <= TOL for v in s.declared_residuals.values())
    assert s.full_frame.gram_residual(entry.chart.metric_at(s.point)) <= 1e-12


def test_circles_have_the_expected_second_fundamental_form():
    F, D = _polar()
    p = np.array([1.7, 0.4])
    split = analyze_split(F, p, TOL, D)
    T = oneill_T(F, [0.0, 1.0], [0.0, 1.0], p, split)
    np.testing.assert_allclose(T.value, [-1.7, 0.0], atol=1e-12)
    np.testing.assert_allclose(T.horizontal, T.value, atol=1e-12)
    # T_U X = -(1/r) U for the unit radial direction
    np.testing.assert_allclose(oneill_T(F, [0, 1], [1, 0], p, split).value, [0, 1 / 1.7], atol=1e-12)
    t = tension_and_harmonic(F, p, split, TOL)
    # for a submersion the tension is -F_* of the summed fiber curvature
    assert t.tension_norm == pytest.approx(1 / 1.7)
    assert t.mean_curvature_norm == pytest.approx(1 / 1.7)
    assert not t.harmonic and not t.minimal_fibers


def test_heisenberg_projection_has_a_equal_half_bracket():
    F, D = _heisenberg()
    p = np.array([0.3, -0.2, 0.7])
    split = analyze_split(F, p, TOL, D)
    assert split.is_submersion
    X1, X2 = np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, p[0]])
    A = oneill_A(F, X1, X2, p, split)
    np.testing.assert_allclose(A.value, [0, 0, 0.5], atol=1e-12)
    np.testing.assert_allclose(oneill_A(F, X2, X1, p, split).value, [0, 0, -0.5], atol=1e-12)
    ids = oneill_identities(F, p, D, TOL, split)
    assert all(v <= 1e-10 for v in ids.values()), ids
    mids = map_identities(F, p, D, TOL, split)
    assert all(v <= 1e-10 for v in mids.values()), mids


def test_identities_on_r5_r2_and_product():
    for name in ("ls-r5-r2", "product-r3-r2"):
        entry = catalog.load_example(name)
        rng = np.random.default_rng(4)
        for p in rng.uniform(-1, 1, (5, entry.chart.dim)):
            split = analyze_split(entry.fmap, p, TOL, entry.declared)
            ids = oneill_identities(entry.fmap, p, entry.declared, TOL, split)
            ids.update(map_identities(entry.fmap, p, entry.declared, TOL, split))
            assert all(v <= TOL for v in ids.values()), (name, ids)


def test_product_projection_is_totally_geodesic():
    entry = catalog.load_example("product-r3-r2")
    p = np.array([0.2, 0.3, -0.1])
    split = analyze_split(entry.fmap, p, TOL, entry.declared)
    for E in np.eye(3):
        for G in np.eye(3):
            assert not np.any(np.abs(oneill_T(entry.fmap, E, G, p, split).value) > 1e-14)
            assert not np.any(np.abs(oneill_A(entry.fmap, E, G, p, split).value) > 1e-14)
    assert np.max(np.abs(second_fundamental_form(entry.fmap, [1, 0, 0], [0, 1, 1], p, split))) <= 1e-14


def test_seven_to_five_map_is_not_an_isometry_on_horizontals():
    entry = catalog.load_example("lps-r7-r5")
    split = analyze_split(entry.fmap, np.full(7, 0.1), TOL, entry.declared)
    assert split.kernel_residual <= TOL
    assert split.isometry_residual > 0.1
    assert not split.is_submersion


def test_rank_drop_and_missing_fields():
    src = Chart(["x", "y"], [["1", "0"], ["0", "1"]])
    F = SmoothMap(src, Chart(["u"], [["1"]]), ["x^2"])
    with pytest.raises(SubmersionError):
        analyze_split(F, [0.0, 0.3])
    F2 = SmoothMap(src, Chart(["u"], [["1"]]), ["x"])
    split = analyze_split(F2, [0.2, 0.3])
    with pytest.raises(MissingDeclaredFieldsError):
        oneill_T(F2, [0, 1], [0, 1], [0.2, 0.3], split)
    with pytest.raises(ValueError):
        SmoothMap(src, Chart(["u"], [["1"]]), ["x", "y"])
