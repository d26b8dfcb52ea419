import numpy as np
import pytest

from lorsub import catalog
from lorsub.antiinv import (
    LOCALLY_PRODUCT,
    CriterionResult,
    anti_point,
    bc_mu_decompose,
    check_anti_invariance,
    check_expected_facts,
    decomposition_classify,
    lemma_residual_suite,
    xi_position,
    xi_position_and_dimension_audit,
)

TOL = 1e-9


def _load(name):
    e = catalog.load_example(name)
    return e, (e.fmap, e.structure)


def _pts(entry, k=3, seed=0):
    return np.random.default_rng(seed).uniform(-entry.box, entry.box, (k, entry.chart.dim))


@pytest.mark.parametrize("name,pos", [("ls-r5-r2", "vertical"), ("lps-r7-r5", "horizontal"),
                                      ("ls-r5-r3", "horizontal")])
def test_xi_position(name, pos):
    e, (F, S) = _load(name)
    for p in _pts(e):
        assert xi_position(F, S, p, TOL, e.declared) == pos


ANTI = [n for n in catalog.list_examples()[1:] if n not in ("lps-r5-r2", "lps-r7-r5-para")]


@pytest.mark.parametrize("name", ANTI)
def test_expected_facts_of_submersion_entries(name):
    e, (F, S) = _load(name)
    rows = check_expected_facts(F, S, e.expected, _pts(e), TOL, e.declared)
    assert rows
    assert all(r.verdict for r in rows), [(r.id, r.note) for r in rows if not r.verdict]


def test_para_variant_is_not_anti_invariant():
    e, (F, S) = _load("lps-r5-r2")
    r = check_anti_invariance(F, S, _pts(e)[0], TOL, e.declared)
    assert not r.verdict and r.residual > 0.1


def test_anti_invariance_residual_on_r5_r2():
    e, (F, S) = _load("ls-r5-r2")
    for k, p in enumerate(_pts(e, 5)):
        r = check_anti_invariance(F, S, p, TOL, e.declared, index=k)
        assert r.verdict and r.point_index == k


def test_dimension_audit_holds_where_applicable():
    for name in ("ls-r5-r2", "ls-r5-r3"):
        e, (F, S) = _load(name)
        rows = xi_position_and_dimension_audit(F, S, _pts(e)[0], TOL, e.declared)
        bad = [(r.id, r.note) for r in rows if not r.verdict]
        assert not bad


def test_b_c_split_when_phi_ker_is_horizontal():
    # m = n: phi(ker) fills the horizontal space, so mu = 0 and C = 0
    e, (F, S) = _load("ls-r5-r2")
    p = _pts(e)[1]
    ap = anti_point(F, S, p, e.declared, TOL)
    assert ap.phi_ker_equals_horizontal() and ap.dim_mu == 0
    for X in ap.X:
        d = bc_mu_decompose(F, S, X, p, TOL, e.declared)
        assert np.max(np.abs(d.CX)) <= 1e-12
        assert d.mu_basis == []
        assert all(v <= 1e-10 for v in d.residuals.values()), d.residuals


def test_b_c_split_with_xi_horizontal():
    e, (F, S) = _load("ls-r5-r3")
    p = _pts(e)[2]
    ap = anti_point(F, S, p, e.declared, TOL)
    assert ap.horizontal_is_phi_ker_plus_xi()
    assert ap.dim_phi_ker == 2 and ap.dim_mu == 1
    d = bc_mu_decompose(F, S, ap.X[0], p, TOL, e.declared)
    assert all(v <= 1e-10 for v in d.residuals.values()), d.residuals
    assert len(d.mu_basis) == 1


def test_mu_requires_anti_invariance():
    e, (F, S) = _load("lps-r5-r2")
    with pytest.raises(ValueError):
        bc_mu_decompose(F, S, np.ones(5), _pts(e)[0], TOL, e.declared)


def test_lemma_suite_skips_non_anti_invariant_points():
    e, (F, S) = _load("lps-r5-r2")
    rows = lemma_residual_suite(F, S, _pts(e, 2), TOL, e.declared)
    assert all(r.skipped for r in rows)


def test_lemmas_on_r5_r2():
    e, (F, S) = _load("ls-r5-r2")
    rows = lemma_residual_suite(F, S, _pts(e, 2), TOL, e.declared)
    assert rows and not any(r.skipped for r in rows)
    assert all(r.verdict for r in rows), [(r.id, r.residual) for r in rows if not r.verdict]


def test_product_control_is_locally_product():
    e, (F, S) = _load("product-r3-r2")
    v = decomposition_classify(F, S, _pts(e), TOL, e.declared)
    assert v.classification == LOCALLY_PRODUCT and v.stable
    assert v.flags["horizontal integrable"] and v.flags["vertical totally geodesic"]


def test_criterion_result_roundtrip():
    r = CriterionResult("x", 2, [0.1], [1.0], [1.0 + 1e-12], 1e-12, 1e-9)
    d = r.as_dict()
    assert d["verdict"] is True and d["point"] == [0.1] and d["point_index"] == 2
    assert CriterionResult("x", 0, [], [], [], 0.0, 1e-9, skipped=True).verdict
    assert not CriterionResult("x", 0, [], [2.0], [0.0], 2.0, 1e-9).verdict
