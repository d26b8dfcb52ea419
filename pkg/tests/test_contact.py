import numpy as np
import pytest

from lorsub import catalog
from lorsub.contact import (
    ContactStructure,
    verify_all,
    verify_almost_contact,
    verify_kcontact_sasakian,
)


def _structure(name):
    return catalog.load_example(name).structure


def test_residuals_match_independent_oracle(frozen):
    """Every axiom residual, passing or not, equals the sympy value at the same point."""
    for case in frozen["model"]:
        if case["convention"] != "frame":
            continue
        S = _structure(f"model-r2n1({case['n']},{case['epsilon']})")
        for row in case["rows"]:
            p = np.array(row["point"])
            for kappa in (0.5, 1.0):
                rep = verify_all(S, [p], 1e-9, kappa)
                for name, want in row["residuals"].items():
                    if name.startswith("d eta"):
                        if ("1/2" in name) != (kappa == 0.5):
                            continue
                        name = "d eta(X, Y) = Phi(X, Y)"
                    assert rep.axioms[name].worst == pytest.approx(want, abs=1e-12), (case["n"], name)


@pytest.mark.parametrize("n,eps", [(1, -1), (2, -1), (3, -1), (1, 1), (2, 1)])
def test_almost_contact_axioms_hold(n, eps):
    S = _structure(f"model-r2n1({n},{eps})")
    rng = np.random.default_rng(n)
    rep = verify_almost_contact(S, rng.uniform(-1, 1, (10, 2 * n + 1)))
    assert rep.passed, {k: a.worst for k, a in rep.axioms.items() if not a.passed}


def test_killing_identity_along_the_frame():
    # nabla_X xi = eps phi X for X = E_1 = 2 d/dy1 in the contact case
    S = _structure("model-r2n1(1,-1)")
    rng = np.random.default_rng(8)
    E1 = S.chart.vector(["0", "2", "0"])
    for p in rng.uniform(-1, 1, (10, 3)):
        loc = S.chart.at(p)
        lhs = loc.nabla(E1, S.xi).val
        rhs = S.epsilon * S.phi.at(p) @ E1.at(p)
        assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_sasakian_identity_residual_on_the_contact_model():
    """The frame-consistent phi fails the second-order identity by a fixed amount.

    Its value is pinned so that any drift in the connection or in the
    identity's implementation shows up here.
    """
    S = _structure("model-r2n1(1,-1)")
    rng = np.random.default_rng(9)
    rep = verify_kcontact_sasakian(S, rng.uniform(-1, 1, (20, 3)))
    assert rep.axioms["nabla_X xi = eps phi X"].passed
    assert rep.axioms["(nabla_X phi) Y = g(phi X, phi Y) xi + eta(Y) phi^2 X"].worst == pytest.approx(1.0)


def test_para_model_is_not_k_paracontact():
    S = _structure("model-r2n1(1,1)")
    rep = verify_kcontact_sasakian(S, [np.array([0.1, 0.2, 0.3])])
    assert rep.axioms["nabla_X xi = eps phi X"].worst == pytest.approx(2.0)


def test_flat_rotation_is_almost_contact_but_not_k_contact():
    S = _structure("product-r3-r2")
    pts = [np.array([0.1, -0.2, 0.3]), np.array([0.5, 0.5, -0.5])]
    assert verify_almost_contact(S, pts).passed
    rep = verify_kcontact_sasakian(S, pts)
    assert not rep.axioms["nabla_X xi = eps phi X"].passed


def test_scaled_xi_breaks_normalization():
    entry = catalog.load_example("model-r2n1(1,-1)")
    doc = catalog.entry_to_dict(entry)
    doc["structure"]["xi"] = ["0", "0", "4"]
    S = catalog.entry_from_dict(doc).structure
    rep = verify_almost_contact(S, [np.array([0.2, 0.1, -0.3])])
    assert "eta(xi) = -epsilon" in rep.failed()
    assert "g(xi, xi) = -1" in rep.failed()


def test_zero_phi_fails_rank():
    entry = catalog.load_example("model-r2n1(1,-1)")
    doc = catalog.entry_to_dict(entry)
    doc["structure"]["phi"] = [["0"] * 3 for _ in range(3)]
    S = catalog.entry_from_dict(doc).structure
    rep = verify_almost_contact(S, [np.array([0.2, 0.1, -0.3])])
    assert "rank phi = dim - 1" in rep.failed()


def test_kappa_is_echoed_and_validated():
    S = _structure("model-r2n1(1,-1)")
    rep = verify_all(S, [np.zeros(3)], kappa=1.0)
    assert rep.kappa == 1.0
    assert rep.axioms["d eta(X, Y) = Phi(X, Y)"].note == "kappa = 1.0"
    with pytest.raises(ValueError):
        verify_all(S, [np.zeros(3)], kappa=0.25)


def test_structure_rejects_bad_epsilon():
    S = _structure("model-r2n1(1,-1)")
    with pytest.raises(ValueError):
        ContactStructure(S.chart, 0, S.phi, S.xi, S.eta)
