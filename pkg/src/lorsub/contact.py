"""Lorentzian almost (para)contact structures and their verification.

Every axiom is checked on the coordinate frame at each sample point; the
identities are (multi)linear in the vector arguments, so this covers all
tangent vectors.  The worst residual per axiom is what gets reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .geometry import DEFAULT_KAPPA, Chart, OneForm, Tensor11Field, VectorField

__all__ = [
    "ContactStructure",
    "AxiomResult",
    "StructureReport",
    "verify_almost_contact",
    "verify_kcontact_sasakian",
    "verify_metric_contact_and_normality",
    "nijenhuis",
]


@dataclass(frozen=True)
class ContactStructure:
    chart: Chart
    epsilon: int
    phi: Tensor11Field
    xi: VectorField
    eta: OneForm

    def __post_init__(self):
        if self.epsilon not in (-1, 1):
            raise ValueError("epsilon must be +1 or -1")
        n = self.chart.dim
        if self.phi.coords != self.chart.coord_names or len(self.phi.rows) != n:
            raise ValueError("phi does not live on the chart")
        if self.xi.coords != self.chart.coord_names or self.eta.coords != self.chart.coord_names:
            raise ValueError("xi/eta do not live on the chart")


@dataclass
class AxiomResult:
    name: str
    worst: float = 0.0
    tol: float = 1e-9
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tol)

    def update(self, residual: float) -> None:
        r = float(residual)
        if not np.isfinite(r):
            r = float("inf")
        self.worst = max(self.worst, r)


@dataclass
class StructureReport:
    axioms: dict[str, AxiomResult] = field(default_factory=dict)
    points: int = 0
    kappa: float = DEFAULT_KAPPA
    tol: float = 1e-9

    def axiom(self, name: str) -> AxiomResult:
        if name not in self.axioms:
            self.axioms[name] = AxiomResult(name, tol=self.tol)
        return self.axioms[name]

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.axioms.values())

    def failed(self) -> list[str]:
        return [k for k, a in self.axioms.items() if not a.passed]

    def merge(self, other: "StructureReport") -> "StructureReport":
        out = StructureReport(dict(self.axioms), max(self.points, other.points), self.kappa, self.tol)
        out.axioms.update(other.axioms)
        return out


def _maxabs(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


def _pointwise(S: ContactStructure, p):
    loc = S.chart.at(p)
    return loc, S.phi.at(p), S.xi.at(p), S.eta.at(p), loc.G.val


def verify_almost_contact(S: ContactStructure, points: Iterable, tol: float = 1e-9) -> StructureReport:
    rep = StructureReport(tol=tol)
    eps = S.epsilon
    for p in points:
        rep.points += 1
        _, phi, xi, eta, g = _pointwise(S, p)
        n = g.shape[0]
        I = np.eye(n)
        rep.axiom("phi^2 X = eps X + eta(X) xi").update(_maxabs(phi @ phi - eps * I - np.outer(xi, eta)))
        rep.axiom("g(phi X, phi Y) = g(X, Y) + eta(X) eta(Y)").update(
            _maxabs(phi.T @ g @ phi - g - np.outer(eta, eta)))
        rep.axiom("eta(X) = eps g(X, xi)").update(_maxabs(eta - eps * (g @ xi)))
        rep.axiom("eta(xi) = -epsilon").update(abs(float(eta @ xi) + eps))
        rep.axiom("phi xi = 0").update(_maxabs(phi @ xi))
        rep.axiom("eta o phi = 0").update(_maxabs(eta @ phi))
        rep.axiom("g(xi, xi) = -1").update(abs(float(xi @ g @ xi) + 1.0))
        rep.axiom("g(phi X, Y) = eps g(X, phi Y)").update(_maxabs(phi.T @ g - eps * g @ phi))
        # rank phi = dim - 1, read off the inertia of phi^T phi
        sig = linalg.signature(phi.T @ phi, tol)
        rk = sig.n_pos + sig.n_neg
        a = rep.axiom("rank phi = dim - 1")
        a.update(0.0 if rk == n - 1 else float(abs(rk - (n - 1))))
    return rep


def verify_kcontact_sasakian(S: ContactStructure, points: Iterable, tol: float = 1e-9) -> StructureReport:
    """Residuals of nabla_X xi = eps phi X and of the (para)Sasakian identity."""
    rep = StructureReport(tol=tol)
    eps = S.epsilon
    for p in points:
        rep.points += 1
        loc = S.chart.at(p)
        n = loc.n
        # values of first covariant derivatives only need first-order jets
        phi = S.phi.jet(p).truncate(1)
        xi = S.xi.jet(p).truncate(1)
        eta = S.eta.at(p)
        g = loc.G.val
        phv = phi.val
        kc = rep.axiom("nabla_X xi = eps phi X")
        sas = rep.axiom("(nabla_X phi) Y = g(phi X, phi Y) xi + eta(Y) phi^2 X")
        for i in range(n):
            X = loc.coord_field(i)
            kc.update(_maxabs(loc.nabla(X, xi).val - eps * phv[:, i]))
            for j in range(n):
                Y = loc.coord_field(j)
                lhs = loc.nabla_tensor11(phi, X, Y).val
                rhs = (phv[:, i] @ g @ phv[:, j]) * xi.val + eta[j] * (phv @ phv[:, i])
                sas.update(_maxabs(lhs - rhs))
    return rep


def nijenhuis(S: ContactStructure, X, Y, p) -> np.ndarray:
    """[phi, phi](X, Y) = phi^2 [X,Y] + [phi X, phi Y] - phi [phi X, Y] - phi [X, phi Y]."""
    loc = S.chart.at(p)
    phi = S.phi.jet(p).truncate(1)
    X, Y = loc.field(X), loc.field(Y)
    pX, pY = loc.apply(phi, X), loc.apply(phi, Y)
    out = (loc.apply(phi, loc.apply(phi, loc.bracket(X, Y)))
           + loc.bracket(pX, pY)
           - loc.apply(phi, loc.bracket(pX, Y))
           - loc.apply(phi, loc.bracket(X, pY)))
    return out.val.copy()


def verify_metric_contact_and_normality(
    S: ContactStructure, points: Iterable, tol: float = 1e-9, kappa: float = DEFAULT_KAPPA
) -> StructureReport:
    if kappa not in (0.5, 1.0):
        raise ValueError("kappa must be 0.5 or 1")
    rep = StructureReport(tol=tol, kappa=kappa)
    for p in points:
        rep.points += 1
        loc = S.chart.at(p)
        n = loc.n
        phi = S.phi.at(p)
        xi = S.xi.at(p)
        g = loc.G.val
        eta = S.eta.jet(p).truncate(1)
        mc = rep.axiom("d eta(X, Y) = Phi(X, Y)")
        mc.note = f"kappa = {kappa}"
        nm = rep.axiom("[phi, phi] + 2 d eta (x) xi = 0")
        nm.note = f"kappa = {kappa}"
        for i in range(n):
            X = loc.coord_field(i)
            for j in range(n):
                Y = loc.coord_field(j)
                de = loc.d_oneform(eta, X, Y, kappa)
                Phi = float(g[i] @ phi[:, j])
                mc.update(abs(de - Phi))
                N = nijenhuis(S, X, Y, p)
                nm.update(_maxabs(N + 2.0 * de * xi))
    return rep


def verify_all(S: ContactStructure, points: Sequence, tol: float = 1e-9,
               kappa: float = DEFAULT_KAPPA) -> StructureReport:
    pts = list(points)
    rep = verify_almost_contact(S, pts, tol)
    rep = rep.merge(verify_kcontact_sasakian(S, pts, tol))
    rep = rep.merge(verify_metric_contact_and_normality(S, pts, tol, kappa))
    rep.kappa = kappa
    return rep


__all__.append("verify_all")
