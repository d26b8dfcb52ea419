"""Anti-invariant submersions: decompositions, lemma identities and theorem criteria.

All checks are pointwise.  At each sample point an :class:`AntiPoint`
collects the split, smooth projectors onto the vertical, horizontal,
phi(ker F_*) and mu distributions, and memoized O'Neill evaluations on the
pseudo-orthonormal frames.  Frame vectors are extended to smooth fields by
the projectors, so brackets and covariant derivatives of them are
meaningful.

Each equivalence theorem is checked twice: once through its direct
definition (e.g. g([X, Y], V) = 0 for integrability) and once through the
stated criterion.  Only the verdicts are compared, one frame tuple at a time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import linalg
from .contact import ContactStructure
from .jet import Jet, einsum
from .submersion import (
    DeclaredFrames,
    SmoothMap,
    SplitFrames,
    SubmersionPoint,
    analyze_split,
    tension_and_harmonic,
)

__all__ = [
    "CriterionResult",
    "AntiPoint",
    "BCMu",
    "DecompositionVerdict",
    "anti_point",
    "check_anti_invariance",
    "xi_position",
    "xi_position_and_dimension_audit",
    "bc_mu_decompose",
    "lemma_residual_suite",
    "integrability_check",
    "foliation_checks",
    "tg_map_and_harmonic_criteria",
    "twisted_criterion",
    "decomposition_classify",
]


@dataclass
class CriterionResult:
    id: str
    point_index: int
    point: list
    lhs: list
    rhs: list
    residual: float
    tol: float
    note: str = ""
    skipped: bool = False
    info: bool = False  # a property of the example, reported but not required to hold

    @property
    def verdict(self) -> bool:
        return self.skipped or bool(self.residual <= self.tol)

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "point_index": self.point_index,
            "point": [float(v) for v in self.point],
            "lhs": [float(v) for v in self.lhs],
            "rhs": [float(v) for v in self.rhs],
            "residual": float(self.residual),
            "tol": float(self.tol),
            "verdict": self.verdict,
            "skipped": self.skipped,
            "info": self.info,
            "note": self.note,
        }


def _vec(a) -> list:
    return [float(v) for v in np.atleast_1d(np.asarray(a, dtype=float)).ravel()]


def _value(X) -> np.ndarray:
    return X.val if isinstance(X, Jet) else np.asarray(X, dtype=float)


def _res(lhs, rhs) -> float:
    d = np.atleast_1d(np.asarray(lhs, dtype=float) - np.asarray(rhs, dtype=float))
    return float(np.max(np.abs(d))) if d.size else 0.0


class AntiPoint:
    """Everything the criteria need at one sample point."""

    def __init__(self, F: SmoothMap, S: ContactStructure, p, declared: Optional[DeclaredFrames],
                 tol: float = 1e-9, index: int = 0):
        p = np.asarray(p, dtype=float)
        self.F, self.S, self.p, self.tol, self.index = F, S, p, tol, index
        self.eps = S.epsilon
        self.split: SplitFrames = analyze_split(F, p, tol, declared)
        self.sp = SubmersionPoint(F, p, declared, split=self.split, tol=tol)
        self.loc = self.sp.loc
        self.pw = self.sp.pointwise()
        self.n_src = self.loc.n
        self.m = (self.n_src - 1) // 2
        self.n_tgt = F.target.dim
        self.phi_j = S.phi.jet(p)
        self.xi_j = S.xi.jet(p)
        self.eta_j = S.eta.jet(p)
        self.g = self.loc.G.val
        self.U = list(self.split.vertical.vectors)
        self.Usign = list(self.split.vertical.signs)
        self.X = list(self.split.horizontal.vectors)
        self.Xsign = list(self.split.horizontal.signs)
        self._memo: dict = {}
        self.position, self.xi_h_norm, self.xi_v_norm = self._xi_position()
        self.anti_residual = self._anti_residual()
        self.PphiV = None
        self.Pmu = None
        if self.sp.smooth and self.anti_residual <= tol:
            self._build_mu(declared)

    # -- pointwise facts ------------------------------------------------
    def _xi_position(self):
        xi = self.xi_j.val
        PV = self.sp.PV.val
        hv = xi - PV @ xi
        vv = PV @ xi
        nx = float(np.linalg.norm(xi))
        hn, vn = float(np.linalg.norm(hv)), float(np.linalg.norm(vv))
        if hn <= self.tol * nx:
            pos = "vertical"
        elif vn <= self.tol * nx:
            pos = "horizontal"
        else:
            pos = "oblique"
        return pos, hn, vn

    def _anti_residual(self) -> float:
        r = 0.0
        phi = self.phi_j.val
        for u in self.U:
            for w in self.U:
                r = max(r, abs(float((phi @ u) @ self.g @ w)))
        return r

    def _build_mu(self, declared: Optional[DeclaredFrames]):
        """Smooth projectors onto phi(ker F_*) and onto mu = H minus phi(ker F_*)."""
        n = self.n_src
        if declared is None or not declared.vertical:
            self.PphiV = Jet.constant(np.zeros((n, n)), n)
            self.Pmu = self.sp.PH
            return
        cols = []
        for v in declared.vertical:
            w = einsum("ij,j->i", self.phi_j, v.jet(self.p))
            trial = cols + [w]
            W = np.array([c.val for c in trial])
            gram = W @ self.g @ W.T
            if linalg.signature(gram, self.tol).n_zero == 0 and np.max(np.abs(w.val)) > self.tol:
                cols = trial
        if not cols:
            self.PphiV = Jet.constant(np.zeros((n, n)), n)
        else:
            W = Jet.stack(cols, axis=1)
            gram = einsum("ia,ij,jb->ab", W, self.loc.G, W)
            linalg.check_nondegenerate(gram.val, self.tol, what="metric on phi(ker F_*)")
            self.PphiV = einsum("ia,ab,jb,jk->ik", W, gram.inv(), W, self.loc.G)
        self.Pmu = self.sp.PH - self.PphiV
        mu_vals = self.Pmu.val
        if np.max(np.abs(mu_vals)) > self.tol:
            sig = linalg.signature(self.g @ mu_vals, self.tol)
            # the form g(P_mu ., P_mu .) must be nondegenerate on its image
            rk = linalg.rank(mu_vals, self.tol)
            if sig.n_pos + sig.n_neg != rk:
                raise linalg.DegenerateMetricError("metric restricted to mu is degenerate")

    @property
    def anti_invariant(self) -> bool:
        return self.anti_residual <= self.tol

    @property
    def dim_phi_ker(self) -> int:
        if not self.U:
            return 0
        return linalg.rank(np.array([self.phi_j.val @ u for u in self.U]), self.tol)

    @property
    def dim_mu(self) -> int:
        return len(self.X) - self.dim_phi_ker

    def phi_ker_equals_horizontal(self) -> bool:
        if not self.X:
            return self.dim_phi_ker == 0
        PU = [self.phi_j.val @ u for u in self.U]
        both = np.array(PU + self.X) if PU else np.array(self.X)
        return self.dim_phi_ker == len(self.X) and linalg.rank(both, self.tol) == len(self.X)

    def horizontal_is_phi_ker_plus_xi(self) -> bool:
        if self.position != "horizontal":
            return False
        PU = [self.phi_j.val @ u for u in self.U]
        xi = self.xi_j.val
        span = np.array(PU + [xi])
        allv = np.array(PU + [xi] + self.X)
        return (linalg.rank(span, self.tol) == len(self.X)
                and linalg.rank(allv, self.tol) == len(self.X)
                and self.dim_phi_ker == len(self.X) - 1)

    # -- smooth operations ----------------------------------------------
    def memo(self, key, fn: Callable[[], Jet]) -> Jet:
        if key not in self._memo:
            self._memo[key] = fn()
        return self._memo[key]

    def phi(self, X) -> Jet:
        return einsum("ij,j->i", self.phi_j, self.loc.field(X))

    def B(self, X) -> Jet:
        return self.sp.V(self.phi(X))

    def C(self, X) -> Jet:
        if self.Pmu is None:
            raise ValueError("mu is undefined: the submersion is not anti-invariant here")
        return einsum("ij,j->i", self.Pmu, self.phi(X))

    def gv(self, a, b) -> float:
        a = a.val if isinstance(a, Jet) else np.asarray(a)
        b = b.val if isinstance(b, Jet) else np.asarray(b)
        return float(a @ self.g @ b)

    def gN(self, a, b) -> float:
        return self.sp.target_inner(a, b)

    def eta(self, X) -> float:
        X = X.val if isinstance(X, Jet) else np.asarray(X)
        return float(self.eta_j.val @ X)

    # frame extensions carry first derivatives: enough for brackets and for
    # values of covariant derivatives
    def Xf(self, a: int) -> Jet:
        return self.memo(("Xf", a), lambda: self.pw.horizontal_field(self.X[a]))

    def Uf(self, i: int) -> Jet:
        return self.memo(("Uf", i), lambda: self.pw.vertical_field(self.U[i]))

    def A_xi(self, a: int) -> Jet:
        """A_X xi with one derivative left, so that it can be differentiated again."""
        return self.memo(("Axi", a), lambda: self.sp.A(self.sp.horizontal_field(self.X[a]), self.xi_j))

    def A_U(self, a: int, i: int) -> Jet:
        return self.memo(("AU", a, i), lambda: self.pw.A(self.X[a], self.U[i]))

    # T, A and nabla F_* are tensorial, so only the values of their arguments
    # matter; the first-order projector view is enough for a value
    def T(self, E, G) -> Jet:
        return self.pw.T(_value(E), _value(G))

    def A(self, E, G) -> Jet:
        return self.pw.A(_value(E), _value(G))

    def nabla(self, X, Y) -> Jet:
        return self.loc.nabla(X, Y)

    def sff(self, X, Y) -> np.ndarray:
        return self.sp.sff(_value(X), _value(Y))

    def push(self, X) -> np.ndarray:
        return self.sp.push(X)


_CACHE: dict = {}


def anti_point(F: SmoothMap, S: ContactStructure, p, declared: Optional[DeclaredFrames] = None,
               tol: float = 1e-9, index: Optional[int] = None) -> AntiPoint:
    key = (id(F), id(S), id(declared), np.asarray(p, dtype=float).tobytes(), tol)
    ap = _CACHE.get(key)
    if ap is None or ap.F is not F or ap.S is not S:
        if len(_CACHE) > 256:
            _CACHE.clear()
        ap = AntiPoint(F, S, p, declared, tol, index or 0)
        _CACHE[key] = ap
    if index is not None:
        ap.index = index
    return ap


def _cr(ap: AntiPoint, cid: str, lhs, rhs, note: str = "", residual: Optional[float] = None,
        tol: Optional[float] = None, skipped: bool = False) -> CriterionResult:
    r = _res(lhs, rhs) if residual is None else float(residual)
    return CriterionResult(cid, ap.index, _vec(ap.p), _vec(lhs), _vec(rhs), r,
                           ap.tol if tol is None else tol, note, skipped)


def _skip(ap: AntiPoint, cid: str, note: str) -> CriterionResult:
    return CriterionResult(cid, ap.index, _vec(ap.p), [], [], 0.0, ap.tol, note, True)


def _implication(ap: AntiPoint, cid: str, hyp: bool, concl: bool, note: str = "") -> CriterionResult:
    ok = (not hyp) or concl
    extra = "hypothesis not met (vacuous)" if not hyp else ("conclusion holds" if concl else "conclusion fails")
    return _cr(ap, cid, [float(hyp)], [float(concl)], f"{extra}{'; ' + note if note else ''}",
               residual=0.0 if ok else 1.0, tol=0.0)


_REQUIRED_PREFIXES = ("agreement:", "T_xi xi = 0")


def _mark_info(results: list[CriterionResult]) -> list[CriterionResult]:
    """Direct definitions and criterion values describe the example; only agreements are requirements."""
    for r in results:
        if not r.id.startswith(_REQUIRED_PREFIXES):
            r.info = True
    return results


def _points(points) -> list[np.ndarray]:
    return [np.asarray(p, dtype=float) for p in points]


# ---------------------------------------------------------------------------
# anti-invariance, xi position, dimensions
# ---------------------------------------------------------------------------

def check_anti_invariance(F: SmoothMap, S: ContactStructure, p, tol: float = 1e-9,
                          declared: Optional[DeclaredFrames] = None, index: int = 0) -> CriterionResult:
    """max |g(phi U_i, U_j)| over the vertical frame."""
    ap = anti_point(F, S, p, declared, tol, index)
    note = "no fibers (vacuous)" if not ap.U else ""
    return _cr(ap, "anti-invariance: g(phi U, V) = 0", [ap.anti_residual], [0.0], note,
               residual=ap.anti_residual)


def xi_position(F: SmoothMap, S: ContactStructure, p, tol: float = 1e-9,
                declared: Optional[DeclaredFrames] = None) -> str:
    return anti_point(F, S, p, declared, tol).position


def xi_position_and_dimension_audit(F: SmoothMap, S: ContactStructure, p, tol: float = 1e-9,
                                    declared: Optional[DeclaredFrames] = None,
                                    index: int = 0) -> list[CriterionResult]:
    ap = anti_point(F, S, p, declared, tol, index)
    out: list[CriterionResult] = []
    m, n = ap.m, ap.n_tgt
    pos = ap.position
    vert, hor = pos == "vertical", pos == "horizontal"
    tsig = ap.split.target_signature
    fsig = ap.split.fiber_signature
    xin = float(np.linalg.norm(ap.xi_j.val))
    out.append(_cr(ap, "xi is vertical or horizontal", [ap.xi_h_norm, ap.xi_v_norm], [0.0, 0.0],
                   f"xi is {pos}", residual=min(ap.xi_h_norm, ap.xi_v_norm) / max(xin, 1.0)))
    out.append(_implication(ap, "xi vertical <=> N Riemannian", True, vert == tsig.is_riemannian,
                            f"target signature {tsig.as_tuple()}"))
    out.append(_implication(ap, "xi horizontal <=> N Lorentzian", True, hor == tsig.is_lorentzian,
                            f"target signature {tsig.as_tuple()}"))
    pair = (fsig.index, tsig.index)
    want = (1, 0) if vert else (0, 1) if hor else None
    out.append(_cr(ap, "fiber/target index pair", list(pair), list(want or pair),
                   f"xi {pos}", residual=0.0 if want is None or pair == want else 1.0, tol=0.0,
                   skipped=want is None))
    out.append(_implication(ap, "xi vertical => m <= n <= 2m", vert, m <= n <= 2 * m, f"m={m}, n={n}"))
    out.append(_implication(ap, "m = n => xi vertical", m == n, vert, f"m={m}, n={n}"))
    out.append(_implication(ap, "xi horizontal => m + 1 <= n", hor, m + 1 <= n, f"m={m}, n={n}"))
    peq = ap.phi_ker_equals_horizontal()
    out.append(_implication(ap, "m = n => phi(ker) = (ker)^perp and N Riemannian", m == n and ap.anti_invariant,
                            peq and tsig.is_riemannian))
    out.append(_implication(ap, "phi(ker) = (ker)^perp => xi vertical and m = n", peq and ap.anti_invariant,
                            vert and m == n))
    zero = ap.dim_phi_ker == 0 and bool(ap.U)
    ker_is_xi = vert and len(ap.U) == 1
    out.append(_implication(ap, "phi(ker) = 0 => xi vertical, 2m = n, ker = span{xi}", zero and ap.anti_invariant,
                            vert and 2 * m == n and ker_is_xi))
    branch = ("vertical, ker = span{xi}" if vert and ker_is_xi else "horizontal, N Lorentzian"
              if hor and tsig.is_lorentzian else "neither")
    out.append(_implication(ap, "2m = n => (xi vertical, ker = span{xi}) or (xi horizontal, N Lorentzian)",
                            2 * m == n and ap.anti_invariant, branch != "neither", f"branch: {branch}"))
    span_xi = ap.horizontal_is_phi_ker_plus_xi()
    if tsig.is_lorentzian and ap.anti_invariant:
        out.append(_cr(ap, "(ker)^perp = phi(ker) + span{xi} <=> m + 1 = n", [float(span_xi)],
                       [float(m + 1 == n)], f"m={m}, n={n}", residual=0.0 if span_xi == (m + 1 == n) else 1.0,
                       tol=0.0))
    else:
        out.append(_skip(ap, "(ker)^perp = phi(ker) + span{xi} <=> m + 1 = n",
                         "needs a Lorentzian target and anti-invariance"))
    out.append(_cr(ap, "dim phi(ker) + dim mu = dim (ker)^perp", [ap.dim_phi_ker + ap.dim_mu],
                   [len(ap.X)], residual=float(abs(ap.dim_phi_ker + ap.dim_mu - len(ap.X))), tol=0.0))
    return out


# ---------------------------------------------------------------------------
# B, C and mu
# ---------------------------------------------------------------------------

@dataclass
class BCMu:
    BX: np.ndarray
    CX: np.ndarray
    mu_basis: list
    residuals: dict


def bc_mu_decompose(F: SmoothMap, S: ContactStructure, X, p, tol: float = 1e-9,
                    declared: Optional[DeclaredFrames] = None) -> BCMu:
    return _bc_mu(anti_point(F, S, p, declared, tol), X)


def _independent(vectors: Sequence[np.ndarray], tol: float) -> list[np.ndarray]:
    picked: list[np.ndarray] = []
    for v in vectors:
        if linalg.rank(np.array(picked + [v]), tol) > len(picked):
            picked.append(v)
    return picked


def _bc_mu(ap: AntiPoint, X) -> BCMu:
    if ap.Pmu is None:
        raise ValueError("B/C split needs an anti-invariant submersion with declared vertical fields")
    tol = ap.tol
    X = np.asarray(X, dtype=float)
    BX = ap.B(X).val
    CX = ap.C(X).val
    phi = ap.phi_j.val
    Pmu = ap.Pmu.val
    BCX = ap.sp.PV.val @ (phi @ CX)
    C2X = Pmu @ (phi @ CX)
    res = {"BCX = 0": _res(BCX, 0.0)}
    lhs = C2X + phi @ BX
    if ap.position == "vertical":
        res["C^2 X + phi B X = eps X"] = _res(lhs, ap.eps * X)
    else:
        res["C^2 X + phi B X = eps X + eta(X) xi"] = _res(lhs, ap.eps * X + ap.eta(X) * ap.xi_j.val)
    res["phi X = B X + C X"] = _res(phi @ X, BX + CX)
    mu = []
    if np.max(np.abs(Pmu)) > tol:
        cand = _independent([Pmu @ x for x in ap.X], tol)
        if cand:
            mu = list(linalg.pseudo_orthonormalize(cand, ap.g, tol).vectors)
    return BCMu(BX, CX, mu, res)


# ---------------------------------------------------------------------------
# lemma identities
# ---------------------------------------------------------------------------

def _lemmas_vertical(ap: AntiPoint) -> list[CriterionResult]:
    out = []
    eps, phi = ap.eps, ap.phi_j.val
    H, V = range(len(ap.X)), range(len(ap.U))
    lhs, rhs = [], []
    for a in H:
        lhs.append(ap.C(ap.Xf(a)).val)
        rhs.append(eps * ap.A_xi(a).val)
    out.append(_cr(ap, "CX = eps A_X xi", lhs, rhs))
    lhs = [ap.gv(ap.A_xi(a), phi @ ap.U[i]) for a in H for i in V]
    out.append(_cr(ap, "g(A_X xi, phi U) = 0", lhs, [0.0] * len(lhs)))
    lhs, rhs = [], []
    for a in H:
        for b in H:
            for i in V:
                phU = phi @ ap.U[i]
                lhs.append(ap.gv(ap.nabla(ap.Xf(b), ap.A_xi(a)), phU))
                rhs.append(-ap.gv(ap.A_xi(a), phi @ ap.A_U(b, i).val)
                           - eps * ap.eta(ap.U[i]) * ap.gv(ap.A_xi(a), ap.X[b]))
    out.append(_cr(ap, "g(nabla_Y A_X xi, phi U) = -g(A_X xi, phi A_Y U) - eps eta(U) g(A_X xi, Y)", lhs, rhs))
    lhs = [ap.gv(ap.X[a], ap.A_xi(b)) for a in H for b in H]
    rhs = [eps * ap.gv(ap.X[b], ap.A_xi(a)) for a in H for b in H]
    out.append(_cr(ap, "g(X, A_Y xi) = eps g(Y, A_X xi)", lhs, rhs))
    bcx, c2 = [], []
    for a in H:
        r = _bc_mu(ap, ap.X[a])
        bcx.append(r.residuals["BCX = 0"])
        c2.append(r.residuals["C^2 X + phi B X = eps X"])
    out.append(_cr(ap, "BCX = 0", bcx, [0.0] * len(bcx)))
    out.append(_cr(ap, "C^2 X + phi B X = eps X", c2, [0.0] * len(c2)))
    lhs, rhs = [], []
    for a in H:
        for b in H:
            X, Y = ap.Xf(a), ap.Xf(b)
            lhs.append(ap.nabla(X, Y).val)
            rhs.append(ap.gv(ap.X[a], phi @ ap.X[b]) * ap.xi_j.val
                       + eps * phi @ ap.nabla(X, ap.phi(Y)).val)
    out.append(_cr(ap, "nabla_X Y = g(X, phi Y) xi + eps phi nabla_X phi Y", lhs, rhs))
    lhs = [ap.T(ap.Uf(i), ap.xi_j).val for i in V]
    rhs = [eps * phi @ ap.U[i] for i in V]
    out.append(_cr(ap, "T_U xi = eps phi U", lhs, rhs))
    wit = max((float(np.linalg.norm(phi @ u)) for u in ap.U), default=0.0)
    out.append(_cr(ap, "fibers not totally umbilical: |phi U| > 0.1 for some U", [wit], [0.1],
                   residual=0.0 if wit > 0.1 else 1.0, tol=0.0))
    return out


def _lemmas_horizontal(ap: AntiPoint) -> list[CriterionResult]:
    out = []
    eps, phi = ap.eps, ap.phi_j.val
    H, V = range(len(ap.X)), range(len(ap.U))
    lhs = [ap.B(ap.Xf(a)).val for a in H]
    rhs = [eps * ap.A_xi(a).val for a in H]
    out.append(_cr(ap, "BX = eps A_X xi", lhs, rhs))
    lhs = [ap.T(ap.Uf(i), ap.xi_j).val for i in V]
    out.append(_cr(ap, "T_U xi = 0", lhs, [np.zeros(ap.n_src)] * len(lhs)))
    lhs, rhs = [], []
    for a in H:
        for b in H:
            CY = ap.C(ap.Xf(b))
            for i in V:
                phU = phi @ ap.U[i]
                lhs.append(ap.gv(ap.nabla(ap.Xf(a), CY), phU))
                rhs.append(-ap.gv(CY, phi @ ap.A_U(a, i).val))
    out.append(_cr(ap, "g(nabla_X CY, phi U) = -g(CY, phi A_X U)", lhs, rhs))
    return out


def lemma_residual_suite(F: SmoothMap, S: ContactStructure, points: Iterable, tol: float = 1e-9,
                         declared: Optional[DeclaredFrames] = None) -> list[CriterionResult]:
    out = []
    for k, p in enumerate(_points(points)):
        ap = anti_point(F, S, p, declared, tol, k)
        if not ap.anti_invariant:
            out.append(_skip(ap, "lemmas", "not anti-invariant at this point"))
        elif ap.position == "vertical":
            out.extend(_lemmas_vertical(ap))
        elif ap.position == "horizontal":
            out.extend(_lemmas_horizontal(ap))
        else:
            out.append(_skip(ap, "lemmas", "xi is oblique"))
    return out


# ---------------------------------------------------------------------------
# equivalence theorems: direct definition vs stated criterion
# ---------------------------------------------------------------------------

def _agreement(ap: AntiPoint, cid: str, direct: list[bool], crit: list[bool], note: str = "") -> CriterionResult:
    bad = sum(1 for d, c in zip(direct, crit) if d != c)
    return _cr(ap, f"agreement: {cid}", [float(d) for d in direct], [float(c) for c in crit],
               note or f"{len(direct)} frame tuples", residual=float(bad), tol=0.0)


def _pairs(k: int):
    return list(itertools.product(range(k), range(k)))


def _integrability(ap: AntiPoint) -> list[CriterionResult]:
    out = []
    eps, phi, tol = ap.eps, ap.phi_j.val, ap.tol
    direct_vals, direct = [], []
    crit3_l, crit3_r, crit2_l, crit2_r = [], [], [], []
    for a, b in _pairs(len(ap.X)):
        X, Y = ap.Xf(a), ap.Xf(b)
        br = ap.sp.loc.bracket(X, Y).val
        BX, BY = ap.B(X), ap.B(Y)
        sYBX, sXBY = ap.sff(Y, BX), ap.sff(X, BY)
        if ap.position == "vertical":
            comm = ap.A(X, BY).val - ap.A(Y, BX).val
        else:
            CX, CY = ap.C(X).val, ap.C(Y).val
            comm = ap.A(X, ap.A_xi(b)).val - ap.A(Y, ap.A_xi(a)).val
        for i in range(len(ap.U)):
            phV = phi @ ap.U[i]
            direct_vals.append(ap.gv(br, ap.U[i]))
            FphV = ap.push(phV)
            l3 = ap.gv(comm, phV)
            if ap.position == "vertical":
                r3 = (eps * ap.gv(ap.A_xi(a), phi @ ap.A_U(b, i).val)
                      - eps * ap.gv(ap.A_xi(b), phi @ ap.A_U(a, i).val))
            else:
                extra = (eps * ap.gv(ap.X[a], phV) * ap.eta(ap.X[b])
                         - eps * ap.gv(ap.X[b], phV) * ap.eta(ap.X[a]))
                r3 = (-ap.gv(CX, phi @ ap.A_U(b, i).val) + ap.gv(CY, phi @ ap.A_U(a, i).val) + extra)
            l2 = ap.gN(sYBX, FphV)
            r2 = ap.gN(sXBY, FphV) + r3
            crit3_l.append(l3)
            crit3_r.append(r3)
            crit2_l.append(l2)
            crit2_r.append(r2)
    direct = [abs(v) <= tol for v in direct_vals]
    out.append(_cr(ap, "integrability (direct): g([X, Y], V) = 0", direct_vals, [0.0] * len(direct_vals)))
    out.append(_cr(ap, "integrability criterion (iii)", crit3_l, crit3_r))
    out.append(_cr(ap, "integrability criterion (ii)", crit2_l, crit2_r))
    out.append(_agreement(ap, "integrability direct vs (iii)", direct,
                          [abs(l - r) <= tol for l, r in zip(crit3_l, crit3_r)]))
    out.append(_agreement(ap, "integrability direct vs (ii)", direct,
                          [abs(l - r) <= tol for l, r in zip(crit2_l, crit2_r)]))
    # corollaries under the span hypotheses, checked per horizontal pair
    pair_direct = []
    pair_crit = []
    lhs_c, rhs_c = [], []
    hyp_v = ap.position == "vertical" and ap.phi_ker_equals_horizontal()
    hyp_h = ap.horizontal_is_phi_ker_plus_xi()
    if hyp_v or hyp_h:
        k = len(ap.U)
        for a, b in _pairs(len(ap.X)):
            X, Y = ap.Xf(a), ap.Xf(b)
            if hyp_v:
                l = ap.A(X, ap.phi(Y)).val
                r = ap.A(Y, ap.phi(X)).val
            else:
                l = ap.A(X, ap.A_xi(b)).val - ap.A(Y, ap.A_xi(a)).val
                r = eps * ap.eta(ap.X[b]) * ap.X[a] - eps * ap.eta(ap.X[a]) * ap.X[b]
            lhs_c.append(l)
            rhs_c.append(r)
            pair_crit.append(_res(l, r) <= tol)
            idx = (a * len(ap.X) + b) * k
            pair_direct.append(all(direct[idx:idx + k]))
        name = ("integrability corollary: A_X phi Y = A_Y phi X" if hyp_v else
                "integrability corollary: A_X A_Y xi - A_Y A_X xi = eps eta(Y) X - eps eta(X) Y")
        out.append(_cr(ap, name, lhs_c, rhs_c))
        out.append(_agreement(ap, "integrability direct vs corollary", pair_direct, pair_crit))
    return out


def integrability_check(F: SmoothMap, S: ContactStructure, points: Iterable, tol: float = 1e-9,
                        declared: Optional[DeclaredFrames] = None) -> list[CriterionResult]:
    out = []
    for k, p in enumerate(_points(points)):
        ap = anti_point(F, S, p, declared, tol, k)
        if not ap.anti_invariant or ap.position == "oblique":
            out.append(_skip(ap, "integrability", f"xi {ap.position}, anti-invariant={ap.anti_invariant}"))
            continue
        out.extend(_integrability(ap))
    return _mark_info(out)


def _horizontal_foliation(ap: AntiPoint) -> list[CriterionResult]:
    out = []
    eps, phi, tol = ap.eps, ap.phi_j.val, ap.tol
    dvals, l2s, r2s, l3s, r3s = [], [], [], [], []
    for a, b in _pairs(len(ap.X)):
        X, Y = ap.Xf(a), ap.Xf(b)
        nXY = ap.nabla(X, Y).val
        AXBY = ap.A(X, ap.B(Y)).val
        if ap.position == "vertical":
            s3 = ap.sff(X, ap.phi(Y))
        else:
            s3 = ap.sff(Y, ap.phi(X))
            CY = ap.C(Y).val
        for i in range(len(ap.U)):
            phV = phi @ ap.U[i]
            FphV = ap.push(phV)
            dvals.append(ap.gv(nXY, ap.U[i]))
            l2 = ap.gv(AXBY, phV)
            l3 = ap.gN(s3, FphV)
            if ap.position == "vertical":
                r2 = eps * ap.gv(ap.A_xi(b), phi @ ap.A_U(a, i).val)
                r3 = -eps * ap.gv(ap.A_xi(b), phi @ ap.A_U(a, i).val)
            else:
                rhs = ap.gv(CY, phi @ ap.A_U(a, i).val) + eps * ap.eta(ap.X[b]) * ap.gv(ap.X[a], phV)
                r2 = rhs
                r3 = rhs
            l2s.append(l2)
            r2s.append(r2)
            l3s.append(l3)
            r3s.append(r3)
    direct = [abs(v) <= tol for v in dvals]
    out.append(_cr(ap, "horizontal totally geodesic (direct): g(nabla_X Y, V) = 0", dvals, [0.0] * len(dvals)))
    out.append(_cr(ap, "horizontal totally geodesic criterion (ii)", l2s, r2s))
    out.append(_cr(ap, "horizontal totally geodesic criterion (iii)", l3s, r3s))
    out.append(_agreement(ap, "horizontal totally geodesic direct vs (ii)", direct,
                          [abs(l - r) <= tol for l, r in zip(l2s, r2s)]))
    out.append(_agreement(ap, "horizontal totally geodesic direct vs (iii)", direct,
                          [abs(l - r) <= tol for l, r in zip(l3s, r3s)]))
    hyp_v = ap.position == "vertical" and ap.phi_ker_equals_horizontal()
    hyp_h = ap.horizontal_is_phi_ker_plus_xi()
    if hyp_v or hyp_h:
        k = len(ap.U)
        pd, pc2, pc3, l_c, r_c = [], [], [], [], []
        for a, b in _pairs(len(ap.X)):
            X, Y = ap.Xf(a), ap.Xf(b)
            if hyp_v:
                l2, r2 = ap.A(X, ap.phi(Y)).val, np.zeros(ap.n_src)
                l3, r3 = ap.sff(X, ap.phi(Y)), np.zeros(ap.n_tgt)
            else:
                l2 = ap.A(X, ap.B(Y)).val
                r2 = eps * ap.eta(ap.X[b]) * ap.X[a]
                l3 = ap.sff(Y, ap.phi(X))
                r3 = eps * ap.eta(ap.X[b]) * ap.push(ap.X[a])
            l_c.append(np.concatenate([l2, l3]))
            r_c.append(np.concatenate([r2, r3]))
            pc2.append(_res(l2, r2) <= tol)
            pc3.append(_res(l3, r3) <= tol)
            idx = (a * len(ap.X) + b) * k
            pd.append(all(direct[idx:idx + k]))
        out.append(_cr(ap, "horizontal totally geodesic corollary (ii)+(iii)", l_c, r_c))
        out.append(_agreement(ap, "horizontal totally geodesic direct vs corollary (ii)", pd, pc2))
        out.append(_agreement(ap, "horizontal totally geodesic direct vs corollary (iii)", pd, pc3))
    return out


def _vertical_foliation(ap: AntiPoint) -> list[CriterionResult]:
    out = []
    phi, tol = ap.phi_j.val, ap.tol
    dvals = []
    for i, j in _pairs(len(ap.U)):
        nVW = ap.nabla(ap.Uf(i), ap.Uf(j)).val
        for a in range(len(ap.X)):
            dvals.append(ap.gv(nVW, ap.X[a]))
    direct = [abs(v) <= tol for v in dvals]
    out.append(_cr(ap, "vertical totally geodesic (direct): g(nabla_V W, X) = 0", dvals, [0.0] * len(dvals)))
    if ap.position == "vertical":
        # a vertical xi forces T_U xi = eps phi U != 0: the fibers are never totally geodesic
        wit = max((float(np.linalg.norm(phi @ u)) for u in ap.U), default=0.0)
        crit_tg = not (wit > tol)
        out.append(_agreement(ap, "vertical totally geodesic direct vs 'fibers not totally umbilical'",
                              [all(direct)], [crit_tg], "pointwise verdict"))
        return out
    sb, sc = {}, {}
    for i in range(len(ap.U)):
        V = ap.Uf(i)
        for a in range(len(ap.X)):
            X = ap.Xf(a)
            sb[i, a] = ap.sff(V, ap.phi(X))
            sc[i, a] = ap.T(V, ap.B(X)).val + ap.A(ap.C(X), V).val
    lb, lc = [], []
    for i, j in _pairs(len(ap.U)):
        FphW = ap.push(phi @ ap.U[j])
        for a in range(len(ap.X)):
            lb.append(ap.gN(sb[i, a], FphW))
            lc.append(ap.gv(sc[i, a], phi @ ap.U[j]))
    out.append(_cr(ap, "vertical totally geodesic criterion (b)", lb, [0.0] * len(lb)))
    out.append(_cr(ap, "vertical totally geodesic criterion (c): T_V BX + A_CX V in mu", lc, [0.0] * len(lc)))
    out.append(_agreement(ap, "vertical totally geodesic direct vs (b)", direct, [abs(v) <= tol for v in lb]))
    out.append(_agreement(ap, "vertical totally geodesic direct vs (c)", direct, [abs(v) <= tol for v in lc]))
    if ap.horizontal_is_phi_ker_plus_xi():
        vals = [ap.T(ap.Uf(i), ap.phi(ap.Uf(j))).val for i, j in _pairs(len(ap.U))]
        out.append(_cr(ap, "vertical totally geodesic corollary (c): T_V phi W = 0", vals,
                       [np.zeros(ap.n_src)] * len(vals)))
        out.append(_agreement(ap, "vertical totally geodesic direct vs corollary (c)", [all(direct)],
                              [all(_res(v, 0.0) <= tol for v in vals)], "pointwise verdict"))
    return out


def foliation_checks(F: SmoothMap, S: ContactStructure, points: Iterable, tol: float = 1e-9,
                     declared: Optional[DeclaredFrames] = None) -> list[CriterionResult]:
    out = []
    for k, p in enumerate(_points(points)):
        ap = anti_point(F, S, p, declared, tol, k)
        if not ap.anti_invariant or ap.position == "oblique":
            out.append(_skip(ap, "foliations", f"xi {ap.position}, anti-invariant={ap.anti_invariant}"))
            continue
        out.extend(_horizontal_foliation(ap))
        out.extend(_vertical_foliation(ap))
    return _mark_info(out)


def _trace_phi_T(ap: AntiPoint, V) -> float:
    """tr phi(T_V) = sum_i eps_i g(e_i, phi T_{e_i} V) over the vertical frame."""
    phi = ap.phi_j.val
    tot = 0.0
    for i, s in enumerate(ap.Usign):
        tot += s * ap.gv(ap.U[i], phi @ ap.T(ap.Uf(i), V).val)
    return tot


def tg_map_and_harmonic_criteria(F: SmoothMap, S: ContactStructure, points: Iterable, tol: float = 1e-9,
                                 declared: Optional[DeclaredFrames] = None) -> list[CriterionResult]:
    out = []
    for k, p in enumerate(_points(points)):
        ap = anti_point(F, S, p, declared, tol, k)
        if not ap.anti_invariant or ap.position == "oblique":
            out.append(_skip(ap, "harmonicity", f"xi {ap.position}, anti-invariant={ap.anti_invariant}"))
            continue
        tr = tension_and_harmonic(F, p, ap.split, tol)
        out.append(_cr(ap, "tension field", tr.tension, np.zeros_like(tr.tension), "harmonic iff 0"))
        out.append(_agreement(ap, "harmonic (tension) vs minimal fibers", [tr.harmonic], [tr.minimal_fibers],
                              "pointwise verdict"))
        phi = ap.phi_j.val
        if ap.position == "vertical":
            if ap.m == ap.n_tgt:
                lhs = [_trace_phi_T(ap, ap.Uf(i)) for i in range(len(ap.U))]
                rhs = [-ap.n_tgt * ap.eta(ap.U[i]) for i in range(len(ap.U))]
                out.append(_cr(ap, "harmonic criterion: tr phi(T_V) = -n eta(V)", lhs, rhs))
                out.append(_agreement(ap, "harmonic (tension) vs tr phi(T_V) = -n eta(V)", [tr.harmonic],
                                      [_res(lhs, rhs) <= tol], "pointwise verdict"))
            else:
                out.append(_skip(ap, "harmonic criterion: tr phi(T_V) = -n eta(V)", "needs m = n"))
            xi_idx = None
            Txx = ap.T(ap.xi_j, ap.xi_j).val
            out.append(_cr(ap, "T_xi xi = 0", Txx, np.zeros_like(Txx)))
        elif ap.horizontal_is_phi_ker_plus_xi():
            lhs = [_trace_phi_T(ap, ap.Uf(i)) for i in range(len(ap.U))]
            out.append(_cr(ap, "harmonic criterion: tr(phi T_V) = 0", lhs, [0.0] * len(lhs)))
            out.append(_agreement(ap, "harmonic (tension) vs tr(phi T_V) = 0", [tr.harmonic],
                                  [_res(lhs, 0.0) <= tol], "pointwise verdict"))
            full = ap.split.full_frame
            sffs = [ap.sff(e, f) for e in full.vectors for f in full.vectors]
            tg_direct = all(_res(s, 0.0) <= tol for s in sffs)
            tv = [ap.T(ap.Uf(i), ap.phi(ap.Uf(j))).val for i, j in _pairs(len(ap.U))]
            ax = [ap.A(ap.Xf(a), ap.phi(ap.Uf(j))).val for a in range(len(ap.X)) for j in range(len(ap.U))]
            out.append(_cr(ap, "totally geodesic map (direct): nabla F_* = 0", sffs, [np.zeros(ap.n_tgt)] * len(sffs)))
            out.append(_cr(ap, "totally geodesic map criterion: T_V phi W = 0", tv, [np.zeros(ap.n_src)] * len(tv)))
            out.append(_cr(ap, "totally geodesic map criterion: A_X phi W = 0", ax, [np.zeros(ap.n_src)] * len(ax)))
            crit = all(_res(v, 0.0) <= tol for v in tv + ax)
            out.append(_agreement(ap, "totally geodesic map direct vs criterion", [tg_direct], [crit],
                                  "pointwise verdict"))
        else:
            out.append(_skip(ap, "harmonic criterion: tr(phi T_V) = 0",
                             "needs (ker)^perp = phi(ker) + span{xi}"))
    return _mark_info(out)


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------

def twisted_criterion(ap: AntiPoint, V, X) -> CriterionResult:
    """T_V phi X = -g(X, T_V V) |V|^{-2} phi V for one vertical V and horizontal X."""
    V = np.asarray(V, dtype=float)
    nv = ap.gv(V, V)
    cid = "twisted: T_V phi X = -g(X, T_V V) |V|^-2 phi V"
    if abs(nv) < ap.tol:
        return _skip(ap, cid, "|V|^2 below tolerance: criterion undefined, skipped")
    Vf = ap.sp.vertical_field(V)
    Xf = ap.sp.horizontal_field(X)
    lhs = ap.T(Vf, ap.phi(Xf)).val
    rhs = -ap.gv(X, ap.T(Vf, Vf).val) / nv * (ap.phi_j.val @ V)
    return _cr(ap, cid, lhs, rhs)


@dataclass
class DecompositionVerdict:
    flags: dict
    classification: str
    per_point: list
    stable: bool
    notes: list = field(default_factory=list)
    results: list = field(default_factory=list)


LOCALLY_PRODUCT = "locally product (pointwise evidence)"
TWISTED = "twisted-product candidate (pointwise evidence)"
NONE = "none"


def decomposition_classify(F: SmoothMap, S: ContactStructure, points: Iterable, tol: float = 1e-9,
                           declared: Optional[DeclaredFrames] = None) -> DecompositionVerdict:
    per_point, results, notes = [], [], []
    agg = {"horizontal integrable": True, "horizontal totally geodesic": True,
           "vertical totally geodesic": True, "fibers totally umbilical": True,
           "twisted criteria hold": True}
    for k, p in enumerate(_points(points)):
        ap = anti_point(F, S, p, declared, tol, k)
        f = {}
        X = [ap.Xf(a) for a in range(len(ap.X))]
        U = [ap.Uf(i) for i in range(len(ap.U))]
        f["horizontal integrable"] = all(
            _res(ap.sp.V(ap.loc.bracket(X[a], X[b])).val, 0.0) <= tol for a, b in _pairs(len(X)))
        f["horizontal totally geodesic"] = all(
            _res(ap.sp.V(ap.nabla(X[a], X[b])).val, 0.0) <= tol for a, b in _pairs(len(X)))
        Ts = {(i, j): ap.T(U[i], U[j]).val for i, j in _pairs(len(U))}
        f["vertical totally geodesic"] = all(_res(t, 0.0) <= tol for t in Ts.values())
        if U:
            mean = sum(ap.Usign[i] * Ts[(i, i)] for i in range(len(U))) / len(U)
            umb = max(_res(Ts[(i, j)], ap.gv(ap.U[i], ap.U[j]) * mean) for i, j in _pairs(len(U)))
        else:
            umb = 0.0
        f["fibers totally umbilical"] = umb <= tol
        tw = []
        if ap.anti_invariant and ap.horizontal_is_phi_ker_plus_xi():
            for i in range(len(U)):
                for a in range(len(X)):
                    tw.append(twisted_criterion(ap, ap.U[i], ap.X[a]))
            for a, b in _pairs(len(X)):
                l = ap.A(X[a], ap.phi(X[b])).val
                r = ap.eta(ap.X[b]) * ap.X[a]
                tw.append(_cr(ap, "twisted: A_X phi Y = eta(Y) X", l, r))
            f["twisted criteria hold"] = all(t.verdict for t in tw)
        else:
            f["twisted criteria hold"] = False
            tw.append(_skip(ap, "twisted criteria", "needs (ker)^perp = phi(ker) + span{xi}"))
        results.extend(_mark_info(tw))
        if f["horizontal integrable"] and f["horizontal totally geodesic"] and f["vertical totally geodesic"]:
            cls = LOCALLY_PRODUCT
        elif f["horizontal integrable"] and f["horizontal totally geodesic"] and (
                f["fibers totally umbilical"] or f["twisted criteria hold"]):
            cls = TWISTED
        else:
            cls = NONE
        per_point.append(cls)
        for key in agg:
            agg[key] = agg[key] and f[key]
    stable = len(set(per_point)) <= 1
    cls = per_point[0] if stable and per_point else NONE
    if not stable:
        notes.append("classification differs between sample points")
    notes.append("pointwise numerical evidence, not a proof")
    return DecompositionVerdict(agg, cls, per_point, stable, notes, results)


# ---------------------------------------------------------------------------
# expected facts of catalog entries and chart files
# ---------------------------------------------------------------------------

def _parallel_residual(a: np.ndarray, b: np.ndarray) -> float:
    """Distance of a from the line through b, relative to |a|."""
    nb = float(b @ b)
    if nb == 0.0:
        return float(np.linalg.norm(a))
    r = a - (a @ b) / nb * b
    return float(np.linalg.norm(r)) / max(1.0, float(np.linalg.norm(a)))


def check_expected_facts(F: SmoothMap, S: ContactStructure, expected: dict, points: Iterable,
                         tol: float = 1e-9, declared: Optional[DeclaredFrames] = None) -> list[CriterionResult]:
    """One CriterionResult per expected fact per point; unknown keys are reported as failures."""
    out = []
    known = {"xi_position", "m", "n", "fiber_signature", "target_signature", "target_index",
             "anti_invariant", "phi_ker_equals_horizontal", "horizontal_is_phi_ker_plus_xi",
             "mu_basis", "phi_vertical_images"}
    for k, p in enumerate(_points(points)):
        ap = anti_point(F, S, p, declared, tol, k)

        def flag(key, got, want):
            out.append(_cr(ap, f"expected: {key}", [float(got == want)], [1.0], f"got {got!r}, expected {want!r}",
                           residual=0.0 if got == want else 1.0, tol=0.0))

        for key in sorted(expected):
            want = expected[key]
            if key == "xi_position":
                flag(key, ap.position, want)
            elif key == "m":
                flag(key, ap.m, int(want))
            elif key == "n":
                flag(key, ap.n_tgt, int(want))
            elif key == "fiber_signature":
                flag(key, list(ap.split.fiber_signature.as_tuple()), list(want))
            elif key == "target_signature":
                flag(key, list(ap.split.target_signature.as_tuple()), list(want))
            elif key == "target_index":
                flag(key, ap.split.target_signature.index, int(want))
            elif key == "anti_invariant":
                flag(key, ap.anti_invariant, bool(want))
            elif key == "phi_ker_equals_horizontal":
                flag(key, ap.phi_ker_equals_horizontal(), bool(want))
            elif key == "horizontal_is_phi_ker_plus_xi":
                flag(key, ap.horizontal_is_phi_ker_plus_xi(), bool(want))
            elif key == "mu_basis":
                if ap.Pmu is None:
                    out.append(_cr(ap, "expected: mu_basis", [], [], "mu undefined (not anti-invariant)",
                                   residual=1.0, tol=0.0))
                    continue
                vecs = [ap.S.chart.vector(v).at(p) for v in want]
                Pmu = ap.Pmu.val
                res = max((float(np.max(np.abs(Pmu @ b - b))) for b in vecs), default=0.0)
                dim_ok = linalg.rank(np.array(vecs), tol) == ap.dim_mu if vecs else ap.dim_mu == 0
                out.append(_cr(ap, "expected: mu_basis", [res, float(len(vecs))], [0.0, float(ap.dim_mu)],
                               "P_mu b = b for each listed b, and the list spans mu",
                               residual=res if dim_ok else max(res, 1.0)))
            elif key == "phi_vertical_images":
                if declared is None:
                    out.append(_cr(ap, "expected: phi_vertical_images", [], [], "no declared fields",
                                   residual=1.0, tol=0.0))
                    continue
                phi = ap.phi_j.val
                res = 0.0
                for i, j in want:
                    a = phi @ declared.vertical[i].at(p)
                    b = declared.horizontal[j].at(p)
                    res = max(res, _parallel_residual(a, b))
                out.append(_cr(ap, "expected: phi_vertical_images", [res], [0.0],
                               "phi V_i is parallel to H_j for each listed (i, j)", residual=res))
            if key not in known:
                out.append(_cr(ap, f"expected: {key}", [], [], "unknown expected fact", residual=1.0, tol=0.0))
    return out


__all__.append("check_expected_facts")
