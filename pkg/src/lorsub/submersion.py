"""Smooth maps between charts and the geometry of their fibers.

Pointwise analysis (rank, kernel, horizontal complement, signatures, the
isometry axiom) needs nothing beyond the map.  Anything that differentiates
a projected field (O'Neill tensors and everything built on them) needs the
vertical distribution as a smooth object, so it uses declared vertical
fields: the g-orthogonal projector

    P_V = V (V^T g V)^{-1} V^T g,   P_H = I - P_V

is assembled from their jets and therefore carries derivatives.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .expr import ScalarExpr
from .geometry import Chart, FieldLike, Local, VectorField, _parse_all
from .jet import Jet, einsum

__all__ = [
    "SmoothMap",
    "DeclaredFrames",
    "SplitFrames",
    "ONeillValue",
    "TensionResult",
    "SubmersionError",
    "MissingDeclaredFieldsError",
    "SubmersionPoint",
    "pushforward",
    "analyze_split",
    "submersion_point",
    "oneill_T",
    "oneill_A",
    "second_fundamental_form",
    "tension_and_harmonic",
]


class SubmersionError(ValueError):
    """The map is not a submersion at the point (rank deficiency)."""


class MissingDeclaredFieldsError(ValueError):
    """An operation differentiates along a distribution but no smooth fields were declared."""


class SmoothMap:
    def __init__(self, source: Chart, target: Chart, components: Sequence):
        self.source = source
        self.target = target
        comps = _parse_all(components, source.coord_names)
        if len(comps) != target.dim:
            raise ValueError(f"map needs {target.dim} components, got {len(comps)}")
        self.components: tuple[ScalarExpr, ...] = comps

    def value(self, p) -> np.ndarray:
        return np.array([c(p) for c in self.components])

    def jet(self, p) -> Jet:
        return Jet.stack([c.jet(p) for c in self.components])

    def jacobian(self, p) -> np.ndarray:
        return self.jet(p).d1.copy()

    def component_strings(self) -> list[str]:
        return [c.to_source() for c in self.components]


@dataclass(frozen=True)
class DeclaredFrames:
    vertical: tuple[VectorField, ...] = ()
    horizontal: tuple[VectorField, ...] = ()


@dataclass
class SplitFrames:
    point: np.ndarray
    rank: int
    vertical: linalg.Frame
    horizontal: linalg.Frame
    fiber_signature: linalg.Signature
    horizontal_signature: linalg.Signature
    target_signature: linalg.Signature
    isometry_residual: float
    orthogonality_residual: float
    kernel_residual: float
    declared: Optional[DeclaredFrames] = None
    declared_residuals: dict = field(default_factory=dict)
    tol: float = 1e-9

    @property
    def is_submersion(self) -> bool:
        """Both axioms: nondegenerate fibers (by construction) and horizontal isometry."""
        return self.isometry_residual <= self.tol and self.kernel_residual <= self.tol

    @property
    def full_frame(self) -> linalg.Frame:
        vecs = [v for v in self.vertical.vectors] + [h for h in self.horizontal.vectors]
        n = self.point.shape[0]
        arr = np.array(vecs) if vecs else np.zeros((0, n))
        return linalg.Frame(arr, self.vertical.signs + self.horizontal.signs)


@dataclass
class ONeillValue:
    value: np.ndarray
    vertical: np.ndarray
    horizontal: np.ndarray


@dataclass
class TensionResult:
    tension: np.ndarray
    mean_curvature: np.ndarray  # sum_i eps_i T_{e_i} e_i over the vertical frame
    tension_norm: float
    mean_curvature_norm: float
    harmonic: bool
    minimal_fibers: bool


def pushforward(F: SmoothMap, X, p) -> np.ndarray:
    J = F.jacobian(p)
    if isinstance(X, VectorField):
        X = X.at(p)
    return J @ np.asarray(X, dtype=float)


def _maxabs(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


def analyze_split(F: SmoothMap, p, tol: float = 1e-9, declared: Optional[DeclaredFrames] = None) -> SplitFrames:
    p = np.asarray(p, dtype=float)
    src = F.source.at(p)
    g = src.G.val
    q = F.value(p)
    gN = F.target.metric_at(q)
    target_sig = linalg.check_nondegenerate(gN, tol, what=f"target metric at F(p) = {q.tolist()}")
    J = F.jacobian(p)
    rk = linalg.rank(J, tol)
    if rk < F.target.dim:
        raise SubmersionError(f"rank of dF is {rk} < {F.target.dim} at {p.tolist()}")
    kernel = linalg.null_space(J, tol)
    kscale = max(1.0, float(np.max(np.abs(J))))
    kernel_res = max((_maxabs(J @ v) / kscale for v in kernel), default=0.0)
    vframe = linalg.pseudo_orthonormalize(kernel, g, tol) if kernel else linalg.Frame(np.zeros((0, src.n)), ())
    fiber_sig = vframe.signature
    horiz = linalg.g_orthogonal_complement(kernel, g, tol) if kernel else [e for e in np.eye(src.n)]
    hframe = linalg.pseudo_orthonormalize(horiz, g, tol)
    iso = 0.0
    for a, ea in enumerate(hframe.vectors):
        for b, eb in enumerate(hframe.vectors):
            iso = max(iso, abs(float(ea @ g @ eb) - float((J @ ea) @ gN @ (J @ eb))))
    orth = 0.0
    for v in vframe.vectors:
        for h in hframe.vectors:
            orth = max(orth, abs(float(v @ g @ h)))
    split = SplitFrames(
        point=p, rank=rk, vertical=vframe, horizontal=hframe,
        fiber_signature=fiber_sig, horizontal_signature=hframe.signature,
        target_signature=target_sig, isometry_residual=iso,
        orthogonality_residual=orth, kernel_residual=kernel_res,
        declared=declared, tol=tol,
    )
    if declared is not None:
        split.declared_residuals = _declared_residuals(F, p, declared, vframe, g, J, tol)
    return split


def _declared_residuals(F, p, declared: DeclaredFrames, vframe, g, J, tol) -> dict:
    res = {}
    dv = [v.at(p) for v in declared.vertical]
    dh = [h.at(p) for h in declared.horizontal]
    scale = max(1.0, float(np.max(np.abs(J))))
    res["declared vertical in ker dF"] = max((_maxabs(J @ v) / scale for v in dv), default=0.0)
    res["declared vertical spans ker dF"] = float(abs(linalg.rank(np.array(dv), tol) - len(vframe))) if dv else float(len(vframe))
    if dh:
        res["declared horizontal orthogonal to fibers"] = max(
            (abs(float(h @ g @ v)) for h in dh for v in vframe.vectors), default=0.0)
        res["declared horizontal spans complement"] = float(
            abs(linalg.rank(np.array(dh), tol) - (F.source.dim - len(vframe))))
    return res


class SubmersionPoint:
    """Projectors, O'Neill tensors and the map's second fundamental form at one point.

    With declared vertical fields the projectors are smooth jets; without
    them they are pointwise constants and every differentiating operation
    raises :class:`MissingDeclaredFieldsError`.
    """

    def __init__(self, F: SmoothMap, p, declared: Optional[DeclaredFrames] = None,
                 split: Optional[SplitFrames] = None, tol: float = 1e-9):
        p = np.asarray(p, dtype=float)
        self.F = F
        self.p = p
        self.loc: Local = F.source.at(p)
        self.n = self.loc.n
        self.tol = tol
        self.declared = declared if declared is not None and declared.vertical else None
        self.smooth = self.declared is not None or (split is not None and len(split.vertical) == 0)
        G = self.loc.G
        if self.declared is not None:
            Vd = Jet.stack([v.jet(p) for v in self.declared.vertical], axis=1)
            gram = einsum("ia,ij,jb->ab", Vd, G, Vd)
            linalg.check_nondegenerate(gram.val, tol, what="metric on the declared vertical fields")
            self.PV = einsum("ia,ab,jb,jk->ik", Vd, gram.inv(), Vd, G)
        else:
            split = split or analyze_split(F, p, tol)
            E = split.vertical.vectors
            if len(split.vertical):
                pv = E.T @ np.diag(split.vertical.signs) @ E @ G.val
            else:
                pv = np.zeros((self.n, self.n))
            self.PV = Jet.constant(pv, self.n)
        self.PH = Jet.constant(np.eye(self.n), self.n) - self.PV
        self._Fjet = F.jet(p)
        self._q = F.value(p)
        self._gammaN = None
        self._gN = None

    # -- projections ----------------------------------------------------
    def field(self, X: FieldLike) -> Jet:
        return self.loc.field(X)

    def V(self, X: FieldLike) -> Jet:
        return einsum("ij,j->i", self.PV, self.field(X))

    def H(self, X: FieldLike) -> Jet:
        return einsum("ij,j->i", self.PH, self.field(X))

    def require_smooth(self, what: str) -> None:
        if not self.smooth:
            raise MissingDeclaredFieldsError(
                f"{what} differentiates along the fibers; declare smooth vertical fields")

    def vertical_field(self, v) -> Jet:
        """Smooth vertical extension P_V(v) of a vector at p (equals v at p when v is vertical)."""
        self.require_smooth("vertical_field")
        return self.V(np.asarray(v, dtype=float))

    def horizontal_field(self, x) -> Jet:
        self.require_smooth("horizontal_field")
        return self.H(np.asarray(x, dtype=float))

    # -- O'Neill tensors -----------------------------------------------
    def T(self, E: FieldLike, G: FieldLike) -> Jet:
        self.require_smooth("T")
        VE = self.V(E)
        return self.H(self.loc.nabla(VE, self.V(G))) + self.V(self.loc.nabla(VE, self.H(G)))

    def A(self, E: FieldLike, G: FieldLike) -> Jet:
        self.require_smooth("A")
        HE = self.H(E)
        return self.V(self.loc.nabla(HE, self.H(G))) + self.H(self.loc.nabla(HE, self.V(G)))

    # -- the map --------------------------------------------------------
    @property
    def gamma_target(self) -> np.ndarray:
        if self._gammaN is None:
            self._gammaN = self.F.target.at(self._q).gamma.val
        return self._gammaN

    def push(self, X: FieldLike) -> np.ndarray:
        return self._Fjet.d1 @ self.field(X).val

    def sff(self, X: FieldLike, Y: FieldLike) -> np.ndarray:
        """(nabla F_*)(X, Y) via the pullback connection, in target coordinates."""
        X, Y = self.field(X), self.field(Y)
        dF = self._Fjet.partial()
        FY = einsum("ai,i->a", dF, Y)
        FX = dF.val @ X.val
        pull = FY.directional(X).val + np.einsum("abc,b,c->a", self.gamma_target, FX, FY.val)
        return pull - dF.val @ self.loc.nabla(X, Y).val

    def target_inner(self, a, b) -> float:
        if self._gN is None:
            self._gN = self.F.target.metric_at(self._q)
        return float(np.asarray(a) @ self._gN @ np.asarray(b))

    def pointwise(self) -> "SubmersionPoint":
        """A copy whose projectors keep only first derivatives.

        Enough for T and A evaluated on pointwise arguments (both are
        tensorial), and much cheaper than carrying second derivatives.
        """
        out = copy.copy(self)
        out.PV = self.PV.truncate(1)
        out.PH = self.PH.truncate(1)
        return out


def submersion_point(F: SmoothMap, p, declared: Optional[DeclaredFrames] = None, tol: float = 1e-9) -> SubmersionPoint:
    return SubmersionPoint(F, p, declared, tol=tol)


def _oneill_value(sp: SubmersionPoint, jet: Jet) -> ONeillValue:
    val = jet.val
    return ONeillValue(val.copy(), sp.PV.val @ val, sp.PH.val @ val)


def _sp_for(F: SmoothMap, p, frames: SplitFrames) -> SubmersionPoint:
    if frames is None or frames.declared is None or not frames.declared.vertical:
        if frames is not None and len(frames.vertical) == 0:
            return SubmersionPoint(F, p, None, split=frames, tol=frames.tol)
        raise MissingDeclaredFieldsError("O'Neill tensors need declared vertical fields")
    return SubmersionPoint(F, p, frames.declared, split=frames, tol=frames.tol)


def oneill_T(F: SmoothMap, E: FieldLike, G: FieldLike, p, frames: SplitFrames) -> ONeillValue:
    sp = _sp_for(F, p, frames)
    return _oneill_value(sp, sp.T(E, G))


def oneill_A(F: SmoothMap, E: FieldLike, G: FieldLike, p, frames: SplitFrames) -> ONeillValue:
    sp = _sp_for(F, p, frames)
    return _oneill_value(sp, sp.A(E, G))


def second_fundamental_form(F: SmoothMap, X: FieldLike, Y: FieldLike, p, frames: Optional[SplitFrames] = None) -> np.ndarray:
    return SubmersionPoint(F, p, None, split=frames or analyze_split(F, p)).sff(X, Y)


def tension_and_harmonic(F: SmoothMap, p, frames: SplitFrames, tol: float = 1e-9) -> TensionResult:
    """Tension sum_i eps_i (nabla F_*)(e_i, e_i) and the fiber mean-curvature sum."""
    full = frames.full_frame
    sp_plain = SubmersionPoint(F, p, None, split=frames, tol=tol)
    tau = np.zeros(F.target.dim)
    for e, s in zip(full.vectors, full.signs):
        tau = tau + s * sp_plain.sff(e, e)
    n = np.asarray(p).shape[0]
    mean = np.zeros(n)
    if len(frames.vertical):
        sp = _sp_for(F, p, frames).pointwise()
        for e, s in zip(frames.vertical.vectors, frames.vertical.signs):
            mean = mean + s * sp.T(e, e).val
    tn = float(np.max(np.abs(tau))) if tau.size else 0.0
    mn = float(np.max(np.abs(mean))) if mean.size else 0.0
    return TensionResult(tau, mean, tn, mn, tn <= tol, mn <= tol)


def oneill_identities(F: SmoothMap, p, declared: DeclaredFrames, tol: float = 1e-9,
                      frames: Optional[SplitFrames] = None) -> dict[str, float]:
    """Worst residual of each structural identity of T and A at ``p``.

    Vertical arguments are the pointwise frame extended by P_V, horizontal
    ones are the declared horizontal fields (the basic fields of the
    examples) together with P_H extensions of the pointwise frame.
    """
    frames = frames or analyze_split(F, p, tol, declared)
    # every identity below is a statement about values, which only need
    # first derivatives of the fields
    sp = _sp_for(F, p, frames).pointwise()
    loc = sp.loc
    g = loc.G.val
    U = [sp.vertical_field(u) for u in frames.vertical.vectors]
    Xd = [h.jet(sp.p).truncate(1) for h in (declared.horizontal if declared else ())]
    X = [sp.horizontal_field(x) for x in frames.horizontal.vectors] + Xd
    full = list(frames.full_frame.vectors)
    out = {name: 0.0 for name in (
        "T_U V = T_V U", "A_X Y = -A_Y X", "A_X Y = 1/2 V[X, Y]",
        "g(T_D E, G) = -g(E, T_D G)", "g(A_D E, G) = -g(E, A_D G)",
        "nabla_V W = T_V W + V nabla_V W", "nabla_V X = H nabla_V X + T_V X",
        "nabla_X V = A_X V + V nabla_X V", "nabla_X Y = H nabla_X Y + A_X Y",
        "[V, W] is vertical", "[V, X] is vertical for declared horizontal X")}

    def bump(key, v):
        out[key] = max(out[key], _maxabs(v))

    for a in U:
        for b in U:
            bump("T_U V = T_V U", sp.T(a, b).val - sp.T(b, a).val)
            nab = loc.nabla(a, b).val
            bump("nabla_V W = T_V W + V nabla_V W", nab - sp.T(a, b).val - sp.V(loc.nabla(a, b)).val)
            bump("[V, W] is vertical", sp.H(loc.bracket(a, b)).val)
        for x in X:
            bump("nabla_V X = H nabla_V X + T_V X",
                 loc.nabla(a, x).val - sp.H(loc.nabla(a, x)).val - sp.T(a, x).val)
            bump("nabla_X V = A_X V + V nabla_X V",
                 loc.nabla(x, a).val - sp.A(x, a).val - sp.V(loc.nabla(x, a)).val)
    for x in Xd:
        for a in U:
            bump("[V, X] is vertical for declared horizontal X", sp.H(loc.bracket(a, x)).val)
    for x in X:
        for y in X:
            Axy = sp.A(x, y).val
            bump("A_X Y = -A_Y X", Axy + sp.A(y, x).val)
            bump("A_X Y = 1/2 V[X, Y]", Axy - 0.5 * sp.V(loc.bracket(x, y)).val)
            bump("nabla_X Y = H nabla_X Y + A_X Y",
                 loc.nabla(x, y).val - sp.H(loc.nabla(x, y)).val - Axy)
    # skew-adjointness is tensorial: constant frame vectors suffice
    for D in full:
        TD = [sp.T(D, E).val for E in full]
        AD = [sp.A(D, E).val for E in full]
        for i, E in enumerate(full):
            for j, G in enumerate(full):
                bump("g(T_D E, G) = -g(E, T_D G)", TD[i] @ g @ G + E @ g @ TD[j])
                bump("g(A_D E, G) = -g(E, A_D G)", AD[i] @ g @ G + E @ g @ AD[j])
    return out


def map_identities(F: SmoothMap, p, declared: Optional[DeclaredFrames] = None, tol: float = 1e-9,
                   frames: Optional[SplitFrames] = None) -> dict[str, float]:
    """Symmetry of nabla F_*, its vanishing on horizontal pairs, and the tension split."""
    frames = frames or analyze_split(F, p, tol, declared)
    sp = SubmersionPoint(F, p, None, split=frames, tol=tol)
    full = list(frames.full_frame.vectors)
    H = list(frames.horizontal.vectors)
    out = {"(nabla F_*)(X, Y) = (nabla F_*)(Y, X)": 0.0, "(nabla F_*)(X, Y) = 0 on horizontal pairs": 0.0}
    sff = {(i, j): sp.sff(a, b) for i, a in enumerate(full) for j, b in enumerate(full)}
    for (i, j), v in sff.items():
        out["(nabla F_*)(X, Y) = (nabla F_*)(Y, X)"] = max(
            out["(nabla F_*)(X, Y) = (nabla F_*)(Y, X)"], _maxabs(v - sff[(j, i)]))
    for a in H:
        for b in H:
            out["(nabla F_*)(X, Y) = 0 on horizontal pairs"] = max(
                out["(nabla F_*)(X, Y) = 0 on horizontal pairs"], _maxabs(sp.sff(a, b)))
    if declared is not None:
        for h in declared.horizontal:
            for k in declared.horizontal:
                out["(nabla F_*)(X, Y) = 0 on horizontal pairs"] = max(
                    out["(nabla F_*)(X, Y) = 0 on horizontal pairs"], _maxabs(sp.sff(h.jet(sp.p), k.jet(sp.p))))
    if declared is not None and declared.vertical or len(frames.vertical) == 0:
        tr = tension_and_harmonic(F, p, frames, tol)
        out["tension = -F_*(sum eps_i T_{e_i} e_i)"] = _maxabs(tr.tension + sp.push(tr.mean_curvature))
    return out


__all__ += ["oneill_identities", "map_identities"]
