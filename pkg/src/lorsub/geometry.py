"""Charts, tensor fields and the Levi-Civita calculus at a point.

Everything here is evaluated through :class:`~lorsub.jet.Jet` objects so that
derived fields (covariant derivatives, projections, brackets) keep enough
derivative information to be differentiated once more.  Field arguments may
be expression fields (:class:`VectorField`), jets, or plain arrays; a plain
array is read as a field with constant coordinate components.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import linalg
from .expr import ScalarExpr, constant, parse_expr
from .jet import Jet, as_jet, einsum

__all__ = [
    "Chart",
    "Local",
    "VectorField",
    "OneForm",
    "Tensor11Field",
    "christoffel",
    "cov_deriv_vector",
    "lie_bracket",
    "cov_deriv_tensor11",
    "d_oneform",
    "DEFAULT_KAPPA",
]

DEFAULT_KAPPA = 0.5


def _parse_all(items, coords) -> tuple[ScalarExpr, ...]:
    out = []
    for it in items:
        if isinstance(it, ScalarExpr):
            if it.coords != tuple(coords):
                raise ValueError("expression is bound to different coordinates")
            out.append(it)
        elif isinstance(it, (int, float)):
            out.append(constant(float(it), coords))
        else:
            out.append(parse_expr(str(it), coords))
    return tuple(out)


def _cached_jet(obj, p, build) -> Jet:
    # jets are never modified in place, so one evaluation per point suffices
    arr = np.asarray(p, dtype=float)
    cache = obj.__dict__.setdefault("_jets", {})
    key = arr.tobytes()
    j = cache.get(key)
    if j is None:
        if len(cache) > 256:
            cache.clear()
        j = cache[key] = build(arr)
    return j


@dataclass(frozen=True)
class VectorField:
    coords: tuple[str, ...]
    components: tuple[ScalarExpr, ...]

    @classmethod
    def parse(cls, components: Sequence, coords: Sequence[str]) -> "VectorField":
        coords = tuple(coords)
        comps = _parse_all(components, coords)
        if len(comps) != len(coords):
            raise ValueError(f"vector field needs {len(coords)} components, got {len(comps)}")
        return cls(coords, comps)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def jet(self, p) -> Jet:
        return _cached_jet(self, p, lambda q: Jet.stack([c.jet(q) for c in self.components]))

    def at(self, p) -> np.ndarray:
        return np.array([c(p) for c in self.components])

    def to_strings(self) -> list[str]:
        return [c.to_source() for c in self.components]


@dataclass(frozen=True)
class OneForm:
    coords: tuple[str, ...]
    components: tuple[ScalarExpr, ...]

    @classmethod
    def parse(cls, components: Sequence, coords: Sequence[str]) -> "OneForm":
        coords = tuple(coords)
        comps = _parse_all(components, coords)
        if len(comps) != len(coords):
            raise ValueError(f"one-form needs {len(coords)} components, got {len(comps)}")
        return cls(coords, comps)

    def jet(self, p) -> Jet:
        return _cached_jet(self, p, lambda q: Jet.stack([c.jet(q) for c in self.components]))

    def at(self, p) -> np.ndarray:
        return np.array([c(p) for c in self.components])

    def to_strings(self) -> list[str]:
        return [c.to_source() for c in self.components]


@dataclass(frozen=True)
class Tensor11Field:
    """Mixed (1,1) tensor; ``rows[k][i]`` is the component T^k_i."""

    coords: tuple[str, ...]
    rows: tuple[tuple[ScalarExpr, ...], ...]

    @classmethod
    def parse(cls, matrix: Sequence[Sequence], coords: Sequence[str]) -> "Tensor11Field":
        coords = tuple(coords)
        n = len(coords)
        rows = tuple(_parse_all(r, coords) for r in matrix)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"(1,1) tensor needs a {n}x{n} matrix")
        return cls(coords, rows)

    def jet(self, p) -> Jet:
        return _cached_jet(
            self, p, lambda q: Jet.stack([Jet.stack([c.jet(q) for c in r]) for r in self.rows]))

    def at(self, p) -> np.ndarray:
        return np.array([[c(p) for c in r] for r in self.rows])

    def to_strings(self) -> list[list[str]]:
        return [[c.to_source() for c in r] for r in self.rows]


FieldLike = Union[VectorField, Jet, np.ndarray, Sequence[float]]


class Chart:
    """A coordinate patch carrying a metric of expression entries."""

    def __init__(self, coord_names: Sequence[str], metric: Sequence[Sequence], tol: float = linalg.DEFAULT_TOL):
        self.coord_names = tuple(coord_names)
        if len(set(self.coord_names)) != len(self.coord_names):
            raise ValueError("coordinate names must be distinct")
        n = len(self.coord_names)
        if n == 0:
            raise ValueError("a chart needs at least one coordinate")
        rows = tuple(_parse_all(r, self.coord_names) for r in metric)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"metric must be {n}x{n}")
        self.metric = rows
        self.tol = tol
        self._cache: dict[bytes, Local] = {}

    @property
    def dim(self) -> int:
        return len(self.coord_names)

    def metric_at(self, p) -> np.ndarray:
        return np.array([[e(p) for e in r] for r in self.metric])

    def metric_jet(self, p) -> Jet:
        return Jet.stack([Jet.stack([e.jet(p) for e in r]) for r in self.metric])

    def vector(self, components: Sequence) -> VectorField:
        return VectorField.parse(components, self.coord_names)

    def oneform(self, components: Sequence) -> OneForm:
        return OneForm.parse(components, self.coord_names)

    def tensor11(self, matrix: Sequence[Sequence]) -> Tensor11Field:
        return Tensor11Field.parse(matrix, self.coord_names)

    def at(self, p) -> "Local":
        """Pointwise context (metric, inverse and Christoffel jets) at ``p``."""
        arr = np.asarray(p, dtype=float)
        key = arr.tobytes()
        loc = self._cache.get(key)
        if loc is None:
            loc = Local(self, arr)
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = loc
        return loc

    def metric_strings(self) -> list[list[str]]:
        return [[e.to_source() for e in r] for r in self.metric]


class Local:
    """The chart at one point: G, G^-1 and Christoffel symbols as jets.

    ``G`` and ``Ginv`` carry order 2, ``gamma`` order 1, so a covariant
    derivative of an expression field comes out with order 1.
    """

    def __init__(self, chart: Chart, p: np.ndarray):
        if p.shape != (chart.dim,):
            raise ValueError(f"point has shape {p.shape}, expected ({chart.dim},)")
        self.chart = chart
        self.p = p
        self.n = chart.dim
        G = chart.metric_jet(p)
        G = G.sym()
        linalg.check_nondegenerate(G.val, chart.tol, what=f"metric at {p.tolist()}")
        self.G = G
        self.Ginv = G.inv().sym()
        dG = G.partial()  # dG[i, j, l] = d_l g_ij
        # Gamma_{lij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij), symmetric in (i, j)
        first = (einsum("jli->lij", dG) + einsum("ilj->lij", dG) - einsum("ijl->lij", dG)) * 0.5
        first = (first + first.transpose(0, 2, 1)) * 0.5
        self.gamma = einsum("kl,lij->kij", self.Ginv.truncate(1), first)

    # -- fields ---------------------------------------------------------
    def field(self, X: FieldLike) -> Jet:
        if isinstance(X, Jet):
            return X
        if isinstance(X, VectorField):
            return X.jet(self.p)
        if isinstance(X, (OneForm, Tensor11Field)):
            return X.jet(self.p)
        arr = np.asarray(X, dtype=float)
        return Jet.constant(arr, self.n)

    def coord_field(self, i: int) -> Jet:
        e = np.zeros(self.n)
        e[i] = 1.0
        return Jet.constant(e, self.n)

    # -- metric ---------------------------------------------------------
    def inner(self, X: FieldLike, Y: FieldLike) -> Jet:
        return einsum("i,ij,j->", self.field(X), self.G, self.field(Y))

    def lower(self, X: FieldLike) -> Jet:
        return einsum("ij,j->i", self.G, self.field(X))

    # -- calculus -------------------------------------------------------
    def nabla(self, X: FieldLike, Y: FieldLike) -> Jet:
        X, Y = self.field(X), self.field(Y)
        return Y.directional(X) + einsum("kij,i,j->k", self.gamma, X, Y)

    def bracket(self, X: FieldLike, Y: FieldLike) -> Jet:
        X, Y = self.field(X), self.field(Y)
        return Y.directional(X) - X.directional(Y)

    def apply(self, T: "Tensor11Field | Jet", X: FieldLike) -> Jet:
        return einsum("ki,i->k", self.field(T), self.field(X))

    def nabla_tensor11(self, T: "Tensor11Field | Jet", X: FieldLike, Y: FieldLike) -> Jet:
        """(nabla_X T) Y = nabla_X (T Y) - T (nabla_X Y)."""
        T = self.field(T)
        return self.nabla(X, self.apply(T, Y)) - self.apply(T, self.nabla(X, Y))

    def d_oneform(self, eta: "OneForm | Jet", X: FieldLike, Y: FieldLike, kappa: float = DEFAULT_KAPPA) -> float:
        eta, X, Y = self.field(eta), self.field(X), self.field(Y)
        ex = einsum("i,i->", eta, X)
        ey = einsum("i,i->", eta, Y)
        val = ey.directional(X).val - ex.directional(Y).val - einsum("i,i->", eta, self.bracket(X, Y)).val
        return float(kappa * val)


def christoffel(c: Chart, p) -> np.ndarray:
    """Gamma[k, i, j] = Gamma^k_{ij} at ``p``."""
    return c.at(p).gamma.val.copy()


def cov_deriv_vector(c: Chart, X: FieldLike, Y: FieldLike, p) -> np.ndarray:
    return c.at(p).nabla(X, Y).val.copy()


def lie_bracket(X: FieldLike, Y: FieldLike, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    n = p.shape[0]

    def j(F):
        if isinstance(F, Jet):
            return F
        if isinstance(F, VectorField):
            return F.jet(p)
        return Jet.constant(np.asarray(F, dtype=float), n)

    Xj, Yj = j(X), j(Y)
    return (Yj.directional(Xj) - Xj.directional(Yj)).val.copy()


def cov_deriv_tensor11(c: Chart, phi: "Tensor11Field | Jet", X: FieldLike, Y: FieldLike, p) -> np.ndarray:
    return c.at(p).nabla_tensor11(phi, X, Y).val.copy()


def d_oneform(c: Chart, eta: "OneForm | Jet", X: FieldLike, Y: FieldLike, p, kappa: float = DEFAULT_KAPPA) -> float:
    """kappa * (X(eta(Y)) - Y(eta(X)) - eta([X, Y])) at ``p``."""
    if kappa not in (0.5, 1.0):
        raise ValueError("kappa must be 0.5 or 1")
    return c.at(p).d_oneform(eta, X, Y, kappa)


def random_polynomial_field(c: Chart, rng: np.random.Generator, degree: int = 2) -> VectorField:
    """A vector field with random polynomial components (used for property checks)."""
    names = c.coord_names
    comps = []
    for _ in names:
        terms = [f"{rng.uniform(-1, 1):.6f}"]
        for _ in range(3):
            k = int(rng.integers(1, degree + 1))
            factors = [names[int(rng.integers(len(names)))] for _ in range(k)]
            terms.append(f"{rng.uniform(-1, 1):.6f}*" + "*".join(factors))
        comps.append(" + ".join(terms))
    return c.vector(comps)


__all__.append("random_polynomial_field")
