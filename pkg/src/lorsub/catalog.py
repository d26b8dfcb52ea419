"""Built-in example structures and submersions.

Every entry lives on R^{2n+1} with coordinates (x1..xn, y1..yn, z) and the
Lorentzian metric g = -eta (x) eta + 1/4 sum(dx^i dx^i + dy^i dy^i),
eta = -(eps/2)(dz - sum y^i dx^i), xi = 2 d/dz.  The adapted frame is

    E_i = 2 d/dy^i,   E_{n+i} = 2 (d/dx^i + y^i d/dz),   E_{2n+1} = xi.

The structure tensor is phi(X d/dx + Y d/dy + Z d/dz) = -Y d/dx - eps X d/dy
- (sum Y_i y_i) d/dz.  It satisfies the almost (para)contact axioms for both
signs and nabla_X xi = eps phi X for eps = -1 (see the project notes for
why this orientation was chosen).

Entries are plain data and can be exported to, and rebuilt from, the JSON
chart-file format used by the command line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Optional

from .contact import ContactStructure
from .geometry import Chart, VectorField
from .submersion import DeclaredFrames, SmoothMap

__all__ = [
    "CatalogEntry",
    "CatalogError",
    "NAMES",
    "load_example",
    "list_examples",
    "entry_to_dict",
    "entry_from_dict",
    "model_strings",
]


class CatalogError(KeyError):
    pass


@dataclass
class CatalogEntry:
    name: str
    chart: Chart
    structure: ContactStructure
    fmap: Optional[SmoothMap] = None
    declared: Optional[DeclaredFrames] = None
    expected: dict[str, Any] = field(default_factory=dict)
    description: str = ""
    box: float = 1.0
    source: dict[str, Any] = field(default_factory=dict)  # the JSON document this entry came from

    @property
    def target(self) -> Optional[Chart]:
        return None if self.fmap is None else self.fmap.target


def _frac(num: int, den: int) -> str:
    if den == 1:
        return str(num)
    return f"{num}/{den}"


def _coords(n: int) -> list[str]:
    return [f"x{i}" for i in range(1, n + 1)] + [f"y{i}" for i in range(1, n + 1)] + ["z"]


def model_strings(n: int, eps: int) -> dict[str, Any]:
    """The model structure on R^{2n+1} as expression strings."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if eps not in (-1, 1):
        raise ValueError("epsilon must be +1 or -1")
    d = 2 * n + 1
    co = _coords(n)
    xs, ys = list(range(n)), list(range(n, 2 * n))
    zi = d - 1
    g = [["0"] * d for _ in range(d)]
    for a in range(n):
        for b in range(n):
            yy = f"y{a + 1}*y{b + 1}/4" if a != b else f"y{a + 1}^2/4"
            g[xs[a]][xs[b]] = f"1/4 - {yy}" if a == b else f"-{yy}"
        g[ys[a]][ys[a]] = "1/4"
        g[xs[a]][zi] = g[zi][xs[a]] = f"y{a + 1}/4"
    g[zi][zi] = "-1/4"
    phi = [["0"] * d for _ in range(d)]
    for i in range(n):
        phi[xs[i]][ys[i]] = "-1"
        phi[ys[i]][xs[i]] = str(-eps)
        phi[zi][ys[i]] = f"-y{i + 1}"
    xi = ["0"] * (d - 1) + ["2"]
    half = "1/2"
    eta = [(f"y{i + 1}/2" if eps > 0 else f"-y{i + 1}/2") for i in range(n)] + ["0"] * n
    eta.append(f"-{half}" if eps > 0 else half)
    return {"coords": co, "metric": g, "structure": {"epsilon": eps, "phi": phi, "xi": xi, "eta": eta}}


def _E(n: int) -> list[list[str]]:
    """Adapted frame E_1..E_{2n+1} as component strings (1-based in the docs, 0-based here)."""
    d = 2 * n + 1
    out = []
    for i in range(n):
        v = ["0"] * d
        v[n + i] = "2"
        out.append(v)
    for i in range(n):
        v = ["0"] * d
        v[i] = "2"
        v[d - 1] = f"2*y{i + 1}"
        out.append(v)
    v = ["0"] * d
    v[d - 1] = "2"
    out.append(v)
    return out


def _comb(a: list[str], b: list[str], sign: int) -> list[str]:
    op = "+" if sign > 0 else "-"
    out = []
    for s, t in zip(a, b):
        if t == "0":
            out.append(s)
        elif s == "0":
            out.append(t if sign > 0 else f"-({t})" if not re.fullmatch(r"[\w.]+", t) else f"-{t}")
        else:
            out.append(f"{s} {op} {t}")
    return out


def _doc(n, eps, components, target_coords, target_metric, vertical, horizontal, expected, description):
    doc = model_strings(n, eps)
    doc["map"] = {"target": {"coords": target_coords, "metric": target_metric}, "components": components}
    doc["declared_frames"] = {"vertical": vertical, "horizontal": horizontal}
    doc["expected_facts"] = expected
    doc["description"] = description
    return doc


def _ex_r7_r5(eps: int) -> dict[str, Any]:
    E = _E(3)
    comps = ["x1 + y1", "x2 + y2", "x3 + y3", "x3 - y3", "y1^2/2 + y2^2/2 + y3^2/2 + z"]
    gN = [
        ["1/4*(1/2 - y1^2)", "1/4*(-y1*y2)", "1/4*(-y1*y3)", "0", "1/4*y1"],
        ["1/4*(-y1*y2)", "1/4*(1/2 - y2^2)", "1/4*(-y2*y3)", "0", "1/4*y2"],
        ["1/4*(-y1*y3)", "1/4*(-y2*y3)", "1/4*(1/2 - y3^2)", "0", "1/4*y3"],
        ["0", "0", "0", "1/4*(1/2)", "0"],
        ["1/4*y1", "1/4*y2", "1/4*y3", "0", "1/4*(-1)"],
    ]
    V = [_comb(E[0], E[3], -1), _comb(E[1], E[4], -1)]
    H = [_comb(E[0], E[3], 1), _comb(E[1], E[4], 1), E[2], E[5], E[6]]
    expected = {
        "xi_position": "horizontal", "m": 3, "n": 5,
        "fiber_signature": [2, 0, 0], "target_index": 1,
        "anti_invariant": True,
        "mu_basis": [E[2], E[5], E[6]],
        "phi_vertical_images": [[0, 0], [1, 1]],
    }
    return _doc(3, eps, comps, ["y1", "y2", "y3", "y4", "z"], gN, V, H, expected,
                "R^7 -> R^5, xi horizontal, mu = span{H3, H4, H5}")


def _ex_r5_r2(eps: int) -> dict[str, Any]:
    E = _E(2)
    V = [_comb(E[0], E[2], -1), _comb(E[1], E[3], -1), E[4]]
    H = [_comb(E[0], E[2], 1), _comb(E[1], E[3], 1)]
    expected = {
        "xi_position": "vertical", "m": 2, "n": 2,
        "fiber_signature": [2, 1, 0], "target_signature": [2, 0, 0],
        "anti_invariant": True, "phi_ker_equals_horizontal": True,
        "phi_vertical_images": [[0, 0], [1, 1]],
    }
    return _doc(2, eps, ["x1 + y1", "x2 + y2"], ["u", "v"], [["1/8", "0"], ["0", "1/8"]], V, H, expected,
                "R^5 -> R^2, xi vertical, phi(ker F_*) = (ker F_*)^perp")


def _ex_r5_r3(eps: int) -> dict[str, Any]:
    E = _E(2)
    gN = [
        ["1/4*(1/2 - y1^2)", "1/4*(-y1*y2)", "1/4*y1"],
        ["1/4*(-y1*y2)", "1/4*(1/2 - y2^2)", "1/4*y2"],
        ["1/4*y1", "1/4*y2", "1/4*(-1)"],
    ]
    V = [_comb(E[2], E[0], -1), _comb(E[3], E[1], -1)]
    H = [_comb(E[0], E[2], 1), _comb(E[1], E[3], 1), E[4]]
    expected = {
        "xi_position": "horizontal", "m": 2, "n": 3,
        "fiber_signature": [2, 0, 0], "target_index": 1,
        "anti_invariant": True, "horizontal_is_phi_ker_plus_xi": True,
        "mu_basis": [E[4]],
        "phi_vertical_images": [[0, 0], [1, 1]],
    }
    return _doc(2, eps, ["x1 + y1", "x2 + y2", "y1^2/2 + y2^2/2 + z"], ["y1", "y2", "z"], gN, V, H, expected,
                "R^5 -> R^3, xi horizontal, horizontal = phi(ker F_*) + span{xi}")


def _product_control() -> dict[str, Any]:
    # flat R^3 with g = dx^2 + dy^2 - dz^2, xi = d/dz, phi a constant rotation:
    # a valid almost contact metric structure (eps = -1) that is not K-contact
    doc = {
        "coords": ["x", "y", "z"],
        "metric": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "-1"]],
        "structure": {
            "epsilon": -1,
            "phi": [["0", "-1", "0"], ["1", "0", "0"], ["0", "0", "0"]],
            "xi": ["0", "0", "1"],
            "eta": ["0", "0", "1"],
        },
        "map": {"target": {"coords": ["u", "v"], "metric": [["1", "0"], ["0", "1"]]}, "components": ["x", "y"]},
        "declared_frames": {"vertical": [["0", "0", "1"]], "horizontal": [["1", "0", "0"], ["0", "1", "0"]]},
        "expected_facts": {
            "xi_position": "vertical", "m": 1, "n": 2,
            "fiber_signature": [0, 1, 0], "target_signature": [2, 0, 0], "anti_invariant": True,
        },
        "description": "product-metric projection R^{2,1} -> R^2 (control)",
    }
    return doc


_BUILDERS = {
    "lps-r7-r5": lambda: _ex_r7_r5(-1),
    "lps-r7-r5-para": lambda: _ex_r7_r5(1),
    "ls-r5-r2": lambda: _ex_r5_r2(-1),
    "lps-r5-r2": lambda: _ex_r5_r2(1),
    "ls-r5-r3": lambda: _ex_r5_r3(-1),
    "product-r3-r2": _product_control,
}

NAMES = ("model-r2n1",) + tuple(_BUILDERS)

_MODEL_RE = re.compile(r"^model-r2n1(?:\(\s*(\d+)\s*,\s*([+-]?1)\s*\))?$")


def list_examples() -> list[str]:
    return list(NAMES)


def load_example(name: str, n: Optional[int] = None, epsilon: Optional[int] = None) -> CatalogEntry:
    """Build a catalog entry.

    ``model-r2n1`` takes its parameters either inline, ``"model-r2n1(2,-1)"``,
    or through ``n`` / ``epsilon`` (defaults 1 and -1).
    """
    m = _MODEL_RE.match(name.strip())
    if m:
        nn = int(m.group(1)) if m.group(1) else (1 if n is None else int(n))
        ee = int(m.group(2)) if m.group(2) else (-1 if epsilon is None else int(epsilon))
        doc = model_strings(nn, ee)
        doc["description"] = f"model structure on R^{2 * nn + 1}, eps = {ee}"
        doc["expected_facts"] = {}
        return entry_from_dict(doc, name=f"model-r2n1({nn},{ee})")
    if name not in _BUILDERS:
        raise CatalogError(f"unknown catalog entry {name!r}; known: {', '.join(NAMES)}")
    return entry_from_dict(_BUILDERS[name](), name=name)


def entry_from_dict(doc: dict[str, Any], name: Optional[str] = None) -> CatalogEntry:
    coords = doc["coords"]
    chart = Chart(coords, doc["metric"])
    st = doc["structure"]
    structure = ContactStructure(
        chart, int(st["epsilon"]), chart.tensor11(st["phi"]), chart.vector(st["xi"]), chart.oneform(st["eta"]))
    fmap = None
    declared = None
    if doc.get("map"):
        tgt = doc["map"]["target"]
        target = Chart(tgt["coords"], tgt["metric"])
        fmap = SmoothMap(chart, target, doc["map"]["components"])
    frames = doc.get("declared_frames") or {}
    if frames.get("vertical") or frames.get("horizontal"):
        declared = DeclaredFrames(
            tuple(chart.vector(v) for v in frames.get("vertical", [])),
            tuple(chart.vector(h) for h in frames.get("horizontal", [])),
        )
    return CatalogEntry(
        name=name or doc.get("name", "file"),
        chart=chart,
        structure=structure,
        fmap=fmap,
        declared=declared,
        expected=dict(doc.get("expected_facts") or {}),
        description=doc.get("description", ""),
        box=float(doc.get("box", 1.0)),
        source=doc,
    )


def entry_to_dict(entry: CatalogEntry) -> dict[str, Any]:
    S = entry.structure
    doc: dict[str, Any] = {
        "name": entry.name,
        "description": entry.description,
        "coords": list(entry.chart.coord_names),
        "metric": entry.chart.metric_strings(),
        "structure": {
            "epsilon": S.epsilon,
            "phi": S.phi.to_strings(),
            "xi": S.xi.to_strings(),
            "eta": S.eta.to_strings(),
        },
        "box": entry.box,
    }
    if entry.fmap is not None:
        doc["map"] = {
            "target": {"coords": list(entry.fmap.target.coord_names), "metric": entry.fmap.target.metric_strings()},
            "components": entry.fmap.component_strings(),
        }
    if entry.declared is not None:
        doc["declared_frames"] = {
            "vertical": [v.to_strings() for v in entry.declared.vertical],
            "horizontal": [h.to_strings() for h in entry.declared.horizontal],
        }
    if entry.expected:
        doc["expected_facts"] = entry.expected
    return doc


def frame_fields(entry: CatalogEntry) -> list[VectorField]:
    """The adapted frame E_1..E_{2n+1} of a model-based entry."""
    n = (entry.chart.dim - 1) // 2
    return [entry.chart.vector(v) for v in _E(n)]


__all__.append("frame_fields")
