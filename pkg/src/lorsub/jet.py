"""Array-valued truncated Taylor jets (forward-mode AD up to second order).

A :class:`Jet` carries an array value together with its first and second
partial derivatives with respect to the chart coordinates.  Derivative axes
are always trailing: for a value of shape ``S`` the gradient has shape
``S + (n,)`` and the Hessian ``S + (n, n)``.

Taking a partial derivative (:meth:`Jet.partial`) moves the gradient into
the value slot and so lowers the order by one.  Every geometric quantity in
this package is assembled from jets of order 2 (coordinate expressions), so
one covariant derivative of a derived field is always available.
"""

from __future__ import annotations

import string
from typing import Sequence, Union

import numpy as np

ArrayLike = Union[np.ndarray, float, int]


class JetOrderError(ValueError):
    """Raised when a derivative is requested beyond the carried order."""


class Jet:
    __slots__ = ("val", "d1", "d2")

    def __init__(self, val, d1=None, d2=None):
        self.val = np.asarray(val, dtype=float)
        self.d1 = None if d1 is None else np.asarray(d1, dtype=float)
        self.d2 = None if d2 is None or d1 is None else np.asarray(d2, dtype=float)

    # -- construction ---------------------------------------------------
    @classmethod
    def constant(cls, value: ArrayLike, nvars: int) -> "Jet":
        v = np.asarray(value, dtype=float)
        return cls(v, np.zeros(v.shape + (nvars,)), np.zeros(v.shape + (nvars, nvars)))

    @classmethod
    def variables(cls, point: Sequence[float]) -> "Jet":
        """The coordinate functions themselves, as a jet of shape ``(n,)``."""
        p = np.asarray(point, dtype=float)
        n = p.shape[0]
        return cls(p, np.eye(n), np.zeros((n, n, n)))

    @staticmethod
    def stack(items: Sequence["Jet"], axis: int = 0) -> "Jet":
        order = min(j.order for j in items)
        if axis < 0:
            raise ValueError("negative axis is ambiguous for jets")
        val = np.stack([j.val for j in items], axis=axis)
        d1 = np.stack([j.d1 for j in items], axis=axis) if order >= 1 else None
        d2 = np.stack([j.d2 for j in items], axis=axis) if order >= 2 else None
        return Jet(val, d1, d2)

    # -- introspection --------------------------------------------------
    @property
    def order(self) -> int:
        if self.d1 is None:
            return 0
        return 1 if self.d2 is None else 2

    @property
    def shape(self) -> tuple:
        return self.val.shape

    @property
    def nvars(self) -> int | None:
        return None if self.d1 is None else self.d1.shape[-1]

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet(self.val, self.d1 if order >= 1 else None, None)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, order={self.order})"

    # -- calculus -------------------------------------------------------
    def partial(self) -> "Jet":
        """All first partials, appended as a trailing axis."""
        if self.d1 is None:
            raise JetOrderError("jet carries no derivative information")
        return Jet(self.d1, self.d2, None)

    def directional(self, direction: "Jet | np.ndarray") -> "Jet":
        """Derivative along a vector (field) ``direction``: X^i d_i(self)."""
        n = self.val.ndim
        idx = string.ascii_lowercase[:n]
        return einsum(f"{idx}z,z->{idx}", self.partial(), direction)

    # -- structural -----------------------------------------------------
    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key):
            raise IndexError("ellipsis indexing is not supported on jets")
        return Jet(
            self.val[key],
            None if self.d1 is None else self.d1[key],
            None if self.d2 is None else self.d2[key],
        )

    def transpose(self, *axes: int) -> "Jet":
        nd = self.val.ndim
        if not axes:
            axes = tuple(reversed(range(nd)))
        ax = tuple(axes)
        return Jet(
            self.val.transpose(ax),
            None if self.d1 is None else self.d1.transpose(ax + (nd,)),
            None if self.d2 is None else self.d2.transpose(ax + (nd, nd + 1)),
        )

    @property
    def T(self) -> "Jet":
        return self.transpose()

    # -- arithmetic -----------------------------------------------------
    def __neg__(self) -> "Jet":
        return Jet(-self.val, None if self.d1 is None else -self.d1,
                   None if self.d2 is None else -self.d2)

    def __add__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return Jet(self.val + np.asarray(other, dtype=float), self.d1, self.d2)
        order = min(self.order, other.order)
        a, b = self.truncate(order), other.truncate(order)
        return Jet(
            a.val + b.val,
            None if order < 1 else a.d1 + b.d1,
            None if order < 2 else a.d2 + b.d2,
        )

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other if isinstance(other, Jet) else -np.asarray(other, dtype=float))

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            if c.ndim:
                raise TypeError("multiply jets by scalars or jets only")
            c = float(c)
            return Jet(self.val * c, None if self.d1 is None else self.d1 * c,
                       None if self.d2 is None else self.d2 * c)
        order = min(self.order, other.order)
        a, b = self.truncate(order), other.truncate(order)
        val = a.val * b.val
        if order == 0:
            return Jet(val)
        av, bv = a.val[..., None], b.val[..., None]
        d1 = a.d1 * bv + av * b.d1
        if order == 1:
            return Jet(val, d1)
        d2 = (a.d2 * bv[..., None] + av[..., None] * b.d2
              + a.d1[..., :, None] * b.d1[..., None, :]
              + b.d1[..., :, None] * a.d1[..., None, :])
        return Jet(val, d1, d2)

    __rmul__ = __mul__

    def inv(self) -> "Jet":
        """Matrix inverse of a square 2-d jet."""
        if self.val.ndim != 2 or self.val.shape[0] != self.val.shape[1]:
            raise ValueError("inv() needs a square matrix jet")
        B = np.linalg.inv(self.val)
        if self.order == 0:
            return Jet(B)
        dB = -np.einsum("ab,bcI,cd->adI", B, self.d1, B)
        if self.order == 1:
            return Jet(B, dB)
        # B dG_I B dG_J B, written as dB_I G dB_J
        cross = np.einsum("acI,cd,deJ->aeIJ", dB, self.val, dB)
        d2B = cross + cross.transpose(0, 1, 3, 2) - np.einsum(
            "ab,bcIJ,cd->adIJ", B, self.d2, B, optimize=True)
        return Jet(B, dB, d2B)

    def sym(self) -> "Jet":
        """Symmetric part of a square matrix jet."""
        return (self + self.T) * 0.5


def as_jet(x, nvars: int) -> Jet:
    return x if isinstance(x, Jet) else Jet.constant(x, nvars)


def einsum(subscripts: str, *operands) -> Jet:
    """Product-rule einsum over jets and plain arrays.

    Plain arrays are constants.  The result order is the lowest order among
    the jet operands.
    """
    lhs, out = subscripts.replace(" ", "").split("->")
    ins = lhs.split(",")
    if len(ins) != len(operands):
        raise ValueError("operand count does not match subscripts")
    used = set(subscripts)
    p, q = [c for c in string.ascii_uppercase if c not in used][:2]

    jet_idx = [k for k, o in enumerate(operands) if isinstance(o, Jet)]
    if not jet_idx:
        raise TypeError("einsum needs at least one Jet operand")
    order = min(operands[k].order for k in jet_idx)
    vals = [o.val if isinstance(o, Jet) else np.asarray(o, dtype=float) for o in operands]
    val = np.einsum(subscripts, *vals)
    if order == 0:
        return Jet(val)

    def spec(extra: dict[int, str], tail: str) -> str:
        return ",".join(s + extra.get(k, "") for k, s in enumerate(ins)) + "->" + out + tail

    d1 = 0.0
    for k in jet_idx:
        args = list(vals)
        args[k] = operands[k].d1
        d1 = d1 + np.einsum(spec({k: p}, p), *args)
    if order == 1:
        return Jet(val, d1)

    d2 = 0.0
    for k in jet_idx:
        args = list(vals)
        args[k] = operands[k].d2
        d2 = d2 + np.einsum(spec({k: p + q}, p + q), *args)
    # mixed terms come in transposed pairs (k, l) and (l, k)
    for a, k in enumerate(jet_idx):
        for l in jet_idx[a + 1:]:
            args = list(vals)
            args[k] = operands[k].d1
            args[l] = operands[l].d1
            c = np.einsum(spec({k: p, l: q}, p + q), *args)
            d2 = d2 + c + np.swapaxes(c, -1, -2)
    return Jet(val, d1, d2)
