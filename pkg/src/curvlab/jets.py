"""Truncated multivariate Taylor ("jet") arithmetic in up to 3 variables.

A :class:`Jet` stores the Taylor coefficients c_a = (d^a f)(p) / a! of a
scalar field f at a point, densely over every multi-index a of total degree
<= order (order <= 4).  All arithmetic truncates at the jet order, so any
quantity built from jets carries exact partial derivatives up to that order;
nothing downstream ever touches finite differences.

Coefficients live in a flat float64 array in graded-lexicographic order.
The enumeration for order k is a prefix of the enumeration for order k+1,
which turns truncation into a slice and differentiation into an index-table
gather.  Elementary functions are composed through Horner evaluation of the
univariate series in the nilpotent part; the series coefficients come from
forward recurrences.

Jets are immutable values and every operation is a pure function, so they
are safe to use from any number of concurrent evaluators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_DIM = 3
MAX_ORDER = 4

ELEMENTARY_FUNCTIONS = (
    "sin", "cos", "sinh", "cosh", "exp", "log", "sqrt", "atan",
    "recip", "pow-const",
)


class JetError(ValueError):
    """Base class for jet-arithmetic failures."""


class JetShapeError(JetError):
    """Operands disagree in dimension or order, or parameters are out of range."""


class JetDomainError(JetError):
    """Singular input: the degree-0 value lies outside an elementary function's domain."""


class JetIndexError(JetError):
    """A multi-index or variable index is invalid for the jet's shape."""


def coefficient_count(dim: int, order: int) -> int:
    """Number of multi-indices of total degree <= order in `dim` variables."""
    return math.comb(dim + order, dim)


def multi_indices(dim: int, order: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices of total degree <= order, in coefficient order."""
    return _table(dim, order).multis


def _degree_multis(dim: int, deg: int) -> list[tuple[int, ...]]:
    if dim == 1:
        return [(deg,)]
    out = []
    for first in range(deg + 1):
        for rest in _degree_multis(dim - 1, deg - first):
            out.append((first,) + rest)
    return out


class _JetTable:
    """Precomputed index tables for one (dim, order) coefficient layout."""

    __slots__ = (
        "dim", "order", "multis", "index", "ncoef",
        "diag_i", "diag_k", "off_i", "off_j", "off_k", "deriv",
    )

    def __init__(self, dim: int, order: int):
        self.dim = dim
        self.order = order
        multis: list[tuple[int, ...]] = []
        for deg in range(order + 1):
            multis.extend(_degree_multis(dim, deg))
        self.multis = tuple(multis)
        self.index = {m: i for i, m in enumerate(multis)}
        self.ncoef = len(multis)

        # Unordered-pair product table.  Off-diagonal terms are accumulated as
        # a[i]*b[j] + a[j]*b[i], which makes jet_product bitwise commutative.
        diag_i, diag_k = [], []
        off_i, off_j, off_k = [], [], []
        for i, mi in enumerate(multis):
            for j in range(i, self.ncoef):
                mj = multis[j]
                s = tuple(p + q for p, q in zip(mi, mj))
                if sum(s) > order:
                    continue
                k = self.index[s]
                if i == j:
                    diag_i.append(i)
                    diag_k.append(k)
                else:
                    off_i.append(i)
                    off_j.append(j)
                    off_k.append(k)
        self.diag_i = np.array(diag_i, dtype=np.intp)
        self.diag_k = np.array(diag_k, dtype=np.intp)
        self.off_i = np.array(off_i, dtype=np.intp)
        self.off_j = np.array(off_j, dtype=np.intp)
        self.off_k = np.array(off_k, dtype=np.intp)

        # Per-axis differentiation tables: coefficient of b in d_axis f comes
        # from the coefficient of b + e_axis, scaled by b_axis + 1.
        self.deriv = []
        n_small = coefficient_count(dim, order - 1) if order > 0 else 0
        for axis in range(dim):
            src = np.empty(n_small, dtype=np.intp)
            fac = np.empty(n_small, dtype=np.float64)
            for t in range(n_small):
                m = multis[t]
                bumped = m[:axis] + (m[axis] + 1,) + m[axis + 1:]
                src[t] = self.index[bumped]
                fac[t] = m[axis] + 1
            self.deriv.append((src, fac))


@lru_cache(maxsize=None)
def _table(dim: int, order: int) -> _JetTable:
    if not (1 <= dim <= MAX_DIM):
        raise JetShapeError(f"jet dimension must be in 1..{MAX_DIM}, got {dim}")
    if not (0 <= order <= MAX_ORDER):
        raise JetShapeError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
    return _JetTable(dim, order)


def _make(dim: int, order: int, coeffs: np.ndarray) -> "Jet":
    coeffs.flags.writeable = False
    return Jet(dim, order, coeffs)


@dataclass(frozen=True, eq=False)
class Jet:
    """Dense truncated Taylor expansion of a scalar field at a point."""

    dim: int
    order: int
    coeffs: np.ndarray

    @property
    def value(self) -> float:
        """Degree-0 coefficient, i.e. the field value at the expansion point."""
        return float(self.coeffs[0])

    def coefficient(self, alpha: tuple[int, ...]) -> float:
        """Taylor coefficient c_alpha = (d^alpha f) / alpha!."""
        tab = _table(self.dim, self.order)
        key = tuple(alpha)
        if len(key) != self.dim or key not in tab.index:
            raise JetIndexError(f"multi-index {alpha} invalid for dim={self.dim}, order={self.order}")
        return float(self.coeffs[tab.index[key]])

    def derivative(self, axis: int) -> "Jet":
        """Jet of the partial derivative along `axis`, one order lower."""
        if not (0 <= axis < self.dim):
            raise JetIndexError(f"axis {axis} out of range for dim {self.dim}")
        if self.order == 0:
            raise JetShapeError("cannot differentiate an order-0 jet")
        src, fac = _table(self.dim, self.order).deriv[axis]
        return _make(self.dim, self.order - 1, self.coeffs[src] * fac)

    def truncate(self, order: int) -> "Jet":
        """Drop coefficients above `order` (graded layout makes this a slice)."""
        if order == self.order:
            return self
        if not (0 <= order < self.order):
            raise JetShapeError(f"cannot truncate order {self.order} jet to order {order}")
        return _make(self.dim, order, self.coeffs[: coefficient_count(self.dim, order)].copy())

    # -- arithmetic ---------------------------------------------------------

    def _is_compatible(self, other: "Jet") -> None:
        if self.dim != other.dim or self.order != other.order:
            raise JetShapeError(
                f"jet mismatch: dim/order ({self.dim},{self.order}) vs ({other.dim},{other.order})"
            )

    def __add__(self, other):
        if isinstance(other, Jet):
            self._is_compatible(other)
            return _make(self.dim, self.order, self.coeffs + other.coeffs)
        if isinstance(other, (int, float)):
            c = self.coeffs.copy()
            c[0] += other
            return _make(self.dim, self.order, c)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._is_compatible(other)
            return _make(self.dim, self.order, self.coeffs - other.coeffs)
        if isinstance(other, (int, float)):
            c = self.coeffs.copy()
            c[0] -= other
            return _make(self.dim, self.order, c)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, float)):
            c = -self.coeffs
            c[0] += other
            return _make(self.dim, self.order, c)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_product(self, other)
        if isinstance(other, (int, float)):
            return _make(self.dim, self.order, self.coeffs * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return jet_product(self, jet_elementary("recip", other))
        if isinstance(other, (int, float)):
            if other == 0:
                raise JetDomainError("division of a jet by scalar zero")
            return _make(self.dim, self.order, self.coeffs / float(other))
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, float)):
            return jet_elementary("recip", self) * float(other)
        return NotImplemented

    def __neg__(self):
        return _make(self.dim, self.order, -self.coeffs)

    def __pow__(self, exponent):
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return jet_elementary("recip", self) ** (-exponent)
        result = jet_constant(1.0, self.dim, self.order)
        base = self
        n = exponent
        while n:
            if n & 1:
                result = jet_product(result, base)
            n >>= 1
            if n:
                base = jet_product(base, base)
        return result

    def __repr__(self):
        return f"Jet(dim={self.dim}, order={self.order}, value={self.value!r})"


def jet_constant(value: float, dim: int, order: int) -> Jet:
    """Jet of the constant field `value`."""
    c = np.zeros(coefficient_count(dim, order))
    _table(dim, order)  # validates dim/order
    c[0] = float(value)
    return _make(dim, order, c)


def jet_variable(index: int, value: float, dim: int, order: int) -> Jet:
    """Jet of the coordinate function u^index at a point where it equals `value`."""
    tab = _table(dim, order)
    if not (0 <= index < dim):
        raise JetIndexError(f"variable index {index} out of range for dim {dim}")
    c = np.zeros(tab.ncoef)
    c[0] = float(value)
    if order >= 1:
        unit = tuple(1 if a == index else 0 for a in range(dim))
        c[tab.index[unit]] = 1.0
    return _make(dim, order, c)


def jet_product(a: Jet, b: Jet) -> Jet:
    """Truncated Cauchy product.  Bitwise commutative by construction."""
    if not isinstance(a, Jet) or not isinstance(b, Jet):
        raise JetShapeError("jet_product requires two jets")
    a._is_compatible(b)
    tab = _table(a.dim, a.order)
    ca, cb = a.coeffs, b.coeffs
    out = np.bincount(tab.diag_k, weights=ca[tab.diag_i] * cb[tab.diag_i], minlength=tab.ncoef)
    if tab.off_i.size:
        w = ca[tab.off_i] * cb[tab.off_j] + ca[tab.off_j] * cb[tab.off_i]
        out += np.bincount(tab.off_k, weights=w, minlength=tab.ncoef)
    return _make(a.dim, a.order, out)


def jet_extract(a: Jet, alpha: tuple[int, ...]) -> float:
    """Partial derivative value d^alpha f = alpha! * c_alpha."""
    c = a.coefficient(alpha)
    fact = 1
    for e in alpha:
        fact *= math.factorial(e)
    return c * fact


# -- elementary functions ----------------------------------------------------

def _series_reciprocal(poly: list[float], order: int) -> list[float]:
    # Coefficients of 1/p(x) for a univariate series p with p[0] != 0.
    h = [1.0 / poly[0]]
    for j in range(1, order + 1):
        acc = 0.0
        for i in range(1, min(j, len(poly) - 1) + 1):
            acc += poly[i] * h[j - i]
        h.append(-acc / poly[0])
    return h


def _univariate_series(name: str, x0: float, order: int, param) -> list[float]:
    """Taylor coefficients [g(x0), g'(x0), g''(x0)/2!, ...] up to `order`."""
    if name == "exp":
        e = math.exp(x0)
        return [e / math.factorial(j) for j in range(order + 1)]
    if name in ("sin", "cos"):
        s, c = math.sin(x0), math.cos(x0)
        cycle = (s, c, -s, -c) if name == "sin" else (c, -s, -c, s)
        return [cycle[j % 4] / math.factorial(j) for j in range(order + 1)]
    if name in ("sinh", "cosh"):
        s, c = math.sinh(x0), math.cosh(x0)
        cycle = (s, c) if name == "sinh" else (c, s)
        return [cycle[j % 2] / math.factorial(j) for j in range(order + 1)]
    if name == "log":
        if x0 <= 0:
            raise JetDomainError(f"log of non-positive jet value {x0}")
        out = [math.log(x0)]
        for j in range(1, order + 1):
            out.append((-1.0) ** (j - 1) / (j * x0 ** j))
        return out
    if name == "sqrt":
        if x0 <= 0:
            raise JetDomainError(f"sqrt of non-positive jet value {x0}")
        out = [math.sqrt(x0)]
        for j in range(1, order + 1):
            out.append(out[-1] * (1.5 - j) / (j * x0))
        return out
    if name == "recip":
        if x0 == 0:
            raise JetDomainError("reciprocal of a jet with zero value")
        out = [1.0 / x0]
        for j in range(1, order + 1):
            out.append(-out[-1] / x0)
        return out
    if name == "pow-const":
        if param is None:
            raise JetShapeError("pow-const requires an exponent parameter")
        p = float(param)
        if x0 <= 0:
            raise JetDomainError(f"pow-const of non-positive jet value {x0}")
        out = [x0 ** p]
        for j in range(1, order + 1):
            out.append(out[-1] * (p - j + 1) / (j * x0))
        return out
    if name == "atan":
        # Integrate the series of 1/(1 + x^2) expanded at x0.
        h = _series_reciprocal([1.0 + x0 * x0, 2.0 * x0, 1.0], max(order - 1, 0))
        out = [math.atan(x0)]
        for j in range(1, order + 1):
            out.append(h[j - 1] / j)
        return out
    raise JetShapeError(f"unknown elementary function {name!r}")


def jet_elementary(name: str, a: Jet, param: float | None = None) -> Jet:
    """Truncated Taylor composition g(a) for an elementary function g.

    The univariate series of g at a.value is evaluated by Horner's rule in
    the nilpotent part of `a`, which is exact at the jet order.
    """
    if not isinstance(a, Jet):
        raise JetShapeError("jet_elementary requires a jet operand")
    series = _univariate_series(name, a.value, a.order, param)
    tilde = a - a.value
    out = jet_constant(series[-1], a.dim, a.order)
    for d in series[-2::-1]:
        out = jet_product(out, tilde) + d
    return out
