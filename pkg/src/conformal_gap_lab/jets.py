"""Truncated multivariate Taylor-jet arithmetic.

A :class:`Jet` holds the Taylor coefficients ``c_alpha = (d^alpha f)(x) / alpha!``
of a smooth function at a fixed point, for every multi-index ``alpha`` with
``|alpha| <= order``.  Arithmetic on jets is exact truncated-series arithmetic,
so partial derivatives of any composite of the supported primitives come out
exact to roundoff.  Coefficients are stored densely, ordered by total degree
and lexicographically within a degree; the degree-0 slot is the value.

Supported primitives: ``+ - * /``, integer powers, ``sin cos tan sinh cosh
exp sqrt``.  Division and ``sqrt`` refuse expansion points whose value is
smaller than ``SINGULAR_VALUE`` in absolute value.

The module also exposes a batched layer (:func:`conv`, :func:`dcoeffs`,
:func:`truncate_coeffs`) that applies the same operations to numpy arrays
whose last axis is the coefficient axis.  The curvature pipeline runs on that
layer; the scalar :class:`Jet` class wraps it for expression evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_VARS = 8
MAX_ORDER = 6
SINGULAR_VALUE = 1e-12

# dense scatter matrices above this entry count fall back to np.add.at
_DENSE_TABLE_LIMIT = 8_000_000


class JetError(ValueError):
    """Unsupported jet combination or singular expansion point."""


def _multi_indices(num_vars: int, order: int) -> list[tuple[int, ...]]:
    """All exponent tuples with |alpha| <= order, graded-lexicographic."""
    out: list[tuple[int, ...]] = []

    def fill(prefix: tuple[int, ...], slots: int, total: int) -> None:
        if slots == 1:
            out.append(prefix + (total,))
            return
        for k in range(total, -1, -1):
            fill(prefix + (k,), slots - 1, total - k)

    for degree in range(order + 1):
        fill((), num_vars, degree)
    return out


@dataclass(frozen=True)
class JetTables:
    """Precomputed index tables for one (num_vars, order) combination."""

    num_vars: int
    order: int
    multis: tuple[tuple[int, ...], ...]
    position: dict
    size: int
    sizes_by_order: tuple[int, ...]       # coefficient count at each truncation order
    factorial: np.ndarray                 # alpha! per slot
    mul_i: np.ndarray
    mul_j: np.ndarray
    mul_k: np.ndarray
    scatter: np.ndarray | None            # (T, size) dense 0/1 matrix, or None
    diff_src: tuple[np.ndarray, ...]      # per variable: source slot in the parent jet
    diff_fac: tuple[np.ndarray, ...]      # per variable: multiplier (alpha_i + 1)


@lru_cache(maxsize=None)
def tables(num_vars: int, order: int) -> JetTables:
    if not (1 <= num_vars <= MAX_VARS):
        raise JetError(f"num_vars must be in 1..{MAX_VARS}, got {num_vars}")
    if not (0 <= order <= MAX_ORDER):
        raise JetError(f"order must be in 0..{MAX_ORDER}, got {order}")

    multis = tuple(_multi_indices(num_vars, order))
    position = {m: i for i, m in enumerate(multis)}
    size = len(multis)
    degrees = [sum(m) for m in multis]
    sizes_by_order = tuple(
        sum(1 for d in degrees if d <= m) for m in range(order + 1)
    )
    factorial = np.array(
        [math.prod(math.factorial(k) for k in m) for m in multis], dtype=float
    )

    mi, mj, mk = [], [], []
    for i, a in enumerate(multis):
        da = degrees[i]
        for j, b in enumerate(multis):
            if da + degrees[j] > order:
                continue
            mi.append(i)
            mj.append(j)
            mk.append(position[tuple(x + y for x, y in zip(a, b))])
    mul_i = np.array(mi, dtype=np.intp)
    mul_j = np.array(mj, dtype=np.intp)
    mul_k = np.array(mk, dtype=np.intp)

    scatter = None
    if len(mul_k) * size <= _DENSE_TABLE_LIMIT:
        scatter = np.zeros((len(mul_k), size))
        scatter[np.arange(len(mul_k)), mul_k] = 1.0

    diff_src, diff_fac = [], []
    lower = _multi_indices(num_vars, order - 1) if order >= 1 else []
    for v in range(num_vars):
        src = np.empty(len(lower), dtype=np.intp)
        fac = np.empty(len(lower))
        for r, beta in enumerate(lower):
            shifted = tuple(b + (1 if t == v else 0) for t, b in enumerate(beta))
            src[r] = position[shifted]
            fac[r] = beta[v] + 1
        diff_src.append(src)
        diff_fac.append(fac)

    return JetTables(
        num_vars=num_vars,
        order=order,
        multis=multis,
        position=position,
        size=size,
        sizes_by_order=sizes_by_order,
        factorial=factorial,
        mul_i=mul_i,
        mul_j=mul_j,
        mul_k=mul_k,
        scatter=scatter,
        diff_src=tuple(diff_src),
        diff_fac=tuple(diff_fac),
    )


# ---------------------------------------------------------------------------
# batched coefficient-array operations (last axis = coefficient axis)

def conv(a: np.ndarray, b: np.ndarray, num_vars: int, order: int) -> np.ndarray:
    """Truncated-series product of coefficient arrays, broadcasting leading axes."""
    t = tables(num_vars, order)
    prods = a[..., t.mul_i] * b[..., t.mul_j]
    if t.scatter is not None:
        return prods @ t.scatter
    out = np.zeros(np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (t.size,))
    np.add.at(out, (Ellipsis, t.mul_k), prods)
    return out


def dcoeffs(a: np.ndarray, var: int, num_vars: int, order: int) -> np.ndarray:
    """Coefficients of d/dx_var applied to jets of the given order (result order-1)."""
    if order < 1:
        raise JetError("cannot differentiate an order-0 jet")
    t = tables(num_vars, order)
    return a[..., t.diff_src[var]] * t.diff_fac[var]


def truncate_coeffs(a: np.ndarray, num_vars: int, order: int, new_order: int) -> np.ndarray:
    """Drop coefficients above new_order (graded layout makes this a prefix slice)."""
    if new_order > order:
        raise JetError(f"cannot extend order {order} jet to order {new_order}")
    return a[..., : tables(num_vars, order).sizes_by_order[new_order]]


# ---------------------------------------------------------------------------
# scalar jets

class Jet:
    """One truncated Taylor expansion: value plus scaled partials up to `order`."""

    __slots__ = ("num_vars", "order", "coeffs")

    def __init__(self, num_vars: int, order: int, coeffs: np.ndarray):
        t = tables(num_vars, order)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (t.size,):
            raise JetError(
                f"expected {t.size} coefficients for {num_vars} vars at order "
                f"{order}, got shape {coeffs.shape}"
            )
        self.num_vars = num_vars
        self.order = order
        self.coeffs = coeffs

    # construction ---------------------------------------------------------

    @classmethod
    def constant(cls, value: float, num_vars: int, order: int) -> "Jet":
        c = np.zeros(tables(num_vars, order).size)
        c[0] = value
        return cls(num_vars, order, c)

    @classmethod
    def variable(cls, value: float, index: int, num_vars: int, order: int) -> "Jet":
        t = tables(num_vars, order)
        if not (0 <= index < num_vars):
            raise JetError(f"variable index {index} out of range for {num_vars} vars")
        c = np.zeros(t.size)
        c[0] = value
        if order >= 1:
            unit = tuple(1 if k == index else 0 for k in range(num_vars))
            c[t.position[unit]] = 1.0
        return cls(num_vars, order, c)

    # helpers ----------------------------------------------------------------

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def _check_compatible(self, other: "Jet") -> None:
        if self.num_vars != other.num_vars or self.order != other.order:
            raise JetError(
                f"jet mismatch: ({self.num_vars} vars, order {self.order}) vs "
                f"({other.num_vars} vars, order {other.order})"
            )

    def _coerce(self, other):
        if isinstance(other, Jet):
            self._check_compatible(other)
            return other
        if isinstance(other, (int, float)):
            return Jet.constant(float(other), self.num_vars, self.order)
        return None

    def truncated(self, new_order: int) -> "Jet":
        return Jet(
            self.num_vars,
            new_order,
            truncate_coeffs(self.coeffs, self.num_vars, self.order, new_order),
        )

    def derivative(self, var: int) -> "Jet":
        return Jet(
            self.num_vars,
            self.order - 1,
            dcoeffs(self.coeffs, var, self.num_vars, self.order),
        )

    # arithmetic -------------------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet(self.num_vars, self.order, self.coeffs + o.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet(self.num_vars, self.order, self.coeffs - o.coeffs)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet(self.num_vars, self.order, o.coeffs - self.coeffs)

    def __neg__(self):
        return Jet(self.num_vars, self.order, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Jet(self.num_vars, self.order, self.coeffs * float(other))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        t = tables(self.num_vars, self.order)
        prods = self.coeffs[t.mul_i] * o.coeffs[t.mul_j]
        c = np.bincount(t.mul_k, weights=prods, minlength=t.size)
        return Jet(self.num_vars, self.order, c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            if abs(other) <= SINGULAR_VALUE:
                raise JetError("division by (near-)zero constant")
            return Jet(self.num_vars, self.order, self.coeffs / float(other))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.reciprocal()

    def reciprocal(self) -> "Jet":
        v = self.value
        if abs(v) <= SINGULAR_VALUE:
            raise JetError(f"division at (near-)singular value {v!r}")
        series = [(-1.0) ** k / v ** (k + 1) for k in range(self.order + 1)]
        return self.compose_series(series)

    def __pow__(self, exponent):
        if not isinstance(exponent, int):
            raise JetError(f"jet powers require an integer exponent, got {exponent!r}")
        if exponent < 0:
            return self.reciprocal() ** (-exponent)
        result = Jet.constant(1.0, self.num_vars, self.order)
        base = self
        e = exponent
        while e:
            if e & 1:
                result = result * base
            base = base * base if e > 1 else base
            e >>= 1
        return result

    # composition with an analytic function of one variable -------------------

    def compose_series(self, series: list[float]) -> "Jet":
        """Evaluate f(self) given Taylor coefficients of f at self.value."""
        shifted = self - self.value
        out = Jet.constant(series[-1], self.num_vars, self.order)
        for c in reversed(series[:-1]):
            out = out * shifted + c
        return out


def seed_jets(point, order: int) -> list[Jet]:
    """Coordinate-function jets x_i at the point (unit first-order slots)."""
    pt = np.atleast_1d(np.asarray(point, dtype=float))
    n = len(pt)
    if n < 1:
        raise JetError("seed_jets needs at least one coordinate")
    if not (1 <= order <= MAX_ORDER):
        raise JetError(f"order must be in 1..{MAX_ORDER}, got {order}")
    return [Jet.variable(pt[i], i, n, order) for i in range(n)]


def extract_partial(jet: Jet, multi_index) -> float:
    """The plain partial derivative d^alpha f, recovered as alpha! * c_alpha."""
    alpha = tuple(int(k) for k in multi_index)
    if len(alpha) != jet.num_vars or any(k < 0 for k in alpha):
        raise JetError(f"bad multi-index {alpha} for {jet.num_vars} variables")
    if sum(alpha) > jet.order:
        raise JetError(
            f"multi-index order {sum(alpha)} exceeds jet order {jet.order}"
        )
    t = tables(jet.num_vars, jet.order)
    pos = t.position[alpha]
    return float(jet.coeffs[pos] * t.factorial[pos])


def gradient(jet: Jet) -> np.ndarray:
    """First partials as a vector (degree-1 block of the graded layout)."""
    n = jet.num_vars
    return jet.coeffs[1 : n + 1].copy() if jet.order >= 1 else np.zeros(n)


def hessian(jet: Jet) -> np.ndarray:
    """Second partials as a symmetric matrix."""
    if jet.order < 2:
        raise JetError("hessian needs jet order >= 2")
    t = tables(jet.num_vars, jet.order)
    n = jet.num_vars
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            alpha = tuple(
                (1 if k == i else 0) + (1 if k == j else 0) for k in range(n)
            )
            out[i, j] = jet.coeffs[t.position[alpha]] * (2.0 if i == j else 1.0)
    return out


# analytic primitives --------------------------------------------------------

def _cycle_series(jet: Jet, table) -> Jet:
    v = jet.value
    series = [table(k, v) / math.factorial(k) for k in range(jet.order + 1)]
    return jet.compose_series(series)


def sin(jet: Jet) -> Jet:
    cyc = (math.sin, math.cos, lambda x: -math.sin(x), lambda x: -math.cos(x))
    return _cycle_series(jet, lambda k, v: cyc[k % 4](v))


def cos(jet: Jet) -> Jet:
    cyc = (math.cos, lambda x: -math.sin(x), lambda x: -math.cos(x), math.sin)
    return _cycle_series(jet, lambda k, v: cyc[k % 4](v))


def tan(jet: Jet) -> Jet:
    return sin(jet) / cos(jet)


def sinh(jet: Jet) -> Jet:
    return _cycle_series(jet, lambda k, v: math.sinh(v) if k % 2 == 0 else math.cosh(v))


def cosh(jet: Jet) -> Jet:
    return _cycle_series(jet, lambda k, v: math.cosh(v) if k % 2 == 0 else math.sinh(v))


def exp(jet: Jet) -> Jet:
    e = math.exp(jet.value)
    series = [e / math.factorial(k) for k in range(jet.order + 1)]
    return jet.compose_series(series)


def sqrt(jet: Jet) -> Jet:
    v = jet.value
    if v <= SINGULAR_VALUE:
        raise JetError(f"sqrt at non-positive or near-zero value {v!r}")
    series = []
    coeff = 1.0
    for k in range(jet.order + 1):
        series.append(coeff * v ** (0.5 - k))
        coeff *= (0.5 - k) / (k + 1)
    return jet.compose_series(series)


FUNCTIONS = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "sinh": sinh,
    "cosh": cosh,
    "exp": exp,
    "sqrt": sqrt,
}
