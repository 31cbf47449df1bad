"""Smooth coefficient functions on spacetime and phase-space charts.

Coordinates are ordered (x0, x1..xn) on spacetime and (x0, x1..xn,
v1..vn) on phase space, where v_i are the chart velocities.  A
:class:`Field` wraps a plain callable over a coordinate list; because the
callable is written in terms of generic scalar arithmetic it evaluates
equally on floats and on dual numbers, which gives exact partial
derivatives to total order 2 through :func:`Field.partial`.
"""

import random
from dataclasses import dataclass

from . import duals
from .duals import sin, cos, exp, value


class DerivativeOrderError(ValueError):
    """Requested derivative order above what the engine guarantees."""


@dataclass(frozen=True)
class Chart:
    """Index bookkeeping for an (n+1)-dimensional spacetime chart, n >= 2.

    0 is the time slot, 1..n the space slots and n+1..2n the velocity slots
    of the induced phase-space chart.
    """

    n: int = 3

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("spatial dimension must be at least 2")

    @property
    def dim_e(self):
        return self.n + 1

    @property
    def dim_phase(self):
        return 2 * self.n + 1

    def vel(self, i):
        """Phase-chart slot of the i-th velocity (i in 1..n)."""
        return self.n + i

    def space_labels(self):
        return [f"x{i}" for i in range(1, self.n + 1)]


@dataclass(frozen=True)
class PhasePoint:
    """A point (t, x, v) of the phase chart; entries must be finite."""

    t: float
    x: tuple
    v: tuple

    def __post_init__(self):
        import math

        if not all(math.isfinite(c) for c in (self.t, *self.x, *self.v)):
            raise ValueError("phase point entries must be finite")

    def coords(self):
        return [self.t, *self.x, *self.v]

    @classmethod
    def from_coords(cls, xs, n):
        return cls(xs[0], tuple(xs[1 : n + 1]), tuple(xs[n + 1 : 2 * n + 1]))


class Field:
    """A smooth scalar function of chart coordinates.

    ``fn`` takes a list of scalars (floats or duals).  Fields on spacetime
    simply ignore trailing velocity slots, so they can be evaluated at
    phase points unchanged.  ``const_value`` marks fields known to be
    constant, which lets derived-coefficient constructors skip dead work.
    """

    __slots__ = ("fn", "is_zero", "const_value")

    def __init__(self, fn, is_zero=False, const_value=None):
        self.fn = fn
        self.is_zero = is_zero
        self.const_value = const_value

    def __call__(self, xs):
        return self.fn(xs)

    def partial(self, alpha, xs):
        """Exact partial along multi-index ``alpha`` (len <= 2)."""
        if len(alpha) > 2:
            raise DerivativeOrderError("partials above total order 2 are not supported")
        if len(alpha) == 0:
            return self.fn(xs)
        if self.const_value is not None:
            return 0.0
        if len(alpha) == 1:
            return duals.partial(self.fn, xs, alpha[0])
        return duals.partial2(self.fn, xs, alpha[0], alpha[1])

    # field algebra -------------------------------------------------------

    def __add__(self, other):
        other = as_field(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        return Field(lambda xs, f=self.fn, g=other.fn: f(xs) + g(xs))

    __radd__ = __add__

    def __neg__(self):
        if self.is_zero:
            return self
        return Field(lambda xs, f=self.fn: -f(xs))

    def __sub__(self, other):
        return self + (-as_field(other))

    def __rsub__(self, other):
        return as_field(other) + (-self)

    def __mul__(self, other):
        other = as_field(other)
        if self.is_zero or other.is_zero:
            return ZERO
        return Field(lambda xs, f=self.fn, g=other.fn: f(xs) * g(xs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_field(other)
        if self.is_zero:
            return ZERO
        return Field(lambda xs, f=self.fn, g=other.fn: f(xs) / g(xs))

    def __pow__(self, k):
        return Field(lambda xs, f=self.fn: f(xs) ** k)


def constant(c):
    c = float(c)
    if c == 0.0:
        return ZERO
    return Field(lambda xs: c, const_value=c)


ZERO = Field(lambda xs: 0.0, is_zero=True, const_value=0.0)
ONE = Field(lambda xs: 1.0, const_value=1.0)


def coordinate(k):
    """The k-th chart coordinate as a field."""
    return Field(lambda xs: xs[k])


def as_field(f):
    if isinstance(f, Field):
        return f
    if isinstance(f, (int, float)):
        return constant(f)
    raise TypeError(f"cannot treat {f!r} as a field")


def sin_of(f):
    f = as_field(f)
    return Field(lambda xs, g=f.fn: sin(g(xs)))


def cos_of(f):
    f = as_field(f)
    return Field(lambda xs, g=f.fn: cos(g(xs)))


def exp_of(f):
    f = as_field(f)
    return Field(lambda xs, g=f.fn: exp(g(xs)))


def polynomial(terms):
    """Sparse multivariate polynomial: ``terms = [(coeff, {slot: power})]``."""
    cooked = [(float(c), tuple(sorted(e.items()))) for c, e in terms]

    def fn(xs):
        total = 0.0
        for c, expo in cooked:
            t = c
            for slot, p in expo:
                t = t * xs[slot] ** p
            total = total + t
        return total

    return Field(fn)


def from_config(spec):
    """Build a field from a JSON-style constructor description.

    Supported kinds: constant, coord, polynomial (``coeffs`` maps a
    space-separated exponent key per slot to a coefficient, or a list of
    ``[coeff, [slot, power, slot, power, ...]]``), sin/cos/exp of a nested
    spec, sum, product, scale, pow.
    """
    if isinstance(spec, (int, float)):
        return constant(spec)
    kind = spec.get("kind")
    if kind == "constant":
        return constant(spec["value"])
    if kind == "coord":
        return coordinate(int(spec["index"]))
    if kind == "polynomial":
        terms = []
        for entry in spec["coeffs"]:
            c, flat = entry[0], entry[1]
            expo = {int(flat[i]): int(flat[i + 1]) for i in range(0, len(flat), 2)}
            terms.append((c, expo))
        return polynomial(terms)
    if kind == "sin":
        return sin_of(from_config(spec["of"]))
    if kind == "cos":
        return cos_of(from_config(spec["of"]))
    if kind == "exp":
        return exp_of(from_config(spec["of"]))
    if kind == "sum":
        out = ZERO
        for t in spec["terms"]:
            out = out + from_config(t)
        return out
    if kind == "product":
        out = ONE
        for t in spec["factors"]:
            out = out * from_config(t)
        return out
    if kind == "scale":
        return constant(spec["by"]) * from_config(spec["of"])
    if kind == "pow":
        return from_config(spec["of"]) ** int(spec["exp"])
    raise ValueError(f"unknown field constructor kind {kind!r}")


def fd_oracle(f, alpha, xs, h):
    """Central finite-difference estimate of a partial, for cross-checks only."""
    if h <= 0:
        raise ValueError("step must be positive")
    xs = [float(c) for c in xs]

    def at(shift):
        p = list(xs)
        for slot, d in shift:
            p[slot] += d
        return value(f(p))

    if len(alpha) == 0:
        return at([])
    if len(alpha) == 1:
        a = alpha[0]
        return (at([(a, h)]) - at([(a, -h)])) / (2 * h)
    a, b = alpha
    if a == b:
        return (at([(a, h)]) - 2 * at([]) + at([(a, -h)])) / (h * h)
    return (
        at([(a, h), (b, h)])
        - at([(a, h), (b, -h)])
        - at([(a, -h), (b, h)])
        + at([(a, -h), (b, -h)])
    ) / (4 * h * h)


# -- deterministic sample points -----------------------------------------

_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]


def _halton(index, base):
    f, r = 1.0, 0.0
    while index > 0:
        f /= base
        r += f * (index % base)
        index //= base
    return r


def sample_points(count, box, seed=0):
    """Deterministic low-discrepancy points inside ``box``.

    ``box`` is a list of (lo, hi) pairs, one per coordinate.  A seeded
    rotation is applied to the underlying Halton sequence so different
    seeds give different (but reproducible) point sets.
    """
    dim = len(box)
    if dim > len(_PRIMES):
        raise ValueError("sample dimension too large")
    rng = random.Random(seed)
    shift = [rng.random() for _ in range(dim)]
    pts = []
    for k in range(count):
        p = []
        for d in range(dim):
            u = _halton(k + 1, _PRIMES[d]) + shift[d]
            u -= int(u)
            lo, hi = box[d]
            p.append(lo + u * (hi - lo))
        pts.append(p)
    return pts


def default_box(dim):
    return [(-1.0, 1.0)] * dim
