"""
Exact algebra of compactly supported, continuous piecewise-linear functions.

Breakpoints and values are Fractions. A function is affine between consecutive
breakpoints and zero outside the first and last one. Every instance is kept in
canonical form (no collinear interior points, no zero runs at the ends), so two
functions are equal exactly when their point lists are equal.
"""

from bisect import bisect_right
from collections.abc import Iterable, Sequence
from fractions import Fraction

import numpy as np

BigRational = Fraction
Interval = tuple[Fraction, Fraction]

FORMAT_HEADER = "pwlin v1"


def as_rational(value: Fraction | int | str) -> Fraction:
    """Coerce to Fraction without ever going through a float."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"exact rational expected, got {type(value).__name__}")


def _collinear(p: tuple[Fraction, Fraction], q: tuple[Fraction, Fraction], r: tuple[Fraction, Fraction]) -> bool:
    return (q[1] - p[1]) * (r[0] - q[0]) == (r[1] - q[1]) * (q[0] - p[0])


def _canonical(xs: Sequence[Fraction], ys: Sequence[Fraction]) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    points: list[tuple[Fraction, Fraction]] = []
    for point in zip(xs, ys):
        while len(points) >= 2 and _collinear(points[-2], points[-1], point):
            points.pop()
        points.append(point)

    if all(y == 0 for _, y in points):
        return (), ()

    start = 0
    while points[start][1] == 0 and points[start + 1][1] == 0:
        start += 1
    end = len(points)
    while points[end - 1][1] == 0 and points[end - 2][1] == 0:
        end -= 1
    points = points[start:end]
    return tuple(x for x, _ in points), tuple(y for _, y in points)


class PiecewiseLinear:
    """Continuous piecewise-linear function with compact support and rational data."""

    __slots__ = ("_xs", "_ys")

    def __init__(self, breakpoints: Iterable = (), values: Iterable = ()):
        xs = [as_rational(x) for x in breakpoints]
        ys = [as_rational(y) for y in values]

        if len(xs) != len(ys):
            raise ValueError(f"{len(xs)} breakpoints but {len(ys)} values")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if xs and (ys[0] != 0 or ys[-1] != 0):
            raise ValueError("first and last values must be zero for compact support")

        self._xs, self._ys = _canonical(xs, ys)

    @classmethod
    def _trusted(cls, xs: tuple[Fraction, ...], ys: tuple[Fraction, ...]) -> "PiecewiseLinear":
        f = cls.__new__(cls)
        f._xs, f._ys = xs, ys
        return f

    @classmethod
    def zero(cls) -> "PiecewiseLinear":
        return cls._trusted((), ())

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        return self._xs

    @property
    def values(self) -> tuple[Fraction, ...]:
        return self._ys

    @property
    def is_zero(self) -> bool:
        return not self._xs

    @property
    def hull(self) -> Interval | None:
        """Smallest closed interval outside which the function vanishes."""
        if self.is_zero:
            return None
        return self._xs[0], self._xs[-1]

    def __call__(self, x: Fraction | int | str) -> Fraction:
        return evaluate(self, x)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PiecewiseLinear):
            return NotImplemented
        return self._xs == other._xs and self._ys == other._ys

    def __hash__(self) -> int:
        return hash((self._xs, self._ys))

    def __add__(self, other: "PiecewiseLinear") -> "PiecewiseLinear":
        return combine([1, 1], [self, other])

    def __sub__(self, other: "PiecewiseLinear") -> "PiecewiseLinear":
        return combine([1, -1], [self, other])

    def __neg__(self) -> "PiecewiseLinear":
        return self._trusted(self._xs, tuple(-y for y in self._ys))

    def __rmul__(self, scalar: Fraction | int) -> "PiecewiseLinear":
        c = as_rational(scalar)
        if c == 0:
            return PiecewiseLinear.zero()
        return self._trusted(self._xs, tuple(c * y for y in self._ys))

    def __repr__(self) -> str:
        pairs = ", ".join(f"({x}, {y})" for x, y in zip(self._xs, self._ys))
        return f"PiecewiseLinear([{pairs}])"


def tent_psi0() -> PiecewiseLinear:
    """Tent of height one on [0, 2] with its peak at 1."""
    return PiecewiseLinear._trusted((Fraction(0), Fraction(1), Fraction(2)), (Fraction(0), Fraction(1), Fraction(0)))


def translate(f: PiecewiseLinear, t: Fraction | int | str) -> PiecewiseLinear:
    """Return x -> f(x - t)."""
    shift = as_rational(t)
    return PiecewiseLinear._trusted(tuple(x + shift for x in f.breakpoints), f.values)


def evaluate(f: PiecewiseLinear, x: Fraction | int | str) -> Fraction:
    x = as_rational(x)
    xs, ys = f.breakpoints, f.values
    if not xs or x <= xs[0] or x >= xs[-1]:
        return Fraction(0)

    i = bisect_right(xs, x)
    x0, x1 = xs[i - 1], xs[i]
    y0, y1 = ys[i - 1], ys[i]
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def combine(coefficients: Sequence, functions: Sequence[PiecewiseLinear]) -> PiecewiseLinear:
    """Exact finite linear combination over the union of breakpoints."""
    if len(coefficients) != len(functions):
        raise ValueError(f"{len(coefficients)} coefficients for {len(functions)} functions")

    terms = [(as_rational(c), f) for c, f in zip(coefficients, functions) if not f.is_zero]
    terms = [(c, f) for c, f in terms if c != 0]
    if not terms:
        return PiecewiseLinear.zero()

    grid = sorted({x for _, f in terms for x in f.breakpoints})
    values = [sum((c * evaluate(f, x) for c, f in terms), Fraction(0)) for x in grid]
    return PiecewiseLinear(grid, values)


def _common_mesh(f: PiecewiseLinear, g: PiecewiseLinear) -> list[Fraction]:
    lo = max(f.breakpoints[0], g.breakpoints[0])
    hi = min(f.breakpoints[-1], g.breakpoints[-1])
    if lo >= hi:
        return []
    return sorted({x for x in f.breakpoints + g.breakpoints if lo <= x <= hi})


def inner_product(f: PiecewiseLinear, g: PiecewiseLinear) -> Fraction:
    """Exact integral of f*g over the real line."""
    if f.is_zero or g.is_zero:
        return Fraction(0)
    mesh = _common_mesh(f, g)
    if not mesh:
        return Fraction(0)

    fv = [evaluate(f, x) for x in mesh]
    gv = [evaluate(g, x) for x in mesh]
    total = Fraction(0)
    for i in range(len(mesh) - 1):
        fa, fb, ga, gb = fv[i], fv[i + 1], gv[i], gv[i + 1]
        total += (mesh[i + 1] - mesh[i]) * (2 * fa * ga + fa * gb + fb * ga + 2 * fb * gb)
    return total / 6


def norm_squared(f: PiecewiseLinear) -> Fraction:
    return inner_product(f, f)


def first_moment(f: PiecewiseLinear, a: Fraction | int | str, b: Fraction | int | str) -> Fraction:
    """Exact integral of x*f(x) over [a, b]."""
    a, b = as_rational(a), as_rational(b)
    if a >= b:
        raise ValueError(f"empty moment interval [{a}, {b}]")

    mesh = sorted({a, b} | {x for x in f.breakpoints if a < x < b})
    fv = [evaluate(f, x) for x in mesh]
    total = Fraction(0)
    for i in range(len(mesh) - 1):
        p, q, fp, fq = mesh[i], mesh[i + 1], fv[i], fv[i + 1]
        total += (q - p) * (2 * p * fp + p * fq + q * fp + 2 * q * fq)
    return total / 6


def integral(f: PiecewiseLinear, a: Fraction | int | str, b: Fraction | int | str) -> Fraction:
    """Exact integral of f over [a, b]."""
    a, b = as_rational(a), as_rational(b)
    if a >= b:
        raise ValueError(f"empty integration interval [{a}, {b}]")

    mesh = sorted({a, b} | {x for x in f.breakpoints if a < x < b})
    fv = [evaluate(f, x) for x in mesh]
    return sum(((mesh[i + 1] - mesh[i]) * (fv[i] + fv[i + 1]) / 2 for i in range(len(mesh) - 1)), Fraction(0))


def support(f: PiecewiseLinear) -> list[Interval]:
    """Closed intervals on which f is not identically zero, merged and ordered."""
    xs, ys = f.breakpoints, f.values
    intervals: list[Interval] = []
    start = None
    for i in range(len(xs) - 1):
        nonzero = ys[i] != 0 or ys[i + 1] != 0
        if nonzero and start is None:
            start = xs[i]
        elif not nonzero and start is not None:
            intervals.append((start, xs[i]))
            start = None
    if start is not None:
        intervals.append((start, xs[-1]))
    return intervals


def breakpoint_denominators(f: PiecewiseLinear) -> set[int]:
    return {x.denominator for x in f.breakpoints}


def sample(f: PiecewiseLinear, x: np.ndarray) -> np.ndarray:
    """Float samples of f at the given points."""
    x = np.asarray(x, dtype=float)
    if f.is_zero:
        return np.zeros_like(x)
    xs = np.array([float(v) for v in f.breakpoints])
    ys = np.array([float(v) for v in f.values])
    return np.interp(x, xs, ys, left=0.0, right=0.0)


def simpson_inner_product(f: PiecewiseLinear, g: PiecewiseLinear) -> float:
    """
    Floating-point Simpson quadrature on the common breakpoint mesh.

    The integrand is quadratic on every mesh cell, so this agrees with
    inner_product up to rounding.
    """
    if f.is_zero or g.is_zero:
        return 0.0
    mesh = _common_mesh(f, g)
    if not mesh:
        return 0.0

    left = np.array([float(x) for x in mesh[:-1]])
    right = np.array([float(x) for x in mesh[1:]])
    middle = [(a + b) / 2 for a, b in zip(mesh, mesh[1:])]

    def values(h: PiecewiseLinear, points: Sequence[Fraction]) -> np.ndarray:
        return np.array([float(evaluate(h, x)) for x in points])

    fa, fb, fm = values(f, mesh[:-1]), values(f, mesh[1:]), values(f, middle)
    ga, gb, gm = values(g, mesh[:-1]), values(g, mesh[1:]), values(g, middle)
    return float(np.sum((right - left) / 6 * (fa * ga + 4 * fm * gm + fb * gb)))


def dumps(f: PiecewiseLinear) -> str:
    """Serialise to the line-oriented 'pwlin v1' text format."""
    lines = [FORMAT_HEADER, str(len(f.breakpoints))]
    lines += [f"{x.numerator}/{x.denominator} {y.numerator}/{y.denominator}" for x, y in zip(f.breakpoints, f.values)]
    return "\n".join(lines) + "\n"


def loads(text: str) -> PiecewiseLinear:
    lines = [line.strip() for line in text.strip().splitlines()]
    if not lines or lines[0] != FORMAT_HEADER:
        raise ValueError(f"missing '{FORMAT_HEADER}' header")
    try:
        count = int(lines[1])
    except (IndexError, ValueError) as e:
        raise ValueError("second line must hold the breakpoint count") from e
    rows = lines[2:]
    if len(rows) != count:
        raise ValueError(f"expected {count} breakpoint lines, found {len(rows)}")

    xs, ys = [], []
    for lineno, row in enumerate(rows, start=3):
        parts = row.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'x y', got '{row}'")
        xs.append(Fraction(parts[0]))
        ys.append(Fraction(parts[1]))
    return PiecewiseLinear(xs, ys)
