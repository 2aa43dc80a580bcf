"""Multi-bump nonlinearities, their validation, truncations, and primitives.

A nonlinearity f is kept as piecewise-linear nodes on [0, a_m], extended by
f(0) to the left of 0 and frozen at f(a_m) to the right.  Piecewise-linear
data makes every sign check and every integral in the hypothesis battery
exact, which matters because the acceptance conditions are strict
inequalities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exceptions import HypothesisViolation


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    index: Optional[int] = None

    def __str__(self):
        return f"[{self.code}] {self.message}"


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous piecewise-linear function with exact primitive.

    Outside [x[0], x[-1]] the function continues with the boundary values
    (constant extension), so the primitive continues linearly.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise ValueError("need matching 1-d node arrays with >= 2 nodes")
        if np.any(np.diff(x) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        seg = 0.5 * (y[:-1] + y[1:]) * np.diff(x)
        object.__setattr__(self, "_cum", np.concatenate(([0.0], np.cumsum(seg))))

    def __call__(self, s):
        return np.interp(np.asarray(s, dtype=float), self.x, self.y)

    def primitive(self, s):
        """Exact integral from x[0] to s (piecewise quadratic in s)."""
        s = np.asarray(s, dtype=float)
        j = np.clip(np.searchsorted(self.x, s, side="right") - 1, 0, self.x.size - 2)
        x0, x1 = self.x[j], self.x[j + 1]
        y0, y1 = self.y[j], self.y[j + 1]
        slope = (y1 - y0) / (x1 - x0)
        ds = np.clip(s, x0, x1) - x0
        val = self._cum[j] + y0 * ds + 0.5 * slope * ds * ds
        # constant extension outside the node range
        val = val + np.where(s < self.x[0], self.y[0] * (s - self.x[0]), 0.0)
        val = val + np.where(s > self.x[-1], self.y[-1] * (s - self.x[-1]), 0.0)
        return val if val.shape else float(val)

    def integrate(self, lo: float, hi: float) -> float:
        return float(self.primitive(hi) - self.primitive(lo))

    def with_breakpoints(self, pts: Sequence[float]) -> "PiecewiseLinear":
        """Refine the node set so every point in pts is a breakpoint."""
        pts = [p for p in pts if self.x[0] <= p <= self.x[-1]]
        x = np.union1d(self.x, np.asarray(pts, dtype=float))
        return PiecewiseLinear(x, self(x))


@dataclass(frozen=True)
class BumpNonlinearity:
    """Validated bump data: right endpoints a_1 < ... < a_m interleaved with
    the b_k, and the piecewise-linear f on [0, a_m]."""

    a: tuple
    b: tuple
    f: PiecewiseLinear

    @property
    def m(self) -> int:
        return len(self.a)

    def __call__(self, s):
        return self.f(s)

    def window_of(self, sup: float) -> int:
        """Index k with a_k < sup <= a_{k+1}; 0 if sup <= a_1."""
        return int(np.searchsorted(np.asarray(self.a), sup, side="left"))

    def window_integral(self, k: int, hi: float) -> float:
        """Exact integral of f from a_k to hi (1-based window index)."""
        return self.f.integrate(self.a[k - 1], hi)


@dataclass(frozen=True)
class TruncatedF:
    """f frozen to f(0) below 0 and cut to 0 above a_k (levels k = 2..m).

    The level indexing matches the bump numbering: level k caps the range at
    a_k, so minimizers live in the box [0, a_k].  Note the off-by-one between
    the two natural numberings: the solution produced by level k inhabits the
    window (a_{k-1}, a_k], i.e. solution index k - 1; reports use the
    solution/window index.
    """

    parent: BumpNonlinearity
    k: int

    def __post_init__(self):
        if not 2 <= self.k <= self.parent.m:
            raise ValueError(f"truncation level must be in 2..{self.parent.m}, got {self.k}")

    @property
    def cut(self) -> float:
        return self.parent.a[self.k - 1]

    @property
    def f_zero(self) -> float:
        return float(self.parent.f.y[0])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.where(s <= 0.0, self.f_zero, np.where(s > self.cut, 0.0, self.parent.f(s)))
        return out if out.shape else float(out)

    def primitive(self, s):
        """Exact antiderivative vanishing at 0, constant above the cut."""
        s = np.asarray(s, dtype=float)
        core = self.parent.f.primitive(np.clip(s, 0.0, self.cut))
        out = np.where(s <= 0.0, self.f_zero * s, core)
        return out if out.shape else float(out)

    def kernel_arrays(self):
        """(fx, fy, Fy, f0, cut, Fcut) trimmed to [0, cut] for the kernels."""
        f = self.parent.f.with_breakpoints([self.cut])
        keep = f.x <= self.cut + 0.0
        fx, fy = f.x[keep], f.y[keep]
        Fy = np.asarray(f.primitive(fx), dtype=float)
        return fx, fy, Fy, self.f_zero, float(self.cut), float(Fy[-1])


@dataclass(frozen=True)
class ConstantSource:
    """f identically equal to a constant below a cap, zero above.

    Shares the truncated-nonlinearity protocol, for source problems with a
    known closed form (no bump structure, the cap never activates).
    """

    value: float = 1.0
    cut: float = 1e6

    @property
    def f_zero(self) -> float:
        return self.value

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.where(s > self.cut, 0.0, self.value)
        return out if out.shape else float(out)

    def primitive(self, s):
        s = np.asarray(s, dtype=float)
        out = self.value * np.minimum(s, self.cut)
        return out if out.shape else float(out)

    def kernel_arrays(self):
        fx = np.array([0.0, self.cut])
        fy = np.array([self.value, self.value])
        Fy = np.array([0.0, self.value * self.cut])
        return fx, fy, Fy, self.value, self.cut, float(Fy[-1])


def hypothesis_report(a: Sequence[float], b: Sequence[float], f: PiecewiseLinear,
                      cheb_samples: int = 17) -> list:
    """Check the bump hypotheses exactly on piecewise-linear data.

    Ordering 0 < a_1 < b_1 < ... < b_{m-1} < a_m, f(0) >= 0, the sign pattern
    (<= 0 between a_k and b_k, >= 0 between b_k and a_{k+1}), and the strict
    positivity of each period integral.  Sign checks sample breakpoints plus
    Chebyshev points of every interval, which is exact for linear segments.
    """
    issues = []
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    m = len(a)
    if m < 2:
        issues.append(Violation("ordering", f"need at least 2 right endpoints, got {m}"))
        return issues
    if len(b) != m - 1:
        issues.append(Violation("ordering", f"need {m - 1} inner breakpoints, got {len(b)}"))
        return issues
    chain = [0.0]
    for ak, bk in zip(a[:-1], b):
        chain += [ak, bk]
    chain.append(a[-1])
    if any(x >= y for x, y in zip(chain[:-1], chain[1:])):
        issues.append(Violation("ordering", "breakpoints must satisfy 0 < a_1 < b_1 < ... < a_m"))
        return issues
    if f.x[0] != 0.0 or abs(f.x[-1] - a[-1]) > 1e-12 * max(1.0, a[-1]):
        issues.append(Violation("shape", "f must be given on [0, a_m]"))
        return issues
    if float(f(0.0)) < 0.0:
        issues.append(Violation("nonneg-origin", f"f(0) = {float(f(0.0))} must be >= 0"))

    def sample(lo, hi):
        th = np.cos(np.pi * (2 * np.arange(1, cheb_samples + 1) - 1) / (2 * cheb_samples))
        pts = 0.5 * (lo + hi) + 0.5 * (hi - lo) * th
        inner = f.x[(f.x > lo) & (f.x < hi)]
        return np.concatenate((pts, inner, [lo, hi]))

    tol = 0.0  # exact for piecewise-linear data
    for k in range(m - 1):
        neg = sample(a[k], b[k])
        if np.any(f(neg) > tol):
            issues.append(Violation(
                "sign", f"f must be <= 0 between a_{k + 1} and b_{k + 1}", index=k + 1))
        pos = sample(b[k], a[k + 1])
        if np.any(f(pos) < -tol):
            issues.append(Violation(
                "sign", f"f must be >= 0 between b_{k + 1} and a_{k + 2}", index=k + 1))
    for k in range(m - 1):
        period = f.integrate(a[k], a[k + 1])
        if not period > 0.0:
            issues.append(Violation(
                "net-area",
                f"integral of f over [a_{k + 1}, a_{k + 2}] is {period}, must be > 0",
                index=k + 1))
    return issues


def validate(a: Sequence[float], b: Sequence[float], f: PiecewiseLinear) -> BumpNonlinearity:
    """Return the validated bump family or raise with all violated hypotheses."""
    issues = hypothesis_report(a, b, f)
    if issues:
        raise HypothesisViolation(issues)
    f = f.with_breakpoints(list(a) + list(b))
    return BumpNonlinearity(a=tuple(float(x) for x in a), b=tuple(float(x) for x in b), f=f)


def truncate(bn: BumpNonlinearity, k: int) -> TruncatedF:
    """Truncation at level k in 2..m (caps the range at a_k)."""
    return TruncatedF(parent=bn, k=int(k))


def primitive(tf: TruncatedF, s: float) -> float:
    """Antiderivative of the truncated nonlinearity, anchored at 0."""
    if not np.isfinite(s):
        raise ValueError("s must be finite")
    return float(tf.primitive(float(s)))


def default_bump_builder(a: Sequence[float], b: Sequence[float],
                         amplitudes: Optional[Sequence[float]] = None) -> BumpNonlinearity:
    """Piecewise-linear tent family vanishing at every a_k and b_k.

    Lobes alternate sign starting positive on (0, a_1); amplitudes are the
    peak magnitudes per lobe, 2m-1 of them in order.  Defaults make each
    positive lobe twice the area of its negative neighbors, so every period
    integral is positive.
    """
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    m = len(a)
    edges = [0.0]
    for ak, bk in zip(a[:-1], b):
        edges += [ak, bk]
    edges.append(a[-1])
    n_lobes = 2 * m - 1
    if m < 2 or len(b) != m - 1 or any(x >= y for x, y in zip(edges[:-1], edges[1:])):
        raise HypothesisViolation([Violation(
            "ordering",
            f"breakpoints must satisfy 0 < a_1 < b_1 < ... < a_m with {max(m - 1, 0)} inner "
            f"breakpoints; got a={a}, b={b}")])
    if amplitudes is None:
        amplitudes = [2.0 if i % 2 == 0 else 1.0 for i in range(n_lobes)]
    amplitudes = [float(x) for x in amplitudes]
    if len(amplitudes) != n_lobes:
        raise ValueError(f"need {n_lobes} lobe amplitudes, got {len(amplitudes)}")
    xs, ys = [edges[0]], [0.0]
    for i in range(n_lobes):
        lo, hi = edges[i], edges[i + 1]
        peak = amplitudes[i] if i % 2 == 0 else -amplitudes[i]
        xs += [0.5 * (lo + hi), hi]
        ys += [peak, 0.0]
    return validate(a, b, PiecewiseLinear(np.asarray(xs), np.asarray(ys)))
