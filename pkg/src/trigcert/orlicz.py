"""Young functions, weights, coefficient sequences and the norms built on them.

Gauges and weights are plain vectorized callables wrapped in small frozen
dataclasses.  Every check here samples on a grid and reports what it sees;
nothing is proved symbolically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from .errors import FrequencyRangeError, GaugeDomainError, ParameterError

INT64_MAX = int(np.iinfo(np.int64).max)


# ---------------------------------------------------------------------------
# Coefficient sequences


@dataclass(frozen=True, eq=False)
class CoeffSeq:
    """Sparse map from integer frequency to complex amplitude.

    ``freqs`` is strictly increasing int64, ``values`` is complex128 with no
    exact zeros.  When ``hermitian`` is set the map satisfies
    ``c[-n] == conj(c[n])`` bit for bit.
    """

    freqs: np.ndarray
    values: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=np.int64)
        v = np.asarray(self.values, dtype=np.complex128)
        if f.ndim != 1 or f.shape != v.shape:
            raise ParameterError("freqs and values must be 1-d arrays of equal length")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise ParameterError("freqs must be strictly increasing")
        if np.any(v == 0):
            raise ParameterError("stored coefficients must be nonzero")
        f.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "values", v)
        if self.hermitian and not _is_hermitian(f, v):
            raise ParameterError("hermitian flag set but conjugate symmetry fails")

    @classmethod
    def from_arrays(cls, freqs, values, hermitian=None, drop_below=0.0):
        """Build from unsorted, possibly repeated frequencies.

        Repeated frequencies are summed.  Entries with modulus at most
        ``drop_below`` are discarded.  ``hermitian=True`` symmetrizes the
        values (averaging c[n] with conj c[-n]); ``None`` detects the flag.
        """
        freqs = _as_int64_freqs(freqs)
        values = np.asarray(values, dtype=np.complex128).ravel()
        if freqs.shape != values.shape:
            raise ParameterError("freqs and values must have equal length")
        if freqs.size:
            uniq, inv = np.unique(freqs, return_inverse=True)
            acc = np.zeros(uniq.size, dtype=np.complex128)
            np.add.at(acc, inv, values)
        else:
            uniq, acc = freqs, values
        if hermitian:
            uniq, acc = _symmetrize(uniq, acc)
        keep = np.abs(acc) > drop_below
        uniq, acc = uniq[keep], acc[keep]
        if hermitian is None:
            hermitian = _is_hermitian(uniq, acc)
        return cls(uniq, acc, bool(hermitian))

    @classmethod
    def from_dict(cls, mapping, hermitian=None):
        items = sorted(mapping.items())
        return cls.from_arrays([k for k, _ in items], [v for _, v in items], hermitian=hermitian)

    @classmethod
    def empty(cls):
        return cls(np.zeros(0, np.int64), np.zeros(0, np.complex128), True)

    def to_dict(self):
        return {int(n): complex(v) for n, v in zip(self.freqs, self.values)}

    def __len__(self):
        return int(self.freqs.size)

    def get(self, n, default=0.0):
        i = np.searchsorted(self.freqs, n)
        if i < self.freqs.size and self.freqs[i] == n:
            return complex(self.values[i])
        return default

    def get_many(self, n):
        """Coefficients at an array of frequencies, 0 where absent."""
        n = np.asarray(n, dtype=np.int64)
        out = np.zeros(n.shape, dtype=np.complex128)
        if self.freqs.size:
            pos = np.minimum(np.searchsorted(self.freqs, n), self.freqs.size - 1)
            hit = self.freqs[pos] == n
            out[hit] = self.values[pos[hit]]
        return out

    @property
    def amplitudes(self):
        return np.abs(self.values)

    def l1(self):
        return math.fsum(self.amplitudes)

    def l2_squared(self):
        return math.fsum(self.amplitudes ** 2)

    def support(self):
        return frozenset(int(n) for n in self.freqs)

    def scaled(self, factor):
        if factor == 0:
            return type(self).empty()
        return type(self)(self.freqs.copy(), self.values * factor,
                          self.hermitian and np.isreal(factor))

    def window(self, lo, hi):
        """Entries with lo <= |n| <= hi."""
        a = np.abs(self.freqs)
        keep = (a >= lo) & (a <= hi)
        return type(self)(self.freqs[keep], self.values[keep], self.hermitian)


def _as_int64_freqs(freqs):
    if isinstance(freqs, np.ndarray) and freqs.dtype == np.int64:
        return freqs.ravel()
    raw = list(freqs) if not isinstance(freqs, np.ndarray) else freqs.ravel().tolist()
    for n in raw:
        if int(n) != n:
            raise ParameterError("frequencies must be integers", value=n)
        if abs(int(n)) > INT64_MAX:
            raise FrequencyRangeError("frequency exceeds signed 64-bit range", value=str(n))
    return np.asarray([int(n) for n in raw], dtype=np.int64)


def _is_hermitian(freqs, values):
    if freqs.size == 0:
        return True
    if not np.array_equal(freqs, -freqs[::-1]):
        return False
    return bool(np.array_equal(values, np.conj(values[::-1])))


def _symmetrize(freqs, values):
    allf = np.union1d(freqs, -freqs)
    acc = np.zeros(allf.size, dtype=np.complex128)
    acc[np.searchsorted(allf, freqs)] = values
    sym = 0.5 * (acc + np.conj(acc[::-1]))
    zero = allf == 0
    sym[zero] = sym[zero].real
    return allf, sym


# ---------------------------------------------------------------------------
# Gauges


@dataclass(frozen=True)
class YoungFunction:
    eval: Callable
    name: str
    domain_cap: float = math.inf

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(self.eval(t), dtype=float)


def power_gauge(p):
    p = float(p)
    if p < 1:
        raise ParameterError("power gauge needs p >= 1 for convexity", p=p)
    return YoungFunction(lambda t: np.power(t, p), f"power:{_fmt(p)}")


def power_log_gauge(p, q):
    """t**p * log(e + 1/t)**(-q), extended by 0 at t = 0."""
    p, q = float(p), float(q)

    def ev(t):
        out = np.zeros_like(t)
        pos = t > 0
        tp = t[pos]
        out[pos] = np.power(tp, p) * np.power(np.log(math.e + 1.0 / tp), -q)
        return out

    return YoungFunction(ev, f"power-log:{_fmt(p)},{_fmt(q)}")


def scaled_gauge(phi, factor):
    return YoungFunction(lambda t: factor * phi(t), f"{_fmt(factor)}*{phi.name}", phi.domain_cap)


def gauge(key):
    """Look up a registry key such as ``power:1.5`` or ``power-log:2,-1``."""
    kind, _, arg = key.partition(":")
    try:
        if kind == "power":
            return power_gauge(float(arg))
        if kind == "power-log":
            p, q = (float(s) for s in arg.split(","))
            return power_log_gauge(p, q)
    except ValueError as exc:
        raise ParameterError(f"bad gauge key {key!r}", reason=str(exc)) from None
    raise ParameterError(f"unknown gauge key {key!r}", known=["power:p", "power-log:p,q"])


# ---------------------------------------------------------------------------
# Weights


@dataclass(frozen=True)
class WeightSequence:
    eval: Callable
    monotone_flag: bool
    name: str

    def __call__(self, n):
        n = np.asarray(n, dtype=float)
        return np.asarray(self.eval(n), dtype=float)

    def at_frequencies(self, freqs):
        """w_{|n|} with the zero frequency weighted like n = 1."""
        a = np.abs(np.asarray(freqs, dtype=float))
        return self(np.maximum(a, 1.0))


def power_weight(alpha):
    alpha = float(alpha)
    return WeightSequence(lambda n: np.power(n, -alpha), alpha >= 0, f"power:{_fmt(alpha)}")


def log_weight(beta):
    beta = float(beta)
    return WeightSequence(lambda n: np.power(np.log(n + 2.0), -beta), beta >= 0, f"log:{_fmt(beta)}")


def const_weight(c):
    c = float(c)
    if c <= 0:
        raise ParameterError("constant weight must be positive", c=c)
    return WeightSequence(lambda n: np.full_like(n, c), True, f"const:{_fmt(c)}")


def min_weight(w1, w2):
    return WeightSequence(lambda n: np.minimum(w1(n), w2(n)),
                          w1.monotone_flag and w2.monotone_flag, f"min({w1.name},{w2.name})")


def weight(key):
    """Look up ``power:alpha``, ``log:beta`` or ``const:c``."""
    kind, _, arg = key.partition(":")
    makers = {"power": power_weight, "log": log_weight, "const": const_weight}
    if kind not in makers:
        raise ParameterError(f"unknown weight key {key!r}", known=["power:a", "log:b", "const:c"])
    try:
        return makers[kind](float(arg))
    except ValueError as exc:
        raise ParameterError(f"bad weight key {key!r}", reason=str(exc)) from None


def _fmt(x):
    return repr(float(x)).rstrip("0").rstrip(".") if float(x) != int(x) else str(int(x))


# ---------------------------------------------------------------------------
# Sums and norms


def _amps(c):
    if isinstance(c, CoeffSeq):
        return c.amplitudes
    return np.abs(np.asarray(c)).ravel()


def phi_sum(phi, c):
    """Sum of phi(|c_n|) over the stored entries (a CoeffSeq or an array)."""
    amps = _amps(c)
    if amps.size == 0:
        return 0.0
    if np.any(amps > phi.domain_cap):
        raise GaugeDomainError("amplitude above gauge domain cap",
                               cap=phi.domain_cap, max_amplitude=float(amps.max()))
    vals = phi(amps)
    if not np.all(np.isfinite(vals)):
        raise GaugeDomainError("gauge returned non-finite values", gauge=phi.name)
    return math.fsum(vals)


def weighted_l1(w, c):
    if len(c) == 0:
        return 0.0
    return math.fsum(c.amplitudes * w.at_frequencies(c.freqs))


def _modular(phi, amps, m):
    x = amps / m
    if np.any(x > phi.domain_cap):
        return math.inf
    vals = phi(x)
    if not np.all(np.isfinite(vals)):
        raise GaugeDomainError("gauge returned non-finite values during bracketing",
                               gauge=phi.name, scale=m)
    return math.fsum(vals)


def luxemburg_norm(phi, c, tol=1e-10):
    """inf{M > 0 : sum phi(|c_n|/M) <= 1}, bisected to relative width ``tol``."""
    if tol <= 0:
        raise ParameterError("tol must be positive", tol=tol)
    amps = _amps(c)
    if amps.size == 0 or amps.max() == 0:
        return 0.0
    hi = float(amps.sum())
    for _ in range(2000):
        if _modular(phi, amps, hi) <= 1.0:
            break
        hi *= 2.0
    else:
        raise GaugeDomainError("could not bracket the norm from above", gauge=phi.name)
    lo = hi
    for _ in range(2000):
        lo *= 0.5
        if _modular(phi, amps, lo) > 1.0:
            break
    else:
        raise GaugeDomainError("could not bracket the norm from below", gauge=phi.name)

    # work in log scale so the relative width is what shrinks
    def g(s):
        return _modular(phi, amps, math.exp(s)) - 1.0

    a, b = math.log(lo), math.log(hi)
    # exp(log(x)) can round to either side of x; restore the bracket signs
    while g(b) > 0.0:
        b = math.nextafter(b, math.inf)
    while g(a) <= 0.0:
        a = math.nextafter(a, -math.inf)
    s = optimize.bisect(g, a, b, xtol=tol / 4, rtol=4 * np.finfo(float).eps, maxiter=400)
    return math.exp(s)


# ---------------------------------------------------------------------------
# Legendre transform


@dataclass(frozen=True)
class LegendreResult:
    value: float
    argmax: float
    at_boundary: bool

    def __float__(self):
        return float(self.value)


_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def legendre_many(phi, x, search_cap, grid_points=2049, iterations=90):
    """Vectorized sup_{0<=y<=cap} (x*y - phi(y)) for an array of x.

    A uniform grid locates the best cell, then golden-section iterations
    refine inside the two neighbouring cells (the objective is concave for
    convex phi, so that bracket contains the maximizer).
    Returns (values, argmax, at_boundary) arrays.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise ParameterError("legendre transform evaluated at negative x")
    cap = float(search_cap)
    y = np.linspace(0.0, cap, grid_points)
    py = phi(y)
    values = np.empty_like(x)
    argmax = np.empty_like(x)
    edge = np.empty(x.shape, dtype=bool)
    chunk = max(1, 2 ** 22 // grid_points)
    for s in range(0, x.size, chunk):
        xs = x[s:s + chunk]
        obj = xs[:, None] * y[None, :] - py[None, :]
        i = np.argmax(obj, axis=1)
        a = y[np.maximum(i - 1, 0)]
        b = y[np.minimum(i + 1, grid_points - 1)]

        def f(t):
            return xs * t - phi(t)

        for _ in range(iterations):
            c = b - _INV_GOLDEN * (b - a)
            d = a + _INV_GOLDEN * (b - a)
            left = f(c) >= f(d)
            b = np.where(left, d, b)
            a = np.where(left, a, c)
        ym = 0.5 * (a + b)
        fm = f(ym)
        best_grid = obj[np.arange(xs.size), i]
        use_grid = best_grid > fm
        values[s:s + chunk] = np.where(use_grid, best_grid, fm)
        argmax[s:s + chunk] = np.where(use_grid, y[i], ym)
        edge[s:s + chunk] = (i == grid_points - 1) | (argmax[s:s + chunk] >= cap * (1 - 1e-9))
    return np.maximum(values, 0.0), argmax, edge


def legendre(phi, x, search_cap):
    if x < 0:
        raise ParameterError("legendre transform evaluated at negative x", x=x)
    if x == 0:
        return LegendreResult(0.0, 0.0, False)
    v, a, e = legendre_many(phi, [x], search_cap)
    return LegendreResult(float(v[0]), float(a[0]), bool(e[0]))


def conjugate(phi, search_cap=1e3):
    """The complementary gauge phi* evaluated numerically.

    Points whose maximizer sits on the search cap are reported as +inf, so a
    truncated search never understates phi*.
    """
    def ev(t):
        flat = np.atleast_1d(t).ravel()
        v, _, edge = legendre_many(phi, flat, search_cap)
        v = np.where(edge, np.inf, v)
        return v.reshape(np.shape(t))

    return YoungFunction(ev, f"conj({phi.name})")


# ---------------------------------------------------------------------------
# Hypothesis reports


@dataclass(frozen=True)
class GaugeReport:
    name: str
    grid_min: float
    grid_max: float
    grid_size: int
    monotone_violations: int
    convexity_violations: int
    delta2_ratio: float
    phi_over_t_trend: str
    phi_over_t2_trend: str
    log_derivative_min: float
    log_derivative_small_t: float

    @property
    def is_young(self):
        return self.monotone_violations == 0 and self.convexity_violations == 0 and math.isfinite(
            self.delta2_ratio)

    def to_dict(self):
        return dict(self.__dict__)


def _trend(q, rtol=1e-9):
    """Direction of q as t decreases to 0 (q sampled on increasing t)."""
    d = np.diff(q)
    scale = rtol * np.maximum(np.abs(q[1:]), np.abs(q[:-1]))
    if np.all(np.abs(d) <= scale):
        return "constant"
    if np.all(d >= -scale):
        return "decreasing"
    if np.all(d <= scale):
        return "increasing"
    return "neither"


def check_young(phi, t_min=1e-6, t_max=None, num=400, rtol=1e-9):
    """Sampled Young-function diagnostics on a logarithmic grid.

    Trend labels describe Phi(t)/t and Phi(t)/t^2 as t decreases to 0, so
    t**1.5 reports Phi(t)/t "decreasing" and Phi(t)/t^2 "increasing".
    """
    if t_max is None:
        t_max = min(1.0, phi.domain_cap)
    t_max = min(t_max, phi.domain_cap)
    if not 0 < t_min < t_max:
        raise ParameterError("need 0 < t_min < t_max", t_min=t_min, t_max=t_max)
    t = np.geomspace(t_min, t_max, num)
    v = phi(t)
    if not np.all(np.isfinite(v)):
        raise GaugeDomainError("gauge returned non-finite values on the grid", gauge=phi.name)
    mono = int(np.sum(np.diff(v) < -rtol * np.abs(v[1:])))
    slopes = np.diff(v) / np.diff(t)
    sl_scale = rtol * np.maximum(np.abs(slopes[1:]), np.abs(slopes[:-1])) + 1e-300
    convex = int(np.sum(np.diff(slopes) < -sl_scale))
    half = phi(t / 2)
    ok = half > 0
    delta2 = float(np.max(v[ok] / half[ok])) if np.any(ok) else math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        logd = np.gradient(np.log(v), np.log(t))
    finite = np.isfinite(logd)
    return GaugeReport(
        name=phi.name, grid_min=float(t_min), grid_max=float(t_max), grid_size=int(num),
        monotone_violations=mono, convexity_violations=convex, delta2_ratio=delta2,
        phi_over_t_trend=_trend(v / t), phi_over_t2_trend=_trend(v / t ** 2),
        log_derivative_min=float(np.min(logd[finite])) if finite.any() else math.nan,
        log_derivative_small_t=float(logd[0]) if finite[0] else math.nan,
    )


@dataclass(frozen=True)
class WeightReport:
    name: str
    n_max: int
    monotone: bool
    doubling_constant: float
    checkpoints: list
    sum_w2: list
    sum_w: list
    divergence_trend: float
    increment_ratio: float
    sum_w2_verdict: str

    def to_dict(self):
        return dict(self.__dict__)


def _range_extrema(v):
    """Sparse tables for O(1) range min/max queries."""
    mins, maxs = [v], [v]
    k = 1
    while 2 * k <= v.size:
        mins.append(np.minimum(mins[-1][:-k], mins[-1][k:]))
        maxs.append(np.maximum(maxs[-1][:-k], maxs[-1][k:]))
        k *= 2
    return mins, maxs


def check_weight(w, n_max):
    """Monotonicity, doubling constant and dyadic partial sums of w up to n_max.

    ``divergence_trend`` is the ratio of the partial sum of w^2 at the last
    dyadic checkpoint to the one at half that index.  ``sum_w2_verdict``
    compares the last dyadic increment of sum w^2 with the increment halfway
    along the dyadic list: increments that have shrunk below half read as a
    convergent series.
    """
    n_max = int(n_max)
    if n_max < 4:
        raise ParameterError("n_max must be at least 4", n_max=n_max)
    n = np.arange(1, n_max + 1, dtype=float)
    v = w(n)
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise ParameterError("weights must be finite and positive", weight=w.name)
    monotone = bool(np.all(np.diff(v) <= 1e-15 * v[:-1]))

    mins, maxs = _range_extrema(v)
    lo = np.arange(n_max)
    hi = np.minimum(2 * lo + 1, n_max - 1)  # 0-based window for [n, 2n]
    length = hi - lo + 1
    level = np.floor(np.log2(length)).astype(int)
    span = 1 << level
    wmax = np.empty(n_max)
    wmin = np.empty(n_max)
    for lev in np.unique(level):
        m = level == lev
        a, b = lo[m], hi[m] - span[m] + 1
        wmax[m] = np.maximum(maxs[lev][a], maxs[lev][b])
        wmin[m] = np.minimum(mins[lev][a], mins[lev][b])
    doubling = float(max(np.max(wmax / v), np.max(v / wmin)))

    cps = [1 << j for j in range(n_max.bit_length()) if (1 << j) <= n_max]
    c2 = np.cumsum(v ** 2)
    c1 = np.cumsum(v)
    s2 = [float(c2[k - 1]) for k in cps]
    s1 = [float(c1[k - 1]) for k in cps]
    trend = s2[-1] / s2[-2]
    incs = np.diff([0.0] + s2)
    mid = len(incs) // 2
    inc_ratio = float(incs[-1] / incs[mid]) if incs[mid] > 0 else math.inf
    return WeightReport(
        name=w.name, n_max=n_max, monotone=monotone, doubling_constant=doubling,
        checkpoints=cps, sum_w2=s2, sum_w=s1, divergence_trend=float(trend),
        increment_ratio=inc_ratio,
        sum_w2_verdict="divergent" if inc_ratio >= 0.5 else "convergent",
    )
