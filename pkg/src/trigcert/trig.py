"""Sparse trigonometric polynomials, FFT grids and classical kernels."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import FrequencyRangeError, ParameterError, ResourceError
from .orlicz import INT64_MAX, CoeffSeq

MAX_GRID = 2 ** 25


class TrigPoly(CoeffSeq):
    """A CoeffSeq read as the polynomial sum c_n zeta^n."""

    @property
    def degree(self):
        if self.freqs.size == 0:
            return 0
        return int(max(abs(int(self.freqs[0])), abs(int(self.freqs[-1]))))

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, other.scaled(-1.0))

    def __mul__(self, other):
        return multiply(self, other)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples at the points exp(2 pi i k / G), k = 0..G-1."""

    values: np.ndarray
    grid_size: int

    def __post_init__(self):
        g = int(self.grid_size)
        if g < 1 or g & (g - 1):
            raise ParameterError("grid size must be a power of two", grid_size=g)
        if np.shape(self.values) != (g,):
            raise ParameterError("values must have length grid_size")

    @property
    def theta(self):
        return 2.0 * np.pi * np.arange(self.grid_size) / self.grid_size

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["k", "theta", "re", "im"])
            th = self.theta
            for k in range(self.grid_size):
                v = self.values[k]
                wr.writerow([k, repr(float(th[k])), repr(float(v.real)), repr(float(v.imag))])


def as_trig(c):
    if isinstance(c, TrigPoly):
        return c
    return TrigPoly(c.freqs, c.values, c.hermitian)


def from_dict(mapping, hermitian=None):
    return TrigPoly.from_dict(mapping, hermitian=hermitian)


def write_coeff_csv(c, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["frequency", "re", "im"])
        for n, v in zip(c.freqs, c.values):
            wr.writerow([int(n), repr(float(v.real)), repr(float(v.imag))])


def read_coeff_csv(path, hermitian=None):
    freqs, vals = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            freqs.append(int(row["frequency"]))
            vals.append(complex(float(row["re"]), float(row["im"])))
    return TrigPoly.from_arrays(freqs, vals, hermitian=hermitian)


# ---------------------------------------------------------------------------
# Grid evaluation


def grid_size_for(degree, oversample=2):
    need = int(oversample) * (2 * int(degree) + 1)
    return 1 << max(0, (need - 1).bit_length())


def evaluate(p, oversample=2, grid_size=None, max_grid=MAX_GRID):
    """Values of p on the smallest power-of-two grid with at least
    oversample*(2*degree+1) points (or on ``grid_size`` if given)."""
    if oversample < 2 and grid_size is None:
        raise ParameterError("oversample must be at least 2", oversample=oversample)
    g = grid_size if grid_size is not None else grid_size_for(p.degree, oversample)
    if g > max_grid:
        raise ResourceError("evaluation grid exceeds memory budget", required=g, budget=max_grid)
    if g <= 2 * p.degree:
        raise ParameterError("grid too small to resolve the polynomial", grid_size=g,
                             degree=p.degree)
    spectrum = np.zeros(g, dtype=np.complex128)
    np.add.at(spectrum, np.mod(p.freqs, g), p.values)
    return GridFunction(np.fft.ifft(spectrum) * g, g)


def evaluate_at(p, theta, chunk=4096):
    """Direct evaluation at arbitrary angles; O(len(p) * len(theta))."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.zeros(theta.size, dtype=np.complex128)
    f = p.freqs.astype(float)
    for s in range(0, theta.size, chunk):
        ph = np.exp(1j * np.outer(theta[s:s + chunk], f))
        out[s:s + chunk] = ph @ p.values
    return out


def grid_coefficients(gf, window, hermitian=None, drop_below=0.0):
    """Fourier coefficients |n| <= window of grid samples, as a TrigPoly."""
    g = gf.grid_size
    if 2 * window >= g:
        raise ParameterError("window must be below half the grid size", window=window, grid=g)
    c = np.fft.fft(gf.values) / g
    n = np.arange(-window, window + 1)
    return TrigPoly.from_arrays(n, c[np.mod(n, g)], hermitian=hermitian, drop_below=drop_below)


def sup_bounds(p, oversample=8, grid_size=None, max_grid=MAX_GRID):
    """(lower, upper) bounds for sup |p| on the circle.

    lower is the grid maximum.  upper is the smaller of the coefficient l1
    sum and, when G > 2*pi*degree, the Bernstein inflation
    lower / (1 - pi*degree/G): every angle lies within pi/G of a grid node
    and |p'| <= degree*sup|p|.
    """
    if len(p) == 0:
        return 0.0, 0.0
    gf = evaluate(p, oversample=oversample, grid_size=grid_size, max_grid=max_grid)
    lower = float(np.max(np.abs(gf.values)))
    upper = p.l1()
    d, g = p.degree, gf.grid_size
    if g > 2 * math.pi * d:
        upper = min(upper, lower / (1.0 - math.pi * d / g))
    return lower, max(lower, upper)


def l1_on_grid(p, grid_size):
    gf = evaluate(p, grid_size=grid_size)
    return float(np.mean(np.abs(gf.values)))


def l2_on_grid(p, grid_size=None, oversample=2):
    gf = evaluate(p, oversample=oversample, grid_size=grid_size)
    return math.sqrt(float(np.mean(np.abs(gf.values) ** 2)))


# ---------------------------------------------------------------------------
# Algebra


def _checked_freqs(values):
    if values.size and (values.max() > INT64_MAX or values.min() < -INT64_MAX):
        raise FrequencyRangeError("frequency leaves the signed 64-bit range")


def add(p, q):
    return TrigPoly.from_arrays(np.concatenate([p.freqs, q.freqs]),
                                np.concatenate([p.values, q.values]),
                                hermitian=None)


def modulate(p, shift):
    """zeta^shift * p."""
    shift = int(shift)
    if len(p) and (int(p.freqs[-1]) + shift > INT64_MAX or int(p.freqs[0]) + shift < -INT64_MAX):
        raise FrequencyRangeError("modulation leaves the signed 64-bit range", shift=shift)
    return TrigPoly(p.freqs + np.int64(shift), p.values.copy(), p.hermitian and shift == 0)


def multiply(p, q, chunk=2 ** 22):
    """Exact sparse convolution of coefficient maps."""
    if len(p) == 0 or len(q) == 0:
        return TrigPoly.empty()
    _checked_freqs(np.array([int(p.freqs[-1]) + int(q.freqs[-1]),
                             int(p.freqs[0]) + int(q.freqs[0])], dtype=object))
    if len(p) < len(q):
        p, q = q, p
    rows = max(1, chunk // len(p))
    fs, vs = [], []
    for s in range(0, len(q), rows):
        qf, qv = q.freqs[s:s + rows], q.values[s:s + rows]
        fs.append((qf[:, None] + p.freqs[None, :]).ravel())
        vs.append((qv[:, None] * p.values[None, :]).ravel())
    herm = p.hermitian and q.hermitian
    return TrigPoly.from_arrays(np.concatenate(fs), np.concatenate(vs),
                                hermitian=True if herm else None)


# ---------------------------------------------------------------------------
# Kernels


def fejer(J):
    """F_J with coefficients 1 - |n|/(J+1) for |n| <= J."""
    J = int(J)
    if J < 0:
        raise ParameterError("Fejer order must be nonnegative", J=J)
    n = np.arange(-J, J + 1)
    return TrigPoly(n, 1.0 - np.abs(n) / (J + 1.0) + 0j, True)


def vallee_poussin(N):
    """2F_{2N-1} - F_{N-1}: flat on |n| <= N, linear taper to 0 at |n| = 2N."""
    N = int(N)
    if N < 1:
        raise ParameterError("order must be positive", N=N)
    n = np.arange(-(2 * N - 1), 2 * N)
    a = np.abs(n)
    v = np.where(a <= N, 1.0, (2 * N - a) / N)
    return TrigPoly(n, v + 0j, True)


def bandpass_value(n, M, N):
    """Exact trapezoid coefficient as a float (see ``bandpass``)."""
    a = abs(int(n))
    if a <= M or a >= 2 * N:
        return 0.0
    if a <= 2 * M:
        return (a - M) / M
    if a <= N:
        return 1.0
    return (2 * N - a) / N


def bandpass(M, N):
    """Difference of de la Vallee Poussin kernels V_N - V_M.

    Coefficients: 0 for |n| <= M, (|n|-M)/M on [M, 2M], 1 on [2M, N],
    (2N-|n|)/N on [N, 2N], 0 beyond.  L1 norm at most 6.
    """
    M, N = int(M), int(N)
    if not 0 < M < N:
        raise ParameterError("need 0 < M < N", M=M, N=N)
    if 2 * M > N:
        raise ParameterError("flat band [2M, N] is empty", M=M, N=N)
    if 2 * N > INT64_MAX:
        raise FrequencyRangeError("bandpass support exceeds 64-bit range", N=N)
    pos = np.arange(M + 1, 2 * N, dtype=np.int64)
    a = pos.astype(float)
    v = np.where(a <= 2 * M, (a - M) / M, np.where(a <= N, 1.0, (2 * N - a) / N))
    f = np.concatenate([-pos[::-1], pos])
    vals = np.concatenate([v[::-1], v]) + 0j
    return TrigPoly(f, vals, True)


def bandpass_multiplier(freqs, M, N):
    """Vectorized bandpass coefficients at the given frequencies."""
    a = np.abs(np.asarray(freqs)).astype(float)
    return np.where(a <= M, 0.0,
                    np.where(a <= 2 * M, (a - M) / M,
                             np.where(a <= N, 1.0, np.where(a < 2 * N, (2 * N - a) / N, 0.0))))


# ---------------------------------------------------------------------------
# Rudin-Shapiro


def rudin_shapiro_signs(n):
    p = np.ones(1, dtype=np.int8)
    q = np.ones(1, dtype=np.int8)
    for _ in range(int(n)):
        p, q = np.concatenate([p, q]), np.concatenate([p, -q])
    return p, q


def rudin_shapiro(n):
    """(P_n, Q_n): P_{k+1} = P_k + zeta^(2^k) Q_k, Q_{k+1} = P_k - zeta^(2^k) Q_k."""
    n = int(n)
    if n < 0:
        raise ParameterError("order must be nonnegative", n=n)
    if n > 40:
        raise ResourceError("Rudin-Shapiro order too large to store", n=n)
    p, q = rudin_shapiro_signs(n)
    f = np.arange(1 << n, dtype=np.int64)
    return TrigPoly(f, p.astype(float) + 0j, n == 0), TrigPoly(f, q.astype(float) + 0j, n == 0)


def classical_order(eps):
    """Least n >= 1 with 2^(-(n+1)/2) <= eps."""
    if not eps > 0:
        raise ParameterError("eps must be positive", eps=eps)
    n = max(1, math.ceil(2.0 * math.log2(1.0 / eps) - 1.0) - 1)
    while 2.0 ** (-(n + 1) / 2.0) > eps:
        n += 1
    while n > 1 and 2.0 ** (-n / 2.0) <= eps:
        n -= 1
    return n


def classical_poly(eps, max_order=26):
    """2^(-(n+1)/2) P_n: sup <= 1, L2 norm 2^(-1/2), coefficient height <= eps."""
    n = classical_order(eps)
    if n > max_order:
        raise ResourceError("flat polynomial needs too many coefficients",
                            order=n, coefficients=2 ** n, eps=eps, max_order=max_order)
    p, _ = rudin_shapiro(n)
    return p.scaled(2.0 ** (-(n + 1) / 2.0))
