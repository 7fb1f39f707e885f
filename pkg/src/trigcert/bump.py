"""Smooth bumps on the circle and the localizers built from them.

Angles are measured in turns: t in [-1/2, 1/2) stands for exp(2 pi i t).
An arc of length L centred at c is [c - L/2, c + L/2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .certificate import Certificate, at_least, at_most, holds
from .errors import ParameterError, ResourceError, SearchFailure
from .orlicz import check_young, luxemburg_norm, phi_sum
from .trig import MAX_GRID, GridFunction, TrigPoly, evaluate, grid_coefficients

PLATEAU = 0.25
SUPPORT = 1.0
# L1 norm of the second derivative of the base bump, in turn units.  The
# step's derivative is unimodal with peak 2, so on each side the total
# variation of phi' is twice its peak 2 * 8/3.
BUMP_D2_L1 = 64.0 / 3.0
ZERO_TOL = 1e-8
MAX_HALVINGS = 60


def _e(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x > 0
    with np.errstate(over="ignore"):  # subnormal x: 1/x overflows and exp(-inf) = 0
        out[m] = np.exp(-1.0 / x[m])
    return out


def smooth_step(x):
    """0 for x <= 0, 1 for x >= 1, C-infinity in between."""
    a, b = _e(x), _e(1.0 - np.asarray(x, dtype=float))
    return a / (a + b)


@dataclass(frozen=True)
class SmoothBump:
    """phi with phi = 1 on |t| <= plateau/2 and phi = 0 for |t| >= support/2."""

    plateau: float = PLATEAU
    support: float = SUPPORT

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        u = np.abs(t - np.round(t)) if self.support >= 1.0 else np.abs(t)
        x = (self.support / 2 - u) / ((self.support - self.plateau) / 2)
        return smooth_step(x)

    def scaled(self, t, delta):
        """phi_delta(t) = phi(t / delta): support arc of length delta."""
        t = np.asarray(t, dtype=float)
        u = (t - np.round(t)) / delta
        out = np.zeros_like(u)
        m = np.abs(u) < 0.5
        out[m] = self(u[m])
        return out

    def transform(self, xi):
        """Fourier transform on the line, int phi(t) exp(-2 pi i xi t) dt."""
        xi = float(xi)

        def f(t):
            return float(self(t)) * math.cos(2 * math.pi * xi * t)

        lim = max(50, int(4 * abs(xi)) + 50)
        flat = self.plateau / 2
        v1, _ = integrate.quad(f, 0.0, flat, limit=lim, epsabs=1e-15)
        v2, _ = integrate.quad(f, flat, self.support / 2, limit=lim, epsabs=1e-15)
        return 2.0 * (v1 + v2)


def base_bump():
    return SmoothBump()


def sampling_points(eta, N):
    """Centres eta(k+N)/(2N), k = 1..N, on the arc (eta/2, eta]."""
    k = np.arange(1, N + 1)
    return eta * (k + N) / (2.0 * N)


def comb_transform(n, eta, N):
    """nu_hat(n) = (1/N) sum_k (1 - exp(-2 pi i n t_k))."""
    n = np.atleast_1d(np.asarray(n, dtype=float))
    tk = sampling_points(eta, N)
    return np.mean(1.0 - np.exp(-2j * np.pi * np.outer(n, tk)), axis=1)


def chi_samples(eta, N, grid_size, center=0.0, bump=None):
    """(values, active) of chi(t - center) at t = k/G.

    ``active`` counts the comb translates that are nonzero at each node.
    """
    bump = bump or base_bump()
    G = int(grid_size)
    delta = eta / (16.0 * N)
    vals = np.zeros(G)
    active = np.zeros(G, dtype=np.int16)
    half = int(math.ceil(delta * G / 2)) + 1

    def place(c, weight, count):
        mid = int(round(c * G))
        idx = np.arange(mid - half, mid + half + 1)
        v = bump.scaled(idx / G - c, delta)
        vals[idx % G] += weight * v
        if count:
            active[idx % G] += (v > 0).astype(np.int16)

    place(center, 1.0, False)
    for tk in sampling_points(eta, N):
        place(center + tk, -1.0 / N, True)
    return vals, active


@dataclass(frozen=True, eq=False)
class LocalizerChi:
    eta: float
    N: int
    K: int
    delta: float
    coeffs: TrigPoly
    grid: GridFunction
    c2_fit: float
    c2_bound: float
    plateau_arc: float
    max_active: int

    @property
    def grid_min(self):
        return float(self.grid.values.real.min())

    @property
    def grid_max(self):
        return float(self.grid.values.real.max())

    @property
    def tail_constant(self):
        """C with |chi_hat(n)| <= C / n^2 for every n != 0."""
        return self.c2_bound / self.eta

    @property
    def height_cap(self):
        """|chi_hat(n)| <= int |chi| <= 2 delta."""
        return 2.0 * self.delta

    def envelope(self, n):
        n = np.abs(np.asarray(n, dtype=float))
        with np.errstate(divide="ignore"):
            return np.minimum(self.height_cap, self.tail_constant / n ** 2)

    def decay_curve(self):
        """(n, |chi_hat(n)|, envelope) for 0 < n <= K."""
        n = np.arange(1, self.K + 1)
        return n, np.abs(self.coeffs.get_many(n)), self.envelope(n)


def default_cutoff(eta, N):
    return max(4096, int(math.ceil(512.0 * N / eta)))


def chi(eta, N, K=None, grid_size=None, max_grid=MAX_GRID):
    """The mean-zero localizer phi_delta - (1/N) sum_k phi_delta(. - t_k),
    delta = eta/(16N), with coefficients |n| <= K taken from an FFT grid."""
    eta, N = float(eta), int(N)
    if not 0.0 < eta < 0.5:
        raise ParameterError("eta must lie in (0, 1/2)", eta=eta)
    if N < 1:
        raise ParameterError("N must be at least 1", N=N)
    delta = eta / (16.0 * N)
    K = default_cutoff(eta, N) if K is None else int(K)
    if grid_size is None:
        need = max(256.0 / delta, 4.0 * K)
        grid_size = 1 << max(0, int(math.ceil(need - 1e-9)) - 1).bit_length()
    if grid_size > max_grid:
        raise ResourceError("grid for the localizer exceeds the budget",
                            required=int(grid_size), budget=max_grid, eta=eta, N=N)
    if 2 * K >= grid_size:
        raise ParameterError("cutoff must be below half the grid size", K=K, grid=grid_size)
    vals, active = chi_samples(eta, N, grid_size)
    gf = GridFunction(vals.astype(np.complex128), grid_size)
    coeffs = grid_coefficients(gf, K, hermitian=True)
    n = np.arange(1, K + 1)
    mag = np.abs(coeffs.get_many(n))
    hi = n > 1.0 / eta
    c2_fit = float(np.max(eta * n[hi] ** 2 * mag[hi])) if hi.any() else 0.0
    c2_bound = eta * BUMP_D2_L1 / (2.0 * math.pi ** 2 * delta)
    # contiguous run around t = 0 where chi is exactly 1: the step saturates
    # to 1.0 in floating point and no comb translate reaches there
    flat = vals == 1.0
    r = 0
    while r + 1 < grid_size // 2 and flat[r + 1]:
        r += 1
    left = 0
    while left + 1 < grid_size // 2 and flat[-(left + 1)]:
        left += 1
    plateau = (r + left) / grid_size if flat[0] else 0.0
    return LocalizerChi(eta, N, K, delta, coeffs, gf, c2_fit, c2_bound, plateau,
                        int(active.max()))


def _phi_tail(phi, C, cap, K, shift=0, extend=64):
    """Upper bound for sum_{|n|>K} Phi(min(cap, C/(|n|-shift)^2)).

    Sums exactly up to extend*K and bounds the remainder with
    Phi(x) <= (Phi(x_M)/x_M) x for x <= x_M, valid when Phi(t)/t increases.
    """
    M = extend * (K + 1)
    n = np.arange(K + 1, M + 1, dtype=float) - shift
    x = np.minimum(cap, C / n ** 2)
    head = math.fsum(phi(x))
    xm = min(cap, C / (M - shift) ** 2)
    rest = (phi(xm) / xm) * C / (M - shift) if xm > 0 else 0.0
    return 2.0 * (head + float(rest))


def _weighted_tail(w, C, K, shift=0):
    """Upper bound for sum_{|n|>K} w_|n| C/(|n|-shift)^2 with w nonincreasing."""
    return 2.0 * float(w.at_frequencies(np.array([K + 1]))[0]) * C / (K - shift)


@dataclass(eq=False)
class LocalizerPsi:
    """psi(t) = 1 - chi(t - center)."""

    chi: LocalizerChi
    center: float
    eps: float
    space: str
    certificate: Certificate
    searched: list = field(default_factory=list)

    @property
    def dead_arc(self):
        h = self.chi.plateau_arc / 2
        return (self.center - h, self.center + h)

    def coeff_array(self, n):
        """psi_hat at integer frequencies |n| <= K."""
        n = np.asarray(n, dtype=np.int64)
        c = -self.chi.coeffs.get_many(n) * np.exp(-2j * np.pi * n * self.center)
        c[n == 0] += 1.0
        return c

    def samples(self, grid_size):
        v, _ = chi_samples(self.chi.eta, self.chi.N, grid_size, center=self.center)
        return 1.0 - v

    def to_dict(self):
        cert = self.certificate.data
        body = {"tail_bound": cert["tail_bound"],
                "pointwise_envelope_ratio": cert["pointwise_envelope_ratio"],
                "passed": self.certificate.passed,
                "checks": [c.to_dict() for c in self.certificate.checks]}
        key = "phi_sum" if self.space == "orlicz" else "weighted_sum"
        body[key] = cert[key]
        if "cesaro_term" in cert:
            body["cesaro_term"] = cert["cesaro_term"]
        return {"eta": self.chi.eta, "N": self.chi.N, "K": self.chi.K,
                "center": self.center, "eps": self.eps,
                "dead_arc": list(self.dead_arc), "certificate": body,
                "search": self.searched}


def _ratio_envelope(ch, eps):
    n = np.arange(1, ch.K + 1, dtype=float)
    mag = np.abs(ch.coeffs.get_many(n.astype(np.int64)))
    env = np.minimum(eps, 10.0 / (eps * n ** 2))
    return float(np.max(mag / env))


def _common_checks(cert, ch, eps, center):
    psi0 = 1.0 - complex(ch.coeffs.get(0)).real
    cert.add(at_most("mean_is_one", abs(psi0 - 1.0), ZERO_TOL))
    cert.add(at_least("grid_min", 1.0 - ch.grid_max, -ZERO_TOL))
    cert.add(at_most("grid_max", 1.0 - ch.grid_min, 1.0 + eps + ZERO_TOL))
    cert.add(at_least("dead_arc_length", ch.plateau_arc, 2.0 ** -16 * ch.eta / ch.N))
    cert.add(holds("translates_disjoint", ch.max_active <= 1, ch.max_active))


def _search(eps, build_sum, max_grid, space):
    if not eps > 0:
        raise ParameterError("eps must be positive", eps=eps)
    N = int(math.ceil(1.0 / eps))
    eta = 0.25
    history = []
    for _ in range(MAX_HALVINGS):
        try:
            ch = chi(eta, N, max_grid=max_grid)
        except ResourceError as err:
            err.details["best"] = min(history, key=lambda h: h["total"]) if history else None
            raise
        total, parts = build_sum(ch)
        history.append({"eta": eta, "total": total})
        if total <= eps:
            return ch, parts, history
        eta /= 2.0
    raise SearchFailure("eta halving did not reach the target", space=space, eps=eps,
                        best=min(history, key=lambda h: h["total"]))


def psi_orlicz(phi, eps, center=0.0, max_grid=MAX_GRID):
    """Localizer with sum_{n != 0} Phi(|psi_hat(n)|) <= eps, certified."""
    rep = check_young(phi, t_min=1e-8, t_max=0.5)
    if rep.phi_over_t_trend not in ("decreasing", "constant"):
        raise ParameterError("Phi(t)/t must decrease as t decreases to 0",
                             trend=rep.phi_over_t_trend)

    def total(ch):
        n = np.arange(1, ch.K + 1)
        mag = np.abs(ch.coeffs.get_many(n))
        head = 2.0 * phi_sum(phi, mag)
        tail = _phi_tail(phi, ch.tail_constant, ch.height_cap, ch.K)
        return head + tail, {"phi_sum_head": head, "tail_bound": tail}

    ch, parts, history = _search(eps, total, max_grid, "orlicz")
    s = parts["phi_sum_head"] + parts["tail_bound"]
    cert = Certificate("psi_orlicz", data={
        "phi_sum": s, "tail_bound": parts["tail_bound"],
        "pointwise_envelope_ratio": _ratio_envelope(ch, eps),
        "c2_fit": ch.c2_fit, "c2_bound": ch.c2_bound, "gauge": phi.name})
    _common_checks(cert, ch, eps, center)
    cert.add(at_most("phi_sum", s, eps))
    return LocalizerPsi(ch, float(center), float(eps), "orlicz", cert, history)


def psi_weighted(w, eps, center=0.0, max_grid=MAX_GRID):
    """Localizer with sum_{n != 0} |psi_hat(n)| w_|n| <= eps, certified.

    Also checks the pointwise envelope |psi_hat(m)| <= min(eps, 10/(eps m^2)).
    """
    if not w.monotone_flag:
        raise ParameterError("weight must be nonincreasing", weight=w.name)

    def total(ch):
        n = np.arange(1, ch.K + 1)
        mag = np.abs(ch.coeffs.get_many(n))
        head = 2.0 * math.fsum(mag * w.at_frequencies(n))
        tail = _weighted_tail(w, ch.tail_constant, ch.K)
        return head + tail, {"weighted_head": head, "tail_bound": tail}

    ch, parts, history = _search(eps, total, max_grid, "weighted")
    s = parts["weighted_head"] + parts["tail_bound"]
    m = np.arange(1, int(1.0 / ch.eta) + 1)
    ratio = _ratio_envelope(ch, eps)
    cert = Certificate("psi_weighted", data={
        "weighted_sum": s, "tail_bound": parts["tail_bound"],
        "pointwise_envelope_ratio": ratio,
        "cesaro_term": ch.eta * math.fsum(w.at_frequencies(m)),
        "c2_fit": ch.c2_fit, "c2_bound": ch.c2_bound, "weight": w.name})
    _common_checks(cert, ch, eps, center)
    cert.add(at_most("weighted_sum", s, eps))
    cert.add(at_most("pointwise_envelope_ratio", ratio, 1.0))
    return LocalizerPsi(ch, float(center), float(eps), "weighted", cert, history)


# ---------------------------------------------------------------------------
# Carving


@dataclass(eq=False)
class CarveResult:
    g: TrigPoly
    grid: GridFunction
    psi: LocalizerPsi
    certificate: Certificate

    @property
    def distance(self):
        return self.certificate.data["distance"]


def carve(f, center, eps, space, max_grid=MAX_GRID, negativity_tol=ZERO_TOL):
    """g = f * psi for a nonnegative trigonometric polynomial f.

    ``space`` is ("orlicz", Phi) or ("weighted", w).  The distance from g to
    f is measured on |n| <= K + deg f and closed with an explicit tail bound.
    The returned g keeps the coefficients |n| <= K + deg f; the certificate
    records the l1 mass bound of what was dropped (``dropped_l1``), which is
    the sup distance between g and the exact product f * psi.
    """
    kind, obj = space
    if kind == "orlicz":
        psi = psi_orlicz(obj, eps, center, max_grid=max_grid)
    elif kind == "weighted":
        psi = psi_weighted(obj, eps, center, max_grid=max_grid)
    else:
        raise ParameterError("space must be orlicz or weighted", space=kind)
    ch = psi.chi
    d = f.degree
    G = ch.grid.grid_size
    while 2 * (ch.K + d) >= G // 2:
        G *= 2
    if G > max_grid:
        raise ResourceError("carving grid exceeds the budget", required=G, budget=max_grid)
    fv = evaluate(f, grid_size=G).values
    if fv.real.min() < -negativity_tol or np.abs(fv.imag).max() > ZERO_TOL:
        raise ParameterError("f must be real and nonnegative on the grid",
                             minimum=float(fv.real.min()))
    pv = psi.samples(G)
    gv = fv.real * pv
    ggrid = GridFunction(gv.astype(np.complex128), G)
    W = ch.K + d
    g = grid_coefficients(ggrid, W, hermitian=True)
    n = np.arange(-W, W + 1)
    diff = g.get_many(n) - f.get_many(n)
    l1 = f.l1()
    C = l1 * ch.tail_constant
    cap = l1 * ch.height_cap
    if kind == "orlicz":
        head = luxemburg_norm(obj, np.abs(diff))
        tail = _tail_luxemburg(obj, C, cap, W, d)
    else:
        head = math.fsum(np.abs(diff) * obj.at_frequencies(n))
        tail = _weighted_tail(obj, C, W, shift=d)
    distance = head + tail
    sup_f = float(fv.real.max())
    sup_g = float(gv.max())
    lo, hi = psi.dead_arc
    k = np.arange(G)
    t = k / G
    rel = (t - lo) - np.floor(t - lo)
    inside = rel <= (hi - lo)
    cert = Certificate("carve", data={
        "distance": distance, "distance_head": head, "tail_bound": tail,
        "f_l1": l1, "constant": distance / (eps * l1), "sup_f": sup_f, "sup_g": sup_g,
        "dead_arc": [lo, hi], "space": kind, "dropped_l1": 2.0 * C / (W - d)})
    cert.add(at_most("distance_constant", distance / (eps * l1), 10.0))
    cert.add(at_most("sup_growth", sup_g, (1 + eps) * sup_f + ZERO_TOL))
    cert.add(at_most("dead_arc_values", float(np.abs(gv[inside]).max()) if inside.any()
                     else 0.0, ZERO_TOL))
    return CarveResult(g, ggrid, psi, cert)


def _tail_luxemburg(phi, C, cap, K, shift):
    """Luxemburg norm bound for the tail sequence min(cap, C/(|n|-shift)^2), |n| > K."""
    if C == 0:
        return 0.0

    def modular(M):
        return _phi_tail(phi, C / M, cap / M, K, shift, extend=16)

    hi = max(cap, 1e-300)
    while modular(hi) > 1.0:
        hi *= 2.0
    lo = hi / 2.0
    while modular(lo) <= 1.0 and lo > 1e-300:
        hi, lo = lo, lo / 2.0
    for _ in range(40):
        mid = math.sqrt(lo * hi)
        if modular(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi
