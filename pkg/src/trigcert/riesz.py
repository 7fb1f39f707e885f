"""Riesz partial products, their spectral blocks, and lacunary series."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import certificate as cert
from .errors import FrequencyRangeError, ParameterError, ResourceError
from .orlicz import INT64_MAX, phi_sum
from .sequences import LacunaryFreqs, packing_linear, packing_square, select_lacunary_freqs
from .trig import MAX_GRID, TrigPoly, evaluate, grid_size_for

ARC = 0.1


@dataclass(frozen=True)
class RieszParams:
    """Amplitudes a_j in [-1, 1] and frequencies with ratio at least 3."""

    amplitudes: tuple
    freqs: LacunaryFreqs

    def __post_init__(self):
        amps = tuple(float(a) for a in self.amplitudes)
        object.__setattr__(self, "amplitudes", amps)
        if any(not abs(a) <= 1.0 for a in amps):
            raise ParameterError("Riesz amplitudes must satisfy |a_j| <= 1")
        if self.freqs.ratio_floor < 3:
            raise ParameterError("Riesz frequencies need ratio floor >= 3",
                                 ratio_floor=self.freqs.ratio_floor)
        if len(amps) > len(self.freqs):
            raise ParameterError("more amplitudes than frequencies",
                                 amplitudes=len(amps), freqs=len(self.freqs))

    @property
    def kappa(self):
        fs = self.freqs.freqs[:len(self.amplitudes)]
        if len(fs) < 2:
            return Fraction(self.freqs.ratio_floor).limit_denominator(10 ** 6)
        return min(Fraction(b, a) for a, b in zip(fs, fs[1:]))

    @property
    def max_level(self):
        return len(self.amplitudes)


def block_interval(n_j, kappa):
    """Integers strictly between (1 - 1/(kappa-1)) N_j and (1 + 1/(kappa-1)) N_j.

    The spectrum added at level j is N_j + m with |m| <= N_1 + ... + N_{j-1},
    which is strictly less than N_j/(kappa-1).  When the endpoints are not
    integers (N_j = 3^j, kappa = 3) this is [ceil(lo), floor(hi)]; for even
    N_j it drops the endpoints so consecutive blocks never share an integer.
    """
    r = Fraction(1) / (Fraction(kappa) - 1)
    lo = (1 - r) * n_j
    hi = (1 + r) * n_j
    return math.floor(lo) + 1, math.ceil(hi) - 1


@dataclass(frozen=True, eq=False)
class RieszProduct:
    params: RieszParams
    level: int
    coeffs: TrigPoly
    blocks: tuple

    def to_blocks_json(self):
        return [{"level": j + 1, "N": int(self.params.freqs.freqs[j]),
                 "amplitude": self.params.amplitudes[j], "lo": lo, "hi": hi}
                for j, (lo, hi) in enumerate(self.blocks)]

    def truncated(self, level):
        """Q_level, read off from the coefficients of a higher level."""
        if not 0 <= level <= self.level:
            raise ParameterError("level out of range", level=level, have=self.level)
        top = sum(self.params.freqs.freqs[:level])
        return RieszProduct(self.params, level, self.coeffs.window(0, top), self.blocks[:level])


def start(params):
    one = TrigPoly(np.zeros(1, np.int64), np.ones(1, np.complex128), True)
    return RieszProduct(params, 0, one, ())


def extend(p):
    """Q_{k+1} = Q_k + a_{k+1} Re(zeta^{N_{k+1}} Q_k)."""
    k = p.level
    if k >= p.params.max_level:
        raise ParameterError("no further level in params", level=k)
    a = p.params.amplitudes[k]
    big_n = int(p.params.freqs.freqs[k])
    top = int(p.coeffs.freqs[-1])
    if big_n + top > INT64_MAX:
        raise FrequencyRangeError("next Riesz level overflows 64-bit frequencies",
                                  achieved_level=k)
    lo, hi = block_interval(big_n, p.params.kappa)
    if p.blocks and lo <= p.blocks[-1][1]:
        raise ParameterError("new block overlaps the previous one", block=[lo, hi],
                             previous=list(p.blocks[-1]))
    if top >= big_n - top:
        raise ParameterError("frequencies too dense for disjoint Riesz blocks", level=k + 1)
    q = p.coeffs
    if a == 0:
        return RieszProduct(p.params, k + 1, q, p.blocks + ((lo, hi),))
    half = 0.5 * a
    up_f = q.freqs + np.int64(big_n)
    new_f = np.concatenate([-up_f[::-1], q.freqs, up_f])
    new_v = np.concatenate([half * np.conj(q.values[::-1]), q.values, half * q.values])
    keep = new_v != 0  # products of tiny amplitudes can underflow; symmetric in n
    coeffs = TrigPoly(new_f[keep], new_v[keep], True)
    return RieszProduct(p.params, k + 1, coeffs, p.blocks + ((lo, hi),))


def riesz_product(params, level=None):
    level = params.max_level if level is None else int(level)
    p = start(params)
    for _ in range(level):
        p = extend(p)
    return p


def geometric_params(amplitudes, base=3):
    fs = tuple(base ** j for j in range(1, len(amplitudes) + 1))
    return RieszParams(tuple(amplitudes), LacunaryFreqs(fs, base))


def block_index(p):
    """Block number (1-based) of every stored frequency; 0 for frequency 0.

    Raises if a nonzero frequency falls outside every block or inside two.
    """
    absf = np.abs(p.coeffs.freqs)
    idx = np.zeros(absf.size, dtype=np.int64)
    hits = np.zeros(absf.size, dtype=np.int64)
    for j, (lo, hi) in enumerate(p.blocks, start=1):
        inside = (absf >= lo) & (absf <= hi)
        idx[inside] = j
        hits += inside
    nonzero = absf != 0
    if np.any(hits[nonzero] != 1):
        bad = p.coeffs.freqs[nonzero & (hits != 1)][:5]
        raise ParameterError("block partition fails", frequencies=[int(b) for b in bad])
    if np.any(hits[~nonzero] != 0):
        raise ParameterError("frequency 0 lies in a block")
    return idx


@dataclass(frozen=True)
class BlockSum:
    level: int
    lo: int
    hi: int
    total: float
    prediction: float
    alternative: float

    @property
    def ratio(self):
        return self.total / self.prediction if self.prediction else math.nan


def block_sums(p, space="abs", phi=None, weight=None):
    """Exact per-block totals of |c|, phi(|c|) or |c| w_|n|.

    ``prediction`` is the product formula phi(|a_j|) prod_{i<j} (1 + phi(|a_i|))
    (with phi(t) = t for ``abs``); ``alternative`` is the exact identity
    2 sum_m phi(|a_j|/2 |Q_{j-1}(m)|).  Both are NaN for the weighted space.
    """
    if space == "abs":
        def f(x):
            return x
    elif space == "orlicz":
        if phi is None:
            raise ParameterError("orlicz space needs a gauge")
        f = phi
    elif space == "weighted":
        if weight is None:
            raise ParameterError("weighted space needs a weight")
        f = None
    else:
        raise ParameterError(f"unknown space {space!r}")
    idx = block_index(p)
    amps = p.coeffs.amplitudes
    out = []
    prod = 1.0
    for j, (lo, hi) in enumerate(p.blocks, start=1):
        sel = idx == j
        a = abs(p.params.amplitudes[j - 1])
        if f is None:
            total = math.fsum(amps[sel] * weight.at_frequencies(p.coeffs.freqs[sel]))
            pred = alt = math.nan
        else:
            total = math.fsum(np.asarray(f(amps[sel]), dtype=float))
            pa = float(np.asarray(f(np.array([a])))[0])
            pred = pa * prod
            prev = p.truncated(j - 1).coeffs.amplitudes
            alt = 2.0 * math.fsum(np.asarray(f(0.5 * a * prev), dtype=float)) if a else 0.0
            prod *= 1.0 + pa
        out.append(BlockSum(j, lo, hi, total, pred, alt))
    return out


def level_grid(p, oversample=2, max_grid=MAX_GRID):
    return grid_size_for(p.coeffs.degree, oversample)


def singularity_diagnostic(p, oversample=2, mass_fraction=0.9, levels=None, max_grid=MAX_GRID):
    """Smallest grid measure of a superlevel set of Q_j carrying the given mass fraction.

    All levels are evaluated on the grid that resolves the top level, so the
    numbers are directly comparable.  Returns a list of (level, measure).
    """
    if not 0 < mass_fraction < 1:
        raise ParameterError("mass_fraction must lie in (0, 1)", mass_fraction=mass_fraction)
    g = grid_size_for(p.coeffs.degree, oversample)
    if g > max_grid:
        raise ResourceError("diagnostic grid exceeds memory budget", required=g, budget=max_grid)
    levels = range(1, p.level + 1) if levels is None else levels
    curve = []
    for j in levels:
        vals = evaluate(p.truncated(j).coeffs, grid_size=g).values.real
        vals = np.sort(vals)[::-1]
        mass = np.cumsum(vals)
        m = int(np.searchsorted(mass, mass_fraction * mass[-1])) + 1
        curve.append((int(j), min(m, g) / g))
    return curve


def arc_max(poly_or_values, grid_size=None, arc=ARC):
    """Max |F| over grid angles with |theta| <= arc."""
    if isinstance(poly_or_values, TrigPoly):
        gf = evaluate(poly_or_values, grid_size=grid_size) if grid_size else evaluate(poly_or_values)
        vals, g = gf.values, gf.grid_size
    else:
        vals = np.asarray(poly_or_values)
        g = vals.size
    k = np.arange(g)
    th = 2 * np.pi * np.minimum(k, g - k) / g
    return float(np.max(np.abs(vals[th <= arc])))


def _levels_of_interest(k):
    return sorted({max(1, k // 4), max(1, k // 2), k})


def _growth_checks(c, p, grid):
    lv = _levels_of_interest(p.level)
    maxima = [arc_max(p.truncated(j).coeffs, grid_size=grid) for j in lv]
    c.data["arc_max"] = dict(zip(lv, maxima))
    if len(lv) > 1:
        c.add(cert.strictly_increasing("arc_max_grows", maxima))


KINDS = ("orlicz-growth", "orlicz-singular", "weighted-growth", "weighted-singular")


def build_named(kind, k, phi=None, weight=None, oversample=2, max_grid=MAX_GRID):
    """One of the named products in KINDS.  Returns (product, certificate).

    orlicz-*: amplitudes from the linear or square packing of phi, N_j = 3^j.
    weighted-growth: a_j = 1/j; weighted-singular: a_j = j^-1/2, with
    frequencies chosen so the weight has decayed enough at each N_j.
    """
    k = int(k)
    if k < 0:
        raise ParameterError("level must be nonnegative", k=k)
    c = cert.Certificate(kind)
    if kind in ("orlicz-growth", "orlicz-singular"):
        if phi is None:
            raise ParameterError(f"{kind} needs a gauge")
        gen = packing_linear if kind == "orlicz-growth" else packing_square
        seq = gen(phi, max(k, 1))
        amps = tuple(seq.terms[:k])
        params = geometric_params(amps, 3)
    elif kind in ("weighted-growth", "weighted-singular"):
        if weight is None:
            raise ParameterError(f"{kind} needs a weight")
        target = "sum_w" if kind == "weighted-growth" else "sum_w_2pow"
        freqs = select_lacunary_freqs(weight, target, max(k, 1))
        k_eff = min(k, len(freqs))
        if k_eff < k:
            c.data["truncated_levels"] = k_eff
        k = k_eff
        if kind == "weighted-growth":
            amps = tuple(1.0 / j for j in range(1, k + 1))
        else:
            amps = tuple(j ** -0.5 for j in range(1, k + 1))
        params = RieszParams(amps, freqs)
    else:
        raise ParameterError(f"unknown kind {kind!r}", known=list(KINDS))
    p = riesz_product(params, k)
    c.data.update({"level": k, "amplitudes": list(amps),
                   "freqs": [int(x) for x in params.freqs.freqs[:k]]})
    if k == 0:
        c.data["blocks"] = []
        return p, c
    block_index(p)
    c.add(cert.holds("block_partition", True))
    grid = grid_size_for(p.coeffs.degree, oversample)
    a = np.abs(np.array(amps))
    c.data["sum_a"] = math.fsum(a)
    c.data["sum_a2"] = math.fsum(a ** 2)
    if kind in ("orlicz-growth", "orlicz-singular"):
        bs = block_sums(p, "orlicz", phi=phi)
        total = math.fsum(b.total for b in bs)
        pa = np.asarray(phi(a), dtype=float)
        c.data["sum_phi_a"] = math.fsum(pa)
        c.data["block_phi"] = [b.total for b in bs]
        c.add(cert.at_most("phi_total_vs_product", total, float(np.prod(1.0 + pa)) - 1.0))
        if kind == "orlicz-growth":
            if grid <= max_grid:
                _growth_checks(c, p, grid)
        else:
            half = max(1, k // 2)
            c.data["sum_a2_half"] = math.fsum(a[:half] ** 2)
            if grid <= max_grid:
                curve = singularity_diagnostic(p, oversample, 0.9, _levels_of_interest(k), max_grid)
                c.curves["concentration"] = curve
                c.add(cert.holds("concentration_non_increasing",
                                 all(y2 <= y1 for (_, y1), (_, y2) in zip(curve, curve[1:]))))
    else:
        bs_abs = block_sums(p, "abs")
        bs_w = block_sums(p, "weighted", weight=weight)
        c.data["abs_block_totals"] = [b.total for b in bs_abs]
        wlo = [float(weight(np.array([float(b.lo)]))[0]) for b in bs_abs]
        bound = math.fsum(wl * b.total for wl, b in zip(wlo, bs_abs))
        wtotal = math.fsum(b.total for b in bs_w)
        c.add(cert.at_most("weighted_total", wtotal, bound))
        fw = [float(weight(np.array([float(n)]))[0]) for n in params.freqs.freqs[:k]]
        if kind == "weighted-growth":
            c.add(cert.holds("abs_blocks_at_most_one",
                             all(b.total <= 1 + 1e-12 for b in bs_abs),
                             max(b.total for b in bs_abs)))
            c.data["sum_w_N"] = math.fsum(fw)
            if grid <= max_grid:
                _growth_checks(c, p, grid)
        else:
            c.data["sum_w_N_2pow"] = math.fsum(x * 2.0 ** j for j, x in enumerate(fw, start=1))
            if grid <= max_grid:
                curve = singularity_diagnostic(p, oversample, 0.9, _levels_of_interest(k), max_grid)
                c.curves["concentration"] = curve
                c.add(cert.holds("concentration_non_increasing",
                                 all(y2 <= y1 for (_, y1), (_, y2) in zip(curve, curve[1:]))))
    c.data["blocks"] = p.to_blocks_json()
    return p, c


def write_concentration_csv(curve, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["level", "measure_for_fraction"])
        for lv, m in curve:
            wr.writerow([lv, repr(float(m))])


def write_blocks_json(p, path):
    with open(path, "w") as fh:
        json.dump(p.to_blocks_json(), fh, indent=2)


# ---------------------------------------------------------------------------
# Lacunary (Hadamard) series


@dataclass(frozen=True, eq=False)
class LacunarySum:
    """sum_j a_j (zeta^{N_j} + zeta^{-N_j}) with arbitrary-size integer N_j.

    Frequencies are Python integers so that very long lacunary sums can be
    evaluated exactly on odd-length grids, where exp(i N theta_k) only
    depends on N modulo the grid length.
    """

    amplitudes: np.ndarray
    freqs: tuple

    def __len__(self):
        return len(self.freqs)

    def head(self, j):
        return LacunarySum(self.amplitudes[:j], self.freqs[:j])

    def l2_squared(self):
        return 2.0 * math.fsum(self.amplitudes ** 2)

    def to_trigpoly(self):
        if self.freqs and self.freqs[-1] > INT64_MAX:
            raise FrequencyRangeError("lacunary frequency exceeds 64-bit range",
                                      largest=str(self.freqs[-1]))
        f = np.array(self.freqs, dtype=np.int64)
        return TrigPoly.from_arrays(np.concatenate([-f, f]),
                                    np.concatenate([self.amplitudes, self.amplitudes]),
                                    hermitian=True)

    def residues(self, q):
        return [pow(n, 1, q) for n in self.freqs]

    def aliasing_free(self, q):
        r = self.residues(q)
        allr = r + [(-x) % q for x in r]
        return 0 not in r and len(set(allr)) == len(allr)

    def exact_grid(self, q):
        """Values at theta_k = 2 pi k / q; exact in the sense that each term
        uses N_j mod q rather than a rounded angle."""
        if q % 2 == 0:
            raise ParameterError("exact lacunary grid length must be odd", q=q)
        spectrum = np.zeros(q, dtype=np.complex128)
        r = np.array(self.residues(q), dtype=np.int64)
        np.add.at(spectrum, r, self.amplitudes)
        np.add.at(spectrum, (-r) % q, self.amplitudes)
        return np.fft.ifft(spectrum) * q


def aliasing_free_length(series, minimum):
    q = max(3, int(minimum)) | 1
    while not series.aliasing_free(q):
        q += 2
    return q


def hadamard_series(a, freqs, J, phi=None, weight=None, min_grid=None):
    """Partial sum F_J = sum_{j<=J} a_j (zeta^{N_j} + zeta^{-N_j}) with growth certificate.

    Grid evaluation uses an odd length q on which all 2J frequencies have
    distinct residues, so the grid mean of |F|^2 equals the coefficient l2
    sum exactly (up to rounding) and every grid value is a true value of F.
    """
    J = int(J)
    terms = np.asarray(getattr(a, "terms", a), dtype=float)
    fs = tuple(int(n) for n in getattr(freqs, "freqs", freqs))
    if J < 0 or J > min(len(terms), len(fs)):
        raise ParameterError("J exceeds available terms", J=J, terms=len(terms), freqs=len(fs))
    for x, y in zip(fs[:J], fs[1:J]):
        if y < 2 * x:
            raise ParameterError("Hadamard frequencies need ratio >= 2", pair=[x, y])
    series = LacunarySum(terms[:J].copy(), fs[:J])
    c = cert.Certificate("hadamard")
    c.data["J"] = J
    if J == 0:
        return series, c
    q = aliasing_free_length(series, min_grid or 8 * J + 1)
    c.data["grid_length"] = q
    values = series.exact_grid(q)
    grid_l2 = float(np.mean(np.abs(values) ** 2))
    c.data["l2_coefficients"] = series.l2_squared()
    c.data["l2_grid"] = grid_l2
    c.data["square_function"] = math.fsum(series.amplitudes ** 2)
    c.add(cert.Check("parseval", abs(grid_l2 - series.l2_squared()) / series.l2_squared(),
                     1e-8, "<=", abs(grid_l2 - series.l2_squared()) <= 1e-8 * series.l2_squared()))
    if phi is not None:
        c.data["phi_sum"] = 2.0 * math.fsum(np.asarray(phi(np.abs(series.amplitudes)), float))
    if weight is not None:
        wv = weight(np.array([float(n) for n in series.freqs]))
        c.data["weighted_sum"] = 2.0 * math.fsum(np.abs(series.amplitudes) * wv)
    lv = _levels_of_interest(J)
    maxima = [arc_max(series.head(j).exact_grid(q)) for j in lv]
    c.data["arc_max"] = dict(zip(lv, maxima))
    c.curves["arc_max"] = list(zip(lv, maxima))
    if len(lv) > 1:
        c.add(cert.strictly_increasing("arc_max_grows", maxima))
    return series, c
