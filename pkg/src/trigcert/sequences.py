"""Scalar sequences consumed by the constructions.

* ``packing_linear`` / ``packing_square``: slowly decaying sequences with a
  divergent sum (or sum of squares) and a convergent gauge sum, built by
  filling each interval [t_{n+1}, t_n) with a uniform block of points.
* ``weighted_sequence``: dyadic-block amplitudes tuned to a weight w.
* ``select_lacunary_freqs``: lacunary frequencies on which w is summable.
* ``katznelson_epsilons``: per-block heights for the random-free
  construction with Psi(t)/t^2 unbounded at 0.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import optimize

from .errors import HypothesisError, ParameterError, PrecisionError
from .orlicz import INT64_MAX, check_young

DEFAULT_DENSITY = 4.0
_TINY = 1e-300


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class GeneratedSequence:
    """Positive terms plus running trackers.

    ``chain`` (packing sequences only) holds per-term upper bounds for
    Phi(a_j): a_j/n^2 (linear) or a_j^2/n^2 (square) where n is the block
    of a_j.  ``block`` records that n.
    """

    terms: np.ndarray
    provenance: dict
    phi: object = None
    weight: object = None
    block: np.ndarray = None
    chain: np.ndarray = None
    warnings: tuple = ()

    def __post_init__(self):
        t = np.asarray(self.terms, dtype=float)
        if t.size and not np.all(t > 0):
            raise ParameterError("generated terms must be strictly positive")
        t.setflags(write=False)
        object.__setattr__(self, "terms", t)

    def __len__(self):
        return int(self.terms.size)

    def extended(self, count):
        """A new sequence with ``count`` terms from the same generator."""
        p = dict(self.provenance)
        kind = p.pop("kind")
        if kind == "packing_linear":
            return packing_linear(self.phi, count, density=p["density"])
        if kind == "packing_square":
            return packing_square(self.phi, count, density=p["density"])
        if kind == "weighted_sequence":
            return weighted_sequence(self.weight, count)
        raise ParameterError(f"cannot extend sequence of kind {kind!r}")

    @property
    def running_sum(self):
        return np.cumsum(self.terms)

    @property
    def running_sq(self):
        return np.cumsum(self.terms ** 2)

    @property
    def running_phi(self):
        if self.phi is None:
            return None
        return np.cumsum(self.phi(self.terms))

    @property
    def running_weighted(self):
        if self.weight is None:
            return None
        idx = np.arange(1, len(self) + 1, dtype=float)
        return np.cumsum(self.terms * self.weight(idx))

    def certificate(self):
        out = {
            "provenance": dict(self.provenance),
            "count": len(self),
            "sum_a": math.fsum(self.terms),
            "sum_a2": math.fsum(self.terms ** 2),
        }
        if self.phi is not None:
            out["sum_phi"] = math.fsum(self.phi(self.terms))
        if self.weight is not None:
            idx = np.arange(1, len(self) + 1, dtype=float)
            out["sum_aw"] = math.fsum(self.terms * self.weight(idx))
        if self.chain is not None:
            out["chain_bound"] = math.fsum(self.chain)
            out["blocks_used"] = int(self.block[-1]) if len(self) else 0
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out

    def to_csv(self, path):
        cols = ["index", "value", "sum_a", "sum_a2", "sum_phi"]
        rp = self.running_phi
        rw = self.running_weighted
        if rw is not None:
            cols.append("sum_aw")
        rs, rq = self.running_sum, self.running_sq
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(cols)
            for i in range(len(self)):
                row = [i + 1, repr(float(self.terms[i])), repr(float(rs[i])), repr(float(rq[i])),
                       repr(float(rp[i])) if rp is not None else ""]
                if rw is not None:
                    row.append(repr(float(rw[i])))
                wr.writerow(row)


# ---------------------------------------------------------------------------
# Packing generators


def _solve_quotient(q, target, hi_start, cap, rtol):
    """Root of q(t) = target for q increasing in t; None if it underflows."""
    hi = min(hi_start, cap)
    while q(hi) < target:
        if hi >= cap:
            raise HypothesisError("quotient never reaches the target below the domain cap",
                                  target=target, cap=cap)
        hi = min(hi * 2.0, cap)
    lo = hi
    while q(lo) >= target:
        lo *= 0.5
        if lo < _TINY:
            return None
    probe = np.geomspace(lo, hi, 33)
    vals = np.array([q(t) for t in probe])
    if np.any(np.diff(vals) < -1e-12 * np.abs(vals[1:])):
        raise HypothesisError("quotient is not monotone on the bracketing grid",
                              lo=lo, hi=hi)
    return optimize.bisect(lambda t: q(t) - target, lo, hi, xtol=_TINY, rtol=rtol, maxiter=200)


def _packing(phi, count, density, power, kind, rtol):
    count = int(count)
    if count < 1:
        raise ParameterError("count must be positive", count=count)
    if density <= 0:
        raise ParameterError("density must be positive", density=density)
    rep = check_young(phi, t_min=1e-8, t_max=min(1.0, phi.domain_cap))
    trend = rep.phi_over_t_trend if power == 1 else rep.phi_over_t2_trend
    if trend != "decreasing":
        label = "Phi(t)/t" if power == 1 else "Phi(t)/t^2"
        raise HypothesisError(f"{label} does not decrease as t decreases to 0", trend=trend,
                              gauge=phi.name)

    def q(t):
        return float(phi(np.array([t]))[0]) / t ** power

    cap = phi.domain_cap
    t_prev = _solve_quotient(q, 1.0, 1.0, cap, rtol)
    ts = [t_prev]
    pieces, blocks, chains = [], [], []
    have = 0
    n = 1
    notes = []
    while have < count:
        t_next = _solve_quotient(q, 1.0 / (n + 1) ** 2, ts[-1], cap, rtol)
        if t_next is None or t_next <= 0:
            msg = f"t_{n + 1} underflows; stopped at {have} terms"
            warnings.warn(msg, TruncationWarning, stacklevel=3)
            notes.append(msg)
            break
        ts.append(t_next)
        tn, tn1 = ts[-2], ts[-1]
        big_n = math.ceil(density / tn ** power)
        m = min(big_n, count - have)
        k = np.arange(big_n - 1, big_n - 1 - m, -1, dtype=float)
        vals = tn1 + (k / big_n) * (tn - tn1)
        pieces.append(vals)
        blocks.append(np.full(m, n, dtype=np.int64))
        chains.append(vals ** power / n ** 2)
        have += m
        n += 1
    terms = np.concatenate(pieces) if pieces else np.zeros(0)
    prov = {"kind": kind, "gauge": phi.name, "density": float(density),
            "t_n": [float(t) for t in ts]}
    return GeneratedSequence(terms, prov, phi=phi,
                             block=np.concatenate(blocks) if blocks else np.zeros(0, np.int64),
                             chain=np.concatenate(chains) if chains else np.zeros(0),
                             warnings=tuple(notes))


def packing_linear(phi, count, density=DEFAULT_DENSITY, rtol=1e-12):
    """Decreasing a_j with sum a_j = inf and sum Phi(a_j) < inf.

    t_n solves Phi(t)/t = 1/n^2; the interval [t_{n+1}, t_n) receives
    N_n = ceil(density/t_n) equally spaced points, emitted largest first.
    """
    return _packing(phi, count, density, 1, "packing_linear", rtol)


def packing_square(phi, count, density=DEFAULT_DENSITY, rtol=1e-12):
    """As ``packing_linear`` with Phi(t)/t^2 = 1/n^2 and N_n = ceil(density/t_n^2)."""
    return _packing(phi, count, density, 2, "packing_square", rtol)


# ---------------------------------------------------------------------------
# Weighted sequence


def weighted_sequence(w, k_max):
    """a_k = w(2^n) / (1 + sum_{j<n} 2^j w(2^j)^2)^(2/3) for 2^(n-1) <= k < 2^n."""
    k_max = int(k_max)
    if k_max < 2:
        raise ParameterError("k_max must be at least 2", k_max=k_max)
    terms = np.empty(k_max)
    acc = 0.0
    n = 1
    while (1 << (n - 1)) <= k_max:
        lo, hi = 1 << (n - 1), min(1 << n, k_max + 1)
        a = float(w(np.array([2.0 ** n]))[0]) / (1.0 + acc) ** (2.0 / 3.0)
        terms[lo - 1:hi - 1] = a
        acc += 2.0 ** n * float(w(np.array([2.0 ** n]))[0]) ** 2
        n += 1
    return GeneratedSequence(terms, {"kind": "weighted_sequence", "weight": w.name}, weight=w)


def window_inequality(seq, w, m, n):
    """Both sides of sum_{m<=k<n} a_k w_k >= (1/4)(1 + sum_{m<=k<n} w_k^2)^(1/3)."""
    if not 0 < m < n <= len(seq) + 1:
        raise ParameterError("need 0 < m < n <= len(seq) + 1", m=m, n=n)
    k = np.arange(m, n, dtype=float)
    wk = w(k)
    lhs = math.fsum(seq.terms[m - 1:n - 1] * wk)
    rhs = 0.25 * (1.0 + math.fsum(wk ** 2)) ** (1.0 / 3.0)
    return lhs, rhs


# ---------------------------------------------------------------------------
# Lacunary frequencies


@dataclass(frozen=True)
class LacunaryFreqs:
    freqs: tuple
    ratio_floor: float = 3
    requested: int = None
    truncated: bool = False
    notes: tuple = field(default=())

    def __post_init__(self):
        fs = tuple(int(f) for f in self.freqs)
        object.__setattr__(self, "freqs", fs)
        if any(f <= 0 for f in fs):
            raise ParameterError("lacunary frequencies must be positive")
        r = Fraction(self.ratio_floor).limit_denominator(10 ** 6)
        for a, b in zip(fs, fs[1:]):
            if b * r.denominator < a * r.numerator:
                raise ParameterError("ratio invariant violated", pair=[a, b], floor=float(r))

    def __len__(self):
        return len(self.freqs)

    @property
    def kappa(self):
        if len(self.freqs) < 2:
            return math.inf
        return min(b / a for a, b in zip(self.freqs, self.freqs[1:]))


def _first_below(w, threshold, start, budget):
    """Smallest integer n >= start with w(n) <= threshold (w non-increasing)."""
    def ok(n):
        return float(w(np.array([float(n)]))[0]) <= threshold

    if ok(start):
        return start
    lo, hi = start, start
    while not ok(hi):
        lo = hi
        if hi >= budget:
            return None
        hi = min(2 * hi, budget)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def select_lacunary_freqs(w, decay_target, j_max, index_budget=2 ** 62, ratio=3):
    """N_j >= ratio*N_{j-1} minimal with w(N_j) <= 2^-j (sum_w) or 4^-j (sum_w_2pow)."""
    if decay_target not in ("sum_w", "sum_w_2pow"):
        raise ParameterError("decay_target must be 'sum_w' or 'sum_w_2pow'", got=decay_target)
    if not w.monotone_flag:
        raise HypothesisError("frequency selection needs a non-increasing weight", weight=w.name)
    base = 2.0 if decay_target == "sum_w" else 4.0
    budget = min(int(index_budget), INT64_MAX)
    out, notes = [], []
    prev = 0
    truncated = False
    for j in range(1, int(j_max) + 1):
        start = max(1, ratio * prev)
        nj = _first_below(w, base ** -j, start, budget) if start <= budget else None
        if nj is None:
            msg = f"threshold {base:g}^-{j} unreachable within index budget {budget}; kept {len(out)} terms"
            warnings.warn(msg, TruncationWarning, stacklevel=2)
            notes.append(msg)
            truncated = True
            break
        out.append(nj)
        prev = nj
    return LacunaryFreqs(tuple(out), ratio, int(j_max), truncated, tuple(notes))


# ---------------------------------------------------------------------------
# Heights for the Psi(t)/t^2 -> infinity construction


def katznelson_epsilons(psi, amplitudes, rtol=1e-13):
    """eps_j = x_j/A_j with x_j the largest x such that Psi(x)/x^2 >= 1/A_j^2.

    Psi(t)/t^2 must not decrease as t decreases; x_j is located by
    bisection in log scale and the returned point always satisfies the
    inequality by direct substitution.
    """
    grid = np.geomspace(1e-300, 1.0, 600)
    with np.errstate(all="ignore"):
        ratio = psi(grid) / grid ** 2
    ok = np.isfinite(ratio)
    if np.any(np.diff(ratio[ok]) > 1e-12 * np.abs(ratio[ok][1:])):
        raise HypothesisError("Psi(t)/t^2 increases with t somewhere on the grid", gauge=psi.name)

    def holds(x, a):
        if x * x == 0.0:
            return False
        with np.errstate(all="ignore"):
            v = float(psi(np.array([x]))[0]) / (x * x)
        return math.isfinite(v) and v >= 1.0 / a ** 2

    eps = []
    for j, a in enumerate(amplitudes, start=1):
        a = float(a)
        if a <= 0:
            raise ParameterError("amplitudes must be positive", j=j)
        hi = 1.0
        while holds(hi, a):
            hi *= 2.0
            if hi > 1e300:
                raise PrecisionError("condition holds for all representable x", j=j)
        lo = hi
        while not holds(lo, a):
            lo *= 0.5
            if lo < np.finfo(float).tiny:
                raise PrecisionError(f"no normal double satisfies the height condition at j={j}",
                                     j=j, amplitude=a)
        llo, lhi = math.log(lo), math.log(hi)
        while lhi - llo > rtol:
            mid = 0.5 * (llo + lhi)
            if holds(math.exp(mid), a):
                llo = mid
            else:
                lhi = mid
        x = math.exp(llo)
        while not holds(x, a):  # guard against exp rounding up
            x = np.nextafter(x, 0.0)
        eps.append(float(x) / a)
    return eps
