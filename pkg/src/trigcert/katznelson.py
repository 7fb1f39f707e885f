"""Random-sign constructions: continuous functions with large weighted
coefficient sums, blocks of flat polynomials, and lacunary coefficient
sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .certificate import Certificate, at_least, at_most, holds, strictly_increasing
from .errors import (CertificateMiss, FrequencyRangeError, HypothesisError, ParameterError,
                     PrecisionError, ResourceError, SamplingFailure)
from .orlicz import INT64_MAX, WeightSequence, check_weight, min_weight, phi_sum, power_weight
from .riesz import LacunarySum
from .sequences import katznelson_epsilons, packing_square, weighted_sequence
from .trig import (MAX_GRID, TrigPoly, bandpass_multiplier, classical_poly, evaluate,
                   modulate, sup_bounds)

ROOT_HALF = power_weight(0.5)


# ---------------------------------------------------------------------------
# Weight preparation and windows


@dataclass(frozen=True)
class PreparedWeight:
    weight: WeightSequence
    crossover: float
    divergent: bool
    sample_range: int


def preprocess_weight(w, n_max=2 ** 20):
    """w'_n = min(n^-1/2, w_n), with the crossing point and a divergence
    report for sum w'^2 on [1, n_max]."""
    wp = min_weight(ROOT_HALF, w)
    wp = WeightSequence(wp.eval, w.monotone_flag, f"min(power:0.5,{w.name})")

    def gap(x):
        return float(ROOT_HALF(np.array([x]))[0] - w(np.array([x]))[0])

    crossover = math.nan
    xs = np.geomspace(1.0, float(n_max), 200)
    d = np.array([gap(x) for x in xs])
    flip = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]
    if flip.size:
        i = int(flip[0])
        crossover = optimize.brentq(gap, xs[i], xs[i + 1], xtol=1e-12)
    rep = check_weight(wp, n_max)
    return PreparedWeight(wp, crossover, rep.sum_w2_verdict == "divergent", n_max)


@dataclass(frozen=True)
class Window:
    gamma: float
    M: int
    N_hi: int
    a_tail_sq: float
    lam: float
    budget: float
    budget_achieved: float
    scale: float
    capped: bool
    index_capped: bool
    proof_gamma: float

    def to_dict(self):
        return {"gamma": self.gamma, "M": self.M, "N_hi": self.N_hi,
                "a_tail_sq": self.a_tail_sq, "lambda": self.lam, "budget": self.budget,
                "budget_achieved": self.budget_achieved, "scale": self.scale,
                "capped": self.capped, "index_capped": self.index_capped,
                "proof_gamma": self.proof_gamma}


def choose_window(a, w, gamma, N_floor, budget=None, index_limit=None, capped=False,
                  rescale=False):
    """Frequency window [M, N_hi) for the random series.

    ``a`` holds a_1, a_2, ... and is treated as zero past its length (or past
    ``index_limit``).  With ``rescale`` the thresholds use sqrt(gamma).

    Exact mode: least M >= N_floor with sum_{n>=M} a_n^2 <= g^4, then the
    largest N_hi with sum_{M<=n<N_hi} w_n^2 <= g^-2.

    Capped mode: M = N_floor, N_hi the largest index with
    sum w_n^2 <= min(budget, g^-2) inside the index limit, and the window's
    amplitudes multiplied by ``scale`` so that lambda = g^2.
    """
    gamma = float(gamma)
    if not 0.0 < gamma < 0.1:
        raise ParameterError("gamma must lie in (0, 1/10)", gamma=gamma)
    g = math.sqrt(gamma) if rescale else gamma
    N_floor = int(N_floor)
    if N_floor < 1:
        raise ParameterError("N_floor must be positive", N_floor=N_floor)
    limit = len(a) + 1 if index_limit is None else min(int(index_limit), len(a) + 1)
    if limit <= N_floor + 1:
        raise ResourceError("index limit below N_floor", limit=limit, N_floor=N_floor)
    terms = a.terms[:limit - 1]
    cap_budget = g ** -2 if budget is None else min(float(budget), g ** -2)

    if capped:
        M = N_floor
    else:
        sq = terms[N_floor - 1:] ** 2
        tails = np.cumsum(sq[::-1])[::-1]
        ok = np.nonzero(tails <= g ** 4)[0]
        if ok.size == 0:
            raise ResourceError("index budget exhausted before the tail threshold",
                                threshold=g ** 4, best_tail=float(tails[-1]),
                                index_limit=limit)
        M = N_floor + int(ok[0])
    k = np.arange(M, limit, dtype=float)
    cum = np.cumsum(w(k) ** 2)
    count = int(np.searchsorted(cum, cap_budget, side="right"))
    index_capped = count == k.size
    if index_capped and not capped:
        raise ResourceError("index budget exhausted before the weight budget",
                            budget=cap_budget, achieved=float(cum[-1]) if cum.size else 0.0,
                            index_limit=limit, M=M)
    N_hi = M + count
    if N_hi < 2 * M:
        raise ParameterError("window too short for a nonempty flat band", M=M, N_hi=N_hi)
    achieved = float(cum[count - 1]) if count else 0.0
    raw = math.fsum(terms[M - 1:N_hi - 1] ** 2) if capped else math.fsum(terms[M - 1:] ** 2)
    scale = min(1.0, g ** 2 / math.sqrt(raw)) if capped and raw > 0 else 1.0
    tail = scale ** 2 * raw
    return Window(gamma, M, N_hi, tail, math.sqrt(tail), cap_budget, achieved, scale,
                  bool(capped), bool(index_capped), g)


# ---------------------------------------------------------------------------
# Random signs and truncation


def truncation_bound(lam, a_sq):
    """4 (lambda^2 + 2 a^2) exp(-lambda^2 / (2 a^2))."""
    if a_sq == 0:
        return 0.0
    return 4.0 * (lam ** 2 + 2.0 * a_sq) * math.exp(-lam ** 2 / (2.0 * a_sq))


def truncate(values, lam):
    """f^lambda = min(lambda, |f|) f / |f| pointwise."""
    v = np.asarray(values)
    mag = np.abs(v)
    out = v.copy()
    big = mag > lam
    out[big] = v[big] * (lam / mag[big])
    return out


@dataclass(eq=False)
class SignedSeries:
    window: Window
    signs: np.ndarray
    n_cut: int
    grid_size: int
    values: np.ndarray
    truncated: np.ndarray
    truncation_error: float
    bound: float
    slack: float
    trial: int
    seed: int
    ratios: list = field(default_factory=list)


def _series_coefficients(a, window):
    idx = np.arange(window.M, window.N_hi)
    return idx, window.scale * a.terms[window.M - 1:window.N_hi - 1]


def sample_signs(a, window, trials=64, slack=4.0, seed=0, oversample=8, max_grid=MAX_GRID):
    """Rejection sampler: random-sign series sum eps_n a_n zeta^n over the
    window, accepted once ||f - f^lambda||_2^2 <= slack * bound."""
    if trials < 1:
        raise ParameterError("trials must be at least 1", trials=trials)
    if slack < 1:
        raise ParameterError("slack must be at least 1", slack=slack)
    idx, amp = _series_coefficients(a, window)
    n_cut = window.N_hi
    G = 1 << max(1, int(oversample * n_cut - 1).bit_length())
    if G > max_grid:
        raise ResourceError("series grid exceeds the budget", required=G, budget=max_grid)
    bound = truncation_bound(window.lam, window.a_tail_sq)
    children = np.random.SeedSequence(seed).spawn(trials)
    ratios = []
    for t, child in enumerate(children):
        rng = np.random.default_rng(child)
        eps = rng.choice(np.array([-1.0, 1.0]), size=idx.size)
        spectrum = np.zeros(G, dtype=np.complex128)
        spectrum[idx] = eps * amp
        vals = np.fft.ifft(spectrum) * G
        trunc = truncate(vals, window.lam)
        err = float(np.mean(np.abs(vals - trunc) ** 2))
        ratio = err / bound if bound > 0 else (0.0 if err == 0 else math.inf)
        ratios.append(ratio)
        if err <= slack * bound:
            return SignedSeries(window, eps.astype(np.int8), n_cut, G, vals, trunc, err,
                                bound, slack, t, int(seed), ratios)
    raise SamplingFailure("no sign pattern met the truncation bound", trials=trials,
                          best_ratio=min(ratios), slack=slack)


# ---------------------------------------------------------------------------
# T_gamma


@dataclass(frozen=True)
class KatzConfig:
    budget: float = 1e3
    index_span: int = 1024
    slack: float = 4.0
    trials: int = 64
    seed: int = 0
    oversample: int = 8
    capped: bool = True
    max_grid: int = MAX_GRID


def build_T_gamma(w, gamma, N_floor, config=KatzConfig(), raise_on_miss=False):
    """Bandpassed truncation of a random-sign series, with certificate.

    Returns (T, Certificate).  The window runs at the proof parameter
    sqrt(gamma) so that sup|T| <= 6 gamma and the flat-band weighted sum
    target is gamma^(-1/3)/10.
    """
    gamma = float(gamma)
    if not 0.0 < gamma < 0.1:
        raise ParameterError("gamma must lie in (0, 1/10)", gamma=gamma)
    N_floor = int(N_floor)
    prep = preprocess_weight(w)
    limit = N_floor * int(config.index_span) if config.capped else 2 ** 26
    a = weighted_sequence(prep.weight, limit)
    win = choose_window(a, prep.weight, gamma, N_floor, budget=config.budget,
                        index_limit=limit, capped=config.capped, rescale=True)
    series = sample_signs(a, win, trials=config.trials, slack=config.slack, seed=config.seed,
                          oversample=config.oversample, max_grid=config.max_grid)
    G = series.grid_size
    M, N_hi = win.M, win.N_hi
    if 2 * N_hi >= G // 2:
        raise ResourceError("grid too small for the bandpass support", grid=G, N_hi=N_hi)
    coef = np.fft.fft(series.truncated) / G
    pos = np.arange(M + 1, 2 * N_hi, dtype=np.int64)
    freqs = np.concatenate([-pos[::-1], pos])
    vals = bandpass_multiplier(freqs, M, N_hi) * coef[np.mod(freqs, G)]
    T = TrigPoly.from_arrays(freqs, vals, hermitian=False)
    lower, upper = sup_bounds(T, oversample=config.oversample, max_grid=config.max_grid)
    band = np.arange(2 * M, N_hi + 1, dtype=np.int64)
    weighted = math.fsum(np.abs(T.get_many(band)) * w.at_frequencies(band))
    required = 0.25 * (1.0 + win.budget_achieved) ** (1.0 / 3.0) - 3.0 * gamma
    g = win.proof_gamma
    cert = Certificate("T_gamma", data={
        "gamma": gamma, "M": M, "N_hi": N_hi, "budget": win.budget,
        "budget_achieved": win.budget_achieved, "lambda": win.lam, "scale": win.scale,
        "seed": config.seed, "trial": series.trial, "sup_lower": lower, "sup_upper": upper,
        "sup_chain": 6.0 * win.lam, "weighted_sum": weighted, "bound_required": required,
        "bound_requested_budget": 0.25 * (1.0 + config.budget) ** (1.0 / 3.0) - 3.0 * gamma,
        "bound_statement": 0.1 * gamma ** (-1.0 / 3.0),
        "bound_before_rescale": 0.1 * g ** (-2.0 / 3.0),
        "truncation_error": series.truncation_error, "truncation_bound": series.bound,
        "weight_crossover": prep.crossover, "index_capped": win.index_capped,
        "min_frequency": int(np.abs(T.freqs).min()) if len(T) else None,
        "max_frequency": T.degree})
    cert.add(at_most("sup_upper", upper, 10.0 * gamma))
    cert.add(at_least("support_floor", int(np.abs(T.freqs).min()) if len(T) else math.inf,
                      N_floor))
    cert.add(at_most("truncation_error", series.truncation_error,
                     config.slack * series.bound))
    cert.add(at_least("weighted_sum", weighted, required))
    if raise_on_miss and not cert.passed:
        raise CertificateMiss("T_gamma certificate failed",
                              failed=[c.name for c in cert.failures()], weighted_sum=weighted,
                              bound_required=required)
    return T, cert


def t_gamma_record(cert):
    """The flat JSON record {gamma, M, N_hi, budget, lambda, seed, ...}."""
    d = cert.data
    keys = ("gamma", "M", "N_hi", "budget", "budget_achieved", "lambda", "seed", "sup_upper",
            "weighted_sum", "bound_required")
    out = {k: d[k] for k in keys}
    out["passed"] = cert.passed
    return out


def assemble_continuous(w, gammas, J=None, N_floor=64, config=KatzConfig(index_span=8)):
    """Partial sum f_J = T_1 + ... + T_J of blocks with disjoint spectra.

    Block j+1 starts above twice the largest frequency of block j.
    """
    gammas = [float(x) for x in gammas]
    J = len(gammas) if J is None else int(J)
    if J > len(gammas):
        raise ParameterError("need one gamma per block", J=J, given=len(gammas))
    if any(not x > 0 for x in gammas):
        raise ParameterError("gammas must be positive")
    if J == 0:
        return TrigPoly.empty(), Certificate("assemble", data={"blocks": []})
    blocks, certs, sups, totals = [], [], [], []
    floor = int(N_floor)
    total = 0.0
    for j in range(J):
        T, c = build_T_gamma(w, gammas[j], floor, replace(config, seed=config.seed + j))
        gf = evaluate(T, oversample=2, max_grid=config.max_grid)
        sups.append(float(np.max(np.abs(gf.values))))
        blocks.append(T)
        certs.append(c)
        total += c.data["weighted_sum"]
        totals.append(total)
        top = int(np.abs(T.freqs).max())
        if 2 * top > INT64_MAX:
            raise FrequencyRangeError("next block floor leaves the 64-bit range", achieved_J=j + 1)
        floor = 2 * top
    f = blocks[0]
    for T in blocks[1:]:
        f = f + T
    supports = [set(np.abs(T.freqs).tolist()) for T in blocks]
    disjoint = all(not (supports[i] & supports[k])
                   for i in range(J) for k in range(i + 1, J))
    cert = Certificate("assemble", data={
        "gammas": gammas[:J], "sup_increments": sups, "weighted_totals": totals,
        "sup_tail": 10.0 * math.fsum(gammas[:J]),
        "divergence_target": 0.1 * math.fsum(x ** (-1.0 / 3.0) for x in gammas[:J]),
        "blocks": [t_gamma_record(c) for c in certs]})
    cert.add(holds("supports_disjoint", disjoint))
    for j in range(J):
        cert.add(at_most(f"sup_increment_{j + 1}", sups[j], 10.0 * gammas[j] + 1e-8))
    cert.add(strictly_increasing("weighted_running_total", [0.0] + totals))
    cert.add(at_least("weighted_total_vs_target", totals[-1], cert.data["divergence_target"]))
    return f, cert


# ---------------------------------------------------------------------------
# Flat-polynomial blocks


def build_katz1(psi, amplitudes, J, max_order=26, rtol=1e-13):
    """f = sum_j A_j zeta^{N_j} T_j with T_j flat of height eps_j.

    Each block carries sum_n Psi(A_j |T_j_hat(n)|) >= 1/4 when eps_j solves
    Psi(A_j eps)/eps^2 = 1/2.
    """
    J = int(J)
    A = [float(x) for x in amplitudes]
    if J < 0 or J > len(A):
        raise ParameterError("J must lie in [0, len(amplitudes)]", J=J)
    if any(not x > 0 for x in A):
        raise ParameterError("amplitudes must be positive")
    if J == 0:
        return TrigPoly.empty(), Certificate("katz1", data={"J": 0, "blocks": []})
    grid = np.geomspace(1e-12, 1e-3, 60)
    q = psi(grid) / grid ** 2
    if np.any(np.diff(q) > 1e-12 * np.abs(q[1:])):
        raise HypothesisError("Psi(t)/t^2 must increase as t decreases to 0", gauge=psi.name)
    # heights first: the first underflow caps how many blocks could ever exist
    usable, underflow = J, None
    try:
        eps = katznelson_epsilons(psi, A[:J], rtol=rtol)
    except PrecisionError as err:
        usable, underflow = int(err.details["j"]) - 1, err.details
        eps = katznelson_epsilons(psi, A[:usable], rtol=rtol) if usable else []
    polys, block_sums = [], []
    for j, e in enumerate(eps):
        try:
            polys.append(classical_poly(e, max_order=max_order))
        except ResourceError as err:
            details = dict(err.details, achieved_J=j, requested_J=J, height_underflow=underflow)
            raise ResourceError("flat polynomial for the next block is too large",
                                **details) from err
    if underflow is not None:
        raise ResourceError("block heights underflow double precision", achieved_J=usable,
                            requested_J=J, **underflow)
    shifts = [0]
    for j in range(1, J):
        shifts.append(shifts[-1] + polys[j - 1].degree + polys[j].degree + 1)
    if shifts[-1] + polys[-1].degree > INT64_MAX:
        raise FrequencyRangeError("block frequencies leave the 64-bit range", achieved_J=J)
    parts = []
    for j in range(J):
        blk = modulate(polys[j], shifts[j]).scaled(A[j])
        parts.append(blk)
        block_sums.append(phi_sum(psi, blk))
    f = parts[0]
    for p in parts[1:]:
        f = f + p
    grid_sup = float(np.max(np.abs(evaluate(f, oversample=4).values)))
    cert = Certificate("katz1", data={"J": J, "eps": eps, "shifts": shifts,
                                      "block_sums": block_sums, "grid_sup": grid_sup})
    for j, s in enumerate(block_sums):
        cert.add(at_least(f"block_{j + 1}", s, 0.25))
    cert.add(at_least("total", math.fsum(block_sums), J / 4.0))
    cert.add(at_most("grid_sup", grid_sup, math.fsum(A[:J]) + 1e-8))
    return f, cert


# ---------------------------------------------------------------------------
# Lacunary coefficients


def lacunary_distribution(phi, J, density=None):
    """S_hat(+-2^j) = c_j, j = 1..J, with c from the square packing of phi."""
    J = int(J)
    if J < 1:
        raise ParameterError("J must be positive", J=J)
    kw = {} if density is None else {"density": density}
    seq = packing_square(phi, J, **kw)
    c = seq.terms[:J]
    series = LacunarySum(np.asarray(c, dtype=float), tuple(2 ** j for j in range(1, J + 1)))
    sq = np.cumsum(c ** 2)
    ph = np.cumsum(phi(c))
    half = max(1, J // 2)
    cert = Certificate("lacunary_distribution", data={
        "J": J, "phi_total": 2.0 * float(ph[-1]), "l2_total": 2.0 * float(sq[-1]),
        "phi_trend": float(ph[-1] / ph[half - 1]), "l2_trend": float(sq[-1] / sq[half - 1]),
        "chain_bound": seq.certificate()["chain_bound"]})
    cert.add(at_most("phi_total", float(ph[-1]), seq.certificate()["chain_bound"]))
    return series, cert
