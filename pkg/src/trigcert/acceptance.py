"""The desk-scale acceptance suite.

Each criterion returns a CriterionResult; nothing here loosens a tolerance.
A criterion whose construction raises is reported as failed together with
the error record.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import bump, katznelson, riesz
from .errors import TrigcertError
from .orlicz import (CoeffSeq, conjugate, gauge, log_weight, luxemburg_norm, power_weight,
                     scaled_gauge)
from .sequences import LacunaryFreqs, packing_linear, weighted_sequence, window_inequality
from .trig import (classical_poly, evaluate, fejer, grid_size_for, rudin_shapiro)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0
    error: dict = None

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d} {self.title}: {self.summary} ({self.seconds:.1f}s)"

    def to_dict(self):
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "summary": self.summary, "details": self.details,
                "seconds": self.seconds, "error": self.error}


CRITERIA = {}


def criterion(number, title):
    def wrap(fn):
        def run():
            t0 = time.perf_counter()
            try:
                passed, summary, details = fn()
                res = CriterionResult(number, title, bool(passed), summary, details)
            except TrigcertError as err:
                res = CriterionResult(number, title, False,
                                      f"{err.code}: {err} {err.to_dict()['details']}",
                                      error=err.to_dict())
            res.seconds = time.perf_counter() - t0
            return res

        run.__name__ = fn.__name__
        run.number = number
        CRITERIA[number] = run
        return run

    return wrap


def _harmonic_params(k):
    return riesz.geometric_params(tuple(1.0 / j for j in range(1, k + 1)), 3)


@criterion(1, "Riesz recursion equals the dense product")
def riesz_oracle():
    worst = 0.0
    for k in range(1, 9):
        params = _harmonic_params(k)
        p = riesz.riesz_product(params)
        G = grid_size_for(p.coeffs.degree, 2)
        t = np.arange(G) / G
        dense = np.ones(G)
        for a, n in zip(params.amplitudes, params.freqs.freqs):
            dense *= 1.0 + a * np.cos(2 * np.pi * n * t)
        c = np.fft.fft(dense) / G
        ref = np.zeros(G, dtype=np.complex128)
        np.add.at(ref, np.mod(p.coeffs.freqs, G), p.coeffs.values)
        worst = max(worst, float(np.max(np.abs(c - ref))))
    return worst <= 1e-9, f"max abs error {worst:.2e} (need <= 1e-9)", {"max_error": worst}


@criterion(2, "Riesz blocks partition the spectrum")
def block_partition():
    bad = 0
    for k in range(1, 9):
        p = riesz.riesz_product(_harmonic_params(k))
        n = np.abs(p.coeffs.freqs[p.coeffs.freqs != 0]).astype(np.int64)
        owners = np.zeros(n.size, dtype=int)
        for N in p.params.freqs.freqs[:k]:
            # closed interval [N/2, 3N/2] in exact integer arithmetic
            owners += (2 * n >= N) & (2 * n <= 3 * N)
        bad += int(np.count_nonzero(owners != 1))
        riesz.block_index(p)
    return bad == 0, f"{bad} frequencies outside exactly one block", {"violations": bad}


@criterion(3, "Telescoping block totals for a_j = 1/j")
def telescoping():
    p = riesz.riesz_product(_harmonic_params(10))
    totals = [b.total for b in riesz.block_sums(p, "abs")]
    err = max(abs(t - 1.0) for t in totals)
    return err <= 1e-12, f"max |total - 1| = {err:.1e} over {len(totals)} blocks", {
        "totals": totals}


@criterion(4, "Window inequality for the weighted sequence")
def window_inequality_check():
    rng = np.random.default_rng(20240601)
    top = 2 ** 18
    out = {}
    for w in (power_weight(0.5), log_weight(1.0)):
        seq = weighted_sequence(w, top)
        bad = 0
        worst = math.inf
        for _ in range(200):
            m, n = sorted(rng.choice(np.arange(1, top + 1), size=2, replace=False))
            lhs, rhs = window_inequality(seq, w, int(m), int(n))
            bad += lhs < rhs
            worst = min(worst, lhs / rhs)
        out[w.name] = {"violations": int(bad), "worst_ratio": worst}
    total = sum(v["violations"] for v in out.values())
    summary = ", ".join(f"{k}: {v['violations']}/200 violations" for k, v in out.items())
    return total == 0, summary, out


@criterion(5, "Random-sign block certificate, capped budget")
def t_gamma():
    out = {}
    ok = True
    cfg = katznelson.KatzConfig(budget=1e3, seed=7)
    for g in (0.08, 0.04, 0.02):
        T, c = katznelson.build_T_gamma(power_weight(0.5), g, 64, cfg)
        d = c.data
        sup_ok = d["sup_upper"] <= 10 * g
        supp_ok = d["min_frequency"] >= 64
        sum_ok = d["weighted_sum"] >= d["bound_required"]
        ok &= sup_ok and supp_ok and sum_ok
        out[g] = {"sup_upper": d["sup_upper"], "min_frequency": d["min_frequency"],
                  "weighted_sum": d["weighted_sum"], "bound_required": d["bound_required"],
                  "bound_requested_budget": d["bound_requested_budget"],
                  "budget_achieved": d["budget_achieved"]}
    summary = "; ".join(f"gamma={g}: sup {v['sup_upper']:.3f} (need <= {10 * g:.2f}), "
                        f"sum {v['weighted_sum']:.3f} (need >= {v['bound_required']:.3f})"
                        for g, v in out.items())
    return ok, summary, out


@criterion(6, "Assembled blocks: disjoint, bounded, increasing")
def assembler():
    gammas = [0.08 * 2.0 ** -j for j in range(1, 4)]
    f, c = katznelson.assemble_continuous(power_weight(0.5), gammas, 3)
    names = ["supports_disjoint", "weighted_running_total"] + [f"sup_increment_{j}"
                                                                for j in (1, 2, 3)]
    ok = all(c.check(n).passed for n in names)
    d = c.data
    return ok, (f"disjoint={c.check('supports_disjoint').passed}, sups "
                f"{[round(s, 4) for s in d['sup_increments']]}, totals "
                f"{[round(s, 4) for s in d['weighted_totals']]}"), {
        "sup_increments": d["sup_increments"], "weighted_totals": d["weighted_totals"]}


@criterion(7, "Localizer certificates in the Orlicz space")
def psi_orlicz_cert():
    phi = gauge("power:1.5")
    out, arcs = {}, []
    ok = True
    for eps in (0.2, 0.1, 0.05):
        p = bump.psi_orlicz(phi, eps)
        ch = p.chi
        psi0 = abs(ch.coeffs.get(0))  # psi_hat(0) = 1 - chi_hat(0)
        lo, hi = 1.0 - ch.grid_max, 1.0 - ch.grid_min
        s = p.certificate.data["phi_sum"]
        ok &= psi0 <= 1e-8 and lo >= -1e-8 and hi <= 1 + eps + 1e-8 and s <= eps
        arcs.append(ch.plateau_arc)
        out[eps] = {"psi0_error": psi0, "grid_min": lo, "grid_max": hi,
                    "dead_arc": ch.plateau_arc, "phi_sum": s, "eta": ch.eta}
    mono = all(a > 0 for a in arcs) and all(b < a for a, b in zip(arcs, arcs[1:]))
    ok &= mono
    summary = "; ".join(f"eps={e}: S={v['phi_sum']:.4f}" for e, v in out.items())
    return ok, summary + f"; dead arcs decreasing={mono}", out


@criterion(8, "Localizer certificate in the weighted space")
def psi_weighted_cert():
    p = bump.psi_weighted(power_weight(0.5), 0.1)
    d = p.certificate.data
    ok = d["weighted_sum"] <= 0.1 and d["pointwise_envelope_ratio"] <= 1.0
    return ok, (f"weighted sum {d['weighted_sum']:.4f} (need <= 0.1), envelope ratio "
                f"{d['pointwise_envelope_ratio']:.3f} (need <= 1)"), dict(d)


@criterion(9, "Carving a zero arc out of the Fejer kernel")
def carve_check():
    r = bump.carve(fejer(16), 0.0, 0.05, ("orlicz", gauge("power:1.5")))
    d = r.certificate.data
    ok = r.certificate.passed
    return ok, (f"distance {d['distance']:.4f} = C*eps*||f||_1 with C={d['constant']:.3f}; "
                f"sup {d['sup_g']:.4f} vs {d['sup_f']:.4f}"), dict(d)


@criterion(10, "Rudin-Shapiro identity and flat polynomials")
def rudin_shapiro_check():
    worst = 0.0
    for n in range(0, 13):
        p, q = rudin_shapiro(n)
        G = grid_size_for(max(p.degree, 1), 8)
        s = np.abs(evaluate(p, grid_size=G).values) ** 2 + np.abs(evaluate(q, grid_size=G).values) ** 2
        worst = max(worst, float(np.max(np.abs(s / 2 ** (n + 1) - 1.0))))
    flat = {}
    ok = worst <= 1e-9
    for eps in (0.5, 0.1, 0.03, 0.01, 0.002):
        c = classical_poly(eps)
        G = grid_size_for(c.degree, 8)
        sup = float(np.max(np.abs(evaluate(c, grid_size=G).values)))
        l2 = math.sqrt(c.l2_squared())
        height = float(c.amplitudes.max())
        ok &= sup <= 1 + 1e-9 and abs(l2 - 2 ** -0.5) <= 1e-12 and height <= eps
        flat[eps] = {"grid_sup": sup, "l2": l2, "height": height}
    return ok, f"identity error {worst:.1e}; flat polynomials ok={ok}", {
        "identity_error": worst, "flat": flat}


@criterion(11, "Luxemburg norms and the Holder pairing")
def luxemburg_check():
    rng = np.random.default_rng(11)
    worst = 0.0
    for p in (1, 2, 3):
        phi = gauge(f"power:{p}")
        for _ in range(100):
            m = int(rng.integers(1, 40))
            v = rng.normal(size=m) + 1j * rng.normal(size=m)
            c = CoeffSeq.from_arrays(rng.choice(1000, size=m, replace=False), v)
            exact = float(np.sum(np.abs(c.values) ** p) ** (1.0 / p))
            worst = max(worst, abs(luxemburg_norm(phi, c) - exact) / exact)
    half = scaled_gauge(gauge("power:2"), 0.5)
    dual = conjugate(half, search_cap=1e3)
    bad = 0
    for _ in range(100):
        m = int(rng.integers(1, 30))
        a, b = rng.normal(size=m), rng.normal(size=m)
        lhs = float(np.sum(np.abs(a * b)))
        rhs = 2.0 * luxemburg_norm(half, a) * luxemburg_norm(dual, b)
        bad += lhs > rhs * (1 + 1e-9)
    ok = worst <= 1e-8 and bad == 0
    return ok, f"max relative error {worst:.1e}; Holder violations {bad}/100", {
        "max_relative_error": worst, "holder_violations": int(bad)}


@criterion(12, "Concentration of Riesz products")
def concentration():
    out = {}
    for name, amps in (("j^-1/2", [j ** -0.5 for j in range(1, 13)]),
                       ("2^-j", [2.0 ** -j for j in range(1, 13)])):
        p = riesz.riesz_product(riesz.geometric_params(tuple(amps), 3))
        curve = dict(riesz.singularity_diagnostic(p, 2, 0.9, [6, 12]))
        out[name] = {"level6": curve[6], "level12": curve[12], "ratio": curve[12] / curve[6]}
    ok = out["j^-1/2"]["ratio"] <= 0.5 and out["2^-j"]["ratio"] >= 0.5
    return ok, (f"j^-1/2 ratio {out['j^-1/2']['ratio']:.3f} (need <= 0.5); "
                f"2^-j ratio {out['2^-j']['ratio']:.5f} (need >= 0.5)"), out


@criterion(13, "Packing sequences")
def packing():
    seq = packing_linear(gauge("power:1.5"), 100_000)
    sum_a = math.fsum(seq.terms)
    sum_phi = math.fsum(seq.terms ** 1.5)
    blocks = seq.certificate()["blocks_used"]
    bound = 2.0 * math.fsum(1.0 / n ** 2 for n in range(1, blocks + 1))
    ok = sum_a > 20 and sum_phi <= bound
    spot = 0.0
    for p, expect in ((2, lambda n: 1.0 / n ** 2), (3, lambda n: 1.0 / n)):
        tn = packing_linear(gauge(f"power:{p}"), 2000).provenance["t_n"]
        spot = max(spot, max(abs(t - expect(n)) / expect(n) for n, t in enumerate(tn, 1)))
    ok &= spot <= 1e-12
    return ok, (f"sum a = {sum_a:.2f} (need > 20), "
                f"sum Phi = {sum_phi:.3f} (need <= {bound:.3f}), "
                f"closed-form t_n error {spot:.1e}"), {
        "sum_a": sum_a, "sum_phi": sum_phi, "bound": bound, "t_n_error": spot}


@criterion(14, "Flat-polynomial blocks for Psi(t) = t^2 log(e + 1/t)")
def katz1():
    A = [2.0 ** -j for j in range(1, 13)]
    f, c = katznelson.build_katz1(gauge("power-log:2,-1"), A, 12)
    d = c.data
    return c.passed, (f"min block {min(d['block_sums']):.3f}, total "
                      f"{sum(d['block_sums']):.3f}, sup {d['grid_sup']:.4f}"), dict(d)


@criterion(15, "Growth of a lacunary partial sum near 1")
def hadamard():
    J = 2 ** 12
    seq = packing_linear(gauge("power:1.5"), J)
    fs = LacunaryFreqs(tuple(2 ** j for j in range(1, J + 1)), 2)
    series, c = riesz.hadamard_series(seq, fs, J)
    am = c.data["arc_max"]
    ratio = am[J] / am[J // 4]
    par = abs(c.data["l2_grid"] - c.data["l2_coefficients"])
    ok = ratio >= 1.5 and par <= 1e-8 * max(1.0, c.data["l2_coefficients"])
    return ok, (f"arc max {am[J // 4]:.3f} -> {am[J]:.3f}, ratio {ratio:.4f} (need >= 1.5); "
                f"Parseval gap {par:.1e}"), {"arc_max": am, "ratio": ratio,
                                              "parseval_gap": par}


def run_all(numbers=None, echo=None):
    results = []
    for n in sorted(CRITERIA if numbers is None else numbers):
        r = CRITERIA[n]()
        if echo:
            echo(r.line())
        results.append(r)
    return results
