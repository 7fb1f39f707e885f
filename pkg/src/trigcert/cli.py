"""Command-line front end: ``trigcert <command> [options]``.

Every command writes its artifacts into the output directory (``--out``, or
$TRIGCERT_OUT, or ./trigcert-out) and exits 0 when all certificates pass,
1 on a certificate miss, 2 on usage errors and 3 on resource limits.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, acceptance, bump, katznelson, riesz
from .certificate import Certificate, dumps, holds
from .errors import ParameterError, TrigcertError
from .orlicz import gauge, weight
from .sequences import (LacunaryFreqs, packing_linear, packing_square, weighted_sequence)
from .trig import fejer, write_coeff_csv

OUT_ENV = "TRIGCERT_OUT"


@dataclass
class RunRecord:
    command: str
    config: dict
    certificates: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    version: str = __version__

    @property
    def passed(self):
        return all(c.passed for c in self.certificates)

    def to_dict(self):
        return {"command": self.command, "config": self.config, "version": self.version,
                "passed": self.passed, "artifacts": self.artifacts, "timings": self.timings,
                "certificates": [c.kind for c in self.certificates]}


def emit_plot_data(record, key, path):
    """Write record.series[key] = (header, rows) as CSV; empty rows give a header-only file."""
    header, rows = record.series[key]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x
                         for x in row])
    record.artifacts.append(str(path))
    return path


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(json.dumps({"error": "usage_error", "message": message,
                                     "details": {}}) + "\n")
        raise SystemExit(2)


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def build_parser():
    p = _Parser(prog="trigcert", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./trigcert-out)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sequence", help="packing or weighted sequences")
    s.add_argument("--kind", choices=["packing-linear", "packing-square", "weighted"],
                   default="packing-linear")
    s.add_argument("--gauge", default="power:1.5")
    s.add_argument("--weight", default="power:0.5")
    s.add_argument("--count", type=_nonneg_int, default=1000)
    s.add_argument("--density", type=float, default=None)

    s = sub.add_parser("riesz", help="named Riesz products")
    s.add_argument("--kind", choices=riesz.KINDS, required=True)
    s.add_argument("--gauge", default="power:1.5")
    s.add_argument("--weight", default="power:1")
    s.add_argument("--levels", type=_nonneg_int, default=8)
    s.add_argument("--oversample", type=int, default=2)

    s = sub.add_parser("hadamard", help="lacunary partial sums with N_j = 2^j")
    s.add_argument("--gauge", default="power:1.5")
    s.add_argument("--J", type=_nonneg_int, default=1024)

    s = sub.add_parser("bump", help="localizer with a certified coefficient sum")
    s.add_argument("--space", choices=["orlicz", "weighted"], default="orlicz")
    s.add_argument("--gauge", default="power:1.5")
    s.add_argument("--weight", default="power:0.5")
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--center", type=float, default=0.0, help="centre in turns")

    s = sub.add_parser("carve-demo", help="carve zero arcs out of a Fejer kernel")
    s.add_argument("--gauge", default="power:1.5")
    s.add_argument("--fejer", type=_nonneg_int, default=16)
    s.add_argument("--eps", type=float, default=0.05)
    s.add_argument("--steps", type=_nonneg_int, default=3)

    for name, hlp in (("katznelson", "one random-sign block"),
                      ("assemble", "sum of random-sign blocks")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("--weight", default="power:0.5")
        s.add_argument("--gamma", type=float, default=0.08)
        s.add_argument("--n-floor", type=int, default=64)
        s.add_argument("--budget", type=float, default=1e3)
        s.add_argument("--span", type=int, default=1024 if name == "katznelson" else 8)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--trials", type=int, default=64)
        s.add_argument("--slack", type=float, default=4.0)
        if name == "assemble":
            s.add_argument("--J", type=_nonneg_int, default=3)

    s = sub.add_parser("katz1", help="flat-polynomial blocks with A_j = base^-j")
    s.add_argument("--gauge", default="power-log:2,-1")
    s.add_argument("--J", type=_nonneg_int, default=4)
    s.add_argument("--base", type=float, default=2.0)

    s = sub.add_parser("lacunary-dist", help="coefficients c_j at +-2^j")
    s.add_argument("--gauge", default="power:2.5")
    s.add_argument("--J", type=_nonneg_int, default=1024)

    s = sub.add_parser("verify-all", help="run the acceptance suite")
    s.add_argument("--profile", choices=["desk"], default="desk")
    s.add_argument("--only", type=int, nargs="*", default=None)
    return p


# ---------------------------------------------------------------------------
# Commands


def _write_cert(rec, out, cert, name="certificate.json"):
    path = out / name
    path.write_text(cert.to_json() + "\n")
    rec.certificates.append(cert)
    rec.artifacts.append(str(path))


def cmd_sequence(args, rec, out):
    if args.count == 0:
        raise ParameterError("count must be positive", count=0)
    kw = {} if args.density is None else {"density": args.density}
    if args.kind == "weighted":
        seq = weighted_sequence(weight(args.weight), max(args.count, 2))
    else:
        gen = packing_linear if args.kind == "packing-linear" else packing_square
        seq = gen(gauge(args.gauge), args.count, **kw)
    path = out / "sequence.csv"
    seq.to_csv(path)
    rec.artifacts.append(str(path))
    cert = Certificate("sequence", data=dict(seq.certificate(), kind=args.kind,
                                             count=len(seq)))
    _write_cert(rec, out, cert)
    n = np.arange(1, len(seq) + 1)
    rec.series["partial_sums"] = (["n", "sum_a"], list(zip(n.tolist(), seq.running_sum)))
    emit_plot_data(rec, "partial_sums", out / "partial_sums.csv")


def cmd_riesz(args, rec, out):
    p, cert = riesz.build_named(args.kind, args.levels, phi=gauge(args.gauge),
                                weight=weight(args.weight), oversample=args.oversample)
    write_coeff_csv(p.coeffs, out / "coeffs.csv")
    rec.artifacts.append(str(out / "coeffs.csv"))
    riesz.write_blocks_json(p, out / "blocks.json")
    rec.artifacts.append(str(out / "blocks.json"))
    _write_cert(rec, out, cert)
    rec.series["concentration"] = (["level", "measure"], cert.curves.get("concentration", []))
    emit_plot_data(rec, "concentration", out / "concentration.csv")
    am = cert.data.get("arc_max", {})
    rec.series["arc_max"] = (["level", "arc_max"], sorted(am.items()))
    emit_plot_data(rec, "arc_max", out / "arc_max.csv")


def cmd_hadamard(args, rec, out):
    if args.J == 0:
        raise ParameterError("J must be positive", J=0)
    seq = packing_linear(gauge(args.gauge), args.J)
    fs = LacunaryFreqs(tuple(2 ** j for j in range(1, args.J + 1)), 2)
    _, cert = riesz.hadamard_series(seq, fs, args.J, phi=gauge(args.gauge))
    _write_cert(rec, out, cert)
    rec.series["arc_max"] = (["J", "arc_max"], cert.curves.get("arc_max", []))
    emit_plot_data(rec, "arc_max", out / "arc_max.csv")


def _psi(args):
    if args.space == "orlicz":
        return bump.psi_orlicz(gauge(args.gauge), args.eps, args.center)
    return bump.psi_weighted(weight(args.weight), args.eps, args.center)


def cmd_bump(args, rec, out):
    psi = _psi(args)
    path = out / "psi.json"
    path.write_text(dumps(psi.to_dict()) + "\n")
    rec.artifacts.append(str(path))
    rec.certificates.append(psi.certificate)
    n, mag, env = psi.chi.decay_curve()
    step = max(1, len(n) // 4096)
    rec.series["decay"] = (["n", "abs_coeff", "envelope"],
                           list(zip(n[::step].tolist(), mag[::step], env[::step])))
    emit_plot_data(rec, "decay", out / "decay.csv")


def cmd_carve_demo(args, rec, out):
    phi = gauge(args.gauge)
    f = fejer(args.fejer)
    centers = [(k + 0.5) / (args.steps + 1) - 0.5 for k in range(args.steps)]
    summary = []
    tol = bump.ZERO_TOL
    for c in centers:
        # the exact product is nonnegative; the kept coefficients are within
        # the dropped l1 mass of it
        r = bump.carve(f, c, args.eps, ("orlicz", phi), negativity_tol=tol)
        tol = bump.ZERO_TOL + r.certificate.data["dropped_l1"]
        rec.certificates.append(r.certificate)
        summary.append(r.certificate.to_dict())
        f = r.g
    path = out / "carve.json"
    path.write_text(dumps({"centers": centers, "steps": summary}) + "\n")
    rec.artifacts.append(str(path))
    write_coeff_csv(f, out / "carved.csv")
    rec.artifacts.append(str(out / "carved.csv"))
    rec.series["distance"] = (["step", "distance"],
                              [(k + 1, s["data"]["distance"]) for k, s in enumerate(summary)])
    emit_plot_data(rec, "distance", out / "distance.csv")


def _katz_config(args):
    return katznelson.KatzConfig(budget=args.budget, index_span=args.span, slack=args.slack,
                                 trials=args.trials, seed=args.seed)


def cmd_katznelson(args, rec, out):
    T, cert = katznelson.build_T_gamma(weight(args.weight), args.gamma, args.n_floor,
                                       _katz_config(args))
    write_coeff_csv(T, out / "coeffs.csv")
    rec.artifacts.append(str(out / "coeffs.csv"))
    _write_cert(rec, out, cert)
    path = out / "record.json"
    path.write_text(dumps(katznelson.t_gamma_record(cert)) + "\n")
    rec.artifacts.append(str(path))


def cmd_assemble(args, rec, out):
    gammas = [args.gamma * 2.0 ** -j for j in range(1, args.J + 1)]
    f, cert = katznelson.assemble_continuous(weight(args.weight), gammas, args.J,
                                             N_floor=args.n_floor, config=_katz_config(args))
    write_coeff_csv(f, out / "coeffs.csv")
    rec.artifacts.append(str(out / "coeffs.csv"))
    _write_cert(rec, out, cert)
    tot = cert.data.get("weighted_totals", [])
    rec.series["weighted_totals"] = (["J", "total"], list(enumerate(tot, start=1)))
    emit_plot_data(rec, "weighted_totals", out / "weighted_totals.csv")


def cmd_katz1(args, rec, out):
    A = [args.base ** -j for j in range(1, args.J + 1)]
    f, cert = katznelson.build_katz1(gauge(args.gauge), A, args.J)
    write_coeff_csv(f, out / "coeffs.csv")
    rec.artifacts.append(str(out / "coeffs.csv"))
    _write_cert(rec, out, cert)


def cmd_lacunary_dist(args, rec, out):
    series, cert = katznelson.lacunary_distribution(gauge(args.gauge), args.J)
    path = out / "coefficients.csv"
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["j", "frequency", "value"])
        for j, v in enumerate(series.amplitudes, start=1):
            wr.writerow([j, f"2^{j}", repr(float(v))])
    rec.artifacts.append(str(path))
    _write_cert(rec, out, cert)
    c = series.amplitudes
    rec.series["l2_partial"] = (["j", "sum_c2"],
                                list(zip(range(1, len(c) + 1), np.cumsum(c ** 2))))
    emit_plot_data(rec, "l2_partial", out / "l2_partial.csv")


def cmd_verify_all(args, rec, out):
    results = acceptance.run_all(args.only, echo=print)
    path = out / "acceptance.json"
    path.write_text(dumps([r.to_dict() for r in results]) + "\n")
    rec.artifacts.append(str(path))
    cert = Certificate("acceptance")
    for r in results:
        cert.add(holds(f"criterion_{r.number}", r.passed))
    rec.certificates.append(cert)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")


COMMANDS = {
    "sequence": cmd_sequence, "riesz": cmd_riesz, "hadamard": cmd_hadamard,
    "bump": cmd_bump, "carve-demo": cmd_carve_demo, "katznelson": cmd_katznelson,
    "assemble": cmd_assemble, "katz1": cmd_katz1, "lacunary-dist": cmd_lacunary_dist,
    "verify-all": cmd_verify_all,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = Path(args.out or os.environ.get(OUT_ENV) or "trigcert-out") / args.command
    config = {k: v for k, v in vars(args).items() if k != "out"}
    rec = RunRecord(args.command, config)
    t0 = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, rec, out)
    except TrigcertError as err:
        sys.stderr.write(json.dumps(err.to_dict()) + "\n")
        return err.exit_status
    rec.timings["total_seconds"] = time.perf_counter() - t0
    (out / "run.json").write_text(dumps(rec.to_dict()) + "\n")
    for c in rec.certificates:
        for chk in c.failures():
            sys.stderr.write(json.dumps({"certificate": c.kind, "failed": chk.to_dict()}) + "\n")
    return 0 if rec.passed else 1


if __name__ == "__main__":
    sys.exit(main())
