"""Command line entry point: classify, simulate, certify, sweep, delta0."""

import argparse
import csv
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import config as cfgio
from .bounds import certify
from .dynamics import IntegrationConfig, integrate, load_record
from .errors import Align1DError
from .io import dumps_json, fmt
from .scenario import discretize, two_block_delta0, two_block_scenario
from .threshold import FLAT, NONMONO, classify, fit_modulus, modulus_check, prepare

log = logging.getLogger("align1d")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FLAT = 10
EXIT_NONMONO = 20
EXIT_BLOWUP = 30
EXIT_CERT_FAIL = 40

SWEEP_PARAMS = ("delta", "epsilon", "kappa", "s", "n_per_interval")


def _setup(sc, n=None):
    markers = discretize(sc, n_per_interval=n)
    prepare(sc, markers)
    return markers


def _modulus(sc, markers):
    if not sc.modulus:
        return None
    mu, R1 = sc.modulus["mu"], sc.modulus["R1"]
    c = sc.modulus.get("c")
    if c is None:
        c = fit_modulus(markers, mu, R1, psi=markers.psi_discrete)
    return modulus_check(markers, mu, c, R1, sc.kernel, psi=markers.psi_discrete)


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _integration(args):
    return IntegrationConfig(order=args.order, T=args.T, dt=args.dt, method=args.method,
                             stride=args.stride)


def cmd_classify(args):
    sc = cfgio.load(args.config)
    markers = _setup(sc, args.n)
    report = classify(sc, markers)
    mod = _modulus(sc, markers)
    if mod is not None:
        report.modulus = {"mu": mod.mu, "c": mod.c, "R1": mod.R1,
                          "satisfied": mod.satisfied, "admissible": mod.admissible}
    doc = dict(report.to_dict(), scenario_hash=cfgio.scenario_hash(sc))
    text = dumps_json(doc)
    if args.out:
        (_out_dir(args) / "threshold.json").write_text(text)
    else:
        sys.stdout.write(text)
    return {NONMONO: EXIT_NONMONO, FLAT: EXIT_FLAT}.get(report.classification, EXIT_OK)


def _simulate(sc, n, icfg):
    markers = _setup(sc, n)
    record = integrate(markers.copy(), sc.kernel, sc.kappa, icfg)
    return markers, record


def cmd_simulate(args):
    sc = cfgio.load(args.config)
    markers, record = _simulate(sc, args.n, _integration(args))
    record.meta["scenario_hash"] = cfgio.scenario_hash(sc)
    record.meta["n_markers"] = len(markers)
    out = _out_dir(args)
    record.write(out / "trajectory.csv", out / "trajectory.json")
    term = record.terminal
    log.info("terminal event %s at t=%s", term["kind"], term["time"])
    return EXIT_BLOWUP if record.blew_up else EXIT_OK


def cmd_certify(args):
    sc = cfgio.load(args.config)
    rec_dir = Path(args.record)
    record = load_record(rec_dir / "trajectory.csv", rec_dir / "trajectory.json")
    h = cfgio.scenario_hash(sc)
    if record.meta.get("scenario_hash") != h:
        raise Align1DError("record was produced from a different scenario (hash mismatch)")
    n_markers = record.meta.get("n_markers")
    n = None if n_markers is None else n_markers // len(sc.intervals)
    markers = _setup(sc, n)
    if len(markers) != record.X.shape[1]:
        raise Align1DError("record marker count does not match the scenario")
    report = classify(sc, markers)
    cert = certify(record, sc, markers, report, _modulus(sc, markers))
    doc = dict(cert.to_dict(), scenario_hash=h)
    (_out_dir(args) / "certificate.json").write_text(dumps_json(doc))
    return EXIT_OK if cert.passed else EXIT_CERT_FAIL


def _sweep_scenario(sc, param, value):
    if param in ("delta", "epsilon"):
        if sc.two_block is None:
            raise Align1DError(f"sweeping {param} needs a [two_block] scenario")
        eps, delta = sc.two_block
        eps, delta = (value, delta) if param == "epsilon" else (eps, value)
        new = two_block_scenario(eps, delta, sc.kernel, sc.kappa, n_per_interval=sc.n_per_interval,
                           rule=sc.rule)
        return replace(new, modulus=sc.modulus)
    if param == "kappa":
        return replace(sc, kappa=value)
    if param == "s":
        return replace(sc, kernel=replace(sc.kernel, s=value))
    if value != int(value):
        raise Align1DError("n_per_interval must be an integer")
    return replace(sc, n_per_interval=int(value))


def _sweep_row(sc, icfg):
    markers, record = _simulate(sc, None, icfg)
    report = classify(sc, markers)
    cert = certify(record, sc, markers, report, _modulus(sc, markers))
    margins = [c.worst_margin for c in cert.checks if c.applicable]
    term = record.terminal
    return {"classification": report.classification, "event": term["kind"],
            "event_time": term["time"], "min_margin": min(margins) if margins else math.inf,
            "certified": cert.passed}


def cmd_sweep(args):
    sc = cfgio.load(args.config)
    values = [float(v) for v in args.sweep_values.split(",") if v.strip()]
    if not values:
        raise Align1DError("--sweep-values is empty")
    icfg = _integration(args)
    cols = ["value", "classification", "event", "event_time", "min_margin", "certified", "error"]
    rows = []
    for v in values:
        row = {"value": v}
        try:
            row.update(_sweep_row(_sweep_scenario(sc, args.sweep_param, v), icfg))
        except (Align1DError, ValueError) as exc:
            log.warning("sweep value %s failed: %s", v, exc)
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    out = _out_dir(args)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([fmt(r[c]) if isinstance(r.get(c), float) else r.get(c, "") for c in cols])
    (out / "sweep.json").write_text(dumps_json({
        "scenario_hash": cfgio.scenario_hash(sc), "param": args.sweep_param, "rows": rows}))
    return EXIT_OK


def cmd_delta0(args):
    sc = cfgio.load(args.config)
    eps = args.epsilon if args.epsilon is not None else (sc.two_block[0] if sc.two_block else None)
    if eps is None:
        raise Align1DError("delta0 needs --epsilon or a [two_block] scenario")
    d0 = two_block_delta0(eps, sc.kernel, sc.kappa, tol=args.tol)
    text = dumps_json({"epsilon": eps, "delta0": d0, "kappa": sc.kappa,
                       "scenario_hash": cfgio.scenario_hash(sc)})
    if args.out:
        (_out_dir(args) / "delta0.json").write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="align1d", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--config", required=True, help="scenario TOML file")
        sp.add_argument("--out", required=out_required, help="output directory")
        sp.add_argument("--n", type=int, default=None, help="markers per interval")

    def integ(sp):
        sp.add_argument("--T", type=float, default=1.0)
        sp.add_argument("--dt", type=float, default=1e-3)
        sp.add_argument("--order", choices=("first", "second", "both"), default="second")
        sp.add_argument("--method", choices=("rk4", "rk45"), default="rk4")
        sp.add_argument("--stride", type=float, default=1e-2, help="output sampling interval")

    sp = sub.add_parser("classify", help="classify the initial data")
    common(sp, out_required=False)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("simulate", help="integrate the marker system")
    common(sp)
    integ(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("certify", help="check a simulated record against the bounds")
    common(sp)
    sp.add_argument("--record", required=True, help="directory written by simulate")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("sweep", help="simulate and certify over a parameter range")
    common(sp)
    integ(sp)
    sp.add_argument("--sweep-param", choices=SWEEP_PARAMS, required=True)
    sp.add_argument("--sweep-values", required=True, help="comma separated values")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("delta0", help="critical half-gap of the two-interval configuration")
    common(sp, out_required=False)
    sp.add_argument("--epsilon", type=float, default=None)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.set_defaults(func=cmd_delta0)
    return p


def main(argv=None):
    logging.basicConfig(level=os.environ.get("ALIGN1D_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors share the generic error code
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    try:
        return args.func(args)
    except (Align1DError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
