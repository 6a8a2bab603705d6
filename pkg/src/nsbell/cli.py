"""Command-line front end.

Exit codes: 0 success/pass, 1 semantic failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import correlations as corr
from . import geometry, quantum
from .core import DEFAULT_TOL, EXACT_TOL, box_to_json, load_box
from .measurements import MeasurementFamily, bell_probs

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
# angles typed to four decimals (0.7854) overshoot pi/4 slightly; snap those to pi/4
ALPHA_SNAP = 1e-4


class InputError(Exception):
    pass


def _family(args) -> MeasurementFamily:
    lam = getattr(args, "lam", None)
    alpha = _alpha(args, required=False)
    if lam is not None and alpha is not None:
        raise InputError("--lambda and --alpha are mutually exclusive")
    try:
        if lam is not None:
            return MeasurementFamily.noisy(lam)
        if alpha is not None:
            return MeasurementFamily.nonmax(alpha)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return MeasurementFamily.ideal()


def _alpha(args, required: bool = True) -> float | None:
    alpha = getattr(args, "alpha", None)
    k = getattr(args, "alpha_sixteenths", None)
    if alpha is not None and k is not None:
        raise InputError("--alpha and --alpha-sixteenths are mutually exclusive")
    if k is not None:
        alpha = k * math.pi / 16
    if alpha is not None and math.pi / 4 < alpha <= math.pi / 4 + ALPHA_SNAP:
        alpha = math.pi / 4
    if alpha is None and required:
        raise InputError("one of --alpha / --alpha-sixteenths is required")
    return alpha


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc}") from None


def cmd_validate(args) -> int:
    try:
        box = load_box(args.box)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from None
    family = _family(args)
    if args.level == 3 and family.kind == "nonmax":
        raise InputError("level 3 is not defined for the non-maximally entangled family")
    report = corr.membership(box, args.level, family, args.tol)
    if args.json:
        print(json.dumps(report.as_dict(), indent=2))
    else:
        status = "PASS" if report.passed else "FAIL"
        print(f"level {args.level} ({family}): {status}")
        if report.outcome_probs is not None:
            print("outcome probabilities: " + ", ".join(f"p_{k}={p:.6g}" for k, p in enumerate(report.outcome_probs, 1)))
        for v in report.violations:
            print(f"  {v.kind:<13} {v.where:<40} {v.magnitude:.3g}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_scan_ball(args) -> int:
    if not (0 <= args.lam < 1):
        raise InputError("--lambda must lie in [0, 1)")
    if args.grid < 2:
        raise InputError("--grid must be at least 2")
    slice_z = None
    if args.slice:
        axis, _, value = args.slice.partition("=")
        if axis.strip() != "z":
            raise InputError("--slice supports only z=<p_z>")
        try:
            slice_z = float(value)
        except ValueError:
            raise InputError(f"bad slice value {value!r}") from None
        if not 0 <= slice_z <= 1:
            raise InputError("slice value must lie in [0, 1]")
    region = geometry.scan_local_region(args.lam, args.grid, args.tol, slice_z)
    _emit(region.to_csv(), args.out)
    return EXIT_OK


def cmd_scan_lh(args) -> int:
    alpha = _alpha(args)
    if not 0 <= alpha <= math.pi / 4:
        raise InputError("alpha must lie in [0, pi/4]")
    if args.grid < 2:
        raise InputError("--grid must be at least 2")
    region = geometry.scan_lh_region(alpha, args.grid, args.tol)
    _emit(region.to_csv(), args.out)
    return EXIT_OK


def cmd_chsh(args) -> int:
    try:
        spec = corr.ChshSpec(args.a1, args.a2, args.b1, args.b2)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.exact:
        if args.level not in (1, 2):
            raise InputError("--exact needs --level 1 or 2")
        res = corr.lp_max_chsh(spec, args.level)
        value, box = res.value, res.box()
        summary = {"mode": "exact", "level": args.level, "spec": str(spec), "value": value}
    else:
        if args.level != 3:
            raise InputError("sampling needs --level 3 (use --exact for levels 1 and 2)")
        sample = corr.sample_level3(trials=args.trials, seed=args.seed, walkers=args.walkers)
        values = np.array([corr.chsh_value(b, spec) for b in sample.boxes])
        best = int(values.argmax())
        value, box = float(values[best]), sample.boxes[best]
        overall = float(corr.max_chsh_over_specs(sample.correlation_matrices()).max())
        summary = {
            "mode": "sampled",
            "level": 3,
            "spec": str(spec),
            "trials": args.trials,
            "seed": args.seed,
            "value": value,
            "max_over_all_specs": overall,
            "tsirelson": corr.TSIRELSON,
            "warnings": sample.warnings,
        }
        for w in sample.warnings:
            print(f"warning: {w}", file=sys.stderr)
    if args.witness:
        _emit(json.dumps(box_to_json(box), indent=2) + "\n", args.witness)
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        print(repr(round(value, 12)))
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.samples < 1:
        raise InputError("--samples must be at least 1")
    ident = quantum.projector_identity_check()
    eq3, level3_fail = 0.0, 0
    for i in range(args.samples):
        rho = quantum.random_state(args.seed + i, rank=1 + i % 4)
        box = quantum.box_from_state(rho)
        diff = np.subtract(bell_probs(box), quantum.bell_probs_quantum(rho))
        eq3 = max(eq3, float(np.abs(diff).max()))
        if not corr.membership(box, 3, tol=max(args.tol, DEFAULT_TOL)).passed:
            level3_fail += 1
    ok = max(ident.values()) <= args.tol and eq3 <= args.tol and level3_fail == 0
    report = {
        "samples": args.samples,
        "seed": args.seed,
        "tol": args.tol,
        "projector_identity_deviation": ident,
        "max_parity_relation_residual": eq3,
        "level3_failures": level3_fail,
        "passed": ok,
    }
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        for k, v in ident.items():
            print(f"projector identity {k}: {v:.3g}")
        print(f"max parity-relation residual: {eq3:.3g}")
        print(f"level-3 failures: {level3_fail}/{args.samples}")
        print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def _add_alpha(p):
    p.add_argument("--alpha", type=float, help="basis angle in radians, 0..pi/4")
    p.add_argument("--alpha-sixteenths", type=int, dest="alpha_sixteenths", metavar="K", help="alpha = K*pi/16")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsbell", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a box file against a membership level")
    p.add_argument("box", help="box JSON file")
    p.add_argument("--level", type=int, choices=(1, 2, 3), default=3)
    p.add_argument("--lambda", type=float, dest="lam", help="noisy Bell measurement")
    _add_alpha(p)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("scan-ball", help="local state space for the noisy Bell measurement (CSV)")
    p.add_argument("--lambda", type=float, dest="lam", default=0.0)
    p.add_argument("--grid", type=int, default=41)
    p.add_argument("--slice", help="emit the 2-D slice z=<p_z> only")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_scan_ball)

    p = sub.add_parser("scan-lh", help="allowed inner-cube sizes (h, l) for a nonmax basis (CSV)")
    _add_alpha(p)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_scan_lh)

    p = sub.add_parser("chsh", help="maximize CHSH exactly (levels 1, 2) or by sampling (level 3)")
    p.add_argument("--level", type=int, choices=(1, 2, 3), default=2)
    p.add_argument("--exact", action="store_true")
    for name, default in (("a1", "X"), ("a2", "Z"), ("b1", "X"), ("b2", "Z")):
        p.add_argument(f"--{name}", default=default, choices=("X", "Y", "Z"))
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--walkers", type=int, default=1)
    p.add_argument("--witness", help="write the optimal/best box as JSON")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("oracle", help="cross-check against two-qubit quantum mechanics")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=EXACT_TOL)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
