"""Command-line entry point: ``certicd <subcommand> ...``.

Machine-readable results go to stdout (or the ``--out`` file); progress and
diagnostics go to stderr. Exit codes: 0 success, 1 margin check failed,
2 guarantee failure or infeasible-at-this-scale, 64 bad flags, 66 unreadable
input file, 73 output file cannot be written.
"""

import argparse
import logging
import math
import sys

import numpy as np

from . import stats
from .experiments import estimate_delta_max, evaluate, sweep, sweep_csv_text, verify_margin
from .featuremap import FeatureCapError, MixedCellError
from .lcd import (DEFAULT_ITERATION_CAP, DEFAULT_M0, DEFAULT_MAX_SAMPLES, MODES,
                  InfeasibleAtThisScale, LbcdFailure, TrainingFailure, adaptive_lcd, lbcd)
from .modelfile import ModelFileError, dumps, load_model
from .scenes import FORBIDDEN, SceneFormatError, load_scene
from .svm import SeparabilityError

EX_OK = 0
EX_CHECK_FAILED = 1
EX_GUARANTEE = 2
EX_USAGE = 64
EX_NOINPUT = 66
EX_CANTCREAT = 73

log = logging.getLogger("certicd")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _decimal_list(text):
    # Locale-independent: only '.' is a decimal separator.
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated decimals, got {text!r}") from None


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser = _Parser(prog="certicd", description="Learned collision detection with statistical guarantees.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    p = add("train", help="run the adaptive (delta, m) search and save a model")
    p.add_argument("--scene", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--xi", type=float, required=True)
    p.add_argument("--delta0", type=float)
    p.add_argument("--m0", type=int, default=DEFAULT_M0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=MODES, default="certified")
    p.add_argument("--iteration-cap", type=int, default=DEFAULT_ITERATION_CAP)
    p.add_argument("--max-samples", type=int, default=DEFAULT_MAX_SAMPLES)
    p.add_argument("--single", action="store_true",
                   help="run one (delta0, m0) attempt instead of the adaptive search")
    p.add_argument("--out", default="model.lcd")

    p = add("query", help="classify one configuration")
    p.add_argument("--model", required=True)
    p.add_argument("--config", type=_decimal_list, required=True)

    p = add("evaluate", help="held-out loss of a model against the exact oracle")
    p.add_argument("--model", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int)

    p = add("sweep", help="interior fraction / interior error / sample bound over delta")
    p.add_argument("--scene", required=True)
    p.add_argument("--epsilons", type=_decimal_list, default=[0.05, 0.1, 0.2])
    p.add_argument("--delta-min", type=float, required=True)
    p.add_argument("--delta-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--log-spacing", action="store_true")
    p.add_argument("--xi", type=float, default=0.05)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = add("verify-margin", help="check the reference separator's feature-space margin")
    p.add_argument("--scene", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--probes", type=int, default=9)

    p = add("complexity", help="evaluate the sample-complexity bound")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--xi", type=float, required=True)

    p = add("delta-max", help="estimate the largest admissible clearance")
    p.add_argument("--scene", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _read_scene(path):
    try:
        return load_scene(path)
    except OSError as exc:
        raise _InputError(f"cannot read scene {path!r}: {exc}") from exc
    except SceneFormatError as exc:
        raise _InputError(f"bad scene file {path!r}: {exc}") from exc


def _read_model(path):
    try:
        return load_model(path)
    except OSError as exc:
        raise _InputError(f"cannot read model {path!r}: {exc}") from exc
    except ModelFileError as exc:
        raise _InputError(f"bad model file {path!r}: {type(exc).__name__}: {exc}") from exc


class _InputError(Exception):
    pass


class _OutputError(Exception):
    pass


def _write(path, data):
    try:
        mode = "wb" if isinstance(data, bytes) else "w"
        with open(path, mode) as fh:
            fh.write(data)
    except OSError as exc:
        raise _OutputError(f"cannot write {path!r}: {exc}") from exc


def _print_report(report, out):
    for line in report.lines():
        print(line, file=out)


def cmd_train(args, out):
    scene = _read_scene(args.scene)
    try:
        if args.single:
            delta = args.delta0 if args.delta0 is not None else math.sqrt(scene.d) / 4.0
            lcd = lbcd(scene, args.epsilon, args.xi, delta, args.m0, args.seed, mode=args.mode)
        else:
            lcd = adaptive_lcd(scene, args.epsilon, args.xi, args.seed, m0=args.m0, delta0=args.delta0,
                               iteration_cap=args.iteration_cap, mode=args.mode,
                               max_samples=args.max_samples)
    except LbcdFailure as fail:
        log.error("%s", fail)
        print("status=fail", file=out)
        _print_report(fail.report, out)
        return EX_GUARANTEE
    except (InfeasibleAtThisScale, FeatureCapError) as exc:
        log.error("%s", exc)
        print("status=infeasible-at-this-scale", file=out)
        for entry in getattr(exc, "trace", []):
            print(f"trace={entry.m}@{entry.delta!r}:{entry.outcome}", file=out)
        return EX_GUARANTEE
    except (SeparabilityError, TrainingFailure) as exc:
        log.error("training failed: %s", exc)
        print("status=training-failed", file=out)
        return EX_GUARANTEE
    _write(args.out, dumps(lcd))
    log.info("trained %s model: delta=%g m=%d, n=%d", lcd.mode, lcd.provenance["delta"],
             lcd.provenance["m"], lcd.featuremap.n)
    print("status=ok", file=out)
    print(f"model={args.out}", file=out)
    return EX_OK


def cmd_query(args, out):
    lcd = _read_model(args.model)
    x = np.asarray(args.config, dtype=float)
    if x.shape != (lcd.d,):
        raise UsageError(f"--config needs {lcd.d} coordinates, got {x.size}")
    if np.any(x < 0) or np.any(x > 1):
        raise UsageError("--config coordinates must lie in [0, 1]")
    print("FORBIDDEN" if lcd.classify(x) == FORBIDDEN else "FREE", file=out)
    return EX_OK


def cmd_evaluate(args, out):
    lcd = _read_model(args.model)
    scene = _read_scene(args.scene)
    report = evaluate(lcd, scene, test_count=args.samples, seed=args.seed)
    _print_report(report, out)
    return EX_OK


def cmd_sweep(args, out):
    scene = _read_scene(args.scene)
    if not 0 < args.delta_min < args.delta_max or args.steps < 1:
        raise UsageError("need 0 < --delta-min < --delta-max and --steps >= 1")
    space = np.geomspace if args.log_spacing else np.linspace
    grid = space(args.delta_min, args.delta_max, args.steps) if args.steps > 1 else np.array([args.delta_min])
    rows = sweep(scene, args.epsilons, grid, xi=args.xi, samples=args.samples, seed=args.seed)
    text = sweep_csv_text(rows)
    if args.out:
        _write(args.out, text)
        print(f"csv={args.out}", file=out)
    else:
        out.write(text)
    return EX_OK


def cmd_verify_margin(args, out):
    scene = _read_scene(args.scene)
    try:
        observed, bound = verify_margin(scene, args.delta, samples=args.samples, seed=args.seed,
                                        probes_per_cell=args.probes)
    except MixedCellError as exc:
        log.error("%s", exc)
        return EX_CHECK_FAILED
    print(f"min_margin={observed!r}", file=out)
    print(f"gamma_star={bound!r}", file=out)
    ok = observed >= bound
    print(f"status={'ok' if ok else 'violated'}", file=out)
    return EX_OK if ok else EX_CHECK_FAILED


def cmd_complexity(args, out):
    value = stats.sample_complexity_bound(args.epsilon, args.xi, args.delta, args.d)
    print("infeasible" if math.isinf(value) else f"{value:.17g}", file=out)
    return EX_OK


def cmd_delta_max(args, out):
    scene = _read_scene(args.scene)
    est = estimate_delta_max(scene, args.epsilon, samples=args.samples, seed=args.seed, tolerance=args.tol)
    log.info("bracket [%g, %g], p(delta)=%g +/- %g (95%%)%s", est.lower, est.upper, est.p_at_delta,
             est.half_width, ", degenerate" if est.degenerate else "")
    print(f"{est.delta:.17g}", file=out)
    return EX_OK


COMMANDS = {
    "train": cmd_train,
    "query": cmd_query,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "verify-margin": cmd_verify_margin,
    "complexity": cmd_complexity,
    "delta-max": cmd_delta_max,
}


def run(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EX_USAGE
    except SystemExit as exc:  # --help
        return EX_OK if not exc.code else EX_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="certicd: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"certicd {args.command}: error: {exc}", file=sys.stderr)
        return EX_USAGE
    except ValueError as exc:
        print(f"certicd {args.command}: error: {exc}", file=sys.stderr)
        return EX_USAGE
    except _InputError as exc:
        print(f"certicd: {exc}", file=sys.stderr)
        return EX_NOINPUT
    except _OutputError as exc:
        print(f"certicd: {exc}", file=sys.stderr)
        return EX_CANTCREAT


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
