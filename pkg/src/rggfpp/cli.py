"""Command-line entry point: one subcommand per experiment kind."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ParameterError, SubcriticalError, SubcriticalQuotaError
from .experiment import ExperimentConfig, replay, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_QUOTA, EXIT_IO = 0, 2, 3, 4
ENV_PREFIX = "RGGFPP_"


def _p_grid(text):
    """'a:b:step' (inclusive) or a comma list."""
    if ":" in text:
        parts = [float(v) for v in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise argparse.ArgumentTypeError("expected start:stop:step")
        start, stop, step = parts
        n = int(round((stop - start) / step))
        return [round(start + i * step, 12) for i in range(n + 1)]
    return _floats(text)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _source_set(text):
    if text == "origin":
        return "origin"
    return [[float(c) for c in pt.split(",")] for pt in text.split(";")]


def _assignment(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected key=value")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int, help="root seed (u64)")
    p.add_argument("--threads", type=int, help="worker threads")
    p.add_argument("--out", help="output directory, or a file path for the main output")
    p.add_argument("--set", dest="assign", action="append", type=_assignment, default=[],
                   metavar="KEY=VALUE", help="override any config field (value parsed as JSON)")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="rggfpp", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("run", parents=[common], help="run the experiment described by --config")
    rp = sub.add_parser("replay", parents=[common], help="re-run a manifest and compare output digests")
    rp.add_argument("manifest")

    ppp = sub.add_parser("ppp", parents=[common], help="sample a Poisson point process")
    rgg = sub.add_parser("rgg", parents=[common], help="build a disk graph")
    for p in (ppp, rgg):
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--box", dest="L", type=float, help="box half-width L")
        p.add_argument("--d", type=int)
    rgg.add_argument("--r", type=float)
    rgg.add_argument("--svg", action="store_true", default=None)

    fpp = sub.add_parser("fpp", help="first-passage percolation").add_subparsers(dest="task", required=True)
    fr = fpp.add_parser("run", parents=[common])
    fr.add_argument("--t", type=float, help="also measure the reached set at this time")
    fr.add_argument("--svg", action="store_true", default=None)

    shape = sub.add_parser("shape", help="time constant and shape").add_subparsers(dest="task", required=True)
    sp = shape.add_parser("profile", parents=[common])
    se = shape.add_parser("error", parents=[common])
    for p in (sp, se):
        p.add_argument("--n-seeds", dest="n_seeds", type=int)
    sp.add_argument("--s-list", dest="s_list", type=_floats)
    sp.add_argument("--directions", type=int)
    sp.add_argument("--quenched", action="store_true", default=None)
    se.add_argument("--t-list", dest="t_list", type=_floats)
    se.add_argument("--phi", type=float)
    se.add_argument("--svg", action="store_true", default=None)

    perc = sub.add_parser("perc", help="bond percolation at time zero").add_subparsers(dest="task", required=True)
    ps = perc.add_parser("sweep", parents=[common])
    ps.add_argument("--p-grid", dest="p_grid", type=_p_grid)
    ps.add_argument("--n-seeds", dest="n_seeds", type=int)
    pb = perc.add_parser("bond", parents=[common])
    pb.add_argument("--p", type=float)
    pb.add_argument("--box-sizes", dest="box_sizes", type=_floats)
    pb.add_argument("--n-seeds", dest="n_seeds", type=int)
    pb.add_argument("--svg", action="store_true", default=None)

    scale = sub.add_parser("scale", help="high-density rescaling").add_subparsers(dest="task", required=True)
    sk = scale.add_parser("kernels", parents=[common])
    sk.add_argument("--alpha", type=float)
    sk.add_argument("--delta", type=float)
    sk.add_argument("--S", dest="S", type=_source_set, help="'origin' or 'x,y;x,y'")
    sc = scale.add_parser("converge", parents=[common])
    sc.add_argument("--alphas", type=_floats)
    sc.add_argument("--k", type=int)
    sc.add_argument("--runs", type=int)
    sc.add_argument("--mode", choices=("direct", "kernel-chain"))
    sg = scale.add_parser("reg", parents=[common])
    sg.add_argument("--alphas", type=_floats)
    sg.add_argument("--ell", type=float)
    sg.add_argument("--delta", type=float)
    sg.add_argument("--n-seeds", dest="n_seeds", type=int)
    return parser


SPECIFIC = ("lam", "L", "d", "r", "svg", "t", "n_seeds", "s_list", "directions", "quenched", "t_list",
            "phi", "p_grid", "p", "box_sizes", "alpha", "delta", "S", "alphas", "k", "runs", "mode", "ell")


def _env(name):
    return os.environ.get(ENV_PREFIX + name)


def config_from_args(args):
    """Config file < environment < command-line flags."""
    path = args.config or _env("CONFIG")
    data = json.loads(open(path).read()) if path else {}
    if not isinstance(data, dict):
        raise ParameterError("config must be a JSON object")
    if args.command not in ("run", "replay"):
        data["kind"] = args.command
        if getattr(args, "task", None):
            data["task"] = args.task
        elif args.command in ("ppp", "rgg"):
            data.pop("task", None)
    for env_name, key, cast in (("SEED", "seed", int), ("THREADS", "threads", int), ("OUT", "out", str)):
        if _env(env_name) is not None:
            try:
                data[key] = cast(_env(env_name))
            except ValueError as exc:
                raise ParameterError(f"{ENV_PREFIX}{env_name}: {exc}") from exc
    for key in ("seed", "threads", "out"):
        if getattr(args, key, None) is not None:
            data[key] = getattr(args, key)
    for key in SPECIFIC:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    for key, value in args.assign:
        data[key] = value
    return ExperimentConfig.from_dict(data)


def _fail(code, kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            manifest, same = replay(args.manifest, args.out)
            print(json.dumps({"identical": same, "outputs": manifest.outputs}, sort_keys=True))
            return EXIT_OK if same else 1
        cfg = config_from_args(args)
        manifest = run_experiment(cfg)
    except (ParameterError, json.JSONDecodeError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except (SubcriticalQuotaError, SubcriticalError) as exc:
        return _fail(EXIT_QUOTA, "subcritical", str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, "io", str(exc))
    print(json.dumps({"outputs": manifest.outputs, "warnings": manifest.warnings,
                      "summary": manifest.summary}, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
