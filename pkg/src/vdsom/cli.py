"""Command-line entry point: ``vdsom train | sweep | gradcheck``.

Settings are resolved from, in increasing priority: built-in defaults, a
``key = value`` config file (``--config``), the ``VDSOM_OUTPUT_DIR``
environment variable, and command-line flags. Every key can be given as a
flag with dashes, e.g. ``switch_step`` as ``--switch-step``.

Exit codes: 0 success, 1 validation error, 2 runtime error, 3 gradcheck failure.
"""

import argparse
import logging
import os
import sys

from .data import StreamSpec, derive_seed
from .gradcheck import run_gradcheck
from .grid import GridSpec
from .runner import RunConfig, run_sweep, run_train

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_GRADCHECK = 0, 1, 2, 3
OUTPUT_ENV = "VDSOM_OUTPUT_DIR"


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _names(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _opt_int(text):
    return None if text.strip().lower() in ("", "none") else int(text)


# key -> (parser, default); defaults reproduce the moons-to-circles experiment
KEYS = {
    "rows": (int, "15"),
    "cols": (int, "15"),
    "topology": (str, "planar"),
    "coord_lo": (float, "-1"),
    "coord_hi": (float, "1"),
    "eta": (float, "1"),
    "sigma0": (float, "5"),
    "lr": (float, "0.001"),
    "steps": (int, "60000"),
    "optimizer": (str, "adam"),
    "algorithm": (str, "vdsom"),
    "stream": (str, "mutate"),
    "stream_first": (str, "moons"),
    "stream_second": (str, "circles"),
    "switch_step": (int, "30000"),
    "noise_std": (float, "0.05"),
    "inner_factor": (float, "0.5"),
    "data_path": (str, ""),
    "data_limit": (_opt_int, "none"),
    "mixture_size": (int, "2000"),
    "mixture_dim": (int, "64"),
    "mixture_components": (int, "10"),
    "seed": (int, "0"),
    "log_interval": (int, "100"),
    "snapshot_steps": (_ints, "0,7500,15000,22500,30000,37500,45000,52500,60000"),
    "output_dir": (str, "runs/train"),
    "sigma_min": (float, "0.0001"),
    "paper_exact_gsigma": (_bool, "false"),
    "eval_size": (int, "1024"),
    "adam_beta1": (float, "0.9"),
    "adam_beta2": (float, "0.999"),
    "adam_eps": (float, "1e-8"),
}

SWEEP_KEYS = {
    "etas": (_floats, "0.5,1,2,4"),
    "algorithms": (_names, "vdsom,dsom"),
    "workers": (int, "1"),
}

GRADCHECK_KEYS = {
    "trials": (int, "100"),
    "seed": (int, "0"),
}


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ValueError(f"cannot read config file: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def format_config_file(values):
    return "".join(f"{key} = {values[key]}\n" for key in values)


def resolve(raw, table):
    """Parse raw strings against ``table``, filling defaults and rejecting unknown keys."""
    unknown = set(raw) - set(table)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for key, (parse, default) in table.items():
        text = raw.get(key, default)
        try:
            out[key] = parse(text)
        except ValueError as exc:
            raise ValueError(f"bad value for {key}: {text!r} ({exc})") from None
    return out


def _leaf(kind, v, tag):
    return StreamSpec(
        kind=kind,
        seed=derive_seed(v["seed"], tag),
        noise_std=v["noise_std"],
        inner_factor=v["inner_factor"],
        path=v["data_path"] or None,
        limit=v["data_limit"],
        mixture_size=v["mixture_size"],
        mixture_dim=v["mixture_dim"],
        mixture_components=v["mixture_components"],
    )


def build_run_config(values):
    v = values
    if v["stream"] == "mutate":
        stream = StreamSpec(
            kind="mutate",
            switch_step=v["switch_step"],
            first=_leaf(v["stream_first"], v, 1),
            second=_leaf(v["stream_second"], v, 2),
        )
    else:
        stream = _leaf(v["stream"], v, 1)
    return RunConfig(
        grid=GridSpec(v["rows"], v["cols"], v["topology"], (v["coord_lo"], v["coord_hi"])),
        eta=v["eta"],
        sigma0=v["sigma0"],
        lr=v["lr"],
        steps=v["steps"],
        optimizer=v["optimizer"],
        algorithm=v["algorithm"],
        stream=stream,
        seed=v["seed"],
        log_interval=v["log_interval"],
        snapshot_steps=v["snapshot_steps"],
        output_dir=v["output_dir"] or None,
        sigma_min=v["sigma_min"],
        paper_exact_gsigma=v["paper_exact_gsigma"],
        eval_size=v["eval_size"],
        adam_beta1=v["adam_beta1"],
        adam_beta2=v["adam_beta2"],
        adam_eps=v["adam_eps"],
    )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_keys(parser, table):
    for key in table:
        parser.add_argument("--" + key.replace("_", "-"), dest=key, default=None, metavar="VALUE")


def make_parser():
    parser = _Parser(prog="vdsom", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    train = sub.add_parser("train", help="train one map")
    train.add_argument("--config", help="key = value config file")
    _add_keys(train, KEYS)

    sweep = sub.add_parser("sweep", help="final distortion against elasticity for each algorithm")
    sweep.add_argument("--config", help="key = value config file")
    _add_keys(sweep, {**KEYS, **SWEEP_KEYS})

    check = sub.add_parser("gradcheck", help="finite-difference check of the analytic gradient")
    _add_keys(check, GRADCHECK_KEYS)
    return parser


def _raw_values(args, table):
    raw = read_config_file(args.config) if getattr(args, "config", None) else {}
    if OUTPUT_ENV in os.environ and "output_dir" in table:
        raw["output_dir"] = os.environ[OUTPUT_ENV]
    for key in table:
        flag = getattr(args, key, None)
        if flag is not None:
            raw[key] = flag
    return raw


def _cmd_train(args):
    raw = _raw_values(args, KEYS)
    values = resolve(raw, KEYS)
    config = build_run_config(values)
    train_log = run_train(config)
    if config.output_dir:
        with open(os.path.join(config.output_dir, "config.txt"), "w") as fh:
            fh.write(format_config_file({k: raw.get(k, KEYS[k][1]) for k in KEYS}))
    last = train_log.records[-1]
    print(f"step {last.step}: sigma={last.sigma:.6g} distortion={last.distortion:.6g}")
    return EXIT_OK


def _cmd_sweep(args):
    table = {**KEYS, **SWEEP_KEYS}
    raw = _raw_values(args, table)
    if "output_dir" not in raw:
        raw["output_dir"] = "runs/sweep"
    values = resolve(raw, table)
    base = build_run_config({k: values[k] for k in KEYS})
    rows = run_sweep(base, values["etas"], values["algorithms"], values["workers"])
    for row in rows:
        status = row.error or f"{row.distortion:.6g}"
        print(f"{row.algorithm} eta={row.eta:g}: {status}")
    return EXIT_RUNTIME if any(row.error for row in rows) else EXIT_OK


def _cmd_gradcheck(args):
    values = resolve(_raw_values(args, GRADCHECK_KEYS), GRADCHECK_KEYS)
    report = run_gradcheck(values["trials"], values["seed"])
    verdict = "PASS" if report.passed else "FAIL"
    print(
        f"gradcheck: {report.trials} trials, max relative error {report.max_rel_error:.3e}, "
        f"{report.failures} failures: {verdict}"
    )
    return EXIT_OK if report.passed else EXIT_GRADCHECK


COMMANDS = {"train": _cmd_train, "sweep": _cmd_sweep, "gradcheck": _cmd_gradcheck}


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"vdsom: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"vdsom: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
