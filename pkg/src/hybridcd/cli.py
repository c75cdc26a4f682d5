"""Command-line front end.

    hybridcd gen-data --n 10 --p 1000 --seed 42 --out data.txt
    hybridcd train --optimizer hybrid --epochs 100 --out-dir results
    hybridcd compare --m-list 100 500 1000 --epochs 100
    hybridcd sweep-dw --dw-list 0.1 0.5 1.0
    hybridcd plot --inputs a.csv b.csv --x epoch --out cmp.svg

Precedence is command-line flag, then ``--config`` file, then built-in
default.  The default seed is 42, so a bare invocation is reproducible.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import harness, model
from .harness import Axis, ExperimentConfig, Optimizer

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of printing usage and exiting."""

    def error(self, message):
        raise UsageError(message)


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_alpha(text: str):
    return None if text.strip().lower() in ("auto", "none") else float(text)


def _parse_lr(text: str):
    return None if text.strip().lower() in ("auto", "none") else float(text)


# key -> converter for both config files and flag values
_CONFIG_KEYS = {
    "optimizer": lambda s: Optimizer(s.strip().lower()),
    "n": int,
    "p": int,
    "m": int,
    "dw": float,
    "alpha": _parse_alpha,
    "lr": _parse_lr,
    "epochs": int,
    "seed": int,
    "parallel": _parse_bool,
    "max_probes": int,
    "output_dir": lambda s: Path(s.strip()),
}


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read a flat ``key = value`` file; ``#`` starts a comment.

    Keys not present keep their value from ``base`` (the built-in defaults
    when ``base`` is None).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: syntax error, expected 'key = value'")
        key, _, value = (part.strip() for part in line.partition("="))
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key '{key}'")
        if not value:
            raise UsageError(f"{path}:{lineno}: missing value for '{key}'")
        try:
            values[key] = _CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: invalid value for '{key}': {exc}") from None
    return _build_config(base or ExperimentConfig(), values)


def _build_config(base: ExperimentConfig, values: dict) -> ExperimentConfig:
    for key, value in values.items():
        _check_value(key, value)
    try:
        return dataclasses.replace(base, **values)
    except ValueError as exc:
        raise UsageError(f"invalid configuration: {exc}") from None


def _check_value(key, value):
    # name the offending key; the dataclass messages alone don't always
    if key == "dw" and not value > 0:
        raise UsageError(f"invalid value for 'dw': must be > 0, got {value}")
    if key == "alpha" and value is not None and not 0 < value <= 1:
        raise UsageError(f"invalid value for 'alpha': must lie in (0, 1], got {value}")
    if key == "lr" and value is not None and not value > 0:
        raise UsageError(f"invalid value for 'lr': must be > 0, got {value}")
    if key in ("n", "p", "m", "epochs") and value < 1:
        raise UsageError(f"invalid value for '{key}': must be >= 1, got {value}")
    if key == "max_probes" and value < 2:
        raise UsageError(f"invalid value for 'max_probes': must be >= 2, got {value}")
    if key == "seed" and not 0 <= value < 2**64:
        raise UsageError(f"invalid value for 'seed': must be an unsigned 64-bit integer")


def _add_experiment_flags(p: argparse.ArgumentParser, with_optimizer: bool):
    # defaults are None so that unset flags fall through to the config file
    if with_optimizer:
        p.add_argument("--optimizer", type=_CONFIG_KEYS["optimizer"],
                       help="gd or hybrid (default: hybrid)")
    p.add_argument("--n", type=int, help="number of samples (default: 10)")
    p.add_argument("--p", type=int, help="feature dimension (default: 1000)")
    p.add_argument("--m", type=int, help="hidden neurons (default: 100)")
    p.add_argument("--dw", type=float, help="gradient threshold and line-search step (default: 0.5)")
    p.add_argument("--alpha", type=_parse_alpha,
                   help="Jacobi blend coefficient, or 'auto' for 1/(m*p) (default: auto)")
    p.add_argument("--lr", type=_parse_lr,
                   help="gradient-descent learning rate, or 'auto' for 1/n (default: auto)")
    p.add_argument("--epochs", type=int, help="training epochs (default: 100)")
    p.add_argument("--seed", type=int, help="RNG seed for data and weights (default: 42)")
    p.add_argument("--parallel", type=_parse_bool, nargs="?", const=True,
                   help="compute coordinate targets on a thread pool (default: true)")
    p.add_argument("--max-probes", dest="max_probes", type=int,
                   help="line-search probe cap per coordinate (default: 10000)")
    p.add_argument("--out-dir", dest="output_dir", type=Path,
                   help="directory for CSV/SVG outputs (default: results)")
    p.add_argument("--data", type=Path, help="dataset file from gen-data instead of the seeded draw")
    p.add_argument("--config", type=Path, help="key = value file with defaults for the flags above")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybridcd", description=__doc__.split("\n\n")[0].strip(),
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen-data", help="write a seeded synthetic dataset")
    g.add_argument("--n", type=int, default=10, help="number of samples (default: 10)")
    g.add_argument("--p", type=int, default=1000, help="feature dimension (default: 1000)")
    g.add_argument("--seed", type=int, default=42, help="RNG seed (default: 42)")
    g.add_argument("--out", type=Path, required=True, help="output file")

    t = sub.add_parser("train", help="train one network and write its metrics")
    _add_experiment_flags(t, with_optimizer=True)

    c = sub.add_parser("compare", help="GD vs hybrid for several widths m")
    c.add_argument("--m-list", dest="m_list", type=int, nargs="+", default=[100, 500, 1000],
                   help="hidden widths to compare (default: 100 500 1000)")
    _add_experiment_flags(c, with_optimizer=False)

    s = sub.add_parser("sweep-dw", help="hybrid for several thresholds dw")
    s.add_argument("--dw-list", dest="dw_list", type=float, nargs="+", default=[0.1, 0.5, 1.0],
                   help="thresholds to sweep (default: 0.1 0.5 1.0)")
    _add_experiment_flags(s, with_optimizer=False)

    pl = sub.add_parser("plot", help="plot ln(loss) curves from metrics CSVs")
    pl.add_argument("--inputs", type=Path, nargs="+", required=True, help="metrics CSV files")
    pl.add_argument("--x", type=Axis, default=Axis.EPOCH, choices=list(Axis),
                    help="x axis: epoch or time (default: epoch)")
    pl.add_argument("--out", type=Path, required=True, help="output SVG file")
    return parser


def _experiment_config(args) -> ExperimentConfig:
    base = ExperimentConfig()
    if args.config is not None:
        base = load_config(args.config, base)
    flags = {key: getattr(args, key) for key in _CONFIG_KEYS
             if getattr(args, key, None) is not None}
    return _build_config(base, flags)


def _load_data(args, config: ExperimentConfig):
    if args.data is None:
        return None, config
    try:
        data = model.load_dataset(args.data)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    # the file fixes the shape
    return data, dataclasses.replace(config, n=data.n, p=data.p)


def _report(suite) -> int:
    for label, exc in suite.failures:
        print(f"hybridcd: run '{label}' failed: {exc}", file=sys.stderr)
    for path in suite.csv_paths + suite.svg_paths:
        print(path)
    return EXIT_RUNTIME if suite.failures else EXIT_OK


def _cmd_gen_data(args) -> int:
    try:
        data = model.generate_dataset(args.n, args.p, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    model.save_dataset(data, args.out)
    print(args.out)
    return EXIT_OK


def _cmd_train(args) -> int:
    config = _experiment_config(args)
    data, config = _load_data(args, config)
    run = harness.run_experiment(config, data=data)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    if run.metrics:
        csv_path = harness.emit_csv(run.metrics, config.output_dir / harness.csv_name(config))
        svg_path = harness.emit_plot({config.optimizer.value: run.metrics}, Axis.EPOCH,
                                     config.output_dir / "train_epoch.svg")
        print(csv_path)
        print(svg_path)
    if run.error is not None:
        print(f"hybridcd: {run.error}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_compare(args) -> int:
    config = _experiment_config(args)
    data, config = _load_data(args, config)
    if any(m < 1 for m in args.m_list):
        raise UsageError(f"--m-list values must be >= 1, got {args.m_list}")
    return _report(harness.compare_suite(config, args.m_list, data=data))


def _cmd_sweep_dw(args) -> int:
    config = _experiment_config(args)
    data, config = _load_data(args, config)
    if any(not dw > 0 for dw in args.dw_list):
        raise UsageError(f"--dw-list values must be > 0, got {args.dw_list}")
    return _report(harness.sweep_dw(config, args.dw_list, data=data))


def _cmd_plot(args) -> int:
    curves = []
    for path in args.inputs:
        try:
            rows = harness.read_csv(path)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from None
        if not rows:
            raise UsageError(f"{path}: no metric rows")
        curves.append((path.stem, rows))
    harness.emit_plot(curves, args.x, args.out)
    print(args.out)
    return EXIT_OK


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "compare": _cmd_compare,
    "sweep-dw": _cmd_sweep_dw,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"hybridcd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"hybridcd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


parse_and_dispatch = main


if __name__ == "__main__":
    sys.exit(main())
