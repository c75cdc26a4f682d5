"""Experiment runner, CSV metrics and SVG convergence plots."""

from __future__ import annotations

import csv
import enum
import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape

from . import model
from .coord_eval import cache_nbytes
from .optimizers import DivergedError, GdConfig, HybridConfig, gd_epoch, hybrid_epoch

__all__ = [
    "Optimizer",
    "Axis",
    "ExperimentConfig",
    "EpochMetrics",
    "RunResult",
    "run_experiment",
    "emit_csv",
    "read_csv",
    "emit_plot",
    "compare_suite",
    "sweep_dw",
    "csv_name",
]

CSV_HEADER = (
    "epoch,loss,ln_loss,elapsed_s,grad_updates,ls_updates,"
    "nochange_updates,ls_probes,cache_bytes"
)


class Optimizer(str, enum.Enum):
    GD = "gd"
    HYBRID = "hybrid"


class Axis(str, enum.Enum):
    EPOCH = "epoch"
    TIME = "time"


@dataclass(frozen=True)
class ExperimentConfig:
    optimizer: Optimizer = Optimizer.HYBRID
    n: int = 10
    p: int = 1000
    m: int = 100
    dw: float = 0.5
    alpha: Optional[float] = None  # None -> 1/(m*p)
    lr: Optional[float] = None  # None -> 1/n
    epochs: int = 100
    seed: int = 42
    parallel: bool = True
    max_probes: int = 10_000
    output_dir: Path = Path("results")

    def __post_init__(self):
        object.__setattr__(self, "optimizer", Optimizer(self.optimizer))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        for name in ("n", "p", "m", "epochs"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        # delegate the remaining checks to the optimizer configs
        self.hybrid_config()
        self.gd_config()

    def hybrid_config(self) -> HybridConfig:
        return HybridConfig(dw=self.dw, alpha=self.alpha, max_probes=self.max_probes,
                            parallel=self.parallel)

    def gd_config(self) -> GdConfig:
        return GdConfig(lr=self.lr)

    def data_seed(self) -> int:
        return self.seed

    def param_seed(self) -> int:
        # independent stream for the weights, same for every optimizer and dw
        return (self.seed * 0x9E3779B97F4A7C15 + 1) % 2**64


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    loss: float
    ln_loss: float
    elapsed_s: float
    grad_updates: int = 0
    ls_updates: int = 0
    nochange_updates: int = 0
    ls_probes: int = 0
    cache_bytes: int = 0


@dataclass
class RunResult:
    """Metrics of one run; ``metrics[k]`` is the state after ``k + 1`` epochs."""

    config: ExperimentConfig
    initial_loss: float
    metrics: list = field(default_factory=list)
    error: Optional[DivergedError] = None
    capped: int = 0


def ln(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def run_experiment(config: ExperimentConfig, data: Optional[model.Dataset] = None,
                   backend=None) -> RunResult:
    """Train from the seeded initialization and record one metric row per epoch.

    ``data`` overrides the seeded dataset (its shape must agree with the
    config).  Only optimizer calls are timed.  A divergence stops the run;
    the metrics collected so far are kept and the error is stored on the
    result.
    """
    if data is None:
        data = model.generate_dataset(config.n, config.p, config.data_seed())
    elif (data.n, data.p) != (config.n, config.p):
        raise ValueError(f"dataset is {data.n}x{data.p}, config says {config.n}x{config.p}")
    params = model.init_params(config.m, config.p, config.param_seed())
    result = RunResult(config, initial_loss=model.loss(params, data))

    hybrid = config.optimizer is Optimizer.HYBRID
    opt_config = config.hybrid_config() if hybrid else config.gd_config()
    elapsed = 0.0
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        try:
            if hybrid:
                params, stats = hybrid_epoch(params, data, opt_config, epoch=epoch,
                                             backend=backend)
            else:
                params, stats = gd_epoch(params, data, opt_config, epoch=epoch)
        except DivergedError as exc:
            result.error = exc
            break
        elapsed += time.perf_counter() - start
        result.capped += stats.capped
        result.metrics.append(EpochMetrics(
            epoch=epoch,
            loss=stats.loss,
            ln_loss=ln(stats.loss),
            elapsed_s=elapsed,
            grad_updates=stats.grad_updates,
            ls_updates=stats.ls_updates,
            nochange_updates=stats.nochange_updates,
            ls_probes=stats.ls_probes,
            cache_bytes=stats.cache_bytes,
        ))
    return result


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "-inf" if value < 0 else "inf"
        return f"{value:.17g}"
    return str(value)


def emit_csv(metrics, path) -> Path:
    metrics = list(metrics)
    if not metrics:
        raise ValueError("no metrics to write")
    path = Path(path)
    lines = [CSV_HEADER]
    names = [f.name for f in fields(EpochMetrics)]
    for row in metrics:
        lines.append(",".join(_fmt(getattr(row, name)) for name in names))
    try:
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write metrics to {path}: {exc}") from exc
    return path


def read_csv(path) -> list:
    """Parse a file written by :func:`emit_csv`."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or ",".join(header) != CSV_HEADER:
                raise ValueError(f"{path}: not a metrics file (bad header)")
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                try:
                    rows.append(EpochMetrics(
                        epoch=int(rec[0]),
                        loss=float(rec[1]),
                        ln_loss=float(rec[2]),
                        elapsed_s=float(rec[3]),
                        grad_updates=int(rec[4]),
                        ls_updates=int(rec[5]),
                        nochange_updates=int(rec[6]),
                        ls_probes=int(rec[7]),
                        cache_bytes=int(rec[8]),
                    ))
                except (ValueError, IndexError):
                    raise ValueError(f"{path}:{lineno}: malformed metrics row") from None
    except OSError as exc:
        raise OSError(f"cannot read metrics from {path}: {exc}") from exc
    return rows


# --- SVG rendering -----------------------------------------------------------

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]
_W, _H = 720, 440
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 170, 20, 50


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    k = 0
    while start + k * step <= hi + 1e-12 * step:
        ticks.append(start + k * step)
        k += 1
    return ticks


def _span(values):
    lo, hi = min(values), max(values)
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def emit_plot(curves, x_axis, path) -> Path:
    """Line chart of ln(loss) against epoch or elapsed seconds, as SVG.

    ``curves`` maps a label to a sequence of :class:`EpochMetrics` (or is a
    sequence of ``(label, metrics)`` pairs).  A loss of exactly zero is drawn
    on the bottom edge.
    """
    items = list(curves.items()) if isinstance(curves, dict) else list(curves)
    if not items:
        raise ValueError("no curves to plot")
    for label, rows in items:
        if not list(rows):
            raise ValueError(f"curve {label!r} is empty")
    x_axis = Axis(x_axis)

    def xval(row):
        return float(row.epoch) if x_axis is Axis.EPOCH else row.elapsed_s

    xs = [xval(r) for _, rows in items for r in rows]
    ys = [r.ln_loss for _, rows in items for r in rows if math.isfinite(r.ln_loss)]
    x_lo, x_hi = _span(xs)
    y_lo, y_hi = _span(ys or [0.0])
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def sx(v):
        return _LEFT + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        if not math.isfinite(v):
            v = y_lo if v < 0 else y_hi
        return _TOP + (y_hi - v) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x_lo, x_hi):
        x = sx(t)
        out.append(f'<line x1="{x:.3f}" y1="{_TOP + ph}" x2="{x:.3f}" y2="{_TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.3f}" y="{_TOP + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(y_lo, y_hi):
        y = sy(t)
        out.append(f'<line x1="{_LEFT - 5}" y1="{y:.3f}" x2="{_LEFT}" y2="{y:.3f}" stroke="black"/>')
        out.append(f'<text x="{_LEFT - 8}" y="{y + 4:.3f}" text-anchor="end">{t:g}</text>')
    xlabel = "epoch" if x_axis is Axis.EPOCH else "wall-clock time (s)"
    out.append(f'<text x="{_LEFT + pw / 2:.3f}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="18" y="{_TOP + ph / 2:.3f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {_TOP + ph / 2:.3f})">ln(loss)</text>')

    for k, (label, rows) in enumerate(items):
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(f"{sx(xval(r)):.3f},{sy(r.ln_loss):.3f}" for r in rows)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = _TOP + 14 + 18 * k
        lx = _LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(str(label))}</text>')
    out.append("</svg>")

    path = Path(path)
    try:
        path.write_text("\n".join(out) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write plot to {path}: {exc}") from exc
    return path


# --- suites ------------------------------------------------------------------

def _fmt_dw(dw: float) -> str:
    return f"{dw:g}"


def csv_name(config: ExperimentConfig) -> str:
    return f"{config.optimizer.value}_m{config.m}_dw{_fmt_dw(config.dw)}_seed{config.seed}.csv"


@dataclass
class SuiteResult:
    runs: list = field(default_factory=list)  # RunResult per run, in order
    csv_paths: list = field(default_factory=list)
    svg_paths: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (label, exception)


def _run_suite(name, configs_and_labels, output_dir, data, backend) -> SuiteResult:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    suite = SuiteResult()
    curves = []
    for label, cfg in configs_and_labels:
        try:
            run = run_experiment(cfg, data=data, backend=backend)
        except Exception as exc:  # keep going with the remaining runs
            suite.failures.append((label, exc))
            continue
        suite.runs.append(run)
        if run.error is not None:
            suite.failures.append((label, run.error))
        if run.metrics:
            suite.csv_paths.append(emit_csv(run.metrics, output_dir / csv_name(cfg)))
            curves.append((label, run.metrics))
    if curves:
        for axis in Axis:
            suite.svg_paths.append(emit_plot(curves, axis, output_dir / f"{name}_{axis.value}.svg"))
    return suite


def compare_suite(base: ExperimentConfig, m_values, data=None, backend=None) -> SuiteResult:
    """GD and hybrid on the same data and initialization for each width ``m``."""
    m_values = list(m_values)
    if not m_values:
        raise ValueError("m_values must not be empty")
    runs = []
    for m in m_values:
        for opt in (Optimizer.GD, Optimizer.HYBRID):
            cfg = replace(base, optimizer=opt, m=m)
            runs.append((f"{opt.value} m={m}", cfg))
    return _run_suite("compare", runs, base.output_dir, data, backend)


def sweep_dw(base: ExperimentConfig, dw_values, data=None, backend=None) -> SuiteResult:
    """Hybrid once per threshold ``dw`` on identical data and initialization."""
    dw_values = list(dw_values)
    if not dw_values:
        raise ValueError("dw_values must not be empty")
    if any(not dw > 0 for dw in dw_values):
        raise ValueError(f"all dw values must be positive, got {dw_values}")
    runs = [(f"dw={_fmt_dw(dw)}", replace(base, optimizer=Optimizer.HYBRID, dw=dw))
            for dw in dw_values]
    return _run_suite("sweep_dw", runs, base.output_dir, data, backend)


def analytic_memory(config: ExperimentConfig) -> dict:
    """Bytes held by each optimizer beyond the shared parameters and data."""
    return {
        "gd": 0,
        "hybrid": cache_nbytes(config.m, config.n),
    }
