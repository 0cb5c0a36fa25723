"""Command-line front end.

    isospec <scenario> [--config c.json] [--set key=value ...] [--seed N]
                       [--out-dir DIR] [--workers N] [--plot ecdf|qq|spectral_hist]

Exit status: 0 pass or reported, 1 failed assertion or numeric failure,
2 usage or configuration error (no files are written in that case).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError, IsospecError, SampleDataError
from .experiments.config import SCENARIOS, ExperimentConfig
from .experiments.report import ExperimentReport, _atomic_write, csv_text, write_outputs
from .experiments.runners import run_scenario
from .metrics import semicircle_cdf_quantile, semicircle_density

PLOT_KINDS = ("ecdf", "qq", "spectral_hist")
# preferred sample series for each plot kind, first match wins
_SERIES = {"ecdf": ("marginal", "diagonal", "eigenvalues"),
           "qq": ("marginal", "diagonal"),
           "spectral_hist": ("eigenvalues",)}
HIST_RANGE = (-2.5, 2.5)
HIST_BINS = 50


def _samples(report, kind: str) -> np.ndarray:
    samples = report.samples if isinstance(report, ExperimentReport) else report.get("samples") or {}
    for key in _SERIES[kind]:
        data = samples.get(key)
        if data is not None and len(data):
            return np.asarray(data, dtype=np.float64)
    raise SampleDataError(f"report has no sample data for a {kind} plot")


def plot_rows(report, kind: str) -> tuple[list[str], list]:
    if kind not in PLOT_KINDS:
        raise ConfigError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    x = np.sort(_samples(report, kind))
    m = x.size
    if kind == "ecdf":
        return ["value", "ecdf"], list(zip(x, np.arange(1, m + 1) / m))
    if kind == "qq":
        u = (np.arange(m) + 0.5) / m
        return ["u", "sample", "reference"], list(zip(u, x, ndtri(u)))
    edges = np.linspace(*HIST_RANGE, HIST_BINS + 1)
    counts = np.histogram(x, bins=edges)[0]
    width = edges[1] - edges[0]
    centres = 0.5 * (edges[:-1] + edges[1:])
    # mass of the semicircle in each bin, via its CDF on [-2, 2]
    cdf = np.array([semicircle_cdf_quantile(float(np.clip(e, -2, 2)), "cdf") for e in edges])
    rows = list(zip(edges[:-1], edges[1:], counts / (m * width), semicircle_density(centres),
                    np.diff(cdf) / width))
    return ["bin_left", "bin_right", "density", "semicircle_density", "semicircle_bin_average"], rows


def emit_plotdata(report, kind: str, path: str | Path) -> Path:
    """Write plot data for ``kind`` to ``path``; nothing is written on error."""
    columns, rows = plot_rows(report, kind)
    if not isinstance(report, ExperimentReport):
        report = ExperimentReport(report.get("scenario", "?"), report.get("config", {}))
    path = Path(path)
    _atomic_write(path, csv_text(report, columns, rows))
    return path


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isospec", description=__doc__.splitlines()[0])
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted-path override, value parsed as JSON when possible (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.add_argument("--workers", type=int, help="worker threads (speed only; results do not change)")
    p.add_argument("--plot", action="append", default=[], choices=PLOT_KINDS)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    try:
        cfg = ExperimentConfig.load(args.config, args.scenario, overrides)
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_scenario(cfg, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IsospecError, ArithmeticError, np.linalg.LinAlgError, MemoryError) as exc:
        print(f"error in {cfg.scenario}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    write_outputs(report, args.out_dir)
    for kind in args.plot:
        try:
            emit_plotdata(report, kind, args.out_dir / f"plot_{kind}.csv")
        except SampleDataError as exc:
            print(f"plot error: {exc}", file=sys.stderr)
            return 1
    print(report.summary_line())
    return 1 if report.status == "fail" else 0


if __name__ == "__main__":
    sys.exit(main())
