"""Command-line driver: ``rischannel <experiment> --config FILE [--seed N] [--out PREFIX] [--trials N]``.

Exit codes: 0 success, 2 configuration error, 3 numerical infeasibility,
4 I/O error. Outputs are written atomically after all computation
succeeded, so a failing run never leaves partial files.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile

import yaml

from . import __version__
from . import config as C
from .experiments import RUNNERS, fmt
from .multiaccess import InfeasibleAllocationError

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4

DEFAULT_TRIALS = {"pattern": 1, "envelope-dist": 10_000, "keff-sweep": 100_000,
                  "outage": 100_000, "ma-sumrate": 10_000}

# gnuplot sidecars: x column, y column(s), optional grouping column
_PLOTS = {
    ("pattern", "pattern"): ("theta_deg", ["magnitude_db"], None),
    ("envelope-dist", "samples"): ("magnitude", None, None),
    ("keff-sweep", "points"): ("inv_k_0", ["inv_k_hat", "inv_k_closed"], "m"),
    ("outage", "outage"): ("snr_db", ["mc_outage", "analytic_outage"], "curve"),
    ("ma-sumrate", "sumrate"): ("theta_target_deg", ["sum_rate_bps_hz"], "scheme"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rischannel", description="RIS-assisted channel experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in C.EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML configuration file")
        p.add_argument("--seed", type=int, default=None, help="64-bit seed (overrides the config)")
        p.add_argument("--out", default=None, help="output path prefix (default: experiment name)")
        p.add_argument("--trials", type=int, default=None, help="Monte Carlo trials (overrides the config)")
        p.add_argument("--plot-script", action="store_true", help="also write a gnuplot script per CSV")
    return parser


def _resolve(args, cfg: dict) -> tuple:
    kind = cfg.get("experiment", args.experiment)
    if kind != args.experiment:
        raise C.ConfigError(f"experiment: config is for {kind!r}, command is {args.experiment!r}")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise C.ConfigError(f"seed: expected an unsigned 64-bit integer, got {seed!r}")
    trials = args.trials if args.trials is not None else cfg.get("trials", DEFAULT_TRIALS[kind])
    if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
        raise C.ConfigError(f"trials: expected a positive integer, got {trials!r}")
    resolved = dict(cfg, experiment=kind, seed=seed, trials=trials)
    return kind, seed, trials, resolved


def render_csv(table, header: list) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def render_plot(kind: str, name: str, table, csv_path: str) -> str | None:
    spec = _PLOTS.get((kind, name))
    if spec is None:
        return None
    x, ys, group = spec
    col = {c: i + 1 for i, c in enumerate(table.columns)}
    base = os.path.basename(csv_path)
    lines = ["set datafile separator ','", "set datafile commentschars '#'", "set key outside",
             f"set xlabel '{x}'", "set terminal pngcairo size 900,600",
             f"set output '{os.path.splitext(base)[0]}.png'"]
    if ys is None:
        width = _bin_width([row[col[x] - 1] for row in table.rows])
        lines += [f"binwidth = {width!r}",
                  "bin(x) = binwidth * floor(x / binwidth)",
                  f"plot '{base}' every ::1 using (bin(${col[x]})):(1.0) smooth frequency with boxes title '{x}'"]
        return "\n".join(lines) + "\n"
    if kind == "outage":
        lines.append("set logscale y")
    if group is None:
        plots = [f"'{base}' every ::1 using {col[x]}:{col[y]} with lines title '{y}'" for y in ys]
    else:
        groups = []
        for row in table.rows:
            g = fmt(row[col[group] - 1])
            if g not in groups:
                groups.append(g)
        plots = [f"'{base}' every ::1 using {col[x]}:(strcol({col[group]}) eq '{g}' ? ${col[y]} : NaN) "
                 f"with linespoints title '{group}={g} {y}'" for g in groups for y in ys]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def _bin_width(values, bins: int = 60) -> float:
    lo, hi = min(values), max(values)
    return float(hi - lo) / bins if hi > lo else 1.0


def _write_all(files: dict):
    """Write every ``path -> text`` pair atomically; on failure remove what was written."""
    staged = []
    try:
        for path, text in files.items():
            d = os.path.dirname(os.path.abspath(path))
            fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
            staged.append((tmp, path))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for tmp, path in staged:
            os.replace(tmp, path)
    except OSError:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = C.load_config(args.config)
        kind, seed, trials, resolved = _resolve(args, cfg)
        result = RUNNERS[kind](cfg, seed, trials)
    except (OSError, yaml.YAMLError) as exc:
        code = EXIT_IO if isinstance(exc, OSError) else EXIT_CONFIG
        print(f"error: {exc}", file=sys.stderr)
        return code
    except C.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleAllocationError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE

    prefix = args.out or kind
    header = [f"rischannel {__version__} {kind}", f"seed: {seed}", f"trials: {trials}", "config:"]
    header += ["  " + line for line in C.dump(resolved)]
    files = {}
    for name, table in result.tables.items():
        path = f"{prefix}_{name}.csv"
        files[path] = render_csv(table, header)
        if args.plot_script:
            script = render_plot(kind, name, table, path)
            if script is not None:
                files[f"{prefix}_{name}.gp"] = script
    try:
        _write_all(files)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    for line in result.summary:
        print(line)
    for path in files:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
