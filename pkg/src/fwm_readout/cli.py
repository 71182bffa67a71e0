"""Command-line pipelines: evolve | sweep | simulate | analyze | fit.

Every command is a pure function of (config file, seed, input files):
numeric output files are written with 17 significant digits and fixed key
order, so a rerun is byte identical.  Exit codes: 0 success, 2 config or
usage error, 3 domain error, 4 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import analyze_stack, fit_exponential
from .config import RunConfig
from .errors import ConfigError, DomainError, FwmError, StackFormatError
from .model import SWEEP_COLUMNS, detuning_sweep, readout_rates
from .simulate import simulate_gated_counts
from .stackio import open_stack, write_stack_file

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_IO = 4


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _write_kv(path: Path, pairs) -> None:
    path.write_text("".join(f"{k}={_fmt(v) if isinstance(v, float) else v}\n" for k, v in pairs), encoding="ascii")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    return cfg.with_overrides(seed=args.seed, threads=args.threads)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_evolve(args) -> int:
    cfg = _load_config(args)
    pair = cfg.coupling_pair()
    m = cfg.model
    n_b = cfg.write.mean_nb * cfg.write.eta_w
    eta_r = cfg.write.eta_r
    times = np.linspace(0.0, m.horizon, m.time_points)
    rows = []
    for t in times:
        comp = readout_rates(pair, float(t))
        decay = math.exp(-m.gamma_b * t)
        rate_ra = eta_r * comp.g_ra * n_b * decay + comp.s_ra
        rate_rs = eta_r * comp.g_rs * n_b * decay + comp.s_rs
        rows.append((t, comp.g_ra, comp.s_ra, comp.g_rs, comp.s_rs, rate_ra, rate_rs, rate_ra + rate_rs))
    path = _out_dir(args) / "evolve.csv"
    _write_csv(path, ("t", "g_ra", "s_ra", "g_rs", "s_rs", "rate_ra", "rate_rs", "rate_total"), rows)
    print(f"wrote {path} ({len(rows)} points, chi={pair.chi:.6g}, xi={pair.xi:.6g})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if cfg.model.sweep_deltas is None:
        raise ConfigError("[model] sweep_deltas is required for the sweep command")
    rows = detuning_sweep(cfg.model.scale, cfg.model.horizon, cfg.model.sweep_deltas)
    path = _out_dir(args) / "sweep.csv"
    _write_csv(path, SWEEP_COLUMNS, rows)
    print(f"wrote {path} ({rows.shape[0]} detunings)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    spec = cfg.sim_spec()
    path = _out_dir(args) / cfg.run.stack_name
    meta = write_stack_file(spec, path, threads=cfg.run.threads, chunk_shots=cfg.run.chunk_shots)
    truth = meta.gains_used
    print(
        f"wrote {path} ({meta.shots} shots, mode={meta.mode}, "
        f"gbar_ra={truth.g_ra:.6g}, gbar_rs={truth.g_rs:.6g})"
    )
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _load_config(args)
    reader = open_stack(args.stack)
    a = cfg.analyze
    cmap, peaks, gains = analyze_stack(
        reader,
        ref_mode=a.ref_mode,
        window=a.peak_window,
        n_boot=a.bootstrap,
        boot_seed=reader.meta.seed,
        chunk_shots=cfg.run.chunk_shots,
    )
    out = _out_dir(args)
    map_path = out / "corr_map.csv"
    with open(map_path, "w", encoding="ascii") as fh:
        for row in cmap.values:
            fh.write(",".join(_fmt(float(v)) for v in row) + "\n")
    truth = reader.meta.gains_used
    eff = reader.meta.efficiency
    summary = [
        ("ref_pixel_x", str(cmap.ref_pixel[0])),
        ("ref_pixel_y", str(cmap.ref_pixel[1])),
        ("peak_ra_x", str(gains.peaks.ra[0])),
        ("peak_ra_y", str(gains.peaks.ra[1])),
        ("peak_rs_x", str(gains.peaks.rs[0])),
        ("peak_rs_y", str(gains.peaks.rs[1])),
        ("c_ws_ra", float(peaks.c_ws_ra)),
        ("c_ws_rs", float(peaks.c_ws_rs)),
        ("g_eff_ra", float(gains.g_eff_ra)),
        ("stderr_ra", float(gains.stderr_ra)),
        ("g_eff_rs", float(gains.g_eff_rs)),
        ("stderr_rs", float(gains.stderr_rs)),
        ("truth_g_eff_ra", float(eff.eta_w * eff.eta_r * truth.g_ra)),
        ("truth_g_eff_rs", float(eff.eta_w * eff.eta_r * truth.g_rs)),
    ]
    gains_path = out / "gains.txt"
    _write_kv(gains_path, summary)
    print(f"wrote {map_path} and {gains_path}")
    print(
        f"g_eff_ra={gains.g_eff_ra:.4f}+-{gains.stderr_ra:.4f} "
        f"g_eff_rs={gains.g_eff_rs:.4f}+-{gains.stderr_rs:.4f}"
    )
    return EXIT_OK


def _load_trace(path: Path):
    times, counts = [], []
    for line in Path(path).read_text(encoding="ascii").splitlines():
        parts = line.replace(",", " ").split()
        if len(parts) < 2:
            continue
        try:
            t, c = float(parts[0]), float(parts[1])
        except ValueError:
            continue  # header line
        times.append(t)
        counts.append(c)
    if not times:
        raise DomainError(f"no numeric (t, counts) rows found in {path}")
    return np.asarray(times), np.asarray(counts)


def _parse_window(text: str | None, default_points: int, counts) -> tuple[str, int]:
    if text:
        try:
            kind, k = text.split(":")
            return kind, int(k)
        except ValueError as exc:
            raise ConfigError(f"--window must look like first:10 or last:10, got {text!r}") from exc
    kind = "first" if counts[-1] <= counts[0] else "last"
    return kind, default_points


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    if args.trace:
        times, counts = _load_trace(args.trace)
        source = str(args.trace)
    else:
        pair = cfg.coupling_pair()
        times, counts = simulate_gated_counts(
            pair,
            n_b=cfg.write.mean_nb * cfg.write.eta_w,
            gates=cfg.gates(),
            detection=cfg.detection_model(),
            eta_r=cfg.write.eta_r,
            gamma_b=cfg.model.gamma_b,
            pulse_duration=cfg.model.horizon,
        )
        source = "gated-count model"
        trace_path = _out_dir(args) / "trace.csv"
        _write_csv(trace_path, ("t", "counts"), list(zip(times, counts)))
    kind, k = _parse_window(args.window, cfg.analyze.fit_points, counts)
    fit = fit_exponential(times, counts, (kind, k))
    path = _out_dir(args) / "fit.txt"
    _write_kv(
        path,
        [
            ("source", source),
            ("window_kind", kind),
            ("window_points", str(k)),
            ("window_t0", float(fit.window[0])),
            ("window_t1", float(fit.window[1])),
            ("rate", float(fit.rate)),
            ("amplitude", float(fit.amplitude)),
            ("rms_residual", float(fit.rms_residual)),
        ],
    )
    print(f"wrote {path}: rate={fit.rate:.6g} amplitude={fit.amplitude:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fwm",
        description="Simulate and analyze four-wave-mixing readout from a Raman atomic memory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, default=None, help="run configuration file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=None, help="override worker count")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")

    p = sub.add_parser("evolve", help="tabulate gain/noise rate evolution")
    add_common(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("sweep", help="tabulate integrated components over a detuning grid")
    add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="generate a frame stack file")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="correlation map and effective gains from a stack file")
    p.add_argument("stack", type=Path, help="FWMSTACK1 file")
    add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="windowed exponential fit of a gated trace")
    p.add_argument("trace", type=Path, nargs="?", default=None, help="CSV trace (t, counts); omit to use the model")
    p.add_argument("--window", default=None, help="fit window, e.g. first:10 or last:10")
    add_common(p)
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StackFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, FwmError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
