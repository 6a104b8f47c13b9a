"""Command-line experiment runner.

    nvcat run EXPERIMENT [-c FILE] [--set section.key=value ...] [--n N] [--sign +|-] [-o DIR]
    nvcat sweep [-c FILE] --param AXIS --values v1,v2,... [--workers K] [-o DIR]

Every artifact starts with a header naming the experiment, the package
version and the resolved configuration; nothing time- or host-dependent is
written, so the same configuration gives byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, estimators, interference, protocols, units
from .config import EXPERIMENTS, SWEEP_AXES, ConfigError, ScenarioConfig, help_text, load, parse_override
from .errors import NumericError
from .grid import GridSpec

OUTPUT_ENV = "NVCAT_OUTPUT_DIR"
_NM = 1e9


# ---------------------------------------------------------------------------
# Serialization


def _header_items(cfg: ScenarioConfig) -> list[tuple[str, str]]:
    # output.* is excluded so that the same run in two directories is byte-identical
    items = [("generator", f"nvcat {__version__}"), ("experiment", cfg.experiment)]
    for sec in ("params", "numerics", "sweep"):
        for key, val in cfg.raw[sec].items():
            if (sec, key) == ("numerics", "workers"):
                continue  # execution setting; rows do not depend on it
            items.append((f"{sec}.{key}", val))
    return items


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if x is None or isinstance(x, str):
        return x
    return str(x)


class Writer:
    """Collects artifacts in one output directory and records them for the manifest."""

    def __init__(self, cfg: ScenarioConfig, out_dir: Path):
        self.cfg = cfg
        self.dir = out_dir
        self.files: list[str] = []
        self.dir.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, columns: list[str], rows, note: str = "") -> Path:
        rows = np.asarray(rows, dtype=float).reshape(-1, len(columns))
        path = self.dir / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for k, v in _header_items(self.cfg):
                fh.write(f"# {k} = {v}\n")
            if note:
                fh.write(f"# note = {note}\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join("%.16e" % v for v in row) + "\n")
        self.files.append(name)
        return path

    def json(self, name: str, payload: dict) -> Path:
        doc = {"header": dict(_header_items(self.cfg))}
        doc.update(_jsonable(payload))
        path = self.dir / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, indent=2, allow_nan=False)
            fh.write("\n")
        self.files.append(name)
        return path

    def manifest(self) -> Path:
        p = self.cfg.params()
        resolved_si = {f: getattr(p, f) for f in p.__dataclass_fields__}
        payload = {
            "config": {sec: dict(self.cfg.raw[sec]) for sec in ("scenario", "params", "numerics", "sweep")},
            "params_si": resolved_si,
            "files": sorted(self.files),
        }
        return self.json("manifest.json", payload)


def _tag(x: float) -> str:
    return f"{x:g}".replace("+", "")


def _sign_name(sign: int) -> str:
    return "plus" if sign > 0 else "minus"


def _signs(cfg) -> list[int]:
    return [1 if s == "+" else -1 for s in cfg.numerics["sign"]]


def _grid(cfg) -> GridSpec:
    return GridSpec(cfg.numerics["grid_points"], cfg.numerics["grid_extent"])


def _dim(cfg):
    return cfg.numerics["fock_dim"] or None


def _density_rows(z, density, stride):
    return np.column_stack([z[::stride] * _NM, density[::stride] / _NM])


# ---------------------------------------------------------------------------
# Experiments


def exp_fidelity_scan(cfg, w: Writer):
    p = cfg.params()
    omega = p.omega_m2
    dim = _dim(cfg) or 64
    scan = protocols.fidelity_scan(cfg.numerics["s_values"], omega_m=omega, dim=dim)
    w.csv("fidelity_scan.csv", ["s", "peak_fidelity", "peak_time_over_t1"], scan,
          note="transfer of (|+> - |->)/sqrt(2) onto (|0> + i|1>)/sqrt(2); interaction frame")
    c = 1 / math.sqrt(2)
    for s in cfg.numerics["trace_s"]:
        r = protocols.superposition_transfer(-c, c, "full", omega_m=omega, lam=omega / s, dim=dim)
        series = r.fidelity_series.copy()
        series[:, 0] /= r.summary["t1"]
        w.csv(f"fidelity_trace_s{_tag(s)}.csv", ["t_over_t1", "fidelity"], series)


def exp_fock_ladder(cfg, w: Writer):
    p = cfg.params()
    lam = units.derive(p).lam
    mode = cfg.numerics["ladder_mode"]
    modes = ["ideal", "full"] if mode == "both" else [mode]
    for m in modes:
        rows = []
        for n in range(1, cfg.numerics["ladder_max"] + 1):
            r = protocols.fock_ladder(n, m, omega_m=p.omega_m2, lam=lam, dim=_dim(cfg))
            s = r.summary
            rows.append((n, s["fidelity"], s["peak_fidelity"], s["durations"][-1], s["s"]))
        w.csv(f"fock_ladder_{m}.csv", ["n", "fidelity", "peak_fidelity", "last_step_s", "s"], rows)


def exp_qnd(cfg, w: Writer):
    p = cfg.params()
    lam = units.derive(p).lam
    det = p.qnd_detuning
    hold = cfg.numerics["hold_time"]
    rows = []
    chi = math.nan
    for n in cfg.numerics["qnd_n"]:
        r = protocols.qnd_protocol(n, hold, omega_m=p.omega_m2, lam=lam, detuning=det, dim=_dim(cfg))
        s = r.summary
        chi = s["chi"]
        rows.append((n, s["phase"], s["expected"], s["full_differential"], s["full_deviation"]))
    w.csv("qnd_phase.csv", ["n", "phase", "expected_2chi_n_t", "full_model_differential", "full_model_deviation"], rows)
    two_chi_hz = units.to_hz(2 * abs(chi))
    w.json("qnd.json", {
        "lambda_hz": units.to_hz(lam),
        "chi_hz": units.to_hz(chi),
        "two_chi_hz": two_chi_hz,
        "reference_two_chi_hz": 25e3,
        "within_factor_3": 25e3 / 3 <= two_chi_hz <= 25e3 * 3,
        "hold_time_s": hold,
    })


def exp_cat(cfg, w: Writer):
    p = cfg.params()
    grid = _grid(cfg)
    samples = cfg.numerics["time_samples"]
    stride = cfg.numerics["csv_stride"]
    summaries = []
    for n in cfg.numerics["n"]:
        for sign in _signs(cfg):
            r = protocols.cat_pipeline(n, p, sign, dim=_dim(cfg), snapshots=samples, snapshot_grid=grid)
            summaries.append(r.summary)
        z = grid.z
        blocks = []
        for t, dens in zip(r.extras["snapshot_times"], r.extras["snapshot_density"]):
            d = _density_rows(z, dens, stride)
            blocks.append(np.column_stack([np.full(len(d), t * 1e6), d]))
        w.csv(f"cat_density_n{n}.csv", ["t_us", "z_nm", "density_per_nm"], np.vstack(blocks),
              note="spin-traced position density over one period of the final trap")
    w.json("cat_summary.json", {"runs": summaries})


def _central_linf(a, b, mask):
    return float(np.max(np.abs(a[mask] - b[mask])) / np.max(np.abs(b[mask])))


def exp_interference(cfg, w: Writer):
    p = cfg.params()
    d = units.derive(p)
    grid = _grid(cfg)
    t = p.flight_time
    stride = cfg.numerics["csv_stride"]
    runs = []
    for n in cfg.numerics["n"]:
        for sign in _signs(cfg):
            r = protocols.cat_pipeline(n, p, sign, dim=_dim(cfg), grid=grid)
            rep = interference.pattern(r.extras["wavefunction"], t, d.D_m)
            w.csv(f"interference_n{n}_{_sign_name(sign)}.csv", ["z_nm", "density_per_nm"],
                  _density_rows(rep.z, rep.density, stride))
            entry = {
                "n": n,
                "sign": sign,
                "period_measured_m": rep.period_measured,
                "period_predicted_m": rep.period_predicted,
                "visibility": rep.visibility,
                "density_at_zero_over_peak": float(rep.density[grid.n_points // 2] / rep.density.max()),
            }
            if n == 0 and sign > 0:
                ref = interference.analytic_pattern_vacuum(d.D_m / 2, t, d.beta, grid, p.mass)
                entry["closed_form_linf_central"] = _central_linf(rep.density, ref.density, rep.central(3))
            runs.append(entry)
    w.json("interference_summary.json", {"D_m_m": d.D_m, "flight_time_s": t, "runs": runs})


def exp_thermal(cfg, w: Writer):
    p = cfg.params()
    grid = _grid(cfg)
    stride = cfg.numerics["csv_stride"]
    cache: dict = {}
    runs = []
    for sign in _signs(cfg):
        vac = interference.thermal_pattern(0.0, p, sign=sign, grid=grid, cache=cache)
        peak = vac.density.max()
        for nbar in cfg.numerics["nbar"]:
            rep = interference.thermal_pattern(nbar, p, sign=sign, grid=grid, cache=cache)
            w.csv(f"thermal_{_sign_name(sign)}_nbar{_tag(nbar)}.csv", ["z_nm", "density_per_nm"],
                  _density_rows(rep.z, rep.density, stride))
            w0, w1 = interference.thermal_weights(nbar)
            runs.append({
                "sign": sign,
                "nbar": nbar,
                "weights": [w0, w1],
                "visibility": rep.visibility,
                "period_measured_m": rep.period_measured,
                "linf_vs_vacuum_over_peak": float(np.max(np.abs(rep.density - vac.density)) / peak),
            })
    w.json("thermal_summary.json", {"runs": runs})


def exp_decoherence(cfg, w: Writer):
    rep = estimators.feasibility_report(cfg.params())
    w.json("decoherence.json", rep.as_dict())


def exp_table_numbers(cfg, w: Writer):
    p = cfg.params()
    fock = units.scenario_fock().with_(T2=p.T2)
    d5, df = units.derive(p), units.derive(fock)
    fig3 = units.derive(units.scenario_fig3())
    rep = estimators.feasibility_report(p, fock_params=fock)
    w.json("table_numbers.json", {
        "fock_trap": {
            "lambda_hz": units.to_hz(df.lam),
            "chi_hz": units.to_hz(df.chi),
            "two_chi_hz": units.to_hz(2 * abs(df.chi)),
            "a0_m": df.a0,
        },
        "cat_fig3": {"lambda_hz": units.to_hz(fig3.lam), "a2_m": fig3.a2, "D_m_m": fig3.D_m},
        "cat_fig5": {
            "lambda_hz": units.to_hz(d5.lam),
            "a2_m": d5.a2,
            "D_m_m": d5.D_m,
            "D_m_over_a2": d5.D_m / d5.a2,
            "fringe_period_m": d5.fringe_period,
            "splitting_hz": units.to_hz(d5.splitting),
            "prep_time_s": math.pi / p.omega_m2,
        },
        "decoherence": rep.as_dict(),
    })


# ---------------------------------------------------------------------------
# Sweeps

SWEEP_COLUMNS = {
    "closed": ["value", "lambda_hz", "a2_m", "D_m_m", "D_m_over_a2", "D_m_over_d", "fringe_period_m"],
    "s": ["s", "peak_fidelity", "peak_time_over_t1"],
    "nbar": ["nbar", "w0", "w1", "visibility", "period_measured_m", "linf_vs_vacuum_over_peak"],
}


def _sweep_row(axis: str, value: float, params: units.ExperimentParams, dim: int):
    """One independent sweep row (top-level so worker processes can pickle it)."""
    if axis == "s":
        return tuple(protocols.fidelity_scan([value], omega_m=params.omega_m2, dim=dim)[0])
    if axis == "G":
        params = params.with_(G=value)
    elif axis == "f_m2":
        params = params.with_(omega_m2=2 * math.pi * value)
    elif axis == "d":
        params = params.with_(d=value)
    m = params.mass
    lam = units.coupling_lambda(params.G, m, params.omega_m2)
    a2 = units.zero_point_width(m, params.omega_m2)
    D_m = units.max_separation(params.G, m, params.omega_m2)
    period = units.fringe_period(params.flight_time, m, D_m) if D_m > 0 else math.inf
    return (value, units.to_hz(lam), a2, D_m, D_m / a2, D_m / params.d, period)


def sweep_table(cfg: ScenarioConfig, axis: str, values, workers: int = 0):
    """Rows for ``axis`` over ``values`` in input order; returns (columns, rows)."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep.param = {axis!r}: must be one of {', '.join(SWEEP_AXES)}")
    values = list(values)
    p = cfg.params()
    if axis == "nbar":
        grid = _grid(cfg)
        cache: dict = {}
        rows = []
        vac = interference.thermal_pattern(0.0, p, grid=grid, cache=cache) if values else None
        for nbar in values:
            rep = interference.thermal_pattern(nbar, p, grid=grid, cache=cache)
            w0, w1 = interference.thermal_weights(nbar)
            linf = float(np.max(np.abs(rep.density - vac.density)) / vac.density.max())
            rows.append((nbar, w0, w1, rep.visibility, rep.period_measured, linf))
        return SWEEP_COLUMNS["nbar"], rows
    cols = SWEEP_COLUMNS["s"] if axis == "s" else SWEEP_COLUMNS["closed"]
    if axis != "s":
        cols = [axis] + cols[1:]
    dim = _dim(cfg) or 64
    workers = workers or os.cpu_count() or 1
    args = ([axis] * len(values), values, [p] * len(values), [dim] * len(values))
    if workers == 1 or len(values) <= 1:
        rows = list(map(_sweep_row, *args))
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(values))) as ex:
            rows = list(ex.map(_sweep_row, *args))
    return cols, rows


def exp_sweep(cfg, w: Writer, axis=None, values=None, workers=None):
    axis = axis or cfg.sweep["param"]
    values = cfg.sweep["values"] if values is None else values
    workers = cfg.numerics["workers"] if workers is None else workers
    cols, rows = sweep_table(cfg, axis, values, workers)
    w.csv(f"sweep_{axis}.csv", cols, rows)


EXPERIMENT_FUNCS = {
    "fidelity-scan": exp_fidelity_scan,
    "fock-ladder": exp_fock_ladder,
    "qnd": exp_qnd,
    "cat": exp_cat,
    "interference": exp_interference,
    "thermal": exp_thermal,
    "decoherence": exp_decoherence,
    "sweep-Dm": exp_sweep,
    "table-numbers": exp_table_numbers,
}
assert set(EXPERIMENT_FUNCS) == set(EXPERIMENTS)


# ---------------------------------------------------------------------------
# Entry point


def _output_dir(cfg: ScenarioConfig, flag: str | None) -> Path:
    if flag:
        return Path(flag)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env)
    return Path(cfg.output["path"])


def run(cfg: ScenarioConfig, out_dir: Path) -> list[str]:
    """Run ``cfg.experiment`` into ``out_dir``; returns the written file names."""
    w = Writer(cfg, out_dir)
    EXPERIMENT_FUNCS[cfg.experiment](cfg, w)
    w.manifest()
    return sorted(w.files)


def sweep(cfg: ScenarioConfig, out_dir: Path, axis: str, values, workers: int = 0) -> list[str]:
    w = Writer(cfg, out_dir)
    exp_sweep(cfg, w, axis, values, workers)
    w.manifest()
    return sorted(w.files)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="INI configuration file")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("-o", "--output", help=f"output directory (beats ${OUTPUT_ENV} and output.path)")
    common.add_argument("--workers", type=int, help="worker processes for sweeps (default: all cores)")

    ap = argparse.ArgumentParser(
        prog="nvcat",
        description="Run NV-nanodiamond Fock-state, cat-state and interference experiments.",
        epilog=help_text(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("--version", action="version", version=f"nvcat {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run one experiment", epilog=help_text(),
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    r.add_argument("experiment", nargs="?", choices=EXPERIMENTS, help="experiment (default: scenario.experiment)")
    r.add_argument("--n", help="initial Fock state(s), e.g. 0 or 0,1")
    r.add_argument("--sign", help="cat parity sign(s): +, - or +,-")
    s = sub.add_parser("sweep", parents=[common], help="tabulate a quantity over one parameter",
                       epilog=help_text(), formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("--param", choices=SWEEP_AXES, help="swept parameter (default: sweep.param)")
    s.add_argument("--values", help="comma-separated values in config units (default: sweep.values)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        overrides = dict(parse_override(item) for item in args.set)
        if args.workers is not None:
            overrides[("numerics", "workers")] = str(args.workers)
        if args.command == "run":
            if args.n is not None:
                overrides[("numerics", "n")] = args.n
            if args.sign is not None:
                overrides[("numerics", "sign")] = args.sign
            cfg = load(args.config, overrides, args.experiment)
            files = run(cfg, _output_dir(cfg, args.output))
        else:
            if args.param is not None:
                overrides[("sweep", "param")] = args.param
            if args.values is not None:
                overrides[("sweep", "values")] = args.values
            cfg = load(args.config, overrides, "sweep-Dm")
            files = sweep(cfg, _output_dir(cfg, args.output), cfg.sweep["param"], cfg.sweep["values"],
                          cfg.numerics["workers"])
    except ConfigError as exc:
        print(f"nvcat: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"nvcat: I/O error: {exc}", file=sys.stderr)
        return 4
    except (NumericError, ValueError, ArithmeticError) as exc:
        print(f"nvcat: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
