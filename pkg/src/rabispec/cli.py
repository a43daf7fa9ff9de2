"""Command-line entry point: ``rabispec {spectrum,heatmap,pulse,compare,verify}``.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 computation error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__, protocols, sweep
from .config import RunConfig, load_config, load_preset, preset_names
from .errors import ConfigError, NoOptimumError, NoRootError, PropagationError, RabiSpecError
from .output import write_matrix, write_table
from .protocols import PHYSICAL, NoiseModel, RamseyOatSpec

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3

SPECTRUM_COLUMNS = ("delta_rad_s", "mean_jz", "mean_jz_over_n", "var_jz", "var_jz_noisy",
                    "slope", "precision")
COMPARE_COLUMNS = ("duration_s", "rabi_sigma0", "rabi_noisy", "ramsey_sigma0", "ramsey_noisy", "sql")


def _meta(cfg: RunConfig, **extra):
    meta = {"config": cfg.to_dict(), "engine_version": __version__}
    meta.update(extra)
    return meta


def _resolved(params):
    return {"n_atoms": params.n_atoms, "rabi_freq_rad_s": params.rabi_freq,
            "detuning_rad_s": params.detuning, "interaction_rad_s": params.interaction,
            "duration_s": params.duration}


# -- runners (pure: config in, data out) ------------------------------------


def spectrum_grid(cfg: RunConfig) -> sweep.ScanGrid:
    if "delta" not in cfg.grid:
        raise ConfigError("field 'grid.delta': required for spectrum")
    return sweep.ScanGrid("detuning", cfg.axis(cfg.grid["delta"], "delta", "grid.delta"),
                          cfg.rabi_params(), cfg.initial_selector(), cfg.noise_model())


def run_spectrum(cfg: RunConfig, threads: int = 1):
    grid = spectrum_grid(cfg)
    fd_step = cfg.fd_step()
    rows = (r[:7] for r in sweep.iter_scan_delta(grid, threads, fd_step))
    return SPECTRUM_COLUMNS, rows


def run_heatmap(cfg: RunConfig, threads: int = 1) -> sweep.HeatmapResult:
    axes = []
    for key in ("axis1", "axis2"):
        spec = cfg.grid.get(key)
        if not isinstance(spec, dict) or "name" not in spec:
            raise ConfigError(f"field 'grid.{key}': required object with a 'name'")
        axes.append((spec["name"], cfg.axis(spec, spec["name"], f"grid.{key}")))
    try:
        grid = sweep.ScanGrid(axes[0][0], axes[0][1], cfg.rabi_params(), cfg.initial_selector(),
                              cfg.noise_model(), axes[1][0], axes[1][1])
    except RabiSpecError as exc:
        raise ConfigError(f"field 'grid': {exc}") from None
    return sweep.heatmap(grid, threads, cfg.fd_step())


def run_pulse(cfg: RunConfig, threads: int = 1):
    params = cfg.rabi_params()
    scan = cfg.grid.get("scan", "epsilon")
    if scan not in ("epsilon", "rabi_freq_pulse"):
        raise ConfigError(f"field 'grid.scan': must be 'epsilon' or 'rabi_freq_pulse', got {scan!r}")
    if scan not in cfg.grid:
        raise ConfigError(f"field 'grid.{scan}': required")
    values = cfg.axis(cfg.grid[scan], scan, f"grid.{scan}")
    window = cfg.window("search", "delta_window", frequency=True)
    ideal_target = protocols.initial_state("antisymmetric", params.n_atoms)

    if scan == "epsilon":
        columns = ("epsilon", "delta_root_rad_s")

        def row(eps):
            spec = cfg.pulse_spec(epsilon=float(eps))
            return (eps, protocols.locate_antisymmetric_point(spec, params, window))
    else:
        columns = ("rabi_freq_pulse_rad_s", "overlap", "delta_root_rad_s")

        def row(omega_pul):
            spec = cfg.pulse_spec(rabi_freq_pulse=float(omega_pul), mode=PHYSICAL)
            prepared = protocols.initial_state(spec, params.n_atoms, params.detuning)
            return (omega_pul, ideal_target.fidelity(prepared),
                    protocols.locate_antisymmetric_point(spec, params, window))

    return columns, list(sweep._ordered_map(row, values, threads))


def _ramsey_precision(n, chi, total, delta, sigma, tp):
    try:
        spec = RamseyOatSpec(chi, n, total, squeezing_time=tp)
    except RabiSpecError:
        return math.nan
    return protocols.ramsey_oat_reference(spec, delta, NoiseModel(sigma)).precision


def run_compare(cfg: RunConfig, threads: int = 1):
    params = cfg.rabi_params()
    if "duration" not in cfg.grid:
        raise ConfigError("field 'grid.duration': required for compare")
    times = cfg.axis(cfg.grid["duration"], "duration", "grid.duration")
    sigma = cfg.value(cfg.grid.get("sigma", "sqrt(N)"), "grid.sigma")
    tp = cfg.grid.get("squeezing_time")
    tp = None if tp is None else cfg.value(tp, "grid.squeezing_time")
    initial = cfg.initial_selector()
    fd_step = cfg.fd_step()
    if np.any(times <= 0):
        raise ConfigError("field 'grid.duration': evolution times must be positive")
    rabi0 = sweep.precision_curve(initial, params, times, NoiseModel(0.0), fd_step)
    rabi1 = sweep.precision_curve(initial, params, times, NoiseModel(sigma), fd_step)

    def ramsey(t):
        return (_ramsey_precision(params.n_atoms, params.interaction, t, params.detuning, 0.0, tp),
                _ramsey_precision(params.n_atoms, params.interaction, t, params.detuning, sigma, tp))

    ram = list(sweep._ordered_map(ramsey, times, threads))
    rows = [(t, a, b, r0, r1, sweep.sql(params.n_atoms, t))
            for t, a, b, (r0, r1) in zip(times, rabi0, rabi1, ram)]
    extra = {"sigma_noisy": sigma}
    if "t_window" in cfg.search:
        window = cfg.window("search", "t_window", frequency=False)
        points = int(cfg.search.get("grid_points", 2000))
        for label, noise in (("optimum_sigma0", NoiseModel(0.0)), ("optimum_noisy", NoiseModel(sigma))):
            best = sweep.optimal_time(initial, params, window, noise, points, fd_step)
            extra[label] = {"duration_s": best.duration, "precision": best.precision}
    return COMPARE_COLUMNS, rows, extra


# -- argument handling --------------------------------------------------------


def _common(parser):
    src = parser.add_mutually_exclusive_group()
    src.add_argument("--config", help="path to a JSON run configuration")
    src.add_argument("--preset", help=f"bundled preset name ({', '.join(preset_names())})")
    parser.add_argument("--out", help="output path ('-' for stdout)")
    parser.add_argument("--format", choices=("csv", "json"), help="output format")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field, e.g. params.interaction=0.01")


def build_parser():
    parser = argparse.ArgumentParser(prog="rabispec",
                                     description="Antisymmetric Rabi spectroscopy of interacting collective spins.")
    parser.add_argument("--version", action="version", version=f"rabispec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("spectrum", "detuning scan of signal, fluctuation, slope and precision"),
                            ("heatmap", "precision at resonance on a two-parameter grid"),
                            ("pulse", "antisymmetric-point shift under imperfect pi/2 pulses"),
                            ("compare", "Rabi versus squeezed Ramsey precision against time")):
        _common(sub.add_parser(name, help=help_text))
    verify = sub.add_parser("verify", help="run the invariant and golden-file checks")
    verify.add_argument("--level", choices=("fast", "full"), default="fast")
    verify.add_argument("--json", action="store_true", help="print a machine-readable report")
    verify.add_argument("--golden-dir", help="directory of golden CSV files")
    verify.add_argument("--threads", type=int, default=1)
    return parser


def resolve_config(args) -> RunConfig:
    if args.preset:
        cfg = load_preset(args.preset)
    elif args.config:
        cfg = load_config(args.config)
    else:
        raise ConfigError("one of --config or --preset is required")
    if cfg.command not in (None, args.command):
        raise ConfigError(f"configuration is for '{cfg.command}', not '{args.command}'")
    overrides = list(args.overrides)
    if args.out:
        overrides.append(f"output.path={json.dumps(args.out)}")
    if args.format:
        overrides.append(f"output.format={json.dumps(args.format)}")
    return cfg.with_overrides(overrides) if overrides else cfg


def execute(cfg: RunConfig, command: str, threads: int = 1):
    path = cfg.output.get("path", "-")
    fmt = cfg.output.get("format", "csv")
    resolved = _resolved(cfg.rabi_params())
    if command == "spectrum":
        columns, rows = run_spectrum(cfg, threads)
        write_table(path, fmt, columns, rows, _meta(cfg, resolved=resolved))
    elif command == "heatmap":
        result = run_heatmap(cfg, threads)
        write_matrix(path, fmt, result, _meta(cfg, resolved=resolved))
    elif command == "pulse":
        columns, rows = run_pulse(cfg, threads)
        write_table(path, fmt, columns, rows, _meta(cfg, resolved=resolved))
    elif command == "compare":
        columns, rows, extra = run_compare(cfg, threads)
        for key in ("optimum_sigma0", "optimum_noisy"):
            if key in extra:
                print(f"{key}: T = {extra[key]['duration_s']:.10g} s, "
                      f"precision = {extra[key]['precision']:.10g}", file=sys.stderr)
        write_table(path, fmt, columns, rows, _meta(cfg, resolved=resolved, **extra))
    else:
        raise ConfigError(f"unknown command {command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            from .verify import run_verify
            return run_verify(args.level, as_json=args.json, golden_dir=args.golden_dir,
                              threads=args.threads)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = resolve_config(args)
        execute(cfg, args.command, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoRootError, NoOptimumError, PropagationError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except RabiSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except BrokenPipeError:
        # downstream closed early, e.g. piped into head
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
