"""Parameter scans: detuning spectra, precision heatmaps and optimal-time search."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np
from scipy import optimize

from . import dynamics, protocols
from .analytic import DIVERGED
from .dynamics import RabiParams
from .errors import InvalidParameterError, NoOptimumError, RabiSpecError
from .protocols import NOISELESS, InitialSelector, NoiseModel

AXIS_NAMES = ("detuning", "rabi_freq", "interaction", "duration", "n_atoms")


def _check_axis(name, values):
    if name not in AXIS_NAMES:
        raise InvalidParameterError(f"unknown scan axis {name!r}; expected one of {AXIS_NAMES}")
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size == 0:
        raise InvalidParameterError(f"scan axis {name!r} has no values")
    steps = np.diff(values)
    if values.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise InvalidParameterError(f"scan axis {name!r} is not strictly monotone")
    return values


@dataclass(frozen=True, eq=False)
class ScanGrid:
    axis1_name: str
    axis1_values: np.ndarray
    baseline: RabiParams
    initial: InitialSelector = "antisymmetric"
    noise: NoiseModel = NOISELESS
    axis2_name: str | None = None
    axis2_values: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "axis1_values", _check_axis(self.axis1_name, self.axis1_values))
        if self.axis2_name is not None:
            object.__setattr__(self, "axis2_values", _check_axis(self.axis2_name, self.axis2_values))

    def params_at(self, value1, value2=None) -> RabiParams:
        changes = {self.axis1_name: value1}
        if self.axis2_name is not None:
            changes[self.axis2_name] = value2
        if "n_atoms" in changes:
            changes["n_atoms"] = int(round(changes["n_atoms"]))
        return self.baseline.with_(**changes)


class SpectrumRow(NamedTuple):
    delta: float
    mean_jz: float
    mean_jz_scaled: float
    var_jz: float
    var_jz_noisy: float
    slope: float
    precision: float
    error: str | None = None


@dataclass
class SpectrumTable:
    rows: list = field(default_factory=list)
    n_atoms: int = 0

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def antisymmetry_residual(self) -> float:
        """max |<Jz>(delta) + <Jz>(-delta)| over detunings whose mirror is also in the table."""
        means = {r.delta: r.mean_jz for r in self.rows}
        pairs = [abs(m + means[-d]) for d, m in means.items() if -d in means]
        return max(pairs) if pairs else 0.0


def _run(initial, params, noise, fd_step):
    return protocols.measure(initial, params, noise, fd_step)


def _spectrum_row(grid, delta, fd_step):
    params = grid.baseline.with_(detuning=float(delta))
    try:
        m = _run(grid.initial, params, grid.noise, fd_step)
    except RabiSpecError as exc:
        nan = math.nan
        return SpectrumRow(float(delta), nan, nan, nan, nan, nan, nan, f"{type(exc).__name__}: {exc}")
    return SpectrumRow(float(delta), m.mean_jz, m.mean_jz / params.n_atoms,
                       m.var_jz, m.var_jz_noisy, m.slope, m.precision)


def _ordered_map(func, items, threads):
    if threads is None or threads <= 1:
        yield from map(func, items)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # Executor.map yields in submission order
        yield from pool.map(func, items)


def iter_scan_delta(grid: ScanGrid, threads: int = 1, fd_step: float | None = None) -> Iterator[SpectrumRow]:
    """Rows of a detuning scan, streamed in grid order.

    A failing detuning produces a row of NaNs carrying the error message
    rather than aborting the scan.
    """
    if grid.axis1_name != "detuning":
        raise InvalidParameterError(f"a spectrum scans 'detuning', not {grid.axis1_name!r}")
    yield from _ordered_map(lambda d: _spectrum_row(grid, d, fd_step), grid.axis1_values, threads)


def scan_delta(grid: ScanGrid, threads: int = 1, fd_step: float | None = None) -> SpectrumTable:
    return SpectrumTable(list(iter_scan_delta(grid, threads, fd_step)), grid.baseline.n_atoms)


def sql(n_atoms: int, duration: float) -> float:
    """Standard quantum limit ``1 / (sqrt(N) T)``."""
    return 1 / (math.sqrt(n_atoms) * duration) if duration > 0 else math.inf


@dataclass
class HeatmapResult:
    axis1_name: str
    axis1_values: np.ndarray
    axis2_name: str
    axis2_values: np.ndarray
    precision: np.ndarray
    sql: np.ndarray

    @property
    def sub_sql(self) -> np.ndarray:
        return self.precision < self.sql


def heatmap(grid: ScanGrid, threads: int = 1, fd_step: float | None = None) -> HeatmapResult:
    """Precision at resonance (delta = 0, numeric slope) on a two-axis grid."""
    if grid.axis2_name is None:
        raise InvalidParameterError("a heatmap needs two axes")
    if "detuning" in (grid.axis1_name, grid.axis2_name):
        raise InvalidParameterError("heatmap cells are evaluated at resonance; detuning cannot be an axis")
    cells = [(a, b) for a in grid.axis1_values for b in grid.axis2_values]

    def cell(ab):
        params = grid.params_at(*ab).with_(detuning=0.0)
        try:
            value = _run(grid.initial, params, grid.noise, fd_step).precision
        except RabiSpecError:
            value = math.nan
        return value, sql(params.n_atoms, params.duration)

    results = list(_ordered_map(cell, cells, threads))
    shape = (grid.axis1_values.size, grid.axis2_values.size)
    return HeatmapResult(
        grid.axis1_name, grid.axis1_values, grid.axis2_name, grid.axis2_values,
        np.array([r[0] for r in results]).reshape(shape),
        np.array([r[1] for r in results]).reshape(shape),
    )


def precision_curve(initial: InitialSelector, params: RabiParams, times, noise: NoiseModel = NOISELESS,
                    fd_step: float | None = None) -> np.ndarray:
    """Precision at ``params.detuning`` for every evolution time in ``times``.

    Each of the three Hamiltonians (delta, delta +- h) is diagonalized once and
    reused for the whole time grid, so ``fd_step`` is one value for all times;
    by default ``1e-5 max(Omega, 1/max(times))``.
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    if fd_step is None:
        fd_step = protocols.default_fd_step(params.with_(duration=float(np.max(times))))
    stats = {}
    for key, delta in (("c", params.detuning), ("p", params.detuning + fd_step),
                       ("m", params.detuning - fd_step)):
        state = protocols.initial_state(initial, params.n_atoms, delta)
        prop = dynamics.propagator(params.with_(detuning=delta))
        stats[key] = dynamics.jz_stats(dynamics.evolve_times(state, prop, times))
    var_noisy = stats["c"][1] + noise.sigma**2
    out = np.empty(times.size)
    for i in range(times.size):
        _, out[i] = protocols._precision_from(var_noisy[i], stats["p"][0][i], stats["m"][0][i],
                                              fd_step, params.n_atoms)
    return out


class Optimum(NamedTuple):
    duration: float
    precision: float


def optimal_time(initial: InitialSelector, params: RabiParams, t_window, noise: NoiseModel = NOISELESS,
                 grid_points: int = 2000, fd_step: float | None = None) -> Optimum:
    """Evolution time minimizing the precision inside ``t_window``.

    Global minimum over a uniform grid, then bounded Brent refinement between
    the neighbouring grid points.  ``params.duration`` is ignored.
    """
    lo, hi = map(float, t_window)
    if not (0 < lo < hi and math.isfinite(hi)):
        raise InvalidParameterError(f"time window must satisfy 0 < lo < hi < inf, got {t_window!r}")
    if fd_step is None:
        fd_step = protocols.default_fd_step(params.with_(duration=hi))
    times = np.linspace(lo, hi, grid_points)
    curve = precision_curve(initial, params, times, noise, fd_step)
    finite = np.isfinite(curve)
    if not np.any(finite):
        raise NoOptimumError(f"precision diverges everywhere in [{lo}, {hi}]")
    i = int(np.argmin(np.where(finite, curve, np.inf)))
    a, b = times[max(i - 1, 0)], times[min(i + 1, grid_points - 1)]

    def objective(t):
        value = precision_curve(initial, params, [t], noise, fd_step)[0]
        return value if math.isfinite(value) else DIVERGED

    best = optimize.minimize_scalar(objective, bounds=(a, b), method="bounded",
                                    options={"xatol": 1e-10 * hi})
    if best.fun < curve[i]:
        return Optimum(float(best.x), float(best.fun))
    return Optimum(float(times[i]), float(curve[i]))
