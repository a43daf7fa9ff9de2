"""Spectroscopy protocols built on the propagator.

An *initial state selector* is accepted wherever a protocol needs an input
state.  It is one of

* ``"conventional"``  -- every atom in the lower level, ``|pi, 0>``;
* ``"antisymmetric"`` -- the x-polarized coherent state ``|pi/2, 0>``;
* a :class:`~rabispec.spin.DickeState`;
* a :class:`PulseSpec`, i.e. ``|pi, 0>`` after a (possibly imperfect) pi/2
  pulse.  In physical-evolution mode the pulse runs at the same detuning as the
  Rabi stage, so the pulse's own ``detuning`` field is replaced by the detuning
  of the run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import NamedTuple, Union

import numpy as np
from scipy import optimize

from . import dynamics, spin
from .analytic import DIVERGED
from .dynamics import RabiParams
from .errors import InvalidParameterError, NoRootError
from .spin import DickeState

IDEAL = "ideal-rotation"
PHYSICAL = "physical-evolution"

# |mean(delta+h) - mean(delta-h)| below this fraction of N is rounding noise
SLOPE_NOISE_FLOOR = 1e-10


@dataclass(frozen=True)
class PulseSpec:
    rabi_freq_pulse: float = 0.0
    interaction_pulse: float = 0.0
    detuning: float = 0.0
    epsilon: float = 0.0
    mode: str = IDEAL

    def __post_init__(self):
        if self.mode not in (IDEAL, PHYSICAL):
            raise InvalidParameterError(f"pulse mode must be {IDEAL!r} or {PHYSICAL!r}, got {self.mode!r}")
        if self.mode == PHYSICAL and not self.rabi_freq_pulse > 0:
            raise InvalidParameterError("physical-evolution pulses need rabi_freq_pulse > 0")

    @property
    def pulse_time(self) -> float:
        """``(1 + epsilon) pi / (2 Omega_pul)``, physical mode only."""
        return (1 + self.epsilon) * math.pi / (2 * self.rabi_freq_pulse)


@dataclass(frozen=True)
class NoiseModel:
    sigma: float = 0.0

    def __post_init__(self):
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise InvalidParameterError(f"detection noise sigma must be >= 0, got {self.sigma!r}")


NOISELESS = NoiseModel()

InitialSelector = Union[str, DickeState, PulseSpec]


def prepare_state(spec: PulseSpec, n_atoms: int) -> DickeState:
    """Apply the pi/2 pulse described by ``spec`` to ``|pi, 0>``.

    Ideal mode applies ``exp(i (1 + eps) pi/2 Jy)``; physical mode evolves
    under ``chi_pul Jz^2 + delta Jz - Omega_pul Jy`` for ``spec.pulse_time``.
    """
    down = spin.coherent_state(math.pi, 0.0, n_atoms)
    if spec.mode == IDEAL:
        return dynamics.rotate(down, "y", -(1 + spec.epsilon) * math.pi / 2)
    params = RabiParams(n_atoms, spec.rabi_freq_pulse, spec.detuning, spec.interaction_pulse)
    return dynamics.evolve(down, dynamics.propagator(params, "y"), spec.pulse_time)


def pulse_condition(spec: PulseSpec, n_atoms: int) -> float:
    """Right-hand side of ``Omega_pul >> (pi N^2 chi_pul + 2 pi delta N) / 8``."""
    return (math.pi * n_atoms**2 * spec.interaction_pulse + 2 * math.pi * spec.detuning * n_atoms) / 8


def initial_state(initial: InitialSelector, n_atoms: int, detuning: float = 0.0) -> DickeState:
    if isinstance(initial, DickeState):
        if initial.n_atoms != n_atoms:
            raise InvalidParameterError(f"initial state has N={initial.n_atoms}, run has N={n_atoms}")
        return initial
    if isinstance(initial, PulseSpec):
        if initial.mode == PHYSICAL:
            initial = replace(initial, detuning=detuning)
        return prepare_state(initial, n_atoms)
    if initial == "conventional":
        return spin.coherent_state(math.pi, 0.0, n_atoms)
    if initial == "antisymmetric":
        return spin.coherent_state(math.pi / 2, 0.0, n_atoms)
    raise InvalidParameterError(f"unknown initial state selector {initial!r}")


def _depends_on_detuning(initial):
    return isinstance(initial, PulseSpec) and initial.mode == PHYSICAL


class RabiResult(NamedTuple):
    mean_jz: float
    var_jz: float
    var_jz_noisy: float


class Measurement(NamedTuple):
    mean_jz: float
    var_jz: float
    var_jz_noisy: float
    slope: float
    precision: float


def run_rabi(initial: InitialSelector, params: RabiParams, noise: NoiseModel = NOISELESS) -> RabiResult:
    state = initial_state(initial, params.n_atoms, params.detuning)
    mean, var = dynamics.signal_jz(state, params)
    return RabiResult(mean, var, var + noise.sigma**2)


def default_fd_step(params: RabiParams) -> float:
    scale = params.rabi_freq
    if params.duration > 0:
        scale = max(scale, 1 / params.duration)
    return 1e-5 * (scale if scale > 0 else 1.0)


def _precision_from(var_noisy, mean_plus, mean_minus, fd_step, n_atoms):
    slope = (mean_plus - mean_minus) / (2 * fd_step)
    if (abs(slope) < 1e-14 * n_atoms
            or abs(mean_plus - mean_minus) <= SLOPE_NOISE_FLOOR * n_atoms):
        return slope, DIVERGED
    return slope, math.sqrt(var_noisy) / abs(slope)


def measure(initial: InitialSelector, params: RabiParams, noise: NoiseModel = NOISELESS,
            fd_step: float | None = None) -> Measurement:
    """Signal, fluctuation, central-difference slope and precision at ``params.detuning``."""
    h = default_fd_step(params) if fd_step is None else fd_step
    if not h > 0:
        raise InvalidParameterError(f"fd_step must be positive, got {h!r}")
    centre = run_rabi(initial, params, noise)
    plus = run_rabi(initial, params.with_(detuning=params.detuning + h)).mean_jz
    minus = run_rabi(initial, params.with_(detuning=params.detuning - h)).mean_jz
    slope, precision = _precision_from(centre.var_jz_noisy, plus, minus, h, params.n_atoms)
    return Measurement(centre.mean_jz, centre.var_jz, centre.var_jz_noisy, slope, precision)


def precision_numeric(initial: InitialSelector, params: RabiParams, noise: NoiseModel = NOISELESS,
                      fd_step: float | None = None) -> float:
    """``Delta omega_0 = sqrt(Var Jz + sigma^2) / |d<Jz>/d delta|``; ``inf`` at zero slope."""
    return measure(initial, params, noise, fd_step).precision


def locate_antisymmetric_point(initial: InitialSelector, params: RabiParams, search_window,
                               grid_points: int = 64, xtol: float | None = None) -> float:
    """Zero of ``<Jz>(delta)`` inside ``search_window``.

    The window is sampled on ``grid_points`` detunings; of all sign changes the
    one closest to the window centre is refined by bisection.  ``params.detuning``
    is ignored.
    """
    lo, hi = map(float, search_window)
    if not hi > lo:
        raise InvalidParameterError(f"search window must be increasing, got {search_window!r}")
    tol = 1e-10 * max(params.rabi_freq, 1.0) if xtol is None else xtol

    def signal(delta):
        return run_rabi(initial, params.with_(detuning=delta)).mean_jz

    grid = np.linspace(lo, hi, grid_points)
    values = np.array([signal(d) for d in grid])
    centre = 0.5 * (lo + hi)
    candidates = [(abs(d - centre), d, None) for d, v in zip(grid, values) if v == 0.0]
    for i in np.nonzero(values[:-1] * values[1:] < 0)[0]:
        candidates.append((abs(0.5 * (grid[i] + grid[i + 1]) - centre), grid[i], grid[i + 1]))
    if not candidates:
        raise NoRootError(f"<Jz> does not change sign in [{lo}, {hi}]")
    _, a, b = min(candidates, key=lambda c: c[0])
    if b is None:
        return float(a)
    return float(optimize.bisect(signal, a, b, xtol=tol))


@dataclass(frozen=True)
class RamseyOatSpec:
    """Squeezed Ramsey reference; ``None`` fields take their defaults.

    The squeezing time defaults to ``3^(1/6) N^(-2/3) / chi`` (zero when chi is
    zero) and the rotation angle to :func:`optimal_rotation_angle`.
    """
    interaction: float
    n_atoms: int
    total_time: float
    squeezing_time: float | None = None
    rotation_angle: float | None = None

    def __post_init__(self):
        if self.n_atoms < 1:
            raise InvalidParameterError(f"n_atoms must be positive, got {self.n_atoms!r}")
        if self.squeezing_time is None:
            tp = 0.0 if self.interaction == 0 else optimal_squeezing_time(self.n_atoms, self.interaction)
            object.__setattr__(self, "squeezing_time", tp)
        if not self.squeezing_time < self.total_time:
            raise InvalidParameterError(
                f"squeezing time {self.squeezing_time!r} must be shorter than total time {self.total_time!r}"
            )

    @property
    def interrogation_time(self) -> float:
        return self.total_time - self.squeezing_time


def optimal_squeezing_time(n_atoms: int, interaction: float) -> float:
    return 3 ** (1 / 6) * n_atoms ** (-2 / 3) / abs(interaction)


def squeezed_state(n_atoms: int, interaction: float, squeezing_time: float) -> DickeState:
    """One-axis twisting of ``|pi/2, 0>`` for ``squeezing_time``."""
    psi = spin.coherent_state(math.pi / 2, 0.0, n_atoms)
    m = spin.m_values(n_atoms)
    return DickeState(n_atoms, np.exp(-1j * interaction * m**2 * squeezing_time) * psi.amplitudes)


def readout_variance(m0: spin.SpinMoments, alpha: float) -> float:
    """Variance of the measured Jz at resonance after rotating the state by ``exp(i alpha Jx)``.

    Both x rotations commute and the phase stage is trivial at resonance, so
    the readout is ``cos(alpha) Jy + sin(alpha) Jz`` of the squeezed state.
    """
    c, s = math.cos(alpha), math.sin(alpha)
    vyy = m0.mean_jy2 - m0.mean_jy**2
    vzz = m0.mean_jz2 - m0.mean_jz**2
    cyz = m0.mean_anti_yz - 2 * m0.mean_jy * m0.mean_jz
    return c * c * vyy + s * s * vzz + c * s * cyz


@lru_cache(maxsize=64)
def _optimal_angle(n_atoms, interaction, squeezing_time, scan_points, xtol):
    m0 = spin.moments(squeezed_state(n_atoms, interaction, squeezing_time))
    grid = np.linspace(0.0, math.pi, scan_points, endpoint=False)
    values = [readout_variance(m0, a) for a in grid]
    i = int(np.argmin(values))
    step = grid[1] - grid[0]
    best = optimize.minimize_scalar(
        lambda a: readout_variance(m0, a),
        bracket=(grid[i] - step, grid[i], grid[i] + step),
        method="golden",
        options={"xtol": xtol},
    )
    return float(best.x % math.pi)


def optimal_rotation_angle(n_atoms: int, interaction: float, squeezing_time: float,
                           scan_points: int = 3600) -> float:
    """Angle in ``[0, pi)`` minimizing the readout variance; coarse scan then golden section."""
    if squeezing_time == 0 or interaction == 0:
        return 0.0
    # golden's xtol is relative to |alpha| <= pi, so 3e-5 keeps the absolute error below 1e-4 rad
    return _optimal_angle(n_atoms, float(interaction), float(squeezing_time), scan_points, 3e-5)


class RamseyResult(NamedTuple):
    mean_jz: float
    var_jz: float
    var_jz_noisy: float
    slope: float
    precision: float
    rotation_angle: float


def ramsey_signal(spec: RamseyOatSpec, delta: float, alpha: float):
    """Mean and variance of the final Jz for the squeezed Ramsey sequence."""
    state = squeezed_state(spec.n_atoms, spec.interaction, spec.squeezing_time)
    state = dynamics.rotate(state, "x", -alpha)
    state = dynamics.rotate(state, "z", delta * spec.interrogation_time)
    state = dynamics.rotate(state, "x", math.pi / 2)
    mean, var = dynamics.jz_stats(state.amplitudes)
    return float(mean), float(var)


def ramsey_oat_reference(spec: RamseyOatSpec, delta: float = 0.0, noise: NoiseModel = NOISELESS,
                         fd_step: float | None = None) -> RamseyResult:
    """OAT-squeezed Ramsey interferometer with the same total time budget.

    ``|pi/2,0> -> exp(-i chi Jz^2 T_p) -> exp(i alpha Jx) -> exp(-i delta Jz T_R)
    -> exp(-i pi/2 Jx)``, then Jz is read out.
    """
    alpha = spec.rotation_angle
    if alpha is None:
        alpha = optimal_rotation_angle(spec.n_atoms, spec.interaction, spec.squeezing_time)
    h = 1e-5 / spec.interrogation_time if fd_step is None else fd_step
    mean, var = ramsey_signal(spec, delta, alpha)
    plus, _ = ramsey_signal(spec, delta + h, alpha)
    minus, _ = ramsey_signal(spec, delta - h, alpha)
    var_noisy = var + noise.sigma**2
    slope, precision = _precision_from(var_noisy, plus, minus, h, spec.n_atoms)
    return RamseyResult(mean, var, var_noisy, slope, precision, alpha)
