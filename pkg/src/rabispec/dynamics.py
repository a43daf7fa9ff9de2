"""Rotating-frame Hamiltonians and exact propagation by eigendecomposition.

All Hamiltonians here are time independent within a stage, so a state is
propagated as ``V exp(-i diag(w) t) V^dagger psi``.  Frequencies are angular
(rad/s) and hbar = 1.  The dense engine is intended for N up to about 5000.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from . import spin
from .errors import DimensionMismatchError, InvalidParameterError, PropagationError
from .spin import CollectiveOperator, DickeState

MAX_DENSE_ATOMS = 5000


@dataclass(frozen=True)
class RabiParams:
    n_atoms: int
    rabi_freq: float
    detuning: float = 0.0
    interaction: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise InvalidParameterError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        for name in ("rabi_freq", "detuning", "interaction", "duration"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.duration < 0:
            raise InvalidParameterError(f"duration must be >= 0, got {self.duration!r}")
        if self.rabi_freq < 0:
            raise InvalidParameterError(f"rabi_freq must be >= 0, got {self.rabi_freq!r}")

    def with_(self, **changes) -> "RabiParams":
        fields = dict(n_atoms=self.n_atoms, rabi_freq=self.rabi_freq, detuning=self.detuning,
                      interaction=self.interaction, duration=self.duration)
        fields.update(changes)
        return RabiParams(**fields)


def build_hamiltonian(params: RabiParams, axis: str = "x") -> CollectiveOperator:
    """``Omega Jx + chi Jz^2 + delta Jz`` for axis x, ``chi Jz^2 + delta Jz - Omega Jy`` for y.

    The duration field is ignored.
    """
    n = params.n_atoms
    if n > MAX_DENSE_ATOMS:
        raise InvalidParameterError(f"N={n} exceeds the dense engine bound of {MAX_DENSE_ATOMS}")
    m = spin.m_values(n)
    diag = np.diag(params.interaction * m**2 + params.detuning * m)
    if axis == "x":
        mat = diag + params.rabi_freq * spin.build_operator("jx", n).matrix
        return CollectiveOperator(n, mat, spin.TRIDIAGONAL_REAL)
    if axis == "y":
        mat = diag - params.rabi_freq * spin.build_operator("jy", n).matrix
        return CollectiveOperator(n, mat, spin.TRIDIAGONAL_HERMITIAN)
    raise InvalidParameterError(f"axis must be 'x' or 'y', got {axis!r}")


@dataclass(frozen=True, eq=False)
class Propagator:
    n_atoms: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source: CollectiveOperator

    def unitary(self, t: float) -> np.ndarray:
        v = self.eigenvectors
        return (v * np.exp(-1j * self.eigenvalues * t)) @ v.conj().T

    def reconstruction_error(self) -> float:
        """Relative Frobenius residual of ``V diag(w) V^dagger`` against the source."""
        v = self.eigenvectors
        rebuilt = (v * self.eigenvalues) @ v.conj().T
        ref = np.linalg.norm(self.source.matrix)
        return float(np.linalg.norm(rebuilt - self.source.matrix) / max(ref, 1e-300))


def _tridiagonal_eig(d, e):
    try:
        return eigh_tridiagonal(d, e)
    except LinAlgError:
        # stemr occasionally refuses; the banded QR driver is slower but robust
        return eigh_tridiagonal(d, e, lapack_driver="stev")


def diagonalize(h: CollectiveOperator) -> Propagator:
    """Eigendecomposition of a Hermitian operator, eigenvalues ascending.

    Tridiagonal inputs go through the symmetric tridiagonal solver; a complex
    tridiagonal matrix is first made real by a diagonal phase similarity.
    """
    mat = h.matrix
    n = h.dim
    try:
        if h.structure == spin.DIAGONAL:
            d = np.diag(mat).real
            order = np.argsort(d, kind="stable")
            w, v = d[order], np.eye(n, dtype=complex)[:, order]
        elif h.structure == spin.TRIDIAGONAL_REAL:
            w, v = _tridiagonal_eig(np.diag(mat).real.copy(), np.diag(mat, -1).real.copy())
            v = v.astype(complex)
        elif h.structure == spin.TRIDIAGONAL_HERMITIAN:
            sub = np.diag(mat, -1)
            mags = np.abs(sub)
            unit = np.where(mags > 0, sub / np.where(mags > 0, mags, 1.0), 1.0)
            phases = np.concatenate(([1.0 + 0j], np.cumprod(unit)))
            w, v = _tridiagonal_eig(np.diag(mat).real.copy(), mags)
            v = phases[:, None] * v
        else:
            w, v = np.linalg.eigh(mat)
    except (LinAlgError, ValueError) as exc:
        raise PropagationError(
            f"eigensolver failed for N={h.n_atoms} ({h.structure}); "
            f"|H|_F={np.linalg.norm(mat):.6g}, finite={bool(np.all(np.isfinite(mat)))}: {exc}"
        ) from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(v))):
        raise PropagationError(f"eigensolver returned non-finite values for N={h.n_atoms}")
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=complex)
    w.setflags(write=False)
    v.setflags(write=False)
    return Propagator(h.n_atoms, w, v, h)


@lru_cache(maxsize=256)
def _cached(n_atoms, rabi_freq, detuning, interaction, axis):
    params = RabiParams(n_atoms, rabi_freq, detuning, interaction)
    return diagonalize(build_hamiltonian(params, axis))


def propagator(params: RabiParams, axis: str = "x") -> Propagator:
    """Cached ``diagonalize(build_hamiltonian(params, axis))``, keyed on the Hamiltonian."""
    return _cached(params.n_atoms, params.rabi_freq, params.detuning, params.interaction, axis)


@lru_cache(maxsize=64)
def _rotation_generator(n_atoms, axis):
    return diagonalize(spin.build_operator("j" + axis, n_atoms))


def _check(state, prop):
    if state.n_atoms != prop.n_atoms:
        raise DimensionMismatchError(
            f"state has N={state.n_atoms} but propagator has N={prop.n_atoms}"
        )


def evolve(state: DickeState, prop: Propagator, t: float) -> DickeState:
    """``exp(-i H t)|psi>``; negative t runs backwards."""
    _check(state, prop)
    v = prop.eigenvectors
    coeffs = v.conj().T @ state.amplitudes
    return DickeState(state.n_atoms, v @ (np.exp(-1j * prop.eigenvalues * t) * coeffs))


def evolve_times(state: DickeState, prop: Propagator, times) -> np.ndarray:
    """Amplitudes at every time in ``times``, shape ``(len(times), N+1)``."""
    _check(state, prop)
    times = np.asarray(times, dtype=float).reshape(-1)
    v = prop.eigenvectors
    coeffs = v.conj().T @ state.amplitudes
    phases = np.exp(-1j * np.outer(prop.eigenvalues, times))
    return (v @ (phases * coeffs[:, None])).T


def rotate(state: DickeState, axis: str, angle: float) -> DickeState:
    """Apply ``exp(-i angle J_axis)`` for axis in ``x, y, z``."""
    if axis == "z":
        m = spin.m_values(state.n_atoms)
        return DickeState(state.n_atoms, np.exp(-1j * angle * m) * state.amplitudes)
    if axis not in ("x", "y"):
        raise InvalidParameterError(f"rotation axis must be x, y or z, got {axis!r}")
    return evolve(state, _rotation_generator(state.n_atoms, axis), angle)


def jz_stats(amplitudes: np.ndarray):
    """Mean and variance of Jz for one amplitude vector or a stack of them."""
    amps = np.asarray(amplitudes)
    n = amps.shape[-1] - 1
    m = spin.m_values(n)
    prob = np.abs(amps) ** 2
    mean = prob @ m
    second = prob @ (m**2)
    var = second - mean**2
    # cancellation noise only; clamp at the rounding floor of <Jz^2>
    floor = 1e-12 * np.maximum(second, 1.0)
    var = np.where((var < 0) & (var > -floor), 0.0, var)
    return mean, var


def signal_jz(initial: DickeState, params: RabiParams):
    """Mean and variance of Jz after Rabi evolution for ``params.duration``."""
    final = evolve(initial, propagator(params), params.duration)
    mean, var = jz_stats(final.amplitudes)
    return float(mean), float(var)


def interaction_picture(state: DickeState, params: RabiParams, t: float) -> np.ndarray:
    """Amplitudes ``C^I_m = exp(i (chi m^2 + delta m) t) C_m`` in the frame of ``chi Jz^2 + delta Jz``."""
    m = spin.m_values(state.n_atoms)
    return np.exp(1j * (params.interaction * m**2 + params.detuning * m) * t) * state.amplitudes
