"""Collective spin algebra in the symmetric (Dicke) subspace.

Basis convention: index ``k = m + J`` with ``m`` running from ``-J`` to ``+J``
in ascending order, ``J = N/2``.  The spin-J normalization is used throughout
(``Jx = (J+ + J-)/2``), so ``<Jz>`` lies in ``[-N/2, N/2]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import DimensionMismatchError, InvalidParameterError

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-12

DIAGONAL = "diagonal"
TRIDIAGONAL_REAL = "tridiagonal-real-symmetric"
TRIDIAGONAL_HERMITIAN = "tridiagonal-hermitian"
GENERAL_HERMITIAN = "general-hermitian"
STRUCTURES = (DIAGONAL, TRIDIAGONAL_REAL, TRIDIAGONAL_HERMITIAN, GENERAL_HERMITIAN)

OPERATOR_KINDS = ("jx", "jy", "jz", "jz2", "jplus", "jminus")


def _check_n_atoms(n_atoms):
    if int(n_atoms) != n_atoms or n_atoms < 1:
        raise InvalidParameterError(f"n_atoms must be a positive integer, got {n_atoms!r}")
    return int(n_atoms)


def m_values(n_atoms: int) -> np.ndarray:
    """Magnetic quantum numbers ``-J..J`` in basis order."""
    n_atoms = _check_n_atoms(n_atoms)
    return np.arange(n_atoms + 1) - n_atoms / 2


def _frozen(array):
    array = np.array(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DickeState:
    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        n_atoms = _check_n_atoms(self.n_atoms)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != n_atoms + 1:
            raise DimensionMismatchError(
                f"expected {n_atoms + 1} amplitudes for N={n_atoms}, got {amps.size}"
            )
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise InvalidParameterError(f"state is not normalized (|psi|^2 = {norm2!r})")
        object.__setattr__(self, "n_atoms", n_atoms)
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize=True) -> "DickeState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise InvalidParameterError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(amps.size - 1, amps)

    @property
    def dim(self) -> int:
        return self.n_atoms + 1

    @property
    def m(self) -> np.ndarray:
        return m_values(self.n_atoms)

    def amplitude(self, m: float) -> complex:
        """Amplitude ``C_m`` addressed by magnetic quantum number."""
        k = m + self.n_atoms / 2
        if k != int(k) or not 0 <= k <= self.n_atoms:
            raise InvalidParameterError(f"m={m} is not in the spin-{self.n_atoms / 2} ladder")
        return complex(self.amplitudes[int(k)])

    def overlap(self, other: "DickeState") -> complex:
        """``<self|other>``."""
        _check_same_size(self.n_atoms, other.n_atoms)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "DickeState") -> float:
        return abs(self.overlap(other)) ** 2

    def is_parity_symmetric(self, tol=1e-12) -> bool:
        """True when ``C_m == C_{-m}`` for every m."""
        return bool(np.max(np.abs(self.amplitudes - self.amplitudes[::-1])) <= tol)


def _check_same_size(n1, n2):
    if n1 != n2:
        raise DimensionMismatchError(f"atom numbers differ: {n1} vs {n2}")


def _structure_of(matrix):
    off = matrix - np.diag(np.diag(matrix))
    if not np.any(off):
        return DIAGONAL
    if not np.any(np.triu(matrix, 2)) and not np.any(np.tril(matrix, -2)):
        return TRIDIAGONAL_REAL if not np.any(matrix.imag) else TRIDIAGONAL_HERMITIAN
    return GENERAL_HERMITIAN


@dataclass(frozen=True, eq=False)
class CollectiveOperator:
    """Operator matrix in the Dicke basis with a sparsity tag.

    Hermiticity is only enforced when ``hermitian`` is true; the ladder
    operators are built with ``hermitian=False``.
    """

    n_atoms: int
    matrix: np.ndarray
    structure: str
    hermitian: bool = True

    def __post_init__(self):
        n_atoms = _check_n_atoms(self.n_atoms)
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (n_atoms + 1, n_atoms + 1):
            raise DimensionMismatchError(
                f"matrix shape {mat.shape} does not match N={n_atoms}"
            )
        if self.structure not in STRUCTURES:
            raise InvalidParameterError(f"unknown structure tag {self.structure!r}")
        if not np.all(np.isfinite(mat)):
            raise InvalidParameterError("operator matrix has non-finite entries")
        if self.hermitian:
            scale = max(1.0, float(np.max(np.abs(mat))))
            if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL * scale:
                raise InvalidParameterError("operator matrix is not Hermitian")
            actual = _structure_of(mat)
            if STRUCTURES.index(actual) > STRUCTURES.index(self.structure):
                raise InvalidParameterError(
                    f"structure tag {self.structure!r} inconsistent with sparsity ({actual!r})"
                )
        object.__setattr__(self, "n_atoms", n_atoms)
        object.__setattr__(self, "matrix", _frozen(mat))

    @property
    def dim(self) -> int:
        return self.n_atoms + 1

    def apply(self, state: DickeState) -> np.ndarray:
        _check_same_size(self.n_atoms, state.n_atoms)
        if self.structure == DIAGONAL:
            return np.diag(self.matrix) * state.amplitudes
        return self.matrix @ state.amplitudes

    def __add__(self, other):
        _check_same_size(self.n_atoms, other.n_atoms)
        mat = self.matrix + other.matrix
        return CollectiveOperator(self.n_atoms, mat, _structure_of(mat),
                                  self.hermitian and other.hermitian)

    def scaled(self, factor: float) -> "CollectiveOperator":
        return CollectiveOperator(self.n_atoms, factor * self.matrix, self.structure, self.hermitian)


def _ladder_up(n_atoms):
    # <m+1|J+|m> = sqrt((J-m)(J+m+1)) sits on the subdiagonal for ascending m
    j = n_atoms / 2
    m = m_values(n_atoms)[:-1]
    return np.diag(np.sqrt((j - m) * (j + m + 1)), -1)


def build_operator(kind: str, n_atoms: int) -> CollectiveOperator:
    """Dense matrix of a collective spin operator.

    ``kind`` is one of ``jx, jy, jz, jz2, jplus, jminus``.
    """
    n_atoms = _check_n_atoms(n_atoms)
    if kind == "jz":
        return CollectiveOperator(n_atoms, np.diag(m_values(n_atoms)), DIAGONAL)
    if kind == "jz2":
        return CollectiveOperator(n_atoms, np.diag(m_values(n_atoms) ** 2), DIAGONAL)
    up = _ladder_up(n_atoms)
    if kind == "jplus":
        return CollectiveOperator(n_atoms, up, GENERAL_HERMITIAN, hermitian=False)
    if kind == "jminus":
        return CollectiveOperator(n_atoms, up.T, GENERAL_HERMITIAN, hermitian=False)
    if kind == "jx":
        return CollectiveOperator(n_atoms, 0.5 * (up + up.T), TRIDIAGONAL_REAL)
    if kind == "jy":
        return CollectiveOperator(n_atoms, (up - up.T) / 2j, TRIDIAGONAL_HERMITIAN)
    raise InvalidParameterError(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}")


def coherent_state(theta: float, phi: float, n_atoms: int) -> DickeState:
    """Spin coherent state pointing along the Bloch angles ``(theta, phi)``.

    ``theta = 0`` is the top of the ladder (``m = +J``); ``theta = pi`` puts
    every atom in the lower level, ``m = -J``.  The Bloch vector is
    ``(N/2)(sin theta cos phi, sin theta sin phi, cos theta)``.
    """
    n_atoms = _check_n_atoms(n_atoms)
    k = np.arange(n_atoms + 1)  # number of excitations, k = J + m
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    log_binom = 0.5 * (gammaln(n_atoms + 1) - gammaln(k + 1) - gammaln(n_atoms - k + 1))
    # xlogy gives 0 log 0 = 0 at the poles
    with np.errstate(divide="ignore"):
        log_mag = log_binom + xlogy(k, abs(c)) + xlogy(n_atoms - k, abs(s))
    mag = np.exp(log_mag)
    sign = np.where((c < 0) & (k % 2 == 1), -1.0, 1.0) * np.where(
        (s < 0) & ((n_atoms - k) % 2 == 1), -1.0, 1.0
    )
    amps = sign * mag * np.exp(1j * (n_atoms - k) * phi)
    return DickeState(n_atoms, amps / np.linalg.norm(amps))


def dicke_state(n_atoms: int, m: float) -> DickeState:
    """The basis state ``|J, m>``."""
    amps = np.zeros(_check_n_atoms(n_atoms) + 1, dtype=complex)
    k = m + n_atoms / 2
    if k != int(k) or not 0 <= k <= n_atoms:
        raise InvalidParameterError(f"m={m} is not in the spin-{n_atoms / 2} ladder")
    amps[int(k)] = 1.0
    return DickeState(n_atoms, amps)


def expectation(op: CollectiveOperator, state: DickeState) -> float:
    """``<psi|A|psi>`` for a Hermitian operator."""
    if not op.hermitian:
        raise InvalidParameterError("expectation() requires a Hermitian operator")
    value = np.vdot(state.amplitudes, op.apply(state))
    scale = max(1.0, abs(value.real))
    if abs(value.imag) > 1e-10 * scale:
        raise InvalidParameterError(f"expectation has imaginary part {value.imag!r}")
    return float(value.real)


@dataclass(frozen=True)
class SpinMoments:
    mean_jx: float
    mean_jy: float
    mean_jz: float
    mean_jx2: float
    mean_jy2: float
    mean_jz2: float
    mean_anti_xy: float
    mean_anti_yz: float
    mean_anti_xz: float

    @property
    def casimir(self) -> float:
        return self.mean_jx2 + self.mean_jy2 + self.mean_jz2


def moments(state: DickeState) -> SpinMoments:
    """First and second moments of the collective spin, anticommutators included."""
    n = state.n_atoms
    psi = state.amplitudes
    ax = build_operator("jx", n).matrix @ psi
    ay = build_operator("jy", n).matrix @ psi
    az = m_values(n) * psi

    def mean(a):
        return float(np.vdot(psi, a).real)

    def anti(a, b):
        # <{A,B}> = 2 Re <A psi|B psi> for Hermitian A, B
        return float(2 * np.vdot(a, b).real)

    return SpinMoments(
        mean_jx=mean(ax),
        mean_jy=mean(ay),
        mean_jz=mean(az),
        mean_jx2=float(np.vdot(ax, ax).real),
        mean_jy2=float(np.vdot(ay, ay).real),
        mean_jz2=float(np.vdot(az, az).real),
        mean_anti_xy=anti(ax, ay),
        mean_anti_yz=anti(ay, az),
        mean_anti_xz=anti(ax, az),
    )
