"""Reference implementations that share no code with the package.

* a Taylor scaling-and-squaring matrix exponential;
* collective spin operators built in the full 2^N qubit space.
"""
import math

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2  # |up> first


def expm(a, terms=30):
    """exp(a) by scaling and squaring with a truncated Taylor series."""
    a = np.asarray(a, dtype=complex)
    norm = np.linalg.norm(a, 1)
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0 else 0
    b = a / 2**s
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ b / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def propagate(h, t):
    return expm(-1j * np.asarray(h) * t)


def _embed(single, site, n):
    out = np.array([[1.0 + 0j]])
    for k in range(n):
        out = np.kron(out, single if k == site else np.eye(2))
    return out


def qubit_collective(n):
    """Jx, Jy, Jz as sums of single-qubit spin-1/2 operators (2^N x 2^N)."""
    return tuple(sum(_embed(s, k, n) for k in range(n)) for s in (SX, SY, SZ))


def qubit_product_state(theta, phi, n):
    single = np.array([math.cos(theta / 2), math.sin(theta / 2) * np.exp(1j * phi)])
    out = np.array([1.0 + 0j])
    for _ in range(n):
        out = np.kron(out, single)
    return out


def ladder_matrices(n):
    """Jx, Jy, Jz in the Dicke basis straight from the angular-momentum formulas."""
    j = n / 2
    ms = [-j + k for k in range(n + 1)]
    jp = np.zeros((n + 1, n + 1))
    for k, m in enumerate(ms[:-1]):
        jp[k + 1, k] = math.sqrt(j * (j + 1) - m * (m + 1))
    jx = (jp + jp.T) / 2
    jy = (jp - jp.T) / 2j
    jz = np.diag(ms).astype(complex)
    return jx.astype(complex), jy, jz


def rabi_hamiltonian(n, omega, delta, chi):
    jx, _, jz = ladder_matrices(n)
    return omega * jx + chi * jz @ jz + delta * jz


def coherent_amplitudes(theta, phi, n):
    """<J, m|theta, phi> from the binomial formula, m ascending."""
    return np.array([math.sqrt(math.comb(n, k)) * math.cos(theta / 2) ** k
                     * math.sin(theta / 2) ** (n - k) * np.exp(1j * (n - k) * phi)
                     for k in range(n + 1)])
