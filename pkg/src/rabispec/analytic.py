"""Closed-form Rabi dynamics for non-interacting atoms (chi = 0).

In the Heisenberg picture a chi = 0 Rabi pulse maps ``Jz`` onto
``X Jx + Y Jy + Z Jz``; the coefficients and their detuning derivatives are
written through the entire functions ``(1 - cos u)/u^2`` and ``sin(u)/u`` of
the generalized pulse area ``u = sqrt(Omega^2 + delta^2) T``, which keeps
every expression finite at ``Omega = delta = 0``.

None of these functions take an interaction strength: they are only valid
for chi = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameterError
from .spin import SpinMoments

DIVERGED = math.inf
SERIES_THRESHOLD = 1e-6
# below this area the derivative helpers switch to their Taylor series
_DERIV_SERIES_THRESHOLD = 1e-2
VARIANCE_FLOOR = -1e-9


def is_diverged(value: float) -> bool:
    return math.isinf(value)


def _f1(u):
    """(1 - cos u) / u^2."""
    if u < SERIES_THRESHOLD:
        return 0.5 - u * u / 24
    s = math.sin(u / 2)
    return 2 * s * s / (u * u)


def _f2(u):
    """sin(u) / u."""
    if u < SERIES_THRESHOLD:
        return 1 - u * u / 6
    return math.sin(u) / u


def _g1(u):
    """f1'(u) / u."""
    if u < _DERIV_SERIES_THRESHOLD:
        u2 = u * u
        return -1 / 12 + u2 / 180 - u2 * u2 / 6720
    return (u * math.sin(u) - 4 * math.sin(u / 2) ** 2) / u**4


def _g2(u):
    """f2'(u) / u."""
    if u < _DERIV_SERIES_THRESHOLD:
        u2 = u * u
        return -1 / 3 + u2 / 30 - u2 * u2 / 840
    return (u * math.cos(u) - math.sin(u)) / u**3


@dataclass(frozen=True)
class XyzCoefficients:
    x_coef: float
    y_coef: float
    z_coef: float
    x_slope: float
    y_slope: float
    z_slope: float


def xyz(omega: float, delta: float, t: float) -> XyzCoefficients:
    """Heisenberg coefficients of ``Jz(T)`` and their derivatives in delta."""
    u = math.hypot(omega, delta) * abs(t)
    f1, f2, g1, g2 = _f1(u), _f2(u), _g1(u), _g2(u)
    t2 = t * t
    return XyzCoefficients(
        x_coef=omega * delta * t2 * f1,
        y_coef=omega * t * f2,
        z_coef=1 - omega * omega * t2 * f1,
        x_slope=omega * t2 * (f1 + delta * delta * t2 * g1),
        y_slope=omega * delta * t * t2 * g2,
        z_slope=-omega * omega * delta * t2 * t2 * g1,
    )


def xyz_series(omega: float, delta: float, t: float, terms: int = 60):
    """Partial sums of the commutator series for (X, Y, Z).

    Iterates ``x_{n+1} = (delta T) y_n``, ``z_{n+1} = -(Omega T) y_n``,
    ``y_{n+1} = (Omega T) z_n - (delta T) x_n`` from ``(x0, y0, z0) = (0, 0, 1)``
    and accumulates ``c_n / n!``.  Used as an independent cross-check.
    """
    a, b = omega * t, delta * t
    x, y, z = 0.0, 0.0, 1.0
    sx, sy, sz = 0.0, 0.0, 1.0
    fact = 1.0
    for n in range(1, terms + 1):
        x, y, z = b * y, a * z - b * x, -a * y
        fact *= n
        sx += x / fact
        sy += y / fact
        sz += z / fact
    return sx, sy, sz


def jz_mean_analytic(m0: SpinMoments, omega: float, delta: float, t: float) -> float:
    c = xyz(omega, delta, t)
    return c.x_coef * m0.mean_jx + c.y_coef * m0.mean_jy + c.z_coef * m0.mean_jz


def jz_second_moment_analytic(m0: SpinMoments, omega, delta, t) -> float:
    c = xyz(omega, delta, t)
    x, y, z = c.x_coef, c.y_coef, c.z_coef
    return (x * x * m0.mean_jx2 + y * y * m0.mean_jy2 + z * z * m0.mean_jz2
            + x * y * m0.mean_anti_xy + y * z * m0.mean_anti_yz + x * z * m0.mean_anti_xz)


def jz_var_analytic(m0: SpinMoments, omega: float, delta: float, t: float) -> float:
    """Variance of Jz at time T.

    Tiny negative values from cancellation are clamped to zero; anything below
    ``-1e-9`` means the supplied moments are inconsistent and raises.
    """
    var = jz_second_moment_analytic(m0, omega, delta, t) - jz_mean_analytic(m0, omega, delta, t) ** 2
    if var < VARIANCE_FLOOR:
        raise InvalidParameterError(f"negative variance {var!r}: moments are inconsistent")
    return max(var, 0.0)


def jz_slope_analytic(m0: SpinMoments, omega: float, delta: float, t: float) -> float:
    """d<Jz(T)>/d delta."""
    c = xyz(omega, delta, t)
    return c.x_slope * m0.mean_jx + c.y_slope * m0.mean_jy + c.z_slope * m0.mean_jz


def precision_analytic(m0: SpinMoments, omega: float, delta: float, t: float,
                       sigma: float = 0.0, slope_tol: float = 1e-14) -> float:
    """Frequency uncertainty ``sqrt(Var Jz + sigma^2) / |d<Jz>/d delta|``.

    Returns ``DIVERGED`` (``inf``) where the slope vanishes.
    """
    slope = jz_slope_analytic(m0, omega, delta, t)
    scale = max(1.0, math.sqrt(m0.casimir))
    if abs(slope) <= slope_tol * scale * max(abs(t), 1.0):
        return DIVERGED
    return math.sqrt(jz_var_analytic(m0, omega, delta, t) + sigma * sigma) / abs(slope)
