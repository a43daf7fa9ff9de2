import math

import numpy as np
import pytest

from oracles import expm, ladder_matrices, propagate, rabi_hamiltonian
from rabispec import analytic, protocols, spin
from rabispec.dynamics import RabiParams
from rabispec.errors import InvalidParameterError, NoRootError
from rabispec.protocols import PHYSICAL, NoiseModel, PulseSpec, RamseyOatSpec


def test_initial_state_selectors():
    n = 8
    assert protocols.initial_state("conventional", n).fidelity(spin.dicke_state(n, -4)) == pytest.approx(1)
    anti = protocols.initial_state("antisymmetric", n)
    assert spin.moments(anti).mean_jx == pytest.approx(4)
    custom = spin.coherent_state(1.0, 0.5, n)
    assert protocols.initial_state(custom, n) is custom
    with pytest.raises(InvalidParameterError):
        protocols.initial_state(custom, n + 1)
    with pytest.raises(InvalidParameterError):
        protocols.initial_state("sideways", n)


def test_noise_model_validation():
    with pytest.raises(InvalidParameterError):
        NoiseModel(-1.0)
    with pytest.raises(InvalidParameterError):
        NoiseModel(math.inf)


def test_noise_adds_in_quadrature():
    p = RabiParams(30, 1.0, 0.3, 0.02, math.pi)
    clean = protocols.measure("antisymmetric", p)
    noisy = protocols.measure("antisymmetric", p, NoiseModel(4.0))
    assert noisy.var_jz == clean.var_jz
    assert noisy.var_jz_noisy == pytest.approx(clean.var_jz + 16.0, rel=1e-15)
    assert noisy.mean_jz == clean.mean_jz and noisy.slope == clean.slope
    assert noisy.precision == pytest.approx(math.sqrt(clean.var_jz + 16) / abs(clean.slope), rel=1e-14)


@pytest.mark.parametrize("theta,phi", [(math.pi / 2, 0), (math.pi / 2, math.pi / 2), (math.pi, 0)])
@pytest.mark.parametrize("delta", [0.0, 0.37, -1.2])
def test_numeric_precision_matches_closed_form(theta, phi, delta):
    n, omega, t = 40, 1.3, 2.0
    psi = spin.coherent_state(theta, phi, n)
    m0 = spin.moments(psi)
    m = protocols.measure(psi, RabiParams(n, omega, delta, 0.0, t))
    assert m.mean_jz == pytest.approx(analytic.jz_mean_analytic(m0, omega, delta, t), abs=1e-10 * n)
    assert m.var_jz == pytest.approx(analytic.jz_var_analytic(m0, omega, delta, t), abs=1e-8 * n)
    assert m.slope == pytest.approx(analytic.jz_slope_analytic(m0, omega, delta, t), rel=1e-6, abs=1e-8 * n)
    exact = analytic.precision_analytic(m0, omega, delta, t)
    if math.isfinite(exact) and exact < 1e6:
        assert m.precision == pytest.approx(exact, rel=1e-5)


def test_conventional_resonance_slope_diverges():
    # |pi,0>: the signal is even in delta, so the resonance slope vanishes
    m = protocols.measure("conventional", RabiParams(20, 1.0, 0.0, 0.0, math.pi))
    assert analytic.is_diverged(m.precision)


def test_fd_step_convergence_with_interaction():
    p = RabiParams(50, 1.0, 0.05, 0.03, 3 * math.pi)
    a = protocols.measure("antisymmetric", p, fd_step=1e-6).slope
    b = protocols.measure("antisymmetric", p, fd_step=1e-5).slope
    assert a == pytest.approx(b, rel=1e-5)
    with pytest.raises(InvalidParameterError):
        protocols.measure("antisymmetric", p, fd_step=0.0)


def test_default_fd_step():
    assert protocols.default_fd_step(RabiParams(4, 2.0, duration=1.0)) == pytest.approx(2e-5)
    assert protocols.default_fd_step(RabiParams(4, 0.1, duration=0.5)) == pytest.approx(2e-5)
    assert protocols.default_fd_step(RabiParams(4, 0.0)) == pytest.approx(1e-5)


@pytest.mark.parametrize("chi", [0.0, 0.01, 0.05])
def test_antisymmetry_with_interaction(chi):
    n = 60
    for d in np.linspace(0.05, 3, 12):
        p = RabiParams(n, 1.0, d, chi, math.pi)
        plus = protocols.run_rabi("antisymmetric", p).mean_jz
        minus = protocols.run_rabi("antisymmetric", p.with_(detuning=-d)).mean_jz
        assert abs(plus + minus) < 1e-9 * n


def test_rabi_against_expm_oracle():
    n, omega, delta, chi, t = 24, 0.9, 0.21, 0.04, 2.5
    psi = spin.coherent_state(math.pi / 2, 0, n).amplitudes
    out = propagate(rabi_hamiltonian(n, omega, delta, chi), t) @ psi
    jz = ladder_matrices(n)[2]
    mean = np.vdot(out, jz @ out).real
    r = protocols.run_rabi("antisymmetric", RabiParams(n, omega, delta, chi, t))
    assert r.mean_jz == pytest.approx(mean, abs=1e-10)


# -- pulses ---------------------------------------------------------------


def test_pulse_spec_validation_and_time():
    with pytest.raises(InvalidParameterError):
        PulseSpec(mode="wobbly")
    with pytest.raises(InvalidParameterError):
        PulseSpec(mode=PHYSICAL)
    assert PulseSpec(rabi_freq_pulse=2.0, epsilon=0.1, mode=PHYSICAL).pulse_time == pytest.approx(1.1 * math.pi / 4)


def test_ideal_pulse_zero_error_is_antisymmetric_state():
    n = 20
    prepared = protocols.prepare_state(PulseSpec(), n)
    assert prepared.fidelity(spin.coherent_state(math.pi / 2, 0, n)) == pytest.approx(1, abs=1e-13)


def test_ideal_pulse_against_expm():
    n, eps = 6, 0.07
    jy = ladder_matrices(n)[1]
    down = spin.coherent_state(math.pi, 0, n).amplitudes
    ref = expm(1j * (1 + eps) * math.pi / 2 * jy) @ down
    out = protocols.prepare_state(PulseSpec(epsilon=eps), n).amplitudes
    assert np.allclose(out, ref, atol=1e-12)


def test_physical_pulse_against_expm():
    n, om, chi, delta = 10, 50.0, 0.5, 0.3
    spec = PulseSpec(rabi_freq_pulse=om, interaction_pulse=chi, mode=PHYSICAL)
    _, jy, jz = ladder_matrices(n)
    h = chi * jz @ jz + delta * jz - om * jy
    ref = propagate(h, spec.pulse_time) @ spin.coherent_state(math.pi, 0, n).amplitudes
    # the run's detuning replaces the pulse's own
    out = protocols.initial_state(spec, n, detuning=delta).amplitudes
    assert np.allclose(out, ref, atol=1e-11)


def test_physical_pulse_improves_with_rabi_frequency():
    n = 40
    target = spin.coherent_state(math.pi / 2, 0, n)
    overlaps = [target.fidelity(protocols.prepare_state(PulseSpec(om, 1.0, 0.0, 0.0, PHYSICAL), n))
                for om in (100, 400, 1600, 6400)]
    assert all(a < b for a, b in zip(overlaps, overlaps[1:]))
    assert overlaps[-1] > 0.999


def test_pulse_condition():
    spec = PulseSpec(rabi_freq_pulse=1.0, interaction_pulse=2.0, detuning=0.5)
    assert protocols.pulse_condition(spec, 10) == pytest.approx((math.pi * 100 * 2 + 2 * math.pi * 0.5 * 10) / 8)


def test_root_at_zero_without_pulse_error():
    p = RabiParams(50, 1.0, 0.0, 0.02, math.pi)
    root = protocols.locate_antisymmetric_point(PulseSpec(), p, (-0.3, 0.3))
    assert abs(root) < 1e-9


def test_pulse_error_shift_is_odd():
    p = RabiParams(50, 1.0, 0.0, 0.008, math.pi)
    ra = protocols.locate_antisymmetric_point(PulseSpec(epsilon=0.05), p, (-0.3, 0.3))
    rb = protocols.locate_antisymmetric_point(PulseSpec(epsilon=-0.05), p, (-0.3, 0.3))
    assert ra != 0
    assert ra == pytest.approx(-rb, rel=1e-6)


def test_epsilon_averaged_signal_is_antisymmetric():
    n, eps = 40, 0.08
    p = RabiParams(n, 1.0, 0.0, 0.3 / n, math.pi)

    def averaged(d):
        q = p.with_(detuning=d)
        return 0.5 * (protocols.run_rabi(PulseSpec(epsilon=eps), q).mean_jz
                      + protocols.run_rabi(PulseSpec(epsilon=-eps), q).mean_jz)

    for d in (0.1, 0.5, 1.3):
        assert abs(averaged(d) + averaged(-d)) < 1e-9 * n
    # the single-sign signal is not antisymmetric
    single = [protocols.run_rabi(PulseSpec(epsilon=eps), p.with_(detuning=s * 0.5)).mean_jz for s in (1, -1)]
    assert abs(single[0] + single[1]) > 1e-3


def test_no_root_raises():
    p = RabiParams(20, 1.0, 0.0, 0.0, math.pi)
    with pytest.raises(NoRootError):
        protocols.locate_antisymmetric_point("antisymmetric", p, (0.2, 0.6))
    with pytest.raises(InvalidParameterError):
        protocols.locate_antisymmetric_point("antisymmetric", p, (0.6, 0.2))


# -- squeezed Ramsey reference -------------------------------------------------


def test_squeezing_time_default():
    spec = RamseyOatSpec(0.02, 100, 10.0)
    assert spec.squeezing_time == pytest.approx(3 ** (1 / 6) * 100 ** (-2 / 3) / 0.02)
    assert spec.interrogation_time == pytest.approx(10.0 - spec.squeezing_time)
    assert RamseyOatSpec(0.0, 100, 1.0).squeezing_time == 0.0
    with pytest.raises(InvalidParameterError):
        RamseyOatSpec(0.02, 100, 2.0)


def test_unsqueezed_ramsey_fringe():
    # chi = 0: textbook fringe (N/2) sin(delta T) and the SQL at resonance
    n, t = 50, 3.0
    spec = RamseyOatSpec(0.0, n, t)
    for d in (0.0, 0.1, -0.4):
        mean, _ = protocols.ramsey_signal(spec, d, 0.0)
        assert mean == pytest.approx(n / 2 * math.sin(d * t), abs=1e-11)
    res = protocols.ramsey_oat_reference(spec)
    assert res.precision == pytest.approx(1 / (math.sqrt(n) * t), rel=1e-8)


def test_ramsey_sequence_against_expm():
    n, chi, t, delta, alpha = 12, 0.1, 5.0, 0.07, 0.4
    spec = RamseyOatSpec(chi, n, t, rotation_angle=alpha)
    jx, _, jz = ladder_matrices(n)
    psi = spin.coherent_state(math.pi / 2, 0, n).amplitudes
    for op in (expm(-1j * chi * spec.squeezing_time * jz @ jz), expm(1j * alpha * jx),
               expm(-1j * delta * spec.interrogation_time * jz), expm(-1j * math.pi / 2 * jx)):
        psi = op @ psi
    mean = np.vdot(psi, jz @ psi).real
    var = np.vdot(psi, jz @ jz @ psi).real - mean**2
    got = protocols.ramsey_signal(spec, delta, alpha)
    assert got == pytest.approx((mean, var), abs=1e-10)


def test_rotation_angle_minimizes_simulated_variance():
    n, chi = 100, 0.02
    tp = protocols.optimal_squeezing_time(n, chi)
    alpha = protocols.optimal_rotation_angle(n, chi, tp)
    spec = RamseyOatSpec(chi, n, 10.0)
    _, var_best = protocols.ramsey_signal(spec, 0.0, alpha)
    m0 = spin.moments(protocols.squeezed_state(n, chi, tp))
    assert var_best == pytest.approx(protocols.readout_variance(m0, alpha), rel=1e-9)
    # squeezed below the coherent value N/4
    assert var_best < n / 4 / 5
    for a in np.linspace(0, math.pi, 181):
        assert protocols.ramsey_signal(spec, 0.0, a)[1] >= var_best - 1e-9
    for da in (-1e-3, 1e-3):
        assert protocols.ramsey_signal(spec, 0.0, alpha + da)[1] > var_best


def test_ramsey_beats_sql_without_noise_and_degrades_with_noise():
    n, chi, t = 100, 0.02, 20.0
    spec = RamseyOatSpec(chi, n, t)
    clean = protocols.ramsey_oat_reference(spec)
    noisy = protocols.ramsey_oat_reference(spec, noise=NoiseModel(math.sqrt(n)))
    assert clean.precision < 1 / (math.sqrt(n) * spec.interrogation_time)
    assert noisy.precision / clean.precision > 2
