"""Acceptance criteria, one PASS/FAIL line each (collected in the terminal summary)."""
import csv
import math
import subprocess
import sys
import time

import numpy as np
from scipy import optimize

from acceptance_log import info, report
from oracles import propagate, rabi_hamiltonian
from rabispec import analytic, dynamics, protocols, spin, sweep, verify
from rabispec.config import load_preset
from rabispec.dynamics import RabiParams
from rabispec.protocols import NoiseModel, PulseSpec


def golden_row(name, delta):
    with open(verify.default_golden_dir() / f"{name}.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            if abs(float(row["delta_rad_s"]) - delta) < 1e-12:
                return {k: float(v) for k, v in row.items()}
    raise KeyError(delta)


def random_symmetric_state(rng, n):
    half = rng.normal(size=n // 2 + 1) + 1j * rng.normal(size=n // 2 + 1)
    return spin.DickeState.from_amplitudes(np.concatenate([half, half[: (n + 1) // 2][::-1]]))


def test_c1_closed_form_oracle():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 61))
        omega, delta, t = rng.uniform(0.05, 5), rng.uniform(-5, 5), rng.uniform(0, 5)
        state = spin.coherent_state(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi), n)
        numeric, _ = dynamics.signal_jz(state, RabiParams(n, omega, delta, 0.0, t))
        exact = analytic.jz_mean_analytic(spin.moments(state), omega, delta, t)
        worst = max(worst, abs(numeric - exact) / (n / 2))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and elapsed < 5
    assert report("C1 closed-form oracle", ok,
                  f"max |numeric - closed form| / (N/2) = {worst:.2e} over 200 samples, {elapsed:.2f} s")


def test_c2_antisymmetry():
    n, omega = 100, 1.0
    deltas = np.linspace(-4, 4, 101)
    start = time.perf_counter()
    worst, centre = 0.0, 0.0
    for chi in (0.0, 0.01 * omega, 0.02 * omega, 6 * math.pi / n):
        base = RabiParams(n, omega, 0.0, chi, math.pi / omega)
        table = sweep.scan_delta(sweep.ScanGrid("detuning", deltas, base))
        worst = max(worst, table.antisymmetry_residual())
        centre = max(centre, abs(table.rows[50].mean_jz))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 * n and centre < 1e-9 * n and elapsed < 10
    assert report("C2 antisymmetry N=100", ok,
                  f"max |<Jz>(d) + <Jz>(-d)| = {worst:.2e}, |<Jz>(0)| = {centre:.2e}, {elapsed:.2f} s")


def test_c3_conventional_collision_shift():
    base = load_preset("fig1b").rabi_params()
    assert base.n_atoms == 100 and base.interaction == 0.01 * base.rabi_freq

    def signal(d):
        return protocols.run_rabi("conventional", base.with_(detuning=d)).mean_jz

    deltas = np.linspace(-2, 2, 801)
    values = [signal(d) for d in deltas]
    i = int(np.argmax(values))
    step = deltas[1] - deltas[0]
    peak = optimize.minimize_scalar(lambda d: -signal(d), bounds=(deltas[i] - step, deltas[i] + step),
                                    method="bounded", options={"xatol": 1e-10}).x
    ok = abs(peak) > 0.01 * base.rabi_freq
    assert report("C3 conventional collision shift", ok,
                  f"signal peak at delta = {peak:.6g} Omega (threshold 0.01 Omega)")


def test_c4_resonance_slope_and_sql_scaling():
    omega = 1.0
    worst, precisions = 0.0, []
    for n in (16, 64, 256):
        m = protocols.measure("antisymmetric", RabiParams(n, omega, 0.0, 0.0, math.pi / omega))
        worst = max(worst, abs(m.slope / (n / omega) - 1), abs(m.precision / (omega / (2 * math.sqrt(n))) - 1))
        precisions.append(m.precision)
    ratios = [precisions[0] / precisions[1], precisions[1] / precisions[2]]
    scaling = max(abs(r / 2 - 1) for r in ratios)
    ok = worst < 1e-4 and scaling < 1e-4
    assert report("C4 resonance slope and SQL scaling", ok,
                  f"max rel. deviation {worst:.2e}, precision ratios per 4x N = {ratios[0]:.8f}, {ratios[1]:.8f}")


def test_c5_interaction_enhancement():
    n, t = 100, 1.0
    values = []
    for name in ("fig2c-pointI", "fig2c-pointII", "fig2c-pointIII"):
        p = load_preset(name).rabi_params()
        value = protocols.precision_numeric("antisymmetric", p.with_(detuning=0.0))
        values.append(value)
        golden = golden_row(name, 0.0)["precision"]
        assert abs(value - golden) <= 1e-9 * golden
    p1, p2, p3 = values
    sql = 1 / (math.sqrt(n) * t)
    ok = p2 < p1 and p3 < min(p1, p2) and p3 < sql
    assert report("C5 interaction enhancement", ok,
                  f"precision I = {p1:.6g}, II = {p2:.6g}, III = {p3:.6g}, SQL = {sql:.6g} (match goldens)")


def pulse_roots(preset, eps):
    cfg = load_preset(preset)
    p = cfg.rabi_params()
    window = tuple(cfg.search["delta_window"])
    roots = [protocols.locate_antisymmetric_point(PulseSpec(epsilon=e), p, window) for e in (eps, -eps)]
    return p.rabi_freq, roots


def test_c6_pulse_error_shift():
    omega, (a_plus, a_minus) = pulse_roots("figS3d", 0.1)
    _, (b_plus, b_minus) = pulse_roots("figS4d", 0.04)
    in_a = 0.02 * omega <= abs(a_plus) <= 0.04 * omega
    in_b = 1e-4 * omega <= abs(b_plus) <= 4e-4 * omega
    odd = all(abs(x + y) <= 0.1 * abs(x) for x, y in ((a_plus, a_minus), (b_plus, b_minus)))
    report("C6a pulse shift, Omega T = pi", in_a and odd,
           f"|delta_root(0.1)| = {abs(a_plus):.6g} Omega (target [0.02, 0.04]), "
           f"odd residual {abs(a_plus + a_minus):.1e}")
    report("C6b pulse shift, Omega T = 3 pi", in_b and odd,
           f"|delta_root(0.04)| = {abs(b_plus):.6g} Omega (target [1e-4, 4e-4]), "
           f"odd residual {abs(b_plus + b_minus):.1e}")
    assert in_a and in_b and odd


def optimum_for(preset):
    cfg = load_preset(preset)
    start = time.perf_counter()
    best = sweep.optimal_time(cfg.initial_selector(), cfg.rabi_params(), tuple(cfg.search["t_window"]),
                              grid_points=cfg.search.get("grid_points", 2000))
    return best, time.perf_counter() - start


def test_c7_optimal_times():
    bec, t_bec = optimum_for("bec-strong-caption")
    text, t_text = optimum_for("bec-strong-text")
    cavity, t_cav = optimum_for("cavity")
    dev_bec = bec.duration / 0.1516 - 1
    dev_cav = cavity.duration / 0.636e-3 - 1
    ok_bec = abs(dev_bec) <= 0.05 and t_bec < 300
    ok_cav = abs(dev_cav) <= 0.05 and t_cav < 300
    report("C7a BEC optimal time, caption chi", ok_bec,
           f"T_opt = {bec.duration:.5g} s vs 0.1516 s ({dev_bec:+.1%}), {t_bec:.1f} s")
    info("C7a' BEC optimal time, text chi",
         f"T_opt = {text.duration:.5g} s vs 0.1516 s ({text.duration / 0.1516 - 1:+.1%}), {t_text:.1f} s")
    report("C7b cavity optimal time", ok_cav,
           f"T_opt = {cavity.duration * 1e3:.5g} ms vs 0.636 ms ({dev_cav:+.1%}), {t_cav:.1f} s")
    assert ok_bec and ok_cav


def test_c8_detection_noise_robustness():
    cfg = load_preset("fig4")
    p = cfg.rabi_params()
    assert p.n_atoms == 100 and p.rabi_freq == 1 and p.interaction == 2 / 100
    best = sweep.optimal_time("antisymmetric", p, tuple(cfg.search["t_window"]))
    t = best.duration
    noise = NoiseModel(math.sqrt(p.n_atoms))
    rabi_clean = protocols.precision_numeric("antisymmetric", p.with_(duration=t))
    rabi_noisy = protocols.precision_numeric("antisymmetric", p.with_(duration=t), noise)
    spec = protocols.RamseyOatSpec(p.interaction, p.n_atoms, t)
    ramsey_clean = protocols.ramsey_oat_reference(spec).precision
    ramsey_noisy = protocols.ramsey_oat_reference(spec, noise=noise).precision
    r_rabi, r_ramsey = rabi_noisy / rabi_clean, ramsey_noisy / ramsey_clean
    ok = r_rabi < 1.5 and r_ramsey > 2
    assert report("C8 detection-noise robustness", ok,
                  f"at T = {t:.5g}: Rabi ratio {r_rabi:.4f} (< 1.5), Ramsey ratio {r_ramsey:.4f} (> 2)")


def test_c9_interaction_picture_symmetry():
    rng = np.random.default_rng(99)
    worst, worst_ref = 0.0, 0.0
    for _ in range(50):
        n = int(rng.integers(1, 41))
        psi = random_symmetric_state(rng, n)
        omega, chi, delta, t = rng.uniform(0.1, 3), rng.uniform(0, 0.5), rng.uniform(-3, 3), rng.uniform(0, 4)
        amps = []
        for d in (delta, -delta):
            p = RabiParams(n, omega, d, chi)
            final = dynamics.evolve(psi, dynamics.propagator(p), t)
            amps.append(dynamics.interaction_picture(final, p, t))
        worst = max(worst, np.max(np.abs(amps[0] - amps[1][::-1])))
        m = spin.m_values(n)
        ref = np.exp(1j * (chi * m**2 + delta * m) * t) * (
            propagate(rabi_hamiltonian(n, omega, delta, chi), t) @ psi.amplitudes)
        worst_ref = max(worst_ref, np.max(np.abs(amps[0] - ref)))
    ok = worst < 1e-9 and worst_ref < 1e-9
    assert report("C9 interaction-picture symmetry", ok,
                  f"max |C_m(d) - C_-m(-d)| = {worst:.2e}, oracle deviation {worst_ref:.2e}")


def run_verify(level):
    start = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "rabispec", "verify", "--level", level],
                          capture_output=True, text=True)
    return proc.returncode, time.perf_counter() - start


def test_c10_verify_runtime():
    fast_code, fast_time = run_verify("fast")
    full_code, full_time = run_verify("full")
    ok_fast = fast_code == 0 and fast_time < 10
    ok_full = full_code == 0 and full_time < 600
    report("C10a verify fast", ok_fast, f"exit {fast_code} in {fast_time:.1f} s (limit 10 s)")
    report("C10b verify full", ok_full, f"exit {full_code} in {full_time:.1f} s (limit 600 s)")
    assert ok_fast and ok_full
