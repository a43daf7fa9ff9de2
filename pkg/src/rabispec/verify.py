"""Self-checks behind ``rabispec verify``: physics invariants plus golden-file regression."""
from __future__ import annotations

import io
import json
import math
import sys
import time
from contextlib import redirect_stderr, redirect_stdout
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, analytic, dynamics, protocols, spin
from .dynamics import RabiParams

GOLDEN_REL_TOL = 1e-9
# (preset, command, golden file, level)
GOLDEN = (
    ("smoke-spectrum", "spectrum", "smoke-spectrum.csv", "fast"),
    ("smoke-heatmap", "heatmap", "smoke-heatmap.csv", "fast"),
    ("smoke-pulse", "pulse", "smoke-pulse.csv", "fast"),
    ("fig1b", "spectrum", "fig1b.csv", "full"),
    ("fig1c", "spectrum", "fig1c.csv", "full"),
    ("fig2c-pointI", "spectrum", "fig2c-pointI.csv", "full"),
    ("fig2c-pointII", "spectrum", "fig2c-pointII.csv", "full"),
    ("fig2c-pointIII", "spectrum", "fig2c-pointIII.csv", "full"),
    ("figS3d", "pulse", "figS3d.csv", "full"),
    ("figS4d", "pulse", "figS4d.csv", "full"),
    ("figS5", "pulse", "figS5.csv", "full"),
    ("fig2a", "heatmap", "fig2a.csv", "full"),
    ("fig3a", "heatmap", "fig3a.csv", "full"),
    ("fig4", "compare", "fig4.csv", "full"),
    ("cavity", "compare", "cavity.csv", "full"),
)


def _rng():
    return np.random.default_rng(20240611)


def _random_symmetric_state(rng, n):
    # parity-symmetric coefficients: C_m = C_{-m}
    half = rng.normal(size=n // 2 + 1) + 1j * rng.normal(size=n // 2 + 1)
    amps = np.concatenate([half, half[: (n + 1) // 2][::-1]])
    return spin.DickeState.from_amplitudes(amps)


# -- invariant checks: each returns (passed, detail) --------------------------


def check_commutators(n_max=20):
    worst = 0.0
    for n in range(1, n_max + 1):
        jx, jy, jz = (spin.build_operator(k, n).matrix for k in ("jx", "jy", "jz"))
        for a, b, c in ((jx, jy, jz), (jy, jz, jx), (jz, jx, jy)):
            worst = max(worst, np.max(np.abs(a @ b - b @ a - 1j * c)))
    return worst < 1e-12, f"max |[Ja,Jb] - i Jc| = {worst:.2e} for N = 1..{n_max}"


def check_casimir(n_values=(1, 7, 20, 40), samples=10):
    rng = _rng()
    worst = 0.0
    for n in n_values:
        j = n / 2
        for _ in range(samples):
            amps = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
            m = spin.moments(spin.DickeState.from_amplitudes(amps))
            worst = max(worst, abs(m.casimir - j * (j + 1)) / (j * (j + 1)))
    return worst < 1e-12, f"max relative Casimir error = {worst:.2e}"


def check_oracle(samples=60, n_max=40):
    rng = _rng()
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(1, n_max + 1))
        omega, delta, t = rng.uniform(0.1, 4), rng.uniform(-3, 3), rng.uniform(0, 4)
        state = spin.coherent_state(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi), n)
        numeric, _ = dynamics.signal_jz(state, RabiParams(n, omega, delta, 0.0, t))
        exact = analytic.jz_mean_analytic(spin.moments(state), omega, delta, t)
        worst = max(worst, abs(numeric - exact) / (n / 2))
    return worst < 1e-9, f"max |<Jz> numeric - closed form| / (N/2) = {worst:.2e}"


def check_antisymmetry(n=40, chis=(0.0, 0.01, 0.02), points=41):
    deltas = np.linspace(-3, 3, points)
    worst = 0.0
    for chi in chis + (6 * math.pi / n,):
        for d in deltas[deltas > 0]:
            p = RabiParams(n, 1.0, d, chi, math.pi)
            plus = protocols.run_rabi("antisymmetric", p).mean_jz
            minus = protocols.run_rabi("antisymmetric", p.with_(detuning=-d)).mean_jz
            worst = max(worst, abs(plus + minus) / n)
    return worst < 1e-9, f"max |<Jz>(d) + <Jz>(-d)| / N = {worst:.2e} at N = {n}"


def check_interaction_picture(samples=20, n_max=40):
    rng = _rng()
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(1, n_max + 1))
        state = _random_symmetric_state(rng, n)
        omega, chi, delta, t = rng.uniform(0.1, 3), rng.uniform(0, 0.3), rng.uniform(-2, 2), rng.uniform(0, 3)
        amps = []
        for d in (delta, -delta):
            p = RabiParams(n, omega, d, chi)
            final = dynamics.evolve(state, dynamics.propagator(p), t)
            amps.append(dynamics.interaction_picture(final, p, t))
        worst = max(worst, np.max(np.abs(amps[0] - amps[1][::-1])))
    return worst < 1e-9, f"max |C_m(d) - C_-m(-d)| = {worst:.2e}"


def check_slope(n_values=(16, 64)):
    worst = 0.0
    for n in n_values:
        omega = 1.3
        m = protocols.measure("antisymmetric", RabiParams(n, omega, 0.0, 0.0, math.pi / omega))
        worst = max(worst, abs(m.slope / (n / omega) - 1),
                    abs(m.precision / (omega / (2 * math.sqrt(n))) - 1))
    return worst < 1e-4, f"max relative deviation from slope N/Omega and precision Omega/(2 sqrt N) = {worst:.2e}"


def check_zero_pulse_error():
    p = RabiParams(40, 1.0, 0.0, 0.01, math.pi)
    root = protocols.locate_antisymmetric_point(protocols.PulseSpec(epsilon=0.0), p, (-0.2, 0.2))
    return abs(root) < 1e-9, f"delta_root(eps = 0) = {root:.2e}"


def check_full_antisymmetry():
    return check_antisymmetry(n=100, chis=(0.0, 0.01, 0.02), points=101)


def check_full_slope():
    return check_slope((16, 64, 256))


def check_enhancement():
    n, t = 100, 1.0
    p1 = protocols.precision_numeric("antisymmetric", RabiParams(n, math.pi, 0.0, 0.0, t))
    p2 = protocols.precision_numeric("antisymmetric", RabiParams(n, math.pi, 0.0, 0.4 * math.pi / n, t))
    p3 = protocols.precision_numeric("antisymmetric", RabiParams(n, 3 * math.pi, 0.0, 6 * math.pi / n, t))
    ok = p2 < p1 and p3 < min(p1, p2) and p3 < 1 / (math.sqrt(n) * t)
    return ok, f"precision I = {p1:.6g}, II = {p2:.6g}, III = {p3:.6g}, SQL = {1 / math.sqrt(n):.6g}"


FAST_CHECKS = (
    ("commutators", check_commutators),
    ("casimir", check_casimir),
    ("closed-form oracle", check_oracle),
    ("antisymmetry", check_antisymmetry),
    ("interaction-picture symmetry", check_interaction_picture),
    ("resonance slope", check_slope),
    ("zero pulse error", check_zero_pulse_error),
)
FULL_CHECKS = FAST_CHECKS + (
    ("antisymmetry N=100", check_full_antisymmetry),
    ("resonance slope N<=256", check_full_slope),
    ("interaction enhancement", check_enhancement),
)


# -- golden files ---------------------------------------------------------------


def default_golden_dir():
    return resources.files("rabispec") / "golden"


def render_preset(preset, command, threads=1) -> str:
    """CSV text produced by a preset, exactly as the CLI writes it."""
    from .cli import execute
    from .config import load_preset

    cfg = load_preset(preset).with_overrides(['output.path="-"', 'output.format="csv"'])
    buffer = io.StringIO()
    with redirect_stdout(buffer), redirect_stderr(io.StringIO()):
        execute(cfg, command, threads)
    return buffer.getvalue()


def _parse(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    rows = [[float(x) if x else math.nan for x in ln.split(",")] for ln in lines[1:]]
    return header, np.array(rows, dtype=float).reshape(len(rows), -1)


def compare_tables(expected_text, actual_text, rel_tol=GOLDEN_REL_TOL, max_report=5):
    """Cell-wise comparison; tolerance relative to each column's largest magnitude."""
    h1, a = _parse(expected_text)
    h2, b = _parse(actual_text)
    if h1 != h2:
        return False, [f"header differs: golden {h1} vs computed {h2}"]
    if a.shape != b.shape:
        return False, [f"shape differs: golden {a.shape} vs computed {b.shape}"]
    finite = np.isfinite(a) & np.isfinite(b)
    same_special = (~np.isfinite(a) & ~np.isfinite(b)) & ((np.isnan(a) & np.isnan(b)) | (a == b))
    scale = np.nanmax(np.where(np.isfinite(a), np.abs(a), np.nan), axis=0, initial=0.0)
    tol = rel_tol * np.maximum(scale, 1e-300)
    close = np.zeros(a.shape, dtype=bool)
    with np.errstate(invalid="ignore"):
        close[finite] = (np.abs(a - b) <= np.broadcast_to(tol, a.shape))[finite]
    bad = ~(close | same_special)
    if not bad.any():
        return True, []
    notes = [f"{int(bad.sum())} of {bad.size} cells differ"]
    for r, c in list(zip(*np.nonzero(bad)))[:max_report]:
        notes.append(f"row {r + 1}, column {h1[c]}: golden {a[r, c]!r}, computed {b[r, c]!r}")
    return False, notes


def check_golden(entry, golden_dir, threads=1):
    preset, command, filename, _ = entry
    path = Path(golden_dir) / filename
    if not path.is_file():
        return False, [f"missing golden file {path}"]
    return compare_tables(path.read_text(encoding="utf-8"), render_preset(preset, command, threads))


# -- driver ---------------------------------------------------------------------


def run_checks(level="fast", golden_dir=None, threads=1):
    checks = FAST_CHECKS if level == "fast" else FULL_CHECKS
    golden_dir = default_golden_dir() if golden_dir is None else golden_dir
    report = []
    for name, func in checks:
        start = time.perf_counter()
        try:
            ok, detail = func()
            notes = [detail]
        except Exception as exc:  # a crashing check is a failing check
            ok, notes = False, [f"{type(exc).__name__}: {exc}"]
        report.append({"check": name, "passed": bool(ok), "notes": notes,
                       "seconds": round(time.perf_counter() - start, 3)})
    for entry in GOLDEN:
        if level == "fast" and entry[3] != "fast":
            continue
        start = time.perf_counter()
        try:
            ok, notes = check_golden(entry, golden_dir, threads)
        except Exception as exc:
            ok, notes = False, [f"{type(exc).__name__}: {exc}"]
        report.append({"check": f"golden {entry[2]}", "passed": bool(ok), "notes": notes,
                       "seconds": round(time.perf_counter() - start, 3)})
    return report


def run_verify(level="fast", as_json=False, golden_dir=None, threads=1) -> int:
    start = time.perf_counter()
    report = run_checks(level, golden_dir, threads)
    passed = all(item["passed"] for item in report)
    if as_json:
        json.dump({"level": level, "engine_version": __version__, "passed": passed,
                   "seconds": round(time.perf_counter() - start, 3), "checks": report},
                  sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        for item in report:
            print(f"{'PASS' if item['passed'] else 'FAIL'}  {item['check']}: {'; '.join(item['notes'])}")
        print(f"{'all checks passed' if passed else 'verification FAILED'} "
              f"({len(report)} checks, {time.perf_counter() - start:.1f} s)")
    return 0 if passed else 1


def write_golden(golden_dir=None, level="full", threads=1):
    """Regenerate the golden files (deliberate; run after an intended numerical change)."""
    golden_dir = Path(default_golden_dir() if golden_dir is None else golden_dir)
    golden_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for preset, command, filename, entry_level in GOLDEN:
        if level == "fast" and entry_level != "fast":
            continue
        text = render_preset(preset, command, threads)
        (golden_dir / filename).write_text(text, encoding="utf-8", newline="")
        written.append(filename)
    return written
