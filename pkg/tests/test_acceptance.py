"""Acceptance criteria 1-10 at their stated tolerances and time budgets.

Each test appends one PASS/FAIL line (shown in the terminal summary) and
then asserts. Run directly with ``python3 tests/test_acceptance.py`` to get
the same lines without pytest.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE_LINES  # noqa: E402

from selfsim import builtin
from selfsim.config import BUILTINS
from selfsim.ergodic import CylindricalFunction, default_function, deviation_series, fit_exponent
from selfsim.experiments import exact_self_similarity, oracle_equivalence, phi_growth_series, supertile_residuals
from selfsim.measures import PhiVector
from selfsim.spectral import KernelSpec, eta_dilation_check, eta_profile, scaling_profile
from selfsim.substitution import spectral_data
from selfsim.tiling import make_window

SEED = 0


def report(num, ok, detail, seconds, budget):
    ok = bool(ok) and seconds < budget
    line = f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail} [{seconds:.2f} s / {budget:g} s]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_spectral_data():
    t0 = time.perf_counter()
    sds = {n: spectral_data(builtin(n)) for n in BUILTINS}
    t = time.perf_counter() - t0
    a_ab, a_sym = sds["ab42"].alpha, sds["sym95"].alpha
    closed = 2 * math.log(5) / math.log(9)
    ok = sds["table"].theta1 == 4.0 and abs(a_ab - 0.5) <= 1e-12 and abs(a_sym - closed) <= 1e-12
    report(1, ok, f"table theta1={sds['table'].theta1}, ab42 alpha={a_ab!r}, "
                  f"sym95 alpha-closed={a_sym - closed:.1e}", t, 1)


def test_criterion_02_exact_self_similarity():
    t0 = time.perf_counter()
    reps = {n: exact_self_similarity(builtin(n), spectral_data(builtin(n)), trials=100, seed=SEED) for n in BUILTINS}
    t = time.perf_counter() - t0
    ok = all(r["pass"] for r in reps.values())
    worst = max(r["max_residual"] for r in reps.values())
    report(2, ok, f"100 unions per builtin, max integer residual {worst}", t, 10)


def test_criterion_03_oracle_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for n in BUILTINS:
        sub = builtin(n)
        sd = spectral_data(sub)
        rep = oracle_equivalence(sub, sd, default_function(sub, sd, checker=True), pairs=50, rho_max=64.0, seed=SEED)
        worst = max(worst, rep["max_abs_diff"])
    t = time.perf_counter() - t0
    report(3, worst <= 1e-8, f"50 pairs per builtin, rho <= 64, max |diff| {worst:.2e}", t, 60)


def test_criterion_04_supertile_residual():
    t0 = time.perf_counter()
    worst = 0.0
    for n in ("sym95", "ab42"):
        sub = builtin(n)
        sd = spectral_data(sub)
        f = default_function(sub, sd)
        assert sorted(float(p.flat[0]) for p in f.profiles) == [-1.0, 1.0]
        rep = supertile_residuals(sub, sd, f, kmax=6, seed=SEED, method="hierarchical")
        worst = max(worst, rep["max_abs_diff"])
    t = time.perf_counter() - t0
    report(4, worst <= 1e-9, f"k <= 6, sym95 and ab42, max |residual| {worst:.2e}", t, 5)


def test_criterion_05_phi_growth_sym95():
    t0 = time.perf_counter()
    sub = builtin("sym95")
    sd = spectral_data(sub)
    v = PhiVector.from_eigen(sd, 1, integral=True)
    W = make_window(sub, 0, 8)
    series = phi_growth_series(v, W, range(2, 7), 64, seed=SEED)
    fit = fit_exponent(series, drop_head=0)
    t = time.perf_counter() - t0
    report(5, 1.345 <= fit.slope <= 1.585, f"sym95 Phi+ RMS slope {fit.slope:.4f} in [1.345, 1.585], 64 anchors",
           t, 300)


def test_criterion_06a_deviation_ab42():
    t0 = time.perf_counter()
    sub = builtin("ab42")
    sd = spectral_data(sub)
    W = make_window(sub, 0, 10)
    S, _ = deviation_series(default_function(sub, sd), W, sd, range(2, 10), 128, seed=SEED)
    fit = fit_exponent(S, drop_head=0)
    t = time.perf_counter() - t0
    report("6a", abs(fit.slope - 0.5) <= 0.05, f"ab42 RMS S slope {fit.slope:.4f} (0.5 +- 0.05), 128 anchors", t, 60)


def test_criterion_06b_deviation_sym95():
    t0 = time.perf_counter()
    sub = builtin("sym95")
    sd = spectral_data(sub)
    W = make_window(sub, 0, 8)
    S, _ = deviation_series(default_function(sub, sd), W, sd, range(2, 7), 64, seed=SEED)
    fit = fit_exponent(S, drop_head=0)
    t = time.perf_counter() - t0
    report("6b", abs(fit.slope - sd.alpha) <= 0.12,
           f"sym95 RMS S slope {fit.slope:.4f} (alpha {sd.alpha:.4f} +- 0.12), 64 anchors", t, 300)


def test_criterion_07_table_control():
    t0 = time.perf_counter()
    sub = builtin("table")
    sd = spectral_data(sub)
    f = default_function(sub, sd)
    assert abs(float(np.dot(f.integrals, [0.25, 0.25]))) < 1e-15
    W = make_window(sub, 0, 12)
    S, _ = deviation_series(f, W, sd, range(2, 9), 64, seed=SEED)
    fit = fit_exponent(S, drop_head=0)
    t = time.perf_counter() - t0
    report(7, fit.slope <= 1.15, f"table RMS S slope {fit.slope:.4f} <= 1.15, 64 anchors", t, 120)


def test_criterion_08a_spectral_ab42():
    t0 = time.perf_counter()
    sub = builtin("ab42")
    sd = spectral_data(sub)
    W = make_window(sub, 0, 9)
    prof = scaling_profile(default_function(sub, sd), W, sd, range(1, 8), KernelSpec(), anchors=64, seed=SEED)
    t = time.perf_counter() - t0
    report("8a", abs(prof.fit.slope + 1.0) <= 0.15,
           f"ab42 log G slope {prof.fit.slope:.4f} (-1 +- 0.15), 64 anchors", t, 600)


@pytest.mark.slow
def test_criterion_08b_spectral_sym95():
    t0 = time.perf_counter()
    sub = builtin("sym95")
    sd = spectral_data(sub)
    W = make_window(sub, 0, 8)
    prof = scaling_profile(default_function(sub, sd), W, sd, range(1, 6), KernelSpec(), anchors=32, seed=SEED)
    t = time.perf_counter() - t0
    report("8b", abs(prof.fit.slope - prof.expected) <= 0.25,
           f"sym95 log G slope {prof.fit.slope:.4f} ({prof.expected:.4f} +- 0.25), 32 anchors", t, 3600)


def test_criterion_09_estimator_sanity():
    t0 = time.perf_counter()
    sub = builtin("ab42")
    W = make_window(sub, 0, 7)
    sd = spectral_data(sub)
    c = 1.7
    ok = True
    slopes = []
    for val in (c, 0.0):
        f = CylindricalFunction.constant(sub, (val, val))
        rows = []
        from selfsim.spectral import spectral_form
        for N in range(0, 5):
            rows.append(spectral_form(f, W, 4.0 ** N, anchors=16, seed=SEED).G)
        if val:
            ok &= all(abs(g - c * c) <= 1e-9 for g in rows)
            slope = np.polyfit(np.log(4.0 ** np.arange(5)), np.log(rows), 1)[0]
            slopes.append(slope)
            ok &= abs(slope) <= 0.01
        else:
            ok &= all(g == 0.0 for g in rows)
    t = time.perf_counter() - t0
    report(9, ok, f"f == {c}: G == c^2, slope {slopes[0]:.1e}; f == 0: G == 0", t, 10)


def test_criterion_10_eta_coherence():
    t0 = time.perf_counter()
    sub = builtin("ab42")
    sd = spectral_data(sub)
    f = default_function(sub, sd)
    W = make_window(sub, 0, 10)
    grid = [0.25, 0.5, 1.0, 2.0, 4.0]
    mono = True
    dil_ok = True
    worst = 0.0
    for N in (3, 4, 5):
        rows = eta_profile(f, W, sd, grid, N, anchors=128, seed=SEED)
        for a, b in zip(rows, rows[1:]):
            mono &= b.value >= a.value - 3 * max(a.stderr, b.stderr)
        for chk in eta_dilation_check(f, W, sd, grid[:-1], N, anchors=128, seed=SEED):
            dil_ok &= chk.ok
            worst = max(worst, abs(chk.lhs - chk.rhs) / chk.stderr if chk.stderr else 0.0)
    t = time.perf_counter() - t0
    report(10, mono and dil_ok, f"ab42 N=3..5 monotone={mono}, dilation within {worst:.2f} stderr (<= 3)", t, 900)


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
