"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

    pytest tests/test_acceptance.py -v -s
"""

import time

import numpy as np
import pytest

from stratahjb import H_E, H_F, H_Gamma, build_grid, builtin, closed_form, oracle_value
from stratahjb.solver import CONTINUOUS, LSC, max_error, solve
from stratahjb.verification import (
    FAIL,
    PASS,
    WARN,
    Perturbation,
    comparison_test,
    dpp_suite,
    filippov_trials,
    hypothesis_audit,
    interface_lipschitz,
    limit_property_check,
    random_probes,
    scheme_unit,
    stability_test,
    uniqueness_crosscheck,
    unit_drift,
)

pytestmark = pytest.mark.acceptance

BOX = (-2.0, 2.0)
UNIQUE_BUILTINS = ("exampleA", "exampleB", "exampleE", "exampleF", "ball-eikonal", "unit-cost")


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number:>2}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def _grid(P, nodes=None, steps=None):
    nodes = nodes or (161 if P.d == 2 else 401)
    return build_grid(P.strat, BOX, nodes, steps or 200, horizon=P.horizon)


def _oracle_agreement(P, n, seed, depth=2):
    """Largest |oracle - closed form| at n random points."""
    rng = np.random.default_rng(seed)
    cf = closed_form(P)
    worst = 0.0
    for _ in range(n):
        t = rng.uniform(0.0, 0.9)
        x = rng.uniform(-1.5, 1.5, P.d)
        exact = float(cf.value(t, x[None, :])[0])
        worst = max(worst, abs(oracle_value(P, t, x, depth) - exact))
    return worst


def test_01_example_e_closed_form(example_e, report):
    oracle_gap = _oracle_agreement(example_e, 20, seed=11)
    if oracle_gap > 0.05:
        report(1, False, f"closed form not confirmed by the oracle (gap {oracle_gap:.3g})")
    grid = _grid(example_e)
    t0 = time.perf_counter()
    V = solve(example_e, grid, CONTINUOUS)
    runtime = time.perf_counter() - t0
    cf = closed_form(example_e)
    err, count = max_error(V, cf.value, cf.singular_distance, 2 * grid.dx)
    tol = 2 * (grid.dx + grid.dt)
    report(1, err <= tol and runtime <= 60.0 and count > 0,
           f"oracle gap {oracle_gap:.3g} <= 0.05; max error {err:.4g} <= {tol:.3g} over {count} (t, x) entries; "
           f"runtime {runtime:.1f} s <= 60 s")


def test_02_example_a_off_interface(example_a, report):
    grid = _grid(example_a)
    V = solve(example_a, grid, CONTINUOUS)
    cf = closed_form(example_a)
    err, count = max_error(V, cf.value, cf.singular_distance, 0.1 - 1e-9)
    tol = 2 * (grid.dx + grid.dt)
    on = grid.node_stratum == example_a.strat.id_of((0,))
    gamma_vals = V.node_values(0)[on]
    report(2, err <= tol and count > 0,
           f"max error {err:.3g} <= {tol:.3g} for |x1| >= 0.1 ({count} (t, x) entries); "
           f"on-interface values at t = 0 (reported only) in [{gamma_vals.min():.3g}, {gamma_vals.max():.3g}]")


def test_03_example_f_lsc(example_f, f_lsc, report):
    grid = f_lsc.grid
    cf = closed_form(example_f)
    err, count = max_error(f_lsc, cf.value, cf.singular_distance, grid.dx)
    T = example_f.horizon
    rng = np.random.default_rng(3)
    levels = rng.choice(np.arange(5, f_lsc.times.size - 1), 20, replace=False)
    pts = []
    for k, n in enumerate(levels):
        t = f_lsc.times[n]
        jump = T - t
        if k < 8:
            x = jump
        else:
            side = 1.0 if k % 2 else -1.0
            x = float(np.clip(jump + side * rng.uniform(0.1, 1.0), -1.8, 1.8))
        pts.append([t, x])
    lim = limit_property_check(example_f, f_lsc, np.array(pts))
    report(3, err == 0.0 and count > 0 and lim.status == PASS,
           f"max error off one dx band {err:.3g} (exact); limit property worst {lim.worst:.3g} "
           f"<= {lim.tolerance:.3g} at 20 probes (8 on the jump)")


def test_04_uniqueness_crosscheck(example_e, eikonal, report):
    oracle_gap = _oracle_agreement(eikonal, 20, seed=12)
    reps = {P.name: uniqueness_crosscheck(P, _grid(P)) for P in (example_e, eikonal)}
    ok = oracle_gap <= 0.05 and all(r.status == PASS for r in reps.values())
    detail = "; ".join(f"{k} discrepancy {r.discrepancy:.3g} <= {r.tolerance:.3g} ({r.note})" for k, r in reps.items())
    report(4, ok, f"{detail}; ball-eikonal oracle gap {oracle_gap:.3g} <= 0.05")


def test_05_hamiltonian_ordering(report):
    rng = np.random.default_rng(5)
    samples, violations, worst = 0, 0, 0.0
    per_problem = 10_000 // len(UNIQUE_BUILTINS) + 1
    n_p = 20
    for name in UNIQUE_BUILTINS:
        P = builtin(name)
        gamma = P.strat.id_of((0,))
        for _ in range(per_problem // n_p + 1):
            x = rng.uniform(-2.0, 2.0, P.d)
            on = rng.random() < 0.5
            if on:
                x[0] = 0.0
            ps = rng.normal(scale=3.0, size=(n_p, P.d))
            hf = H_F(P, x, ps)
            he = H_E(P, x, ps)
            gaps = [he - hf]
            if on:
                gaps.append(H_Gamma(P, gamma, x, ps) - he)
            for g in gaps:
                worst = max(worst, float(np.max(g)))
                violations += int(np.count_nonzero(g > 1e-12))
            samples += n_p
    report(5, samples >= 10_000 and violations == 0,
           f"{samples} (x, p) samples over {len(UNIQUE_BUILTINS)} problems; {violations} violations; "
           f"largest H_small - H_big = {worst:.3g}")


DPP_PROBLEMS = (
    ("exampleE", ("super", "sub")),
    ("ball-eikonal", ("super", "sub")),
    ("exampleF", ("backward",)),
    ("exampleB", ("backward",)),
)


def test_06_dpp_suite(report):
    h = 0.05
    lines, ok = [], True
    for name, kinds in DPP_PROBLEMS:
        P = builtin(name)
        mode = LSC if P.terminal.mode == "lsc" else CONTINUOUS
        V = solve(P, _grid(P), mode)
        tol = 3 * scheme_unit(V.grid)
        for kind in kinds:
            backward = kind == "backward"
            probes = random_probes(V, 100, h, seed=6, margin=0.2, kind="backward" if backward else "forward",
                                   on_levels=backward)
            rep = dpp_suite(P, V, kind, probes, h, tol)
            ok &= rep.status == PASS and rep.passed == 100
            lines.append(f"{name} {kind} {rep.passed}/100 (tol {tol:.3g})")
    report(6, ok, "; ".join(lines))


def test_07_filippov_bound(example_e, report):
    rep = filippov_trials(example_e, example_e.strat.id_of((0,)), n=50, seed=0)
    report(7, rep.violations == 0 and rep.trials == 50,
           f"{rep.trials} near-tangential references, {rep.violations} violations, "
           f"largest gap / bound = {rep.worst_ratio:.3g}")


def test_08_comparison(report):
    bad, lines = [], []
    for name in UNIQUE_BUILTINS:
        P = builtin(name)
        grid = _grid(P, 81 if P.d == 2 else 401, 100 if P.d == 2 else 200)
        for delta in (0.0, 0.1, 0.3):
            rep = comparison_test(P, grid, delta)
            if rep.status != PASS:
                bad.append(f"{name} delta={delta}")
        lines.append(name)
    report(8, not bad, f"0 <= dv <= delta at every entry for delta in (0, 0.1, 0.3) on {len(lines)} problems"
           + (f"; failures: {bad}" if bad else ""))


def test_09_stability(example_e, report):
    grid = _grid(example_e, 81, 100)
    drift = stability_test(example_e, grid, unit_drift([1.0, 0.0]), eps0=0.2, n_levels=4)
    bump = Perturbation(k=lambda X: np.exp(-np.sum(X * X, axis=1)), k_bound=1.0)
    term = stability_test(example_e, grid, bump, eps0=0.2, n_levels=4)
    term_ok = all(d <= e + 1e-9 for d, e in zip(term.differences, term.epsilons))
    report(9, drift.status == PASS and term_ok,
           f"drift differences {[round(d, 4) for d in drift.differences]} (C = {drift.constant:.3g}, "
           f"tol {drift.tolerance:.3g}); terminal-only differences {[round(d, 4) for d in term.differences]} <= eps_n")


def test_10_audits(example_e, example_b, example_a, report):
    e = hypothesis_audit(example_e)
    b = hypothesis_audit(example_b)
    a = hypothesis_audit(example_a)
    ok = (all(it.status == PASS for it in e.items) and b.status("H2") == FAIL and b.status("H3") == PASS
          and a.status("P1") == FAIL)
    report(10, ok, f"exampleE verdict {e.verdict}; 1-d F = {{1}}: H2 {b.status('H2')}, H3 {b.status('H3')} "
           f"(verdict {b.verdict}); exampleA: P1 {a.status('P1')} (verdict {a.verdict})")
    assert b.verdict == WARN


def test_11_interface_lipschitz(example_e, e_coarse, e_fine, report):
    lc = interface_lipschitz(e_coarse).constant
    lf = interface_lipschitz(e_fine).constant
    change = abs(lf - lc) / lc
    report(11, change <= 0.10, f"discrete Lipschitz constant on [0,T] x interface: 81 -> {lc:.4g}, "
           f"161 -> {lf:.4g}, change {100 * change:.2g}% <= 10%")
