import dataclasses
import warnings

import numpy as np
import pytest

from stratahjb import (
    BoxTooSmall,
    GridOutOfRange,
    Hyperplane,
    HyperplaneOutsideBox,
    build_grid,
    build_stratification,
    builtin,
    cfl_time_steps,
    closed_form,
)
from stratahjb.solver import CONTINUOUS, LSC, build_operator, lsc_stride, max_error, solve, stencil
from stratahjb.verification import growth_constant

ONE = build_stratification([Hyperplane(0, 0.0)], d=2)


def test_odd_count_centres_the_plane():
    g = build_grid(ONE, (-1.0, 1.0), 81, 10)
    assert g.axes[0][40] == 0.0
    assert g.n_nodes == 81 * 81
    assert np.count_nonzero(g.node_stratum == ONE.id_of((0,))) == 81


def test_even_count_inserts_the_plane():
    g = build_grid(ONE, (-1.0, 1.0), 80, 10)
    assert len(g.axes[0]) == 81
    assert 0.0 in g.axes[0]
    assert len(g.axes[1]) == 80


def test_time_step():
    S = build_stratification([Hyperplane(0, 0.0)], d=1)
    assert build_grid(S, (-2.0, 2.0), 401, 100).dt == pytest.approx(0.01)


def test_plane_outside_box_warns():
    S = build_stratification([Hyperplane(0, 5.0)], d=1)
    with pytest.warns(HyperplaneOutsideBox):
        build_grid(S, (-1.0, 1.0), 11, 5)


def test_cfl_rule(example_e):
    g = build_grid(example_e.strat, (-2.0, 2.0), 81, 1)
    n = cfl_time_steps(g, example_e.c_f)
    radius = np.hypot(2.0, 2.0)
    assert 1.0 / n <= g.dx / (example_e.c_f * (1 + radius)) + 1e-15
    assert 1.0 / (n - 1) > g.dx / (example_e.c_f * (1 + radius))


@pytest.mark.parametrize("mode", [CONTINUOUS, LSC])
def test_unit_cost_is_exact(unit_cost, mode):
    g = build_grid(unit_cost.strat, (-2.0, 2.0), 41, 40)
    V = solve(unit_cost, g, mode)
    for n, t in enumerate(V.times):
        assert np.allclose(V.values[n], 1.0 - t, atol=1e-12)


def test_final_condition(e_coarse, f_lsc, example_e, example_f):
    assert np.array_equal(e_coarse.values[-1], example_e.terminal(e_coarse.grid.nodes))
    X = f_lsc.grid.nodes[f_lsc.pair_node]
    assert np.all(f_lsc.node_values(f_lsc.times.size - 1) == example_f.terminal(f_lsc.grid.nodes))
    assert f_lsc.values[-1].shape == (X.shape[0],)


def test_stencils_never_cross_an_interface(example_e):
    g = build_grid(example_e.strat, (-2.0, 2.0), 41, 40)
    op = build_operator(example_e, g, CONTINUOUS)
    S = example_e.strat
    ns = g.node_stratum
    for p in range(op.pair_node.size):
        M = int(op.pair_stratum[p])
        for c in range(op.cand_ptr[p], op.cand_ptr[p + 1]):
            used = op.corner_idx[c][op.corner_w[c] > 0]
            assert all(S.in_closure(int(ns[i]), M) for i in used)


def test_stencil_weights_partition_unity(example_e):
    g = build_grid(example_e.strat, (-2.0, 2.0), 21, 10)
    F = np.random.default_rng(0).uniform(-1.9, 1.9, (200, 2))
    corners, weights, extrap = stencil(g, F)
    assert np.allclose(weights.sum(axis=1), 1.0)
    assert not extrap.any()
    assert np.allclose(np.einsum("nk,nkd->nd", weights, g.nodes[corners]), F)


def test_example_a_off_interface(example_a):
    g = build_grid(example_a.strat, (-2.0, 2.0), 81, 100)
    V = solve(example_a, g, CONTINUOUS)
    cf = closed_form(example_a)
    err, count = max_error(V, cf.value, cf.singular_distance, 0.1 - 1e-9)
    assert count > 0
    assert err <= 2 * (g.dx + g.dt)


@pytest.mark.parametrize("name", ["exampleF", "exampleB"])
def test_lsc_indicator_exact_off_the_jump(name):
    P = builtin(name)
    g = build_grid(P.strat, (-2.0, 2.0), 401, 200)
    V = solve(P, g, LSC)
    cf = closed_form(P)
    err, count = max_error(V, cf.value, cf.singular_distance, g.dx)
    assert count > 0 and err == 0.0


def test_lsc_matches_continuous_for_lipschitz_data(example_e):
    g = build_grid(example_e.strat, (-2.0, 2.0), 81, 100)
    Vc = solve(example_e, g, CONTINUOUS)
    Vl = solve(example_e, g, LSC)
    m = Vl.stats["stride"]
    worst = max(np.max(np.abs(Vl.node_values(n) - Vc.node_values(n * m))) for n in range(Vl.times.size))
    assert worst <= 2 * (g.dx + g.dt)


def test_lsc_stride(example_e, example_f):
    g = build_grid(example_f.strat, (-2.0, 2.0), 401, 200)
    assert lsc_stride(example_f, g) == 2
    g = build_grid(example_e.strat, (-2.0, 2.0), 161, 200)
    m = lsc_stride(example_e, g)
    assert 200 % m == 0 and m * g.dt * 2.0 <= g.dx + 1e-12


def test_query(e_coarse, example_e):
    cf = closed_form(example_e)
    assert e_coarse.query(1.0, [0.3, 0.1]) == pytest.approx(0.3)
    assert e_coarse.query(0.5, [-1.0, 0.2]) == pytest.approx(float(cf.value(0.5, np.array([[-1.0, 0.2]]))[0]), abs=0.05)
    with pytest.raises(GridOutOfRange):
        e_coarse.query(0.5, [2.5, 0.0])
    with pytest.raises(GridOutOfRange):
        e_coarse.query(1.5, [0.0, 0.0])


def test_lsc_query_lower_envelope(f_lsc):
    # on the jump the lower value wins
    t = f_lsc.times[50]
    assert f_lsc.query(t, [1.0 - t]) == 0.0
    assert f_lsc.query(t, [1.0 - t + 0.05]) == 1.0


def test_box_too_small(example_e):
    g = build_grid(example_e.strat, (-0.2, 0.2), 9, 2)
    with pytest.raises(BoxTooSmall):
        build_operator(example_e, g, CONTINUOUS)


def test_growth_constant(e_coarse, example_e):
    C = growth_constant(e_coarse, example_e.lam)
    assert np.isfinite(C) and C <= 3.0


def test_backends_agree(example_e):
    g = build_grid(example_e.strat, (-2.0, 2.0), 41, 20)
    for mode in (CONTINUOUS, LSC):
        op = build_operator(example_e, g, mode)
        from stratahjb.solver import terminal_entries
        term = terminal_entries(example_e, op)
        a = op.run(term, backend="numba")
        b = op.run(term, backend="numpy")
        assert np.array_equal(a, b)


def test_solve_is_deterministic(example_e):
    g = build_grid(example_e.strat, (-2.0, 2.0), 41, 20)
    assert np.array_equal(solve(example_e, g).values, solve(example_e, g).values)


def test_continuous_mode_warns_without_ball_controllability(example_a):
    from stratahjb import solve_continuous
    g = build_grid(example_a.strat, (-2.0, 2.0), 41, 40)
    with pytest.warns(RuntimeWarning):
        solve_continuous(example_a, g)
