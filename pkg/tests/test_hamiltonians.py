import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratahjb import H_E, H_F, H_Gamma, NotOnInterface, builtin
from stratahjb.control import ControlProblem, Piece, PolynomialCost, assign_pieces, constant_velocity

vec = st.lists(st.floats(-10, 10), min_size=2, max_size=2).map(np.array)


def test_example_a_values(example_a):
    x = [0.0, 0.4]
    gamma = example_a.strat.id_of((0,))
    assert H_F(example_a, x, [2.0, 5.0]) == pytest.approx(2.0)
    assert H_E(example_a, x, [2.0, 5.0]) == pytest.approx(2.0)
    assert H_E(example_a, x, [-3.0, 1.0]) == pytest.approx(3.0)
    assert H_Gamma(example_a, gamma, x, [7.0, -3.0]) == 0.0


def test_one_dimensional_drift_has_no_tangential_dynamics(example_b):
    assert H_Gamma(example_b, example_b.strat.id_of((0,)), [0.0], [1.0]) == -np.inf


def test_constant_cost_no_motion():
    base = builtin("exampleE")
    pieces = assign_pieces(base.strat, lambda s: Piece(constant_velocity([0.0, 0.0], 2), PolynomialCost((1.0,))))
    P = ControlProblem(base.strat, base.controls, pieces, base.terminal)
    for p in ([0.0, 0.0], [3.0, -1.0]):
        assert H_F(P, [0.2, 0.1], p) == -1.0


def test_interface_sup_over_tangential_slice(example_e):
    gamma = example_e.strat.id_of((0,))
    for p2 in (0.5, -1.5, 3.0):
        assert H_Gamma(example_e, gamma, [0.0, 0.3], [0.0, p2]) == pytest.approx(2.0 * abs(p2))


def test_not_on_interface(example_e):
    with pytest.raises(NotOnInterface):
        H_Gamma(example_e, example_e.strat.id_of((0,)), [0.1, 0.0], [1.0, 0.0])


@settings(max_examples=100, deadline=None)
@given(st.floats(-2, 2), vec)
def test_p_zero_gives_minus_min_cost(x2, p):
    P = builtin("unit-cost")
    assert H_F(P, [x2, 0.5], np.zeros(2)) == -1.0


@settings(max_examples=100, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), vec)
def test_cell_essential_equals_full(x1, x2, p):
    P = builtin("exampleE")
    if abs(x1) < 1e-6:
        x1 = 0.5
    assert H_E(P, [x1, x2], p) == H_F(P, [x1, x2], p)


@settings(max_examples=150, deadline=None)
@given(st.floats(-2, 2), vec, vec, st.floats(0, 1), st.sampled_from(["exampleE", "exampleA", "ball-eikonal"]))
def test_convex_and_homogeneous_in_p(x2, p, q, lam, name):
    P = builtin(name)
    x = [0.0, x2]
    gamma = P.strat.id_of((0,))
    for H in (lambda pp: H_F(P, x, pp), lambda pp: H_E(P, x, pp), lambda pp: H_Gamma(P, gamma, x, pp)):
        mid = H(lam * p + (1 - lam) * q)
        assert mid <= lam * H(p) + (1 - lam) * H(q) + 1e-9
        # zero running cost: positively homogeneous of degree one
        assert H(2.5 * p) == pytest.approx(2.5 * H(p), abs=1e-9)


@settings(max_examples=150, deadline=None)
@given(st.floats(-2, 2), vec, st.sampled_from(["exampleE", "exampleA", "ball-eikonal", "unit-cost"]))
def test_ordering_on_interface(x2, p, name):
    P = builtin(name)
    x = [0.0, x2]
    gamma = P.strat.id_of((0,))
    assert H_Gamma(P, gamma, x, p) <= H_E(P, x, p) + 1e-12 <= H_F(P, x, p) + 2e-12


def test_batched_p(example_e):
    ps = np.random.default_rng(0).normal(size=(10, 2))
    batch = H_F(example_e, [0.0, 0.0], ps)
    assert np.allclose(batch, [H_F(example_e, [0.0, 0.0], p) for p in ps])
