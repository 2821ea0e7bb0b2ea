"""Builtin problems with registered closed-form value functions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .control import (
    ControlProblem,
    ControlSet,
    Piece,
    PolynomialCost,
    affine_velocity,
    assign_pieces,
    constant_velocity,
    scaled_ball_velocity,
    terminal_from_name,
)
from .stratification import Hyperplane, build_stratification


@dataclass(frozen=True)
class ClosedForm:
    """Exact value v(t, x) plus the distance from x to its non-smooth set at time t."""

    value: Callable[[float, np.ndarray], np.ndarray]
    singular_distance: Callable[[float, np.ndarray], np.ndarray]
    note: str = ""


# lsc values sit on the jump itself; absorb rounding in T - t
_JUMP_TOL = 1e-12


def _x1(X):
    return np.atleast_2d(X)[:, 0]


def example_e(n_controls: int = 32, horizon: float = 1.0) -> ControlProblem:
    """Speed 1 left of x1 = 0, speed 2 right of it and on it; l = 0, phi = x1."""
    strat = build_stratification([Hyperplane(0, 0.0)], d=2)
    controls = ControlSet.ball(1.0, n_controls)

    def rule(s):
        scale = 1.0 if s.signature == (-1,) else 2.0
        return Piece(scaled_ball_velocity(scale, 2))

    T = horizon

    def value(t, X):
        x1, tau = _x1(X), T - t
        return np.where(x1 >= 2 * tau, x1 - 2 * tau, np.where(x1 >= 0, 0.5 * x1 - tau, x1 - tau))

    def dist(t, X):
        x1 = _x1(X)
        return np.minimum(np.abs(x1), np.abs(x1 - 2 * (T - t)))

    return ControlProblem(
        strat, controls, assign_pieces(strat, rule), terminal_from_name("linear-x1"),
        c_f=2.0, c_l=1.0, horizon=T, name="exampleE",
        meta={"closed_form": ClosedForm(value, dist, "piecewise linear, kinks at x1 = 0 and x1 = 2(T - t)")},
    )


def example_a(n_controls: int = 21, horizon: float = 1.0) -> ControlProblem:
    """Constant outward fields (-1, 0) and (1, 0); horizontal control (u, 0) on x1 = 0."""
    strat = build_stratification([Hyperplane(0, 0.0)], d=2)
    controls = ControlSet.interval(-1.0, 1.0, n_controls)

    def rule(s):
        if s.signature == (-1,):
            return Piece(constant_velocity([-1.0, 0.0], 1))
        if s.signature == (1,):
            return Piece(constant_velocity([1.0, 0.0], 1))
        return Piece(affine_velocity(np.zeros((2, 2)), [[1.0], [0.0]], [0.0, 0.0]))

    T = horizon

    def value(t, X):
        x1 = _x1(X)
        return np.where(x1 == 0.0, 0.0, (T - t) + np.abs(x1))

    def dist(t, X):
        return np.abs(_x1(X))

    return ControlProblem(
        strat, controls, assign_pieces(strat, rule), terminal_from_name("abs-x1"),
        c_f=1.0, c_l=1.0, horizon=T, name="exampleA",
        meta={"closed_form": ClosedForm(value, dist, "off the interface only; zero on it via the stationary control")},
    )


def example_b(horizon: float = 1.0) -> ControlProblem:
    """1-d drift F = {1}, l = 0, phi = indicator(x > 0)."""
    strat = build_stratification([Hyperplane(0, 0.0)], d=1)
    controls = ControlSet.finite([[0.0]])
    pieces = assign_pieces(strat, lambda s: Piece(constant_velocity([1.0], 1)))
    T = horizon

    def value(t, X):
        return (_x1(X) + (T - t) > _JUMP_TOL).astype(float)

    def dist(t, X):
        return np.abs(_x1(X) + (T - t))

    return ControlProblem(
        strat, controls, pieces, terminal_from_name("indicator-positive-x1"),
        c_f=1.0, c_l=1.0, horizon=T, name="exampleB",
        meta={"closed_form": ClosedForm(value, dist, "discontinuity at x = -(T - t)")},
    )


def example_f(n_controls: int = 21, horizon: float = 1.0) -> ControlProblem:
    """1-d, F = [-1, 1] everywhere, l = 0, phi = indicator(x > 0)."""
    strat = build_stratification([Hyperplane(0, 0.0)], d=1)
    controls = ControlSet.interval(-1.0, 1.0, n_controls)
    pieces = assign_pieces(strat, lambda s: Piece(scaled_ball_velocity(1.0, 1)))
    T = horizon

    def value(t, X):
        return (_x1(X) - (T - t) > _JUMP_TOL).astype(float)

    def dist(t, X):
        return np.abs(_x1(X) - (T - t))

    return ControlProblem(
        strat, controls, pieces, terminal_from_name("indicator-positive-x1"),
        c_f=1.0, c_l=1.0, horizon=T, name="exampleF",
        meta={"closed_form": ClosedForm(value, dist, "discontinuity at x = T - t")},
    )


def ball_eikonal(n_controls: int = 32, horizon: float = 1.0) -> ControlProblem:
    """Unit ball dynamics on both sides of x1 = 0, l = 0, phi = |x1|."""
    strat = build_stratification([Hyperplane(0, 0.0)], d=2)
    controls = ControlSet.ball(1.0, n_controls)
    pieces = assign_pieces(strat, lambda s: Piece(scaled_ball_velocity(1.0, 2)))
    T = horizon

    def value(t, X):
        return np.maximum(np.abs(_x1(X)) - (T - t), 0.0)

    def dist(t, X):
        return np.abs(np.abs(_x1(X)) - (T - t))

    return ControlProblem(
        strat, controls, pieces, terminal_from_name("abs-x1"),
        c_f=1.0, c_l=1.0, horizon=T, name="ball-eikonal",
        meta={"closed_form": ClosedForm(value, dist, "kinks at |x1| = T - t")},
    )


def unit_cost(n_controls: int = 32, horizon: float = 1.0) -> ControlProblem:
    """Example E dynamics with l = 1 and phi = 0, so v = T - t."""
    base = example_e(n_controls, horizon)
    pieces = {k: Piece(p.velocity, PolynomialCost((1.0,))) for k, p in base.pieces.items()}
    T = horizon

    def value(t, X):
        return np.full(np.atleast_2d(X).shape[0], T - t)

    def dist(t, X):
        return np.full(np.atleast_2d(X).shape[0], np.inf)

    return base.replace(
        pieces=pieces,
        terminal=terminal_from_name("zero"),
        name="unit-cost",
        meta={"closed_form": ClosedForm(value, dist, "smooth")},
    )


BUILTINS: dict[str, Callable[..., ControlProblem]] = {
    "exampleA": example_a,
    "exampleB": example_b,
    "exampleE": example_e,
    "exampleF": example_f,
    "ball-eikonal": ball_eikonal,
    "f-equals-one": example_b,
    "unit-cost": unit_cost,
}


def builtin(name: str, **kw) -> ControlProblem:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown builtin problem {name!r}; known: {', '.join(sorted(BUILTINS))}") from None
    return factory(**kw)


def closed_form(P: ControlProblem) -> ClosedForm | None:
    return P.meta.get("closed_form")
