"""Control systems on a stratification: pieces, feasibility sets, controllability.

Every stratum carries its own smooth piece (velocity f, running cost l),
defined on the closure of that stratum.  The control set is shared and
discretised by a finite list of samples.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import GrowthViolation, NotOnInterface, StratumPieceMissing
from .stratification import CELL, Stratification

EPS_TAN = 1e-8
GROWTH_SLACK = 1.01


# --------------------------------------------------------------------------- controls
@dataclass(frozen=True)
class ControlSet:
    samples: np.ndarray
    kind: str
    params: tuple

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if s.size == 0:
            raise ValueError("control set must be nonempty")
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @classmethod
    def ball(cls, radius: float, count: int, dim: int = 2, center: bool = True) -> "ControlSet":
        """`count` points on the sphere of the given radius, plus the centre."""
        if dim == 1:
            return cls.interval(-radius, radius, count)
        if dim != 2:
            raise ValueError("ball controls are implemented for dim 1 and 2")
        ang = 2.0 * np.pi * np.arange(count) / count
        pts = radius * np.column_stack([np.cos(ang), np.sin(ang)])
        # exact axis points keep tangency tests exact
        pts[np.abs(pts) < 1e-15 * radius] = 0.0
        if center:
            pts = np.vstack([pts, np.zeros((1, 2))])
        return cls(pts, "ball", (float(radius), int(count), int(dim)))

    @classmethod
    def interval(cls, lo: float, hi: float, count: int) -> "ControlSet":
        pts = np.linspace(lo, hi, count)
        mid = count // 2
        if count % 2 == 1 and abs(lo + hi) < 1e-15:
            pts[mid] = 0.0
        return cls(pts[:, None], "interval", (float(lo), float(hi), int(count)))

    @classmethod
    def finite(cls, points) -> "ControlSet":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[0] == 1 and pts.shape[1] > 1 and np.ndim(points) == 1:
            pts = pts.T
        return cls(pts, "finite", tuple(map(tuple, pts.tolist())))

    @property
    def descriptor(self) -> str:
        if self.kind == "ball":
            r, c, _ = self.params
            return f"ball({r:g}, {c})"
        if self.kind == "interval":
            lo, hi, c = self.params
            return f"interval({lo:g}, {hi:g}, {c})"
        inner = "; ".join(",".join(f"{v:g}" for v in p) for p in self.params)
        return f"finite{{{inner}}}"

    @classmethod
    def parse(cls, text: str, dim: int | None = None) -> "ControlSet":
        text = text.strip()
        m = re.fullmatch(r"ball\(\s*([^,]+),\s*([^,)]+)(?:,\s*([^)]+))?\)", text)
        if m:
            d = int(m.group(3)) if m.group(3) else (dim or 2)
            return cls.ball(float(m.group(1)), int(m.group(2)), dim=d)
        m = re.fullmatch(r"interval\(\s*([^,]+),\s*([^,]+),\s*([^)]+)\)", text)
        if m:
            return cls.interval(float(m.group(1)), float(m.group(2)), int(m.group(3)))
        m = re.fullmatch(r"finite\{(.*)\}", text)
        if m:
            pts = [[float(v) for v in p.split(",")] for p in m.group(1).split(";") if p.strip()]
            return cls.finite(np.array(pts))
        raise ValueError(f"unrecognised control set descriptor {text!r}")

    def contains(self, a, tol: float = 1e-9) -> bool:
        a = np.atleast_1d(np.asarray(a, dtype=float))
        if self.kind == "ball":
            return bool(np.linalg.norm(a) <= self.params[0] + tol)
        if self.kind == "interval":
            lo, hi, _ = self.params
            return bool(lo - tol <= a[0] <= hi + tol)
        return bool(np.min(np.linalg.norm(self.samples - a, axis=1)) <= tol)

    def resampled(self, count: int) -> "ControlSet":
        if self.kind == "ball":
            return ControlSet.ball(self.params[0], count, dim=self.params[2])
        if self.kind == "interval":
            return ControlSet.interval(self.params[0], self.params[1], count)
        return self


# --------------------------------------------------------------------------- pieces
class Velocity(Protocol):
    def __call__(self, X: np.ndarray, A: np.ndarray) -> np.ndarray:  # (N,d),(K,n) -> (N,K,d)
        ...


@dataclass(frozen=True)
class AffineVelocity:
    """f(x, a) = M x + B a + c."""

    state_matrix: np.ndarray
    control_matrix: np.ndarray
    offset: np.ndarray
    family: str = "affine"

    def __call__(self, X, A):
        X = np.atleast_2d(X)
        A = np.atleast_2d(A)
        out = (X @ self.state_matrix.T)[:, None, :] + (A @ self.control_matrix.T)[None, :, :]
        return out + self.offset

    @property
    def is_constant_in_x(self) -> bool:
        return not np.any(self.state_matrix)

    def lipschitz_x(self) -> float:
        return float(np.linalg.norm(self.state_matrix, 2))

    def describe(self) -> dict:
        M, B, c = self.state_matrix, self.control_matrix, self.offset
        if self.family == "constant":
            return {"velocity": "constant", "value": _fmt_vec(c)}
        if self.family == "scaled-ball":
            return {"velocity": "scaled-ball", "scale": f"{B[0, 0]:.17g}"}
        return {
            "velocity": "affine",
            "state_matrix": _fmt_mat(M),
            "control_matrix": _fmt_mat(B),
            "offset": _fmt_vec(c),
        }


def constant_velocity(v, n_controls: int) -> AffineVelocity:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    d = v.size
    return AffineVelocity(np.zeros((d, d)), np.zeros((d, n_controls)), v, "constant")


def scaled_ball_velocity(scale: float, d: int) -> AffineVelocity:
    return AffineVelocity(np.zeros((d, d)), scale * np.eye(d), np.zeros(d), "scaled-ball")


def affine_velocity(state_matrix, control_matrix, offset) -> AffineVelocity:
    M = np.atleast_2d(np.asarray(state_matrix, dtype=float))
    B = np.atleast_2d(np.asarray(control_matrix, dtype=float))
    c = np.atleast_1d(np.asarray(offset, dtype=float))
    return AffineVelocity(M, B, c, "affine")


@dataclass(frozen=True)
class PolynomialCost:
    """l(x, a) = sum_k coeffs[k] * |x|^k (independent of the control)."""

    coeffs: tuple[float, ...] = (0.0,)

    def __call__(self, X, A):
        X = np.atleast_2d(X)
        r = np.linalg.norm(X, axis=1)
        val = np.zeros(X.shape[0])
        for k, c in enumerate(self.coeffs):
            if c:
                val = val + c * r**k
        return np.repeat(val[:, None], np.atleast_2d(A).shape[0], axis=1)

    def describe(self) -> dict:
        if len(self.coeffs) == 1:
            return {"cost": "constant", "cost_value": f"{self.coeffs[0]:.17g}"}
        return {"cost": "polynomial", "cost_coeffs": ", ".join(f"{c:.17g}" for c in self.coeffs)}


@dataclass(frozen=True)
class ShiftedVelocity:
    """base(x, a) + eps * g(x); used for perturbation ladders."""

    base: Callable
    eps: float
    g: Callable

    def __call__(self, X, A):
        X = np.atleast_2d(X)
        return self.base(X, A) + self.eps * np.asarray(self.g(X))[:, None, :]


@dataclass(frozen=True)
class ShiftedCost:
    base: Callable
    eps: float
    h: Callable

    def __call__(self, X, A):
        X = np.atleast_2d(X)
        return self.base(X, A) + self.eps * np.asarray(self.h(X))[:, None]


@dataclass(frozen=True)
class Piece:
    velocity: Callable
    cost: Callable = PolynomialCost((0.0,))


# --------------------------------------------------------------------------- terminal
@dataclass(frozen=True)
class TerminalCost:
    """Terminal cost phi with its regularity mode ("lipschitz" or "lsc")."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    mode: str = "lipschitz"
    params: tuple = ()
    growth: float = 1.0

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(self.func(X), dtype=float)

    def value(self, x) -> float:
        return float(self(np.asarray(x, dtype=float)[None, :])[0])


def terminal_from_name(name: str, params: tuple = (), mode: str | None = None) -> TerminalCost:
    if name == "abs-x1":
        return TerminalCost(name, lambda X: np.abs(X[:, 0]), mode or "lipschitz")
    if name == "linear-x1":
        return TerminalCost(name, lambda X: X[:, 0].copy(), mode or "lipschitz")
    if name == "indicator-positive-x1":
        return TerminalCost(name, lambda X: (X[:, 0] > 0).astype(float), mode or "lsc")
    if name in ("zero", "constant"):
        c = float(params[0]) if params else 0.0
        return TerminalCost("constant", lambda X: np.full(X.shape[0], c), mode or "lipschitz", (c,))
    if name == "table":
        xs = np.array([p[0] for p in params], dtype=float)
        vs = np.array([p[1] for p in params], dtype=float)
        order = np.argsort(xs, kind="stable")
        xs, vs = xs[order], vs[order]
        return TerminalCost(name, lambda X: np.interp(X[:, 0], xs, vs), mode or "lipschitz", tuple(params))
    raise ValueError(f"unknown terminal cost {name!r}")


def shifted_terminal(base: TerminalCost, eps: float, k: Callable) -> TerminalCost:
    return TerminalCost(
        f"{base.name}+perturbation",
        lambda X: base(X) + eps * np.asarray(k(X)),
        base.mode,
        base.params,
        base.growth,
    )


# --------------------------------------------------------------------------- problem
@dataclass(frozen=True)
class ControlProblem:
    strat: Stratification
    controls: ControlSet
    pieces: dict
    terminal: TerminalCost
    c_f: float = 1.0
    c_l: float = 1.0
    lambda_l: float = 1.0
    lambda_phi: float = 1.0
    horizon: float = 1.0
    name: str = "custom"
    eps_tan: float = EPS_TAN
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.c_f <= 0 or self.c_l <= 0:
            raise ValueError("growth constants c_f and c_l must be positive")
        if self.lambda_l < 1 or self.lambda_phi < 1:
            raise ValueError("growth exponents must be >= 1")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")

    @property
    def d(self) -> int:
        return self.strat.d

    @property
    def lam(self) -> float:
        return max(self.lambda_l, self.lambda_phi)

    def piece(self, sid: int) -> Piece:
        try:
            return self.pieces[sid]
        except KeyError:
            raise StratumPieceMissing(f"no piece registered for stratum {sid}") from None

    def velocities(self, sid: int, X, check: bool = False) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        V = np.asarray(self.piece(sid).velocity(X, self.controls.samples), dtype=float)
        if check:
            bound = self.c_f * (1.0 + np.linalg.norm(X, axis=1))
            worst = np.max(np.linalg.norm(V, axis=2), axis=1)
            if np.any(worst > GROWTH_SLACK * bound + 1e-12):
                raise GrowthViolation(
                    f"velocity bound c_f(1+|x|) exceeded on stratum {sid} (max ratio "
                    f"{float(np.max(worst / bound)):.4f})"
                )
        return V

    def costs(self, sid: int, X, check: bool = False) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        L = np.asarray(self.piece(sid).cost(X, self.controls.samples), dtype=float)
        if check:
            bound = self.cost_bound(X)
            if np.any(L > GROWTH_SLACK * bound[:, None] + 1e-12):
                raise GrowthViolation(f"running cost bound exceeded on stratum {sid}")
        return L

    def cost_bound(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return self.c_l * (1.0 + np.linalg.norm(X, axis=1) ** self.lambda_l)

    def max_speed(self, box: tuple[float, float]) -> float:
        """Largest sampled speed over the box corners and centre (affine pieces)."""
        lo, hi = box
        corners = np.array(np.meshgrid(*[[lo, 0.5 * (lo + hi), hi]] * self.d)).reshape(self.d, -1).T
        best = 0.0
        for sid in self.pieces:
            V = self.velocities(sid, corners)
            best = max(best, float(np.max(np.abs(V))))
        return best

    def replace(self, **kw) -> "ControlProblem":
        return replace(self, **kw)


def assign_pieces(strat: Stratification, rule: Callable) -> dict:
    """Build the per-stratum piece map by calling `rule(stratum)`."""
    return {s.id: rule(s) for s in strat.strata}


# --------------------------------------------------------------------------- evaluations
def _control_vector(P: ControlProblem, a) -> np.ndarray:
    if isinstance(a, (int, np.integer)):
        return P.controls.samples[int(a)]
    return np.atleast_1d(np.asarray(a, dtype=float))


def eval_f(P: ControlProblem, sid: int, x, a) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    av = _control_vector(P, a)
    v = np.asarray(P.piece(sid).velocity(x[None, :], av[None, :]), dtype=float)[0, 0]
    if np.linalg.norm(v) > GROWTH_SLACK * P.c_f * (1.0 + np.linalg.norm(x)) + 1e-12:
        raise GrowthViolation(f"|f| = {np.linalg.norm(v):.6g} exceeds c_f(1+|x|)")
    return v


def eval_l(P: ControlProblem, sid: int, x, a) -> float:
    x = np.asarray(x, dtype=float)
    av = _control_vector(P, a)
    val = float(np.asarray(P.piece(sid).cost(x[None, :], av[None, :]))[0, 0])
    if val > GROWTH_SLACK * float(P.cost_bound(x)[0]) + 1e-12:
        raise GrowthViolation(f"l = {val:.6g} exceeds c_l(1+|x|^lambda_l)")
    return val


def eval_b(P: ControlProblem, sid: int, x, a) -> float:
    b = float(P.cost_bound(np.asarray(x, dtype=float))[0]) - eval_l(P, sid, x, a)
    return max(b, 0.0) if b >= -1e-9 else b


def slack_bounds(P: ControlProblem, sid: int, X) -> tuple[np.ndarray, int]:
    """b(x, a) on a batch of points, clamped at zero; returns (values, clamp count)."""
    X = np.atleast_2d(X)
    B = P.cost_bound(X)[:, None] - P.costs(sid, X)
    clamps = int(np.count_nonzero((B < 0) & (B >= -1e-9)))
    if np.count_nonzero(B < -1e-9) or clamps > 1e-3 * B.size:
        raise GrowthViolation(f"running cost exceeds its growth bound on stratum {sid}")
    return np.maximum(B, 0.0), clamps


def is_tangent(cone, V, eps: float = EPS_TAN) -> np.ndarray:
    V = np.atleast_2d(V)
    return np.asarray(cone.distance(V)) <= eps * (1.0 + np.linalg.norm(V, axis=-1))


def tangential_controls(P: ControlProblem, x) -> list[int]:
    """Controls whose velocity (own stratum piece) is tangent to the stratum of x."""
    x = np.asarray(x, dtype=float)
    sid = P.strat.locate(x)
    V = P.velocities(sid, x)[0]
    if P.strat[sid].kind == CELL:
        return list(range(len(P.controls)))
    cone = P.strat.tangent_cone(sid, x)
    return [int(k) for k in np.flatnonzero(is_tangent(cone, V, P.eps_tan))]


@dataclass
class ControlFeasibility:
    x: np.ndarray
    stratum: int
    essential: dict
    tangential: list
    tolerance: float

    @property
    def all_essential(self) -> list[int]:
        return sorted({a for idx in self.essential.values() for a in idx})

    def pairs(self) -> list[tuple[int, int]]:
        """(admitting stratum, control index) pairs."""
        return [(sid, a) for sid in sorted(self.essential) for a in self.essential[sid]]


def essential_controls(P: ControlProblem, x) -> ControlFeasibility:
    x = np.asarray(x, dtype=float)
    own = P.strat.locate(x)
    essential = {}
    for sid in P.strat.star(own):
        V = P.velocities(sid, x)[0]
        cone = P.strat.tangent_cone(own, x, closure_of=sid)
        essential[sid] = [int(k) for k in np.flatnonzero(is_tangent(cone, V, P.eps_tan))]
    tangential = list(essential[own]) if P.strat[own].kind != CELL else list(range(len(P.controls)))
    return ControlFeasibility(x, own, essential, tangential, P.eps_tan)


def essential_velocities(P: ControlProblem, x) -> tuple[np.ndarray, np.ndarray, list]:
    """Velocities and costs of every essential (stratum, control) pair at x."""
    x = np.asarray(x, dtype=float)
    feas = essential_controls(P, x)
    vs, ls, pairs = [], [], feas.pairs()
    for sid, a in pairs:
        vs.append(P.velocities(sid, x)[0, a])
        ls.append(P.costs(sid, x)[0, a])
    if not pairs:
        return np.zeros((0, P.d)), np.zeros(0), pairs
    return np.array(vs), np.array(ls), pairs


@dataclass(frozen=True)
class AugmentedVelocity:
    v: np.ndarray
    w: float
    r: float
    stratum: int = -1
    control: int = -1


def augmented_essential(P: ControlProblem, x) -> list[AugmentedVelocity]:
    x = np.asarray(x, dtype=float)
    bound = float(P.cost_bound(x)[0])
    out = []
    V, L, pairs = essential_velocities(P, x)
    for (sid, a), v, ell in zip(pairs, V, L):
        b = max(bound - ell, 0.0)
        out.append(AugmentedVelocity(v, -ell, 0.0, sid, a))
        out.append(AugmentedVelocity(v, -ell - b, b, sid, a))
    return out


# --------------------------------------------------------------------------- tangentialization
class _Infeasible:
    def __repr__(self):
        return "Infeasible"

    def __bool__(self):
        return False


Infeasible = _Infeasible()


@dataclass(frozen=True)
class Tangentialized:
    velocity: np.ndarray
    cost_rate: float
    partner: int
    weight_a: float
    weight_b: float


def tangentialize_control(P: ControlProblem, x, a: int):
    """Mix a normal-moving control with an opposite one into a tangential velocity.

    Returns the convex combination gamma/(beta+gamma) * (f(a), -l(a)) +
    beta/(beta+gamma) * (f(b), -l(b)) whose normal component vanishes.
    """
    x = np.asarray(x, dtype=float)
    sid = P.strat.locate(x)
    st = P.strat[sid]
    if st.dim != P.d - 1:
        raise NotOnInterface(f"point lies on a stratum of dimension {st.dim}, expected {P.d - 1}")
    axis = st.fixed[0][0]
    V = P.velocities(sid, x)[0]
    L = P.costs(sid, x)[0]
    va, la = V[a], L[a]
    na = va[axis]
    scale = P.eps_tan * (1.0 + np.linalg.norm(va))
    if abs(na) <= scale:
        return Tangentialized(va.copy(), -la, a, 1.0, 0.0)
    beta = abs(na)
    normal = V[:, axis]
    opposite = np.flatnonzero(np.sign(normal) == -np.sign(na))
    opposite = opposite[np.abs(normal[opposite]) > P.eps_tan * (1.0 + np.linalg.norm(V[opposite], axis=1))]
    if opposite.size == 0:
        return Infeasible
    tang = np.linalg.norm(np.delete(V[opposite], axis, axis=1), axis=1)
    # prefer the most purely-normal partner, then the strongest one
    order = np.lexsort((-np.abs(normal[opposite]), np.round(tang, 12)))
    b = int(opposite[order[0]])
    gamma = abs(normal[b])
    wa, wb = gamma / (beta + gamma), beta / (beta + gamma)
    v = wa * va + wb * V[b]
    v[axis] = 0.0
    return Tangentialized(v, -(wa * la + wb * L[b]), b, wa, wb)


# --------------------------------------------------------------------------- controllability
def inscribed_radius(points: np.ndarray) -> float:
    """Radius of the largest origin-centred ball inside the convex hull of points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k = pts.shape[1]
    if pts.shape[0] == 0:
        return 0.0
    if k == 0:
        return math.inf
    if k == 1:
        lo, hi = pts[:, 0].min(), pts[:, 0].max()
        return float(max(0.0, min(-lo, hi)))
    centred = pts - pts.mean(axis=0)
    if np.linalg.matrix_rank(centred, tol=1e-10) < k:
        return 0.0
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return 0.0
    # inside points satisfy normal.x + offset <= 0
    return float(max(0.0, np.min(-hull.equations[:, -1])))


@dataclass
class StratumControllability:
    stratum: int
    kind: str
    ball_radius: float
    tangential_radius: float
    normal_radius: float
    tangential_empty: bool
    tangential_nonempty_somewhere: bool
    verdict: str

    def to_dict(self) -> dict:
        return {
            "stratum": self.stratum,
            "kind": self.kind,
            "ball_radius": _jsonable(self.ball_radius),
            "tangential_radius": _jsonable(self.tangential_radius),
            "normal_radius": _jsonable(self.normal_radius),
            "tangential_empty": self.tangential_empty,
            "verdict": self.verdict,
        }


@dataclass
class ControllabilityReport:
    mode: str
    strata: list
    holds: bool
    radius: float

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "holds": self.holds,
            "radius": _jsonable(self.radius),
            "strata": [s.to_dict() for s in self.strata],
        }


def check_controllability(
    P: ControlProblem,
    mode: str = "H2",
    sample_count: int = 16,
    box: tuple[float, float] = (-2.0, 2.0),
    seed: int = 0,
    radius_tol: float = 1e-9,
) -> ControllabilityReport:
    """Estimate the controllability radii on every interface stratum.

    Ball radii are measured on the hull of the essential velocities (the
    velocities trajectories can actually use at x).  `mode` is "H2", "H3",
    "P1" (tangential ball) or "P2" (normal ball).
    """
    mode = mode.upper()
    rng = np.random.default_rng(seed)
    out = []
    for st in P.strat.interfaces():
        X = P.strat.sample_points(st.id, sample_count, box, rng)
        ball, tan_r, nor_r = math.inf, math.inf, math.inf
        empties = 0
        zero_axes = sorted({ax for ax, _ in st.fixed})
        free_axes = [k for k in range(P.d) if k not in zero_axes]
        for x in X:
            V, _, pairs = essential_velocities(P, x)
            ball = min(ball, inscribed_radius(V))
            own_tan = [a for s, a in pairs if s == st.id]
            if not own_tan:
                empties += 1
            in_t = np.all(np.abs(V[:, zero_axes]) <= P.eps_tan * (1 + np.linalg.norm(V, axis=1))[:, None], axis=1)
            in_n = (
                np.all(np.abs(V[:, free_axes]) <= P.eps_tan * (1 + np.linalg.norm(V, axis=1))[:, None], axis=1)
                if free_axes
                else np.ones(len(V), bool)
            )
            if free_axes:
                tan_r = min(tan_r, inscribed_radius(V[in_t][:, free_axes]) if in_t.any() else 0.0)
            else:
                tan_r = min(tan_r, math.inf if in_t.any() else 0.0)
            nor_r = min(nor_r, inscribed_radius(V[in_n][:, zero_axes]) if in_n.any() else 0.0)
        all_empty = empties == len(X)
        if mode == "H2":
            verdict = f"BallRadius({ball:.6g})" if ball > radius_tol else "Violated"
        elif mode == "H3":
            if all_empty:
                verdict = "EmptyTangential"
            elif ball > radius_tol:
                verdict = f"BallRadius({ball:.6g})"
            else:
                verdict = "Violated"
        elif mode == "P1":
            verdict = f"TangentialRadius({tan_r:.6g})" if tan_r > radius_tol else "Violated"
        elif mode == "P2":
            verdict = f"NormalRadius({nor_r:.6g})" if nor_r > radius_tol else "Violated"
        else:
            raise ValueError(f"unknown controllability mode {mode!r}")
        out.append(StratumControllability(st.id, st.kind, ball, tan_r, nor_r, all_empty, empties < len(X), verdict))
    holds = all(s.verdict != "Violated" for s in out)
    if mode in ("H2", "H3"):
        radius = min((s.ball_radius for s in out), default=math.inf)
    elif mode == "P1":
        radius = min((s.tangential_radius for s in out), default=math.inf)
    else:
        radius = min((s.normal_radius for s in out), default=math.inf)
    return ControllabilityReport(mode, out, holds, radius)


# --------------------------------------------------------------------------- membership
def piece_contains_velocity(P: ControlProblem, sid: int, x, v, tol: float = 1e-6) -> bool:
    """Is v in the (non-discretised) velocity set of the stratum piece at x?"""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    vel = P.piece(sid).velocity
    if isinstance(vel, AffineVelocity):
        rhs = v - vel.state_matrix @ x - vel.offset
        B = vel.control_matrix
        if not np.any(B):
            return bool(np.linalg.norm(rhs) <= tol)
        a, *_ = np.linalg.lstsq(B, rhs, rcond=None)
        if np.linalg.norm(B @ a - rhs) <= tol and P.controls.contains(a, tol):
            return True
    V = P.velocities(sid, x)[0]
    return bool(np.min(np.linalg.norm(V - v, axis=1)) <= tol)


def _fmt_vec(v) -> str:
    return ", ".join(f"{x:.17g}" for x in np.atleast_1d(v))


def _fmt_mat(M) -> str:
    return "; ".join(_fmt_vec(r) for r in np.atleast_2d(M))


def _jsonable(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)
