"""Trajectories of the switching system, crossing detection, sliding, and
brute-force value oracles.

The integrator is RK4 on the augmented state (y, eta) with eta' = -l.
Inside a stratum closure it uses that stratum's piece.  At an interface the
next piece is chosen from the control's velocity:

* if the interface's own velocity is tangential, the trajectory slides and is
  re-projected onto the interface after each step;
* otherwise it enters the adjacent stratum whose piece strictly points into
  its closure, preferring the side the interface velocity points to.

A control that pushes into the interface from both sides with no tangential
option has no constructive continuation here and raises ZenoCapExceeded.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .control import AffineVelocity, ControlProblem, Piece, PolynomialCost, essential_controls
from .errors import BudgetExceeded, EmptyTangentialSet, ZenoCapExceeded
from .stratification import CELL

MAX_CROSSINGS = 10_000
ORACLE_BUDGET = 10_000_000


# --------------------------------------------------------------------------- data
@dataclass(frozen=True)
class PiecewiseControl:
    breakpoints: tuple
    controls: tuple

    def __post_init__(self):
        b = tuple(float(t) for t in self.breakpoints)
        c = tuple(int(a) for a in self.controls)
        if len(b) != len(c) + 1 or not c:
            raise ValueError("need len(breakpoints) == len(controls) + 1 >= 2")
        if any(t1 <= t0 for t0, t1 in zip(b, b[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "controls", c)

    @classmethod
    def constant(cls, t0: float, t1: float, a: int) -> "PiecewiseControl":
        return cls((t0, t1), (a,))

    @classmethod
    def equispaced(cls, t0: float, t1: float, seq) -> "PiecewiseControl":
        seq = list(seq)
        return cls(tuple(np.linspace(t0, t1, len(seq) + 1)), tuple(seq))

    @property
    def start(self) -> float:
        return self.breakpoints[0]

    @property
    def end(self) -> float:
        return self.breakpoints[-1]

    def segment(self, s: float) -> int:
        scale = 1e-12 * max(1.0, abs(s))
        k = bisect.bisect_right(self.breakpoints, s + scale) - 1
        return min(max(k, 0), len(self.controls) - 1)

    def at(self, s: float) -> int:
        return self.controls[self.segment(s)]


@dataclass(frozen=True)
class CrossingEvent:
    time: float
    from_stratum: int
    to_stratum: int


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    eta: np.ndarray
    strata: np.ndarray
    events: list = field(default_factory=list)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_eta(self) -> float:
        return float(self.eta[-1])

    @property
    def running_cost(self) -> float:
        return float(self.eta[0] - self.eta[-1])

    def payoff(self, P: ControlProblem) -> float:
        return P.terminal.value(self.final_state) + self.running_cost

    def within_growth_bound(self, c_f: float, slack: float = 0.01) -> bool:
        """|y(s)| <= (1 + |y(t0)|) exp(c_f |s - t0|) - 1, with relative slack."""
        r0 = np.linalg.norm(self.states[0])
        bound = (1 + r0) * np.exp(c_f * np.abs(self.times - self.times[0])) - 1
        return bool(np.all(np.linalg.norm(self.states, axis=1) <= bound * (1 + slack) + 1e-12))


# --------------------------------------------------------------------------- integrator
@dataclass(frozen=True)
class NegatedVelocity:
    base: object

    def __call__(self, X, A):
        return -self.base(X, A)


def reversed_problem(P: ControlProblem) -> ControlProblem:
    """Same problem with every velocity negated (time reversal)."""
    pieces = {k: Piece(NegatedVelocity(p.velocity), p.cost) for k, p in P.pieces.items()}
    return P.replace(pieces=pieces, name=f"{P.name}-reversed")


class Integrator:
    def __init__(self, P: ControlProblem, max_crossings: int = MAX_CROSSINGS):
        self.P = P
        self.S = P.strat
        self.max_crossings = max_crossings
        self._plane_axis = np.array([h.axis for h in self.S.hyperplanes], dtype=int)
        self._plane_off = np.array([h.offset for h in self.S.hyperplanes], dtype=float)
        self._frozen = {
            sid: isinstance(p.velocity, AffineVelocity) and p.velocity.is_constant_in_x
            and isinstance(p.cost, PolynomialCost) and len(p.cost.coeffs) == 1
            for sid, p in P.pieces.items()
        }

    # augmented right-hand side with a fixed piece and control vector
    def _rhs(self, sid: int, y: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, float]:
        piece = self.P.pieces[sid]
        v = np.asarray(piece.velocity(y[None, :], a[None, :]), dtype=float)[0, 0]
        ell = float(np.asarray(piece.cost(y[None, :], a[None, :]))[0, 0])
        return v, -ell

    def _rk4(self, sid, y, eta, a, h, slide):
        k1, w1 = self._rhs(sid, y, a)
        if self._frozen[sid]:
            return self._proj(y + h * k1, slide), eta + h * w1
        k2, w2 = self._rhs(sid, self._proj(y + 0.5 * h * k1, slide), a)
        k3, w3 = self._rhs(sid, self._proj(y + 0.5 * h * k2, slide), a)
        k4, w4 = self._rhs(sid, self._proj(y + h * k3, slide), a)
        y1 = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        eta1 = eta + h / 6.0 * (w1 + 2 * w2 + 2 * w3 + w4)
        return self._proj(y1, slide), eta1

    def _proj(self, y, slide):
        if slide is None:
            return y
        y = y.copy()
        for ax, off in self.S[slide].fixed:
            y[ax] = off
        return y

    def _outside(self, sid: int, y: np.ndarray) -> np.ndarray:
        """Planes on which y is strictly on the wrong side for the closure of sid."""
        sig = np.array(self.S[sid].signature, dtype=int)
        if sig.size == 0:
            return np.zeros(0, dtype=bool)
        ysig = self.S.signatures(y[None, :])[0]
        return (sig != 0) & (ysig != sig) & (ysig != 0)

    def choose_piece(self, sid: int, y: np.ndarray, a: np.ndarray) -> tuple[int, int | None]:
        """(piece stratum, sliding stratum or None) for control vector a at y in stratum sid."""
        st = self.S[sid]
        if st.kind == CELL:
            return sid, None
        eps = self.P.eps_tan
        v_own, _ = self._rhs(sid, y, a)
        cone = self.S.tangent_cone(sid, y)
        if cone.distance(v_own) <= eps * (1 + np.linalg.norm(v_own)):
            return sid, sid
        zero_planes = [j for j, s in enumerate(st.signature) if s == 0]
        candidates = []
        for M in self.S.star(sid):
            if M == sid:
                continue
            vM, _ = self._rhs(M, y, a)
            tol = eps * (1 + np.linalg.norm(vM))
            sigM = self.S[M].signature
            ok = True
            for j in zero_planes:
                comp = vM[self._plane_axis[j]]
                if sigM[j] == 0:
                    ok = abs(comp) <= tol
                else:
                    ok = sigM[j] * comp > tol
                if not ok:
                    break
            if ok:
                agree = sum(
                    1
                    for j in zero_planes
                    if sigM[j] != 0 and np.sign(v_own[self._plane_axis[j]]) == sigM[j]
                )
                candidates.append((-agree, -self.S[M].dim, M))
        if not candidates:
            raise ZenoCapExceeded(
                f"control {a.tolist()} pushes into stratum {sid} from every side with no "
                "tangential velocity (chattering)"
            )
        M = min(candidates)[2]
        return M, (None if self.S[M].kind == CELL else M)

    def advance(self, ctrl: PiecewiseControl, s: float, y: np.ndarray, eta: float, t1: float,
                dt: float, record: bool = False):
        """Integrate from (s, y, eta) to t1.  Returns (y, eta, trajectory-or-None)."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        samples = self.P.controls.samples
        y = self.S.snap_point(np.asarray(y, dtype=float))
        times, states, ctrls, etas, strata, events = [s], [y.copy()], [], [eta], [], []
        piece_prev = None
        n_events = 0
        end_tol = 1e-12 * max(1.0, abs(t1))
        while s < t1 - end_tol:
            seg = ctrl.segment(s)
            k = ctrl.controls[seg]
            a = samples[k]
            sid = self.S.locate(y)
            piece, slide = self.choose_piece(sid, y, a)
            if piece_prev is not None and piece != piece_prev:
                n_events += 1
                if n_events > self.max_crossings:
                    raise ZenoCapExceeded(f"more than {self.max_crossings} crossings")
                if record:
                    events.append(CrossingEvent(s, piece_prev, piece))
            piece_prev = piece
            stop = min(t1, ctrl.breakpoints[seg + 1])
            h = min(dt, stop - s)
            if stop - (s + h) < end_tol:
                h = stop - s
            y1, eta1 = self._rk4(piece, y, eta, a, h, slide)
            out = self._outside(piece, y1)
            if out.any():
                lo, hi = 0.0, h
                rel = 1e-10 * max(h, 1e-300)
                while hi - lo > rel:
                    mid = 0.5 * (lo + hi)
                    ym, _ = self._rk4(piece, y, eta, a, mid, slide)
                    if self._outside(piece, ym).any():
                        hi = mid
                    else:
                        lo = mid
                y1, eta1 = self._rk4(piece, y, eta, a, hi, slide)
                crossed = self._outside(piece, y1) | (self.S.signatures(y1[None, :])[0] == 0)
                sig = self.S[piece].signature
                for j in np.flatnonzero(crossed):
                    if sig[j] != 0:
                        y1[self._plane_axis[j]] = self._plane_off[j]
                h = hi
            y = self.S.snap_point(y1)
            eta = eta1
            s = s + h
            if record:
                times.append(s)
                states.append(y.copy())
                ctrls.append(k)
                etas.append(eta)
                strata.append(piece)
        if not record:
            return y, eta, None
        ctrls.append(ctrls[-1] if ctrls else ctrl.controls[-1])
        strata.append(strata[-1] if strata else self.S.locate(y))
        traj = Trajectory(
            np.array(times), np.array(states), np.array(ctrls, dtype=int), np.array(etas),
            np.array(strata, dtype=int), events,
        )
        return y, eta, traj


def integrate(P: ControlProblem, t0: float, x0, ctrl: PiecewiseControl, dt: float,
              t1: float | None = None, max_crossings: int = MAX_CROSSINGS) -> Trajectory:
    """Integrate the controlled system forward from (t0, x0) to t1 (default: end of ctrl)."""
    t1 = ctrl.end if t1 is None else t1
    _, _, traj = Integrator(P, max_crossings).advance(ctrl, t0, np.asarray(x0, float), 0.0, t1, dt, record=True)
    return traj


def integrate_backward(P: ControlProblem, t: float, x, ctrl: PiecewiseControl, dt: float,
                       h: float, max_crossings: int = MAX_CROSSINGS) -> Trajectory:
    """Trajectory on [t - h, t] ending at x, driven by ctrl (given in forward time).

    Returned in forward time order with eta(t - h) = 0.
    """
    rev_bp = tuple(sorted(t - b for b in ctrl.breakpoints))
    rev_ctrl = PiecewiseControl(rev_bp, tuple(reversed(ctrl.controls)))
    R = reversed_problem(P)
    _, _, tr = Integrator(R, max_crossings).advance(rev_ctrl, 0.0, np.asarray(x, float), 0.0, h, dt, record=True)
    times = t - tr.times[::-1]
    eta = tr.eta[-1] - tr.eta[::-1]
    events = [CrossingEvent(t - e.time, e.to_stratum, e.from_stratum) for e in reversed(tr.events)]
    return Trajectory(times, tr.states[::-1].copy(), tr.controls[::-1].copy(), eta, tr.strata[::-1].copy(), events)


# --------------------------------------------------------------------------- oracle
@dataclass(frozen=True)
class OracleResult:
    value: float
    schedule: tuple
    breakpoints: tuple
    evaluations: int


def oracle_search(P: ControlProblem, t0: float, x0, depth: int, n_time_slices: int = 4,
                  budget: int = ORACLE_BUDGET) -> OracleResult:
    """Exhaustive minimum of phi(y(T)) + int l over `depth` equispaced constant pieces."""
    if depth < 1 or n_time_slices < 1:
        raise ValueError("depth and n_time_slices must be >= 1")
    K = len(P.controls)
    cost = sum(K**k for k in range(1, depth + 1)) * n_time_slices
    if cost > budget:
        raise BudgetExceeded(f"estimated {cost} evaluations exceeds budget {budget}")
    T = P.horizon
    edges = np.linspace(t0, T, depth + 1)
    integ = Integrator(P)
    best = [math.inf, ()]
    count = [0]

    def search(level, y, eta, prefix):
        if level == depth:
            val = P.terminal.value(y) - eta
            if val < best[0]:
                best[0], best[1] = val, tuple(prefix)
            return
        a0, a1 = edges[level], edges[level + 1]
        dt = (a1 - a0) / n_time_slices
        for k in range(K):
            count[0] += n_time_slices
            try:
                y1, eta1, _ = integ.advance(PiecewiseControl.constant(a0, a1, k), a0, y, eta, a1, dt)
            except ZenoCapExceeded:
                continue
            search(level + 1, y1, eta1, prefix + [k])

    search(0, np.asarray(x0, float), 0.0, [])
    return OracleResult(best[0], best[1], tuple(edges), count[0])


def oracle_value(P: ControlProblem, t0: float, x0, depth: int, n_time_slices: int = 4,
                 budget: int = ORACLE_BUDGET) -> float:
    return oracle_search(P, t0, x0, depth, n_time_slices, budget).value


# --------------------------------------------------------------------------- reachability
def _random_controls(rng, t0, t1, pool, max_pieces=3):
    m = int(rng.integers(1, max_pieces + 1))
    cuts = np.sort(rng.uniform(t0, t1, m - 1))
    bps = np.concatenate([[t0], cuts, [t1]])
    keep = np.concatenate([[True], np.diff(bps) > 1e-12 * max(1.0, t1)])
    bps = bps[keep]
    return PiecewiseControl(tuple(bps), tuple(int(rng.choice(pool)) for _ in range(len(bps) - 1)))


def reachable_samples(P: ControlProblem, x, t: float, n_controls: int, seed: int = 0,
                      steps: int = 8) -> np.ndarray:
    rng = np.random.default_rng(seed)
    integ = Integrator(P)
    pool = np.arange(len(P.controls))
    out = []
    for _ in range(n_controls):
        ctrl = _random_controls(rng, 0.0, t, pool)
        try:
            y, _, _ = integ.advance(ctrl, 0.0, np.asarray(x, float), 0.0, t, t / steps)
        except ZenoCapExceeded:
            continue
        out.append(y)
    return np.array(out).reshape(-1, P.d)


def reachable_tangential_samples(P: ControlProblem, interface_id: int, x, t: float, n_controls: int,
                                 seed: int = 0, steps: int = 8) -> np.ndarray:
    """Endpoints of sliding trajectories driven only by tangential controls at x."""
    x = np.asarray(x, float)
    pool = essential_controls(P, x).essential.get(interface_id, [])
    if P.strat.locate(x) != interface_id or not pool:
        return np.zeros((0, P.d))
    rng = np.random.default_rng(seed)
    integ = Integrator(P)
    out = []
    for _ in range(n_controls):
        ctrl = _random_controls(rng, 0.0, t, pool)
        try:
            y, _, _ = integ.advance(ctrl, 0.0, x, 0.0, t, t / steps)
        except ZenoCapExceeded:
            continue
        out.append(y)
    return np.array(out).reshape(-1, P.d)


def _tangential_paths(P: ControlProblem, interface_id: int, x, horizon: float, n_controls: int, seed: int,
                      steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Recorded (times, states) of tangential trajectories from x over [0, horizon]."""
    pool = essential_controls(P, x).essential.get(interface_id, [])
    if P.strat.locate(x) != interface_id or not pool or horizon <= 0:
        return np.zeros(1), x[None, :]
    rng = np.random.default_rng(seed)
    integ = Integrator(P)
    ctrls = [PiecewiseControl.constant(0.0, horizon, a) for a in pool]
    ctrls += [_random_controls(rng, 0.0, horizon, pool) for _ in range(n_controls)]
    times, states = [np.zeros(1)], [x[None, :]]
    for ctrl in ctrls:
        try:
            _, _, tr = integ.advance(ctrl, 0.0, x, 0.0, horizon, horizon / steps, record=True)
        except ZenoCapExceeded:
            continue
        times.append(tr.times)
        states.append(tr.states)
    return np.concatenate(times), np.vstack(states)


def fit_tangential_delay(P: ControlProblem, interface_id: int, x, t: float, n_controls: int = 16,
                         seed: int = 0, delta_max: float = 10.0, tol: float | None = None,
                         steps: int = 512) -> float:
    """Smallest delay factor D such that every endpoint reached in time t that
    lands on the interface closure lies within tol of a tangential trajectory
    run for at most D * t.

    Returns inf when no factor up to delta_max works.
    """
    x = np.asarray(x, float)
    ends = reachable_samples(P, x, t, 64, seed)
    S = P.strat
    on = np.array([S.point_in_closure(interface_id, e) for e in ends], dtype=bool) if len(ends) else np.zeros(0, bool)
    landing = ends[on]
    if landing.shape[0] == 0:
        return 0.0
    R_t, R = _tangential_paths(P, interface_id, x, delta_max * t, n_controls, seed + 1, steps)
    speed = P.c_f * (1.0 + np.linalg.norm(x) + P.c_f * delta_max * t)
    # recorded paths are polylines with this step length
    tol = tol if tol is not None else 1e-6 + speed * delta_max * t / steps
    dist = np.linalg.norm(landing[:, None, :] - R[None, :, :], axis=2)

    def matched(D):
        near = dist[:, R_t <= D * t + 1e-12]
        return bool(np.all(near.min(axis=1) <= tol))

    if not matched(delta_max):
        return math.inf
    lo, hi = 0.0, delta_max
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if matched(mid):
            hi = mid
        else:
            lo = mid
    return hi


# --------------------------------------------------------------------------- Filippov tracking
def _tangential_set(P: ControlProblem, interface_id: int, y: np.ndarray):
    """Sampled augmented tangential set at y: velocities, costs, slack bounds.

    The admissible controls are those tangential at the projection of y onto
    the interface; the interface piece is evaluated at y itself.
    """
    z = P.strat.project_to_stratum(interface_id, y)
    idx = essential_controls(P, z).essential.get(interface_id, [])
    if not idx:
        raise EmptyTangentialSet(f"no tangential control on stratum {interface_id} at {z.tolist()}")
    V = P.velocities(interface_id, y)[0, idx]
    L = P.costs(interface_id, y)[0, idx]
    B = np.maximum(P.cost_bound(y)[0] - L, 0.0)
    return np.asarray(idx), V, L, B


def _dist_to_set(q_v, q_w, V, L, B):
    """Distances from (q_v, q_w) to each {V_k} x [-L_k - B_k, -L_k]; plus the nearest w."""
    w = np.clip(q_w, -L - B, -L)
    d = np.sqrt(np.sum((V - q_v) ** 2, axis=1) + (w - q_w) ** 2)
    return d, w


def _hausdorff(Va, La, Ba, Vb, Lb, Bb, n_w: int = 9) -> float:
    s = np.linspace(0.0, 1.0, n_w)

    def cloud(V, L, B):
        W = -L[:, None] - s[None, :] * B[:, None]
        return np.column_stack([np.repeat(V, n_w, axis=0), W.ravel()])

    A, Bc = cloud(Va, La, Ba), cloud(Vb, Lb, Bb)

    def directed(X, V, L, Bnd):
        out = 0.0
        for p in X:
            d, _ = _dist_to_set(p[:-1], p[-1], V, L, Bnd)
            out = max(out, float(d.min()))
        return out

    return max(directed(A, Vb, Lb, Bb), directed(Bc, Va, La, Ba))


def estimate_tangential_lipschitz(P: ControlProblem, interface_id: int, pairs) -> float:
    """Largest sampled Hausdorff quotient of the tangential augmented set."""
    best = 0.0
    for y, z in pairs:
        gap = float(np.linalg.norm(np.asarray(y) - np.asarray(z)))
        if gap <= 1e-14:
            continue
        _, Va, La, Ba = _tangential_set(P, interface_id, np.asarray(y, float))
        _, Vb, Lb, Bb = _tangential_set(P, interface_id, np.asarray(z, float))
        best = max(best, _hausdorff(Va, La, Ba, Vb, Lb, Bb) / gap)
    return best


@dataclass
class FilippovResult:
    trajectory: Trajectory
    gaps: np.ndarray
    bounds: np.ndarray
    deviation: float
    lipschitz: float

    @property
    def violated(self) -> bool:
        return bool(np.any(self.gaps > self.bounds * (1 + 1e-9) + 1e-12))


def filippov_project(P: ControlProblem, interface_id: int, ref: Trajectory,
                     lipschitz: float | None = None) -> FilippovResult:
    """Track a reference path near an interface with tangential controls only.

    Greedy per step: pick the tangential sample nearest (in augmented space) to
    the reference finite-difference derivative.  Certified bound on the
    augmented gap: exp(L (t - a)) * (|z(a) - y(a)| + int dist).
    """
    S = P.strat
    times = np.asarray(ref.times, float)
    Y = np.asarray(ref.states, float)
    E = np.asarray(ref.eta, float)
    n = len(times)
    z = S.project_to_stratum(interface_id, Y[0])
    zeta = float(E[0])
    Z, ZE, ctrls = [z.copy()], [zeta], []
    dists = np.zeros(max(n - 1, 0))
    pairs = []
    for i in range(n - 1):
        dt = times[i + 1] - times[i]
        qv = (Y[i + 1] - Y[i]) / dt
        qw = (E[i + 1] - E[i]) / dt
        _, Vy, Ly, By = _tangential_set(P, interface_id, Y[i])
        dy, _ = _dist_to_set(qv, qw, Vy, Ly, By)
        dists[i] = dy.min()
        idx, Vz, Lz, Bz = _tangential_set(P, interface_id, z)
        dz, wz = _dist_to_set(qv, qw, Vz, Lz, Bz)
        k = int(np.argmin(dz))
        pairs.append((Y[i], z.copy()))
        z = S.project_to_stratum(interface_id, z + dt * Vz[k])
        zeta = zeta + dt * wz[k]
        Z.append(z.copy())
        ZE.append(zeta)
        ctrls.append(int(idx[k]))
    L_G = estimate_tangential_lipschitz(P, interface_id, pairs) if lipschitz is None else float(lipschitz)
    Z = np.array(Z)
    ZE = np.array(ZE)
    gaps = np.sqrt(np.sum((Z - Y) ** 2, axis=1) + (ZE - E) ** 2)
    integral = np.concatenate([[0.0], np.cumsum(dists * np.diff(times))])
    bounds = np.exp(L_G * (times - times[0])) * (gaps[0] + integral)
    ctrls.append(ctrls[-1] if ctrls else -1)
    traj = Trajectory(times.copy(), Z, np.array(ctrls, dtype=int), ZE, np.full(n, interface_id), [])
    return FilippovResult(traj, gaps, bounds, float(integral[-1]), L_G)


# --------------------------------------------------------------------------- DPP checks
def _forward_outcomes(P, t, x, h, dt):
    integ = Integrator(P)
    for k in range(len(P.controls)):
        try:
            y, eta, _ = integ.advance(PiecewiseControl.constant(t, t + h, k), t, np.asarray(x, float), 0.0, t + h, dt)
        except ZenoCapExceeded:
            continue
        yield k, y, -eta


def _default_dt(h):
    return h / 8.0


def check_superoptimality(P: ControlProblem, V, t: float, x, h: float, tol: float,
                          dt: float | None = None) -> bool:
    """Some sampled constant control satisfies v(t,x) >= v(t+h, y) + int l - tol."""
    vx = V.query(t, x)
    dt = dt or _default_dt(h)
    best = min((V.query(t + h, y) + c for _, y, c in _forward_outcomes(P, t, x, h, dt)), default=math.inf)
    return bool(vx >= best - tol)


def check_suboptimality(P: ControlProblem, V, t: float, x, h: float, tol: float,
                        dt: float | None = None) -> bool:
    """Every sampled constant control satisfies v(t,x) <= v(t+h, y) + int l + tol."""
    vx = V.query(t, x)
    dt = dt or _default_dt(h)
    return all(vx <= V.query(t + h, y) + c + tol for _, y, c in _forward_outcomes(P, t, x, h, dt))


def check_backward_suboptimality(P: ControlProblem, V, t: float, x, h: float, tol: float,
                                 dt: float | None = None) -> bool:
    """Every sampled backward path satisfies v(t,x) >= v(t-h, y(t-h)) - int l - tol."""
    vx = V.query(t, x)
    dt = dt or _default_dt(h)
    for k in range(len(P.controls)):
        try:
            tr = integrate_backward(P, t, x, PiecewiseControl.constant(t - h, t, k), dt, h)
        except ZenoCapExceeded:
            continue
        if vx < V.query(t - h, tr.states[0]) - tr.running_cost - tol:
            return False
    return True
