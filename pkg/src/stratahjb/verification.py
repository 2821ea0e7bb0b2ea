"""Harnesses for solution-level claims: cross-checks, ordering, stability, audits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .control import (
    AffineVelocity,
    ControlProblem,
    Piece,
    ShiftedCost,
    ShiftedVelocity,
    check_controllability,
    piece_contains_velocity,
    shifted_terminal,
)
from .errors import GridOutOfRange, ZenoCapExceeded
from .grid import StratifiedGrid
from .solver import CONTINUOUS, LSC, ValueGrid, build_operator, solve, terminal_entries
from .stratification import CELL
from .trajectories import (
    PiecewiseControl,
    Trajectory,
    check_backward_suboptimality,
    check_superoptimality,
    check_suboptimality,
    filippov_project,
    integrate_backward,
)

PASS, WARN, FAIL, SKIP = "PASS", "WARN", "FAIL", "SKIP"


def scheme_unit(grid: StratifiedGrid) -> float:
    return grid.dx + grid.dt


# --------------------------------------------------------------------------- uniqueness
@dataclass
class CrosscheckReport:
    status: str
    discrepancy: float
    tolerance: float
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def uniqueness_crosscheck(P: ControlProblem, grid: StratifiedGrid) -> CrosscheckReport:
    """Essential-set scheme against the layered tangential-plus-cells scheme."""
    tol = 3.0 * scheme_unit(grid)
    if P.terminal.mode != "lipschitz":
        return CrosscheckReport(SKIP, math.nan, tol, "terminal cost is not Lipschitz")
    if not check_controllability(P, "H2", sample_count=8).holds:
        return CrosscheckReport(SKIP, math.nan, tol, "hypothesis failure: interface ball controllability (H2) violated")
    Vc = solve(P, grid, CONTINUOUS)
    Vl = solve(P, grid, LSC)
    stride = Vl.stats["stride"]
    worst = 0.0
    for n in range(Vl.times.size):
        worst = max(worst, float(np.max(np.abs(Vl.node_values(n) - Vc.node_values(n * stride)))))
    return CrosscheckReport(PASS if worst <= tol else FAIL, worst, tol, f"layered time stride {stride}")


# --------------------------------------------------------------------------- comparison
@dataclass
class ComparisonReport:
    status: str
    delta: float
    min_diff: float
    max_diff: float

    def to_dict(self) -> dict:
        return asdict(self)


def comparison_test(P: ControlProblem, grid: StratifiedGrid, delta: float, mode: str | None = None,
                    operator=None, slack: float = 1e-12) -> ComparisonReport:
    """Shift the terminal data by delta >= 0; every entry must move by a value in [0, delta]."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    mode = mode or (LSC if P.terminal.mode == "lsc" else CONTINUOUS)
    op = operator or build_operator(P, grid, mode)
    base = op.run(terminal_entries(P, op))
    bumped = op.run(terminal_entries(P, op, shifted_terminal(P.terminal, delta, lambda X: np.ones(X.shape[0]))))
    diff = bumped - base
    lo, hi = float(diff.min()), float(diff.max())
    ok = lo >= -slack and hi <= delta + slack
    return ComparisonReport(PASS if ok else FAIL, float(delta), lo, hi)


# --------------------------------------------------------------------------- stability
@dataclass
class Perturbation:
    """Smooth bounded perturbation directions for f, l and phi (None = off)."""

    g: object = None
    h: object = None
    k: object = None
    g_bound: float = 0.0
    k_bound: float = 0.0


def unit_drift(direction) -> Perturbation:
    v = np.asarray(direction, dtype=float)
    v = v / np.linalg.norm(v)
    return Perturbation(g=lambda X: np.broadcast_to(v, X.shape), g_bound=1.0)


def perturbed_problem(P: ControlProblem, pert: Perturbation, eps: float) -> ControlProblem:
    pieces = {}
    for sid, piece in P.pieces.items():
        vel = ShiftedVelocity(piece.velocity, eps, pert.g) if pert.g is not None else piece.velocity
        cost = ShiftedCost(piece.cost, eps, pert.h) if pert.h is not None else piece.cost
        pieces[sid] = Piece(vel, cost)
    terminal = shifted_terminal(P.terminal, eps, pert.k) if pert.k is not None else P.terminal
    return P.replace(pieces=pieces, terminal=terminal, c_f=P.c_f + eps * pert.g_bound,
                     c_l=P.c_l + (eps if pert.h is not None else 0.0), name=f"{P.name}+{eps:g}")


@dataclass
class StabilityReport:
    status: str
    epsilons: list
    differences: list
    constant: float
    tolerance: float
    monotone: bool
    within_bound: bool

    def to_dict(self) -> dict:
        return asdict(self)


def stability_test(P: ControlProblem, grid: StratifiedGrid, pert: Perturbation, eps0: float = 0.2,
                   n_levels: int = 4, mode: str = CONTINUOUS) -> StabilityReport:
    """Solve the ladder eps_n = eps0 / 2^n and check the fitted linear bound."""
    unit = scheme_unit(grid)
    tol = 3.0 * unit
    base = solve(P, grid, mode)
    eps = [eps0 / 2**n for n in range(n_levels + 1)]
    diffs = []
    base_op = None
    for e in eps:
        Pn = perturbed_problem(P, pert, e)
        if pert.g is None and pert.h is None:
            base_op = base_op or build_operator(P, grid, mode)
            Vn = solve(Pn, grid, mode, operator=base_op)
        else:
            Vn = solve(Pn, grid, mode)
        diffs.append(float(np.max(np.abs(Vn.values - base.values))))
    C = diffs[0] / eps[0] if eps[0] > 0 else 0.0
    monotone = all(b <= a + unit for a, b in zip(diffs, diffs[1:]))
    within = all(dn <= C * e + tol for dn, e in zip(diffs, eps))
    return StabilityReport(PASS if monotone and within else FAIL, eps, diffs, C, tol, monotone, within)


# --------------------------------------------------------------------------- audit
@dataclass
class AuditItem:
    name: str
    status: str
    detail: str


@dataclass
class AuditReport:
    problem: str
    items: list = field(default_factory=list)
    verdict: str = PASS

    def status(self, name: str) -> str:
        for it in self.items:
            if it.name == name:
                return it.status
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"problem": self.problem, "verdict": self.verdict, "checks": [asdict(i) for i in self.items]}


def _sample(P, sid, n, box, rng):
    return P.strat.sample_points(sid, n, box, rng)


def _augmented_member(P: ControlProblem, sid: int, x, v, w, tol: float) -> bool:
    """Is (v, w) in {(f(x, c), -l(x, c) - r) : c in controls, 0 <= r <= b(x, c)}?"""
    piece = P.piece(sid)
    bound = float(P.cost_bound(x)[0])
    if -w > bound + tol:
        return False
    vel = piece.velocity
    if isinstance(vel, AffineVelocity) and np.any(vel.control_matrix):
        rhs = v - vel.state_matrix @ x - vel.offset
        c, *_ = np.linalg.lstsq(vel.control_matrix, rhs, rcond=None)
        if np.linalg.norm(vel.control_matrix @ c - rhs) <= tol and P.controls.contains(c, tol):
            ell = float(np.asarray(piece.cost(x[None, :], c[None, :]))[0, 0])
            if ell <= -w + tol:
                return True
    V = P.velocities(sid, x)[0]
    L = P.costs(sid, x)[0]
    ok = (np.linalg.norm(V - v, axis=1) <= tol) & (L <= -w + tol)
    return bool(ok.any())


def hypothesis_audit(P: ControlProblem, samples: int = 24, box=(-2.0, 2.0), seed: int = 0,
                     tol: float = 1e-6) -> AuditReport:
    """Sampled checks of the standing hypotheses plus controllability verdicts."""
    rng = np.random.default_rng(seed)
    S = P.strat
    rep = AuditReport(P.name)

    # growth of f and l, sign of l
    worst_f, worst_l, neg_l = 0.0, 0.0, 0.0
    for st in S.strata:
        X = _sample(P, st.id, samples, box, rng)
        V = P.velocities(st.id, X)
        L = P.costs(st.id, X)
        worst_f = max(worst_f, float(np.max(np.linalg.norm(V, axis=2) / (P.c_f * (1 + np.linalg.norm(X, axis=1)))[:, None])))
        worst_l = max(worst_l, float(np.max(L / P.cost_bound(X)[:, None])))
        neg_l = min(neg_l, float(L.min()))
    rep.items.append(AuditItem("HF-growth", PASS if worst_f <= 1.01 else FAIL, f"max |f| / c_f(1+|x|) = {worst_f:.4g}"))

    # local Lipschitz continuity of each piece's velocity set (Hausdorff quotients)
    worst_q = 0.0
    for st in S.strata:
        X = _sample(P, st.id, samples, box, rng)
        step = 1e-3
        Y = X + step * rng.standard_normal(X.shape) * np.array([0 if any(ax == k for ax, _ in st.fixed) else 1 for k in range(P.d)])
        VX, VY = P.velocities(st.id, X), P.velocities(st.id, Y)
        for vx, vy, x, y in zip(VX, VY, X, Y):
            gap = np.linalg.norm(x - y)
            if gap == 0:
                continue
            D = np.linalg.norm(vx[:, None, :] - vy[None, :, :], axis=2)
            haus = max(D.min(axis=1).max(), D.min(axis=0).max())
            worst_q = max(worst_q, haus / gap)
    rep.items.append(AuditItem("HF-lipschitz", PASS if math.isfinite(worst_q) and worst_q < 1e6 else FAIL,
                               f"max sampled Hausdorff quotient = {worst_q:.4g}"))

    # upper semicontinuity at interfaces: adjacent limits contained in F(x)
    usc_bad = 0
    for st in S.strata:
        if st.kind == CELL:
            continue
        X = _sample(P, st.id, max(4, samples // 4), box, rng)
        for x in X:
            for M in S.star(st.id):
                if M == st.id:
                    continue
                y = x.copy()
                for j, h in enumerate(S.hyperplanes):
                    if st.signature[j] == 0 and S[M].signature[j] != 0:
                        y[h.axis] = h.offset + S[M].signature[j] * 1e-9
                for v in P.velocities(M, y)[0]:
                    if not piece_contains_velocity(P, st.id, x, v, tol):
                        usc_bad += 1
    rep.items.append(AuditItem("HF-usc", PASS if usc_bad == 0 else FAIL, f"{usc_bad} adjacent limit velocities outside F(x)"))

    rep.items.append(AuditItem("HL", PASS if neg_l >= -1e-12 and worst_l <= 1.01 else FAIL,
                               f"min l = {neg_l:.4g}, max l / c_l(1+|x|^lambda_l) = {worst_l:.4g}"))

    # convexity of the augmented sets: random two-point combinations
    hg_bad, hg_total = 0, 0
    for st in S.strata:
        X = _sample(P, st.id, max(4, samples // 4), box, rng)
        for x in X:
            V = P.velocities(st.id, x)[0]
            L = P.costs(st.id, x)[0]
            K = V.shape[0]
            for _ in range(8):
                i, j = rng.integers(0, K, size=2)
                lam = rng.uniform()
                v = lam * V[i] + (1 - lam) * V[j]
                w = -(lam * L[i] + (1 - lam) * L[j])
                hg_total += 1
                if not _augmented_member(P, st.id, x, v, w, tol):
                    hg_bad += 1
    rep.items.append(AuditItem("HG", PASS if hg_bad == 0 else FAIL, f"{hg_bad} of {hg_total} convex combinations outside G(x)"))

    required = "H3" if P.terminal.mode == "lsc" else "H2"
    for mode in ("H2", "H3", "P1", "P2"):
        r = check_controllability(P, mode, sample_count=8, box=box, seed=seed)
        detail = "; ".join(f"stratum {s.stratum}: {s.verdict}" for s in r.strata) or "no interfaces"
        rep.items.append(AuditItem(mode, PASS if r.holds else FAIL, detail))

    standing = ("HF-growth", "HF-lipschitz", "HF-usc", "HL", "HG", required)
    if any(rep.status(n) == FAIL for n in standing):
        rep.verdict = FAIL
    elif any(it.status == FAIL for it in rep.items):
        rep.verdict = WARN
    else:
        rep.verdict = PASS
    return rep


# --------------------------------------------------------------------------- trajectory-level checks
@dataclass
class DPPReport:
    kind: str
    passed: int
    failed: int
    skipped: int
    failures: list = field(default_factory=list)

    @property
    def status(self) -> str:
        return PASS if self.failed == 0 and self.passed > 0 else FAIL

    def to_dict(self) -> dict:
        return {"kind": self.kind, "passed": self.passed, "failed": self.failed, "skipped": self.skipped,
                "status": self.status}


_CHECKS = {
    "super": check_superoptimality,
    "sub": check_suboptimality,
    "backward": check_backward_suboptimality,
}


def dpp_suite(P: ControlProblem, V: ValueGrid, kind: str, probes: np.ndarray, h: float, tol: float) -> DPPReport:
    """Run one DPP check at probe rows (t, x...)."""
    check = _CHECKS[kind]
    rep = DPPReport(kind, 0, 0, 0)
    for row in probes:
        t, x = float(row[0]), row[1:]
        try:
            ok = check(P, V, t, x, h, tol)
        except GridOutOfRange:
            rep.skipped += 1
            continue
        if ok:
            rep.passed += 1
        else:
            rep.failed += 1
            rep.failures.append(row.tolist())
    return rep


def random_probes(V: ValueGrid, n: int, h: float, seed: int = 0, margin: float = 0.0, kind: str = "forward",
                  on_levels: bool = False) -> np.ndarray:
    """Random (t, x) rows leaving room for a step of length h in time and margin in space."""
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in V.grid.box]) + margin
    hi = np.array([b[1] for b in V.grid.box]) - margin
    T = V.times[-1]
    if on_levels:
        k = max(1, int(round(h / V.dt)))
        levels = np.arange(k, V.times.size) if kind == "backward" else np.arange(0, V.times.size - k)
        t = V.times[rng.choice(levels, size=n)]
    elif kind == "backward":
        t = rng.uniform(h, T, n)
    else:
        t = rng.uniform(0.0, T - h, n)
    X = rng.uniform(lo, hi, (n, V.grid.d))
    return np.column_stack([t, X])


@dataclass
class LimitReport:
    status: str
    worst: float
    tolerance: float
    points: int

    def to_dict(self) -> dict:
        return asdict(self)


def limit_property_check(P: ControlProblem, V: ValueGrid, points: np.ndarray, steps=(1, 2), tol: float | None = None
                         ) -> LimitReport:
    """query(t - h, y(t - h)) against query(t, x) along every sampled backward trajectory."""
    tol = 3.0 * scheme_unit(V.grid) if tol is None else tol
    worst = 0.0
    for row in points:
        t, x = float(row[0]), row[1:]
        vx = V.query(t, x)
        for k in steps:
            h = k * V.dt
            if t - h < -1e-12:
                continue
            for a in range(len(P.controls)):
                try:
                    tr = integrate_backward(P, t, x, PiecewiseControl.constant(t - h, t, a), h / 4, h)
                except ZenoCapExceeded:
                    continue
                worst = max(worst, abs(V.query(t - h, tr.states[0]) - vx))
    return LimitReport(PASS if worst <= tol else FAIL, worst, tol, len(points))


@dataclass
class LipschitzReport:
    space: float
    time: float

    @property
    def constant(self) -> float:
        return max(self.space, self.time)


def interface_lipschitz(V: ValueGrid) -> LipschitzReport:
    """Discrete Lipschitz constants of the node values restricted to interface nodes."""
    grid = V.grid
    S = grid.strat
    ns = grid.node_stratum
    vals = np.array([V.node_values(n) for n in range(V.times.size)])
    space, timec = 0.0, 0.0
    for st in S.strata:
        if st.dim != grid.d - 1:
            continue
        idx = np.flatnonzero(ns == st.id)
        if idx.size == 0:
            continue
        timec = max(timec, float(np.max(np.abs(np.diff(vals[:, idx], axis=0))) / V.dt))
        multi = np.array(np.unravel_index(idx, grid.shape)).T
        pos = {tuple(m): i for i, m in zip(idx, multi)}
        for i, m in zip(idx, multi):
            for k in range(grid.d):
                nb = m.copy()
                nb[k] += 1
                j = pos.get(tuple(nb))
                if j is None:
                    continue
                gap = float(np.linalg.norm(grid.nodes[j] - grid.nodes[i]))
                space = max(space, float(np.max(np.abs(vals[:, j] - vals[:, i]))) / gap)
    return LipschitzReport(space, timec)


@dataclass
class CausalityReport:
    status: str
    reach: float
    bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def causality_test(P: ControlProblem, grid: StratifiedGrid, node: int | None = None, mode: str = CONTINUOUS
                   ) -> CausalityReport:
    """Bump the old value at one node; one backward step may only change nearby entries."""
    op = build_operator(P, grid, mode, stride=1)
    node = grid.n_nodes // 2 if node is None else node
    old = terminal_entries(P, op)
    bumped = old.copy()
    hit = np.flatnonzero(op.pair_node == node) if op.layered else np.array([node])
    bumped[hit] += 1.0
    diff = np.abs(op.step(bumped) - op.step(old)) > 0
    owners = op.pair_node[diff] if op.layered else np.flatnonzero(diff)
    X = grid.nodes
    reach = float(np.max(np.linalg.norm(X[owners] - X[node], axis=1))) if owners.size else 0.0
    radius = float(np.linalg.norm([max(abs(lo), abs(hi)) for lo, hi in grid.box]))
    bound = op.h * P.c_f * (1 + radius) + math.sqrt(grid.d) * grid.dx
    return CausalityReport(PASS if reach <= bound else FAIL, reach, bound)


def growth_constant(V: ValueGrid, lam: float) -> float:
    """max |v(t, x)| / (1 + |x|^lam) over all stored levels."""
    X = V.grid.nodes
    w = 1.0 + np.linalg.norm(X, axis=1) ** lam
    return max(float(np.max(np.abs(V.node_values(n)) / w)) for n in range(V.times.size))


# --------------------------------------------------------------------------- Filippov trials
def near_tangential_reference(P: ControlProblem, interface_id: int, rng, n_steps: int = 100,
                              duration: float = 1.0, leak: float = 0.05) -> Trajectory:
    """Random smooth path starting near the interface with a small normal drift."""
    st = P.strat[interface_id]
    zero = [ax for ax, _ in st.fixed]
    free = [k for k in range(P.d) if k not in zero]
    times = np.linspace(0.0, duration, n_steps + 1)
    y0 = np.zeros(P.d)
    for ax, off in st.fixed:
        y0[ax] = off + rng.uniform(-0.01, 0.01)
    for k in free:
        y0[k] = rng.uniform(-1.0, 1.0)
    vel = np.zeros(P.d)
    vel[zero] = rng.uniform(-leak, leak, len(zero))
    vel[free] = rng.uniform(-1.5, 1.5, len(free))
    wiggle = np.zeros(P.d)
    wiggle[free] = rng.uniform(-0.05, 0.05, len(free))
    omega = rng.uniform(1.0, 6.0)
    Y = y0 + times[:, None] * vel + np.sin(omega * times)[:, None] * wiggle
    eta = -rng.uniform(0.0, 0.1) * times
    return Trajectory(times, Y, np.zeros(times.size, dtype=int), eta, np.full(times.size, interface_id), [])


@dataclass
class FilippovTrialReport:
    status: str
    trials: int
    violations: int
    worst_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def filippov_trials(P: ControlProblem, interface_id: int, n: int = 50, seed: int = 0) -> FilippovTrialReport:
    rng = np.random.default_rng(seed)
    violations, worst = 0, 0.0
    for _ in range(n):
        ref = near_tangential_reference(P, interface_id, rng)
        res = filippov_project(P, interface_id, ref)
        if res.violated:
            violations += 1
        # the bound equals the gap at the start time by construction
        gaps, bounds = res.gaps[1:], res.bounds[1:]
        pos = bounds > 0
        if pos.any():
            worst = max(worst, float(np.max(gaps[pos] / bounds[pos])))
    return FilippovTrialReport(PASS if violations == 0 else FAIL, n, violations, worst)
