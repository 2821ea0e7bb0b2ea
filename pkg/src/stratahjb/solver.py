"""Backward semi-Lagrangian solver on stratification-aligned grids.

Every node x carries one "pair" (x, M) per stratum M whose closure contains x.
A pair's candidates are the M-piece controls whose velocity lies in the
tangent cone of closure(M) at x; each candidate contributes

    h * l(x, a) + I[v](x + h f(x, a)),

where I interpolates multilinearly on the grid rectangle holding the foot,
reading each corner's value from the layer of the stratum the foot lies in.
Hyperplanes are grid lines, so rectangles never straddle an interface.

Continuous mode keeps one value per node (the min over its pairs).  LSC mode
keeps one value per pair (a layer): the node's own layer holds the min over
pairs, a cell-side layer holds its own candidates' min, lowered to the node
value when some control of that piece points back toward the node's stratum.
"""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .control import ControlProblem, check_controllability
from .errors import BoxTooSmall, GridOutOfRange
from .grid import StratifiedGrid
from .stratification import CELL, ConeDescriptor

log = logging.getLogger(__name__)

CONTINUOUS = "continuous"
LSC = "lsc"
MAX_EXTRAPOLATED = 0.05
THETA_SNAP = 1e-9


# --------------------------------------------------------------------------- stencils
def _snap_to_planes(strat, F: np.ndarray, tol: float) -> np.ndarray:
    for h in strat.hyperplanes:
        col = F[:, h.axis]
        col[np.abs(col - h.offset) <= tol] = h.offset
    return F


def stencil(grid: StratifiedGrid, F: np.ndarray):
    """Corner node indices, weights, and an extrapolation mask for points F (m, d).

    Outside the box the boundary rectangle is extrapolated linearly with the
    local coordinate clamped to [-1, 2].
    """
    m, d = F.shape
    idx0, theta = [], []
    extrap = np.zeros(m, dtype=bool)
    for k, ax in enumerate(grid.axes):
        f = F[:, k]
        i = np.clip(np.searchsorted(ax, f, side="right") - 1, 0, len(ax) - 2)
        th = (f - ax[i]) / (ax[i + 1] - ax[i])
        extrap |= (th < -1e-12) | (th > 1 + 1e-12)
        th = np.clip(th, -1.0, 2.0)
        th[np.abs(th) < THETA_SNAP] = 0.0
        th[np.abs(th - 1.0) < THETA_SNAP] = 1.0
        idx0.append(i)
        theta.append(th)
    n_corner = 2**d
    corners = np.empty((m, n_corner), dtype=np.int64)
    weights = np.empty((m, n_corner))
    for c, bits in enumerate(itertools.product((0, 1), repeat=d)):
        multi = [idx0[k] + bits[k] for k in range(d)]
        corners[:, c] = np.ravel_multi_index(tuple(multi), grid.shape)
        w = np.ones(m)
        for k in range(d):
            w = w * (theta[k] if bits[k] else 1.0 - theta[k])
        weights[:, c] = w
    return corners, weights, extrap


# --------------------------------------------------------------------------- operator
@dataclass
class SLOperator:
    """Precomputed backward step, reusable across terminal data."""

    grid: StratifiedGrid
    mode: str
    stride: int
    h: float
    cand_ptr: np.ndarray
    corner_idx: np.ndarray
    corner_w: np.ndarray
    cost: np.ndarray
    node_ptr: np.ndarray
    own_pos: np.ndarray
    outward: np.ndarray
    pair_node: np.ndarray
    pair_stratum: np.ndarray
    layer_of: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def layered(self) -> bool:
        return self.mode == LSC

    @property
    def n_entries(self) -> int:
        return self.pair_node.size if self.layered else self.grid.n_nodes

    @property
    def n_levels(self) -> int:
        return self.grid.time_steps // self.stride

    def step(self, old: np.ndarray, out: np.ndarray | None = None, backend: str | None = None) -> np.ndarray:
        out = np.empty(self.n_entries) if out is None else out
        return _kernels.sl_step(
            old, self.cand_ptr, self.corner_idx, self.corner_w, self.cost, self.node_ptr,
            self.own_pos, self.outward, self.layered, out, backend=backend,
        )

    def run(self, terminal: np.ndarray, backend: str | None = None) -> np.ndarray:
        """All time levels (ascending in time) starting from terminal entry values."""
        levels = np.empty((self.n_levels + 1, self.n_entries))
        levels[-1] = terminal
        for n in range(self.n_levels - 1, -1, -1):
            self.step(levels[n + 1], levels[n], backend=backend)
        return levels


def lsc_stride(P: ControlProblem, grid: StratifiedGrid) -> int:
    """Largest divisor m of N with m * dt * vmax_k <= dx_k on every axis.

    Max-speed feet then land on or inside the neighbouring node, which keeps
    jumps of lsc data from diffusing through interpolation.
    """
    vmax = np.zeros(grid.d)
    X = grid.nodes
    for sid in P.pieces:
        V = P.velocities(sid, X[:: max(1, X.shape[0] // 512)])
        vmax = np.maximum(vmax, np.max(np.abs(V), axis=(0, 1)))
    ratios = [grid.dx_axis(k) / (vmax[k] * grid.dt) for k in range(grid.d) if vmax[k] > 0]
    limit = max(1, math.floor(min(ratios) + 1e-9)) if ratios else 1
    N = grid.time_steps
    return max(m for m in range(1, min(limit, N) + 1) if N % m == 0)


def build_operator(P: ControlProblem, grid: StratifiedGrid, mode: str = CONTINUOUS,
                   stride: int | None = None) -> SLOperator:
    if mode not in (CONTINUOUS, LSC):
        raise ValueError(f"unknown mode {mode!r}")
    S = P.strat
    if stride is None:
        stride = lsc_stride(P, grid) if mode == LSC else 1
    if grid.time_steps % stride:
        raise ValueError("stride must divide the number of time steps")
    h = grid.dt * stride
    X = grid.nodes
    ns = grid.node_stratum
    eps = P.eps_tan
    d = grid.d

    # pairs, sorted by (node, stratum)
    pn, pm = [], []
    for K in np.unique(ns):
        nodes_K = np.flatnonzero(ns == K)
        for M in S.star(int(K)):
            pn.append(nodes_K)
            pm.append(np.full(nodes_K.size, M))
    pair_node = np.concatenate(pn)
    pair_stratum = np.concatenate(pm)
    order = np.lexsort((pair_stratum, pair_node))
    pair_node, pair_stratum = pair_node[order], pair_stratum[order]
    n_pairs = pair_node.size
    node_ptr = np.concatenate([[0], np.cumsum(np.bincount(pair_node, minlength=grid.n_nodes))]).astype(np.int64)
    layer_of = np.full((S.n_strata, grid.n_nodes), -1, dtype=np.int64)
    layer_of[pair_stratum, pair_node] = np.arange(n_pairs)
    own_pos = layer_of[ns, np.arange(grid.n_nodes)]
    outward = np.zeros(n_pairs, dtype=bool)

    cand_pair, cand_feet, cand_cost = [], [], []
    for K in np.unique(ns):
        K = int(K)
        nodes_K = np.flatnonzero(ns == K)
        rep = X[nodes_K[0]]
        for M in S.star(K):
            V = P.velocities(M, X[nodes_K])
            L = P.costs(M, X[nodes_K])
            cone = S.tangent_cone(K, rep, closure_of=M)
            speed = np.linalg.norm(V, axis=2)
            adm = cone.distance(V) <= eps * (1.0 + speed)
            pairs = layer_of[M, nodes_K]
            if M != K:
                tm = ConeDescriptor(d, tuple(ax for ax, _ in S[M].fixed), ())
                back = (tm.distance(V) <= eps * (1.0 + speed)) & ~adm
                outward[pairs] = back.any(axis=1)
            rows, cols = np.nonzero(adm)
            cand_pair.append(pairs[rows])
            cand_feet.append(X[nodes_K[rows]] + h * V[rows, cols])
            cand_cost.append(h * L[rows, cols])
    cand_pair = np.concatenate(cand_pair)
    feet = np.concatenate(cand_feet)
    cost = np.concatenate(cand_cost)

    # nodes with no admissible control at all fall back to their own piece
    has = np.zeros(grid.n_nodes, dtype=bool)
    has[pair_node[cand_pair]] = True
    fallback = np.flatnonzero(~has)
    if fallback.size:
        warnings.warn(f"{fallback.size} nodes have no admissible control; using all own-piece controls",
                      RuntimeWarning, stacklevel=2)
        fp, ff, fc = [], [], []
        for K in np.unique(ns[fallback]):
            nodes_K = fallback[ns[fallback] == K]
            V = P.velocities(int(K), X[nodes_K])
            L = P.costs(int(K), X[nodes_K])
            A = V.shape[1]
            fp.append(np.repeat(own_pos[nodes_K], A))
            ff.append((X[nodes_K][:, None, :] + h * V).reshape(-1, d))
            fc.append((h * L).ravel())
        cand_pair = np.concatenate([cand_pair, *fp])
        feet = np.concatenate([feet, *ff])
        cost = np.concatenate([cost, *fc])

    order = np.argsort(cand_pair, kind="stable")
    cand_pair, feet, cost = cand_pair[order], feet[order], cost[order]
    cand_ptr = np.concatenate([[0], np.cumsum(np.bincount(cand_pair, minlength=n_pairs))]).astype(np.int64)

    feet = _snap_to_planes(S, feet, 1e-10 * grid.dx)
    corners, weights, extrap = stencil(grid, feet)
    n_ext = int(extrap.sum())
    if feet.shape[0] and n_ext > MAX_EXTRAPOLATED * feet.shape[0]:
        raise BoxTooSmall(
            f"{n_ext} of {feet.shape[0]} foot points ({100.0 * n_ext / feet.shape[0]:.1f}%) leave the box"
        )
    missing = 0
    if mode == LSC:
        s_foot = S.locate_many(feet, snap=0.0)
        entries = layer_of[s_foot[:, None], corners]
        own_corner = own_pos[corners]
        bad = entries < 0
        missing = int(np.count_nonzero(bad & (weights != 0)))
        corner_idx = np.where(bad, own_corner, entries)
    else:
        corner_idx = corners

    stats = {
        "mode": mode,
        "stride": stride,
        "h": h,
        "nodes": grid.n_nodes,
        "pairs": n_pairs,
        "candidates": int(feet.shape[0]),
        "extrapolated": n_ext,
        "fallback_nodes": int(fallback.size),
        "missing_layer_corners": missing,
    }
    return SLOperator(
        grid, mode, stride, h, cand_ptr, np.ascontiguousarray(corner_idx, dtype=np.int64),
        np.ascontiguousarray(weights), cost, node_ptr, own_pos.astype(np.int64), outward,
        pair_node, pair_stratum, layer_of, stats,
    )


def nudge_into(strat, x: np.ndarray, sid: int, M: int) -> np.ndarray:
    """Move x (in stratum sid) a hair into stratum M for one-sided limits."""
    y = x.copy()
    sig_s, sig_m = strat[sid].signature, strat[M].signature
    for j, h in enumerate(strat.hyperplanes):
        if sig_s[j] == 0 and sig_m[j] != 0:
            y[h.axis] = h.offset + sig_m[j] * 1e-9 * (1.0 + abs(h.offset))
    return y


def terminal_entries(P: ControlProblem, op: SLOperator, terminal=None) -> np.ndarray:
    """Terminal data per entry: phi at nodes, or per-layer one-sided limits."""
    phi = P.terminal if terminal is None else terminal
    X = op.grid.nodes
    base = phi(X)
    if not op.layered:
        return base
    vals = base[op.pair_node].copy()
    if phi.mode != "lsc":
        return vals
    ns = op.grid.node_stratum
    off = np.flatnonzero(op.pair_stratum != ns[op.pair_node])
    if off.size:
        Y = np.array([
            nudge_into(P.strat, X[n], int(ns[n]), int(M))
            for n, M in zip(op.pair_node[off], op.pair_stratum[off])
        ])
        vals[off] = phi(Y)
    return vals


# --------------------------------------------------------------------------- value grid
@dataclass
class ValueGrid:
    grid: StratifiedGrid
    mode: str
    times: np.ndarray
    values: np.ndarray
    pair_node: np.ndarray
    pair_stratum: np.ndarray
    layer_of: np.ndarray
    node_ptr: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def layered(self) -> bool:
        return self.mode == LSC

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else self.grid.horizon

    def node_values(self, level: int) -> np.ndarray:
        v = self.values[level]
        if not self.layered:
            return v
        return np.minimum.reduceat(v, self.node_ptr[:-1])

    def _spatial(self, level: int, x: np.ndarray, reconstruction: str) -> float:
        S = self.grid.strat
        x = S.snap_point(x)
        sid = S.locate(x, snap=0.0)
        corners, weights, _ = stencil(self.grid, x[None, :])
        corners, weights = corners[0], weights[0]
        keep = weights != 0
        corners, weights = corners[keep], weights[keep]
        vals = self.values[level]
        layers = S.star(sid) if self.layered else (None,)
        best = math.inf
        for M in layers:
            entries = corners if M is None else self.layer_of[M, corners]
            if np.any(entries < 0):
                continue
            cv = vals[entries]
            val = float(cv.min()) if reconstruction == "lower" else float(weights @ cv)
            best = min(best, val)
        return best

    def query(self, t: float, x, reconstruction: str | None = None) -> float:
        """Value at (t, x): linear in time; in space multilinear (or the corner
        minimum with reconstruction="lower", the default in LSC mode)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        T = self.times[-1]
        tol = 1e-12 * max(1.0, T)
        if not (self.times[0] - tol <= t <= T + tol) or not self.grid.contains(x, 1e-12):
            raise GridOutOfRange(f"(t, x) = ({t}, {x.tolist()}) is outside the grid")
        recon = reconstruction or ("lower" if self.layered else "linear")
        s = (min(max(t, self.times[0]), T) - self.times[0]) / self.dt
        n = min(int(math.floor(s + 1e-9)), self.times.size - 1)
        frac = s - n
        if frac <= 1e-9 or n == self.times.size - 1:
            return self._spatial(n, x, recon)
        a = self._spatial(n, x, recon)
        b = self._spatial(n + 1, x, recon)
        return (1 - frac) * a + frac * b

    def level_of(self, t: float) -> int:
        n = int(round((t - self.times[0]) / self.dt))
        if not 0 <= n < self.times.size or abs(self.times[n] - t) > 1e-9 * max(1.0, abs(t)):
            raise GridOutOfRange(f"t = {t} is not a stored time level")
        return n


def solve(P: ControlProblem, grid: StratifiedGrid, mode: str = CONTINUOUS, stride: int | None = None,
          operator: SLOperator | None = None, terminal=None, backend: str | None = None) -> ValueGrid:
    op = operator or build_operator(P, grid, mode, stride)
    vals = op.run(terminal_entries(P, op, terminal), backend=backend)
    times = np.linspace(0.0, grid.horizon, op.n_levels + 1)
    return ValueGrid(grid, op.mode, times, vals, op.pair_node, op.pair_stratum, op.layer_of,
                     op.node_ptr, dict(op.stats))


def solve_continuous(P: ControlProblem, grid: StratifiedGrid, **kw) -> ValueGrid:
    if P.terminal.mode != "lipschitz":
        warnings.warn("continuous mode expects Lipschitz terminal data", RuntimeWarning, stacklevel=2)
    if not check_controllability(P, "H2", sample_count=4).holds:
        warnings.warn("interface controllability (ball) fails; continuity is not guaranteed",
                      RuntimeWarning, stacklevel=2)
    return solve(P, grid, CONTINUOUS, **kw)


def solve_lsc(P: ControlProblem, grid: StratifiedGrid, **kw) -> ValueGrid:
    return solve(P, grid, LSC, **kw)


def max_error(V: ValueGrid, exact, singular_distance=None, band: float = 0.0, level: int | None = None):
    """Max |v - exact| over nodes (all stored levels, or one), skipping a band
    around the non-smooth set.  Returns (error, number of nodes compared)."""
    X = V.grid.nodes
    levels = range(V.times.size) if level is None else [level]
    worst, count = 0.0, 0
    for n in levels:
        t = V.times[n]
        keep = np.ones(X.shape[0], dtype=bool)
        if singular_distance is not None and band > 0:
            keep = singular_distance(t, X) > band
        if not keep.any():
            continue
        err = np.abs(V.node_values(n)[keep] - exact(t, X[keep]))
        worst = max(worst, float(err.max()))
        count += int(keep.sum())
    return worst, count
