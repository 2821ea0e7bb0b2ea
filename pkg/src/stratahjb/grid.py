"""Space-time grids whose lines contain every hyperplane inside the box."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import HyperplaneOutsideBox
from .stratification import Stratification


@dataclass(frozen=True)
class StratifiedGrid:
    strat: Stratification
    box: tuple
    axes: tuple
    time_steps: int
    horizon: float

    @property
    def d(self) -> int:
        return self.strat.d

    @property
    def shape(self) -> tuple:
        return tuple(len(a) for a in self.axes)

    @property
    def n_nodes(self) -> int:
        return math.prod(self.shape)

    @property
    def dt(self) -> float:
        return self.horizon / self.time_steps

    @property
    def dx(self) -> float:
        """Largest spacing over all axes."""
        return max(float(np.max(np.diff(a))) for a in self.axes)

    def dx_axis(self, k: int) -> float:
        return float(np.min(np.diff(self.axes[k])))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.time_steps + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    @cached_property
    def node_stratum(self) -> np.ndarray:
        return self.strat.locate_many(self.nodes, snap=0.0)

    def flat_index(self, multi: np.ndarray) -> np.ndarray:
        return np.ravel_multi_index(tuple(np.asarray(multi).T), self.shape)

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return all(a[0] - tol <= xi <= a[-1] + tol for a, xi in zip(self.axes, x))


def _axis_nodes(lo: float, hi: float, n: int, offsets) -> np.ndarray:
    """Piecewise-uniform nodes with every offset in (lo, hi) as an exact node."""
    target = (hi - lo) / (n - 1)
    anchors = [lo, *sorted(o for o in offsets if lo < o < hi), hi]
    pieces = []
    for a, b in zip(anchors, anchors[1:]):
        k = max(1, int(round((b - a) / target)))
        seg = np.linspace(a, b, k + 1)
        pieces.append(seg[:-1])
    return np.concatenate(pieces + [np.array([hi])])


def build_grid(strat: Stratification, box, nodes_per_axis, time_steps: int,
               horizon: float = 1.0) -> StratifiedGrid:
    """Grid on box (a (lo, hi) pair, or one pair per axis) aligned with the hyperplanes.

    Each axis is split at the hyperplane offsets; every segment gets a
    uniform spacing as close as possible to (hi - lo) / (nodes - 1).
    """
    if time_steps < 1:
        raise ValueError("time_steps must be >= 1")
    d = strat.d
    boxes = [tuple(map(float, box))] * d if np.ndim(box) == 1 else [tuple(map(float, b)) for b in box]
    counts = [int(nodes_per_axis)] * d if np.ndim(nodes_per_axis) == 0 else [int(n) for n in nodes_per_axis]
    if len(boxes) != d or len(counts) != d:
        raise ValueError("box and nodes_per_axis must match the dimension")
    axes = []
    for k, ((lo, hi), n) in enumerate(zip(boxes, counts)):
        if not hi > lo or n < 2:
            raise ValueError("each box side needs lo < hi and at least two nodes")
        offsets = [strat.hyperplanes[j].offset for j in strat.axis_planes(k)]
        for o in offsets:
            if not lo <= o <= hi:
                warnings.warn(f"hyperplane x{k + 1} = {o} lies outside the box", HyperplaneOutsideBox, stacklevel=2)
        axes.append(_axis_nodes(lo, hi, n, offsets))
    lo_hi = tuple((a[0], a[-1]) for a in axes)
    return StratifiedGrid(strat, lo_hi, tuple(axes), int(time_steps), float(horizon))


def cfl_time_steps(grid: StratifiedGrid, c_f: float) -> int:
    """Smallest step count with dt <= dx / (c_f (1 + |box|))."""
    radius = float(np.linalg.norm([max(abs(lo), abs(hi)) for lo, hi in grid.box]))
    dt_max = grid.dx / (c_f * (1.0 + radius))
    return max(1, math.ceil(grid.horizon / dt_max - 1e-9))
