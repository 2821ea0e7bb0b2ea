"""Cellular decomposition of R^d induced by axis-aligned hyperplanes.

Every point of R^d gets a sign signature over the hyperplane list: -1 / +1
for the side it lies on, 0 when it lies on the plane.  The distinct valid
signatures are the strata (open cells, interfaces and their intersections).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateHyperplane, NonPositiveDimension, PointNotInClosure

CELL = "cell"
INTERFACE = "interface"
INTERSECTION = "intersection"

DEFAULT_SNAP = 1e-9


@dataclass(frozen=True)
class Hyperplane:
    """The plane {x[axis] = offset}; its normal is +e_axis."""

    axis: int
    offset: float

    def normal(self, d: int) -> np.ndarray:
        n = np.zeros(d)
        n[self.axis] = 1.0
        return n

    def to_record(self) -> dict:
        return {"axis": int(self.axis), "offset": float(self.offset)}


@dataclass(frozen=True)
class Stratum:
    id: int
    signature: tuple[int, ...]
    dim: int
    kind: str
    # axes pinned to a plane, with the pinned coordinate value
    fixed: tuple[tuple[int, float], ...] = ()

    @property
    def is_cell(self) -> bool:
        return self.kind == CELL


@dataclass(frozen=True)
class ConeDescriptor:
    """Closed polyhedral cone {v : v[a] = 0 for a in zero_axes, s*v[a] >= 0 for (a, s) in half_axes}.

    Axes are orthogonal, so projection and distance separate per coordinate.
    """

    d: int
    zero_axes: tuple[int, ...] = ()
    half_axes: tuple[tuple[int, int], ...] = ()

    def project(self, v) -> np.ndarray:
        w = np.array(v, dtype=float, copy=True)
        for a, s in self.half_axes:
            w[..., a] = np.where(s * w[..., a] < 0, 0.0, w[..., a])
        for a in self.zero_axes:
            w[..., a] = 0.0
        return w

    def distance(self, v) -> np.ndarray | float:
        v = np.asarray(v, dtype=float)
        out = np.linalg.norm(v - self.project(v), axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def contains(self, v, tolerance: float = 0.0) -> bool | np.ndarray:
        dist = self.distance(v)
        res = dist <= tolerance
        return bool(res) if np.ndim(res) == 0 else res

    @property
    def is_subspace(self) -> bool:
        return not self.half_axes

    @property
    def dim(self) -> int:
        """Dimension of the linear span of the cone."""
        return self.d - len(set(self.zero_axes))


@dataclass(frozen=True)
class Stratification:
    d: int
    hyperplanes: tuple[Hyperplane, ...]
    strata: tuple[Stratum, ...]
    snap_tolerance: float = DEFAULT_SNAP
    _lookup: dict = field(default=None, repr=False, compare=False)
    _star: tuple = field(default=None, repr=False, compare=False)
    _codes: np.ndarray = field(default=None, repr=False, compare=False)

    # ------------------------------------------------------------------ basics
    @property
    def n_strata(self) -> int:
        return len(self.strata)

    def __getitem__(self, sid: int) -> Stratum:
        return self.strata[sid]

    def cells(self) -> list[Stratum]:
        return [s for s in self.strata if s.kind == CELL]

    def interfaces(self) -> list[Stratum]:
        """All strata of dimension < d."""
        return [s for s in self.strata if s.kind != CELL]

    def id_of(self, signature: Sequence[int]) -> int:
        return self._lookup[tuple(int(s) for s in signature)]

    def plane_tolerance(self, j: int, snap: float | None = None) -> float:
        snap = self.snap_tolerance if snap is None else snap
        return snap * (1.0 + abs(self.hyperplanes[j].offset))

    def axis_planes(self, axis: int) -> list[int]:
        return [j for j, h in enumerate(self.hyperplanes) if h.axis == axis]

    def to_records(self) -> list[dict]:
        return [h.to_record() for h in self.hyperplanes]

    # --------------------------------------------------------------- location
    def signatures(self, X, snap: float | None = None) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        q = len(self.hyperplanes)
        sig = np.zeros((X.shape[0], q), dtype=np.int64)
        for j, h in enumerate(self.hyperplanes):
            diff = X[:, h.axis] - h.offset
            tol = self.plane_tolerance(j, snap)
            sig[:, j] = np.where(np.abs(diff) <= tol, 0, np.sign(diff)).astype(np.int64)
        return sig

    def locate_many(self, X, snap: float | None = None) -> np.ndarray:
        sig = self.signatures(X, snap)
        if sig.shape[1] == 0:
            return np.zeros(sig.shape[0], dtype=np.int64)
        code = self._encode(sig)
        return self._code_to_id[code]

    def locate(self, x, snap: float | None = None) -> int:
        return int(self.locate_many(np.asarray(x, dtype=float)[None, :], snap)[0])

    def _encode(self, sig: np.ndarray) -> np.ndarray:
        weights = 3 ** np.arange(sig.shape[1], dtype=np.int64)
        return ((sig + 1) * weights).sum(axis=1)

    @property
    def _code_to_id(self) -> np.ndarray:
        return self._codes

    def snap_point(self, x, snap: float | None = None) -> np.ndarray:
        """Move coordinates lying within tolerance of a plane exactly onto it."""
        x = np.array(x, dtype=float, copy=True)
        for j, h in enumerate(self.hyperplanes):
            tol = self.plane_tolerance(j, snap)
            col = x[..., h.axis]
            on = np.abs(col - h.offset) <= tol
            x[..., h.axis] = np.where(on, h.offset, col)
        return x

    # ------------------------------------------------------------- adjacency
    def in_closure(self, small: int, big: int) -> bool:
        """True when stratum `small` lies in the closure of stratum `big`."""
        a = self.strata[small].signature
        b = self.strata[big].signature
        return all(sa == sb or sa == 0 for sa, sb in zip(a, b))

    def star(self, sid: int) -> tuple[int, ...]:
        """Ids of strata whose closure contains stratum `sid` (itself included)."""
        return self._star[sid]

    def strata_containing_in_closure(self, x) -> tuple[int, ...]:
        return self.star(self.locate(x))

    def point_in_closure(self, sid: int, x, snap: float | None = None) -> bool:
        return self.locate(x, snap) in self.star_inverse(sid)

    def star_inverse(self, sid: int) -> tuple[int, ...]:
        """Ids of strata lying in the closure of `sid`."""
        return tuple(k for k in range(self.n_strata) if self.in_closure(k, sid))

    # ------------------------------------------------------------ geometry
    def tangent_cone(self, stratum_id: int, x, closure_of: int | None = None) -> ConeDescriptor:
        """Tangent space of a stratum, or tangent cone of a stratum closure at x.

        Without `closure_of` the linear tangent space of `stratum_id` is
        returned (x must lie in its closure).  With `closure_of` the cone of
        the closed set closure(closure_of) at x is returned.
        """
        x = np.asarray(x, dtype=float)
        target = stratum_id if closure_of is None else closure_of
        if not self.point_in_closure(target, x):
            raise PointNotInClosure(f"point {x.tolist()} is not in the closure of stratum {target}")
        sig = self.strata[target].signature
        zero_axes = sorted({self.hyperplanes[j].axis for j, s in enumerate(sig) if s == 0})
        if closure_of is None:
            return ConeDescriptor(self.d, tuple(zero_axes), ())
        half = []
        for j, s in enumerate(sig):
            if s == 0:
                continue
            h = self.hyperplanes[j]
            if abs(x[h.axis] - h.offset) <= self.plane_tolerance(j) and h.axis not in zero_axes:
                half.append((h.axis, int(s)))
        return ConeDescriptor(self.d, tuple(zero_axes), tuple(sorted(set(half))))

    def project_to_stratum(self, stratum_id: int, x) -> np.ndarray:
        """Euclidean projection onto the affine hull of the stratum."""
        y = np.array(x, dtype=float, copy=True)
        for axis, value in self.strata[stratum_id].fixed:
            y[..., axis] = value
        return y

    def distance_to_stratum(self, stratum_id: int, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.project_to_stratum(stratum_id, x)))

    def project_to_closure(self, stratum_id: int, x) -> np.ndarray:
        """Euclidean projection onto the closed stratum (a box-like polyhedron)."""
        y = self.project_to_stratum(stratum_id, x)
        sig = self.strata[stratum_id].signature
        for j, s in enumerate(sig):
            if s == 0:
                continue
            h = self.hyperplanes[j]
            if s > 0:
                y[..., h.axis] = np.maximum(y[..., h.axis], h.offset)
            else:
                y[..., h.axis] = np.minimum(y[..., h.axis], h.offset)
        return y

    def sample_points(self, stratum_id: int, n: int, box: tuple[float, float], rng) -> np.ndarray:
        """Uniform samples of the stratum intersected with the cube box^d."""
        lo, hi = box
        sig = self.strata[stratum_id].signature
        out = np.empty((n, self.d))
        for axis in range(self.d):
            a_lo, a_hi, fixed = lo, hi, None
            for j in self.axis_planes(axis):
                s, off = sig[j], self.hyperplanes[j].offset
                if s == 0:
                    fixed = off
                elif s > 0:
                    a_lo = max(a_lo, off)
                else:
                    a_hi = min(a_hi, off)
            if fixed is not None:
                out[:, axis] = fixed
            else:
                if a_hi <= a_lo:
                    raise PointNotInClosure(f"stratum {stratum_id} does not meet the sampling box")
                width = a_hi - a_lo
                # keep samples off the bounding planes
                out[:, axis] = a_lo + width * (0.02 + 0.96 * rng.random(n))
        return out


def _axis_patterns(offsets: list[float]) -> list[tuple[int, ...]]:
    """Sign patterns over sorted parallel planes, one per position along the axis."""
    n = len(offsets)
    pats = []
    for k in range(n + 1):
        # open interval between plane k-1 and plane k
        pats.append(tuple(+1 if j < k else -1 for j in range(n)))
        if k < n:
            pats.append(tuple(+1 if j < k else (0 if j == k else -1) for j in range(n)))
    return pats


def build_stratification(
    hyperplanes: Iterable[Hyperplane], d: int | None = None, snap_tolerance: float = DEFAULT_SNAP
) -> Stratification:
    """Enumerate all sign-signature strata of an axis-aligned hyperplane family.

    Ids are assigned in lexicographic order of the signatures.
    """
    planes = tuple(Hyperplane(int(h.axis), float(h.offset)) for h in hyperplanes)
    if d is None:
        d = 1 + max((h.axis for h in planes), default=0)
    if d < 1:
        raise NonPositiveDimension(f"dimension must be >= 1, got {d}")
    if snap_tolerance < 0:
        raise ValueError("snap_tolerance must be >= 0")
    seen = set()
    for h in planes:
        if not 0 <= h.axis < d:
            raise ValueError(f"hyperplane axis {h.axis} outside 0..{d - 1}")
        key = (h.axis, h.offset)
        if key in seen:
            raise DuplicateHyperplane(f"duplicate hyperplane x[{h.axis}] = {h.offset}")
        seen.add(key)

    q = len(planes)
    per_axis = []
    for axis in range(d):
        idx = sorted((j for j in range(q) if planes[j].axis == axis), key=lambda j: planes[j].offset)
        per_axis.append((idx, _axis_patterns([planes[j].offset for j in idx])))

    sigs = []
    for combo in itertools.product(*(p for _, p in per_axis)):
        sig = [0] * q
        for (idx, _), pat in zip(per_axis, combo):
            for j, s in zip(idx, pat):
                sig[j] = s
        sigs.append(tuple(sig))
    sigs.sort()

    strata = []
    for sid, sig in enumerate(sigs):
        zero_planes = [j for j in range(q) if sig[j] == 0]
        zero_axes = {planes[j].axis for j in zero_planes}
        dim = d - len(zero_axes)
        if not zero_planes:
            kind = CELL
        elif len(zero_axes) >= 2:
            kind = INTERSECTION
        else:
            kind = INTERFACE
        fixed = tuple(sorted((planes[j].axis, planes[j].offset) for j in zero_planes))
        strata.append(Stratum(sid, sig, dim, kind, fixed))

    lookup = {s.signature: s.id for s in strata}
    codes = np.full(3 ** q if q else 1, -1, dtype=np.int64)
    weights = 3 ** np.arange(q, dtype=np.int64)
    for s in strata:
        codes[int(((np.array(s.signature, dtype=np.int64) + 1) * weights).sum()) if q else 0] = s.id

    star = []
    for s in strata:
        star.append(
            tuple(
                t.id
                for t in strata
                if all(a == b or a == 0 for a, b in zip(s.signature, t.signature))
            )
        )

    return Stratification(d, planes, tuple(strata), float(snap_tolerance), lookup, tuple(star), codes)
