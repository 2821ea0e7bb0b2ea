"""Hamiltonians sup_a {-p . f(x, a) - l(x, a)} over three admissible control sets.

All functions accept a single costate of shape (d,) or a batch of shape (m, d)
and return a float or an array of shape (m,) accordingly.
"""

from __future__ import annotations

import numpy as np

from .control import ControlProblem, essential_controls
from .errors import EmptyEssentialSet, NotOnInterface
from .stratification import CELL


def _sup(V: np.ndarray, L: np.ndarray, p) -> float | np.ndarray:
    p = np.asarray(p, dtype=float)
    P2 = np.atleast_2d(p)
    if V.shape[0] == 0:
        out = np.full(P2.shape[0], -np.inf)
    else:
        out = np.max(-(P2 @ V.T) - L[None, :], axis=1)
    return float(out[0]) if p.ndim == 1 else out


def H_F(P: ControlProblem, x, p):
    x = np.asarray(x, dtype=float)
    sid = P.strat.locate(x)
    return _sup(P.velocities(sid, x)[0], P.costs(sid, x)[0], p)


def H_E(P: ControlProblem, x, p):
    x = np.asarray(x, dtype=float)
    feas = essential_controls(P, x)
    V, L = [], []
    for sid, idx in feas.essential.items():
        if idx:
            V.append(P.velocities(sid, x)[0, idx])
            L.append(P.costs(sid, x)[0, idx])
    if not V:
        raise EmptyEssentialSet(f"no essential control at x = {x.tolist()}")
    return _sup(np.vstack(V), np.concatenate(L), p)


def H_Gamma(P: ControlProblem, interface_id: int, x, p):
    x = np.asarray(x, dtype=float)
    st = P.strat[interface_id]
    if st.kind == CELL or P.strat.locate(x) != interface_id:
        raise NotOnInterface(f"x = {x.tolist()} is not on interface stratum {interface_id}")
    feas = essential_controls(P, x)
    idx = feas.tangential
    return _sup(P.velocities(interface_id, x)[0, idx], P.costs(interface_id, x)[0, idx], p)
