"""Semi-Lagrangian update kernels.

One backward step maps old values to new ones:

    D[p]   = min_c  cost[c] + sum_k w[c, k] * old[idx[c, k]]     (candidates c of pair p)
    own[n] = min_p  D[p]                                          (pairs p of node n)

Continuous mode writes own[n] per node.  Layered mode writes one value per
pair: own for the node's own pair, min(D, own) for pairs flagged outward, D
otherwise.

STRATAHJB_USE_NUMBA=0 selects the numpy implementation.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit, prange
except ImportError:  # pragma: no cover
    numba = None

if numba is not None and "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is too old; avoid the probe warning
    numba.config.THREADING_LAYER = "workqueue"

USE_NUMBA = numba is not None and os.environ.get("STRATAHJB_USE_NUMBA", "1") != "0"

if numba is not None and os.environ.get("STRATAHJB_THREADS"):
    numba.set_num_threads(max(1, min(int(os.environ["STRATAHJB_THREADS"]), numba.config.NUMBA_NUM_THREADS)))


def sl_step_numpy(old, cand_ptr, corner_idx, corner_w, cost, node_ptr, own_pos, outward, layered, out):
    # same accumulation order as the compiled loop, so both backends agree bit for bit
    terms = old[corner_idx] * corner_w
    vals = cost.copy()
    for k in range(terms.shape[1]):
        vals += terms[:, k]
    n_pairs = cand_ptr.size - 1
    D = np.full(n_pairs, np.inf)
    nonempty = cand_ptr[1:] > cand_ptr[:-1]
    if vals.size:
        D[nonempty] = np.minimum.reduceat(vals, cand_ptr[:-1][nonempty])
    own = np.minimum.reduceat(D, node_ptr[:-1])
    if not layered:
        out[:] = own
        return out
    node_of_pair = np.repeat(np.arange(own.size), np.diff(node_ptr))
    res = np.where(outward, np.minimum(D, own[node_of_pair]), D)
    res[own_pos] = own
    out[:] = res
    return out


if numba is not None:

    @njit(parallel=True, cache=True, fastmath=False)
    def _sl_step_numba(old, cand_ptr, corner_idx, corner_w, cost, node_ptr, own_pos, outward, layered, out, work):
        n_nodes = node_ptr.size - 1
        n_corner = corner_idx.shape[1]
        for n in prange(n_nodes):
            own = np.inf
            for p in range(node_ptr[n], node_ptr[n + 1]):
                best = np.inf
                for c in range(cand_ptr[p], cand_ptr[p + 1]):
                    v = cost[c]
                    for k in range(n_corner):
                        v += corner_w[c, k] * old[corner_idx[c, k]]
                    if v < best:
                        best = v
                work[p] = best
                if best < own:
                    own = best
            if not layered:
                out[n] = own
            else:
                for p in range(node_ptr[n], node_ptr[n + 1]):
                    if p == own_pos[n]:
                        out[p] = own
                    elif outward[p] and own < work[p]:
                        out[p] = own
                    else:
                        out[p] = work[p]
        return out

    def sl_step_numba(old, cand_ptr, corner_idx, corner_w, cost, node_ptr, own_pos, outward, layered, out, work=None):
        if work is None:
            work = np.empty(cand_ptr.size - 1)
        return _sl_step_numba(old, cand_ptr, corner_idx, corner_w, cost, node_ptr, own_pos, outward, layered, out, work)

else:  # pragma: no cover
    sl_step_numba = None


def sl_step(old, cand_ptr, corner_idx, corner_w, cost, node_ptr, own_pos, outward, layered, out, work=None,
            backend: str | None = None):
    backend = backend or ("numba" if USE_NUMBA else "numpy")
    if backend == "numba":
        if sl_step_numba is None:
            raise RuntimeError("numba is not available")
        return sl_step_numba(old, cand_ptr, corner_idx, corner_w, cost, node_ptr, own_pos, outward, layered, out, work)
    return sl_step_numpy(old, cand_ptr, corner_idx, corner_w, cost, node_ptr, own_pos, outward, layered, out)
