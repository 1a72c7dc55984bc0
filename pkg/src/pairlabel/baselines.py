"""Comparison solvers: coordinate-descent local search and damped min-sum
belief propagation.

Neither carries convergence guarantees on loopy graphs; they are the
reference points the experiment protocols compare the contraction maps
against.
"""

from __future__ import annotations

import numpy as np

from .engine import DartEngine
from .errors import NumericalFailureError
from .model import cost_column, validate_labeling

__all__ = ["icm", "min_sum_bp"]


def icm(model, x0, max_sweeps=1000):
    """Iterated conditional modes from x0.

    Sweeps vertices in ascending order; a vertex moves only if some
    label strictly improves its local conditional cost (ties keep the
    current label), so the energy never increases and the result is a
    single-flip local minimum when a sweep finishes without changes.
    """
    x = validate_labeling(model, x0).copy()
    graph = model.graph
    k = model.num_labels
    edge_of_dart = _dart_edges(graph)
    for _ in range(max_sweeps):
        changed = False
        for i in range(graph.n):
            local = model.unary[i].copy()
            lo, hi = graph.adj_offsets[i], graph.adj_offsets[i + 1]
            for d in range(lo, hi):
                j = graph.adj_targets[d]
                local += cost_column(
                    model.edge_costs[edge_of_dart[d]], k, int(x[j]), reverse=i > j
                )
            best = int(np.argmin(local))
            if local[best] < local[x[i]]:
                x[i] = best
                changed = True
        if not changed:
            break
    return x


def _dart_edges(graph):
    src = np.repeat(np.arange(graph.n, dtype=np.int64), graph.degrees)
    dst = graph.adj_targets
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    key = graph.edges[:, 0] * graph.n + graph.edges[:, 1]
    return np.searchsorted(key, lo * graph.n + hi)


def min_sum_bp(model, damping=0.5, iterations=1000, return_messages=False):
    """Synchronous damped min-sum belief propagation; returns beliefs.

    Messages live on darts (msg[d] flows into the dart's first vertex
    from its second), start at zero, and are renormalized to minimum
    zero after every damped update.  Beliefs are the unary costs plus
    all incoming messages; decode them with `maps.decode`.  With
    `return_messages` the final message table comes back alongside the
    beliefs.

    On trees with damping 0 and at least diameter-many iterations the
    decoded beliefs minimize the energy.
    """
    if not (0.0 <= damping < 1.0):
        raise ValueError("damping must lie in [0, 1)")
    engine = DartEngine(model)
    unary = model.unary
    offsets = engine.offsets
    msg = np.zeros((engine.dst.shape[0], model.num_labels))
    for it in range(1, iterations + 1):
        sum_in = np.add.reduceat(msg, offsets[:-1], axis=0)
        c_all = unary[engine.dst] + sum_in[engine.dst] - msg[engine.rev]
        raw = engine.messages(c_all, 1.0)
        raw -= raw.min(axis=1)[:, None]
        msg = (1.0 - damping) * raw + damping * msg
        msg -= msg.min(axis=1)[:, None]
        if not np.all(np.isfinite(msg)):
            raise NumericalFailureError(
                f"non-finite message at iteration {it}", iteration=it
            )
    beliefs = unary + np.add.reduceat(msg, offsets[:-1], axis=0)
    if return_messages:
        return beliefs, msg
    return beliefs
