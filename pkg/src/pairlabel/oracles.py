"""Exact and statistical references for the fixed-point algorithms.

Everything here is deliberately independent of the fast paths: full
enumeration for minima and per-vertex optimal values, a column dynamic
program for grids, an explicit Bellman backup that enumerates whole
action tuples, and Monte-Carlo evaluation of walk policies.  Size guards
raise `CapacityError` rather than silently truncating.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import CapacityError, InvalidInputError
from .model import (
    cost_max_value,
    energy,
    grid_graph,
    materialize_cost,
    pairwise_value,
)

__all__ = [
    "MdpInstance",
    "WalkPolicy",
    "brute_force_min",
    "column_dp_min",
    "geometric_tail_bound",
    "greedy_policy_from",
    "max_marginals",
    "mdp_bellman",
    "monte_carlo_value",
    "walk_energy_prefix",
]

BRUTE_FORCE_LIMIT = 2**24
COLUMN_STATE_LIMIT = 2**16
ACTION_LIMIT = 2**20
_CHUNK = 2**16


def _edge_index(graph, i, j):
    """Canonical edge index of {i, j}; raises if absent."""
    lo, hi = (i, j) if i < j else (j, i)
    key = graph.edges[:, 0] * graph.n + graph.edges[:, 1]
    e = int(np.searchsorted(key, lo * graph.n + hi))
    if e >= graph.m or graph.edges[e, 0] != lo or graph.edges[e, 1] != hi:
        raise InvalidInputError(f"vertices {i},{j} are not adjacent")
    return e


def _enumerate_labelings(n, k):
    """Yield labeling chunks in lexicographic order.

    Vertex 0 is the most significant digit, so chunk-local first argmins
    are global lexicographic tie-breaks.
    """
    total = k**n
    powers = k ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        yield (idx[:, None] // powers[None, :]) % k


def _chunk_energies(model, labelings, tables):
    e = model.unary[0][labelings[:, 0]].copy()
    for i in range(1, model.n):
        e += model.unary[i][labelings[:, i]]
    edges = model.graph.edges
    for t, table in enumerate(tables):
        e += table[labelings[:, edges[t, 0]], labelings[:, edges[t, 1]]]
    return e


def _guard_enumeration(model):
    n, k = model.n, model.num_labels
    if k**n > BRUTE_FORCE_LIMIT:
        raise CapacityError(
            f"enumeration over {k}^{n} labelings exceeds the size guard"
        )
    return [materialize_cost(c, k) for c in model.edge_costs]


def brute_force_min(model):
    """Exact global minimum by enumeration; ties go to the smallest labeling.

    The returned value is the canonical `energy` of the winning
    labeling, so it is bit-comparable with other oracles that evaluate
    their results the same way.
    """
    tables = _guard_enumeration(model)
    best_val = np.inf
    best_x = None
    for labelings in _enumerate_labelings(model.n, model.num_labels):
        e = _chunk_energies(model, labelings, tables)
        j = int(np.argmin(e))
        if e[j] < best_val:
            best_val = float(e[j])
            best_x = labelings[j].copy()
    return best_x, energy(model, best_x)


def max_marginals(model):
    """f[i, t] = minimum energy over labelings with vertex i at label t."""
    tables = _guard_enumeration(model)
    f = np.full((model.n, model.num_labels), np.inf)
    for labelings in _enumerate_labelings(model.n, model.num_labels):
        e = _chunk_energies(model, labelings, tables)
        for i in range(model.n):
            np.minimum.at(f[i], labelings[:, i], e)
    return f


# ---------------------------------------------------------------------------
# Column dynamic programming on grids
# ---------------------------------------------------------------------------


def _digits(states, rows, k):
    """(states, rows) digit matrix; row 0 is the most significant digit."""
    powers = k ** np.arange(rows - 1, -1, -1, dtype=np.int64)
    return (np.arange(states, dtype=np.int64)[:, None] // powers[None, :]) % k


def column_dp_min(model, shape):
    """Exact minimum on a grid model via dynamic programming over columns.

    Each super-node is a full column labeling (k^rows states).  The
    returned value is the canonical energy of the backtracked labeling,
    so it is directly comparable with `brute_force_min`.
    """
    rows, cols = shape
    graph = model.graph
    expected = grid_graph(rows, cols)
    if graph.n != expected.n or not np.array_equal(graph.edges, expected.edges):
        raise InvalidInputError("model graph is not the expected grid")
    k = model.num_labels
    states = k**rows
    if states > COLUMN_STATE_LIMIT:
        raise CapacityError(f"{k}^{rows} column states exceed the size guard")

    cost_of = {
        (int(graph.edges[e, 0]), int(graph.edges[e, 1])): materialize_cost(
            model.edge_costs[e], k
        )
        for e in range(graph.m)
    }
    digits = _digits(states, rows, k)
    unary = model.unary

    def node_cost(c):
        out = np.zeros(states)
        for r in range(rows):
            out += unary[r * cols + c][digits[:, r]]
        for r in range(rows - 1):
            out += cost_of[(r * cols + c, (r + 1) * cols + c)][
                digits[:, r], digits[:, r + 1]
            ]
        return out

    def horizontal_tables(c):
        return [cost_of[(r * cols + c, r * cols + c + 1)] for r in range(rows)]

    def min_plus_transition(values, tables):
        """out[t] = min_s values[s] + sum_r tables[r][s_r, t_r], digit by digit."""
        acc = values.reshape((k,) * rows)
        for r in range(rows):
            m = np.moveaxis(acc, r, 0).reshape(k, -1)
            combined = (m[:, None, :] + tables[r][:, :, None]).min(axis=0)
            acc = np.moveaxis(combined.reshape((k,) * rows), 0, r)
        return acc.reshape(-1)

    value = [node_cost(0)]
    for c in range(1, cols):
        value.append(
            min_plus_transition(value[-1], horizontal_tables(c - 1)) + node_cost(c)
        )

    chosen = np.empty(cols, dtype=np.int64)
    chosen[cols - 1] = int(np.argmin(value[cols - 1]))
    for c in range(cols - 2, -1, -1):
        tables = horizontal_tables(c)
        t_digits = digits[chosen[c + 1]]
        trans = np.zeros(states)
        for r in range(rows):
            trans += tables[r][digits[:, r], t_digits[r]]
        chosen[c] = int(np.argmin(value[c] + trans))

    x = np.empty(rows * cols, dtype=np.int64)
    for c in range(cols):
        x[np.arange(rows) * cols + c] = digits[chosen[c]]
    return x, energy(model, x)


# ---------------------------------------------------------------------------
# The walk-induced decision process
# ---------------------------------------------------------------------------


class MdpInstance:
    """Discounted decision process induced by random walks on a model.

    States are (vertex, label) pairs.  An action picks one label per
    neighbor; the walk then moves to neighbor j with probability w_ij
    and adopts the label the action chose for j.  The discount factor
    is q = 1 - p.
    """

    def __init__(self, model, p):
        if not (0.0 < p < 1.0):
            raise InvalidInputError("damping p must lie in (0, 1)")
        worst = max(model.num_labels ** int(d) for d in model.graph.degrees)
        if worst > ACTION_LIMIT:
            raise CapacityError("action tuple space exceeds the size guard")
        self.model = model
        self.p = p
        self.q = 1.0 - p

    def action_cost(self, i, tau, action):
        """c((i, tau), action) with the action in adjacency order."""
        model = self.model
        graph = model.graph
        lo, hi = graph.adj_offsets[i], graph.adj_offsets[i + 1]
        w = model.weights.values[lo:hi]
        total = self.p * model.unary[i, tau]
        for local, j in enumerate(graph.neighbors(i)):
            j = int(j)
            cost = model.edge_costs[_edge_index(graph, i, j)]
            total += self.p * w[local] * pairwise_value(
                cost, tau, int(action[local]), reverse=i > j
            )
        return float(total)


def mdp_bellman(mdp, v):
    """One exact Bellman backup, enumerating full action tuples.

    `v` is an (n, k) state-value table.  For every state the backup
    materializes the cost-plus-expected-value of all k^deg actions and
    takes the minimum, staying independent of the per-neighbor
    decomposition the fast map uses.
    """
    model = mdp.model
    graph = model.graph
    n, k = model.n, model.num_labels
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (n, k):
        raise InvalidInputError("state values must be shaped (n, k)")
    out = np.empty_like(v)
    p, q = mdp.p, mdp.q
    for i in range(n):
        nb = [int(j) for j in graph.neighbors(i)]
        lo = graph.adj_offsets[i]
        w = model.weights.values[lo:lo + len(nb)]
        costs = [model.edge_costs[_edge_index(graph, i, j)] for j in nb]
        for tau in range(k):
            terms = np.empty((len(nb), k))
            for local, j in enumerate(nb):
                hrow = np.array(
                    [
                        pairwise_value(costs[local], tau, u, reverse=i > j)
                        for u in range(k)
                    ]
                )
                terms[local] = p * w[local] * hrow + q * w[local] * v[j]
            acc = np.zeros(())
            for local in range(len(nb)):
                acc = acc[..., None] + terms[local]
            out[i, tau] = p * model.unary[i, tau] + acc.min()
    return out


# ---------------------------------------------------------------------------
# Walk unwrapping and policy evaluation
# ---------------------------------------------------------------------------


def geometric_tail_bound(model, p, horizon):
    """Upper bound on the discounted walk cost beyond `horizon` steps."""
    max_g = float(model.unary.max())
    max_h = max(cost_max_value(c, model.num_labels) for c in model.edge_costs)
    return (1.0 - p) ** horizon * (max_g + max_h)


def walk_energy_prefix(model, p, walk, labels, horizon):
    """Discounted cost of the first `horizon` steps along a walk.

    Returns (value, tail_bound): value sums p*q^t*(unary + step cost)
    for t < horizon, and tail_bound caps everything discarded after.
    """
    if not (0.0 < p < 1.0):
        raise InvalidInputError("damping p must lie in (0, 1)")
    if horizon < 0:
        raise InvalidInputError("horizon must be >= 0")
    if len(walk) < horizon + 1 or len(labels) < horizon + 1:
        raise InvalidInputError("walk and labels must cover horizon + 1 steps")
    graph = model.graph
    q = 1.0 - p
    value = 0.0
    disc = p
    for t in range(horizon):
        i, j = int(walk[t]), int(walk[t + 1])
        cost = model.edge_costs[_edge_index(graph, i, j)]
        step = model.unary[i, int(labels[t])] + pairwise_value(
            cost, int(labels[t]), int(labels[t + 1]), reverse=i > j
        )
        value += disc * step
        disc *= q
    return value, geometric_tail_bound(model, p, horizon)


class WalkPolicy:
    """Next-label rule along a walk: (vertex, label, next vertex) -> label."""

    def __init__(self, graph, table):
        self.graph = graph
        self.table = table  # (darts, k) next-label indices

    def __call__(self, i, tau, j):
        return int(self.table[self.graph.dart_index(i, j), tau])


def greedy_policy_from(phi, model, p):
    """Greedy one-step policy against a control field.

    pi(i, t, j) minimizes p*h_ij(t, u) + q*phi_j(u) over u, ties to the
    smallest label.
    """
    if not (0.0 < p < 1.0):
        raise InvalidInputError("damping p must lie in (0, 1)")
    phi = np.asarray(phi, dtype=np.float64)
    graph = model.graph
    k = model.num_labels
    q = 1.0 - p
    table = np.empty((graph.adj_targets.shape[0], k), dtype=np.int64)
    for i in range(graph.n):
        for j in graph.neighbors(i):
            j = int(j)
            h = materialize_cost(
                model.edge_costs[_edge_index(graph, i, j)], k, reverse=i > j
            )
            table[graph.dart_index(i, j)] = np.argmin(
                p * h + q * phi[j][None, :], axis=1
            )
    return WalkPolicy(graph, table)


def monte_carlo_value(model, p, policy, start, samples, horizon, seed):
    """Average discounted cost of walks driven by `policy` from `start`.

    Walk vertices follow the model's weights; labels follow the policy.
    Returns (mean, stderr) over `samples` truncated walks; combine with
    `geometric_tail_bound` for the truncation slack.
    """
    if not (0.0 < p < 1.0):
        raise InvalidInputError("damping p must lie in (0, 1)")
    if samples < 2:
        raise InvalidInputError("need at least two samples")
    graph = model.graph
    n, k = model.n, model.num_labels
    q = 1.0 - p
    rng = np.random.default_rng(seed)

    tables = np.stack([materialize_cost(c, k) for c in model.edge_costs])
    eid = np.full((n, n), -1, dtype=np.int64)
    eid[graph.edges[:, 0], graph.edges[:, 1]] = np.arange(graph.m)
    eid[graph.edges[:, 1], graph.edges[:, 0]] = np.arange(graph.m)
    cumw = [
        np.cumsum(model.weights.values[graph.adj_offsets[i]:graph.adj_offsets[i + 1]])
        for i in range(n)
    ]

    v = np.full(samples, int(start[0]), dtype=np.int64)
    z = np.full(samples, int(start[1]), dtype=np.int64)
    total = np.zeros(samples)
    disc = p
    for _ in range(horizon):
        total += disc * model.unary[v, z]
        nv = np.empty_like(v)
        nz = np.empty_like(z)
        for i in range(n):
            mask = v == i
            count = int(mask.sum())
            if count == 0:
                continue
            draws = rng.random(count)
            local = np.searchsorted(cumw[i], draws, side="right")
            local = np.minimum(local, graph.degrees[i] - 1)
            nv[mask] = graph.neighbors(i)[local]
            nz[mask] = policy.table[graph.adj_offsets[i] + local, z[mask]]
        e = eid[v, nv]
        lo_label = np.where(v < nv, z, nz)
        hi_label = np.where(v < nv, nz, z)
        total += disc * tables[e, lo_label, hi_label]
        v, z = nv, nz
        disc *= q
    mean = float(total.mean())
    stderr = float(total.std(ddof=1) / math.sqrt(samples))
    return mean, stderr
