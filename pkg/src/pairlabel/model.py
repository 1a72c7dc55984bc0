"""Problem instances: graph topology, label costs and random-walk weights.

A problem instance couples an undirected connected graph with per-vertex
label costs, per-edge pairwise costs and row-stochastic walk weights.
Vertices are 0-based integers internally (the text file format is
1-based, see `modelio`); labels are 0-based everywhere.

The total cost of a labeling x is

    energy(x) = sum_i unary[i][x_i] + sum_{edges {i,j}} h_ij(x_i, x_j)

with each edge counted once.  Pairwise costs are stored once per edge in
canonical orientation (lower vertex first); reversed access transposes
the lookup, which enforces h_ij(a,b) = h_ji(b,a) by construction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "DenseTable",
    "Graph",
    "Model",
    "Potts",
    "StereoTwoStep",
    "TruncatedLinear",
    "TruncatedQuadratic",
    "WalkWeights",
    "build_graph",
    "build_model",
    "cost_column",
    "cost_max_value",
    "energy",
    "grid_graph",
    "ising_to_model",
    "materialize_cost",
    "normalize_nonnegative",
    "pairwise_value",
    "scale_cost",
    "uniform_weights",
    "validate_labeling",
]


def _frozen(a, dtype=None):
    out = np.ascontiguousarray(a, dtype=dtype)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# Pairwise cost forms
# ---------------------------------------------------------------------------
# Structured forms are symmetric in (a, b), so orientation only matters for
# dense tables.  Structured parameters must be nonnegative at construction;
# dense tables may carry negative entries until `normalize_nonnegative`.


@dataclass(frozen=True)
class DenseTable:
    """Explicit k-by-k cost table, stored for the canonical orientation."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise InvalidInputError("dense table must be square")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("dense table entries must be finite")
        object.__setattr__(self, "values", _frozen(v))


@dataclass(frozen=True)
class TruncatedQuadratic:
    """scale * min((a-b)^2, cap)."""

    scale: float
    cap: float

    def __post_init__(self):
        if not (np.isfinite(self.scale) and np.isfinite(self.cap)):
            raise InvalidInputError("truncated quadratic parameters must be finite")
        if self.scale < 0 or self.cap < 0:
            raise InvalidInputError("truncated quadratic requires scale >= 0 and cap >= 0")
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "cap", float(self.cap))


@dataclass(frozen=True)
class TruncatedLinear:
    """scale * min(|a-b|, cap)."""

    scale: float
    cap: float

    def __post_init__(self):
        if not (np.isfinite(self.scale) and np.isfinite(self.cap)):
            raise InvalidInputError("truncated linear parameters must be finite")
        if self.scale < 0 or self.cap < 0:
            raise InvalidInputError("truncated linear requires scale >= 0 and cap >= 0")
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "cap", float(self.cap))


@dataclass(frozen=True)
class StereoTwoStep:
    """0 for equal labels, `step` for adjacent labels, `jump` otherwise."""

    step: float
    jump: float

    def __post_init__(self):
        if not (np.isfinite(self.step) and np.isfinite(self.jump)):
            raise InvalidInputError("two-step parameters must be finite")
        if self.step < 0:
            raise InvalidInputError("two-step requires step >= 0")
        if not self.step < self.jump:
            raise InvalidInputError("two-step requires step < jump")
        object.__setattr__(self, "step", float(self.step))
        object.__setattr__(self, "jump", float(self.jump))


@dataclass(frozen=True)
class Potts:
    """0 for equal labels, `penalty` otherwise."""

    penalty: float

    def __post_init__(self):
        if not np.isfinite(self.penalty) or self.penalty < 0:
            raise InvalidInputError("Potts penalty must be finite and >= 0")
        object.__setattr__(self, "penalty", float(self.penalty))


def pairwise_value(cost, a, b, reverse=False):
    """Value of a pairwise cost for labels (a, b).

    `reverse=True` evaluates the cost in the reversed edge orientation,
    i.e. with (a, b) referring to (higher, lower) vertex rather than the
    canonical (lower, higher) one.  Only dense tables are sensitive to it.
    """
    if isinstance(cost, DenseTable):
        return float(cost.values[b, a]) if reverse else float(cost.values[a, b])
    if isinstance(cost, TruncatedQuadratic):
        d = float(a) - float(b)
        return cost.scale * min(d * d, cost.cap)
    if isinstance(cost, TruncatedLinear):
        return cost.scale * min(abs(float(a) - float(b)), cost.cap)
    if isinstance(cost, StereoTwoStep):
        d = abs(int(a) - int(b))
        if d == 0:
            return 0.0
        return cost.step if d == 1 else cost.jump
    if isinstance(cost, Potts):
        return 0.0 if a == b else cost.penalty
    raise InvalidInputError(f"unknown pairwise cost {cost!r}")


def materialize_cost(cost, k, reverse=False):
    """Dense k-by-k table realizing `cost` (reference for the fast kernels)."""
    if isinstance(cost, DenseTable):
        if cost.values.shape[0] != k:
            raise InvalidInputError("dense table size does not match label count")
        return cost.values.T.copy() if reverse else cost.values.copy()
    a = np.arange(k, dtype=np.float64)
    d = a[:, None] - a[None, :]
    if isinstance(cost, TruncatedQuadratic):
        return cost.scale * np.minimum(d * d, cost.cap)
    if isinstance(cost, TruncatedLinear):
        return cost.scale * np.minimum(np.abs(d), cost.cap)
    if isinstance(cost, StereoTwoStep):
        ad = np.abs(d)
        return np.where(ad == 0, 0.0, np.where(ad == 1, cost.step, cost.jump))
    if isinstance(cost, Potts):
        return np.where(d == 0, 0.0, cost.penalty)
    raise InvalidInputError(f"unknown pairwise cost {cost!r}")


def cost_column(cost, k, b, reverse=False):
    """Vector of values h(a, b) over all a, for a fixed second label b."""
    if isinstance(cost, DenseTable):
        col = cost.values[b, :] if reverse else cost.values[:, b]
        return np.asarray(col, dtype=np.float64)
    a = np.arange(k, dtype=np.float64)
    d = a - float(b)
    if isinstance(cost, TruncatedQuadratic):
        return cost.scale * np.minimum(d * d, cost.cap)
    if isinstance(cost, TruncatedLinear):
        return cost.scale * np.minimum(np.abs(d), cost.cap)
    if isinstance(cost, StereoTwoStep):
        ad = np.abs(d)
        return np.where(ad == 0, 0.0, np.where(ad == 1, cost.step, cost.jump))
    if isinstance(cost, Potts):
        return np.where(d == 0, 0.0, cost.penalty)
    raise InvalidInputError(f"unknown pairwise cost {cost!r}")


def cost_min_value(cost, k):
    """Minimum realized value over all label pairs."""
    if isinstance(cost, DenseTable):
        return float(cost.values.min())
    return 0.0  # structured forms attain 0 at equal labels


def cost_max_value(cost, k):
    """Maximum realized value over all label pairs."""
    if isinstance(cost, DenseTable):
        return float(cost.values.max())
    if k == 1:
        return 0.0
    if isinstance(cost, TruncatedQuadratic):
        return cost.scale * min(float(k - 1) ** 2, cost.cap)
    if isinstance(cost, TruncatedLinear):
        return cost.scale * min(float(k - 1), cost.cap)
    if isinstance(cost, StereoTwoStep):
        return cost.step if k == 2 else cost.jump
    if isinstance(cost, Potts):
        return cost.penalty
    raise InvalidInputError(f"unknown pairwise cost {cost!r}")


def scale_cost(cost, factor):
    """Pairwise cost whose values are `factor` times those of `cost`."""
    if factor < 0:
        raise InvalidInputError("scale factor must be >= 0")
    if isinstance(cost, DenseTable):
        return DenseTable(cost.values * factor)
    if isinstance(cost, TruncatedQuadratic):
        return TruncatedQuadratic(cost.scale * factor, cost.cap)
    if isinstance(cost, TruncatedLinear):
        return TruncatedLinear(cost.scale * factor, cost.cap)
    if isinstance(cost, StereoTwoStep):
        return StereoTwoStep(cost.step * factor, cost.jump * factor)
    if isinstance(cost, Potts):
        return Potts(cost.penalty * factor)
    raise InvalidInputError(f"unknown pairwise cost {cost!r}")


# ---------------------------------------------------------------------------
# Graph
# ---------------------------------------------------------------------------


class Graph:
    """Simple connected undirected graph with 0-based vertices.

    Attributes:
        n: vertex count.
        edges: (m, 2) array with edges[e, 0] < edges[e, 1], sorted
            lexicographically (the canonical edge order).
        adj_offsets / adj_targets: flattened sorted adjacency; the
            neighbors of i are adj_targets[adj_offsets[i]:adj_offsets[i+1]].
        degrees: (n,) vertex degrees.
    """

    def __init__(self, n, edges, adj_offsets, adj_targets, degrees):
        self.n = n
        self.edges = edges
        self.adj_offsets = adj_offsets
        self.adj_targets = adj_targets
        self.degrees = degrees
        self.m = edges.shape[0]

    def neighbors(self, i):
        return self.adj_targets[self.adj_offsets[i]:self.adj_offsets[i + 1]]

    def dart_index(self, i, j):
        """Position of the dart i->j in the flattened adjacency."""
        lo, hi = self.adj_offsets[i], self.adj_offsets[i + 1]
        pos = lo + int(np.searchsorted(self.adj_targets[lo:hi], j))
        if pos >= hi or self.adj_targets[pos] != j:
            raise InvalidInputError(f"no edge {{{i},{j}}}")
        return pos


def build_graph(n, edges):
    """Validate an edge list and build a `Graph`.

    Rejects self-loops, duplicate edges, out-of-range vertices and
    disconnected graphs; requires n >= 2.
    """
    if n < 2:
        raise InvalidInputError("graph needs at least two vertices")
    e = np.asarray(list(edges), dtype=np.int64)
    if e.ndim != 2 or e.shape[1] != 2:
        raise InvalidInputError("edges must be pairs of vertices")
    if e.shape[0] == 0:
        raise InvalidInputError("graph has no edges")
    if e.min() < 0 or e.max() >= n:
        raise InvalidInputError("edge endpoint out of range")
    lo = np.minimum(e[:, 0], e[:, 1])
    hi = np.maximum(e[:, 0], e[:, 1])
    if np.any(lo == hi):
        raise InvalidInputError("self-loops are not allowed")
    order = np.lexsort((hi, lo))
    lo, hi = lo[order], hi[order]
    if np.any((lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])):
        raise InvalidInputError("duplicate edges are not allowed")
    m = lo.shape[0]

    ends = np.concatenate([lo, hi])
    other = np.concatenate([hi, lo])
    degrees = np.bincount(ends, minlength=n)
    if degrees.min() == 0:
        raise InvalidInputError("graph is not connected (isolated vertex)")
    adj_offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degrees, out=adj_offsets[1:])
    order = np.lexsort((other, ends))
    adj_targets = other[order]

    # connectivity via BFS over the flattened adjacency
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    reached = 1
    while queue:
        v = queue.popleft()
        for w in adj_targets[adj_offsets[v]:adj_offsets[v + 1]]:
            if not seen[w]:
                seen[w] = True
                reached += 1
                queue.append(w)
    if reached != n:
        raise InvalidInputError("graph is not connected")

    edges_arr = np.stack([lo, hi], axis=1)
    return Graph(
        n,
        _frozen(edges_arr),
        _frozen(adj_offsets),
        _frozen(adj_targets),
        _frozen(degrees),
    )


def grid_graph(rows, cols):
    """4-connected grid; vertex (r, c) has index r*cols + c."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise InvalidInputError("grid must contain at least two vertices")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return build_graph(rows * cols, edges)


# ---------------------------------------------------------------------------
# Walk weights
# ---------------------------------------------------------------------------

ROW_SUM_TOL = 1e-12


class WalkWeights:
    """Per-dart nonnegative weights, one per (vertex, neighbor) pair.

    `values` is aligned with the graph's flattened adjacency: the weight
    of the dart i->j sits at `graph.dart_index(i, j)`.  The weights out
    of each vertex must sum to one within 1e-12.
    """

    def __init__(self, graph, values):
        v = np.asarray(values, dtype=np.float64)
        if v.shape != graph.adj_targets.shape:
            raise InvalidInputError("weight array does not match adjacency layout")
        if not np.all(np.isfinite(v)) or v.min() < 0:
            raise InvalidInputError("weights must be finite and >= 0")
        sums = np.add.reduceat(v, graph.adj_offsets[:-1])
        if np.max(np.abs(sums - 1.0)) > ROW_SUM_TOL:
            raise InvalidInputError("weights out of a vertex must sum to one")
        self.values = _frozen(v)

    def out_weight(self, graph, i, j):
        return float(self.values[graph.dart_index(i, j)])


def uniform_weights(graph):
    """w(i->j) = 1/deg(i) for every neighbor j."""
    values = 1.0 / np.repeat(graph.degrees, graph.degrees)
    return WalkWeights(graph, values)


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------


class Model:
    """Immutable problem instance; safe for concurrent reads."""

    def __init__(self, graph, unary, edge_costs, weights):
        self.graph = graph
        self.unary = unary
        self.edge_costs = edge_costs
        self.weights = weights
        self.num_labels = unary.shape[1]

    @property
    def n(self):
        return self.graph.n


def build_model(graph, unary, edge_costs, weights=None):
    """Assemble and validate a `Model`.

    `unary` is (n, k); `edge_costs` lists one pairwise cost per edge in
    canonical edge order; `weights` defaults to the uniform random walk.
    Costs must be finite; dense tables may be negative (normalize with
    `normalize_nonnegative` before running the fixed-point maps).
    """
    unary = np.asarray(unary, dtype=np.float64)
    if unary.ndim != 2 or unary.shape[0] != graph.n:
        raise InvalidInputError("unary costs must be shaped (n, k)")
    k = unary.shape[1]
    if k < 1:
        raise InvalidInputError("need at least one label")
    if not np.all(np.isfinite(unary)):
        raise InvalidInputError("unary costs must be finite")
    edge_costs = tuple(edge_costs)
    if len(edge_costs) != graph.m:
        raise InvalidInputError("need exactly one pairwise cost per edge")
    for e, cost in enumerate(edge_costs):
        if isinstance(cost, DenseTable):
            if cost.values.shape[0] != k:
                raise InvalidInputError(f"edge {e}: dense table size != label count")
        elif not isinstance(
            cost, (TruncatedQuadratic, TruncatedLinear, StereoTwoStep, Potts)
        ):
            raise InvalidInputError(f"edge {e}: unknown pairwise cost {cost!r}")
    if weights is None:
        weights = uniform_weights(graph)
    elif not isinstance(weights, WalkWeights):
        weights = WalkWeights(graph, weights)
    return Model(graph, _frozen(unary), edge_costs, weights)


def validate_labeling(model, x):
    x = np.asarray(x)
    if x.shape != (model.n,):
        raise InvalidInputError("labeling must assign one label per vertex")
    if not np.issubdtype(x.dtype, np.integer):
        raise InvalidInputError("labels must be integers")
    if x.size and (x.min() < 0 or x.max() >= model.num_labels):
        raise InvalidInputError("label out of range")
    return x.astype(np.int64, copy=False)


def _edge_values(model, x):
    """Per-edge pairwise cost values for labeling x, canonical order."""
    a = x[model.graph.edges[:, 0]]
    b = x[model.graph.edges[:, 1]]
    out = np.empty(model.graph.m, dtype=np.float64)
    for e, cost in enumerate(model.edge_costs):
        out[e] = pairwise_value(cost, int(a[e]), int(b[e]))
    return out


def energy(model, x):
    """Total cost of labeling x: unary sum plus one term per edge.

    Summation order is fixed (vertices ascending, then canonical edges)
    so results are bit-reproducible.
    """
    x = validate_labeling(model, x)
    total = float(np.sum(model.unary[np.arange(model.n), x]))
    return total + float(np.sum(_edge_values(model, x)))


def normalize_nonnegative(model):
    """Shift each cost table so its minimum is zero.

    Returns (model', offset) with energy'(x) = energy(x) - offset for
    every labeling x; the minimizer set is unchanged.
    """
    row_min = model.unary.min(axis=1)
    unary = model.unary - row_min[:, None]
    offset = float(np.sum(row_min))
    costs = []
    for cost in model.edge_costs:
        cmin = cost_min_value(cost, model.num_labels)
        if isinstance(cost, DenseTable) and cmin != 0.0:
            costs.append(DenseTable(cost.values - cmin))
        else:
            costs.append(cost)
        offset += cmin
    model2 = build_model(model.graph, unary, costs, model.weights)
    return model2, offset


def ising_to_model(alpha, beta, shape):
    """Spin-model coefficients on a grid to a nonnegative model.

    The spin energy is sum_i alpha_i s_i + sum_edges beta_ij s_i s_j
    with spins s in {-1, +1}.  Label 0 encodes spin -1 and label 1 spin
    +1; `beta` follows the canonical edge order of `grid_graph(*shape)`.
    Returns (model, offset) with model energy = spin energy - offset.
    """
    rows, cols = shape
    graph = grid_graph(rows, cols)
    alpha = np.asarray(alpha, dtype=np.float64).reshape(-1)
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    if alpha.shape[0] != graph.n:
        raise InvalidInputError("alpha must have one entry per vertex")
    if beta.shape[0] != graph.m:
        raise InvalidInputError("beta must have one entry per edge")
    unary = np.stack([-alpha, alpha], axis=1)
    costs = [DenseTable(np.array([[b, -b], [-b, b]])) for b in beta]
    raw = build_model(graph, unary, costs)
    return normalize_nonnegative(raw)
