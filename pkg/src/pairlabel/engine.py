"""Batched per-dart message evaluation (internal).

A dart is an ordered (vertex, neighbor) pair; darts are laid out in the
graph's flattened-adjacency order, grouped by first vertex.  The update
for vertex i aggregates one min-convolution per incident dart, so a full
sweep over a field costs O(m k) for structured pairwise forms and
O(m k^2) for dense tables.

Each output vertex reads only the previous field, and per-vertex
aggregation follows adjacency order, so results do not depend on how the
work is split across workers.
"""

from __future__ import annotations

import numpy as np

from . import fastmin
from .model import (
    DenseTable,
    Potts,
    StereoTwoStep,
    TruncatedLinear,
    TruncatedQuadratic,
    materialize_cost,
)

# stacked oriented dense tables are skipped above this element count
_DENSE_STACK_LIMIT = 50_000_000

# target element count of per-block intermediates on the chunked path;
# keeps the gather/kernel/reduce working set inside the cache hierarchy
# so per-iteration cost stays linear in the label count
_CHUNK_TARGET = 1 << 19


class DartEngine:
    """Precomputed dart arrays and cost-form groups for one model."""

    def __init__(self, model):
        self.model = model
        graph = model.graph
        n = graph.n
        self.offsets = graph.adj_offsets
        self.src = np.repeat(np.arange(n, dtype=np.int64), graph.degrees)
        self.dst = graph.adj_targets

        # canonical edge id per dart, via the sorted (lo, hi) edge keys
        lo = np.minimum(self.src, self.dst)
        hi = np.maximum(self.src, self.dst)
        ekey = graph.edges[:, 0] * n + graph.edges[:, 1]
        self.edge_id = np.searchsorted(ekey, lo * n + hi)
        self.flip = self.src > self.dst

        # dart keys are strictly increasing, so the reverse permutation is
        # a plain binary search
        key = self.src * n + self.dst
        self.rev = np.searchsorted(key, self.dst * n + self.src)

        self.w_out = model.weights.values
        self.w_in = self.w_out[self.rev]

        self._build_groups()

    def _build_groups(self):
        model = self.model
        k = model.num_labels
        by_type = {}
        for d in range(self.src.shape[0]):
            cost = model.edge_costs[self.edge_id[d]]
            by_type.setdefault(type(cost), []).append(d)
        self.groups = []
        for cls, darts in by_type.items():
            idx = np.asarray(darts, dtype=np.int64)
            costs = [model.edge_costs[e] for e in self.edge_id[idx]]
            if cls is Potts:
                params = (np.array([c.penalty for c in costs]),)
            elif cls is StereoTwoStep:
                params = (
                    np.array([c.step for c in costs]),
                    np.array([c.jump for c in costs]),
                )
            elif cls is TruncatedQuadratic or cls is TruncatedLinear:
                params = (
                    np.array([c.scale for c in costs]),
                    np.array([c.cap for c in costs]),
                )
            elif cls is DenseTable:
                if idx.shape[0] * k * k <= _DENSE_STACK_LIMIT:
                    stack = np.empty((idx.shape[0], k, k))
                    for row, d in enumerate(idx):
                        stack[row] = materialize_cost(
                            costs[row], k, reverse=bool(self.flip[d])
                        )
                    params = (stack,)
                else:
                    params = (None,)  # too large to stack; evaluate per dart
            else:
                raise AssertionError(f"unhandled cost form {cls!r}")
            self.groups.append((cls, idx, params))

    def messages(self, c_all, scale):
        """Min-convolution per dart: out[d] = min_u scale*h_d(., u) + c_all[d, u].

        h_d is the dart's edge cost oriented so the first index is the
        dart's first vertex.
        """
        out = np.empty_like(c_all)
        k = c_all.shape[1]
        for cls, idx, params in self.groups:
            rows = c_all[idx]
            if cls is Potts:
                res = fastmin.batch_potts(rows, scale, params[0])
            elif cls is StereoTwoStep:
                res = fastmin.batch_two_step(rows, scale, params[0], params[1])
            elif cls is TruncatedQuadratic:
                res = fastmin.batch_trunc_quad(rows, scale, params[0], params[1])
            elif cls is TruncatedLinear:
                res = fastmin.batch_trunc_linear(rows, scale, params[0], params[1])
            else:
                stack = params[0]
                if stack is not None:
                    res = fastmin.batch_dense(rows, scale, stack)
                else:
                    res = np.empty_like(rows)
                    for row, d in enumerate(idx):
                        table = materialize_cost(
                            self.model.edge_costs[self.edge_id[d]],
                            k,
                            reverse=bool(self.flip[d]),
                        )
                        res[row] = (scale * table + rows[row][None, :]).min(axis=1)
            out[idx] = res
        return out

    def apply_diffusion(self, p, phi):
        """One update of the diffusion map at damping p."""
        if self._fused_form() is not None:
            return self._apply_fused(p, phi, diffusion=True)
        if self._use_chunks():
            return self._apply_chunked(p, phi, diffusion=True)
        q = 1.0 - p
        c_all = (q * self.w_in)[:, None] * phi[self.dst]
        msgs = self.messages(c_all, 0.5 * p)
        agg = np.add.reduceat(msgs, self.offsets[:-1], axis=0)
        return p * self.model.unary + agg

    def apply_control(self, p, phi):
        """One update of the optimal-control map at damping p."""
        if self._fused_form() is not None:
            return self._apply_fused(p, phi, diffusion=False)
        if self._use_chunks():
            return self._apply_chunked(p, phi, diffusion=False)
        q = 1.0 - p
        c_all = q * phi[self.dst]
        msgs = self.messages(c_all, p)
        msgs *= self.w_out[:, None]
        agg = np.add.reduceat(msgs, self.offsets[:-1], axis=0)
        return p * self.model.unary + agg

    def _use_chunks(self):
        if len(self.groups) != 1 or self.groups[0][0] is DenseTable:
            return False
        return self.dst.shape[0] * self.model.num_labels >= 2 * _CHUNK_TARGET

    def _fused_form(self):
        """The single cost class when a fused jitted sweep applies."""
        if len(self.groups) != 1:
            return None
        cls = self.groups[0][0]
        if cls not in (StereoTwoStep, TruncatedQuadratic):
            return None
        if self.dst.shape[0] * self.model.num_labels < 2 * _CHUNK_TARGET:
            return None
        return cls

    def _apply_fused(self, p, phi, diffusion):
        """Fused kernel for single-form models.

        Matches the chunked path to within one ulp (the jitted code may
        contract multiply-add pairs); path selection is deterministic,
        so repeated runs on the same model are bit-identical.
        """
        cls, _, params = self.groups[0]
        q = 1.0 - p
        scale = 0.5 * p if diffusion else p
        darts = self.dst.shape[0]
        if diffusion:
            inner = q * self.w_in
            outer = np.ones(darts)
        else:
            inner = np.full(darts, q)
            outer = self.w_out
        out = np.empty_like(self.model.unary)
        if cls is StereoTwoStep:
            fastmin.two_step_sweep(
                phi, self.dst, self.offsets, inner, outer,
                scale * params[0], scale * params[1],
                p, self.model.unary, out,
            )
        else:
            fastmin.trunc_quad_sweep(
                phi, self.dst, self.offsets, inner, outer,
                scale * params[0], params[1],
                p, self.model.unary, out,
            )
        return out

    def _vertex_blocks(self):
        """Vertex ranges whose dart blocks hold about _CHUNK_TARGET elements."""
        offsets = self.offsets
        n = self.model.graph.n
        per = max(256, _CHUNK_TARGET // max(self.model.num_labels, 1))
        blocks = []
        v = 0
        while v < n:
            end = int(np.searchsorted(offsets, offsets[v] + per, side="left"))
            end = min(max(end, v + 1), n)
            blocks.append((v, end))
            v = end
        return blocks

    def _group_rows(self, cls, params, c, lo, hi, scale):
        if cls is Potts:
            return fastmin.batch_potts(c, scale, params[0][lo:hi])
        if cls is StereoTwoStep:
            return fastmin.batch_two_step(c, scale, params[0][lo:hi], params[1][lo:hi])
        if cls is TruncatedQuadratic:
            return fastmin.batch_trunc_quad(c, scale, params[0][lo:hi], params[1][lo:hi])
        return fastmin.batch_trunc_linear(c, scale, params[0][lo:hi], params[1][lo:hi])

    def _apply_chunked(self, p, phi, diffusion):
        """Blockwise update with cache-resident intermediates.

        Identical arithmetic to the full-array path: reduction segments
        align with vertex boundaries, so the summation tree is unchanged.
        """
        cls, _, params = self.groups[0]
        q = 1.0 - p
        scale = 0.5 * p if diffusion else p
        out = p * self.model.unary
        for v0, v1 in self._vertex_blocks():
            d0, d1 = int(self.offsets[v0]), int(self.offsets[v1])
            if diffusion:
                c = (q * self.w_in[d0:d1])[:, None] * phi[self.dst[d0:d1]]
            else:
                c = q * phi[self.dst[d0:d1]]
            msg = self._group_rows(cls, params, c, d0, d1, scale)
            if not diffusion:
                msg *= self.w_out[d0:d1, None]
            out[v0:v1] += np.add.reduceat(msg, self.offsets[v0:v1] - d0, axis=0)
        return out
