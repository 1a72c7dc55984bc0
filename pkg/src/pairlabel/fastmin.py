"""Inner minimization kernels: m(t) = min_u [scale * d(t, u) + c(u)].

`dense_minconv` is the O(k^2) enumeration reference.  The structured
kernels run in O(k) by exploiting the cost form; labels are treated as
integer positions on a line for the quadratic/linear forms.  Batched
variants process one problem per row of a (rows, k) matrix and are what
the per-iteration updates call, so a full map application costs O(m k)
for structured costs.

All kernels are pure functions of their inputs and safe to call
concurrently.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .errors import InvalidInputError
from .model import (
    DenseTable,
    Potts,
    StereoTwoStep,
    TruncatedLinear,
    TruncatedQuadratic,
    materialize_cost,
)

# outdated TBB runtimes make numba fall back to another threading layer;
# the fallback is fine and the warning is noise for every caller
warnings.filterwarnings("ignore", message=".*TBB.*")

__all__ = [
    "MessageProblem",
    "batch_dense",
    "batch_potts",
    "batch_trunc_linear",
    "batch_trunc_quad",
    "batch_two_step",
    "dense_minconv",
    "minconv",
    "potts_like_minconv",
    "trunc_linear_minconv",
    "trunc_quad_minconv",
]


@dataclass(frozen=True)
class MessageProblem:
    """One inner minimization: base costs c, multiplier and cost form.

    `form` is given in the orientation that fixes the free variable u,
    i.e. d(t, u) indexes the output label first.
    """

    c: np.ndarray
    scale: float
    form: object

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64)
        if c.ndim != 1 or c.shape[0] < 1:
            raise InvalidInputError("base costs must be a nonempty vector")
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("base costs must be finite")
        if not np.isfinite(self.scale) or self.scale < 0:
            raise InvalidInputError("scale must be finite and >= 0")
        object.__setattr__(self, "c", c)


def dense_minconv(problem):
    """Reference kernel: full enumeration over the materialized table."""
    c = problem.c
    k = c.shape[0]
    d = materialize_cost(problem.form, k)
    return (problem.scale * d + c[None, :]).min(axis=1)


def potts_like_minconv(problem):
    """O(k) kernel for the Potts and two-step forms."""
    c = problem.c
    form = problem.form
    if isinstance(form, Potts):
        return batch_potts(
            c[None, :], problem.scale, np.array([form.penalty])
        )[0]
    if isinstance(form, StereoTwoStep):
        return batch_two_step(
            c[None, :], problem.scale, np.array([form.step]), np.array([form.jump])
        )[0]
    raise InvalidInputError("potts_like_minconv needs a Potts or two-step form")


def trunc_quad_minconv(problem):
    """O(k) kernel for the truncated quadratic form (parabola envelope)."""
    form = problem.form
    if not isinstance(form, TruncatedQuadratic):
        raise InvalidInputError("trunc_quad_minconv needs a truncated quadratic form")
    return batch_trunc_quad(
        problem.c[None, :], problem.scale, np.array([form.scale]), np.array([form.cap])
    )[0]


def trunc_linear_minconv(problem):
    """O(k) kernel for the truncated linear form (two distance passes)."""
    form = problem.form
    if not isinstance(form, TruncatedLinear):
        raise InvalidInputError("trunc_linear_minconv needs a truncated linear form")
    return batch_trunc_linear(
        problem.c[None, :], problem.scale, np.array([form.scale]), np.array([form.cap])
    )[0]


def minconv(problem):
    """Dispatch to the fastest kernel for the problem's cost form."""
    form = problem.form
    if isinstance(form, (Potts, StereoTwoStep)):
        return potts_like_minconv(problem)
    if isinstance(form, TruncatedQuadratic):
        return trunc_quad_minconv(problem)
    if isinstance(form, TruncatedLinear):
        return trunc_linear_minconv(problem)
    if isinstance(form, DenseTable):
        return dense_minconv(problem)
    raise InvalidInputError(f"unknown pairwise cost {form!r}")


# ---------------------------------------------------------------------------
# Batched kernels (one problem per row)
# ---------------------------------------------------------------------------


def batch_potts(c, scale, penalties):
    """m = min(c, min(c) + scale*penalty), rowwise."""
    c = np.asarray(c, dtype=np.float64)
    flat = c.min(axis=1) + scale * np.asarray(penalties, dtype=np.float64)
    return np.minimum(c, flat[:, None])


def batch_two_step(c, scale, steps, jumps):
    """Two-step form: stay, move one label for `step`, or jump anywhere."""
    c = np.asarray(c, dtype=np.float64)
    steps = np.asarray(steps, dtype=np.float64)
    jumps = np.asarray(jumps, dtype=np.float64)
    out = c.copy()
    if c.shape[1] > 1:
        np.minimum(out[:, 1:], c[:, :-1] + scale * steps[:, None], out=out[:, 1:])
        np.minimum(out[:, :-1], c[:, 1:] + scale * steps[:, None], out=out[:, :-1])
    flat = c.min(axis=1) + scale * jumps
    return np.minimum(out, flat[:, None])


def batch_trunc_linear(c, scale, slopes, caps):
    """Forward/backward distance passes, then the flat cap branch.

    The passes run on the transposed matrix so each step touches a
    contiguous row.
    """
    c = np.asarray(c, dtype=np.float64)
    slopes = np.asarray(slopes, dtype=np.float64)
    caps = np.asarray(caps, dtype=np.float64)
    step = scale * slopes
    out = c.T.copy()
    k = c.shape[1]
    for t in range(1, k):
        np.minimum(out[t], out[t - 1] + step, out=out[t])
    for t in range(k - 2, -1, -1):
        np.minimum(out[t], out[t + 1] + step, out=out[t])
    flat = c.min(axis=1) + step * caps
    return np.minimum(out.T, flat[:, None])


@njit(cache=True, inline="always")
def _envelope_one(c, ar, out, v, z):
    """Lower envelope of parabolas ar*(t-u)^2 + c[u] rooted at u=0..k-1.

    ar == 0 yields the flat minimum.  The intersection denominator
    2*ar*(q-v) cannot vanish for ar > 0 and distinct integer roots, but
    a lower-height replacement guard is kept for safety.  `v` and `z`
    are caller-provided scratch of sizes k and k+1.
    """
    k = c.shape[0]
    if ar <= 0.0:
        lo = c[0]
        for u in range(1, k):
            if c[u] < lo:
                lo = c[u]
        for t in range(k):
            out[t] = lo
        return
    top = 0
    v[0] = 0
    z[0] = -np.inf
    z[1] = np.inf
    for q in range(1, k):
        while True:
            vq = v[top]
            denom = 2.0 * ar * (q - vq)
            if denom > 0.0:
                s = ((c[q] + ar * q * q) - (c[vq] + ar * vq * vq)) / denom
            else:
                s = -np.inf if c[q] < c[vq] else np.inf
            if s <= z[top]:
                top -= 1
                if top < 0:
                    break
            else:
                break
        top += 1
        v[top] = q
        z[top] = s
        z[top + 1] = np.inf
    j = 0
    for t in range(k):
        while z[j + 1] < t:
            j += 1
        dt = t - v[j]
        out[t] = ar * dt * dt + c[v[j]]


@njit(cache=True)
def _envelope_rows(c, a, out):
    """Row-wise `_envelope_one` over a (rows, k) matrix."""
    rows, k = c.shape
    v = np.empty(k, dtype=np.int64)
    z = np.empty(k + 1, dtype=np.float64)
    for r in range(rows):
        _envelope_one(c[r], a[r], out[r], v, z)


def batch_trunc_quad(c, scale, lams, caps):
    """Parabola envelope for scale*lam*(t-u)^2, capped at scale*lam*cap."""
    c = np.ascontiguousarray(c, dtype=np.float64)
    lams = np.asarray(lams, dtype=np.float64)
    caps = np.asarray(caps, dtype=np.float64)
    a = scale * lams
    out = np.empty_like(c)
    _envelope_rows(c, a, out)
    flat = c.min(axis=1) + a * caps
    return np.minimum(out, flat[:, None])


def batch_dense(c, scale, tables):
    """Enumeration over per-row oriented tables; tables is (rows, k, k)."""
    c = np.asarray(c, dtype=np.float64)
    return (scale * tables + c[:, None, :]).min(axis=2)


@njit(cache=True, parallel=True)
def trunc_quad_sweep(phi, dst, offsets, inner, outer, lams, caps, p, unary, out):
    """Fused per-vertex update for models whose every edge is a
    truncated quadratic.

    For each vertex i the incident darts d contribute
    min(envelope of lams[d]*(t-u)^2 + c(u), min(c) + lams[d]*caps[d])
    with c(u) = inner[d]*phi[dst[d], u]; `lams` arrives pre-multiplied
    by the pairwise scale.  Vertices are independent and accumulation
    follows dart order, so the parallel schedule cannot change the
    result.
    """
    n = offsets.shape[0] - 1
    k = phi.shape[1]
    for i in prange(n):
        c = np.empty(k)
        env = np.empty(k)
        acc = np.zeros(k)
        v = np.empty(k, dtype=np.int64)
        z = np.empty(k + 1)
        for d in range(offsets[i], offsets[i + 1]):
            j = dst[d]
            wi = inner[d]
            cmin = np.inf
            for u in range(k):
                cu = wi * phi[j, u]
                c[u] = cu
                if cu < cmin:
                    cmin = cu
            ar = lams[d]
            _envelope_one(c, ar, env, v, z)
            flat = cmin + ar * caps[d]
            wo = outer[d]
            for t in range(k):
                m = env[t]
                if flat < m:
                    m = flat
                acc[t] += wo * m
        for t in range(k):
            out[i, t] = p * unary[i, t] + acc[t]


@njit(cache=True, parallel=True)
def two_step_sweep(phi, dst, offsets, inner, outer, steps, jumps, p, unary, out):
    """Fused per-vertex update for models whose every edge is two-step.

    For each vertex i and label t:

        out[i, t] = p*unary[i, t]
                    + sum_d outer[d] * min(c(t), c(t-1)+steps[d],
                                           c(t+1)+steps[d], min(c)+jumps[d])

    over incident darts d with c(u) = inner[d]*phi[dst[d], u]; steps and
    jumps arrive pre-multiplied by the pairwise scale.  Vertices are
    independent and accumulation follows dart order, so the parallel
    schedule cannot change the result.
    """
    n = offsets.shape[0] - 1
    k = phi.shape[1]
    for i in prange(n):
        for t in range(k):
            out[i, t] = 0.0
        for d in range(offsets[i], offsets[i + 1]):
            j = dst[d]
            wi = inner[d]
            step = steps[d]
            jump = jumps[d]
            cmin = wi * phi[j, 0]
            for u in range(1, k):
                cu = wi * phi[j, u]
                if cu < cmin:
                    cmin = cu
            flat = cmin + jump
            wo = outer[d]
            for t in range(k):
                m = wi * phi[j, t]
                if t > 0:
                    side = wi * phi[j, t - 1] + step
                    if side < m:
                        m = side
                if t + 1 < k:
                    side = wi * phi[j, t + 1] + step
                    if side < m:
                        m = side
                if flat < m:
                    m = flat
                out[i, t] += wo * m
        for t in range(k):
            out[i, t] = p * unary[i, t] + out[i, t]
