"""Line-oriented text format for problem instances.

    # comments start with '#'
    mrf <n> <k> <m>
    g <i> <k values>                 one line per vertex
    hd <i> <j> <k*k row-major>       dense table in the written (i,j) order
    hq <i> <j> <scale> <cap>         truncated quadratic
    hs <i> <j> <step> <jump>         two-step (stereo) form
    hp <i> <j> <penalty>             Potts
    w <i> <j> <weight>               optional dart weights, all or none

Vertices are 1-based in files (the API is 0-based).  Parse errors carry
the offending 1-based line number.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, ModelParseError
from .model import (
    DenseTable,
    Potts,
    StereoTwoStep,
    TruncatedQuadratic,
    WalkWeights,
    build_graph,
    build_model,
    uniform_weights,
)

__all__ = ["parse_model", "read_model", "write_model"]

_EDGE_TAGS = {"hd", "hq", "hs", "hp"}


def read_model(path):
    """Parse a model file from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())


def parse_model(text):
    """Parse the text model format; raises `ModelParseError` with line numbers."""
    header = None
    unary_lines = {}
    edge_lines = []  # (line_no, tag, i, j, values)
    seen_edges = set()
    weight_lines = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        fields = stripped.split()
        tag = fields[0]
        if tag == "mrf":
            if header is not None:
                raise ModelParseError("duplicate header", line_no)
            header = (line_no, _ints(fields[1:], 3, line_no))
        elif tag == "g":
            if header is None:
                raise ModelParseError("header must come first", line_no)
            n, k, _ = header[1]
            i = _vertex(fields[1] if len(fields) > 1 else None, n, line_no)
            if i in unary_lines:
                raise ModelParseError(f"duplicate costs for vertex {i + 1}", line_no)
            unary_lines[i] = _floats(fields[2:], k, line_no)
        elif tag in _EDGE_TAGS:
            if header is None:
                raise ModelParseError("header must come first", line_no)
            n = header[1][0]
            if len(fields) < 3:
                raise ModelParseError("edge line needs two vertices", line_no)
            i = _vertex(fields[1], n, line_no)
            j = _vertex(fields[2], n, line_no)
            if i == j:
                raise ModelParseError("self-loops are not allowed", line_no)
            if (min(i, j), max(i, j)) in seen_edges:
                raise ModelParseError(f"duplicate edge {{{i + 1},{j + 1}}}", line_no)
            seen_edges.add((min(i, j), max(i, j)))
            edge_lines.append((line_no, tag, i, j, fields[3:]))
        elif tag == "w":
            if header is None:
                raise ModelParseError("header must come first", line_no)
            n = header[1][0]
            if len(fields) != 4:
                raise ModelParseError("weight line needs vertices and a value", line_no)
            i = _vertex(fields[1], n, line_no)
            j = _vertex(fields[2], n, line_no)
            weight_lines.append((line_no, i, j, _floats(fields[3:], 1, line_no)[0]))
        else:
            raise ModelParseError(f"unknown tag {tag!r}", line_no)

    if header is None:
        raise ModelParseError("missing 'mrf <n> <k> <m>' header", 1)
    header_line, (n, k, m) = header
    if n < 2 or k < 1 or m < 1:
        raise ModelParseError("header requires n >= 2, k >= 1, m >= 1", header_line)
    if len(edge_lines) != m:
        raise ModelParseError(
            f"expected {m} edge lines, found {len(edge_lines)}", header_line
        )
    missing = [i for i in range(n) if i not in unary_lines]
    if missing:
        raise ModelParseError(
            f"missing unary costs for vertex {missing[0] + 1}", header_line
        )

    try:
        graph = build_graph(n, [(i, j) for _, _, i, j, _ in edge_lines])
    except InvalidInputError as exc:
        raise ModelParseError(str(exc), header_line) from None

    costs = [None] * graph.m
    ekey = graph.edges[:, 0] * n + graph.edges[:, 1]
    for line_no, tag, i, j, rest in edge_lines:
        lo, hi = (i, j) if i < j else (j, i)
        e = int(np.searchsorted(ekey, lo * n + hi))
        try:
            costs[e] = _parse_cost(tag, rest, k, transpose=i > j, line_no=line_no)
        except InvalidInputError as exc:
            raise ModelParseError(str(exc), line_no) from None

    unary = np.stack([unary_lines[i] for i in range(n)])
    weights = None
    if weight_lines:
        values = np.full(graph.adj_targets.shape[0], np.nan)
        for line_no, i, j, wv in weight_lines:
            try:
                d = graph.dart_index(i, j)
            except InvalidInputError:
                raise ModelParseError(
                    f"weight for missing edge {{{i + 1},{j + 1}}}", line_no
                ) from None
            if not np.isnan(values[d]):
                raise ModelParseError(
                    f"duplicate weight for {i + 1}->{j + 1}", line_no
                )
            values[d] = wv
        if np.any(np.isnan(values)):
            raise ModelParseError(
                "weight lines must cover every edge direction", header_line
            )
        try:
            weights = WalkWeights(graph, values)
        except InvalidInputError as exc:
            raise ModelParseError(str(exc), header_line) from None

    try:
        return build_model(graph, unary, costs, weights)
    except InvalidInputError as exc:
        raise ModelParseError(str(exc), header_line) from None


def _parse_cost(tag, rest, k, transpose, line_no):
    if tag == "hd":
        values = _floats(rest, k * k, line_no)
        table = np.array(values).reshape(k, k)
        return DenseTable(table.T if transpose else table)
    if tag == "hq":
        scale, cap = _floats(rest, 2, line_no)
        return TruncatedQuadratic(scale, cap)
    if tag == "hs":
        step, jump = _floats(rest, 2, line_no)
        return StereoTwoStep(step, jump)
    penalty, = _floats(rest, 1, line_no)
    return Potts(penalty)


def _ints(fields, count, line_no):
    if len(fields) != count:
        raise ModelParseError(f"expected {count} integers", line_no)
    try:
        return tuple(int(f) for f in fields)
    except ValueError:
        raise ModelParseError("expected integers", line_no) from None


def _floats(fields, count, line_no):
    if len(fields) != count:
        raise ModelParseError(f"expected {count} numeric values", line_no)
    try:
        values = [float(f) for f in fields]
    except ValueError:
        raise ModelParseError("expected numeric values", line_no) from None
    if not all(np.isfinite(values)):
        raise ModelParseError("values must be finite", line_no)
    return values


def _vertex(field, n, line_no):
    if field is None:
        raise ModelParseError("missing vertex index", line_no)
    try:
        i = int(field)
    except ValueError:
        raise ModelParseError(f"bad vertex index {field!r}", line_no) from None
    if not (1 <= i <= n):
        raise ModelParseError(f"vertex {i} out of range 1..{n}", line_no)
    return i - 1


def write_model(model, path):
    """Write a model in canonical form (1-based vertices, sorted edges)."""
    graph = model.graph
    lines = [f"mrf {graph.n} {model.num_labels} {graph.m}"]
    for i in range(graph.n):
        values = " ".join(repr(float(v)) for v in model.unary[i])
        lines.append(f"g {i + 1} {values}")
    for e in range(graph.m):
        i, j = int(graph.edges[e, 0]) + 1, int(graph.edges[e, 1]) + 1
        cost = model.edge_costs[e]
        if isinstance(cost, DenseTable):
            flat = " ".join(repr(float(v)) for v in cost.values.ravel())
            lines.append(f"hd {i} {j} {flat}")
        elif isinstance(cost, TruncatedQuadratic):
            lines.append(f"hq {i} {j} {cost.scale!r} {cost.cap!r}")
        elif isinstance(cost, StereoTwoStep):
            lines.append(f"hs {i} {j} {cost.step!r} {cost.jump!r}")
        elif isinstance(cost, Potts):
            lines.append(f"hp {i} {j} {cost.penalty!r}")
        else:
            raise InvalidInputError(
                "truncated linear costs have no file representation"
            )
    if not np.array_equal(model.weights.values, uniform_weights(graph).values):
        src = np.repeat(np.arange(graph.n), graph.degrees)
        for d in range(graph.adj_targets.shape[0]):
            lines.append(
                f"w {src[d] + 1} {graph.adj_targets[d] + 1} "
                f"{float(model.weights.values[d])!r}"
            )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
