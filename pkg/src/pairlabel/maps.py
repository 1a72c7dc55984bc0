"""The two contraction maps, the fixed-point solver and certified bounds.

Both maps update a belief field (one length-k vector per vertex).  With
damping p in (0, 1) and q = 1 - p:

    diffusion map (T):
        (T phi)_i(t) = p*g_i(t)
                       + sum_{j in N(i)} min_u [ (p/2)*h_ij(t,u) + q*w_ji*phi_j(u) ]

    optimal-control map (S):
        (S phi)_i(t) = p*g_i(t)
                       + sum_{j in N(i)} w_ij * min_u [ p*h_ij(t,u) + q*phi_j(u) ]

T is a q-contraction in the norm sum_i max_t |.| and S in the sup norm,
so fixed-point iteration converges geometrically from any start and the
distance to the fixed point is bounded by residual/p (the certified
distance reported by `solve`).  For nonnegative costs the T fixed point
yields a factored lower bound on the energy and the S fixed point
lower-bounds the per-vertex optimal values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .engine import DartEngine
from .errors import InvalidInputError, NumericalFailureError
from .model import energy

__all__ = [
    "FixedPointReport",
    "MapKind",
    "SolveParams",
    "apply_S",
    "apply_T",
    "bracket",
    "check_lp_feasible",
    "decode",
    "factored_bound",
    "field_norm",
    "solve",
    "value_lower_bounds",
]


class MapKind(enum.Enum):
    T = "T"
    S = "S"


@dataclass
class SolveParams:
    """Damping, stopping rule and optional initial field for `solve`.

    `tol` is a threshold on the residual in the map's own norm; q = 1-p
    is always derived from p.
    """

    p: float
    tol: float = 1e-10
    max_iter: int = 100_000
    initial: np.ndarray | None = None

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise InvalidInputError("damping p must lie in (0, 1)")
        if not self.tol > 0:
            raise InvalidInputError("tol must be positive")
        if self.max_iter < 1:
            raise InvalidInputError("max_iter must be >= 1")

    @property
    def q(self):
        return 1.0 - self.p


@dataclass
class FixedPointReport:
    """Outcome of a fixed-point run.

    `residual` is the distance between the last two iterates in the
    map's contraction norm and `certified_distance = residual / p`
    bounds the distance from `field` to the true fixed point in that
    norm.  `residuals` holds the whole residual history.
    """

    kind: MapKind
    field: np.ndarray
    iterations: int
    residual: float
    certified_distance: float
    converged: bool
    residuals: list[float] = field(default_factory=list)


def _check_field(model, phi):
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != (model.n, model.num_labels):
        raise InvalidInputError("belief field must be shaped (n, k)")
    if not np.all(np.isfinite(phi)):
        raise InvalidInputError("belief field must be finite")
    return phi


def _check_p(p):
    if not (0.0 < p < 1.0):
        raise InvalidInputError("damping p must lie in (0, 1)")


def apply_T(model, p, phi):
    """One application of the diffusion map."""
    _check_p(p)
    phi = _check_field(model, phi)
    return DartEngine(model).apply_diffusion(p, phi)


def apply_S(model, p, phi):
    """One application of the optimal-control map."""
    _check_p(p)
    phi = _check_field(model, phi)
    return DartEngine(model).apply_control(p, phi)


def field_norm(kind, delta):
    """The contraction norm of each map: sum-of-sup for T, sup for S."""
    a = np.abs(delta)
    if kind is MapKind.T:
        return float(np.sum(a.max(axis=1)))
    return float(a.max())


def solve(model, kind, params):
    """Iterate the chosen map until the residual drops below tol.

    Synchronous double-buffered updates from `params.initial` (zero
    field by default, which makes the iterates monotone for nonnegative
    costs).  Raises `NumericalFailureError` if a non-finite value
    appears, naming the iteration.
    """
    if not isinstance(kind, MapKind):
        kind = MapKind(kind)
    engine = DartEngine(model)
    if params.initial is None:
        phi = np.zeros((model.n, model.num_labels))
    else:
        phi = _check_field(model, params.initial).copy()
    step = engine.apply_diffusion if kind is MapKind.T else engine.apply_control
    residuals = []
    converged = False
    iterations = 0
    residual = np.inf
    for it in range(1, params.max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            new = step(params.p, phi)
        if not np.all(np.isfinite(new)):
            raise NumericalFailureError(
                f"non-finite belief at iteration {it}", iteration=it
            )
        residual = field_norm(kind, new - phi)
        residuals.append(residual)
        phi = new
        iterations = it
        if residual <= params.tol:
            converged = True
            break
    return FixedPointReport(
        kind=kind,
        field=phi,
        iterations=iterations,
        residual=residual,
        certified_distance=residual / params.p,
        converged=converged,
        residuals=residuals,
    )


def decode(phi):
    """Per-vertex argmin of the beliefs; ties go to the smallest label."""
    phi = np.asarray(phi)
    if not np.all(np.isfinite(phi)):
        raise InvalidInputError("belief field must be finite")
    return np.argmin(phi, axis=1)


def factored_bound(phi, x):
    """Sum of beliefs along labeling x: the factored energy surrogate.

    At the converged diffusion fixed point this lower-bounds the true
    energy of every labeling (for nonnegative costs).
    """
    phi = np.asarray(phi, dtype=np.float64)
    x = np.asarray(x)
    return float(phi[np.arange(phi.shape[0]), x].sum())


def bracket(model, report):
    """Enclose the optimal energy from a converged diffusion run.

    Returns (lower, upper, labeling) with lower <= min_x energy(x) <=
    upper up to the report's certified distance; exact at the true
    fixed point.
    """
    if report.kind is not MapKind.T:
        raise InvalidInputError("bracket needs a diffusion-map report")
    if not report.converged:
        raise InvalidInputError("bracket needs a converged report")
    x = decode(report.field)
    lower = factored_bound(report.field, x)
    upper = energy(model, x)
    return lower, upper, x


def check_lp_feasible(model, p, phi, tol):
    """True iff phi <= T(phi) + tol elementwise.

    These are the constraints of the linear program whose unique optimum
    (for positive objective weights) is the diffusion fixed point; any
    feasible field is a pointwise lower bound on it.
    """
    phi = _check_field(model, phi)
    return bool(np.all(phi <= apply_T(model, p, phi) + tol))


def value_lower_bounds(model, report):
    """The converged control fixed point, read as per-vertex lower bounds.

    Entry (i, t) is nonnegative and lower-bounds the best energy
    achievable with vertex i pinned to label t.
    """
    if report.kind is not MapKind.S:
        raise InvalidInputError("value bounds need a control-map report")
    if not report.converged:
        raise InvalidInputError("value bounds need a converged report")
    if report.field.shape != (model.n, model.num_labels):
        raise InvalidInputError("report does not match the model")
    return report.field
