"""Classification with pairwise relationships on arbitrary graphs.

Builds energy-minimization instances (graph + label costs + walk
weights) and solves them with two globally convergent contraction maps:
a diffusion update and an optimal-control (value iteration) update.
Both converge geometrically to unique fixed points that certify lower
bounds on the energy and on the per-vertex pinned optima.  Exact
oracles, baseline solvers (local search, min-sum belief propagation)
and the experiment protocols from the library's evaluation are
included.
"""

from .baselines import icm, min_sum_bp
from .errors import (
    CapacityError,
    InvalidInputError,
    ModelParseError,
    NumericalFailureError,
)
from .fastmin import (
    MessageProblem,
    dense_minconv,
    minconv,
    potts_like_minconv,
    trunc_linear_minconv,
    trunc_quad_minconv,
)
from .maps import (
    FixedPointReport,
    MapKind,
    SolveParams,
    apply_S,
    apply_T,
    bracket,
    check_lp_feasible,
    decode,
    factored_bound,
    field_norm,
    solve,
    value_lower_bounds,
)
from .model import (
    DenseTable,
    Graph,
    Model,
    Potts,
    StereoTwoStep,
    TruncatedLinear,
    TruncatedQuadratic,
    WalkWeights,
    build_graph,
    build_model,
    energy,
    grid_graph,
    ising_to_model,
    materialize_cost,
    normalize_nonnegative,
    pairwise_value,
    uniform_weights,
)
from .modelio import parse_model, read_model, write_model
from .oracles import (
    MdpInstance,
    WalkPolicy,
    brute_force_min,
    column_dp_min,
    geometric_tail_bound,
    greedy_policy_from,
    max_marginals,
    mdp_bellman,
    monte_carlo_value,
    walk_energy_prefix,
)
from .problems import (
    GridSpec,
    add_gaussian_noise,
    hamming,
    ising_energy,
    random_grid,
    read_pgm,
    read_ppm,
    restoration_model,
    rmse,
    stereo_model,
    write_pgm,
    write_ppm,
)

__version__ = "0.1.0"
