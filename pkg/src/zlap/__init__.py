"""Z-Laplacian toolkit: graph shift operators, dynamics, spectral filtering and bottlenecks."""

__version__ = "0.1.0"

from zlap.errors import ConvergenceError, InputError, ZLapError
from zlap.graph import Graph, add_edge, degrees, is_connected, new_graph, total_traffic
from zlap.operators import (
    ShiftOperator,
    ZLaplacian,
    bias_transform,
    decompose_nonnegative,
    decompose_z_matrix,
    delay_transform,
    parameterized_laplacian,
    perron_eigenpair,
    random_walk_laplacian,
    replicator_operator,
    similarity_transform,
    sis_filter,
    z_laplacian,
)
from zlap.dynamics import (
    classify_epidemic,
    discrete_approximation,
    evolve_continuous,
    evolve_discrete,
    matrix_exp_oracle,
    simulate_sojourn_steps,
    waiting_steps,
)
from zlap.spectral import band_reconstruct, candidate_laplacian, sym_eig, top_percent_edges
from zlap.bottleneck import conductance, heal_rank, min_conductance, protocol_model
from zlap.io import emit_report, format_edge_list, load_scenario, parse_edge_list, run_scenario
