"""Graph-controlled permutation mixers for flexible job-shop scheduling.

The package builds feasibility-preserving QAOA mixers for job-shop
instances with flexible machine assignment, simulates them exactly at
the full circuit level (main plus auxiliary registers), and verifies
the feasibility-preservation and explorability guarantees by brute
force on desk-scale instances.
"""

from .instance import (
    Assignment,
    AssignmentIndex,
    FjspInstance,
    HorizonTooSmallError,
    InstanceError,
    InstanceSemanticError,
    InstanceSyntaxError,
    Job,
    Operation,
    Schedule,
    bits_to_str,
    build_index,
    decode,
    encode,
    greedy_schedule,
    makespan,
    parse_instance,
    scaling_instance,
    str_to_bits,
    with_horizon,
)
from .constraint_graph import (
    ConflictKind,
    ConstraintGraph,
    build_graph,
    conflicts,
    enumerate_feasible,
    graph_semantic_equivalence,
    is_feasible,
    schedule_satisfies_constraints,
)
from .control_logic import (
    Permutation,
    PlanPreconditionError,
    PlanPrefixError,
    TranspositionPlan,
    apply_permutation,
    chi,
    chi_j,
    fits_in_first_half,
    plan_transposition_path,
    shortest_transposition_path,
    transposition_family,
)
from .circuit import (
    Circuit,
    ControlledFractionalPermutation,
    DiagonalPhase,
    GateCounts,
    MultiControlledX,
    PauliX,
    RegisterLayout,
    build_copy_block,
    build_layer_mixer,
    build_partial_mixer,
    build_vertex_check,
    count_decomposed,
    decompose,
    gate_count_report,
    mixer_layer_circuit,
)
from .simulator import (
    SimulationPrecisionError,
    SparseState,
    apply_circuit,
    apply_gate,
    dense_cross_validate,
    init_basis,
    main_marginal,
    register_is_zero,
    register_mass,
    sample,
)
from .qaoa import (
    ExplorabilityResult,
    ExplorabilitySweep,
    ExplorabilityVerifier,
    OptimizeConfig,
    OptimizeResult,
    QaoaParams,
    VerificationReport,
    build_ansatz,
    default_beta_grid,
    expected_cost,
    explorability_sweep,
    layer_marginal,
    makespan_cost,
    optimize,
    phase_separate,
    verify_explorability,
    verify_feasibility,
)

__version__ = "0.1.0"
