"""Finite test spaces: combinatorics, logics, states, and metric sampling.

The package splits along the lifecycle of a model:

- :mod:`testspaces.core` — spaces, events, files, orthogonality;
- :mod:`testspaces.logic` — perspectivity classes, partial sums, order;
- :mod:`testspaces.states` — probability weights, exact solving, certificates;
- :mod:`testspaces.metric` — sampled spaces on spheres, hyperspace opens;
- :mod:`testspaces.semiclassical` — disjoint-test spaces and extraction;
- :mod:`testspaces.cli` — the ``tsp`` command.
"""

from .core import (
    CapExceededError,
    Event,
    ParseError,
    TestSpace,
    TspError,
    UnknownOutcomeError,
    ValidationError,
    complementary,
    dump_test_space,
    enumerate_events,
    load_test_space,
    orthogonal,
    orthogonal_events,
    perspective,
)
from .logic import (
    AxiomViolationError,
    Logic,
    NotAlgebraicError,
    OrthoalgebraTable,
    Prop04Result,
    boolean_oa,
    build_logic,
    check_prop04,
    is_algebraic,
    loads_oa,
    logic_to_oa,
    mo2_oa,
    natural_order,
    oa_to_test_space,
    roundtrip_logic,
)
from .metric import (
    ConvergenceError,
    MetricSample,
    NotTotallyNonOrthogonalError,
    VietorisBasicOpen,
    basic_open,
    closure_check,
    event_cardinality_locally_constant,
    hausdorff_distance,
    load_sample,
    matching_distance,
    rank_bound,
    sample_frames,
    save_sample,
    sum_map_lipschitz,
    tno_radius,
    vietoris_member,
)
from .semiclassical import (
    DegenerateTestError,
    ExtractionResult,
    NotSemiclassicalError,
    auto_basis,
    disjoint_tests,
    extend_basis,
    extract_semiclassical,
    horizontal_sum_size,
    is_semiclassical,
)
from .states import (
    DensityMatrix,
    State,
    dispersion_free_states,
    find_state,
    gleason_state,
    hidden_variable_state,
    infeasibility_certificate,
    is_udf,
    perp_separating,
    verify_state,
)

__version__ = "0.1.0"

__all__ = [
    "CapExceededError",
    "Event",
    "ParseError",
    "TestSpace",
    "TspError",
    "UnknownOutcomeError",
    "ValidationError",
    "complementary",
    "dump_test_space",
    "enumerate_events",
    "load_test_space",
    "orthogonal",
    "orthogonal_events",
    "perspective",
    "AxiomViolationError",
    "Logic",
    "NotAlgebraicError",
    "OrthoalgebraTable",
    "Prop04Result",
    "boolean_oa",
    "build_logic",
    "check_prop04",
    "is_algebraic",
    "loads_oa",
    "logic_to_oa",
    "mo2_oa",
    "natural_order",
    "oa_to_test_space",
    "roundtrip_logic",
    "ConvergenceError",
    "MetricSample",
    "NotTotallyNonOrthogonalError",
    "VietorisBasicOpen",
    "basic_open",
    "closure_check",
    "event_cardinality_locally_constant",
    "hausdorff_distance",
    "load_sample",
    "matching_distance",
    "rank_bound",
    "sample_frames",
    "save_sample",
    "sum_map_lipschitz",
    "tno_radius",
    "vietoris_member",
    "DegenerateTestError",
    "ExtractionResult",
    "NotSemiclassicalError",
    "auto_basis",
    "disjoint_tests",
    "extend_basis",
    "extract_semiclassical",
    "horizontal_sum_size",
    "is_semiclassical",
    "DensityMatrix",
    "State",
    "dispersion_free_states",
    "find_state",
    "gleason_state",
    "hidden_variable_state",
    "infeasibility_certificate",
    "is_udf",
    "perp_separating",
    "verify_state",
    "__version__",
]
