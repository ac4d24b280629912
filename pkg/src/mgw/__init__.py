"""Multitype Galton-Watson trees and forests.

Sampling under critical offspring laws, depth-first series (height,
type counts, component index), type-erasing projections with deleted
counters, exact small-instance oracles, and a Monte Carlo harness that
checks the asymptotic scaling statements at desk scale.
"""

from .errors import (
    BudgetError,
    ConsistencyError,
    MGWError,
    NumericalError,
    SpecError,
    StructureError,
    SupportError,
)
from .offspring import (
    FiniteTable,
    Geometric,
    HeavyCount,
    LimitConstants,
    OffspringSpec,
    PerronData,
    height_tail_constant,
    is_alternating,
    laplace_exponent,
    limit_constants,
    load_spec,
    mean_matrix,
    perron,
    pgf_eval,
    reduced_mean_matrix,
    reduced_offspring_exact,
    save_spec,
    spectral,
)
from .experiments import EXPERIMENTS, ExperimentReport, StatRow, canonical_json
from .oracle import (
    EnumeratedLaw,
    enumerate_trees,
    gw_tree_probability,
    otter_dwass,
    reduced_pmf_by_convolution,
    tree_probability,
)
from .projection import (
    ProjectionOutput,
    collapse_type,
    js_bijection,
    js_inverse,
    nu_offspring,
    project,
)
from .reference import REFERENCE_SPECS, get_reference_spec
from .rng import DEFAULT_SEED, derive_words, resolve_seed, splitmix64, stream
from .sampler import (
    DEFAULT_BUDGET,
    Exhausted,
    SampleBudget,
    Truncated,
    height_reach_block,
    reachable_counts,
    sample_conditioned,
    sample_forest,
    sample_tree,
    sample_trees,
    type_count_block,
    upsilon_block,
)
from .trees import (
    HeightSeries,
    Label,
    TypedForest,
    ancestor_type_count,
    component_index,
    component_index_series,
    depth_first_order,
    g_series,
    height_process,
    lambda_series,
    prune,
    subtree,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
