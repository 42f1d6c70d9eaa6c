"""Spherical neighbour embedding with doubly stochastic affinities."""

from .diagnostics import (
    prop1_bounds,
    prop2_bounds,
    prop3_check,
    q_row_uniformity,
    sphericity,
)
from .errors import DivergenceError, DosnesError, InputError, NormalizationError
from .ingest import (
    AffinityConfig,
    VectorDataset,
    build_affinity,
    export_embedding,
    load_bipartite,
    load_edge_list,
    load_vectors,
    render_snapshot,
)
from .matrix_core import (
    RectNonnegMatrix,
    SparseSymMatrix,
    StochasticAffinity,
    col_sums,
    row_sums,
    symmetrize,
)
from .normalize import (
    NormalizationReport,
    SinkhornConfig,
    check_doubly_stochastic,
    random_walk_ds,
    sinkhorn_knopp,
)
from .sne_engine import (
    Embedding,
    KernelKind,
    OptimizerConfig,
    RunTrace,
    compute_q,
    gradient,
    initialize,
    kl_objective,
    project_to_sphere,
    run,
)

__version__ = "0.1.0"
