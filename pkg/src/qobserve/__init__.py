"""Observability of finite-dimensional quantum control systems under measurement."""

__version__ = "0.1.0"

from .linalg import (
    DEFAULT_TOL,
    OperatorSubspace,
    SpectralDecomposition,
    Tolerance,
    commutator,
    expm,
    gell_mann_basis,
    hs_inner,
    orthonormal_extend,
    spectral,
    traceless_shift,
)
from .system import ControlSystem
from .lie import (
    commutator_dimension,
    dynamical_algebra,
    generalized_observability_space,
    observability_space,
    stabilize,
)
from .measurement import (
    DensityState,
    ExperimentScript,
    KrausChannel,
    MeasurementRecord,
    Segment,
    evolve,
    kraus_apply,
    kraus_dual,
    project,
    run_experiment,
)
from .observability import (
    ObservabilityReport,
    analyze,
    decompose_state,
    first_order_condition,
    indistinguishable,
    orbit_sample,
)
from .tomography import (
    ancilla_tomography,
    design_permutation_experiment,
    run_permutation_tomography,
    verify_rank_lemma,
)
