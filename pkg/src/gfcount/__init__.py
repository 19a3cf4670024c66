"""Photon-counting statistics of driven four-level atoms via generating functions."""
__version__ = "0.1.0"

from .models import (
    RB87_GAMMA_D1,
    RB87_GAMMA_D2,
    RB87_HFS_SPLITTING,
    AtomModel,
    DriveConfig,
    ModelKind,
    build_double_lambda,
    build_n_type,
    gdc_cross,
)
from .generator import GeneratorPair, assemble_generators
from .engine import (
    IntegrationError,
    NonFiniteState,
    StepSizeUnderflow,
    TruncationWarning,
    evolve,
    evolve_factorial_moments,
    evolve_pn,
)
from .oracle import (
    finite_difference_moments,
    hierarchy_consistency,
    null_space_steady_state,
    steady_rate,
)
from .observables import (
    ScanOptions,
    ScanResult,
    detuning_map_2d,
    line_shape_scan,
    mandel_q,
    scan_2d,
    steady_emission_rate,
)

__all__ = [
    "AtomModel", "DriveConfig", "GeneratorPair", "IntegrationError", "ModelKind",
    "NonFiniteState", "RB87_GAMMA_D1", "RB87_GAMMA_D2", "RB87_HFS_SPLITTING", "ScanOptions",
    "ScanResult", "StepSizeUnderflow", "TruncationWarning", "assemble_generators",
    "build_double_lambda", "build_n_type", "detuning_map_2d", "evolve",
    "evolve_factorial_moments", "evolve_pn", "finite_difference_moments", "gdc_cross",
    "hierarchy_consistency", "line_shape_scan", "mandel_q", "null_space_steady_state",
    "scan_2d", "steady_emission_rate", "steady_rate",
]
