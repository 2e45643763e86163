"""Allen-Cahn min-max solver and verification harness for CMC interfaces."""

from .checkpoint import dump_field, load_field
from .competitor import (
    ConstantsLedger, CylinderModel, PathReport, Schedule, build_model, choose_constants,
    contradiction_path, decay_table, error_terms,
)
from .config import RunConfig, load_config
from .energy import (
    EnergyParams, StableConstants, ac_energy, ac_gradient, hessian_apply, stable_constants,
)
from .errors import (
    AdmissibilityError, EigenError, FieldParseError, GridError, InfeasibleModelError,
    OptimizationError, ParameterError, PhaseMinmaxError, QuadratureError, ShapeError,
    UnsupportedError,
)
from .index import JacobiSpectrum, capacity_cutoff_test, stability_spectrum
from .manifold import Field, SymmetricSphereGrid, geometry_constants, integrate, laplace_beltrami
from .minmax import MinMaxResult, morse_index, refine_critical_point, relax_path, run_minmax
from .path import PathOfFields
from .potential import (
    DoubleWell, TruncatedProfile, WellConstants, eval_well, profile_1d, profile_energy,
    q_density, sigma_constant, truncated_profile,
)
from .slidepath import LimitEnergies, SlideTrace, limit_energies, recovery_path, sliding_energy
from .tube import Interface, TubeSamples, f_lambda, signed_distance, tube_profile

__version__ = "0.1.0"
