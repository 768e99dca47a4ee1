"""Twin-beam amplifier simulation and calibration toolkit.

Models a seeded two-mode amplifier distributed through a lossy medium as a
cascade of thin gain/loss slabs, scores the intensity-difference squeezing
of the emerging twin beams, inverts measured observables back to medium
parameters, and reduces spectrum-analyzer data the same way the bench
work does.  A brute-force Fock-space oracle cross-checks the Gaussian
engine at small photon numbers.
"""

__version__ = "0.1.0"

from .calibration import (
    DetectionCorrection,
    InversionResult,
    correct_for_detection,
    invert_observables,
)
from .errors import TwinBeamError
from .fock import FockDensity, FockState, oracle_chain, oracle_loss, oracle_observables, oracle_squeeze
from .gaussian import (
    BogoliubovTransform,
    GaussianState,
    ModeSet,
    PhotonStats,
    apply,
    attenuator,
    compose,
    embed,
    identity_transform,
    photon_statistics,
    two_mode_squeezer,
)
from .medium import (
    DetectionParams,
    MediumParams,
    OptimumResult,
    SurfaceGrid,
    SurfaceSpec,
    TwinBeamObservables,
    build_medium,
    find_optimum_gain,
    find_optimum_transmission,
    forward_map,
    medium_output_state,
    reduced_photon_stats,
    simulate_twin_beams,
    squeezing_surface,
)

__all__ = [
    "__version__",
    "TwinBeamError",
    "ModeSet",
    "BogoliubovTransform",
    "GaussianState",
    "PhotonStats",
    "identity_transform",
    "two_mode_squeezer",
    "attenuator",
    "embed",
    "compose",
    "apply",
    "photon_statistics",
    "MediumParams",
    "DetectionParams",
    "TwinBeamObservables",
    "SurfaceSpec",
    "SurfaceGrid",
    "OptimumResult",
    "build_medium",
    "simulate_twin_beams",
    "medium_output_state",
    "reduced_photon_stats",
    "forward_map",
    "squeezing_surface",
    "find_optimum_gain",
    "find_optimum_transmission",
    "InversionResult",
    "DetectionCorrection",
    "invert_observables",
    "correct_for_detection",
    "FockState",
    "FockDensity",
    "oracle_squeeze",
    "oracle_loss",
    "oracle_observables",
    "oracle_chain",
]
