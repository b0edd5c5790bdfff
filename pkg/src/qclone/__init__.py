"""Optimal universal cloning machines for N-level quantum systems."""

__version__ = "0.1.0"

from .machine import (
    CloneOutput,
    CloningIsometry,
    DensityMatrix,
    MachineSpec,
    basis_fidelity,
    build_isometry,
    clone_state,
    fidelity_of_clone,
    fmax_analytic,
    fnm_analytic,
    single_copy_density,
    tilde_fmax,
)
from .sphere import PureState, SphericalCoordinates, sample_state, state_from_coordinates
from .symbasis import OccupationVector, SymmetricBasis, enumerate_occupations, symmetric_dimension

__all__ = [
    "CloneOutput",
    "CloningIsometry",
    "DensityMatrix",
    "MachineSpec",
    "OccupationVector",
    "PureState",
    "SphericalCoordinates",
    "SymmetricBasis",
    "basis_fidelity",
    "build_isometry",
    "clone_state",
    "enumerate_occupations",
    "fidelity_of_clone",
    "fmax_analytic",
    "fnm_analytic",
    "sample_state",
    "single_copy_density",
    "state_from_coordinates",
    "symmetric_dimension",
    "tilde_fmax",
]
