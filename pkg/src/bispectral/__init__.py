"""Rank-one Calogero-Moser pairs, bispectral Baker functions and their involutions."""
__version__ = "0.1.0"

from .baker import (
    PRESETS,
    Kind,
    RhoPoly,
    airy_k,
    bessel_k,
    condition_residual,
    k_solver_oracle,
    verify_a_identity,
    wilson_psi,
)
from .core import CMPair, SpectralData, canonicalize, from_spectral_data, random_pair, validate_and_factor
from .dynamics import FlowSpec, Trajectory, flow, hamiltonian, pole_trajectories, tau
from .involution import TangentVector, antisymplectic_residual, beta_airy, beta_bessel, beta_kp, symplectic_form
from .scalar import Backend, GaussianRational
