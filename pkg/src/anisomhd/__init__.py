"""Pseudo-spectral simulator and verification suite for 3D anisotropic MHD
near a uniform background magnetic field."""

from .diagnostics import EnergyReport, SobolevSpec, curl, interaction_term, pressure_field, sobolev_norm_sq
from .dynamics import BlowUpError, CFLViolation, ConfigurationError, ModelConfig, State, rhs, run, step
from .initial import InitSpec, generate_initial
from .spectral import Grid, SpectralScalarField, SpectralVectorField, dealiased_product, derivative, leray_project

__all__ = [
    "BlowUpError",
    "CFLViolation",
    "ConfigurationError",
    "EnergyReport",
    "Grid",
    "InitSpec",
    "ModelConfig",
    "SobolevSpec",
    "SpectralScalarField",
    "SpectralVectorField",
    "State",
    "curl",
    "dealiased_product",
    "derivative",
    "generate_initial",
    "interaction_term",
    "leray_project",
    "pressure_field",
    "rhs",
    "run",
    "sobolev_norm_sq",
    "step",
]

__version__ = "0.1.0"
