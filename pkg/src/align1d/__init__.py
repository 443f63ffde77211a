"""Lagrangian simulation and certification for the 1D Euler alignment model
posed on the support of the density (no velocity in the vacuum)."""

from .kernel import UNBOUNDED, Kernel, kernel_constants
from .scenario import (Interval, MarkerSet, Profile, Scenario, discretize,
                       two_block_delta0, two_block_scenario, validate)
from .threshold import (blowup_time_bound, classify, e0, modulus_check,
                        monotone_extension, prepare, psi0)

__all__ = [
    "UNBOUNDED", "Kernel", "kernel_constants", "Interval", "MarkerSet", "Profile",
    "Scenario", "discretize", "two_block_delta0", "two_block_scenario", "validate",
    "blowup_time_bound", "classify", "e0", "modulus_check", "monotone_extension",
    "prepare", "psi0",
]
