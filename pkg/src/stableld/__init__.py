"""Stable large deviations for i.i.d. sums and Gibbs-Markov ergodic sums.

Modules
-------
tails
    Regularly varying tail models and norming sequences.
stable_dist
    Stable laws: sampling, characteristic functions and tails.
smoothing
    Smoothing kernel and gap integrals.
iid_baseline
    i.i.d. Monte Carlo, characteristic functions and Fourier inversion.
dynamics
    Interval maps, observables and ergodic sums.
transfer_spectral
    Ulam transfer operators and spectral diagnostics.
ld_experiments
    Dynamical large-deviation experiments.
cli
    Configuration-driven runner.
"""

__version__ = "0.1.0"

from .errors import (
    DomainError,
    FitDegenerate,
    InsufficientSamples,
    ModelMismatch,
    NumericError,
    OrbitDegenerate,
    ResourceError,
    SpectralDegeneracy,
    StableLDError,
    UnsupportedCase,
)
from .kernels import BACKEND_NAME
from .tails import NormingPlan, SlowlyVarying, TailModel, tail_prob

__all__ = [
    "__version__",
    "BACKEND_NAME",
    "TailModel",
    "SlowlyVarying",
    "NormingPlan",
    "tail_prob",
    "StableLDError",
    "DomainError",
    "UnsupportedCase",
    "NumericError",
    "InsufficientSamples",
    "OrbitDegenerate",
    "SpectralDegeneracy",
    "ResourceError",
    "ModelMismatch",
    "FitDegenerate",
]
