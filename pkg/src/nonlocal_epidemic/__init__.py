"""Nonlocal epidemic model with two moving fronts.

Agents ``u`` and infective humans ``v`` disperse by convolution kernels on
an interval ``(g(t), h(t))`` whose ends move with the outward flux of
infection.  Subpackages and modules:

``kernels``       dispersal kernel families and tail functions
``model``         parameters, reaction term, thresholds, homogeneous ODE
``discrete_ops``  lattice, clipped quadrature, convolution operators
``eigen``         principal eigenvalue, critical half-width ``l*``
``fixed_domain``  fixed-interval evolution and steady states
``free_boundary`` moving-front integrator, classification, ``mu*``, oracles
``cli``           command-line entry point
"""
from .errors import NonlocalEpidemicError
from .kernels import Kernel, KernelFamily, make_kernel, tail, validate_kernel
from .model import InitialData, ModelParams, Monod, canonical_params, equilibrium, ode_trajectory, r0

__version__ = "0.1.0"

__all__ = [
    "InitialData", "Kernel", "KernelFamily", "ModelParams", "Monod", "NonlocalEpidemicError",
    "canonical_params", "equilibrium", "make_kernel", "ode_trajectory", "r0", "tail", "validate_kernel",
]
