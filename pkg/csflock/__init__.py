"""Cucker-Smale particles, reduced inertial PDE models and their comparison harness"""

__version__ = "0.1.0"
__keywords__ = "cucker-smale flocking reduced pde spectral spde particles"
