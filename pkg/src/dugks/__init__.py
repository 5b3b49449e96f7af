"""Discrete unified gas-kinetic solver for the isothermal BGK model.

Submodules: :mod:`velocity_set`, :mod:`kinetics`, :mod:`grid`, :mod:`scheme`,
:mod:`benchmarks`, :mod:`checkpoint`, :mod:`harness`, :mod:`config`, :mod:`cli`.
"""

__version__ = "0.1.0"
