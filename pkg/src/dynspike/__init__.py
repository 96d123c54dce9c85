"""dynspike: dynamical-systems encoding workbench for spiking networks.

Feature vectors become 3-D trajectories of tunable dynamical systems; a
from-scratch surrogate-gradient SNN (and an isomorphic ReLU MLP) consumes
them; Lyapunov spectra, information dynamics, mean-field theory and fit
machinery quantify how the input dynamics steer the network between
sparse/dissipative and dense/expansive computation.
"""

from . import backends

__version__ = "0.1.0"

__all__ = ["backends", "__version__"]
