"""Time-domain two-arm quadrature correlation measurements of pulsed quantum light.

Simulates homodyne and electro-optic correlation measurements on a subcycle
mode basis and reconstructs multimode Gaussian covariances and single-mode
Fock-state statistics from them.
"""

from . import (analysis, crystal, elements, fockstats, measurement, modes, states, symplectic,
               tomography)

__version__ = "0.1.0"

__all__ = ["analysis", "crystal", "elements", "fockstats", "measurement", "modes", "states",
           "symplectic", "tomography", "__version__"]
