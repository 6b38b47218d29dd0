"""Euler-integral solutions of the multiple-SLE commutation system, their closed-form
specializations at kappa = 2, 6, 8 and infinity, and lattice Monte Carlo checks."""

from .euler import Configuration, CycleSpec, c_kappa, euler_solution, psi_nonintersection
from .fomin import fomin_density, fomin_determinant
from .hexagon import event_probabilities, hex_constants, mercedes_probability
from .pairings import NonCrossingPairing, NonCrossingPartition, catalan, enumerate_noncrossing_pairings
from .specialfn import chordal_crossing, gamma, hyp2f1
from .ust import psi_ust

__version__ = "0.1.0"

__all__ = [
    "Configuration", "CycleSpec", "NonCrossingPairing", "NonCrossingPartition", "c_kappa", "catalan",
    "chordal_crossing", "enumerate_noncrossing_pairings", "euler_solution", "event_probabilities",
    "fomin_density", "fomin_determinant", "gamma", "hex_constants", "hyp2f1", "mercedes_probability",
    "psi_nonintersection", "psi_ust",
]
