"""dropflame: axisymmetric two-phase (VOF) simulation of the evaporation,
boiling and combustion of a fuel droplet suspended on a solid fiber."""

__version__ = "0.1.0"
