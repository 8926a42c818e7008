"""Hard-core lattice tile systems: enumeration, allocation, certificates, MC."""

from .exactmath import INFINITY, Scaled
from .geometry import TileShape
from .system import Species, TileSystem
from .configuration import Configuration, Placement, Torus, Window

__all__ = [
    "INFINITY",
    "Scaled",
    "TileShape",
    "Species",
    "TileSystem",
    "Configuration",
    "Placement",
    "Torus",
    "Window",
]

__version__ = "0.1.0"
