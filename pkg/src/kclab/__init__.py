"""Knowledge-compilation lab: truth tables, GF(2) codes and bilinear forms,
rectangle covers and discrepancy, and d-DNNF circuits."""

from .boolfun import TruthTable
from .gf2 import Gf2Matrix
from .nnf import NnfCircuit
from .rect import Cover, Partition, Rectangle

__version__ = "0.1.0"

__all__ = ["Cover", "Gf2Matrix", "NnfCircuit", "Partition", "Rectangle", "TruthTable", "__version__"]
