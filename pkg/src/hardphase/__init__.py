"""Hard-phase relativistic fluid stars: steady states, phase plane and radial stability."""
from .eos import HARD_PHASE, EosSpec

__all__ = ["EosSpec", "HARD_PHASE"]
__version__ = "0.1.0"
