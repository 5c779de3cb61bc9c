"""Sequential state generation from classical-core emitters.

Submodules
----------
halfline   single walker next to a reflecting wall
channel    Kraus channels, radiated states, channel-side entropies
motzkin    coloured Motzkin ensembles and their Schmidt spectra
qpda       weighted CNF grammars and push-down machines
conveyor   circuit-level two-leg and three-leg lattices
switches   switch-controlled and disordered walks
"""
from .errors import SeqgenError

__version__ = "0.1.0"

__all__ = ["SeqgenError", "__version__"]
