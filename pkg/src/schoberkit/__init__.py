"""schoberkit: exact toric, polyhedral and constructible-sheaf computations
for the decategorified verification of the A1-surface and conifold flop
schober examples."""

from .exact import RANK_BACKEND

__version__ = "0.1.0"

__all__ = ["RANK_BACKEND", "__version__"]
