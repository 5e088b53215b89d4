"""Theory solver for the first-order fragment used by the conversion rule."""
from .core import Outcome, Solver, entails, is_unsat

__all__ = ["Outcome", "Solver", "entails", "is_unsat"]
