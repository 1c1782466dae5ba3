"""Task-oriented grasp planning from part decompositions and a language-model reasoning chain."""

__version__ = "0.1.0"
