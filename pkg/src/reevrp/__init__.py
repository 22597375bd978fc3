"""Range-extended electric vehicle routing: heuristics, exact oracle, pricing and cuts."""

__version__ = "0.1.0"
