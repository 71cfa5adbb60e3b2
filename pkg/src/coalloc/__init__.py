"""Fair cost allocation for cooperative games.

Exact (happy) nucleolus computation via the iterative fixing scheme and a
scalable constraint-generation heuristic for vehicle routing games.
"""

__version__ = "0.1.0"
