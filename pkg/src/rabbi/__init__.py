"""Re-solving LP policies for online resource allocation.

Subpackages cover the linear programming core (`lp`), four allocation
settings (`knapsack`, `probing`, `pricing`, `learning`) and the Monte
Carlo experiment harness (`sim`).
"""

__version__ = "0.1.0"
