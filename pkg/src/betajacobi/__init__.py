"""High-temperature beta Jacobi ensembles: sampling, limits and fluctuation checks."""

__version__ = "0.1.0"
