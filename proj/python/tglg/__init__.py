"""Graph-guided Bayesian marker selection (TGLG prior) with an Ising baseline."""

from ._core import __version__, auc, fit, laplacian, psrf, simulate

__all__ = ["__version__", "auc", "fit", "laplacian", "psrf", "simulate"]
