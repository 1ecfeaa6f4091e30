"""dpope: differentially private online prediction from experts and OCO,
with a seeded Monte-Carlo harness that verifies the regret, switching,
marginal-distribution, and privacy behavior of the algorithms."""

from ._kernels import backend_name

__version__ = "0.1.0"
__all__ = ["backend_name", "__version__"]
