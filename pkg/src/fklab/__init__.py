"""Monte Carlo laboratory for the random-cluster model.

Samplers (cluster and single-bond dynamics), cluster statistics,
divide-and-color spin models and CLT-style experiments, all validated
against an exact enumeration oracle on tiny graphs.
"""

__version__ = "0.3.0"

from .backend import BACKEND  # noqa: F401
