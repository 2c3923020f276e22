"""bachlab: pointwise curvature engine for Bach-flat Kahler geometry.

Chart-based numerical evaluation of Weyl/Bach/Kahler curvature identities,
conformal rescaling checks, classification of Bach-flat Kahler metrics, and a
Bach-energy search inside a cohomogeneity-one ansatz.
"""

from .backend import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
