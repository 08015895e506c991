"""Pseudospectral laboratory for full-dispersion KP-I solitary waves on Beltrami flows.

Subpackages by role:

``spectral``
    periodic grids, transforms, multipliers, dealiased products, norms
``dispersion``
    dispersion symbols, derived constants, no-other-roots scan
``lumps``
    exact KP-I lumps, normalisation map, residuals, nondegeneracy
``flatops``
    flat-state operators and their long-wave constant limits
``solver``
    the reduced full-dispersion equation and continuation in ``eps``
``reconstruct``, ``io``, ``cli``
    physical surface, serialization and the ``wavecli`` front end
"""

__version__ = "0.1.0"

from .dispersion import PhysicalParams, derived_constants  # noqa: E402
from .spectral import RealField2D, SpectralField2D, SpectralGrid2D, make_grid  # noqa: E402

__all__ = [
    "__version__",
    "PhysicalParams",
    "derived_constants",
    "RealField2D",
    "SpectralField2D",
    "SpectralGrid2D",
    "make_grid",
]
