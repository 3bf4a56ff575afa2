"""
ellipsum: lattice-point statistics of ellipsoids with diophantine centers.

Subpackages:

- ``ellipsum.arith``: quadratic forms, shift vectors, double-double phases
- ``ellipsum.lattice``: ellipsoid enumeration, radii, shells, cache files
- ``ellipsum.spectral``: exponential sums, mollifiers, counting deviations
- ``ellipsum.averaging``: averaging kernels and the limit experiments
- ``ellipsum.theta``: Jacobi theta sums and their mean-square identities
- ``ellipsum.cli``: the ``ellipsum`` command line
"""

from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version

from ellipsum.errors import BudgetError, EllipsumError, ValidationError
from ellipsum.utils.logging import logger

PACKAGE_NAME = "ellipsum"


def get_version() -> str:
    """
    Return the installed package version.

    :return: The version string of the installed package, "0.0.0" when
        running from a source tree without installed metadata.
    :rtype: str
    """
    try:
        return version(PACKAGE_NAME)
    except PackageNotFoundError:  # if running from source / editable
        logger.warning(
            f"Package '{PACKAGE_NAME}' not found. Returning default "
            "version '0.0.0'."
        )
        return "0.0.0"


__all__ = [
    "BudgetError",
    "EllipsumError",
    "ValidationError",
    "get_version",
]
