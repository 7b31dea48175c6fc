"""Strictly heavy sets of translations on the torus and the p-adic integers.

Exact arithmetic lives in :mod:`heavyset.exact`; groups and targets in
:mod:`heavyset.groups` and :mod:`heavyset.targets`; orbit deficits and heavy
sets in :mod:`heavyset.heavy`; packing and dimension in
:mod:`heavyset.dimension`; the CLI pipeline in :mod:`heavyset.experiments`.
"""

from .errors import (ConfigError, HeavysetError, PreconditionError, ResourceCapError,
                     SpaceMismatchError, UnsupportedFieldError)
from .exact import ExactScalar, parse
from .groups import PAdicPoint, PAdicSpace, TorusPoint, TorusSpace

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ExactScalar", "HeavysetError", "PAdicPoint", "PAdicSpace",
    "PreconditionError", "ResourceCapError", "SpaceMismatchError", "TorusPoint", "TorusSpace",
    "UnsupportedFieldError", "parse",
]
