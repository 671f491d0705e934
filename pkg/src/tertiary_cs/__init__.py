"""Chern-Simons and tertiary characters of flat connection families on tori."""

from __future__ import annotations

__version__ = "0.1.0"

from .connections import (  # noqa: E402
    Connection,
    ConnectionPath,
    ConnectionSheet,
    convex_path,
    curvature,
    holonomy,
    is_flat,
)
from .exterior import MatrixValuedForm, TorusChart, exterior_derivative, wedge  # noqa: E402
from .polynomials import InvariantPolynomial, chern_form, flux_curvature, total_chern_oracle  # noqa: E402
from .tertiary import (  # noqa: E402
    CharacterValue,
    CycleSpec,
    character_of_connection,
    rigidity_sweep,
    tertiary_character,
)
from .transgression import beta_for_pair, double_transgression, fiber_transgression  # noqa: E402

__all__ = [
    "__version__",
    "TorusChart",
    "MatrixValuedForm",
    "exterior_derivative",
    "wedge",
    "Connection",
    "ConnectionPath",
    "ConnectionSheet",
    "convex_path",
    "curvature",
    "holonomy",
    "is_flat",
    "InvariantPolynomial",
    "chern_form",
    "flux_curvature",
    "total_chern_oracle",
    "fiber_transgression",
    "double_transgression",
    "beta_for_pair",
    "CharacterValue",
    "CycleSpec",
    "character_of_connection",
    "tertiary_character",
    "rigidity_sweep",
]
