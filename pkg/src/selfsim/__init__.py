"""Self-similar substitution tilings: finitely-additive measures, ergodic
deviations and the scaling of spectral measures at zero."""

from .config import builtin, parse_config
from .substitution import (Substitution, build_incidence, derive_lengths_1d, is_primitive,
                           spectral_data, tile_frequencies, validate_geometry)
from .tiling import Window, ball_decomposition, expand, make_window, supertile_at, type_at

__all__ = [
    "Substitution", "Window", "ball_decomposition", "build_incidence", "builtin",
    "derive_lengths_1d", "expand", "is_primitive", "make_window", "parse_config",
    "spectral_data", "supertile_at", "tile_frequencies", "type_at", "validate_geometry",
]
