"""Smart-brush map editing toolkit.

Multi-material tile-mask maps, brush-mask inpainting with pluggable
generators, template-guided color coherence, seam-free multi-chunk
generation, and the metrics to evaluate all of it.
"""

from .core import (
    BlendedImage,
    Chunk,
    GameMap,
    Material,
    MaterialSet,
    TileMask,
    apply_brush,
    blend_chunk,
    normalize_weights,
)
from .bundle import load_map_bundle, save_map_bundle
from .dataset import MaskMode, classify_mask_mode, generate_random_mask

__version__ = "0.1.0"

__all__ = [
    "BlendedImage",
    "Chunk",
    "GameMap",
    "MaskMode",
    "Material",
    "MaterialSet",
    "TileMask",
    "apply_brush",
    "blend_chunk",
    "classify_mask_mode",
    "generate_random_mask",
    "load_map_bundle",
    "normalize_weights",
    "save_map_bundle",
]
