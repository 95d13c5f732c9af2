"""Combinatorial occlusion model toolkit."""
from .model import (
    BACKGROUND, BLANK, MARK_L, MARK_R, UNKNOWN,
    BackgroundPixel, GenConfig, GenParams, GroundTruth, Image, Obj, ObjectPixel, ObjectSet,
    Placement, Scene, add_markers, build_scene, generate_image, make_rng, pad, view,
)

__version__ = "0.1.0"
