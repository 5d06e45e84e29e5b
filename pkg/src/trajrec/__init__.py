"""Recovery of pen trajectories from single-pixel-wide handwriting skeletons."""

from __future__ import annotations

from .params import ParamSet, WeightRow, load_params
from .skeleton import SkeletonImage, analyze

__all__ = ["ParamSet", "WeightRow", "SkeletonImage", "analyze", "load_params"]
