"""Plane-symmetry classification and crystallographic image processing.

Classifies 2D-periodic images into plane symmetry groups and projected
Laue classes by statistical model selection on Fourier coefficients, and
applies the selected symmetry to produce an averaged, symmetry-enforced
image.
"""

from .groups import SETTINGS, SETTING_ORDER, PlaneGroup
from .hierarchy import ClassificationResult, ClassifyConfig, classify
from .cip import process

__all__ = [
    "SETTINGS",
    "SETTING_ORDER",
    "PlaneGroup",
    "ClassificationResult",
    "ClassifyConfig",
    "classify",
    "process",
]

__version__ = "0.1.0"
