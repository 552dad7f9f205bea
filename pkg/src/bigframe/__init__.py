"""Numerical certification of bi-g-frames and K-bi-g-frames on finite-dimensional spaces."""

from .core import AtomSpace, BiGSystem, FrameSpec, Tolerances, load_system, save_system
from .errors import BiFrameError
from .frame_op import frame_operator, ordinary_bounds
from .kframe import k_bounds

__all__ = [
    "AtomSpace",
    "BiGSystem",
    "BiFrameError",
    "FrameSpec",
    "Tolerances",
    "frame_operator",
    "k_bounds",
    "load_system",
    "ordinary_bounds",
    "save_system",
]
