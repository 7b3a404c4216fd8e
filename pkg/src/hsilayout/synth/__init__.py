"""Synthetic fixtures with known ground truth."""

from .bodies import CONTACT_CLEARANCE, FOOT_CLEARANCE, N_JOINTS, PosedBody
from .furniture import FurnitureSpec, furniture_mesh, sample_spec
from .generate import SynthesisError, SynthOptions, SyntheticScene, generate_scene, write_fixture

__all__ = [
    "CONTACT_CLEARANCE", "FOOT_CLEARANCE", "N_JOINTS", "PosedBody", "FurnitureSpec", "furniture_mesh",
    "sample_spec", "SynthesisError", "SynthOptions", "SyntheticScene", "generate_scene", "write_fixture",
]
