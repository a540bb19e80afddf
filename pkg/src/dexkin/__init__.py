"""Kinematic dexterity analysis and motion retargeting for direct-driven robot hands."""

__version__ = "0.1.0"

from .model import ArchetypeParams, HandModel, Joint, KinematicChain, build_archetype, validate_model
from .transforms import Transform
from .urdf import UrdfError, parse_hand_model, serialize_hand_model

__all__ = [
    "ArchetypeParams",
    "HandModel",
    "Joint",
    "KinematicChain",
    "Transform",
    "UrdfError",
    "build_archetype",
    "parse_hand_model",
    "serialize_hand_model",
    "validate_model",
    "__version__",
]
