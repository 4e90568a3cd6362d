"""
Scene Config Files

Plain-text `key = value` description of a synthetic scene and its camera
sequence. Lines starting with `#` are comments. Vectors are space-separated
numbers. Indexed surfaces use `plane.<i>.*` and `patch.<i>.*`; indices only
group keys and may be any non-negative integers.

Grammar:

    scene.texture_frequency = 1.5          # rad per scene unit
    scene.background_depth  = 20           # optional fronto-parallel backdrop (world z)
    scene.background_seed   = 7
    scene.noise_sigma       = 0.0          # additive Gaussian image noise
    scene.seed              = 0            # noise seed

    plane.0.normal = 0 0 1                 # plane n·X = offset
    plane.0.offset = 10
    plane.0.seed   = 3

    patch.0.rect        = 20 20 40 40      # u_min v_min u_max v_max at the world origin
    patch.0.depth       = 6
    patch.0.translation = 0.05 0 0         # per-frame displacement
    patch.0.seed        = 11

    camera.intrinsics = 64 64 60 60 32 32  # width height fx fy cx cy

    sequence.frames            = 3
    sequence.motion            = constant_velocity   # constant_velocity | rotation | circle
    sequence.twist             = 0.1 0 0 0 0 0       # constant_velocity: (v, ω) per frame
    sequence.degrees_per_frame = 2                   # rotation
    sequence.axis              = 0 1 0               # rotation
    sequence.radius            = 0.5                 # circle

Unknown keys are rejected.
"""

import logging
import re
from typing import Dict, NamedTuple, Optional

from pydantic import ValidationError

from geometry.models import Intrinsics
from oracle.models import MovingPatch, PlaneSpec, SceneSpec, SequenceSpec
from oracle.sequences import circle_sequence, constant_velocity_sequence, rotation_sequence
from utils.errors import ConfigurationError
from utils.run_config import parse_floats, parse_key_value_text

logger = logging.getLogger(__name__)

SCENE_KEYS = {"texture_frequency", "background_depth", "background_seed", "noise_sigma", "seed"}
PLANE_KEYS = {"normal", "offset", "seed"}
PATCH_KEYS = {"rect", "depth", "translation", "seed"}
SEQUENCE_KEYS = {"frames", "motion", "twist", "degrees_per_frame", "axis", "radius"}
MOTIONS = ("constant_velocity", "rotation", "circle")

_INDEXED = re.compile(r"^(plane|patch)\.(\d+)\.(\w+)$")


class SceneFile(NamedTuple):
    scene: SceneSpec
    sequence: Optional[SequenceSpec]


def _int(value: str, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"'{key}' expects an integer, got '{value}'")


def _float(value: str, key: str) -> float:
    return parse_floats(value, 1, key)[0]


def _build_sequence(values: Dict[str, str], K: Intrinsics) -> SequenceSpec:
    frames = _int(values.get("frames", "3"), "sequence.frames")
    if frames < 1:
        raise ConfigurationError("sequence.frames must be >= 1")
    motion = values.get("motion", "constant_velocity")
    if motion not in MOTIONS:
        raise ConfigurationError(f"sequence.motion must be one of {MOTIONS}, got '{motion}'")
    if motion == "constant_velocity":
        twist = parse_floats(values.get("twist", "0 0 0 0 0 0"), 6, "sequence.twist")
        return constant_velocity_sequence(K, frames, twist)
    if motion == "rotation":
        degrees = _float(values.get("degrees_per_frame", "1"), "sequence.degrees_per_frame")
        axis = parse_floats(values.get("axis", "0 1 0"), 3, "sequence.axis")
        return rotation_sequence(K, frames, degrees, axis)
    radius = _float(values.get("radius", "0.5"), "sequence.radius")
    return circle_sequence(K, frames, radius)


def parse_scene_config(text: str, source: str = "<scene>") -> SceneFile:
    """
    Parse a scene config.

    Returns:
        SceneFile; sequence is None when no camera.intrinsics key is given

    Raises:
        ParseError: On malformed lines
        ConfigurationError: On unknown keys or invalid values
    """
    entries = parse_key_value_text(text, source)
    scene_values: Dict[str, str] = {}
    sequence_values: Dict[str, str] = {}
    planes: Dict[int, Dict[str, str]] = {}
    patches: Dict[int, Dict[str, str]] = {}
    intrinsics_value: Optional[str] = None

    for key, value in entries.items():
        indexed = _INDEXED.match(key)
        if indexed:
            kind, index, field = indexed.group(1), int(indexed.group(2)), indexed.group(3)
            allowed, target = (PLANE_KEYS, planes) if kind == "plane" else (PATCH_KEYS, patches)
            if field not in allowed:
                raise ConfigurationError(f"{source}: unknown key '{key}'")
            target.setdefault(index, {})[field] = value
            continue
        section, _, field = key.partition(".")
        if section == "scene" and field in SCENE_KEYS:
            scene_values[field] = value
        elif section == "sequence" and field in SEQUENCE_KEYS:
            sequence_values[field] = value
        elif key == "camera.intrinsics":
            intrinsics_value = value
        else:
            raise ConfigurationError(f"{source}: unknown key '{key}'")

    try:
        plane_specs = []
        for index in sorted(planes):
            fields = planes[index]
            missing = {"normal", "offset"} - fields.keys()
            if missing:
                raise ConfigurationError(f"{source}: plane.{index} is missing {sorted(missing)}")
            plane_specs.append(PlaneSpec(
                normal=parse_floats(fields["normal"], 3, f"plane.{index}.normal"),
                offset=_float(fields["offset"], f"plane.{index}.offset"),
                seed=_int(fields.get("seed", str(index)), f"plane.{index}.seed"),
            ))
        patch_specs = []
        for index in sorted(patches):
            fields = patches[index]
            missing = {"rect", "depth", "translation"} - fields.keys()
            if missing:
                raise ConfigurationError(f"{source}: patch.{index} is missing {sorted(missing)}")
            patch_specs.append(MovingPatch(
                rect=tuple(parse_floats(fields["rect"], 4, f"patch.{index}.rect")),
                depth=_float(fields["depth"], f"patch.{index}.depth"),
                translation=parse_floats(fields["translation"], 3, f"patch.{index}.translation"),
                seed=_int(fields.get("seed", str(1000 + index)), f"patch.{index}.seed"),
            ))
        scene_kwargs = {}
        for field, value in scene_values.items():
            scene_kwargs[field] = _int(value, f"scene.{field}") if field.endswith("seed") else _float(value, f"scene.{field}")
        scene = SceneSpec(planes=plane_specs, moving_patches=patch_specs, **scene_kwargs)

        sequence = None
        if intrinsics_value is not None:
            width, height, fx, fy, cx, cy = parse_floats(intrinsics_value, 6, "camera.intrinsics")
            K = Intrinsics(width=int(width), height=int(height), fx=fx, fy=fy, cx=cx, cy=cy)
            sequence = _build_sequence(sequence_values, K)
        elif sequence_values:
            raise ConfigurationError(f"{source}: sequence.* keys need camera.intrinsics")
    except ValidationError as e:
        raise ConfigurationError(f"{source}: invalid scene description: {e}")

    logger.debug(f"Parsed scene from {source}: {len(plane_specs)} planes, {len(patch_specs)} moving patches")
    return SceneFile(scene=scene, sequence=sequence)


def load_scene_config(path: str) -> SceneFile:
    """Read and parse a scene config file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigurationError(f"Cannot read scene config {path}: {e}")
    return parse_scene_config(text, path)
