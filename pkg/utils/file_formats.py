"""
File Formats

Readers and writers for the on-disk formats of the engine:
- PPM (P6) / PGM (P5) images, 8-bit, values mapped linearly to [0, 1]
- PFM ("Pf") depth maps, float32, bottom-up rows, NaN for invalid pixels
- KITTI pose files, one row-major 3x4 [R|t] per line
- Intrinsics text files "width height fx fy cx cy"
- ASCII PLY point clouds and CSV tables
- Frame directories (NNNNNN.ppm + NNNNNN.pfm + intrinsics.txt + poses.txt)
"""

import csv
import logging
import os
import re
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from geometry.lie import nearest_rotation
from geometry.models import DepthMap, ImageGrid, Intrinsics, PointCloud, PoseSE3
from odometry.models import Trajectory
from utils.errors import ConfigurationError, ParseError

logger = logging.getLogger(__name__)

# rotations drifting further than this from orthonormal are projected with a warning
ORTHONORMAL_WARN_DRIFT = 1e-6
# below this the rotation is used as read
ORTHONORMAL_KEEP_DRIFT = 1e-9

INTRINSICS_FILE = "intrinsics.txt"
POSES_FILE = "poses.txt"
_FRAME_NAME = re.compile(r"^(\d+)\.ppm$")


def _read_bytes(path: str) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as e:
        raise ConfigurationError(f"Cannot read {path}: {e}")


def _write_bytes(path: str, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as f:
        f.write(payload)


# ============================================================================
# PPM / PGM
# ============================================================================

def _header_tokens(data: bytes, count: int, path: str) -> Tuple[List[Tuple[bytes, int]], int]:
    """
    Read `count` whitespace-separated header tokens, skipping # comments.

    Returns the tokens with their byte offsets and the offset just past the
    single whitespace byte that ends the header.
    """
    tokens: List[Tuple[bytes, int]] = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            raise ParseError(f"{path}: header ended after {len(tokens)} of {count} fields", byte_offset=pos)
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append((data[start:pos], start))
    if pos >= n or not data[pos:pos + 1].isspace():
        raise ParseError(f"{path}: expected a single whitespace byte after the header", byte_offset=pos)
    return tokens, pos + 1


def _header_int(token: Tuple[bytes, int], name: str, path: str) -> int:
    raw, offset = token
    if not raw.isdigit():
        raise ParseError(f"{path}: {name} '{raw.decode('latin-1')}' is not a positive integer", byte_offset=offset)
    value = int(raw)
    if value <= 0:
        raise ParseError(f"{path}: {name} must be positive", byte_offset=offset)
    return value


def decode_ppm(data: bytes, path: str = "<ppm>") -> ImageGrid:
    """Decode binary P6 (RGB) or P5 (gray) bytes."""
    tokens, payload_start = _header_tokens(data, 4, path)
    magic, magic_offset = tokens[0]
    if magic not in (b"P6", b"P5"):
        raise ParseError(f"{path}: unsupported magic '{magic.decode('latin-1')}', expected P6 or P5",
                         byte_offset=magic_offset)
    width = _header_int(tokens[1], "width", path)
    height = _header_int(tokens[2], "height", path)
    maxval = _header_int(tokens[3], "maxval", path)
    if maxval > 255:
        raise ParseError(f"{path}: maxval {maxval} needs 16-bit samples, only 8-bit is supported",
                         byte_offset=tokens[3][1])
    channels = 3 if magic == b"P6" else 1
    expected = width * height * channels
    actual = len(data) - payload_start
    if actual < expected:
        raise ParseError(f"{path}: payload truncated, expected {expected} bytes but found {actual}",
                         byte_offset=payload_start)
    pixels = np.frombuffer(data, dtype=np.uint8, count=expected, offset=payload_start)
    return ImageGrid(values=pixels.reshape(height, width, channels).astype(np.float64) / maxval)


def encode_ppm(image: ImageGrid) -> bytes:
    """P6 for 3-channel images, P5 for 1-channel; values rounded to 8 bits."""
    H, W = image.shape
    magic = b"P6" if image.channels == 3 else b"P5"
    quantized = np.round(np.clip(image.values, 0.0, 1.0) * 255.0).astype(np.uint8)
    return magic + f"\n{W} {H}\n255\n".encode("ascii") + quantized.tobytes()


def read_ppm(path: str) -> ImageGrid:
    """
    Read a binary PPM/PGM image.

    Raises:
        ParseError: Malformed header (with byte offset) or truncated payload
    """
    return decode_ppm(_read_bytes(path), path)


def write_ppm(path: str, image: ImageGrid) -> None:
    _write_bytes(path, encode_ppm(image))


# ============================================================================
# PFM
# ============================================================================

def decode_pfm(data: bytes, path: str = "<pfm>") -> DepthMap:
    """Decode single-channel PFM bytes; either endianness is accepted."""
    lines = []
    pos = 0
    for _ in range(3):
        end = data.find(b"\n", pos)
        if end < 0:
            raise ParseError(f"{path}: header ended after {len(lines)} of 3 lines", byte_offset=pos)
        lines.append((data[pos:end].strip(), pos))
        pos = end + 1

    magic, offset = lines[0]
    if magic == b"PF":
        raise ParseError(f"{path}: 3-channel PFM cannot hold a depth map", byte_offset=offset)
    if magic != b"Pf":
        raise ParseError(f"{path}: unsupported magic '{magic.decode('latin-1')}', expected Pf", byte_offset=offset)
    size, offset = lines[1]
    fields = size.split()
    if len(fields) != 2 or not all(field.isdigit() for field in fields):
        raise ParseError(f"{path}: expected 'width height', got '{size.decode('latin-1')}'", byte_offset=offset)
    width, height = (int(field) for field in fields)
    if width <= 0 or height <= 0:
        raise ParseError(f"{path}: width and height must be positive", byte_offset=offset)
    scale_line, offset = lines[2]
    try:
        scale = float(scale_line)
    except ValueError:
        raise ParseError(f"{path}: invalid scale '{scale_line.decode('latin-1')}'", byte_offset=offset)
    if scale == 0.0:
        raise ParseError(f"{path}: scale must be non-zero", byte_offset=offset)
    dtype = "<f4" if scale < 0.0 else ">f4"

    expected = width * height * 4
    actual = len(data) - pos
    if actual < expected:
        raise ParseError(f"{path}: payload truncated, expected {expected} bytes but found {actual}", byte_offset=pos)
    values = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos).reshape(height, width)
    values = np.flipud(values).astype(np.float64)
    validity = np.isfinite(values) & (values > 0.0)
    return DepthMap(values=values, validity=validity)


def encode_pfm(depth: DepthMap) -> bytes:
    """Little-endian "Pf" bytes; invalid pixels become NaN."""
    H, W = depth.shape
    values = np.where(depth.validity, depth.values, np.nan).astype("<f4")
    return f"Pf\n{W} {H}\n-1.0\n".encode("ascii") + np.flipud(values).tobytes()


def read_pfm(path: str) -> DepthMap:
    """
    Read a single-channel PFM depth map. NaN, infinite and non-positive values are invalid.

    Raises:
        ParseError: Malformed header or truncated payload
    """
    return decode_pfm(_read_bytes(path), path)


def write_pfm(path: str, depth: DepthMap) -> None:
    _write_bytes(path, encode_pfm(depth))


# ============================================================================
# KITTI poses
# ============================================================================

def parse_kitti_poses(text: str, path: str = "<poses>") -> Trajectory:
    """Parse KITTI pose lines; frame indices are the 0-based line order."""
    poses = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 12:
            raise ParseError(f"{path}: expected 12 values, got {len(tokens)}", line_number=line_number)
        try:
            matrix = np.array([float(token) for token in tokens]).reshape(3, 4)
        except ValueError:
            raise ParseError(f"{path}: non-numeric pose value", line_number=line_number)
        if not np.all(np.isfinite(matrix)):
            raise ParseError(f"{path}: non-finite pose value", line_number=line_number)
        rotation = matrix[:, :3]
        drift = float(np.max(np.abs(rotation @ rotation.T - np.eye(3))))
        if drift > ORTHONORMAL_KEEP_DRIFT:
            if drift > ORTHONORMAL_WARN_DRIFT:
                logger.warning(f"{path} line {line_number}: rotation drifts {drift:.2e} from orthonormal, "
                               f"projecting to the nearest rotation")
            rotation = nearest_rotation(rotation)
        try:
            poses.append(PoseSE3(rotation=rotation, translation=matrix[:, 3]))
        except ValidationError as e:
            raise ParseError(f"{path}: invalid pose: {e.errors()[0]['msg']}", line_number=line_number)
    return Trajectory.from_poses(poses)


def format_kitti_poses(trajectory: Trajectory) -> str:
    lines = []
    for pose in trajectory.poses:
        matrix = np.hstack([pose.rotation, pose.translation[:, None]])
        lines.append(" ".join(f"{value:.17g}" for value in matrix.ravel()))
    return "\n".join(lines) + "\n"


def read_kitti_poses(path: str) -> Trajectory:
    """
    Read a KITTI pose file.

    Raises:
        ParseError: Wrong token count or non-numeric value, with line number
    """
    return parse_kitti_poses(_read_bytes(path).decode("utf-8"), path)


def write_kitti_poses(path: str, trajectory: Trajectory) -> None:
    """Write one line per entry; frame indices are not stored."""
    _write_bytes(path, format_kitti_poses(trajectory).encode("ascii"))


# ============================================================================
# Intrinsics
# ============================================================================

def parse_intrinsics(text: str, path: str = "<intrinsics>") -> Intrinsics:
    lines = [line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    if len(lines) != 1:
        raise ParseError(f"{path}: expected one line 'width height fx fy cx cy', found {len(lines)} lines")
    tokens = lines[0].split()
    if len(tokens) != 6:
        raise ParseError(f"{path}: expected 6 fields 'width height fx fy cx cy', got {len(tokens)}", line_number=1)
    try:
        width, height = int(tokens[0]), int(tokens[1])
        fx, fy, cx, cy = (float(token) for token in tokens[2:])
    except ValueError:
        raise ParseError(f"{path}: non-numeric intrinsics field", line_number=1)
    try:
        return Intrinsics(width=width, height=height, fx=fx, fy=fy, cx=cx, cy=cy)
    except ValidationError as e:
        raise ConfigurationError(f"{path}: invalid intrinsics: {e}")


def format_intrinsics(K: Intrinsics) -> str:
    return f"{K.width} {K.height} {K.fx!r} {K.fy!r} {K.cx!r} {K.cy!r}\n"


def read_intrinsics(path: str) -> Intrinsics:
    """
    Read "width height fx fy cx cy".

    Raises:
        ParseError: Missing or non-numeric field
        ConfigurationError: Values violating the Intrinsics invariants
    """
    return parse_intrinsics(_read_bytes(path).decode("utf-8"), path)


def write_intrinsics(path: str, K: Intrinsics) -> None:
    _write_bytes(path, format_intrinsics(K).encode("ascii"))


# ============================================================================
# PLY / CSV
# ============================================================================

def write_ply(path: str, cloud: PointCloud) -> None:
    """ASCII PLY with float xyz and, when present, uchar rgb."""
    header = ["ply", "format ascii 1.0", f"element vertex {len(cloud)}",
              "property float x", "property float y", "property float z"]
    colored = cloud.colors is not None
    if colored:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    header.append("end_header")
    rows = []
    colors = np.round(np.clip(cloud.colors, 0.0, 1.0) * 255.0).astype(int) if colored else None
    for i, (x, y, z) in enumerate(cloud.points):
        row = f"{x:.9g} {y:.9g} {z:.9g}"
        if colored:
            r, g, b = colors[i]
            row += f" {r} {g} {b}"
        rows.append(row)
    _write_bytes(path, ("\n".join(header + rows) + "\n").encode("ascii"))


def write_csv(path: str, rows: Sequence[Dict[str, object]], fieldnames: Optional[List[str]] = None) -> None:
    """Write dictionaries as CSV with a header row; "\\n" line endings."""
    fieldnames = fieldnames or (list(rows[0].keys()) if rows else [])
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


# ============================================================================
# Frame directories
# ============================================================================

class FrameDirectory(NamedTuple):
    images: List[ImageGrid]
    depths: List[Optional[DepthMap]]
    intrinsics: Intrinsics
    poses: Optional[Trajectory]


def frame_path(directory: str, index: int, extension: str) -> str:
    return os.path.join(directory, f"{index:06d}.{extension}")


def read_frame_directory(directory: str, require_depth: bool = True) -> FrameDirectory:
    """
    Load NNNNNN.ppm images, matching NNNNNN.pfm depths, intrinsics.txt and,
    if present, poses.txt (ground truth).

    Raises:
        ConfigurationError: Missing directory, images, depths or intrinsics
    """
    if not os.path.isdir(directory):
        raise ConfigurationError(f"{directory} is not a directory")
    indices = sorted(int(m.group(1)) for m in map(_FRAME_NAME.match, os.listdir(directory)) if m)
    if not indices:
        raise ConfigurationError(f"{directory} contains no NNNNNN.ppm frames")
    intrinsics_path = os.path.join(directory, INTRINSICS_FILE)
    if not os.path.exists(intrinsics_path):
        raise ConfigurationError(f"{directory} has no {INTRINSICS_FILE}")
    K = read_intrinsics(intrinsics_path)

    images, depths = [], []
    for index in indices:
        images.append(read_ppm(frame_path(directory, index, "ppm")))
        depth_path = frame_path(directory, index, "pfm")
        if os.path.exists(depth_path):
            depths.append(read_pfm(depth_path))
        elif require_depth:
            raise ConfigurationError(f"missing depth {depth_path}")
        else:
            depths.append(None)
    poses_path = os.path.join(directory, POSES_FILE)
    poses = read_kitti_poses(poses_path) if os.path.exists(poses_path) else None
    logger.info(f"Loaded {len(images)} frames from {directory} ({K.width}x{K.height})")
    return FrameDirectory(images=images, depths=depths, intrinsics=K, poses=poses)


def write_frame_directory(directory: str, images: Sequence[ImageGrid], depths: Sequence[DepthMap],
                          K: Intrinsics, poses: Optional[Trajectory] = None) -> None:
    os.makedirs(directory, exist_ok=True)
    for index, (image, depth) in enumerate(zip(images, depths)):
        write_ppm(frame_path(directory, index, "ppm"), image)
        write_pfm(frame_path(directory, index, "pfm"), depth)
    write_intrinsics(os.path.join(directory, INTRINSICS_FILE), K)
    if poses is not None:
        write_kitti_poses(os.path.join(directory, POSES_FILE), poses)
    logger.info(f"Wrote {len(images)} frames to {directory}")
