"""On-disk dataset model: a neutral plain-text manifest plus raster loaders.

Manifest grammar (one item per line, '#' comments and blank lines ignored):

    intrinsics fx fy cx cy
    depth_scale s
    class <id> <name>                      # optional, repeatable
    <frame_id> image <rel> depth <rel> [label <rel>] pose r11 r12 r13 t1 ... t3

Pose rows are the 12 numbers of a row-major [R|t], camera-to-world. All paths
are relative to the manifest's directory. Supported rasters: 8-bit P5 PGM and
8/16-bit single-channel PNG for images and labels; depth is a 16-bit PNG
(value * depth_scale meters, 0 = missing) or a raw little-endian float32 grid
with a 16-byte header (magic DPTH, u32 width, u32 height, u32 reserved).
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import DataFormatError, ManifestParseError
from .frames import FrameBundle, LabelMap
from .geometry import CameraIntrinsics, DepthMap, Pose, orthonormalize_rotation
from .image import ImageGray

logger = logging.getLogger(__name__)

DEPTH_MAGIC = b"DPTH"
_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

# Ingest tolerance for pose rotations; anything inside is snapped to the
# nearest rotation so Pose's strict invariant holds.
MANIFEST_ORTHO_TOL = 1e-6
APOLLO_ORTHO_TOL = 1e-3


@dataclass(frozen=True)
class FrameRecord:
    frame_id: str
    image_path: str
    depth_path: str
    pose: Pose
    label_path: str | None = None


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    intrinsics: CameraIntrinsics
    depth_scale: float
    frames: tuple[FrameRecord, ...]
    class_names: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))
        object.__setattr__(self, "frames", tuple(self.frames))
        ids = [f.frame_id for f in self.frames]
        if len(set(ids)) != len(ids):
            raise ManifestParseError("frame ids must be unique")

    def __len__(self) -> int:
        return len(self.frames)

    def index_of(self, frame_id: str) -> int:
        for i, f in enumerate(self.frames):
            if f.frame_id == frame_id:
                return i
        raise KeyError(f"frame id {frame_id!r} not in manifest")


def _ingest_rotation(r: np.ndarray, tol: float, where: str, path=None, line=None) -> np.ndarray:
    err = np.abs(r.T @ r - np.eye(3)).max()
    if err > tol or np.linalg.det(r) < 0:
        raise ManifestParseError(
            f"{where}: rotation not orthonormal (max deviation {err:.3e})", path, line
        )
    if err <= 1e-12:  # already clean: keep bits stable across round-trips
        return r
    return orthonormalize_rotation(r)


def _parse_pose_tokens(tokens: list[str], tol: float, path, line) -> Pose:
    if len(tokens) != 12:
        raise ManifestParseError(f"pose needs 12 numbers, got {len(tokens)}", path, line)
    try:
        vals = [float(t) for t in tokens]
    except ValueError as e:
        raise ManifestParseError(f"bad pose number: {e}", path, line)
    if not all(math.isfinite(v) for v in vals):
        raise ManifestParseError("pose numbers must be finite", path, line)
    m = np.array(vals, dtype=np.float64).reshape(3, 4)
    r = _ingest_rotation(m[:, :3], tol, "pose", path, line)
    return Pose(r, m[:, 3])


def load_manifest(path) -> DatasetManifest:
    """Parse a manifest and verify every referenced file exists."""
    path = Path(path)
    if not path.is_file():
        raise ManifestParseError("manifest file not found", path)
    root = path.parent
    intrinsics = None
    depth_scale = None
    class_names: dict[int, str] = {}
    frames: list[FrameRecord] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == "intrinsics":
            if len(tokens) != 5:
                raise ManifestParseError("intrinsics needs 4 numbers", path, lineno)
            try:
                intrinsics = CameraIntrinsics(*(float(t) for t in tokens[1:]))
            except ValueError as e:
                raise ManifestParseError(f"bad intrinsics: {e}", path, lineno)
            continue
        if tokens[0] == "depth_scale":
            if len(tokens) != 2:
                raise ManifestParseError("depth_scale needs 1 number", path, lineno)
            try:
                depth_scale = float(tokens[1])
            except ValueError:
                raise ManifestParseError(f"bad depth_scale {tokens[1]!r}", path, lineno)
            if not (math.isfinite(depth_scale) and depth_scale > 0):
                raise ManifestParseError("depth_scale must be positive", path, lineno)
            continue
        if tokens[0] == "class":
            if len(tokens) < 3:
                raise ManifestParseError("class needs an id and a name", path, lineno)
            try:
                cid = int(tokens[1])
            except ValueError:
                raise ManifestParseError(f"bad class id {tokens[1]!r}", path, lineno)
            class_names[cid] = " ".join(tokens[2:])
            continue
        frames.append(_parse_frame_line(tokens, path, lineno))

    if intrinsics is None:
        raise ManifestParseError("manifest has no intrinsics line", path)
    if depth_scale is None:
        depth_scale = 1.0
    manifest = DatasetManifest(root, intrinsics, depth_scale, tuple(frames), class_names)
    for f in manifest.frames:
        for rel in (f.image_path, f.depth_path, f.label_path):
            if rel is not None and not (root / rel).is_file():
                raise ManifestParseError(f"referenced file missing: {rel}", path)
    return manifest


def _parse_frame_line(tokens: list[str], path, lineno) -> FrameRecord:
    frame_id = tokens[0]
    fields: dict[str, str] = {}
    i = 1
    pose_tokens: list[str] | None = None
    while i < len(tokens):
        key = tokens[i]
        if key == "pose":
            pose_tokens = tokens[i + 1 :]
            break
        if key not in ("image", "depth", "label"):
            raise ManifestParseError(f"unexpected token {key!r}", path, lineno)
        if i + 1 >= len(tokens):
            raise ManifestParseError(f"{key} needs a path", path, lineno)
        fields[key] = tokens[i + 1]
        i += 2
    if "image" not in fields or "depth" not in fields:
        raise ManifestParseError("frame line needs image and depth paths", path, lineno)
    if pose_tokens is None:
        raise ManifestParseError("frame line needs a pose", path, lineno)
    pose = _parse_pose_tokens(pose_tokens, MANIFEST_ORTHO_TOL, path, lineno)
    return FrameRecord(
        frame_id=frame_id,
        image_path=fields["image"],
        depth_path=fields["depth"],
        pose=pose,
        label_path=fields.get("label"),
    )


def write_manifest(manifest: DatasetManifest, path) -> None:
    """Serialize a manifest; floats use repr so round-trips are lossless."""
    path = Path(path)
    k = manifest.intrinsics
    lines = [
        f"intrinsics {k.fx!r} {k.fy!r} {k.cx!r} {k.cy!r}",
        f"depth_scale {manifest.depth_scale!r}",
    ]
    for cid in sorted(manifest.class_names):
        lines.append(f"class {cid} {manifest.class_names[cid]}")
    for f in manifest.frames:
        for token in (f.frame_id, f.image_path, f.depth_path, f.label_path):
            if token is not None and any(c.isspace() for c in token):
                raise ManifestParseError(
                    f"whitespace in {token!r} is not representable in the manifest format"
                )
        parts = [f.frame_id, "image", f.image_path, "depth", f.depth_path]
        if f.label_path is not None:
            parts += ["label", f.label_path]
        m = np.hstack([f.pose.rotation, f.pose.translation.reshape(3, 1)])
        parts.append("pose")
        parts.extend(repr(float(v)) for v in m.reshape(-1))
        lines.append(" ".join(parts))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Raster formats


def _read_pgm(data: bytes, path) -> np.ndarray:
    # P5 header: magic, width, height, maxval, separated by whitespace
    # (comments starting with '#' allowed), then one binary byte per pixel.
    pos = 2
    values = []
    while len(values) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token:
            raise DataFormatError(f"{path}: truncated PGM header")
        try:
            values.append(int(token))
        except ValueError:
            raise DataFormatError(f"{path}: bad PGM header token {token!r}")
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = values
    if width <= 0 or height <= 0 or width * height > 10**9:
        raise DataFormatError(f"{path}: bad PGM dimensions {width}x{height}")
    if maxval != 255:
        raise DataFormatError(f"{path}: only maxval 255 PGM supported, got {maxval}")
    payload = data[pos : pos + width * height]
    if len(payload) != width * height:
        raise DataFormatError(f"{path}: truncated PGM payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width)


def _read_png(path) -> np.ndarray:
    try:
        with PILImage.open(path) as im:
            if im.mode == "L":
                return np.asarray(im, dtype=np.uint8)
            if im.mode in ("I;16", "I"):
                a = np.asarray(im, dtype=np.int64)
                if a.min() < 0 or a.max() > 65535:
                    raise DataFormatError(f"{path}: PNG values outside 16-bit range")
                return a.astype(np.uint16)
            raise DataFormatError(f"{path}: unsupported PNG mode {im.mode}, need single channel")
    except DataFormatError:
        raise
    except Exception as e:
        raise DataFormatError(f"{path}: cannot decode PNG ({e})")


def _read_raster(path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    if data[:2] == b"P5":
        return _read_pgm(data, path)
    if data[:8] == _PNG_MAGIC:
        return _read_png(path)
    raise DataFormatError(f"{path}: unsupported format magic {data[:4]!r}")


def load_image(path) -> ImageGray:
    """8-bit PGM or 8/16-bit single-channel PNG, scaled to [0, 1]."""
    return ImageGray.from_array(_read_raster(path))


def load_depth(path, depth_scale: float) -> DepthMap:
    """16-bit PNG (value * depth_scale, 0 missing) or raw DPTH float grid."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == DEPTH_MAGIC:
        if len(data) < 16:
            raise DataFormatError(f"{path}: truncated DPTH header")
        width, height, _ = struct.unpack("<III", data[4:16])
        if width <= 0 or height <= 0 or width * height > 10**9:
            raise DataFormatError(f"{path}: bad DPTH dimensions {width}x{height}")
        payload = data[16 : 16 + 4 * width * height]
        if len(payload) != 4 * width * height:
            raise DataFormatError(f"{path}: truncated DPTH payload")
        vals = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(height, width)
        vals = np.where(np.isfinite(vals) & (vals > 0), vals, np.nan)
        return DepthMap(vals)
    raster = _read_raster(path)
    if raster.dtype != np.uint16:
        raise DataFormatError(f"{path}: integer depth must be a 16-bit PNG")
    vals = raster.astype(np.float64) * depth_scale
    vals[raster == 0] = np.nan
    return DepthMap(vals)


def load_labels(path, class_names: dict[int, str] | None = None) -> LabelMap:
    """8-bit PNG or PGM of class ids."""
    raster = _read_raster(path)
    if raster.dtype != np.uint8:
        raise DataFormatError(f"{path}: label maps must be 8-bit")
    return LabelMap(raster.astype(np.int32), class_names or {})


def save_image_pgm(img: ImageGray, path) -> None:
    a = np.clip(np.rint(img.data * 255.0), 0, 255).astype(np.uint8)
    _write_pgm(a, path)


def save_labels_pgm(labels: LabelMap, path) -> None:
    v = labels.values
    if v.min() < 0 or v.max() > 255:
        raise DataFormatError("label ids must fit in 8 bits for PGM output")
    _write_pgm(v.astype(np.uint8), path)


def _write_pgm(a: np.ndarray, path) -> None:
    header = f"P5\n{a.shape[1]} {a.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + a.tobytes())


def save_depth_raw(depth: DepthMap, path) -> None:
    """Raw DPTH float32 grid; missing depth stored as 0."""
    v = np.where(depth.valid_mask(), depth.values, 0.0).astype("<f4")
    header = DEPTH_MAGIC + struct.pack("<III", depth.width, depth.height, 0)
    Path(path).write_bytes(header + v.tobytes())


def load_frame(manifest: DatasetManifest, index: int) -> FrameBundle:
    """Load one frame's rasters and assemble a bundle."""
    rec = manifest.frames[index]
    root = manifest.root
    image = load_image(root / rec.image_path)
    depth = load_depth(root / rec.depth_path, manifest.depth_scale)
    labels = None
    if rec.label_path is not None:
        labels = load_labels(root / rec.label_path, manifest.class_names)
    return FrameBundle(
        frame_id=rec.frame_id,
        image=image,
        depth=depth,
        pose=rec.pose,
        intrinsics=manifest.intrinsics,
        labels=labels,
    )


# ---------------------------------------------------------------------------
# ApolloScape-style adapter


def apollo_adapter(
    root,
    intrinsics: CameraIntrinsics,
    depth_scale: float,
    pose_convention: str = "camera_to_world",
    camera: str | None = None,
) -> DatasetManifest:
    """Build a manifest from an ApolloScape-style directory tree.

    Expected layout under `root`: ColorImage/<record>/<camera>/<image files>,
    Depth/<record>/<camera>/<stem>.png, Pose/<record>/<camera>/pose.txt, and
    optionally Label/<record>/<camera>/<stem>.png. Each pose.txt line holds a
    row-major 4x4 matrix (16 numbers) followed by the image file name.

    depth_scale and the pose convention are explicit configuration; frames
    with unparseable poses or missing depth are skipped with a warning.
    """
    root = Path(root)
    if pose_convention not in ("camera_to_world", "world_to_camera"):
        raise ValueError(f"unknown pose convention {pose_convention!r}")
    pose_root = root / "Pose"
    if not pose_root.is_dir():
        raise ManifestParseError("no Pose directory under dataset root", root)
    frames: list[FrameRecord] = []
    pose_files = sorted(pose_root.glob("*/*/pose.txt"))
    for pose_file in pose_files:
        cam_dir = pose_file.parent
        record = cam_dir.parent.name
        cam = cam_dir.name
        if camera is not None and cam != camera:
            continue
        for lineno, raw in enumerate(pose_file.read_text().splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) < 17:
                logger.warning("%s:%d: expected 16 numbers + image name, skipping", pose_file, lineno)
                continue
            image_name = tokens[16]
            try:
                vals = [float(t) for t in tokens[:16]]
            except ValueError:
                logger.warning("%s:%d: unparseable pose numbers, skipping", pose_file, lineno)
                continue
            m = np.array(vals, dtype=np.float64).reshape(4, 4)
            r, t = m[:3, :3], m[:3, 3]
            err = np.abs(r.T @ r - np.eye(3)).max()
            if err > APOLLO_ORTHO_TOL or np.linalg.det(r) < 0:
                logger.warning(
                    "%s:%d: rotation deviates from orthonormal by %.3e, skipping frame %s",
                    pose_file, lineno, err, image_name,
                )
                continue
            pose = Pose(orthonormalize_rotation(r), t)
            if pose_convention == "world_to_camera":
                pose = pose.inverse()
            stem = Path(image_name).stem
            image_rel = Path("ColorImage") / record / cam / image_name
            depth_rel = Path("Depth") / record / cam / f"{stem}.png"
            label_rel = Path("Label") / record / cam / f"{stem}.png"
            if not (root / image_rel).is_file():
                logger.warning("%s:%d: missing image %s, skipping", pose_file, lineno, image_rel)
                continue
            if not (root / depth_rel).is_file():
                logger.warning("%s:%d: missing depth for %s, skipping", pose_file, lineno, image_name)
                continue
            frames.append(
                FrameRecord(
                    frame_id=f"{record}/{cam}/{stem}",
                    image_path=image_rel.as_posix(),
                    depth_path=depth_rel.as_posix(),
                    pose=pose,
                    label_path=label_rel.as_posix() if (root / label_rel).is_file() else None,
                )
            )
    if not frames:
        raise ManifestParseError("no usable frames found in ApolloScape tree", root)
    frames.sort(key=lambda f: f.frame_id)
    return DatasetManifest(root, intrinsics, depth_scale, tuple(frames))
