"""Body shape space: a 10-coefficient linear blend model over a mesh asset.

A :class:`BodyModelAsset` bundles a template mesh with a ``V x 3 x 10``
displacement basis plus the landmark/ring tables that tell the measurement
layer where to read lengths and girths. ``evaluate_mesh`` is the whole
forward model: ``vertices = template + sum_i beta_i * shape_dirs[:, :, i]``.

The package ships a procedural humanoid (``builtin_asset``) built from an
implicit capsule body and marching cubes, so everything runs without any
licensed model data. Real model data can be converted into the documented
asset file format and loaded with ``load_asset``.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from skimage import measure as _skmeasure

from .errors import (
    AssetNotFoundError,
    AssetSchemaError,
    InvalidAssetError,
    NonClosedMeshError,
    ShapeParamsError,
)

SHAPE_DIM = 10
BETA_BOUND = 5.0

#: What each shape coefficient predominantly controls on the builtin asset.
#: Signs follow the builtin displacement basis: a PCA-style basis has no
#: canonical sign, so the direction is part of the documentation.
BUILTIN_AXIS_EFFECTS = {
    0: "overall height (positive = shorter figure)",
    1: "overall girth / body weight (positive = heavier)",
    2: "leg-to-torso ratio (positive = longer legs, shorter torso)",
    3: "arm length (positive = longer arms)",
    4: "shoulder breadth (positive = broader)",
    5: "neck length (positive = longer)",
    6: "waist girth (positive = thicker)",
    7: "hip girth (positive = thicker)",
    8: "leg thickness (positive = thicker)",
    9: "arm thickness (positive = thicker)",
}

LANDMARK_NAMES = (
    "crown",
    "heel_left",
    "heel_right",
    "shoulder_left",
    "shoulder_right",
    "neck_base",
    "skull_base",
    "wrist_left",
    "hip_center",
    "crotch",
)

RING_NAMES = ("neck", "waist", "hips", "thigh_left", "upper_arm_left")


class ShapeParams:
    """The 10-vector of shape coefficients (dimensionless, roughly N(0,1) scale)."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (SHAPE_DIM,):
            raise ShapeParamsError(
                f"shape params must have exactly {SHAPE_DIM} components, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ShapeParamsError("shape params must be finite")
        if np.any(np.abs(arr) > BETA_BOUND):
            raise ShapeParamsError(
                f"shape params must lie within [-{BETA_BOUND:g}, {BETA_BOUND:g}]"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        self.values = arr

    @classmethod
    def zeros(cls) -> "ShapeParams":
        return cls(np.zeros(SHAPE_DIM))

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return SHAPE_DIM

    def __eq__(self, other) -> bool:
        if not isinstance(other, ShapeParams):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    def __repr__(self) -> str:
        return f"ShapeParams({self.values.tolist()})"


@dataclass(frozen=True, eq=False)
class BodyMesh:
    """Evaluated mesh: vertices in meters, faces shared with the source asset."""

    vertices: np.ndarray  # (V, 3) float64
    faces: np.ndarray  # (F, 3) int

    def __post_init__(self):
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise InvalidAssetError("mesh vertices must be (V, 3)")
        if not np.all(np.isfinite(self.vertices)):
            raise InvalidAssetError("mesh vertices must be finite")


@dataclass(frozen=True, eq=False)
class BodyModelAsset:
    """Template mesh + displacement basis + measurement site tables.

    Identity semantics (no structural ==): assets are immutable after
    construction and cached by identity where derived data is needed.
    """

    template_vertices: np.ndarray  # (V, 3) float64, meters
    faces: np.ndarray  # (F, 3) int, CCW outward
    shape_dirs: np.ndarray  # (V, 3, 10) float64, meters per unit beta
    landmarks: dict  # name -> vertex index
    rings: dict  # name -> ordered index array (simple closed loop)

    @property
    def vertex_count(self) -> int:
        return self.template_vertices.shape[0]

    def validate(self) -> None:
        v = self.template_vertices
        f = self.faces
        if v.ndim != 2 or v.shape[1] != 3 or not np.all(np.isfinite(v)):
            raise InvalidAssetError("template_vertices must be finite (V, 3)")
        if f.ndim != 2 or f.shape[1] != 3:
            raise InvalidAssetError("faces must be (F, 3)")
        if f.min() < 0 or f.max() >= len(v):
            raise InvalidAssetError("face indices out of range")
        if self.shape_dirs.shape != (len(v), 3, SHAPE_DIM):
            raise InvalidAssetError(
                f"shape_dirs must be (V, 3, {SHAPE_DIM}), got {self.shape_dirs.shape}"
            )
        if not np.all(np.isfinite(self.shape_dirs)):
            raise InvalidAssetError("shape_dirs must be finite")
        check_closed(f, len(v))
        for name, idx in self.landmarks.items():
            if not (0 <= int(idx) < len(v)):
                raise InvalidAssetError(f"landmark {name!r} index out of range")
        for name, ring in self.rings.items():
            ring = np.asarray(ring)
            if ring.ndim != 1 or len(ring) < 3:
                raise InvalidAssetError(f"ring {name!r} must list at least 3 vertices")
            if len(np.unique(ring)) != len(ring):
                raise InvalidAssetError(f"ring {name!r} repeats a vertex")
            if ring.min() < 0 or ring.max() >= len(v):
                raise InvalidAssetError(f"ring {name!r} index out of range")


def check_closed(faces: np.ndarray, vertex_count: int) -> None:
    """Raise NonClosedMeshError unless every edge is shared by exactly two
    faces with opposite orientation."""
    f = np.asarray(faces, dtype=np.int64)
    if np.any(f[:, 0] == f[:, 1]) or np.any(f[:, 1] == f[:, 2]) or np.any(f[:, 2] == f[:, 0]):
        raise NonClosedMeshError("mesh has degenerate faces")
    directed = f[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    key = directed[:, 0] * vertex_count + directed[:, 1]
    if len(np.unique(key)) != len(key):
        raise NonClosedMeshError("an edge appears twice with the same orientation")
    rev = directed[:, 1] * vertex_count + directed[:, 0]
    if not np.array_equal(np.sort(key), np.sort(rev)):
        raise NonClosedMeshError("an edge is not shared by exactly 2 opposite faces")


def evaluate_mesh(asset: BodyModelAsset, beta: ShapeParams) -> BodyMesh:
    """Evaluate the shape space at ``beta``: an exact linear blend of the
    template and the displacement basis. Face topology never changes."""
    if not isinstance(beta, ShapeParams):
        beta = ShapeParams(beta)
    if asset.shape_dirs.shape[2] != len(beta.values):
        raise InvalidAssetError(
            f"asset expects {asset.shape_dirs.shape[2]} shape coefficients"
        )
    vertices = evaluate_vertices_many(asset, beta.values[None, :])[0]
    return BodyMesh(vertices=vertices, faces=asset.faces)


def evaluate_vertices_many(asset: BodyModelAsset, betas: np.ndarray) -> np.ndarray:
    """Batched forward model: (B, 10) betas -> (B, V, 3) vertices.

    The single-mesh path delegates here with B=1 so batched and scalar
    callers follow identical arithmetic.
    """
    betas = np.asarray(betas, dtype=np.float64)
    if betas.ndim != 2 or betas.shape[1] != asset.shape_dirs.shape[2]:
        raise InvalidAssetError(
            f"betas must be (B, {asset.shape_dirs.shape[2]}), got {betas.shape}"
        )
    # (V,3,10) @ (B,10) -> (B,V,3)
    disp = np.einsum("vct,bt->bvc", asset.shape_dirs, betas)
    return asset.template_vertices[None, :, :] + disp


# ---------------------------------------------------------------------------
# Builtin procedural humanoid
# ---------------------------------------------------------------------------

# Skeleton geometry, meters. Floor at y=0, +y up, +x is the body's left side.
_H = 1.70
_Y_CROTCH = 0.80
_Y_SHOULDER = 1.39
_SHOULDER_X = 0.17
_WRIST = np.array([0.42, 0.86, 0.01])
_HIP_JOINT = np.array([0.088, 0.88, 0.0])
_ANKLE = np.array([0.098, 0.05, -0.008])

# Displacement magnitudes per unit beta, tuned so N(0,1) coefficients give
# plausible anthropometric spread (height sigma ~7 cm, girths ~4-6 %).
_A0_HEIGHT = 0.07
_A1_GIRTH = 0.035
_A2_LEGS = 0.05
_A3_ARM = 0.035
_A4_SHOULDER = 0.018
_A5_NECK = 0.0135
_A6_WAIST = 0.055
_A7_HIP = 0.055
_A8_LEG_THICK = 0.05
_A9_ARM_THICK = 0.06

_GRID_STEP = 0.025
_SMOOTH_K = 0.02
# Grid origin offset by an irrational-ish fraction of a cell so the level set
# never passes exactly through grid nodes.
_GRID_X0 = -0.61 + 0.137 * _GRID_STEP
_GRID_Y0 = -0.09 + 0.211 * _GRID_STEP
_GRID_Z0 = -0.25 + 0.173 * _GRID_STEP
_GRID_N = (51, 78, 22)


def _grid_plane_y(j: int) -> float:
    """Exact y of horizontal grid plane j; girth rings sit on these planes so
    the extracted loop is a single clean cross-section polygon."""
    return _GRID_Y0 + j * _GRID_STEP


def _mirror(p):
    q = np.array(p, dtype=np.float64)
    q[0] = -q[0]
    return q


def _body_parts():
    """Capsule list (p0, p1, r0, r1, z_scale, y_cap_scale).

    z_scale < 1 flattens the cross-section front-to-back; y_cap_scale < 1
    flattens a vertical capsule's end-cap domes (chest top, pelvis bottom)
    so the torso does not balloon into the neck or crotch.
    """
    head_c = np.array([0.0, 1.595, 0.01])
    neck0, neck1 = np.array([0.0, 1.37, -0.01]), np.array([0.0, 1.52, -0.012])
    elbow = np.array([0.306, 1.134, 0.0])
    knee = np.array([0.094, 0.47, 0.005])
    toe = np.array([0.102, 0.03, 0.115])
    hand_tip = np.array([0.455, 0.78, 0.02])
    shoulder_l = np.array([_SHOULDER_X, _Y_SHOULDER, 0.0])

    parts = [
        (head_c, head_c, 0.105, 0.105, 0.92, 1.0),
        (neck0, neck1, 0.055, 0.052, 1.0, 1.0),
        # torso stack, elliptical cross-section (shallower in z)
        (np.array([0.0, 1.16, 0.0]), np.array([0.0, 1.40, 0.0]), 0.150, 0.155, 0.62, 0.35),
        (np.array([0.0, 1.00, 0.0]), np.array([0.0, 1.16, 0.0]), 0.138, 0.150, 0.64, 1.0),
        (np.array([0.0, 0.84, 0.0]), np.array([0.0, 1.00, 0.0]), 0.160, 0.138, 0.68, 0.4),
        (_mirror(shoulder_l), shoulder_l, 0.065, 0.065, 0.85, 1.0),
    ]
    for side in (1.0, -1.0):

        def s(p):
            q = np.array(p, dtype=np.float64)
            q[0] *= side
            return q

        parts += [
            (s(shoulder_l), s(elbow), 0.048, 0.040, 1.0, 1.0),
            (s(elbow), s(_WRIST), 0.040, 0.030, 1.0, 1.0),
            (s(_WRIST), s(hand_tip), 0.034, 0.025, 1.0, 1.0),
            (s(_HIP_JOINT), s(knee), 0.078, 0.058, 1.0, 1.0),
            (s(knee), s(_ANKLE), 0.055, 0.032, 1.0, 1.0),
            (s(_ANKLE), s(toe), 0.032, 0.026, 1.0, 1.0),
        ]
    return parts


def _capsule_distance(points, p0, p1, r0, r1, z_scale, y_cap_scale):
    axis = p1 - p0
    denom = float(axis @ axis)
    rel = points - p0
    if denom < 1e-12:
        t = np.zeros(len(points))
    else:
        t = np.clip(rel @ axis / denom, 0.0, 1.0)
    closest = p0 + t[:, None] * axis
    delta = points - closest
    delta = delta.copy()
    delta[:, 2] /= z_scale
    # for a vertical capsule delta_y is nonzero only past the segment ends,
    # so this squashes the end-cap domes without touching the side wall
    delta[:, 1] /= y_cap_scale
    radius = r0 + (r1 - r0) * t
    return np.linalg.norm(delta, axis=1) - radius


def _body_field(points: np.ndarray) -> np.ndarray:
    """Smooth-union implicit field; negative inside the body."""
    acc = None
    for p0, p1, r0, r1, zs, ys in _body_parts():
        d = _capsule_distance(points, p0, p1, r0, r1, zs, ys)
        term = -d / _SMOOTH_K
        acc = term if acc is None else np.logaddexp(acc, term)
    return -_SMOOTH_K * acc


def _smoothstep(x, e0, e1):
    t = np.clip((np.asarray(x, dtype=np.float64) - e0) / (e1 - e0), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _build_template_mesh():
    h = _GRID_STEP
    x0, y0, z0 = _GRID_X0, _GRID_Y0, _GRID_Z0
    nx, ny, nz = _GRID_N
    xs = x0 + h * np.arange(nx)
    ys = y0 + h * np.arange(ny)
    zs = z0 + h * np.arange(nz)
    grid = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1).reshape(-1, 3)
    field = _body_field(grid).reshape(nx, ny, nz)
    verts, faces, _, _ = _skmeasure.marching_cubes(
        field, level=0.0, spacing=(h, h, h), allow_degenerate=False
    )
    verts = verts + np.array([x0, y0, z0])
    signed = np.einsum(
        "ij,ij->", verts[faces[:, 0]], np.cross(verts[faces[:, 1]], verts[faces[:, 2]])
    )
    if signed < 0:
        faces = faces[:, [0, 2, 1]]
    return np.asarray(verts, dtype=np.float64), np.asarray(faces, dtype=np.int64)


def _shape_directions(tv: np.ndarray) -> np.ndarray:
    """Evaluate the 10 analytic displacement fields at the template vertices."""
    x, y, z = tv[:, 0], tv[:, 1], tv[:, 2]
    ax = np.abs(x)
    dirs = np.zeros((len(tv), 3, SHAPE_DIM))

    # beta0: overall height. Arms ride with the shoulders instead of
    # stretching, so arm length stays a beta3 affair.
    arm_w = _smoothstep(ax, 0.16, 0.24)
    y_eff = y * (1.0 - arm_w) + _Y_SHOULDER * arm_w
    dirs[:, 1, 0] = -_A0_HEIGHT * y_eff / _H

    # beta1: overall girth, radial about the central vertical axis.
    dirs[:, 0, 1] = _A1_GIRTH * x
    dirs[:, 2, 1] = _A1_GIRTH * z

    # beta2: legs lengthen downward while everything above the crotch
    # compresses by the same amount; net standing height is unchanged.
    below = y <= _Y_CROTCH
    d2 = np.where(
        below,
        -_A2_LEGS * (_Y_CROTCH - y) / _Y_CROTCH,
        -_A2_LEGS * (y - _Y_CROTCH) / (_H - _Y_CROTCH),
    )
    dirs[:, 1, 2] = d2

    # beta3: arm stretch along each arm's own axis.
    for side in (1.0, -1.0):
        s = np.array([side * _SHOULDER_X, _Y_SHOULDER, 0.0])
        w_j = _WRIST.copy()
        w_j[0] *= side
        axis = w_j - s
        length = np.linalg.norm(axis)
        ahat = axis / length
        t = np.clip(((tv - s) @ ahat) / length, 0.0, 1.25)
        gate = _smoothstep(ax, 0.16, 0.24) * (x * side > 0)
        dirs[:, :, 3] += (_A3_ARM * gate * t)[:, None] * ahat

    # beta4: shoulder breadth; whole arms translate with their shoulder.
    w_upper = (
        _smoothstep(y, 1.08, 1.22)
        * _smoothstep(ax, 0.03, 0.12)
        * (1.0 - _smoothstep(y, 1.46, 1.56))
    )
    w4 = np.maximum(w_upper, _smoothstep(ax, 0.18, 0.26))
    dirs[:, 0, 4] = _A4_SHOULDER * np.sign(x) * w4

    # beta5: neck stretch; everything above the neck base lifts.
    dirs[:, 1, 5] = _A5_NECK * _smoothstep(y, 1.38, 1.52)

    # beta6 / beta7: waist and hip girth, radial with a vertical window.
    for k, (yc, sy, amp) in ((6, (1.05, 0.10, _A6_WAIST)), (7, (0.92, 0.09, _A7_HIP))):
        w = np.exp(-(((y - yc) / sy) ** 2)) * amp
        dirs[:, 0, k] = w * x
        dirs[:, 2, k] = w * z

    # beta8: leg thickness, radial from each leg's own axis, lower body only.
    w8 = (1.0 - _smoothstep(y, 0.74, 0.84)) * (1.0 - _smoothstep(ax, 0.20, 0.28))
    for side in (1.0, -1.0):
        hj, an = _HIP_JOINT.copy(), _ANKLE.copy()
        hj[0] *= side
        an[0] *= side
        axis = an - hj
        ahat = axis / np.linalg.norm(axis)
        rel = tv - hj
        radial = rel - np.outer(rel @ ahat, ahat)
        mask = (x * side >= 0) if side > 0 else (x * side > 0)
        dirs[:, :, 8] += _A8_LEG_THICK * (w8 * mask)[:, None] * radial

    # beta9: arm thickness, radial from the shoulder-wrist chord.
    w9 = _smoothstep(ax, 0.16, 0.24)
    for side in (1.0, -1.0):
        s = np.array([side * _SHOULDER_X, _Y_SHOULDER, 0.0])
        w_j = _WRIST.copy()
        w_j[0] *= side
        axis = w_j - s
        ahat = axis / np.linalg.norm(axis)
        rel = tv - s
        radial = rel - np.outer(rel @ ahat, ahat)
        mask = x * side > 0
        dirs[:, :, 9] += _A9_ARM_THICK * (w9 * mask)[:, None] * radial

    return dirs


def _nearest_vertex(tv: np.ndarray, target) -> int:
    d = np.sum((tv - np.asarray(target, dtype=np.float64)) ** 2, axis=1)
    return int(np.argmin(d))


def _extract_ring(tv, center, normal, delta, rmax):
    """Pick an ordered girth loop: band vertices near the cutting plane,
    reduced to their planar convex hull so the loop is simple and does not
    zig-zag between surface sample layers."""
    from scipy.spatial import ConvexHull

    center = np.asarray(center, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    rel = tv - center
    along = rel @ n
    radial_vec = rel - along[:, None] * n
    radial = np.linalg.norm(radial_vec, axis=1)
    idx = np.nonzero((np.abs(along) <= delta) & (radial <= rmax) & (radial > 1e-9))[0]
    if len(idx) < 3:
        raise InvalidAssetError("ring extraction found fewer than 3 vertices")
    u = np.cross(n, [0.0, 0.0, 1.0])
    if np.linalg.norm(u) < 1e-9:
        u = np.cross(n, [1.0, 0.0, 0.0])
    u = u / np.linalg.norm(u)
    v = np.cross(n, u)
    pts2 = np.stack([radial_vec[idx] @ u, radial_vec[idx] @ v], axis=1)
    hull = ConvexHull(pts2)
    return idx[hull.vertices]


def _quantize9(arr: np.ndarray) -> np.ndarray:
    """Round every float to 9 significant decimal digits (the asset file
    precision), so in-memory and serialized assets agree exactly."""
    flat = arr.reshape(-1)
    out = np.array([float(f"{v:.9g}") for v in flat], dtype=np.float64)
    return out.reshape(arr.shape)


@functools.lru_cache(maxsize=1)
def builtin_asset() -> BodyModelAsset:
    """The shipped procedural humanoid: deterministic, closed, ~1.70 m tall."""
    tv, faces = _build_template_mesh()
    dirs = _shape_directions(tv)
    tv = _quantize9(tv)
    dirs = _quantize9(dirs)

    landmarks = {
        "crown": _nearest_vertex(tv, [0.0, 1.72, 0.01]),
        "heel_left": _nearest_vertex(tv, [0.098, 0.018, -0.035]),
        "heel_right": _nearest_vertex(tv, [-0.098, 0.018, -0.035]),
        "shoulder_left": _nearest_vertex(tv, [0.20, 1.41, 0.0]),
        "shoulder_right": _nearest_vertex(tv, [-0.20, 1.41, 0.0]),
        "neck_base": _nearest_vertex(tv, [0.0, 1.40, -0.066]),
        "skull_base": _nearest_vertex(tv, [0.0, 1.50, -0.064]),
        "wrist_left": _nearest_vertex(tv, [0.43, 0.85, 0.04]),
        "hip_center": _nearest_vertex(tv, [0.0, 0.92, 0.115]),
        "crotch": _nearest_vertex(tv, [0.0, 0.78, 0.0]),
    }
    up = [0.0, 1.0, 0.0]
    half = _GRID_STEP * 0.4
    rings = {
        "neck": _extract_ring(tv, [0.0, _grid_plane_y(62), -0.005], up, half, 0.085),
        "waist": _extract_ring(tv, [0.0, _grid_plane_y(45), 0.0], up, half, 0.26),
        "hips": _extract_ring(tv, [0.0, _grid_plane_y(40), 0.0], up, half, 0.30),
        "thigh_left": _extract_ring(tv, [0.0915, _grid_plane_y(25), 0.0], up, half, 0.105),
        "upper_arm_left": _extract_ring(tv, [0.2385, _grid_plane_y(54), 0.0], up, half, 0.085),
    }

    tv.setflags(write=False)
    faces.setflags(write=False)
    dirs.setflags(write=False)
    for r in rings.values():
        r.setflags(write=False)
    asset = BodyModelAsset(
        template_vertices=tv,
        faces=faces,
        shape_dirs=dirs,
        landmarks=landmarks,
        rings=rings,
    )
    asset.validate()
    return asset


# ---------------------------------------------------------------------------
# Asset file format
# ---------------------------------------------------------------------------

ASSET_FORMAT_VERSION = 1


def asset_document(asset: BodyModelAsset) -> dict:
    """The asset as a JSON-ready document (the on-disk schema)."""
    return {
        "version": ASSET_FORMAT_VERSION,
        "vertices": _quantize9(asset.template_vertices).tolist(),
        "faces": asset.faces.tolist(),
        "shape_dirs": _quantize9(asset.shape_dirs).reshape(-1).tolist(),
        "landmarks": {k: int(v) for k, v in asset.landmarks.items()},
        "rings": {k: np.asarray(v).tolist() for k, v in asset.rings.items()},
    }


def save_asset(asset: BodyModelAsset, path) -> None:
    """Write the asset as a self-describing JSON document.

    Floats carry up to 9 significant digits; an asset built by this package
    is already quantized to that precision, so save/load round-trips exactly.
    """
    Path(path).write_text(json.dumps(asset_document(asset)), encoding="utf-8")


def load_asset(path) -> BodyModelAsset:
    path = Path(path)
    if not path.exists():
        raise AssetNotFoundError(f"asset file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise AssetSchemaError(f"asset file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise AssetSchemaError("asset document must be a JSON object")
    missing = {"version", "vertices", "faces", "shape_dirs", "landmarks", "rings"} - set(doc)
    if missing:
        raise AssetSchemaError(f"asset document missing fields: {sorted(missing)}")
    if doc["version"] != ASSET_FORMAT_VERSION:
        raise AssetSchemaError(f"unsupported asset version {doc['version']!r}")
    try:
        tv = np.asarray(doc["vertices"], dtype=np.float64)
        faces = np.asarray(doc["faces"], dtype=np.int64)
        flat = np.asarray(doc["shape_dirs"], dtype=np.float64)
        landmarks = {str(k): int(v) for k, v in doc["landmarks"].items()}
        rings = {str(k): np.asarray(v, dtype=np.int64) for k, v in doc["rings"].items()}
    except (TypeError, ValueError) as exc:
        raise AssetSchemaError(f"asset arrays malformed: {exc}") from exc
    if tv.ndim != 2 or tv.shape[1] != 3:
        raise AssetSchemaError("vertices must be an array of [x, y, z] triples")
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise AssetSchemaError("faces must be an array of index triples")
    if flat.size != tv.shape[0] * 3 * SHAPE_DIM:
        raise AssetSchemaError(
            f"shape_dirs must hold V*3*{SHAPE_DIM} values, got {flat.size}"
        )
    asset = BodyModelAsset(
        template_vertices=tv,
        faces=faces,
        shape_dirs=flat.reshape(tv.shape[0], 3, SHAPE_DIM),
        landmarks=landmarks,
        rings=rings,
    )
    try:
        asset.validate()
    except NonClosedMeshError:
        raise
    except InvalidAssetError as exc:
        raise AssetSchemaError(str(exc)) from exc
    return asset
