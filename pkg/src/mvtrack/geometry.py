"""Calibrated-camera math: projection, fundamental matrices, epipolar
distances, multi-view triangulation and ray-plane intersection.

Conventions:
  - World frame is right-handed, z-up, units in meters.
  - Image frame has its origin at the top-left corner, units in pixels.
  - R maps world to camera: x_cam = R @ (X - center) = R @ X + t.

All functions here are pure and operate on value-semantic inputs; they are
safe to call concurrently.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np


class GeometryError(Exception):
    """Base class for geometric failure modes."""


class DegenerateDepth(GeometryError):
    """Point lies on (or behind) the camera's principal plane."""


class CoincidentCenters(GeometryError):
    """Two cameras share an optical center; no fundamental matrix exists."""


class DegenerateLine(GeometryError):
    """Epipolar line has zero direction components."""


class InsufficientViews(GeometryError):
    """Fewer distinct camera views than required."""


class IllConditioned(GeometryError):
    """Triangulation rays are (anti)parallel beyond recovery."""


class RayParallelToPlane(GeometryError):
    """Back-projected ray does not meet the plane."""


class BehindCamera(GeometryError):
    """Ray-plane intersection lies behind the camera center."""


MIN_DEPTH_M = 1e-9
PARALLEL_RAY_RAD = 1e-6


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError(f"non-finite pixel coordinates ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.y, self.z])):
            raise ValueError(f"non-finite world coordinates ({self.x}, {self.y}, {self.z})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a) -> "Point3":
        return Point3(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class CameraModel:
    """One calibrated pinhole view.

    K is the 3x3 intrinsic matrix in pixels, R the world-to-camera
    rotation, t the translation in meters.  P = K [R|t] and the optical
    center -R^T t are derived and cached at construction.
    """

    id: int
    K: np.ndarray
    R: np.ndarray
    t: np.ndarray
    P: np.ndarray = field(init=False, repr=False)
    center: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float).reshape(3, 3)
        R = np.asarray(self.R, dtype=float).reshape(3, 3)
        t = np.asarray(self.t, dtype=float).reshape(3)
        if np.max(np.abs(R.T @ R - np.eye(3))) >= 1e-9:
            raise ValueError(f"camera {self.id}: R is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) >= 1e-9:
            raise ValueError(f"camera {self.id}: det(R) != 1")
        if K[0, 0] <= 0 or K[1, 1] <= 0:
            raise ValueError(f"camera {self.id}: non-positive focal length")
        if abs(K[2, 2] - 1.0) > 0 or K[1, 0] != 0 or K[2, 0] != 0 or K[2, 1] != 0:
            raise ValueError(f"camera {self.id}: K lower triangle must be [0,0,0] with K[2,2]=1")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "P", K @ np.hstack([R, t[:, None]]))
        object.__setattr__(self, "center", -R.T @ t)

    def depth(self, X: np.ndarray) -> float:
        """Signed depth of a world point along the principal axis."""
        return float(self.R[2] @ np.asarray(X, dtype=float) + self.t[2])


def project(cam: CameraModel, X: Point3) -> Point2:
    """Project a world point to pixel coordinates.

    Raises DegenerateDepth for points on/behind the principal plane.
    """
    Xa = X.as_array() if isinstance(X, Point3) else np.asarray(X, dtype=float)
    if cam.depth(Xa) <= MIN_DEPTH_M:
        raise DegenerateDepth(f"camera {cam.id}: depth {cam.depth(Xa):.3g} m")
    h = cam.P @ np.append(Xa, 1.0)
    return Point2(float(h[0] / h[2]), float(h[1] / h[2]))


def fundamental_matrix(cam_i: CameraModel, cam_j: CameraModel) -> np.ndarray:
    """F such that x_j^T F x_i = 0 for projections x_i, x_j of one point.

    Built from the relative pose; normalized so the largest-magnitude
    entry is exactly 1.
    """
    if np.linalg.norm(cam_i.center - cam_j.center) < 1e-9:
        raise CoincidentCenters(f"cameras {cam_i.id} and {cam_j.id} share a center")
    R_rel = cam_j.R @ cam_i.R.T
    t_rel = cam_j.t - R_rel @ cam_i.t
    tx = np.array([
        [0.0, -t_rel[2], t_rel[1]],
        [t_rel[2], 0.0, -t_rel[0]],
        [-t_rel[1], t_rel[0], 0.0],
    ])
    E = tx @ R_rel
    F = np.linalg.inv(cam_j.K).T @ E @ np.linalg.inv(cam_i.K)
    flat = F.ravel()
    magnitude = np.abs(flat)
    # Among tied-magnitude peaks prefer the positive one, so the
    # normalization commutes with transposition (F_ba == F_ab^T).
    peak = flat[magnitude == magnitude.max()].max()
    return F / peak


def epipolar_point_distance(F: np.ndarray, source: Point2, target: Point2,
                            target_scale: float) -> float:
    """Normalized distance from `target` to the epipolar line of `source`.

    F maps source-view pixels to epipolar lines in the target view; the
    point-to-line distance is divided by `target_scale` (the |w+h| of the
    target box) so the measure is resolution independent.
    """
    if target_scale <= 0:
        raise ValueError("target_scale must be positive")
    l = np.asarray(F, dtype=float) @ np.array([source.x, source.y, 1.0])
    norm = float(np.hypot(l[0], l[1]))
    if norm == 0.0:
        raise DegenerateLine("epipolar line has (l1, l2) = (0, 0)")
    d = abs(l[0] * target.x + l[1] * target.y + l[2]) / norm
    return d / target_scale


def pixel_ray_world(cam: CameraModel, p: Point2) -> np.ndarray:
    """Unit direction in world coordinates of the ray through pixel p."""
    v_cam = np.array([
        (p.x - cam.K[0, 2]) / cam.K[0, 0],
        (p.y - cam.K[1, 2]) / cam.K[1, 1],
        1.0,
    ])
    v_world = v_cam @ cam.R  # row-vector form; equals R^T @ v_cam
    return v_world / np.linalg.norm(v_world)


@dataclass(frozen=True)
class PlaneSpec:
    """A plane given by a unit normal and one on-plane point."""

    n: np.ndarray
    point: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.n, dtype=float).reshape(3)
        norm = np.linalg.norm(n)
        if norm < 1e-12:
            raise ValueError("plane normal must be nonzero")
        if abs(norm - 1.0) >= 1e-9:
            n = n / norm
        if abs(n[2]) >= 1e-9:
            warnings.warn(
                f"plane normal {n.tolist()} is not horizontal; plane is not vertical",
                stacklevel=2,
            )
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).reshape(3))

    def signed_distance(self, X) -> float:
        return float(self.n @ (np.asarray(X, dtype=float) - self.point))


def ray_plane_intersect(cam: CameraModel, p: Point2, plane: PlaneSpec) -> Point3:
    """Intersect the back-projected pixel ray with a plane.

    The intersection must lie in front of the camera (positive ray
    multiplier); the paper-style formula alone would also admit hits
    behind the optical center.
    """
    v = pixel_ray_world(cam, p)
    denom = float(plane.n @ v)
    if abs(denom) <= 1e-9:
        raise RayParallelToPlane(f"camera {cam.id}: |n.v| = {abs(denom):.3g}")
    s = float(plane.n @ (plane.point - cam.center)) / denom
    if s <= 0:
        raise BehindCamera(f"camera {cam.id}: ray multiplier {s:.3g}")
    return Point3.from_array(cam.center + s * v)


def triangulate(obs: list[tuple[CameraModel, Point2]], min_views: int = 2) -> Point3:
    """Recover a 3D point from >=2 calibrated pixel observations.

    Solves the homogeneous DLT system, then takes a single Gauss-Newton
    step on the reprojection objective.
    """
    if len(obs) < min_views or len({cam.id for cam, _ in obs}) < min_views:
        raise InsufficientViews(f"need >= {min_views} distinct views, got {len(obs)}")
    rays = [pixel_ray_world(cam, p) for cam, p in obs]
    max_angle = 0.0
    for a in range(len(rays)):
        for b in range(a + 1, len(rays)):
            cosang = float(np.clip(rays[a] @ rays[b], -1.0, 1.0))
            max_angle = max(max_angle, float(np.arccos(cosang)))
    if max_angle < PARALLEL_RAY_RAD:
        raise IllConditioned(f"rays parallel within {max_angle:.3g} rad")

    A = np.empty((2 * len(obs), 4))
    for k, (cam, p) in enumerate(obs):
        A[2 * k] = p.x * cam.P[2] - cam.P[0]
        A[2 * k + 1] = p.y * cam.P[2] - cam.P[1]
    _, _, vt = np.linalg.svd(A)
    Xh = vt[-1]
    if abs(Xh[3]) < 1e-12:
        raise IllConditioned("DLT solution at infinity")
    X = Xh[:3] / Xh[3]

    # One Gauss-Newton refinement of sum ||x_c - pi(P_c, X)||^2.
    J = np.empty((2 * len(obs), 3))
    r = np.empty(2 * len(obs))
    for k, (cam, p) in enumerate(obs):
        h = cam.P @ np.append(X, 1.0)
        if abs(h[2]) < 1e-12:
            return Point3.from_array(X)
        u, v = h[0] / h[2], h[1] / h[2]
        r[2 * k] = p.x - u
        r[2 * k + 1] = p.y - v
        J[2 * k] = (cam.P[0, :3] - u * cam.P[2, :3]) / h[2]
        J[2 * k + 1] = (cam.P[1, :3] - v * cam.P[2, :3]) / h[2]
    delta, *_ = np.linalg.lstsq(J, r, rcond=None)
    if np.all(np.isfinite(delta)):
        X = X + delta
    return Point3.from_array(X)


def load_calibration(path) -> list[CameraModel]:
    """Read a JSON array of {id, K, R, t} camera records (row-major)."""
    with open(path) as fh:
        records = json.load(fh)
    if not isinstance(records, list):
        raise ValueError("calibration file must contain a JSON array")
    cams = []
    for rec in records:
        cams.append(CameraModel(
            id=int(rec["id"]),
            K=np.asarray(rec["K"], dtype=float).reshape(3, 3),
            R=np.asarray(rec["R"], dtype=float).reshape(3, 3),
            t=np.asarray(rec["t"], dtype=float).reshape(3),
        ))
    return sorted(cams, key=lambda c: c.id)


def save_calibration(cams: list[CameraModel], path) -> None:
    records = [
        {"id": c.id, "K": c.K.flatten().tolist(), "R": c.R.flatten().tolist(),
         "t": c.t.tolist()}
        for c in sorted(cams, key=lambda c: c.id)
    ]
    with open(path, "w") as fh:
        json.dump(records, fh, indent=2, sort_keys=True)
        fh.write("\n")


class CameraRig:
    """A fixed set of calibrated cameras with cached fundamental matrices."""

    def __init__(self, cameras: list[CameraModel]):
        self.cameras = {c.id: c for c in cameras}
        self._F: dict[tuple[int, int], np.ndarray] = {}

    def __getitem__(self, cam_id: int) -> CameraModel:
        return self.cameras[cam_id]

    def __iter__(self):
        return iter(sorted(self.cameras.values(), key=lambda c: c.id))

    def __len__(self):
        return len(self.cameras)

    def fundamental(self, source_id: int, target_id: int) -> np.ndarray:
        """F mapping source-view pixels to epipolar lines in the target view."""
        key = (source_id, target_id)
        if key not in self._F:
            self._F[key] = fundamental_matrix(self.cameras[source_id],
                                              self.cameras[target_id])
        return self._F[key]
