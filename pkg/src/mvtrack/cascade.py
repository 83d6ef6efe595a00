"""Cascaded association of window clusters to 3D tracklets.

Clusters with enough well-separated views are triangulated directly;
single-view and opposite-view-only clusters are routed to the
ray-plane-intersection path, where coplanar candidates from different
cameras are matched and fused.  Every cluster goes through exactly one
branch.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import EMPTY, Distance, cluster_with_cutoff
from .cross_view import Cluster
from .geometry import (CameraRig, GeometryError, PlaneSpec, Point2,
                       ray_plane_intersect, triangulate)
from .sv_track import WindowSegment2D

logger = logging.getLogger(__name__)

THETA_OPP_DEG = 150.0
TAU_PLANE_M = 0.5
VELOCITY_LIMIT_M = 1.0
BETA_M = 1.0


class Provenance(enum.Enum):
    TRIANGULATED = "triangulated"
    PLANE_INTERSECTED = "plane_intersected"
    INTERPOLATED = "interpolated"


class Sufficiency(enum.Enum):
    SUFFICIENT = "sufficient"
    INSUFFICIENT = "insufficient"


class Mode(enum.Enum):
    CASCADE = "cascade"
    TRIANGULATION_ONLY = "triangulation_only"
    PLANE_ONLY = "plane_only"


@dataclass
class Tracklet3D:
    """Frame-indexed 3D center positions with provenance and view sets.

    `top` / `bottom` hold the triangulated head/foot heights for frames
    where at least two views were available.
    """

    track_id: int
    points: dict[int, np.ndarray] = field(default_factory=dict)
    top: dict[int, np.ndarray] = field(default_factory=dict)
    bottom: dict[int, np.ndarray] = field(default_factory=dict)
    provenance: dict[int, Provenance] = field(default_factory=dict)
    source_views: dict[int, frozenset[int]] = field(default_factory=dict)

    @property
    def frames(self) -> list[int]:
        return sorted(self.points)

    @property
    def first_frame(self) -> int:
        return min(self.points)

    @property
    def last_frame(self) -> int:
        return max(self.points)


@dataclass(frozen=True)
class TrackingSpace:
    """Performance cuboid plus the laterally buffered tracking cuboid."""

    perf: tuple[float, float, float, float, float, float]
    beta: float = BETA_M

    def __post_init__(self):
        x0, y0, z0, x1, y1, z1 = self.perf
        if not (x0 < x1 and y0 < y1 and z0 < z1):
            raise ValueError("perf cuboid must have min < max per axis")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")

    @property
    def track(self) -> tuple[float, float, float, float, float, float]:
        x0, y0, z0, x1, y1, z1 = self.perf
        b = self.beta
        return (x0 - b, y0 - b, z0, x1 + b, y1 + b, z1)

    def in_perf(self, X) -> bool:
        return self._contains(self.perf, X)

    def in_track(self, X) -> bool:
        return self._contains(self.track, X)

    @staticmethod
    def _contains(cuboid, X) -> bool:
        x0, y0, z0, x1, y1, z1 = cuboid
        return bool(x0 <= X[0] <= x1 and y0 <= X[1] <= y1 and z0 <= X[2] <= z1)


def _cluster_frame_obs(cluster: Cluster, frame: int, rig: CameraRig,
                       point_of) -> list:
    obs = []
    for seg in cluster.members:
        box = seg.boxes.get(frame)
        if box is not None:
            obs.append((rig[seg.camera], point_of(box)))
    return obs


def _center(box) -> Point2:
    return Point2(box.x, box.y)


def classify_cluster(cluster: Cluster, rig: CameraRig,
                     theta_opp_deg: float = THETA_OPP_DEG,
                     opposite_pairs: list[frozenset[int]] | None = None) -> Sufficiency:
    """INSUFFICIENT for single-view clusters and for two-view clusters whose
    line-of-sight rays are nearly opposed (median per-frame angle above
    theta_opp, or an explicitly configured opposite pair)."""
    cameras = sorted(cluster.cameras)
    if len(cameras) == 1:
        return Sufficiency.INSUFFICIENT
    if len(cameras) != 2:
        return Sufficiency.SUFFICIENT
    if opposite_pairs and frozenset(cameras) in opposite_pairs:
        return Sufficiency.INSUFFICIENT

    angles = []
    frames = sorted(set.intersection(*[set(s.valid_frames) for s in cluster.members]))
    for frame in frames:
        obs = _cluster_frame_obs(cluster, frame, rig, _center)
        if len(obs) < 2:
            continue
        try:
            X = triangulate(obs).as_array()
        except GeometryError:
            continue
        d_a = X - rig[cameras[0]].center
        d_b = X - rig[cameras[1]].center
        cosang = float(np.clip(
            d_a @ d_b / (np.linalg.norm(d_a) * np.linalg.norm(d_b)), -1.0, 1.0))
        angles.append(math.degrees(math.acos(cosang)))
    if angles and float(np.median(angles)) > theta_opp_deg:
        return Sufficiency.INSUFFICIENT
    return Sufficiency.SUFFICIENT


def triangulate_cluster(cluster: Cluster, rig: CameraRig,
                        track_id: int = -1) -> Tracklet3D:
    """Per-frame triangulation of the cluster's bbox centers; frames with a
    single view or a degenerate solve are skipped."""
    t3 = Tracklet3D(track_id=track_id)
    all_frames = sorted(set().union(*[s.valid_frames for s in cluster.members]))
    for frame in all_frames:
        obs = _cluster_frame_obs(cluster, frame, rig, _center)
        if len(obs) < 2:
            continue
        try:
            X = triangulate(obs)
        except GeometryError as exc:
            logger.debug("frame %d: triangulation skipped (%s)", frame, exc)
            continue
        t3.points[frame] = X.as_array()
        t3.provenance[frame] = Provenance.TRIANGULATED
        t3.source_views[frame] = frozenset(cam.id for cam, _ in obs)
    return t3


def outlier_gate(t3: Tracklet3D, space: TrackingSpace,
                 velocity_limit: float = VELOCITY_LIMIT_M) -> bool:
    """True to keep: all points inside the tracking cuboid and no
    consecutive-frame step above the velocity limit."""
    frames = t3.frames
    for f in frames:
        if not space.in_track(t3.points[f]):
            return False
    for a, b in zip(frames, frames[1:]):
        if b - a == 1 and np.linalg.norm(t3.points[b] - t3.points[a]) > velocity_limit:
            return False
    return True


def plane_candidates(unmatched: list[WindowSegment2D], plane: PlaneSpec,
                     rig: CameraRig) -> list[tuple[Tracklet3D, WindowSegment2D]]:
    """One coplanar 3D candidate per segment, from per-frame ray-plane
    intersection of the bbox centers.  Parallel/behind frames are skipped."""
    out = []
    for seg in unmatched:
        t3 = Tracklet3D(track_id=-1)
        cam = rig[seg.camera]
        for frame in sorted(seg.valid_frames):
            box = seg.boxes[frame]
            try:
                X = ray_plane_intersect(cam, _center(box), plane)
            except GeometryError as exc:
                logger.debug("frame %d cam %d: plane intersection skipped (%s)",
                             frame, seg.camera, exc)
                continue
            t3.points[frame] = X.as_array()
            t3.provenance[frame] = Provenance.PLANE_INTERSECTED
            t3.source_views[frame] = frozenset({seg.camera})
        if t3.points:
            out.append((t3, seg))
    return out


def candidate_pair_distance(a: Tracklet3D, cam_a: int,
                            b: Tracklet3D, cam_b: int) -> Distance:
    """Mean per-frame Euclidean distance between coplanar candidates."""
    common = set(a.points) & set(b.points)
    if not common:
        return EMPTY
    if cam_a == cam_b:
        return math.inf
    return float(np.mean([np.linalg.norm(a.points[f] - b.points[f]) for f in sorted(common)]))


def plane_match_and_fuse(cands: list[tuple[Tracklet3D, WindowSegment2D]],
                         cutoff: float = TAU_PLANE_M
                         ) -> list[tuple[Tracklet3D, list[WindowSegment2D]]]:
    """Cluster coplanar candidates and fuse clusters covering >=2 cameras by
    per-frame averaging over the views present; single-camera clusters
    are discarded."""
    ordered = sorted(cands, key=lambda cs: cs[1].key)

    def dist(i: int, j: int) -> Distance:
        return candidate_pair_distance(ordered[i][0], ordered[i][1].camera,
                                       ordered[j][0], ordered[j][1].camera)

    fused: list[tuple[Tracklet3D, list[WindowSegment2D]]] = []
    for group in cluster_with_cutoff(len(ordered), dist, cutoff):
        members = [ordered[i] for i in group]
        cameras = {seg.camera for _, seg in members}
        if len(cameras) < 2:
            continue
        t3 = Tracklet3D(track_id=-1)
        frames = sorted(set().union(*[set(t.points) for t, _ in members]))
        for frame in frames:
            present = [(t, seg) for t, seg in members if frame in t.points]
            t3.points[frame] = np.mean([t.points[frame] for t, _ in present], axis=0)
            t3.provenance[frame] = Provenance.PLANE_INTERSECTED
            t3.source_views[frame] = frozenset(seg.camera for _, seg in present)
        fused.append((t3, [seg for _, seg in members]))
    return fused


def attach_top_bottom(t3: Tracklet3D, segments: list[WindowSegment2D],
                      rig: CameraRig) -> None:
    """Triangulate per-frame top-center and bottom-center pixels of the
    associated 2D boxes; frames with fewer than two views are omitted."""
    for frame in t3.frames:
        obs_top = []
        obs_bot = []
        for seg in segments:
            box = seg.boxes.get(frame)
            if box is None:
                continue
            obs_top.append((rig[seg.camera], Point2(box.x, box.y - box.h / 2)))
            obs_bot.append((rig[seg.camera], Point2(box.x, box.y + box.h / 2)))
        if len(obs_top) < 2:
            continue
        try:
            t3.top[frame] = triangulate(obs_top).as_array()
            t3.bottom[frame] = triangulate(obs_bot).as_array()
        except GeometryError:
            continue


@dataclass
class WindowTrack:
    """A fused 3D tracklet for one window plus its contributing segments."""

    start: int
    tracklet: Tracklet3D
    segments: list[WindowSegment2D]


def process_window(start: int, clusters: list[Cluster], rig: CameraRig,
                   plane: PlaneSpec, space: TrackingSpace,
                   mode: Mode = Mode.CASCADE,
                   theta_opp_deg: float = THETA_OPP_DEG,
                   tau_plane: float = TAU_PLANE_M,
                   velocity_limit: float = VELOCITY_LIMIT_M,
                   opposite_pairs: list[frozenset[int]] | None = None
                   ) -> list[WindowTrack]:
    """Route every cluster through exactly one branch and gate the results."""
    sufficient: list[Cluster] = []
    insufficient_segments: list[WindowSegment2D] = []
    for cluster in clusters:
        if mode is Mode.PLANE_ONLY:
            verdict = Sufficiency.INSUFFICIENT
        elif mode is Mode.TRIANGULATION_ONLY:
            verdict = (Sufficiency.SUFFICIENT if len(cluster.cameras) >= 2
                       else Sufficiency.INSUFFICIENT)
        else:
            verdict = classify_cluster(cluster, rig, theta_opp_deg, opposite_pairs)
        if verdict is Sufficiency.SUFFICIENT:
            sufficient.append(cluster)
        else:
            insufficient_segments.extend(cluster.members)

    tracks: list[WindowTrack] = []
    for cluster in sufficient:
        t3 = triangulate_cluster(cluster, rig)
        if t3.points and outlier_gate(t3, space, velocity_limit):
            tracks.append(WindowTrack(start, t3, list(cluster.members)))

    if mode is not Mode.TRIANGULATION_ONLY and insufficient_segments:
        cands = plane_candidates(sorted(insufficient_segments, key=lambda s: s.key),
                                 plane, rig)
        for t3, segs in plane_match_and_fuse(cands, tau_plane):
            # The gate is applied to both branches for uniformity.
            if t3.points and outlier_gate(t3, space, velocity_limit):
                tracks.append(WindowTrack(start, t3, segs))

    for wt in tracks:
        attach_top_bottom(wt.tracklet, wt.segments, rig)
    tracks.sort(key=lambda wt: min(seg.key for seg in wt.segments))
    return tracks
