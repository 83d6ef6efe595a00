"""Cross-camera association of same-window 2D tracklet segments.

Segment pairs are compared with the symmetric two-term epipolar box
distance, averaged over their overlapping frames; same-camera overlaps
are infinitely far (never merged) and disjoint-frame pairs carry no
evidence at all (EMPTY).  Clusters are formed with the EMPTY-aware
complete-linkage scheme in `clustering`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .clustering import EMPTY, Distance, cluster_with_cutoff
from .geometry import CameraRig, Point2, epipolar_point_distance
from .sv_track import Bbox, WindowSegment2D

LAMBDA_2D = 0.3


@dataclass(frozen=True)
class Cluster:
    """Segments associated to one identity within a window."""

    members: tuple[WindowSegment2D, ...]

    @property
    def cameras(self) -> frozenset[int]:
        return frozenset(s.camera for s in self.members)

    def __len__(self):
        return len(self.members)


def bbox_pair_distance(a: Bbox, b: Bbox, cam_a: int, cam_b: int,
                       rig: CameraRig) -> float:
    """Symmetric two-term epipolar distance between two cross-view boxes."""
    la = epipolar_point_distance(rig.fundamental(cam_b, cam_a),
                                 Point2(b.x, b.y), Point2(a.x, a.y), a.scale)
    lb = epipolar_point_distance(rig.fundamental(cam_a, cam_b),
                                 Point2(a.x, a.y), Point2(b.x, b.y), b.scale)
    return la + lb


def tracklet_pair_distance(a: WindowSegment2D, b: WindowSegment2D,
                           rig: CameraRig) -> Distance:
    """Mean per-frame epipolar distance; math.inf for same-camera overlap,
    EMPTY when the segments share no valid frames."""
    common = a.valid_frames & b.valid_frames
    if not common:
        return EMPTY
    if a.camera == b.camera:
        return math.inf
    total = 0.0
    for f in common:
        total += bbox_pair_distance(a.boxes[f], b.boxes[f], a.camera, b.camera, rig)
    return total / len(common)


def cluster_segments(segments: list[WindowSegment2D], rig: CameraRig,
                     cutoff: float = LAMBDA_2D) -> list[Cluster]:
    """Associate same-window segments into per-identity clusters."""
    ordered = sorted(segments, key=lambda s: s.key)

    def dist(i: int, j: int) -> Distance:
        return tracklet_pair_distance(ordered[i], ordered[j], rig)

    groups = cluster_with_cutoff(len(ordered), dist, cutoff)
    return [Cluster(tuple(ordered[i] for i in g)) for g in groups]
