"""Cross-window stitching of fragmented 3D tracklets.

Adjacent windows overlap by half a window; fragment pairs are scored by
their mean 3D distance over shared frames and matched with an optimal
linear assignment, rejecting pairs above the unmatched threshold.
Matched fragments are merged (averaging the overlap) under the earlier
track id; unmatched fragments from the new window get fresh ids.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cascade import Provenance, Tracklet3D, WindowTrack
from .sv_track import Bbox

logger = logging.getLogger(__name__)

STITCH_THRESHOLD_M = 0.6

# Cost used for UNAVAILABLE (no-overlap) entries; far above any plausible
# threshold, so such pairs are always rejected.
UNAVAILABLE_COST = 1e9


def window_distance(prev: Tracklet3D, nxt: Tracklet3D) -> float | None:
    """Mean per-frame Euclidean distance over the shared valid frames;
    None (UNAVAILABLE) when the overlap is empty."""
    common = sorted(set(prev.points) & set(nxt.points))
    if not common:
        return None
    return float(np.mean([np.linalg.norm(prev.points[f] - nxt.points[f])
                          for f in common]))


def window_distance_matrix(prev: list[Tracklet3D],
                           nxt: list[Tracklet3D]) -> list[list[float | None]]:
    return [[window_distance(p, n) for n in nxt] for p in prev]


def assign(D: list[list[float | None]],
           unmatched_threshold: float = STITCH_THRESHOLD_M
           ) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Optimal assignment over a rectangular matrix with UNAVAILABLE (None)
    entries excluded; assigned pairs costing more than the threshold are
    rejected to unmatched.  Returns (pairs, unmatched_rows, unmatched_cols).
    """
    n_rows = len(D)
    n_cols = len(D[0]) if D else 0
    if n_rows == 0 or n_cols == 0:
        return [], list(range(n_rows)), list(range(n_cols))
    cost = np.full((n_rows, n_cols), UNAVAILABLE_COST)
    for i in range(n_rows):
        for j in range(n_cols):
            if D[i][j] is not None:
                cost[i, j] = D[i][j]
    rows, cols = linear_sum_assignment(cost)
    pairs = [(int(i), int(j)) for i, j in zip(rows, cols)
             if cost[i, j] <= unmatched_threshold]
    matched_rows = {i for i, _ in pairs}
    matched_cols = {j for _, j in pairs}
    return (pairs,
            [i for i in range(n_rows) if i not in matched_rows],
            [j for j in range(n_cols) if j not in matched_cols])


def merge_assigned(prev: Tracklet3D, nxt: Tracklet3D) -> Tracklet3D:
    """Merge two assigned fragments: keep prev before the overlap, average
    pointwise where both have data, keep next after; prev's id wins.
    Overlap frames present in only one side use the available value."""
    merged = Tracklet3D(track_id=prev.track_id)
    for f in sorted(set(prev.points) | set(nxt.points)):
        in_prev, in_next = f in prev.points, f in nxt.points
        if in_prev and in_next:
            merged.points[f] = (prev.points[f] + nxt.points[f]) / 2.0
            merged.provenance[f] = prev.provenance[f]
            merged.source_views[f] = prev.source_views.get(f, frozenset()) | \
                nxt.source_views.get(f, frozenset())
        elif in_prev:
            merged.points[f] = prev.points[f]
            merged.provenance[f] = prev.provenance[f]
            merged.source_views[f] = prev.source_views.get(f, frozenset())
        else:
            merged.points[f] = nxt.points[f]
            merged.provenance[f] = nxt.provenance[f]
            merged.source_views[f] = nxt.source_views.get(f, frozenset())
    for attr in ("top", "bottom"):
        a, b = getattr(prev, attr), getattr(nxt, attr)
        out = getattr(merged, attr)
        for f in sorted(set(a) | set(b)):
            if f in a and f in b:
                out[f] = (a[f] + b[f]) / 2.0
            else:
                out[f] = a.get(f, b.get(f))
    return merged


@dataclass
class TrackRecord:
    """A live stitched track: the accumulated 3D tracklet plus the 2D boxes
    propagated from associated window segments, per camera."""

    tracklet: Tracklet3D
    boxes2d: dict[int, dict[int, Bbox]] = field(default_factory=dict)

    def absorb_segments(self, segments) -> None:
        # On cross-window 2D conflicts the newer window's segment wins.
        for seg in segments:
            per_cam = self.boxes2d.setdefault(seg.camera, {})
            for f, box in seg.boxes.items():
                if f in per_cam and per_cam[f] != box:
                    logger.debug("track %d cam %d frame %d: 2D link conflict, "
                                 "keeping newer window", self.tracklet.track_id,
                                 seg.camera, f)
                per_cam[f] = box


class TrackRegistry:
    """Sequential cross-window stitcher; confined to the pipeline thread."""

    def __init__(self, unmatched_threshold: float = STITCH_THRESHOLD_M):
        self.unmatched_threshold = unmatched_threshold
        self.tracks: dict[int, TrackRecord] = {}
        self._next_id = 0

    def new_track_ids(self, count: int) -> list[int]:
        ids = list(range(self._next_id, self._next_id + count))
        self._next_id += count
        return ids

    def live_tracks(self, window_start: int) -> list[int]:
        """Tracks that can still overlap a window starting at window_start."""
        return sorted(tid for tid, rec in self.tracks.items()
                      if rec.tracklet.points and
                      rec.tracklet.last_frame >= window_start)

    def advance(self, window_start: int, window_tracks: list[WindowTrack]) -> None:
        live = self.live_tracks(window_start)
        if live:
            D = window_distance_matrix(
                [self.tracks[tid].tracklet for tid in live],
                [wt.tracklet for wt in window_tracks])
            pairs, _unmatched_prev, unmatched_next = assign(D, self.unmatched_threshold)
        else:
            pairs, unmatched_next = [], list(range(len(window_tracks)))

        for i, j in pairs:
            rec = self.tracks[live[i]]
            rec.tracklet = merge_assigned(rec.tracklet, window_tracks[j].tracklet)
            rec.absorb_segments(window_tracks[j].segments)
        for j, tid in zip(unmatched_next, self.new_track_ids(len(unmatched_next))):
            wt = window_tracks[j]
            t3 = wt.tracklet
            t3.track_id = tid
            rec = TrackRecord(tracklet=t3)
            rec.absorb_segments(wt.segments)
            self.tracks[tid] = rec
