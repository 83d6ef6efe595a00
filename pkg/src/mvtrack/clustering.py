"""Agglomerative clustering with a three-state distance.

Pairwise distances are one of: a finite float, math.inf (forbidden merge,
e.g. same-camera overlap), or EMPTY (no shared temporal support).  The
complete-linkage update is modified so that EMPTY entries defer to the
other side instead of poisoning the max:

    combine(a, b) = max(a, b)   if neither is EMPTY
                  = b           if only a is EMPTY
                  = a           if only b is EMPTY
                  = EMPTY       if both are EMPTY

Merging continues while the global minimum over non-EMPTY entries is
below the cutoff.  Ties are broken by the lexicographically smallest
(i, j) cluster-index pair, which makes the result deterministic.
"""

from __future__ import annotations

import math

# Sentinel for "no shared frames"; distinct from math.inf, which forbids
# a merge but still participates in the max-update.
EMPTY = None

Distance = float | None


def combine(a: Distance, b: Distance) -> Distance:
    if a is EMPTY and b is EMPTY:
        return EMPTY
    if a is EMPTY:
        return b
    if b is EMPTY:
        return a
    return max(a, b)


def cluster_with_cutoff(n: int, distance, cutoff: float) -> list[list[int]]:
    """Cluster items 0..n-1; `distance(i, j)` returns a Distance.

    Returns the final clusters as lists of original item indices, each
    sorted, in a deterministic order.
    """
    clusters: list[list[int]] = [[i] for i in range(n)]
    D: list[list[Distance]] = [[EMPTY] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            D[i][j] = D[j][i] = distance(i, j)

    while len(clusters) > 1:
        best_i = best_j = -1
        best = math.inf
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                d = D[i][j]
                if d is not EMPTY and d < best:
                    best, best_i, best_j = d, i, j
        if best_i < 0 or best >= cutoff:
            break
        # Merge j into i, then update row/column i with the EMPTY-aware rule.
        clusters[best_i] = sorted(clusters[best_i] + clusters[best_j])
        del clusters[best_j]
        merged_row = [
            combine(D[best_i][q], D[best_j][q])
            for q in range(len(D)) if q != best_j
        ]
        D = [
            [row[q] for q in range(len(row)) if q != best_j]
            for k, row in enumerate(D) if k != best_j
        ]
        for q in range(len(D)):
            if q != best_i:
                D[best_i][q] = D[q][best_i] = merged_row[q]
        D[best_i][best_i] = EMPTY
    return clusters
