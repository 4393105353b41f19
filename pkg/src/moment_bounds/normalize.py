from __future__ import annotations
import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np


# weights at or below ZERO_REL * max weight count as zero
ZERO_REL = 1e-12
ZERO_FLOOR = 1e-300


def frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def zero_threshold(weights: Sequence[float], rel: float = ZERO_REL) -> float:
    """Magnitude at or below which a weight counts as exactly zero."""
    arr = np.asarray(weights, dtype=float)
    top = float(np.max(np.abs(arr))) if arr.size else 0.0
    return rel * max(top, ZERO_FLOOR)


def positive_ids(weights: Sequence[float], rel: float = ZERO_REL) -> List[int]:
    arr = np.asarray(weights, dtype=float)
    thr = zero_threshold(arr, rel)
    return [int(i) for i in np.flatnonzero(arr > thr)]


def clean_weights(weights: Sequence[float], rel: float = ZERO_REL) -> np.ndarray:
    """Snap LP rounding noise to zero: tiny magnitudes and tiny negatives."""
    arr = np.array(weights, dtype=float, copy=True)
    thr = zero_threshold(arr, rel)
    arr[np.abs(arr) <= thr] = 0.0
    return arr


def numeric_rank(matrix, rank_tol: float = 1e-9) -> int:
    """Rank decided by singular values above rank_tol times the largest one."""
    arr = np.atleast_2d(np.asarray(matrix, dtype=float))
    if arr.size == 0:
        return 0
    s = np.linalg.svd(arr, compute_uv=False)
    if not s.size or not np.isfinite(s[0]) or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > rank_tol * s[0]))


def null_vector(matrix, rank_tol: float = 1e-9) -> Optional[np.ndarray]:
    """A unit vector v with matrix @ v ~ 0, or None when the columns are independent."""
    arr = np.atleast_2d(np.asarray(matrix, dtype=float))
    cols = arr.shape[1]
    if numeric_rank(arr, rank_tol) >= cols:
        return None
    _, _, vt = np.linalg.svd(arr, full_matrices=True)
    return vt[-1].copy()


def merge_points(points: Iterable[float], pinned: Iterable[float] = (), rel: float = 1e-12) -> List[float]:
    """Sorted union where near-duplicates collapse onto the pinned value if one exists."""
    pinned_set = sorted(set(float(p) for p in pinned))
    merged: List[float] = []
    for p in sorted(set(float(x) for x in points) | set(pinned_set)):
        if merged and abs(p - merged[-1]) <= rel * max(1.0, abs(p)):
            if p in pinned_set:
                merged[-1] = p
            continue
        merged.append(p)
    return merged


def fmt17(v: float) -> str:
    if isinstance(v, float) and math.isnan(v):
        return "NaN"
    if isinstance(v, float) and math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return f"{float(v):.17g}"


def split_exact(w: float, d: float) -> Tuple[float, float]:
    """(w + d', w - d') with d' within one ulp of d and (a + b) / 2 == w exactly.

    Requires |d| <= w / 2.
    """
    if w == 0.0 or d == 0.0:
        return w, w
    ulp = float(np.spacing(w))
    n_w = int(round(w / ulp))
    n_d = int(round(abs(d) / ulp))
    # above 2**53 units only even counts are representable
    if n_w + n_d >= 2 ** 53 and (n_w + n_d) % 2:
        n_d -= 1
    s = 1 if d > 0 else -1
    return float(n_w + s * n_d) * ulp, float(n_w - s * n_d) * ulp
