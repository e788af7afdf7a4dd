"""Fixed-radius contact detection.

Both methods return every unordered pair ``(i, j)``, ``i < j``, whose squared
distance is strictly below ``threshold**2``, as an (P, 2) int64 array sorted
by ``i`` then ``j``. The naive method is the O(N^2) reference; the grid
method buckets points into square cells of side ``threshold`` and compares
each cell with itself and four forward neighbours.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

# Forward half of the 3x3 stencil; with the same-cell case this covers each
# neighbouring cell pair exactly once.
_HALF_STENCIL = ((0, 0), (0, 1), (1, -1), (1, 0), (1, 1))
_BLOCK = 4096


def _sorted_pairs(i: np.ndarray, j: np.ndarray) -> np.ndarray:
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    order = np.lexsort((hi, lo))
    return np.column_stack([lo[order], hi[order]]).astype(np.int64)


def contacts_naive(positions, threshold: float) -> np.ndarray:
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    t2 = float(threshold) ** 2
    out_i, out_j = [], []
    n = len(pts)
    for s in range(0, n, 512):
        blk = pts[s:s + 512]
        d2 = (blk[:, None, 0] - pts[None, :, 0]) ** 2 + (blk[:, None, 1] - pts[None, :, 1]) ** 2
        ii, jj = np.nonzero(d2 < t2)
        ii = ii + s
        keep = jj > ii
        out_i.append(ii[keep])
        out_j.append(jj[keep])
    if not out_i:
        return np.empty((0, 2), dtype=np.int64)
    return _sorted_pairs(np.concatenate(out_i), np.concatenate(out_j))


def _grid_block(pts, skey, order, ny, t2, start, stop):
    found_i, found_j = [], []
    rows = np.arange(start, stop)
    for dx, dy in _HALF_STENCIL:
        nkey = skey[start:stop] + dx * ny + dy
        lo = np.searchsorted(skey, nkey, side="left")
        hi = np.searchsorted(skey, nkey, side="right")
        if dx == 0 and dy == 0:
            lo = np.maximum(lo, rows + 1)
        counts = np.maximum(hi - lo, 0)
        total = int(counts.sum())
        if total == 0:
            continue
        a = np.repeat(rows, counts)
        offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        b = np.repeat(lo, counts) + offsets
        pa, pb = order[a], order[b]
        d = pts[pa] - pts[pb]
        hit = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] < t2
        found_i.append(pa[hit])
        found_j.append(pb[hit])
    if not found_i:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(found_i), np.concatenate(found_j)


def contacts_grid(positions, threshold: float, threads: int = 1) -> np.ndarray:
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    t = float(threshold)
    # A hair wider than the threshold so rounding in the division can never
    # separate a qualifying pair by two cells.
    cell = t * (1.0 + 1e-12)
    cx = np.floor((pts[:, 0] - pts[:, 0].min()) / cell).astype(np.int64) + 1
    cy = np.floor((pts[:, 1] - pts[:, 1].min()) / cell).astype(np.int64) + 1
    ny = int(cy.max()) + 2
    key = cx * ny + cy
    order = np.argsort(key, kind="stable")
    skey = key[order]
    bounds = [(s, min(n, s + _BLOCK)) for s in range(0, n, _BLOCK)]

    def work(b):
        return _grid_block(pts, skey, order, ny, t * t, *b)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    i = np.concatenate([p[0] for p in parts])
    j = np.concatenate([p[1] for p in parts])
    return _sorted_pairs(i, j)


def detect_contacts(positions, threshold: float, method: str = "grid",
                    threads: int = 1) -> np.ndarray:
    if not threshold > 0:
        raise ValueError("contact threshold must be positive")
    if method == "grid":
        return contacts_grid(positions, threshold, threads=threads)
    if method == "naive":
        return contacts_naive(positions, threshold)
    raise ValueError(f"unknown contact method {method!r}")
