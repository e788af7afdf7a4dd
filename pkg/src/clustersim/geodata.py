"""Territory geometry: planar regions in projected km.

Regions are read from a GeoJSON FeatureCollection whose coordinates are
already in an equal-area projection with km units; no geodesy happens here.
Point-in-polygon uses the even-odd rule with boundary points counted inside.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .rng import Stream

BOUNDARY_TOL_KM = 1e-9
_CHUNK = 4_000_000  # points x edges evaluated per block


class GeometryError(ValueError):
    pass


def _signed_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _open_ring(coords, name: str) -> np.ndarray:
    ring = np.asarray(coords, dtype=np.float64)
    if ring.ndim != 2 or ring.shape[1] != 2:
        raise GeometryError(f"region {name!r}: ring is not a sequence of 2-D points")
    if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    if len(ring) < 3:
        raise GeometryError(f"region {name!r}: ring has {len(ring)} vertices, need at least 3")
    if _signed_area(ring) == 0.0:
        raise GeometryError(f"region {name!r}: ring has zero area")
    return ring


@dataclass(frozen=True)
class Region:
    """One state/UT. ``polygons[k][0]`` is an exterior ring, the rest are holes."""

    name: str
    polygons: tuple[tuple[np.ndarray, ...], ...]
    bbox: tuple[float, float, float, float] = field(init=False)
    _edges: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.polygons:
            raise GeometryError(f"region {self.name!r}: no polygons")
        rings = [r for poly in self.polygons for r in poly]
        pts = np.concatenate(rings)
        object.__setattr__(self, "bbox", (float(pts[:, 0].min()), float(pts[:, 1].min()),
                                          float(pts[:, 0].max()), float(pts[:, 1].max())))
        edges = np.concatenate([np.hstack([r, np.roll(r, -1, axis=0)]) for r in rings])
        object.__setattr__(self, "_edges", edges)

    @classmethod
    def from_rings(cls, name: str, polygons) -> "Region":
        """Build from nested coordinate lists (GeoJSON MultiPolygon layout)."""
        return cls(name, tuple(tuple(_open_ring(r, name) for r in poly) for poly in polygons))

    @property
    def rings(self) -> list[np.ndarray]:
        return [r for poly in self.polygons for r in poly]

    @property
    def edges(self) -> np.ndarray:
        """(E, 4) array of x1, y1, x2, y2."""
        return self._edges


def area(region: Region) -> float:
    """Shoelace area in km^2; holes subtract."""
    total = 0.0
    for poly in region.polygons:
        total += abs(_signed_area(poly[0])) - sum(abs(_signed_area(h)) for h in poly[1:])
    if total <= 0.0:
        raise GeometryError(f"region {region.name!r}: nonpositive area {total}")
    return total


def _contains_block(edges: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    x1, y1, x2, y2 = (edges[:, k][None, :] for k in range(4))
    px = px[:, None]
    py = py[:, None]
    straddle = (y1 > py) != (y2 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
    crossings = np.count_nonzero(straddle & (px < xint), axis=1)
    inside = (crossings & 1).astype(bool)

    dx, dy = x2 - x1, y2 - y1
    seg2 = dx * dx + dy * dy
    t = np.clip(((px - x1) * dx + (py - y1) * dy) / np.where(seg2 > 0, seg2, 1.0), 0.0, 1.0)
    ex = px - (x1 + t * dx)
    ey = py - (y1 + t * dy)
    on_edge = np.any(ex * ex + ey * ey <= BOUNDARY_TOL_KM * BOUNDARY_TOL_KM, axis=1)
    return inside | on_edge


def contains(region: Region, p) -> np.ndarray | bool:
    """Even-odd point-in-region test; boundary counts as inside.

    ``p`` may be a single point (returns bool) or an (N, 2) array.
    """
    pts = np.asarray(p, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    out = np.zeros(len(pts), dtype=bool)
    x0, y0, x1, y1 = region.bbox
    cand = np.flatnonzero((pts[:, 0] >= x0) & (pts[:, 0] <= x1)
                          & (pts[:, 1] >= y0) & (pts[:, 1] <= y1))
    step = max(1, _CHUNK // max(1, len(region.edges)))
    for s in range(0, len(cand), step):
        idx = cand[s:s + step]
        out[idx] = _contains_block(region.edges, pts[idx, 0], pts[idx, 1])
    return bool(out[0]) if single else out


def sample_uniform(region: Region, stream: Stream, ids=None, *,
                   max_attempts: int = 10_000) -> np.ndarray:
    """Uniform points inside ``region`` by bbox rejection, one per id.

    Attempt ``k`` for id ``i`` uses draws ``2k`` and ``2k+1`` of ``stream``,
    so the result for an id is independent of which other ids are sampled.
    Returns shape (2,) when ``ids`` is None, else (len(ids), 2).
    """
    single = ids is None
    ids = np.atleast_1d(np.asarray(0 if single else ids, dtype=np.int64))
    x0, y0, x1, y1 = region.bbox
    out = np.empty((len(ids), 2))
    todo = np.arange(len(ids))
    for k in range(max_attempts):
        if len(todo) == 0:
            break
        sub = ids[todo]
        cand = np.column_stack([x0 + (x1 - x0) * stream.uniform(sub, 2 * k),
                                y0 + (y1 - y0) * stream.uniform(sub, 2 * k + 1)])
        ok = contains(region, cand)
        out[todo[ok]] = cand[ok]
        todo = todo[~ok]
    if len(todo):
        raise GeometryError(f"region {region.name!r}: rejection sampling gave up "
                            f"after {max_attempts} attempts")
    return out[0] if single else out


class RegionIndex:
    """Uniform-grid point location over a set of regions.

    Cells crossed by no region edge are resolved once at build time; only
    points falling in edge-crossed cells need exact polygon tests.
    ``locate`` returns the lowest-indexed containing region, or -1.
    """

    def __init__(self, regions: Sequence[Region], cell_km: float = 10.0):
        if not regions:
            raise GeometryError("empty region set")
        self.regions = list(regions)
        self.cell_km = float(cell_km)
        boxes = np.array([r.bbox for r in self.regions])
        self.x0, self.y0 = boxes[:, 0].min(), boxes[:, 1].min()
        self.nx = int(np.floor((boxes[:, 2].max() - self.x0) / self.cell_km)) + 1
        self.ny = int(np.floor((boxes[:, 3].max() - self.y0) / self.cell_km)) + 1

        touched = np.zeros((self.nx, self.ny), dtype=bool)
        for r in self.regions:
            e = r.edges
            cx0, cy0 = self._cell(np.minimum(e[:, 0], e[:, 2]), np.minimum(e[:, 1], e[:, 3]))
            cx1, cy1 = self._cell(np.maximum(e[:, 0], e[:, 2]), np.maximum(e[:, 1], e[:, 3]))
            for a, b, c, d in zip(cx0, cy0, cx1, cy1):
                touched[a:c + 1, b:d + 1] = True
        bx0, by0 = self._cell(boxes[:, 0], boxes[:, 1])
        bx1, by1 = self._cell(boxes[:, 2], boxes[:, 3])
        self.owner = np.full((self.nx, self.ny), -1, dtype=np.int32)
        # Candidates for edge-crossed cells: every region whose bbox overlaps.
        self.boundary = np.zeros((self.nx, self.ny, len(self.regions)), dtype=bool)
        for ri in range(len(self.regions)):
            sl = (slice(bx0[ri], bx1[ri] + 1), slice(by0[ri], by1[ri] + 1))
            self.boundary[sl + (ri,)] = touched[sl]
        self.owner[touched] = -2
        clear = ~touched
        gx, gy = np.nonzero(clear)
        centers = np.column_stack([self.x0 + (gx + 0.5) * self.cell_km,
                                   self.y0 + (gy + 0.5) * self.cell_km])
        owner = np.full(len(gx), -1, dtype=np.int32)
        for ri, r in enumerate(self.regions):
            sel = np.flatnonzero((owner == -1) & (gx >= bx0[ri]) & (gx <= bx1[ri])
                                 & (gy >= by0[ri]) & (gy <= by1[ri]))
            hit = contains(r, centers[sel])
            owner[sel[hit]] = ri
        self.owner[gx, gy] = owner

    def _cell(self, x, y):
        cx = np.clip(np.floor((np.asarray(x) - self.x0) / self.cell_km).astype(np.int64), 0, self.nx - 1)
        cy = np.clip(np.floor((np.asarray(y) - self.y0) / self.cell_km).astype(np.int64), 0, self.ny - 1)
        return cx, cy

    def locate(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        n = len(pts)
        out = np.full(n, -1, dtype=np.int32)
        fx = np.floor((pts[:, 0] - self.x0) / self.cell_km)
        fy = np.floor((pts[:, 1] - self.y0) / self.cell_km)
        idx = np.flatnonzero((fx >= 0) & (fx < self.nx) & (fy >= 0) & (fy < self.ny))
        cx = fx[idx].astype(np.int64)
        cy = fy[idx].astype(np.int64)
        own = self.owner[cx, cy]
        out[idx] = np.where(own >= 0, own, -1)
        b = own == -2
        bidx, bcx, bcy = idx[b], cx[b], cy[b]
        pending = np.ones(len(bidx), dtype=bool)
        for ri, r in enumerate(self.regions):
            sel = np.flatnonzero(pending & self.boundary[bcx, bcy, ri])
            if len(sel) == 0:
                continue
            hit = contains(r, pts[bidx[sel]])
            out[bidx[sel[hit]]] = ri
            pending[sel[hit]] = False
        return out

    def inside(self, points) -> np.ndarray:
        return self.locate(points) >= 0


def load_regions(path: str | Path) -> dict[str, Region]:
    """Read a GeoJSON FeatureCollection of Polygon/MultiPolygon features."""
    path = Path(path)
    try:
        with open(path) as fh:
            fc = json.load(fh)
    except FileNotFoundError:
        raise GeometryError(f"geometry file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise GeometryError(f"{path}: invalid JSON ({exc})") from None
    if fc.get("type") != "FeatureCollection":
        raise GeometryError(f"{path}: expected a FeatureCollection")
    out: dict[str, Region] = {}
    for feat in fc.get("features", []):
        name = (feat.get("properties") or {}).get("name")
        if not name:
            raise GeometryError(f"{path}: feature without a 'name' property")
        geom = feat.get("geometry") or {}
        if geom.get("type") == "Polygon":
            polys = [geom["coordinates"]]
        elif geom.get("type") == "MultiPolygon":
            polys = geom["coordinates"]
        else:
            raise GeometryError(f"region {name!r}: unsupported geometry {geom.get('type')!r}")
        if name in out:
            raise GeometryError(f"{path}: duplicate region {name!r}")
        out[name] = Region.from_rings(name, polys)
    return out


def total_area(regions: Iterable[Region]) -> float:
    """Sum of per-region areas (equals the union area for a non-overlapping set)."""
    return sum(area(r) for r in regions)
