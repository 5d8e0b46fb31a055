"""Closed planar regions with vectorized point-to-region distances.

Used to check that estimated limit sets stay inside the sets the theory
predicts (a line segment, a convex polygon, a polyline, a union of pieces).
"""
from __future__ import annotations

import numpy as np


def _as_xy(points) -> np.ndarray:
    arr = np.asarray([[float(p[0]), float(p[1])] for p in points]) if not isinstance(
        points, np.ndarray) else points.astype(float)
    return arr.reshape(-1, 2)


def segment_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each point to each segment; shape (n_points, n_segments)."""
    d = b - a
    n2 = np.einsum("ij,ij->i", d, d)
    n2 = np.where(n2 == 0, 1.0, n2)
    rel = points[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("pij,ij->pi", rel, d) / n2, 0.0, 1.0)
    proj = a[None, :, :] + t[..., None] * d[None, :, :]
    return np.linalg.norm(points[:, None, :] - proj, axis=2)


class Region:
    def distance(self, points) -> np.ndarray:
        raise NotImplementedError

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        return self.distance(points) <= tol


class PolylineRegion(Region):
    """A polyline (a single point or segment is allowed)."""

    def __init__(self, vertices):
        self.vertices = _as_xy(vertices)

    def distance(self, points) -> np.ndarray:
        pts = _as_xy(points)
        v = self.vertices
        if len(v) == 1:
            return np.linalg.norm(pts - v[0], axis=1)
        out = np.empty(len(pts))
        chunk = max(1, 2_000_000 // max(1, len(v)))
        for i in range(0, len(pts), chunk):
            out[i:i + chunk] = segment_distances(pts[i:i + chunk], v[:-1], v[1:]).min(axis=1)
        return out


class ConvexRegion(Region):
    """Closed convex polygon given by its vertices (any order is fine)."""

    def __init__(self, vertices):
        from .geometry import convex_hull
        hull = convex_hull([(float(p[0]), float(p[1])) for p in vertices])
        self.vertices = _as_xy(hull)

    def distance(self, points) -> np.ndarray:
        pts = _as_xy(points)
        v = self.vertices
        if len(v) < 3:
            return PolylineRegion(v).distance(pts)
        a, b = v, np.roll(v, -1, axis=0)
        d = b - a
        crosses = d[None, :, 0] * (pts[:, None, 1] - a[None, :, 1]) - d[None, :, 1] * (
            pts[:, None, 0] - a[None, :, 0])
        inside = np.all(crosses >= -1e-12, axis=1)
        edge = segment_distances(pts, a, b).min(axis=1)
        return np.where(inside, 0.0, edge)


class UnionRegion(Region):
    def __init__(self, parts):
        self.parts = list(parts)

    def distance(self, points) -> np.ndarray:
        pts = _as_xy(points)
        return np.min([p.distance(pts) for p in self.parts], axis=0)


class HalfPlaneRegion(Region):
    """{L <= 0} (or {L >= 0}) for an affine map given by coefficients."""

    def __init__(self, a, b, c, upper: bool = False):
        self.coef = np.array([float(a), float(b), float(c)])
        self.upper = upper

    def distance(self, points) -> np.ndarray:
        pts = _as_xy(points)
        a, b, c = self.coef
        val = (a * pts[:, 0] + b * pts[:, 1] + c) / np.hypot(a, b)
        if self.upper:
            val = -val
        return np.maximum(val, 0.0)


class IntersectionRegion(Region):
    """Intersection of half-planes; distance is a lower bound (max of parts)."""

    def __init__(self, parts):
        self.parts = list(parts)

    def distance(self, points) -> np.ndarray:
        pts = _as_xy(points)
        return np.max([p.distance(pts) for p in self.parts], axis=0)
