"""Exact clipped volumes of axis-aligned boxes against balls and boxes.

Domains classify batches of boxes ``[lo, hi]`` (arrays of shape (K, d)) as
outside / inside / straddling and report clipped volumes; the hierarchical
decomposition in :mod:`selfsim.tiling` only talks to this interface.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OUTSIDE, INSIDE, STRADDLE = 0, 1, 2


def _prim(t, R):
    """Antiderivative of sqrt(R^2 - t^2) on [-R, R]."""
    t = np.clip(t, -R, R)
    return 0.5 * (t * np.sqrt(np.maximum(R * R - t * t, 0.0)) + R * R * np.arcsin(t / R))


def _quadrant_area(x, y, R):
    """Area of the disk |p| <= R intersected with {X <= x, Y <= y}."""
    x = np.clip(x, -R, R)
    y = np.clip(y, -R, R)
    w = np.sqrt(np.maximum(R * R - y * y, 0.0))
    upper = y >= 0
    # |t| > w: the vertical chord lies entirely below y (y >= 0) or misses the region (y < 0)
    outer = 2.0 * (_prim(np.minimum(x, -w), R) - _prim(-R, R)) + 2.0 * (_prim(np.maximum(x, w), R) - _prim(w, R))
    m = np.clip(x, -w, w)
    inner = y * (m + w) + _prim(m, R) - _prim(-w, R)
    return np.where(upper, outer, 0.0) + inner


def disk_rect_area(x0, y0, x1, y1, R):
    """Exact area of [x0,x1]x[y0,y1] intersected with the disk of radius R at the origin."""
    if R <= 0:
        return np.zeros(np.broadcast(x0, y0, x1, y1).shape)
    a = _quadrant_area(x1, y1, R) - _quadrant_area(x0, y1, R) - _quadrant_area(x1, y0, R) + _quadrant_area(x0, y0, R)
    # exact answers where the box misses or sits inside the disk; avoids R^2 * eps residue
    nx = np.maximum(np.maximum(x0, -np.asarray(x1)), 0.0)
    ny = np.maximum(np.maximum(y0, -np.asarray(y1)), 0.0)
    fx = np.maximum(np.abs(x0), np.abs(x1))
    fy = np.maximum(np.abs(y0), np.abs(y1))
    a = np.where(nx * nx + ny * ny >= R * R, 0.0, a)
    a = np.where(fx * fx + fy * fy <= R * R, (np.asarray(x1) - x0) * (np.asarray(y1) - y0), a)
    return np.maximum(a, 0.0)


def clipped_cell_volume(lo, hi, center, R):
    """Leb(box ∩ B(center, R)) for a batch of boxes; d = 1 or 2."""
    lo = np.atleast_2d(np.asarray(lo, dtype=float))
    hi = np.atleast_2d(np.asarray(hi, dtype=float))
    c = np.asarray(center, dtype=float)
    d = lo.shape[1]
    if d == 1:
        a = np.maximum(lo[:, 0], c[0] - R)
        b = np.minimum(hi[:, 0], c[0] + R)
        return np.maximum(b - a, 0.0)
    if d == 2:
        lo = lo - c
        hi = hi - c
        return disk_rect_area(lo[:, 0], lo[:, 1], hi[:, 0], hi[:, 1], R)
    raise ValueError("only d = 1, 2 supported")


def box_overlap(lo, hi, blo, bhi):
    """Leb(box ∩ [blo, bhi]) for a batch of boxes."""
    ext = np.minimum(hi, np.asarray(bhi, dtype=float)) - np.maximum(lo, np.asarray(blo, dtype=float))
    return np.prod(np.maximum(ext, 0.0), axis=1)


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def classify(self, lo, hi):
        c = np.asarray(self.center, dtype=float)
        near = np.clip(c, lo, hi) - c
        far = np.maximum(np.abs(lo - c), np.abs(hi - c))
        r2 = self.radius * self.radius
        dmin = np.einsum("ij,ij->i", near, near)
        dmax = np.einsum("ij,ij->i", far, far)
        out = np.full(len(lo), STRADDLE, dtype=np.int8)
        out[dmax <= r2] = INSIDE
        out[dmin >= r2] = OUTSIDE
        return out

    def clipped(self, lo, hi):
        return clipped_cell_volume(lo, hi, self.center, self.radius)

    @property
    def volume(self) -> float:
        d = len(self.center)
        return 2 * self.radius if d == 1 else np.pi * self.radius ** 2

    def bounds(self):
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def classify(self, lo, hi):
        blo = np.asarray(self.lo, dtype=float)
        bhi = np.asarray(self.hi, dtype=float)
        out = np.full(len(lo), STRADDLE, dtype=np.int8)
        out[np.all((lo >= blo) & (hi <= bhi), axis=1)] = INSIDE
        out[np.any((hi <= blo) | (lo >= bhi), axis=1)] = OUTSIDE
        return out

    def clipped(self, lo, hi):
        return box_overlap(lo, hi, self.lo, self.hi)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def bounds(self):
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)

    def scaled(self, lam):
        return Box(tuple(lam * x for x in self.lo), tuple(lam * x for x in self.hi))


@dataclass(frozen=True)
class BoxUnion:
    """Union of pairwise interior-disjoint boxes."""

    boxes: tuple[Box, ...]

    def classify(self, lo, hi):
        cls = np.stack([b.classify(lo, hi) for b in self.boxes])
        out = np.full(len(lo), STRADDLE, dtype=np.int8)
        out[(cls == INSIDE).any(axis=0)] = INSIDE
        out[(cls == OUTSIDE).all(axis=0)] = OUTSIDE
        return out

    def clipped(self, lo, hi):
        return sum(b.clipped(lo, hi) for b in self.boxes)

    @property
    def volume(self) -> float:
        return sum(b.volume for b in self.boxes)

    def bounds(self):
        los = np.array([b.lo for b in self.boxes], dtype=float)
        his = np.array([b.hi for b in self.boxes], dtype=float)
        return los.min(axis=0), his.max(axis=0)

    def scaled(self, lam):
        return BoxUnion(tuple(b.scaled(lam) for b in self.boxes))
