"""Finite windows of substitution tilings and their supertile hierarchy.

A window is the patch zeta^n(T_root) with its lower-left corner at 0 and a
chosen interior point ``origin`` playing the role of 0 in R^d.  Coordinates
are absolute (window) coordinates; on lattice substitutions they are exact
integers.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import MarginError
from .geometry import INSIDE, STRADDLE, Ball
from .substitution import Substitution

COORD_BOUND = 2 ** 53


@dataclass
class Patch:
    types: np.ndarray
    anchors: np.ndarray  # (K, d) lower-left corners

    def __len__(self):
        return len(self.types)


def _children(sub: Substitution, types, anchors, scale):
    """All children of the given (level-k) supertiles; ``scale`` = expansion^(k-1)."""
    out_t, out_a = [], []
    for j in range(sub.m):
        sel = types == j
        if not sel.any():
            continue
        A = anchors[sel]
        ct = sub.child_types[j]
        co = sub.child_offsets[j] * scale
        out_a.append((A[:, None, :] + co[None, :, :]).reshape(-1, sub.dimension))
        out_t.append(np.broadcast_to(ct, (len(A), len(ct))).reshape(-1))
    if not out_t:
        return np.zeros(0, dtype=np.int64), anchors[:0]
    return np.concatenate(out_t), np.concatenate(out_a)


def expand(sub: Substitution, patch: Patch, steps: int, bound: float = COORD_BOUND) -> Patch:
    """Apply the substitution ``steps`` times: T + x -> zeta(T) + expansion * x."""
    types = np.asarray(patch.types, dtype=np.int64)
    dt = np.int64 if sub.is_lattice else float
    anchors = np.asarray(patch.anchors, dtype=dt).reshape(len(types), sub.dimension)
    for _ in range(steps):
        if len(types) == 0:
            break
        reach = (np.abs(anchors).max(initial=0) + sub.sizes.max()) * sub.expansion
        if reach > bound:
            raise OverflowError(f"lattice coordinates would exceed {bound:g}")
        types, anchors = _children(sub, types, anchors * sub.expansion, 1)
    return Patch(types, anchors)


@lru_cache(maxsize=6)
def _tiles_cached(sub: Substitution, root: int, n: int) -> Patch:
    p = expand(sub, Patch(np.array([root]), np.zeros((1, sub.dimension))), n)
    if sub.dimension == 1:
        order = np.argsort(p.anchors[:, 0], kind="stable")
        p = Patch(p.types[order], p.anchors[order])
    p.types.setflags(write=False)
    p.anchors.setflags(write=False)
    return p


def cell_catalog(sub: Substitution):
    """Codes for (type, intra-tile cell) pairs of a 2d lattice substitution.

    Returns (catalog, first) where catalog[c] = (type, dx, dy) and
    first[j] is the code of cell (0, 0) of type j.
    """
    catalog, first = [], []
    for j, p in enumerate(sub.prototiles):
        first.append(len(catalog))
        w, h = p.extent
        for dy in range(h):
            for dx in range(w):
                catalog.append((j, dx, dy))
    return np.array(catalog, dtype=np.int64), np.array(first, dtype=np.int64)


@lru_cache(maxsize=3)
def _raster_cached(sub: Substitution, root: int, n: int) -> np.ndarray:
    if sub.dimension != 2 or not sub.is_lattice:
        raise ValueError("rasters exist for 2d lattice substitutions only")
    L = int(sub.expansion)
    catalog, first = cell_catalog(sub)
    if len(catalog) >= 2 ** 16:
        raise ValueError("too many prototile cells for a uint16 raster")
    blocks = []
    for j, p in enumerate(sub.prototiles):
        w, h = p.extent
        blocks.append((first[j] + np.arange(w * h)).reshape(h, w).astype(np.uint16))
    for k in range(1, n + 1):
        scale = L ** (k - 1)
        new = []
        for j, p in enumerate(sub.prototiles):
            if k == n and j != root:
                new.append(None)
                continue
            w, h = p.extent
            B = np.empty((h * L ** k, w * L ** k), dtype=np.uint16)
            for c in sub.rules[j]:
                x, y = c.offset
                b = blocks[c.type]
                B[y * scale:y * scale + b.shape[0], x * scale:x * scale + b.shape[1]] = b
            new.append(B)
        blocks = new
    out = blocks[root]
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Address:
    """Path of child indices from the root supertile down (deepest last)."""

    root_type: int
    digits: tuple[int, ...]

    @property
    def level(self) -> int:
        return len(self.digits)


def decode_address(sub: Substitution, address: Address):
    """(type, anchor) of the tile reached by the digits, anchor relative to the root corner."""
    j = address.root_type
    n = address.level
    anchor = np.zeros(sub.dimension, dtype=np.int64 if sub.is_lattice else float)
    for t, k in enumerate(address.digits):
        c = sub.rules[j][k]
        anchor = anchor + np.asarray(c.offset) * sub.expansion ** (n - 1 - t)
        j = c.type
    return j, tuple(anchor.tolist())


@dataclass(frozen=True)
class Window:
    sub: Substitution
    root_type: int
    levels: int
    origin: tuple

    @property
    def d(self) -> int:
        return self.sub.dimension

    def scale(self, k: int):
        return self.sub.expansion ** k

    @property
    def extent(self) -> np.ndarray:
        """Upper corner of the window support (lower corner is 0)."""
        return self.sub.sizes[self.root_type] * self.scale(self.levels)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(x) for x in np.round(self.extent))

    def at(self, origin) -> "Window":
        """The same patch seen from another origin (the translation action)."""
        return Window(self.sub, self.root_type, self.levels, tuple(float(x) for x in np.atleast_1d(origin)))

    def margin_of(self, point=None) -> float:
        p = np.asarray(self.origin if point is None else point, dtype=float)
        return float(min(p.min(), (self.extent - p).min()))

    def margin(self, R: float, point=None) -> bool:
        return self.margin_of(point) >= R

    def require_margin(self, R: float, point=None):
        if not self.margin(R, point):
            raise MarginError(f"radius {R:g} exceeds window margin {self.margin_of(point):g}")

    def tiles(self) -> Patch:
        """All level-0 tiles of the window (brute-force expansion, cached)."""
        return _tiles_cached(self.sub, self.root_type, self.levels)

    def raster(self) -> np.ndarray:
        """uint16 cell codes [row=y, col=x] for 2d lattice windows (see cell_catalog)."""
        return _raster_cached(self.sub, self.root_type, self.levels)

    def sample_anchors(self, count: int, margin: float, rng) -> np.ndarray:
        lo = margin
        hi = self.extent - margin
        if np.any(hi <= lo):
            raise MarginError(f"window {self.extent} too small for margin {margin:g}")
        return lo + rng.random((count, self.d)) * (hi - lo)


def make_window(sub: Substitution, root_type: int, n: int, anchor_mode="center") -> Window:
    if n < 0:
        raise ValueError("n must be >= 0")
    if isinstance(anchor_mode, str):
        if anchor_mode != "center":
            raise ValueError(f"unknown anchor mode {anchor_mode!r}")
        origin = sub.sizes[root_type] * sub.expansion ** n / 2
    else:
        digits = tuple(int(x) for x in anchor_mode)
        if len(digits) != n:
            raise ValueError("cell address must have one digit per level")
        j, anchor = decode_address(sub, Address(root_type, digits))
        origin = np.asarray(anchor, dtype=float) + sub.sizes[j] / 2
    return Window(sub, root_type, n, tuple(float(x) for x in origin))


# -- hierarchy descent ------------------------------------------------------

def _child_containing(sub, j, anchor, scale, cell, lattice):
    for idx, c in enumerate(sub.rules[j]):
        lo = [a + o * scale for a, o in zip(anchor, c.offset)]
        size = sub.prototiles[c.type].size
        if lattice:
            ok = all(l <= x < l + s * scale for l, x, s in zip(lo, cell, size))
        else:
            ok = all(l <= x < l + s * scale for l, x, s in zip(lo, cell, size))
        if ok:
            return idx, c.type, tuple(lo)
    raise AssertionError("rule does not cover the parent support")


def _descend(sub, root, n, k, cell, cached_from):
    """Level-k supertile containing ``cell``: (type, anchor, digits)."""
    if k >= cached_from and sub.is_lattice:
        L = sub.expansion ** k
        return _descend_cached(sub, root, n, k, tuple(x // L for x in cell), cached_from)
    if k == n:
        return root, (0,) * sub.dimension, ()
    j, anchor, digits = _descend(sub, root, n, k + 1, cell, cached_from)
    idx, t, lo = _child_containing(sub, j, anchor, sub.expansion ** k, cell, sub.is_lattice)
    return t, lo, digits + (idx,)


@lru_cache(maxsize=1 << 15)
def _descend_cached(sub, root, n, k, grid, cached_from):
    # level-k supertiles are unions of L^k-grid cells, so the grid index determines them
    L = sub.expansion ** k
    cell = tuple(g * L for g in grid)
    if k == n:
        return root, (0,) * sub.dimension, ()
    j, anchor, digits = _descend(sub, root, n, k + 1, cell, cached_from)
    idx, t, lo = _child_containing(sub, j, anchor, L, cell, True)
    return t, lo, digits + (idx,)


def _check_cell(window: Window, cell):
    cell = tuple(int(c) for c in cell) if window.sub.is_lattice else tuple(float(c) for c in cell)
    if len(cell) != window.d or any(c < 0 or c >= e for c, e in zip(cell, window.extent)):
        raise MarginError(f"cell {cell} outside window of extent {tuple(window.extent)}")
    return cell


def supertile_at(window: Window, cell, k: int):
    """Order-k supertile containing ``cell``: (type, anchor, Address from the root)."""
    if not 0 <= k <= window.levels:
        raise ValueError(f"level {k} outside 0..{window.levels}")
    cell = _check_cell(window, cell)
    half = (window.levels + 1) // 2
    t, anchor, digits = _descend(window.sub, window.root_type, window.levels, k, cell, max(half, k))
    return t, anchor, Address(window.root_type, digits)


def type_at(window: Window, cell):
    """(type, intra-tile offset) of the tile containing ``cell``."""
    t, anchor, _ = supertile_at(window, cell, 0)
    cell = _check_cell(window, cell)
    return t, tuple(c - a for c, a in zip(cell, anchor))


def address_of(window: Window, cell) -> Address:
    return supertile_at(window, cell, 0)[2]


# -- domain decomposition ---------------------------------------------------

@dataclass
class Decomposition:
    """Maximal supertiles inside a domain plus clipped level-0 boundary tiles."""

    domain: object
    levels: int
    piece_levels: np.ndarray
    piece_types: np.ndarray
    piece_anchors: np.ndarray
    boundary_types: np.ndarray
    boundary_anchors: np.ndarray
    boundary_fractions: np.ndarray

    @property
    def radius(self):
        return getattr(self.domain, "radius", None)

    def piece_counts(self, m: int) -> np.ndarray:
        """counts[k, j] = number of order-k type-j pieces."""
        counts = np.zeros((self.levels + 1, m), dtype=np.int64)
        np.add.at(counts, (self.piece_levels, self.piece_types), 1)
        return counts

    def total_volume(self, sub: Substitution) -> float:
        vol = sub.volumes
        lam = float(sub.expansion)
        d = sub.dimension
        pieces = np.sum(vol[self.piece_types] * lam ** (d * self.piece_levels.astype(float)))
        return float(pieces + np.sum(vol[self.boundary_types] * self.boundary_fractions))


BallDecomposition = Decomposition


def decompose(window: Window, domain) -> Decomposition:
    """Top-down split of the window hierarchy against ``domain``."""
    sub = window.sub
    lo_b, hi_b = domain.bounds()
    if np.any(lo_b < -1e-9) or np.any(hi_b > window.extent + 1e-9):
        raise MarginError(f"domain {lo_b}..{hi_b} leaves window of extent {tuple(window.extent)}")
    d = sub.dimension
    types = np.array([window.root_type], dtype=np.int64)
    anchors = np.zeros((1, d), dtype=np.int64 if sub.is_lattice else float)
    pl, pt, pa = [], [], []
    bt = np.zeros(0, dtype=np.int64)
    ba = np.zeros((0, d))
    bf = np.zeros(0)
    for k in range(window.levels, -1, -1):
        if len(types) == 0:
            break
        scale = sub.expansion ** k
        lo = anchors.astype(float)
        hi = lo + sub.sizes[types] * scale
        cls = domain.classify(lo, hi)
        ins = cls == INSIDE
        if ins.any():
            pl.append(np.full(int(ins.sum()), k, dtype=np.int64))
            pt.append(types[ins])
            pa.append(anchors[ins])
        st = cls == STRADDLE
        if k == 0:
            if st.any():
                vol = domain.clipped(lo[st], hi[st])
                frac = vol / sub.volumes[types[st]]
                keep = frac > 0
                bt, ba, bf = types[st][keep], anchors[st][keep], frac[keep]
            break
        types, anchors = _children(sub, types[st], anchors[st], sub.expansion ** (k - 1))
    cat = lambda xs, shape, dt: np.concatenate(xs) if xs else np.zeros(shape, dtype=dt)
    return Decomposition(domain, window.levels,
                         cat(pl, (0,), np.int64), cat(pt, (0,), np.int64), cat(pa, (0, d), anchors.dtype),
                         bt, ba, bf)


def ball_decomposition(window: Window, R: float, center=None) -> Decomposition:
    c = window.origin if center is None else tuple(np.atleast_1d(center))
    window.require_margin(R, c)
    return decompose(window, Ball(tuple(float(x) for x in c), float(R)))


def naive_cells(window: Window, domain):
    """Brute-force classification of every level-0 tile: (types, anchors, clipped fractions)."""
    tiles = window.tiles()
    lo = tiles.anchors.astype(float)
    hi = lo + window.sub.sizes[tiles.types]
    blo, bhi = domain.bounds()
    near = np.all((hi > blo) & (lo < bhi), axis=1)
    t, a, lo, hi = tiles.types[near], tiles.anchors[near], lo[near], hi[near]
    frac = domain.clipped(lo, hi) / window.sub.volumes[t]
    keep = frac > 0
    return t[keep], a[keep], frac[keep]


def random_supertile_union(window: Window, rng, max_parts: int = 4, min_level: int = 0):
    """Random pairwise-disjoint supertiles of the window as (level, type, anchor) triples."""
    sub = window.sub
    parts = []
    boxes = []
    for _ in range(int(rng.integers(1, max_parts + 1))):
        k = int(rng.integers(min_level, window.levels))
        if sub.is_lattice:
            cell = tuple(int(rng.integers(0, int(e))) for e in window.extent)
        else:
            cell = tuple(float(rng.uniform(0, e)) for e in window.extent)
        t, anchor, _ = supertile_at(window, cell, k)
        lo = np.asarray(anchor, dtype=float)
        hi = lo + sub.sizes[t] * sub.expansion ** k
        if any(np.all((hi > blo) & (lo < bhi)) for blo, bhi in boxes):
            continue
        boxes.append((lo, hi))
        parts.append((k, t, anchor))
    return parts
