"""Cylindrical functions, ergodic integrals over balls and their deviation expansion."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientData
from .geometry import Ball
from .measures import PhiVector, evaluate_phi, m_phi_minus
from .parallel import pmap
from .substitution import SpectralData, Substitution, tile_frequencies
from .tiling import Decomposition, Window, decompose


@dataclass(eq=False)
class CylindricalFunction:
    """Per-prototile profiles, piecewise constant on a G-refined grid of each tile.

    ``profiles[i]`` has shape ``G * extent`` (``(G*h, G*w)`` in d=2, rows = y).
    """

    sub: Substitution
    profiles: tuple
    name: str = ""

    def __post_init__(self):
        sub = self.sub
        self.profiles = tuple(np.asarray(p, dtype=float) for p in self.profiles)
        if len(self.profiles) != sub.m:
            raise ValueError("one profile per prototile required")
        gs = set()
        for p, proto in zip(self.profiles, sub.prototiles):
            ext = proto.extent[::-1]
            if p.ndim != sub.dimension or any(s % e for s, e in zip(p.shape, ext)):
                raise ValueError(f"profile shape {p.shape} incompatible with extent {proto.extent}")
            gs |= {s // e for s, e in zip(p.shape, ext)}
        if len(gs) != 1:
            raise ValueError("all profiles must share one refinement factor")
        self.G = gs.pop()
        # sub-cell side lengths per type, x first
        self.cell_sizes = np.array([np.asarray(proto.size, dtype=float) / (np.array(proto.extent) * self.G)
                                    for proto in sub.prototiles])
        self.cell_volumes = np.prod(self.cell_sizes, axis=1)
        self.integrals = np.array([p.sum() * v for p, v in zip(self.profiles, self.cell_volumes)])
        self.sq_integrals = np.array([(p * p).sum() * v for p, v in zip(self.profiles, self.cell_volumes)])
        self._offsets = []
        for p, cs in zip(self.profiles, self.cell_sizes):
            idx = np.indices(p.shape).reshape(p.ndim, -1)[::-1].T  # (K, d) x-first
            self._offsets.append((idx * cs, p.reshape(-1)))

    @classmethod
    def constant(cls, sub, values, name=""):
        profs = [np.full(tuple(p.extent[::-1]), float(v)) for p, v in zip(sub.prototiles, values)]
        return cls(sub, tuple(profs), name or "const(" + ",".join(f"{float(v):g}" for v in values) + ")")

    @classmethod
    def checker(cls, sub, values, amplitude=0.5, name=""):
        """Constants plus a zero-integral +-amplitude checkerboard on a G=2 grid."""
        profs = []
        for p, v in zip(sub.prototiles, values):
            shape = tuple(2 * e for e in p.extent[::-1])
            sign = (-1.0) ** np.indices(shape).sum(axis=0)
            profs.append(float(v) + amplitude * sign)
        return cls(sub, tuple(profs), name or "checker(" + ",".join(f"{float(v):g}" for v in values) + ")")

    def subcells(self, types, anchors):
        """Sub-cell boxes and values for a batch of tiles: (lo, hi, values)."""
        types = np.asarray(types)
        anchors = np.asarray(anchors, dtype=float)
        los, his, vals = [], [], []
        for j in range(self.sub.m):
            sel = types == j
            if not sel.any():
                continue
            off, val = self._offsets[j]
            lo = (anchors[sel][:, None, :] + off[None]).reshape(-1, self.sub.dimension)
            los.append(lo)
            his.append(lo + self.cell_sizes[j])
            vals.append(np.broadcast_to(val, (int(sel.sum()), len(val))).reshape(-1))
        if not los:
            d = self.sub.dimension
            return np.zeros((0, d)), np.zeros((0, d)), np.zeros(0)
        return np.concatenate(los), np.concatenate(his), np.concatenate(vals)

    def code_table(self):
        """Sub-cell values per raster code: shape (codes, G, G) for 2d lattice windows."""
        from .tiling import cell_catalog
        catalog, _ = cell_catalog(self.sub)
        G = self.G
        out = np.empty((len(catalog), G, G))
        for c, (j, dx, dy) in enumerate(catalog):
            out[c] = self.profiles[j][dy * G:(dy + 1) * G, dx * G:(dx + 1) * G]
        return out

    def field(self, codes) -> np.ndarray:
        """Dense sub-cell value array (rows = y) for a block of raster codes."""
        tab = self.code_table()
        G = self.G
        blocks = tab[codes]  # (H, W, G, G)
        H, W = codes.shape
        return blocks.transpose(0, 2, 1, 3).reshape(H * G, W * G)


def default_function(sub: Substitution, sd: SpectralData, checker: bool = False) -> CylindricalFunction:
    """Zero-mean profile proportional to l2 / volume, scaled to max-abs 1.

    On the two-type builtins this is (+1, -1).
    """
    if sub.m < 2:
        raise ValueError("a zero-mean cylindrical function needs at least two prototiles")
    v = np.asarray(sd.left[1]).real / sub.volumes
    v = v / np.abs(v).max()
    v = np.where(np.abs(v - np.round(v)) < 1e-12, np.round(v), v)
    maker = CylindricalFunction.checker if checker else CylindricalFunction.constant
    return maker(sub, v)


def integral_mu(f: CylindricalFunction, sd: SpectralData | None = None) -> float:
    from .substitution import spectral_data
    sd = sd or spectral_data(f.sub)
    return float(np.dot(tile_frequencies(sd, f.sub), f.integrals))


def supertile_table(f: CylindricalFunction, kmax: int) -> np.ndarray:
    """table[k, j] = integral of f over an order-k supertile of type j."""
    St = f.sub.incidence.T.astype(float)
    out = np.empty((kmax + 1, f.sub.m))
    out[0] = f.integrals
    for k in range(1, kmax + 1):
        out[k] = St @ out[k - 1]
    return out


def supertile_integral(f: CylindricalFunction, k: int, j: int) -> float:
    return float(supertile_table(f, k)[k, j])


def clipped_profile_sum(f: CylindricalFunction, domain, types, anchors) -> float:
    lo, hi, val = f.subcells(types, anchors)
    if len(val) == 0:
        return 0.0
    return float(np.sum(val * domain.clipped(lo, hi)))


def integrate_decomposition(f: CylindricalFunction, dec: Decomposition, table=None) -> float:
    table = supertile_table(f, dec.levels) if table is None else table
    pieces = float(np.sum(table[dec.piece_levels, dec.piece_types])) if len(dec.piece_types) else 0.0
    return pieces + clipped_profile_sum(f, dec.domain, dec.boundary_types, dec.boundary_anchors)


def integrate_naive(f: CylindricalFunction, window: Window, domain) -> float:
    """Sum over every tile of the brute-force expanded window; no hierarchy."""
    tiles = window.tiles()
    lo = tiles.anchors.astype(float)
    hi = lo + window.sub.sizes[tiles.types]
    blo, bhi = domain.bounds()
    near = np.all((hi > blo) & (lo < bhi), axis=1)
    return clipped_profile_sum(f, domain, tiles.types[near], tiles.anchors[near])


def _ball(window, rho, center):
    c = window.origin if center is None else tuple(float(x) for x in np.atleast_1d(center))
    window.require_margin(rho, c)
    return Ball(c, float(rho))


def ergodic_integral(f: CylindricalFunction, window: Window, rho: float, center=None,
                     method: str = "hierarchical") -> float:
    """S(f, T, rho): integral of f along the translation orbit over the ball B(origin, rho)."""
    if rho <= 0:
        return 0.0
    return integrate_domain(f, window, _ball(window, rho, center), method)


def integrate_domain(f, window, domain, method="hierarchical") -> float:
    if method == "naive":
        return integrate_naive(f, window, domain)
    if method != "hierarchical":
        raise ValueError(f"unknown method {method!r}")
    return integrate_decomposition(f, decompose(window, domain))


def expanding_terms(sd: SpectralData, f: CylindricalFunction):
    """[(PhiVector l_n, m_phi_minus(f, r_n)) for n = 2..expanding_dims]."""
    out = []
    for n in range(1, sd.expanding_dims):
        out.append((PhiVector.from_eigen(sd, n), m_phi_minus(f, np.asarray(sd.right[n]).real)))
    return out


def residual_from(dec: Decomposition, f, sd: SpectralData, mean: float, S_value: float, terms=None) -> float:
    terms = expanding_terms(sd, f) if terms is None else terms
    value = S_value - dec.domain.volume * mean
    for v, mm in terms:
        value -= float(evaluate_phi(v, dec, sd.incidence)) * mm
    return value


def deviation_residual(f: CylindricalFunction, window: Window, rho: float, sd: SpectralData,
                       center=None, domain=None, method: str = "hierarchical") -> float:
    """S(f) - Leb * mean(f) - sum_{n>=2, expanding} Phi+_{l_n} * m(f, r_n) over a ball (or ``domain``)."""
    if domain is None:
        if rho <= 0:
            return 0.0
        domain = _ball(window, rho, center)
    dec = decompose(window, domain)
    S_value = integrate_decomposition(f, dec) if method == "hierarchical" else integrate_naive(f, window, domain)
    return residual_from(dec, f, sd, integral_mu(f, sd), S_value)


def predicted_supertile_residual(f, sd: SpectralData, k: int, j: int) -> float:
    """Contribution of the non-expanding eigendirections on an order-k type-j supertile."""
    total = 0.0
    for n in range(sd.expanding_dims, len(sd.eigenvalues)):
        th = sd.eigenvalues[n]
        total += (th ** k * sd.left[n][j] * m_phi_minus(f, sd.right[n])).real
    return float(total)


# -- experiment series -------------------------------------------------------

@dataclass
class SeriesRow:
    N: int
    R: float
    value: float
    rms: float
    anchors: int
    stderr: float = float("nan")


@dataclass
class ExperimentSeries:
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def sort(self):
        self.rows.sort(key=lambda r: r.N)
        return self

    def to_csv(self, columns=("example", "v_label", "N", "R", "value", "rms", "anchors"), aliases=None) -> str:
        """CSV text; ``aliases`` maps an output header to a row/meta field (e.g. G -> value)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in self.rows:
            rec = {**self.meta, **r.__dict__}
            for out, src in (aliases or {}).items():
                rec[out] = rec.get(src, "")
            w.writerow([_fmt(rec.get(c, "")) for c in columns])
        return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return x


@dataclass
class Fit:
    slope: float
    intercept: float
    stderr: float
    used: int


def fit_exponent(series: ExperimentSeries, drop_head: int = 2, column: str = "rms") -> Fit:
    """OLS of log(column) against log R after dropping the first rows and near-zero amplitudes."""
    rows = sorted(series.rows, key=lambda r: r.N)[drop_head:]
    rows = [r for r in rows if getattr(r, column) >= 1e-12]
    if len(rows) < 4:
        raise InsufficientData(f"need >= 4 usable rows, have {len(rows)}")
    x = np.log([r.R for r in rows])
    y = np.log([getattr(r, column) for r in rows])
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    dof = len(x) - 2
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else 0.0
    return Fit(slope, intercept, stderr, len(rows))


def radii_for(sub: Substitution, levels, R0: float = 1.0):
    return [(N, R0 * float(sub.expansion) ** N) for N in levels]


def deviation_series(f: CylindricalFunction, window: Window, sd: SpectralData, levels, anchors: int,
                     seed: int = 0, threads: int = 1, R0: float = 1.0):
    """RMS over random anchors of S(f, ., R) and of its deviation residual along R = lam^N R0.

    Returns (S series, residual series); all radii share one anchor sample.
    """
    radii = radii_for(window.sub, levels, R0)
    Rmax = max(R for _, R in radii)
    pts = window.sample_anchors(anchors, Rmax, np.random.default_rng(seed))
    mean = integral_mu(f, sd)
    table = supertile_table(f, window.levels)
    terms = expanding_terms(sd, f)

    def one(p):
        out = []
        for _, R in radii:
            dec = decompose(window, Ball(tuple(p), R))
            s = integrate_decomposition(f, dec, table)
            out.append((s, residual_from(dec, f, sd, mean, s, terms)))
        return out

    vals = np.array(pmap(one, list(pts), threads))  # (anchors, radii, 2)
    meta = {"example": window.sub.name, "function": f.name, "seed": seed}
    S_series = ExperimentSeries([], {**meta, "v_label": "S", "quantity": "S"})
    r_series = ExperimentSeries([], {**meta, "v_label": "residual", "quantity": "residual"})
    for i, (N, R) in enumerate(radii):
        for series, col in ((S_series, 0), (r_series, 1)):
            x = vals[:, i, col]
            series.rows.append(SeriesRow(N, R, float(np.mean(x)), float(np.sqrt(np.mean(x * x))), len(x),
                                         float(np.std(x * x) / np.sqrt(len(x)))))
    return S_series, r_series
