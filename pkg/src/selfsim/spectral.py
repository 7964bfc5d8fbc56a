"""Gaussian-smoothed spectral masses near zero and their scaling law.

The kernel is the self-dual Gaussian exp(-pi |x|^2): smoothing the orbit of
f at spatial scale R probes sigma_f on the ball of radius ~1/R, and

    G(R) = R^(-2d) * mean over anchors |V_R|^2,
    V_R  = integral f(T - x) exp(-pi |x - anchor|^2 / R^2) dx

estimates integral exp(-2 pi R^2 |w|^2) d sigma_f(w).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erf, erfc

from .errors import HypothesisViolated, InsufficientData
from .ergodic import CylindricalFunction, ExperimentSeries, Fit, SeriesRow, fit_exponent, integral_mu
from .measures import m_phi_minus
from .parallel import pmap
from .substitution import SpectralData
from .tiling import Window

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class KernelSpec:
    shape: str = "gaussian"
    tau: float = 6.0
    dilation: float = 1.0

    def __post_init__(self):
        if self.shape != "gaussian":
            raise ValueError(f"unsupported kernel {self.shape!r}")

    def dilated(self, c: float) -> "KernelSpec":
        return replace(self, dilation=self.dilation * c)

    def scale(self, R: float) -> float:
        return self.dilation * R

    def reach(self, R: float) -> float:
        return self.tau * self.scale(R)

    def tail_mass(self, d: int) -> float:
        """Mass of the normalized kernel outside the truncation box (union bound)."""
        return d * float(erfc(self.tau * SQRT_PI))


def gauss_cell_factor(lo, hi, a, s):
    """integral_lo^hi exp(-pi (t - a)^2 / s^2) dt, accurate in both tails."""
    z0 = SQRT_PI * (np.asarray(lo, dtype=float) - a) / s
    z1 = SQRT_PI * (np.asarray(hi, dtype=float) - a) / s
    pos = z0 >= 0
    neg = z1 <= 0
    out = erf(z1) - erf(z0)
    out = np.where(pos, erfc(z0) - erfc(z1), out)
    out = np.where(neg, erfc(-z1) - erfc(-z0), out)
    return 0.5 * s * out


def _diameter(sub) -> float:
    return float(np.sqrt((sub.sizes ** 2).sum(axis=1)).max())


def required_margin(window: Window, R: float, kernel: KernelSpec) -> float:
    return kernel.reach(R) + _diameter(window.sub)


def smoothed_ball_amplitude(f: CylindricalFunction, window: Window, anchor, R: float,
                            kernel: KernelSpec = KernelSpec()) -> float:
    """V_R at ``anchor``: sum over sub-cells of value times the exact Gaussian cell mass."""
    a = np.atleast_1d(np.asarray(anchor, dtype=float))
    window.require_margin(required_margin(window, R, kernel), a)
    s = kernel.scale(R)
    half = kernel.reach(R)
    if window.d == 1:
        return _amplitude_1d(f, window, a[0], s, half)
    return _amplitude_2d(f, window, a, s, half)


def _tiles_near_1d(window: Window, lo: float, hi: float):
    tiles = window.tiles()
    starts = tiles.anchors[:, 0].astype(float)
    maxlen = float(window.sub.sizes.max())
    i0 = int(np.searchsorted(starts, lo - maxlen, side="left"))
    i1 = int(np.searchsorted(starts, hi, side="right"))
    return tiles.types[i0:i1], tiles.anchors[i0:i1]


def _amplitude_1d(f, window, a, s, half):
    t, anc = _tiles_near_1d(window, a - half, a + half)
    lo, hi, val = f.subcells(t, anc)
    return float(np.sum(val * gauss_cell_factor(lo[:, 0], hi[:, 0], a, s)))


def _amplitude_2d(f, window, a, s, half):
    codes = window.raster()
    x0 = max(int(math.floor(a[0] - half)), 0)
    y0 = max(int(math.floor(a[1] - half)), 0)
    x1 = min(int(math.ceil(a[0] + half)), codes.shape[1])
    y1 = min(int(math.ceil(a[1] + half)), codes.shape[0])
    F = f.field(codes[y0:y1, x0:x1])
    G = f.G
    ex = x0 + np.arange((x1 - x0) * G + 1) / G
    ey = y0 + np.arange((y1 - y0) * G + 1) / G
    gx = gauss_cell_factor(ex[:-1], ex[1:], a[0], s)
    gy = gauss_cell_factor(ey[:-1], ey[1:], a[1], s)
    return float(gy @ (F @ gx))


@dataclass
class SpectralEstimate:
    G: float
    stderr: float
    R: float
    amplitudes: np.ndarray = field(repr=False)


def _normalized(amps: np.ndarray, s: float, d: int):
    x = amps * amps / s ** (2 * d)
    return x


def spectral_form(f: CylindricalFunction, window: Window, R: float, kernel: KernelSpec = KernelSpec(),
                  anchors=64, seed: int = 0, threads: int = 1) -> SpectralEstimate:
    """G(R) = (kernel scale)^(-2d) * mean_anchor |V_R|^2 with its standard error."""
    pts = _anchor_points(window, [R], kernel, anchors, seed)
    amps = np.array(pmap(lambda p: smoothed_ball_amplitude(f, window, p, R, kernel), list(pts), threads))
    x = _normalized(amps, kernel.scale(R), window.d)
    return SpectralEstimate(float(np.mean(x)), float(np.std(x, ddof=1) / np.sqrt(len(x))), R, amps)


def _anchor_points(window, radii, kernel, anchors, seed):
    if np.ndim(anchors) == 0:
        count = int(anchors)
        if count < 16:
            raise InsufficientData(f"need >= 16 anchors, got {count}")
        margin = max(required_margin(window, R, kernel) for R in radii)
        return window.sample_anchors(count, margin, np.random.default_rng(seed))
    pts = np.atleast_2d(np.asarray(anchors, dtype=float))
    if window.d == 1 and pts.shape[0] == 1 and pts.shape[1] != 1:
        pts = pts.T
    if len(pts) < 16:
        raise InsufficientData(f"need >= 16 anchors, got {len(pts)}")
    return pts


def amplitude_matrix(f, window, scales, pts, kernel=KernelSpec(), threads=1) -> np.ndarray:
    """V at every (anchor, scale) pair; shape (anchors, scales)."""
    def one(p):
        return [smoothed_ball_amplitude(f, window, p, R, kernel) for R in scales]
    return np.array(pmap(one, list(pts), threads))


def check_hypothesis(sd: SpectralData, f: CylindricalFunction, allow_violation: bool = False) -> bool:
    if not sd.hypothesis_ok:
        msg = (f"theta2 = {sd.theta2} does not exceed theta1^((d-1)/d) = {sd.threshold:g} "
               "as a real simple eigenvalue; the scaling law does not apply")
        if not allow_violation:
            raise HypothesisViolated(msg)
        warnings.warn(msg, stacklevel=3)
        return False
    scale = max(1.0, float(np.abs(f.integrals).max()))
    if abs(integral_mu(f, sd)) > 1e-9 * scale:
        raise ValueError(f"f must have zero mean, got {integral_mu(f, sd):.3g}")
    if abs(m_phi_minus(f, np.asarray(sd.right[1]).real)) <= 1e-12 * scale:
        raise ValueError("m_phi_minus(f, r2) vanishes; the leading term is absent")
    return True


def expected_slope(sd: SpectralData) -> float | None:
    return None if sd.alpha is None else 2 * sd.alpha - 2 * sd.dimension


@dataclass
class ScalingProfile:
    series: ExperimentSeries
    fit: Fit | None
    expected: float | None
    ratios: list
    hypothesis_ok: bool


def scaling_profile(f: CylindricalFunction, window: Window, sd: SpectralData, levels,
                    kernel: KernelSpec = KernelSpec(), anchors=64, seed: int = 0, threads: int = 1,
                    drop_head: int = 0, allow_violation: bool = False) -> ScalingProfile:
    """G(lam^N) over ``levels`` with a log-log slope fit (expected 2 alpha - 2d).

    ``ratios`` are G(lam^N) / lam^(N (2 alpha - 2d)); their stabilization in N
    is the finite-size witness of the limit profile.
    """
    ok = check_hypothesis(sd, f, allow_violation)
    lam = float(window.sub.expansion)
    levels = list(levels)
    radii = [lam ** N for N in levels]
    pts = _anchor_points(window, radii, kernel, anchors, seed)
    amps = amplitude_matrix(f, window, radii, pts, kernel, threads)
    d = window.d
    series = ExperimentSeries([], {"example": window.sub.name, "function": f.name, "kernel": kernel.shape,
                                   "tau": kernel.tau, "seed": seed, "quantity": "G"})
    for i, (N, R) in enumerate(zip(levels, radii)):
        x = _normalized(amps[:, i], kernel.scale(R), d)
        g = float(np.mean(x))
        se = float(np.std(x, ddof=1) / np.sqrt(len(x)))
        series.rows.append(SeriesRow(N, R, g, math.sqrt(g), len(x), se))
    expected = expected_slope(sd)
    fit = None
    try:
        fit = fit_exponent(series, drop_head, column="value")
    except InsufficientData:
        pass
    ratios = []
    if expected is not None:
        ratios = [r.value / lam ** (r.N * expected) for r in series.rows]
    return ScalingProfile(series, fit, expected, ratios, ok)


@dataclass
class EtaRow:
    a: float
    N: int
    value: float
    stderr: float


def eta_profile(f: CylindricalFunction, window: Window, sd: SpectralData, a_grid, N: int,
                kernel: KernelSpec = KernelSpec(), anchors=64, seed: int = 0, threads: int = 1,
                return_samples: bool = False):
    """Normalized smoothed masses near zero at frequency radius a * lam^(-N).

    value(a, N) = G(lam^N / a) * lam^(N (2d - 2 alpha)); the spatial scale
    lam^N / a shrinks as a grows, so the value is non-decreasing in a.
    """
    check_hypothesis(sd, f)
    lam = float(window.sub.expansion)
    expo = 2 * window.d - 2 * sd.alpha
    scales = [lam ** N / a for a in a_grid]
    pts = _anchor_points(window, scales, kernel, anchors, seed)
    amps = amplitude_matrix(f, window, scales, pts, kernel, threads)
    rows, samples = [], []
    for i, (a, s) in enumerate(zip(a_grid, scales)):
        x = _normalized(amps[:, i], kernel.scale(s), window.d) * lam ** (N * expo)
        samples.append(x)
        rows.append(EtaRow(float(a), N, float(np.mean(x)), float(np.std(x, ddof=1) / np.sqrt(len(x)))))
    if return_samples:
        return rows, np.array(samples).T
    return rows


@dataclass
class DilationCheck:
    a: float
    lhs: float
    rhs: float
    stderr: float

    @property
    def ok(self) -> bool:
        return abs(self.lhs - self.rhs) <= 3 * self.stderr


def eta_dilation_check(f, window, sd, a_grid, N, kernel=KernelSpec(), anchors=64, seed=0, threads=1):
    """profile(lam a, N) against lam^(2d - 2 alpha) profile(a, N + 1), paired over anchors."""
    lam = float(window.sub.expansion)
    c = lam ** (2 * window.d - 2 * sd.alpha)
    grid = list(a_grid) + [lam * a for a in a_grid]
    # both N and N+1 need their margins, so sample anchors once for the widest scale
    scales = [lam ** (N + 1) / a for a in a_grid] + [lam ** N / (lam * a) for a in a_grid]
    pts = _anchor_points(window, scales, kernel, anchors, seed)
    _, lo = eta_profile(f, window, sd, list(a_grid), N + 1, kernel, pts, seed, threads, True)
    _, hi = eta_profile(f, window, sd, [lam * a for a in a_grid], N, kernel, pts, seed, threads, True)
    out = []
    for i, a in enumerate(a_grid):
        diff = hi[:, i] - c * lo[:, i]
        out.append(DilationCheck(float(a), float(hi[:, i].mean()), float(c * lo[:, i].mean()),
                                 float(np.std(diff, ddof=1) / np.sqrt(len(diff)))))
    del grid
    return out


# -- autocorrelation --------------------------------------------------------

@dataclass
class Correlation:
    value: float
    stderr: float
    anchors: int


def _field_1d(f, window, lo, hi):
    t, anc = _tiles_near_1d(window, lo, hi)
    clo, chi, val = f.subcells(t, anc)
    order = np.argsort(clo[:, 0], kind="stable")
    return clo[order, 0], chi[order, 0], val[order]


def _eval_1d(starts, vals, pts):
    idx = np.searchsorted(starts, pts, side="right") - 1
    return vals[idx]


def _product_integral_1d(starts, vals, a0, a1, x, y=0.0):
    """integral_{a0}^{a1} F(u + x) F(u + y) du for piecewise-constant F."""
    cuts = [np.array([a0, a1])]
    for sh in (x, y):
        b = starts - sh
        cuts.append(b[(b > a0) & (b < a1)])
    pts = np.unique(np.concatenate(cuts))
    mid = 0.5 * (pts[:-1] + pts[1:])
    w = np.diff(pts)
    return float(np.sum(w * _eval_1d(starts, vals, mid + x) * _eval_1d(starts, vals, mid + y)))


def _block_origin(a, G):
    return np.floor(np.asarray(a) * G).astype(np.int64)


def _shifted_2d(Fbig, q, phi, n):
    """Bilinear exact cell-average of F(. + x) over an n x n block; q, phi per axis (x, y)."""
    qx, qy = q
    fx, fy = phi
    A = Fbig[qy:qy + n + 1, qx:qx + n + 1]
    return ((1 - fx) * (1 - fy) * A[:n, :n] + fx * (1 - fy) * A[:n, 1:n + 1]
            + (1 - fx) * fy * A[1:n + 1, :n] + fx * fy * A[1:n + 1, 1:n + 1])


def correlation(f: CylindricalFunction, window: Window, x, anchors=64, seed: int = 0, block: float = 8.0,
                threads: int = 1) -> Correlation:
    """Spatial-average estimate of <f o h_x, f> from blocks of side ``block`` at random anchors."""
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    reach = float(np.abs(xv).max()) + block + _diameter(window.sub) + 1
    pts = window.sample_anchors(int(anchors), reach, np.random.default_rng(seed)) if np.ndim(anchors) == 0 \
        else np.atleast_2d(np.asarray(anchors, dtype=float))
    for p in pts:
        window.require_margin(reach, p)
    if window.d == 1:
        def one(p):
            a0, a1 = p[0], p[0] + block
            st, _, val = _field_1d(f, window, a0 - 1 - abs(xv[0]), a1 + 1 + abs(xv[0]))
            return _product_integral_1d(st, val, a0, a1, 0.0, xv[0]) / block
    else:
        G = f.G
        n = int(round(block * G))
        xs = xv * G
        q = np.floor(xs).astype(np.int64)
        phi = xs - q
        codes = window.raster()

        def one(p):
            o = _block_origin(p, G) // G  # unit-cell corner
            lo = o + np.minimum(q // G, 0) - 1
            hi = o + np.maximum(q // G, 0) + int(math.ceil(block)) + 2
            F = f.field(codes[lo[1]:hi[1], lo[0]:hi[0]])
            base = (o - lo) * G
            A = F[base[1]:base[1] + n, base[0]:base[0] + n]
            B = _shifted_2d(F, (base[0] + q[0], base[1] + q[1]), phi, n)
            return float(np.mean(A * B))
    vals = np.array(pmap(one, list(pts), threads))
    return Correlation(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(len(vals))), len(vals))


def correlation_matrix(f: CylindricalFunction, window: Window, lags, anchors=64, seed: int = 0,
                       block: float = 8.0) -> np.ndarray:
    """Gram matrix C[p, q] = average of F(. + x_p) F(. + x_q) over the sampled blocks.

    In d=2 the lags must lie on the sub-cell grid so that the shifted fields are exact.
    """
    lags = [np.atleast_1d(np.asarray(x, dtype=float)) for x in lags]
    reach = max(float(np.abs(x).max()) for x in lags) + block + _diameter(window.sub) + 1
    pts = window.sample_anchors(int(anchors), reach, np.random.default_rng(seed)) if np.ndim(anchors) == 0 \
        else np.atleast_2d(np.asarray(anchors, dtype=float))
    P = len(lags)
    C = np.zeros((P, P))
    if window.d == 1:
        span = max(abs(x[0]) for x in lags)
        for p in pts:
            st, _, val = _field_1d(f, window, p[0] - span - 1, p[0] + block + span + 1)
            for i in range(P):
                for j in range(i, P):
                    C[i, j] += _product_integral_1d(st, val, p[0], p[0] + block, lags[i][0], lags[j][0]) / block
    else:
        G = f.G
        n = int(round(block * G))
        shifts = []
        for x in lags:
            s = x * G
            if not np.allclose(s, np.round(s)):
                raise ValueError("2d lags must lie on the sub-cell grid")
            shifts.append(np.round(s).astype(np.int64))
        span = int(math.ceil(max(float(np.abs(x).max()) for x in lags))) + 1
        codes = window.raster()
        for p in pts:
            o = np.floor(p).astype(np.int64)
            lo = o - span
            F = f.field(codes[lo[1]:lo[1] + 2 * span + int(math.ceil(block)) + 1,
                              lo[0]:lo[0] + 2 * span + int(math.ceil(block)) + 1])
            base = span * G
            U = [F[base + s[1]:base + s[1] + n, base + s[0]:base + s[0] + n].ravel() for s in shifts]
            U = np.array(U)
            C += U @ U.T / U.shape[1]
    C = np.triu(C) + np.triu(C, 1).T if window.d == 1 else C
    return C / len(pts)
