"""Experiment drivers shared by the CLI, the scripts and the acceptance suite."""
from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np

from .ergodic import (CylindricalFunction, ExperimentSeries, SeriesRow, default_function, integral_mu,
                      integrate_domain, predicted_supertile_residual, radii_for, deviation_residual)
from .geometry import Ball, Box
from .measures import PhiVector, phi_plus, self_similarity_check, supertile_union_domain
from .parallel import pmap
from .substitution import (SpectralData, Substitution, check_primitive, integer_eigvector, spectral_data,
                           tile_frequencies, validate_geometry)
from .tiling import (Window, ball_decomposition, decompose, make_window, random_supertile_union,
                     supertile_at, type_at)


def levels_for(sub: Substitution, reach: float, factor: float = 3.0, root: int = 0) -> int:
    """Smallest n whose window has every side >= factor * reach."""
    n = 1
    while float(sub.sizes[root].min()) * float(sub.expansion) ** n < factor * reach:
        n += 1
    return n


def info(sub: Substitution, sd: SpectralData | None = None) -> dict:
    sd = sd or spectral_data(sub)
    ev = [(_num(x.real) if abs(complex(x).imag) < 1e-12 else [float(x.real), float(x.imag)]) for x in sd.eigenvalues]
    return {
        "name": sub.name,
        "dimension": sub.dimension,
        "expansion": _num(sub.expansion),
        "incidence": sub.incidence.tolist(),
        "theta": ev,
        "alpha": sd.alpha,
        "hypothesis_ok": bool(sd.hypothesis_ok),
        "expanding_dims": int(sd.expanding_dims),
        "frequencies": [float(x) for x in tile_frequencies(sd, sub)],
        "volumes": [_num(p.volume) for p in sub.prototiles],
        "labels": sub.labels,
    }


def _num(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    x = float(x)
    return int(x) if x == int(x) and abs(x) < 2 ** 53 else x


def phi_growth_series(v: PhiVector, window: Window, levels, anchors: int, seed: int = 0, threads: int = 1,
                      R0: float = 1.0) -> ExperimentSeries:
    """Phi+_v on balls B(anchor, lam^N R0): signed mean and RMS over one shared anchor sample."""
    radii = radii_for(window.sub, levels, R0)
    pts = window.sample_anchors(anchors, max(R for _, R in radii), np.random.default_rng(seed))

    def one(p):
        return [float(phi_plus(v, window, Ball(tuple(p), R))) for _, R in radii]

    vals = np.array(pmap(one, list(pts), threads))
    series = ExperimentSeries([], {"example": window.sub.name, "v_label": v.label, "quantity": f"phi_plus:{v.label}",
                                   "seed": seed})
    for i, (N, R) in enumerate(radii):
        x = vals[:, i]
        series.rows.append(SeriesRow(N, R, float(np.mean(x)), float(np.sqrt(np.mean(x * x))), len(x),
                                     float(np.std(x) / np.sqrt(len(x)))))
    return series


def growth_exponent(sd: SpectralData, n: int) -> float:
    return sd.dimension * math.log(abs(sd.eigenvalues[n])) / math.log(sd.theta1)


# -- exact invariant suite ---------------------------------------------------

def _check(name, ok, **detail):
    return {"check": name, "pass": bool(ok), **detail}


def exact_self_similarity(sub: Substitution, sd: SpectralData, trials: int = 100, n: int | None = None,
                          seed: int = 0) -> dict:
    """Phi+_v(lam * Omega) == theta * Phi+_v(Omega) in integer arithmetic on random supertile unions."""
    n = n or max(2, levels_for(sub, 24, 1.0))
    rng = np.random.default_rng(seed)
    vecs = []
    for k in range(len(sd.eigenvalues)):
        iv = integer_eigvector(sd, k)
        th = sd.eigenvalues[k]
        if iv is not None and float(th) == int(th):
            vecs.append(PhiVector(iv, f"l{k + 1}", int(th)))
    worst = 0
    nonexact = 0
    for t in range(trials):
        W = Window(sub, int(rng.integers(sub.m)), n, tuple(float(x) for x in sub.sizes[0] / 2))
        parts = random_supertile_union(W, rng)
        dom = supertile_union_domain(W, parts)
        for v in vecs:
            rep = self_similarity_check(v, W, dom)
            if not rep.exact:
                nonexact += 1
            else:
                worst = max(worst, abs(rep.residual))
    return _check("exact_self_similarity", worst == 0 and nonexact == 0 and vecs, trials=trials,
                  vectors=[list(v.v) for v in vecs], max_residual=worst, inexact=nonexact)


def oracle_equivalence(sub, sd, f, pairs=50, rho_max=64.0, seed=0) -> dict:
    n = levels_for(sub, rho_max, 2.5)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in range(pairs):
        W = make_window(sub, int(t % sub.m), n)
        rho = float(rng.uniform(0, rho_max))
        c = W.sample_anchors(1, rho, rng)[0]
        ball = Ball(tuple(c), rho)
        a = integrate_domain(f, W, ball, "hierarchical")
        b = integrate_domain(f, W, ball, "naive")
        worst = max(worst, abs(a - b))
    return _check("oracle_equivalence", worst <= 1e-8, pairs=pairs, max_abs_diff=worst)


def supertile_residuals(sub, sd, f, kmax=6, seed=0, method="naive") -> dict:
    """Residual of the deviation expansion on exact supertile supports vs its predicted remainder."""
    worst = 0.0
    n = kmax + 1
    rng = np.random.default_rng(seed)
    checked = 0
    for root in range(sub.m):
        W = make_window(sub, root, n)
        for k in range(0, kmax + 1):
            cell = tuple(int(rng.integers(0, int(e))) for e in W.extent) if sub.is_lattice \
                else tuple(float(rng.uniform(0, e)) for e in W.extent)
            t, anchor, _ = supertile_at(W, cell, k)
            hi = tuple(a + s * sub.expansion ** k for a, s in zip(anchor, sub.prototiles[t].size))
            box = Box(tuple(float(a) for a in anchor), tuple(float(h) for h in hi))
            r = deviation_residual(f, W, 0, sd, domain=box, method=method)
            pred = predicted_supertile_residual(f, sd, k, t)
            worst = max(worst, abs(r - pred))
            checked += 1
    return _check("supertile_residual", worst <= 1e-9, supertiles=checked, max_abs_diff=worst)


def volume_conservation(sub, radii=20, seed=0, Rmax=100.0) -> dict:
    n = levels_for(sub, Rmax, 2.5)
    W = make_window(sub, 0, n)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(radii):
        R = float(rng.uniform(0.1, Rmax))
        c = W.sample_anchors(1, R, rng)[0]
        dec = ball_decomposition(W, R, c)
        err = abs(dec.total_volume(sub) - Ball(tuple(c), R).volume) / max(1.0, R ** (sub.dimension - 1))
        worst = max(worst, err)
    return _check("ball_volume", worst <= 1e-9, radii=radii, max_scaled_err=worst)


def hierarchy_consistency(sub, n=3) -> dict:
    bad = 0
    cells = 0
    for root in range(sub.m):
        W = make_window(sub, root, n)
        tiles = W.tiles()
        for t, a in zip(tiles.types, tiles.anchors):
            if sub.is_lattice:
                probe = tuple(int(x) for x in a)
            else:
                probe = tuple(float(x) + 1e-9 for x in a)
            got, off = type_at(W, probe)
            cells += 1
            if got != t or any(abs(o) > 1e-6 for o in off):
                bad += 1
    return _check("hierarchy_consistency", bad == 0, tiles=cells, mismatches=bad)


def frequency_convergence(sub, sd, nmax=10) -> dict:
    """Empirical type densities in zeta^n(T_j) approach the frequencies at rate (|theta2|/theta1)^n."""
    S = [[int(x) for x in row] for row in sub.incidence]
    freq = tile_frequencies(sd, sub)
    rho = abs(sd.eigenvalues[1]) / sd.theta1 if sub.m > 1 else 0.0
    ok = True
    worst = 0.0
    for j in range(sub.m):
        C = sum(float(np.abs(sd.right[k]).max() * abs(sd.left[k][j])) for k in range(1, sub.m)) / float(sub.volumes[j])
        col = [int(i == j) for i in range(sub.m)]
        for n in range(1, nmax + 1):
            col = [sum(S[i][k] * col[k] for k in range(sub.m)) for i in range(sub.m)]
            dens = np.array(col, dtype=float) / (sd.theta1 ** n * float(sub.volumes[j]))
            err = float(np.abs(dens - freq).max())
            worst = max(worst, err)
            if err > C * rho ** n * (1 + 1e-9) + 1e-12:
                ok = False
    return _check("frequency_convergence", ok, rate=float(rho), max_err=worst)


def selftest(sub: Substitution, f: CylindricalFunction | None = None, seed: int = 0, quick: bool = False) -> list:
    t0 = time.time()
    out = []
    try:
        validate_geometry(sub)
        out.append(_check("geometry", True))
    except Exception as exc:  # noqa: BLE001 - reported, not raised
        out.append(_check("geometry", False, error=str(exc)))
    try:
        check_primitive(sub)
        out.append(_check("primitive", True))
    except Exception as exc:  # noqa: BLE001
        out.append(_check("primitive", False, error=str(exc)))
        return out
    sd = spectral_data(sub)
    lam_d = float(sub.expansion) ** sub.dimension
    out.append(_check("perron_equals_expansion", abs(sd.theta1 - lam_d) <= 1e-9 * lam_d, theta1=sd.theta1))
    out.append(_check("biorthogonality", sd.biorthogonality_error() <= 1e-12, max_err=sd.biorthogonality_error()))
    cons = all(sum(int(sub.incidence[i, j]) * sub.prototiles[i].volume for i in range(sub.m))
               == sub.expansion ** sub.dimension * sub.prototiles[j].volume for j in range(sub.m)) \
        if sub.is_lattice else bool(np.allclose(sub.volumes @ sub.incidence, lam_d * sub.volumes, rtol=1e-12))
    out.append(_check("column_volume_conservation", cons))
    out.append(frequency_convergence(sub, sd))
    f = f or default_function(sub, sd)
    out.append(hierarchy_consistency(sub))
    out.append(volume_conservation(sub, 10 if quick else 20, seed))
    out.append(exact_self_similarity(sub, sd, 20 if quick else 100, seed=seed))
    out.append(oracle_equivalence(sub, sd, f, 10 if quick else 50, seed=seed))
    out.append(supertile_residuals(sub, sd, f, 4 if quick else 6, seed=seed))
    chk = default_function(sub, sd, checker=True)
    out.append(dict(supertile_residuals(sub, sd, chk, 4 if quick else 5, seed=seed), check="supertile_residual_checker"))
    out.append(_check("runtime", time.time() - t0 < 60, seconds=round(time.time() - t0, 3)))
    return out


# -- periodicity heuristic --------------------------------------------------

def period_region(sub: Substitution, bound: int) -> float:
    """Side of the window needed by period_scan for a given bound."""
    return (max(4 * bound, 64) if sub.dimension == 2 else max(8 * bound, 256)) + 2 * bound + 2


def period_scan(window: Window, bound: int):
    """Smallest translation t (sup-norm <= bound) leaving a central region invariant, or None."""
    sub = window.sub
    if sub.dimension == 2:
        codes = window.raster()
        S = max(4 * bound, 64)
        H, Wd = codes.shape
        if H < S + 2 * bound or Wd < S + 2 * bound:
            raise ValueError("window too small for the requested bound")
        y0 = (H - S) // 2
        x0 = (Wd - S) // 2
        base = codes[y0:y0 + S, x0:x0 + S]
        cands = sorted(((tx, ty) for tx in range(-bound, bound + 1) for ty in range(-bound, bound + 1)
                        if (tx, ty) > (0, 0) or (tx == 0 and ty > 0)),
                       key=lambda t: (max(abs(t[0]), abs(t[1])), abs(t[0]) + abs(t[1]), t))
        for tx, ty in cands:
            if (tx, ty) <= (0, 0) and not (tx == 0 and ty > 0):
                continue
            if np.array_equal(base, codes[y0 + ty:y0 + ty + S, x0 + tx:x0 + tx + S]):
                return (tx, ty)
        return None
    tiles = window.tiles()
    pos = tiles.anchors[:, 0].astype(float)
    ext = float(window.extent[0])
    S = max(8 * bound, 256)
    if ext < S + 2 * bound:
        raise ValueError("window too small for the requested bound")
    lo = (ext - S) / 2
    sel = (pos >= lo) & (pos < lo + S)
    ref = {(round(p, 9), int(t)) for p, t in zip(pos[sel], tiles.types[sel])}
    i0 = int(np.argmax(sel))
    for k in range(i0 + 1, len(pos)):
        t = pos[k] - pos[i0]
        if t > bound:
            break
        if tiles.types[k] != tiles.types[i0]:
            continue
        moved = (pos >= lo + t) & (pos < lo + S + t)
        other = {(round(p - t, 9), int(ty)) for p, ty in zip(pos[moved], tiles.types[moved])}
        if other == ref:
            return (_num(t),)
    return None


def window_stats(window: Window, sd: SpectralData | None = None) -> dict:
    sub = window.sub
    sd = sd or spectral_data(sub)
    tiles = window.tiles()
    counts = np.bincount(tiles.types, minlength=sub.m)
    area = float(np.prod(window.extent))
    return {
        "name": sub.name,
        "root_type": sub.labels[window.root_type],
        "levels": window.levels,
        "extent": [_num(x) for x in window.extent],
        "origin": [float(x) for x in window.origin],
        "tiles": int(len(tiles)),
        "counts": {lab: int(c) for lab, c in zip(sub.labels, counts)},
        "empirical_frequencies": [float(c) / area for c in counts],
        "frequencies": [float(x) for x in tile_frequencies(sd, sub)],
    }
