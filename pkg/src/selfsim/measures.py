"""Finitely-additive measures Phi+_v evaluated on supertile unions and balls."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .geometry import Ball, BoxUnion
from .substitution import SpectralData, integer_eigvector
from .tiling import Decomposition, Window, decompose


@dataclass(frozen=True)
class PhiVector:
    v: tuple
    label: str = ""
    eigenvalue: object = None

    @classmethod
    def from_eigen(cls, sd: SpectralData, n: int, integral: bool = False) -> "PhiVector":
        """Eigenvector of S^T for eigenvalue n; ``integral`` rescales it to coprime integers."""
        th = sd.eigenvalues[n]
        th = int(th) if float(th) == int(th) else float(th)
        if integral:
            iv = integer_eigvector(sd, n)
            if iv is None:
                raise ValueError(f"eigenvector {n} is not rational")
            return cls(iv, f"l{n + 1}", th)
        return cls(tuple(float(x) for x in sd.left[n]), f"l{n + 1}", th)

    @property
    def exact(self) -> bool:
        return all(isinstance(x, Rational) for x in self.v)

    def scaled(self, a) -> "PhiVector":
        return PhiVector(tuple(a * x for x in self.v), self.label, self.eigenvalue)

    def residual(self, S) -> float:
        v = np.asarray(self.v, dtype=float)
        return float(np.linalg.norm(np.asarray(S, dtype=float).T @ v - float(self.eigenvalue) * v))


def transfer_table(S, v, kmax: int) -> list:
    """[(S^T)^k v for k = 0..kmax]; exact when v has int/Fraction entries."""
    exact = all(isinstance(x, Rational) for x in v)
    out = [list(v) if exact else np.asarray(v, dtype=float)]
    St = [[int(S[j][i]) for j in range(len(S))] for i in range(len(S))]
    for _ in range(kmax):
        cur = out[-1]
        if exact:
            out.append([sum(St[i][j] * cur[j] for j in range(len(cur))) for i in range(len(cur))])
        else:
            out.append(np.asarray(St, dtype=float) @ cur)
    return out


def phi_plus_supertile(v: PhiVector, k: int, j: int, S=None):
    """((S^T)^k v)_j: the measure of an order-k supertile of type j."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if v.eigenvalue is not None:
        return v.eigenvalue ** k * v.v[j]
    return transfer_table(S, v.v, k)[k][j]


def evaluate_phi(v: PhiVector, dec: Decomposition, S):
    """Phi+_v over a decomposition: exact part from pieces, Leb-proportional boundary part."""
    counts = dec.piece_counts(len(v.v))
    levels = [k for k in range(counts.shape[0]) if counts[k].any()]
    total = 0
    if levels:
        if v.eigenvalue is not None:
            for k in levels:
                tk = v.eigenvalue ** k
                total += sum(int(counts[k, j]) * (tk * v.v[j]) for j in range(len(v.v)) if counts[k, j])
        else:
            table = transfer_table(S, v.v, max(levels))
            for k in levels:
                total += sum(int(counts[k, j]) * table[k][j] for j in range(len(v.v)) if counts[k, j])
    if len(dec.boundary_types):
        vf = np.asarray([float(x) for x in v.v])
        total = float(total) + float(np.sum(vf[dec.boundary_types] * dec.boundary_fractions))
    elif not v.exact:
        total = float(total)
    return total


def phi_plus(v: PhiVector, window: Window, domain):
    return evaluate_phi(v, decompose(window, domain), window.sub.incidence)


def phi_plus_ball(v: PhiVector, window: Window, R: float, center=None):
    c = window.origin if center is None else tuple(np.atleast_1d(center))
    window.require_margin(R, c)
    if R <= 0:
        return 0.0
    return phi_plus(v, window, Ball(tuple(float(x) for x in c), float(R)))


def phi_plus_box(v: PhiVector, window: Window, box):
    return phi_plus(v, window, box)


def m_phi_minus(f, v) -> float:
    """sum_i v_i * integral of the profile of type i."""
    return float(np.dot(np.asarray(v, dtype=float), f.integrals))


@dataclass
class SelfSimilarityReport:
    lhs: object
    rhs: object
    residual: object
    relative: float
    exact: bool


def self_similarity_check(v: PhiVector, window: Window, domain) -> SelfSimilarityReport:
    """Compare Phi+_v(expansion * domain) in zeta(window) with theta * Phi+_v(domain) in window."""
    if v.eigenvalue is None:
        raise ValueError("self-similarity needs an eigenvector")
    sub = window.sub
    lam = sub.expansion
    big = Window(sub, window.root_type, window.levels + 1, tuple(lam * x for x in window.origin))
    if isinstance(domain, Ball):
        scaled = Ball(tuple(lam * x for x in domain.center), lam * domain.radius)
    else:
        scaled = domain.scaled(lam)
    lhs = phi_plus(v, big, scaled)
    rhs = v.eigenvalue * phi_plus(v, window, domain)
    res = lhs - rhs
    den = max(abs(float(lhs)), abs(float(rhs)))
    rel = abs(float(res)) / den if den > 0 else 0.0
    exact = isinstance(res, (int, Fraction)) and not isinstance(res, bool)
    return SelfSimilarityReport(lhs, rhs, res, rel, exact)


def supertile_union_domain(window: Window, parts) -> BoxUnion:
    from .geometry import Box
    sub = window.sub
    boxes = []
    for k, t, anchor in parts:
        hi = tuple(a + s * sub.expansion ** k for a, s in zip(anchor, sub.prototiles[t].size))
        boxes.append(Box(tuple(anchor), hi))
    return BoxUnion(tuple(boxes))
