"""Tile substitutions on R and Z^2 lattices and their linear-algebraic data.

A substitution is stored as a tuple of prototiles plus, for every parent
type j, the list of children ``(type, offset)`` tiling the expanded support
``expansion * [0, size_j]``.  Types are 0-based indices throughout the
library; the 1-based ``id`` of each prototile only matters for configs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateSpectrum, GeometryError, LengthMismatch, NotPrimitive

TOL_EIG = 1e-9


@dataclass(frozen=True)
class Prototile:
    id: int
    extent: tuple[int, ...]
    size: tuple[float, ...] = ()
    label: str = ""
    color: str = ""

    def __post_init__(self):
        if any((not isinstance(e, (int, np.integer))) or e <= 0 for e in self.extent):
            raise GeometryError(self.id, self.extent, [f"extent must be positive integers, got {self.extent}"])
        if not self.size:
            object.__setattr__(self, "size", tuple(int(e) for e in self.extent))

    @property
    def volume(self):
        if all(isinstance(s, (int, np.integer)) for s in self.size):
            return Fraction(math.prod(int(s) for s in self.size))
        return float(math.prod(self.size))

    @property
    def name(self) -> str:
        return self.label or str(self.id)


class Child(NamedTuple):
    type: int
    offset: tuple


@dataclass(frozen=True)
class Substitution:
    dimension: int
    expansion: float
    prototiles: tuple[Prototile, ...]
    rules: tuple[tuple[Child, ...], ...]
    name: str = ""

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise GeometryError(None, None, [f"dimension must be 1 or 2, got {self.dimension}"])
        if len(self.rules) != len(self.prototiles):
            raise GeometryError(None, None, ["one rule per prototile required"])
        for j, rule in enumerate(self.rules):
            for c in rule:
                if not 0 <= c.type < self.m:
                    raise GeometryError(j, c.offset, [f"unknown child type {c.type}"])
                if len(c.offset) != self.dimension:
                    raise GeometryError(j, c.offset, ["offset dimension mismatch"])

    @property
    def m(self) -> int:
        return len(self.prototiles)

    @property
    def labels(self) -> list[str]:
        return [p.name for p in self.prototiles]

    @cached_property
    def is_lattice(self) -> bool:
        ints = (int, np.integer)
        return (
            isinstance(self.expansion, ints)
            and all(isinstance(s, ints) for p in self.prototiles for s in p.size)
            and all(isinstance(x, ints) for r in self.rules for c in r for x in c.offset)
        )

    @cached_property
    def sizes(self) -> np.ndarray:
        """(m, d) physical side lengths."""
        return np.array([p.size for p in self.prototiles], dtype=float)

    @cached_property
    def volumes(self) -> np.ndarray:
        return np.prod(self.sizes, axis=1)

    @cached_property
    def child_types(self) -> tuple[np.ndarray, ...]:
        return tuple(np.array([c.type for c in r], dtype=np.int64) for r in self.rules)

    @cached_property
    def child_offsets(self) -> tuple[np.ndarray, ...]:
        dt = np.int64 if self.is_lattice else float
        return tuple(np.array([c.offset for c in r], dtype=dt).reshape(len(r), self.dimension) for r in self.rules)

    @cached_property
    def incidence(self) -> np.ndarray:
        return build_incidence(self)


def build_incidence(sub: Substitution) -> np.ndarray:
    """S[i, j] = number of type-i children in the rule of type j."""
    S = np.zeros((sub.m, sub.m), dtype=np.int64)
    for j, rule in enumerate(sub.rules):
        for c in rule:
            S[c.type, j] += 1
    return S


def is_primitive(S) -> bool:
    S = np.asarray(S)
    m = S.shape[0]
    if S.shape != (m, m) or (S < 0).any():
        return False
    B = (S > 0).astype(np.int64)
    P = B.copy()
    # Wielandt: a primitive m x m matrix has A^k > 0 for k = (m-1)^2 + 1
    for _ in range(m * m - 2 * m + 2):
        if P.all():
            return True
        P = ((P @ B) > 0).astype(np.int64)
    return bool(P.all())


@dataclass
class GeometryReport:
    ok: bool
    problems: list = field(default_factory=list)


def validate_geometry(sub: Substitution) -> GeometryReport:
    """Check every rule is an exact interior-disjoint cover of its expanded parent."""
    problems = []
    for j, rule in enumerate(sub.rules):
        if sub.dimension == 2:
            problems += _check_rule_2d(sub, j, rule)
        else:
            problems += _check_rule_1d(sub, j, rule)
    if problems:
        first = problems[0]
        raise GeometryError(first["rule"], first["cell"], problems)
    return GeometryReport(True, [])


def _check_rule_2d(sub, j, rule):
    if not sub.is_lattice:
        return [{"rule": j, "kind": "non-lattice", "cell": None}]
    L = int(sub.expansion)
    w, h = (int(L * s) for s in sub.prototiles[j].size)
    occ = np.zeros((h, w), dtype=np.int64)
    problems = []
    for c in rule:
        cw, ch = sub.prototiles[c.type].size
        x, y = c.offset
        if x < 0 or y < 0 or x + cw > w or y + ch > h:
            problems.append({"rule": j, "kind": "out-of-bounds", "cell": (int(x), int(y))})
            continue
        occ[y:y + ch, x:x + cw] += 1
    for kind, mask in (("overlap", occ > 1), ("gap", occ == 0)):
        for y, x in zip(*np.nonzero(mask)):
            problems.append({"rule": j, "kind": kind, "cell": (int(x), int(y))})
    return problems


def _check_rule_1d(sub, j, rule):
    target = sub.expansion * sub.prototiles[j].size[0]
    tol = 0 if sub.is_lattice else 1e-9 * max(1.0, abs(target))
    problems = []
    pos = 0
    for c in sorted(rule, key=lambda c: c.offset[0]):
        x = c.offset[0]
        if abs(x - pos) > tol:
            kind = "gap" if x > pos else "overlap"
            problems.append({"rule": j, "kind": kind, "cell": (pos if kind == "gap" else x,)})
        pos = x + sub.prototiles[c.type].size[0]
    if abs(pos - target) > tol:
        kind = "gap" if pos < target else "overlap"
        problems.append({"rule": j, "kind": kind, "cell": (min(pos, target),)})
    return problems


def check_primitive(sub: Substitution):
    if not is_primitive(sub.incidence):
        raise NotPrimitive(f"incidence matrix {sub.incidence.tolist()} is not primitive")


# -- spectral data ---------------------------------------------------------

def charpoly(S) -> list[int]:
    """Exact characteristic polynomial coefficients (highest degree first), Faddeev-LeVerrier."""
    A = [[int(x) for x in row] for row in np.asarray(S)]
    m = len(A)
    coeffs = [1]
    M = [[0] * m for _ in range(m)]
    c_prev = 1
    for k in range(1, m + 1):
        M = [[sum(A[i][t] * M[t][j] for t in range(m)) + (c_prev if i == j else 0) for j in range(m)] for i in range(m)]
        AM_tr = sum(A[i][t] * M[t][i] for i in range(m) for t in range(m))
        c = Fraction(-AM_tr, k)
        assert c.denominator == 1
        c_prev = int(c)
        coeffs.append(c_prev)
    return coeffs


def _poly_at(coeffs, x):
    acc = 0
    for c in coeffs:
        acc = acc * x + c
    return acc


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigen-data of the incidence matrix.

    ``right[n]`` is an eigenvector of S, ``left[n]`` one of S^T, with
    ``left[n] . right[k] = delta_nk``.  ``right[n]`` is scaled to max-abs 1
    with its first largest entry positive.
    """

    incidence: np.ndarray
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    dimension: int
    alpha: float | None
    hypothesis_ok: bool
    expanding_dims: int
    jordan_size: int = 1
    critical_block: int = 0

    @property
    def theta1(self) -> float:
        return float(self.eigenvalues[0].real)

    @property
    def theta2(self):
        return self.eigenvalues[1] if len(self.eigenvalues) > 1 else None

    @property
    def threshold(self) -> float:
        return self.theta1 ** ((self.dimension - 1) / self.dimension)

    def eigvec_residual(self) -> float:
        S = self.incidence.astype(float)
        worst = 0.0
        for n, th in enumerate(self.eigenvalues):
            l = self.left[n]
            r = self.right[n]
            worst = max(worst,
                        np.linalg.norm(S.T @ l - th * l) / np.linalg.norm(l),
                        np.linalg.norm(S @ r - th * r) / np.linalg.norm(r))
        return float(worst)

    def biorthogonality_error(self) -> float:
        G = self.left @ self.right.T
        return float(np.abs(G - np.eye(len(G))).max())


def spectral_data(sub: Substitution) -> SpectralData:
    S = sub.incidence
    check_primitive(sub)
    m = S.shape[0]
    d = sub.dimension
    w, V = np.linalg.eig(S.astype(float))
    order = sorted(range(m), key=lambda n: (-round(abs(w[n]), 9), -w[n].real, -w[n].imag))
    w = w[order]
    V = V[:, order]

    coeffs = charpoly(S)
    w = np.array([_snap(th, coeffs) for th in w])
    if m <= 4:
        roots = np.roots(np.array(coeffs, dtype=float))
        if not _same_multiset(roots, w, 1e-6 * max(1.0, abs(w[0]))):
            raise DegenerateSpectrum(f"eig {w} disagrees with characteristic polynomial roots {roots}")

    theta1 = w[0].real
    if abs(w[0].imag) > TOL_EIG or (m > 1 and abs(w[1]) >= theta1 - 1e-9 * theta1):
        raise DegenerateSpectrum("Perron eigenvalue is not simple and dominant")
    expected = float(sub.expansion) ** d
    if abs(theta1 - expected) > 1e-9 * expected:
        raise DegenerateSpectrum(f"Perron eigenvalue {theta1} != expansion^d = {expected}")

    threshold = theta1 ** ((d - 1) / d)
    scale = max(1.0, theta1)
    expanding = [n for n in range(m) if abs(w[n]) > threshold + 1e-9 * scale]
    for n in expanding:
        if abs(w[n].imag) > TOL_EIG:
            raise DegenerateSpectrum(f"complex eigenvalue {w[n]} in the rapidly expanding part")
        if any(abs(w[n] - w[k]) < 1e-7 * scale for k in range(m) if k != n):
            raise DegenerateSpectrum(f"repeated eigenvalue {w[n].real} in the rapidly expanding part")
    critical = int(any(abs(abs(th) - threshold) <= 1e-9 * scale for th in w))

    if np.linalg.cond(V) > 1e8:
        raise DegenerateSpectrum("incidence matrix is not diagonalizable")
    real = bool(np.all(np.abs(w.imag) <= TOL_EIG))
    if real:
        w = w.real
        V = V.real
    # normalize right vectors, then left = rows of the inverse
    for n in range(m):
        col = V[:, n]
        k = int(np.argmax(np.abs(col) > np.abs(col).max() * (1 - 1e-12)))
        V[:, n] = col / col[k]
        V[:, n] /= np.abs(V[:, n]).max()
        V[:, n] = np.where(np.abs(V[:, n]) < 1e-14, 0.0, V[:, n])
    Lrows = np.linalg.inv(V)
    if real:
        # one Newton-type refinement of l.r = I for tight biorthogonality
        Lrows = Lrows @ (2 * np.eye(m) - V @ Lrows)
    right = V.T.copy()
    left = Lrows

    theta2 = w[1] if m > 1 else None
    hyp = False
    alpha = None
    if theta2 is not None and abs(np.imag(theta2)) <= TOL_EIG and np.real(theta2) > 0:
        t2 = float(np.real(theta2))
        alpha = d * math.log(t2) / math.log(theta1)
        simple = m == 2 or abs(w[2]) < t2 - 1e-9 * scale
        hyp = simple and t2 > threshold + 1e-9 * scale
    sd = SpectralData(incidence=S, eigenvalues=w, right=right, left=left, dimension=d,
                      alpha=alpha, hypothesis_ok=hyp, expanding_dims=len(expanding),
                      critical_block=critical)
    if sd.eigvec_residual() > 1e-9 * scale:
        raise DegenerateSpectrum(f"eigenvector residual {sd.eigvec_residual():.3g} too large")
    return sd


def _snap(th, coeffs):
    """Replace a numerically integral eigenvalue by the exact integer root."""
    if abs(th.imag) <= 1e-7:
        k = round(th.real)
        if abs(th.real - k) < 1e-6 and _poly_at(coeffs, k) == 0:
            return complex(k, 0.0)
    return complex(th)


def _same_multiset(a, b, tol):
    b = list(b)
    for x in a:
        dist = [abs(x - y) for y in b]
        k = int(np.argmin(dist))
        if dist[k] > tol:
            return False
        b.pop(k)
    return True


def integer_eigvector(sd: SpectralData, n: int, max_den: int = 1000) -> tuple[int, ...] | None:
    """left[n] rescaled to coprime integers, or None if it is not rational."""
    v = np.asarray(sd.left[n])
    if np.iscomplexobj(v):
        return None
    nz = np.abs(v[np.abs(v) > 1e-12])
    if len(nz) == 0:
        return None
    u = v / nz.min()
    fr = [Fraction(float(x)).limit_denominator(max_den) for x in u]
    if max(abs(float(f) - x) for f, x in zip(fr, u)) > 1e-9:
        return None
    den = math.lcm(*(f.denominator for f in fr))
    ints = [int(f * den) for f in fr]
    g = math.gcd(*ints)
    return tuple(i // g for i in ints)


def tile_frequencies(sd: SpectralData, sub: Substitution) -> np.ndarray:
    """Frequency per unit volume of each type: sum_i freq_i * vol_i = 1."""
    r1 = np.asarray(sd.right[0]).real
    return r1 / float(r1 @ sub.volumes)


def derive_lengths_1d(sub: Substitution) -> np.ndarray:
    """Left Perron eigenvector of S scaled to min 1: the self-similar tile lengths."""
    if sub.dimension != 1:
        raise ValueError("derive_lengths_1d needs a one-dimensional substitution")
    S = sub.incidence.astype(float)
    w, V = np.linalg.eig(S.T)
    k = int(np.argmax(w.real))
    theta = float(w[k].real)
    ell = np.abs(V[:, k].real)
    ell = ell / ell.min()
    lam = float(sub.expansion) if sub.expansion else theta
    for j, rule in enumerate(sub.rules):
        total = sum(ell[c.type] for c in rule)
        if abs(total - lam * ell[j]) > 1e-9 * max(1.0, lam * ell[j]):
            raise LengthMismatch(f"rule {j}: children span {total}, expected {lam * ell[j]}")
    return ell


def realize_1d(sub: Substitution, lengths: Sequence[float] | None = None) -> Substitution:
    """Geometric realization of a symbolic 1d substitution with self-similar lengths.

    Children keep their listed order; offsets become cumulative lengths.
    Integral lengths keep the substitution on the integer lattice.
    """
    ell = derive_lengths_1d(sub) if lengths is None else np.asarray(lengths, dtype=float)
    theta = float(np.max(np.linalg.eigvals(sub.incidence.astype(float)).real))
    integral = np.allclose(ell, np.round(ell), atol=1e-9) and abs(theta - round(theta)) < 1e-9
    if integral:
        ell = [int(round(x)) for x in ell]
        lam = int(round(theta))
    else:
        ell = [float(x) for x in ell]
        lam = theta
    protos = tuple(replace(p, size=(ell[i],)) for i, p in enumerate(sub.prototiles))
    rules = []
    for rule in sub.rules:
        pos = 0
        kids = []
        for c in rule:
            kids.append(Child(c.type, (pos,)))
            pos = pos + ell[c.type]
        rules.append(tuple(kids))
    return Substitution(1, lam, protos, tuple(rules), sub.name)
