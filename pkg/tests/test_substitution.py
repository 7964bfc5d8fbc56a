import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selfsim.errors import DegenerateSpectrum, GeometryError, NotPrimitive
from selfsim.substitution import (Child, Prototile, Substitution, build_incidence, charpoly, check_primitive,
                                  integer_eigvector, is_primitive, spectral_data, tile_frequencies,
                                  validate_geometry)


def test_incidence_of_builtins(subs):
    assert subs["table"].incidence.tolist() == [[2, 2], [2, 2]]
    assert subs["ab42"].incidence.tolist() == [[3, 1], [1, 3]]
    assert subs["sym95"].incidence.tolist() == [[7, 2], [2, 7]]


def test_perron_eigenvalue_is_lambda_to_d(subs, spectra, name):
    sub, sd = subs[name], spectra[name]
    assert sd.theta1 == float(sub.expansion) ** sub.dimension


def test_alpha_closed_forms(spectra):
    assert spectra["ab42"].alpha == pytest.approx(0.5, abs=1e-12)
    assert spectra["sym95"].alpha == pytest.approx(2 * math.log(5) / math.log(9), abs=1e-12)
    assert spectra["table"].alpha is None
    assert not spectra["table"].hypothesis_ok
    assert spectra["table"].expanding_dims == 1


def test_biorthogonality(spectra, name):
    sd = spectra[name]
    assert sd.biorthogonality_error() <= 1e-12
    assert sd.eigvec_residual() <= 1e-12


def test_integer_eigenvectors(spectra):
    assert integer_eigvector(spectra["ab42"], 1) in {(1, -1), (-1, 1)}
    assert integer_eigvector(spectra["sym95"], 0) == (1, 1)


def test_frequencies_sum_to_one(subs, spectra, name):
    f = tile_frequencies(spectra[name], subs[name])
    assert float(f @ subs[name].volumes) == pytest.approx(1.0, abs=1e-14)
    assert np.all(f > 0)


def test_charpoly_matches_numpy(subs, name):
    S = subs[name].incidence
    assert np.allclose(charpoly(S), np.poly(S.astype(float)))


@given(st.lists(st.integers(0, 3), min_size=9, max_size=9))
@settings(max_examples=200, deadline=None)
def test_primitivity_agrees_with_powers(entries):
    # oracle: (S>0)^k for k up to m^2, boolean powers
    S = np.array(entries).reshape(3, 3)
    B = (S > 0).astype(np.int64)
    P = np.eye(3, dtype=np.int64)
    want = False
    for _ in range(9):
        P = np.minimum(P @ B, 1)
        if P.all():
            want = True
            break
    assert is_primitive(S) == want


@given(st.lists(st.integers(-4, 4), min_size=9, max_size=9))
@settings(max_examples=100, deadline=None)
def test_charpoly_is_exact(entries):
    S = np.array(entries).reshape(3, 3)
    c = charpoly(S)
    assert all(isinstance(x, int) for x in c)
    assert c[0] == 1 and c[-1] == -round(np.linalg.det(S))
    assert c[1] == -int(np.trace(S))


def _unit(i):
    return Prototile(i + 1, (1, 1))


def test_gap_and_overlap_reported():
    protos = (_unit(0),)
    gap = Substitution(2, 2, protos, ((Child(0, (0, 0)), Child(0, (1, 0)), Child(0, (0, 1))),))
    with pytest.raises(GeometryError) as exc:
        validate_geometry(gap)
    assert exc.value.cell == (1, 1)
    assert [p["kind"] for p in exc.value.problems] == ["gap"]
    over = Substitution(2, 2, protos, ((Child(0, (0, 0)), Child(0, (1, 0)), Child(0, (0, 1)), Child(0, (0, 1))),))
    with pytest.raises(GeometryError) as exc:
        validate_geometry(over)
    kinds = sorted(p["kind"] for p in exc.value.problems)
    assert kinds == ["gap", "overlap"]


def test_reducible_is_not_primitive():
    protos = (_unit(0), _unit(1))
    rule = lambda t: tuple(Child(t, (x, y)) for y in range(2) for x in range(2))
    sub = Substitution(2, 2, protos, (rule(0), rule(1)))
    validate_geometry(sub)
    with pytest.raises(NotPrimitive):
        check_primitive(sub)


def test_non_dominant_perron_root_rejected():
    # a -> aa is consistent with lambda = 2; a -> a cannot expand by 4
    sub = Substitution(1, 2, (Prototile(1, (1,)),), ((Child(0, (0,)), Child(0, (1,))),))
    assert spectral_data(sub).theta1 == 2.0
    bad = Substitution(1, 4, (Prototile(1, (1,)),), ((Child(0, (0,)),),))
    with pytest.raises(DegenerateSpectrum):
        spectral_data(bad)


def test_fibonacci_realization(fib):
    phi = (1 + math.sqrt(5)) / 2
    assert not fib.is_lattice
    assert fib.sizes[:, 0] == pytest.approx([phi, 1.0])
    assert fib.expansion == pytest.approx(phi)
    sd = spectral_data(fib)
    assert sd.theta1 == pytest.approx(phi)
    assert sd.expanding_dims == 1


def test_volume_is_exact_fraction(subs):
    assert subs["table"].prototiles[0].volume == Fraction(2)
