from __future__ import annotations

import numpy as np
import pytest
from factories import kron_all
from hypothesis import given, settings
from hypothesis import strategies as st

from hardy_forge.product import (
    alternate,
    best_rank_one,
    closest_product,
    default_restarts,
    is_entangled,
    schmidt_coefficients,
    stationarity_residuals,
)
from hardy_forge.statekit import ProductVector, PureState, haar_random_state, inner_product


def w3():
    a = np.zeros(8)
    a[[1, 2, 4]] = 1
    return PureState((2, 2, 2), a).normalized()


@settings(max_examples=25, deadline=None)
@given(da=st.integers(2, 4), db=st.integers(2, 4), seed=st.integers(0, 2**32 - 1))
def test_bipartite_overlap_is_top_schmidt(da, db, seed):
    state = haar_random_state((da, db), seed=seed)
    res = closest_product(state, seed=seed)
    assert abs(res.overlap - schmidt_coefficients(state)[0]) < 1e-10
    assert res.certified


def test_w3_closest_product():
    res = closest_product(w3())
    assert abs(res.overlap - 2 / 3) < 1e-12
    # every factor is (sqrt2, 1)/sqrt3 up to phase
    for f in res.pv.factors:
        assert abs(abs(np.vdot(f, np.array([np.sqrt(2), 1]) / np.sqrt(3))) - 1) < 1e-9
    assert max(res.residuals) < 1e-12


def test_ghz_closest_product_overlap():
    a = np.zeros(8)
    a[0], a[7] = np.sqrt(0.2), np.sqrt(0.8)
    res = closest_product(PureState((2, 2, 2), a))
    assert abs(res.overlap - np.sqrt(0.8)) < 1e-12


def test_product_input_overlap_one():
    pv = ProductVector((np.array([1, 0]), np.array([1, 1]) / np.sqrt(2)))
    state = pv.to_state()
    res = closest_product(state)
    assert abs(res.overlap - 1) < 1e-12
    verdict, cert = is_entangled(state, res)
    assert verdict is False
    assert cert["collection"] == []


def test_overlap_is_inner_product_and_beats_random_products():
    state = haar_random_state((2, 2, 2, 2), seed=11)
    res = closest_product(state)
    assert abs(abs(inner_product(state, res.pv)) - res.overlap) < 1e-12
    rng = np.random.default_rng(0)
    for _ in range(200):
        f = [rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(4)]
        f = [v / np.linalg.norm(v) for v in f]
        assert abs(np.vdot(state.amps, kron_all(f))) <= res.overlap + 1e-12


def test_alternation_is_monotone():
    state = haar_random_state((2, 3, 2), seed=5)
    rng = np.random.default_rng(1)
    start = [rng.normal(size=d) + 1j * rng.normal(size=d) for d in state.dims]
    _, _, _, history, _ = alternate(state.tensor, start)
    assert all(b >= a - 1e-15 for a, b in zip(history, history[1:]))


def test_determinism():
    state = haar_random_state((2, 2, 2), seed=9)
    a = closest_product(state, seed=3)
    b = closest_product(state, seed=3)
    for fa, fb in zip(a.pv.factors, b.pv.factors):
        assert np.array_equal(fa, fb)


def test_residuals_vanish_at_result():
    state = haar_random_state((3, 2, 2), seed=2)
    res = closest_product(state)
    assert max(stationarity_residuals(state, res.pv)) < 1e-8


def test_restarts_validation():
    with pytest.raises(ValueError):
        closest_product(w3(), restarts=0)
    assert default_restarts(3) == 40


def test_best_rank_one_matrix_is_svd():
    rng = np.random.default_rng(4)
    m = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    _, sigma, _, _ = best_rank_one(m)
    assert abs(sigma - np.linalg.svd(m, compute_uv=False)[0]) < 1e-10


def test_entangled_verdict_on_w3():
    state = w3()
    verdict, cert = is_entangled(state, closest_product(state))
    assert verdict and cert["collection"]
