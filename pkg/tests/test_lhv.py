from __future__ import annotations

import numpy as np
import pytest
from factories import brute_hardy_max, entangled_haar, random_settings

from hardy_forge.evaluator import quantum_value
from hardy_forge.lhv import (
    classical_max,
    contextual_impossibility,
    hardy_value,
    joint_distribution,
    logical_chain,
)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_classical_max_matches_plain_loop(n):
    assert classical_max(n).max_value == brute_hardy_max(n)


def test_classical_max_is_zero_with_witnesses():
    for n in range(2, 8):
        b = classical_max(n)
        assert b.max_value == 0
        assert all(hardy_value(w, n) == 0 for w in b.witnesses)


def test_n2_maximizer_count():
    # count by hand: plain enumeration of all 16 assignments
    count = sum(hardy_value(x, 2) == 0 for x in range(16))
    assert classical_max(2).maximizers == count


def test_hardy_value_examples():
    n = 3
    all_a = 0b111
    assert hardy_value(all_a | 0b111 << n, n) == 1 - 0 - 3
    assert hardy_value(all_a, n) == 1 - 1
    assert hardy_value(0, n) == -1


def test_contextual_impossibility_small():
    for n in range(2, 9):
        assert contextual_impossibility(n)
    assert logical_chain(5)


def test_n_bounds():
    with pytest.raises(ValueError):
        classical_max(1)
    with pytest.raises(ValueError):
        contextual_impossibility(14)


@pytest.mark.parametrize("dims", [(2, 2), (2, 2, 2), (3, 2), (3, 3, 2)])
def test_joint_distribution_oracle(dims):
    rng = np.random.default_rng(sum(dims))
    for _ in range(3):
        state = entangled_haar(dims, rng)
        st = random_settings(dims, rng)
        jd = joint_distribution(state, st)
        rep = quantum_value(state, st)
        p_a, p_bb, p_x = jd.hardy_terms()
        assert abs(p_a - rep.p_aI) < 1e-12
        assert abs(p_bb - rep.p_bbarI) < 1e-12
        assert np.allclose(p_x, rep.p_cross, atol=1e-12)
        assert jd.normalization_residual() < 1e-10
        assert jd.no_signaling_residual() < 1e-10
