from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from factories import dense_hardy_value, entangled_haar, qudit_hardy_state, random_settings

from hardy_forge.evaluator import (
    SettingsError,
    StaleClosedFormError,
    closed_form_hardy,
    hardy_flags,
    leakage_report,
    maximize_violation,
    quantum_value,
    search_policy,
)
from hardy_forge.magic import magic_frame
from hardy_forge.product import closest_product
from hardy_forge.settings import HardyPlan, plan_bell, plan_hardy


@pytest.mark.parametrize("dims", [(2, 2), (2, 2, 2), (3, 2), (3, 3, 2), (2, 4, 3)])
def test_quantum_value_matches_dense(dims):
    rng = np.random.default_rng(len(dims) * 10 + dims[0])
    for _ in range(5):
        state = entangled_haar(dims, rng)
        st = random_settings(dims, rng)
        rep = quantum_value(state, st)
        p_a, p_bb, p_x, val = dense_hardy_value(state, st)
        assert abs(rep.p_aI - p_a) < 1e-12
        assert abs(rep.p_bbarI - p_bb) < 1e-12
        assert np.allclose(rep.p_cross, p_x, atol=1e-12)
        assert abs(rep.value - val) < 1e-12


def test_decomposition_identity_random_qudits():
    rng = np.random.default_rng(2)
    for _ in range(10):
        state = entangled_haar((3, 3, 2), rng)
        st = random_settings(state.dims, rng)
        rep = quantum_value(state, st)
        assert abs(rep.value - (rep.subspace_value + rep.leak_aI - rep.total_leakage)) < 1e-12


def test_qubit_leakage_is_zero():
    rng = np.random.default_rng(3)
    state = entangled_haar((2, 2, 2), rng)
    rep = quantum_value(state, random_settings(state.dims, rng))
    assert rep.total_leakage < 1e-14 and rep.leak_aI < 1e-14


def test_leakage_report_agrees_with_report():
    rng = np.random.default_rng(4)
    state = qudit_hardy_state((3, 3, 3, 3), rng)
    frame = magic_frame(state, closest_product(state).pv)
    _, st = plan_hardy(frame)
    rep = quantum_value(state, st)
    leak = leakage_report(state, st)
    assert np.allclose(leak["cross"], rep.leak_cross, atol=1e-12)
    assert abs(leak["bbarI"] - rep.leak_bbarI) < 1e-12
    assert abs(leak["aI"] - rep.leak_aI) < 1e-12
    assert rep.total_leakage > 1e-6  # this family really leaks


def test_check_settings_rejects():
    rng = np.random.default_rng(5)
    state = entangled_haar((2, 2), rng)
    st = random_settings((2, 2), rng)
    with pytest.raises(SettingsError):
        quantum_value(state, replace(st, b=(st.b[0] * 2, st.b[1])))
    with pytest.raises(SettingsError):
        quantum_value(state, replace(st, bbar=(st.b[0], st.bbar[1])))
    with pytest.raises(SettingsError):
        quantum_value(entangled_haar((2, 3), rng), st)


def test_verdict_uses_margin():
    rng = np.random.default_rng(6)
    state = entangled_haar((2, 2), rng)
    frame = magic_frame(state, closest_product(state).pv)
    _, st = plan_bell(frame)
    rep = quantum_value(state, st)
    assert rep.verdict
    assert not quantum_value(state, st, margin=rep.value).verdict


def test_closed_form_refuses_perturbed_plan():
    plan = HardyPlan(v=0, S=0, s=0, y=1.0, z=1j, c={}, e=0j, f=1 + 0j, x={1: 0.1})
    with pytest.raises(StaleClosedFormError):
        closed_form_hardy(None, plan)


def test_hardy_flags():
    rng = np.random.default_rng(9)
    from factories import hardy_frame

    state, frame = hardy_frame(rng)
    _, st = plan_hardy(frame)
    assert hardy_flags(quantum_value(state, st)) == (True, True, True)


def test_policy_search_is_exhaustive_max():
    rng = np.random.default_rng(7)
    state = entangled_haar((3, 3), rng)
    st = random_settings((3, 3), rng)
    best, rep = search_policy(state, st)
    import itertools

    vals = []
    for pa0, pa1, pb0, pb1 in itertools.product((0, 1), repeat=4):
        vals.append(quantum_value(state, replace(st, policy_a=(pa0, pa1),
                                                 policy_b=(pb0, pb1))).value)
    assert abs(rep.value - max(vals)) < 1e-14


def test_maximize_violation_monotone():
    rng = np.random.default_rng(8)
    state = entangled_haar((2, 2), rng)
    frame = magic_frame(state, closest_product(state).pv)
    _, st = plan_bell(frame)
    out, trace = maximize_violation(state, st, max_sweeps=3, restarts=1)
    assert all(b >= a - 1e-15 for a, b in zip(trace, trace[1:]))
    assert quantum_value(state, out).value >= quantum_value(state, st).value - 1e-15
