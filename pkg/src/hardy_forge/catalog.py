"""Named example states and the comparisons reported by ``hardy-forge example``."""

from __future__ import annotations

import numpy as np

from .evaluator import quantum_value
from .magic import build_frame, magic_frame
from .product import closest_product
from .settings import (
    YSearch,
    bell_value,
    choose_gamma,
    degeneracy_fix,
    degeneracy_metric,
    hardy_polynomial,
    plan_bell,
    plan_hardy,
)
from .statekit import PureState

NAMES = ("w3", "ghz3", "ghz-n", "mixed5")


def w_state(n: int = 3) -> PureState:
    amps = np.zeros(1 << n, dtype=complex)
    for k in range(n):
        amps[1 << k] = 1
    return PureState((2,) * n, amps).normalized()


def ghz(n: int = 3, weights=(0.5, 0.5)) -> PureState:
    """``sqrt(w0)|0...0> + sqrt(w1)|1...1>``."""
    amps = np.zeros(1 << n, dtype=complex)
    amps[0], amps[-1] = np.sqrt(weights[0]), np.sqrt(weights[1])
    return PureState((2,) * n, amps).normalized()


def mixed5() -> PureState:
    amps = np.zeros(32, dtype=complex)
    for digits in ("00000", "00111", "11111"):
        amps[int(digits, 2)] = 1
    return PureState((2,) * 5, amps).normalized()


def computational_frame(state: PureState, flipped: bool = False):
    e = np.eye(2, dtype=complex)
    e0, e1 = (e[1], e[0]) if flipped else (e[0], e[1])
    return build_frame(state, [e0] * state.n, [e1] * state.n)


def ghz_root(n: int, h_I, h_0) -> complex:
    """``-exp(i pi/(n-1)) (|h_0|/|h_I|)^(2/(n-1))``; ``h_I`` is the closest-product component."""
    return -np.exp(1j * np.pi / (n - 1)) * (abs(h_0) / abs(h_I)) ** (2 / (n - 1))


def _row(name, expected, computed, tol=1e-9):
    if isinstance(expected, bool):
        ok = expected == computed
    else:
        ok = abs(complex(expected) - complex(computed)) <= tol
    return {"quantity": name, "expected": expected, "computed": computed, "ok": bool(ok)}


def example_w3() -> list[dict]:
    state = w_state(3)
    res = closest_product(state)
    frame = magic_frame(state, res.pv)
    gamma, val = choose_gamma(frame)
    _, st = plan_bell(frame, gamma)
    direct = quantum_value(state, st).value
    return [
        _row("overlap", 2 / 3, res.overlap),
        _row("h_I^2", 4 / 9, abs(frame.h_I) ** 2),
        _row("h_A", -1 / 3, frame.h_A),
        _row("gamma=0 value h_I^2/n^2", 4 / 81, bell_value(frame, 0.0)),
        _row("perturbed value > 2/81", True, bool(direct > 2 / 81 and abs(direct - val) < 1e-9
                                                   and min(degeneracy_metric(st)) > 1e-6)),
    ]


def example_ghz(n: int = 3, weights=(0.5, 0.5)) -> list[dict]:
    state = ghz(n, weights)
    frame = magic_frame(state, closest_product(state).pv)
    plan, st = plan_hardy(frame)
    fixed = degeneracy_fix(st, frame, state)
    direct = quantum_value(state, st).value
    z_formula = ghz_root(n, frame.h_I, frame.h_A)
    poly = hardy_polynomial(frame, plan.S, plan.v, plan.y)
    rows = [
        _row("y0", 1.0, plan.y),
        _row("P(z0_formula) = 0", 0.0, np.polyval(poly[::-1], z_formula)),
        _row("closed form = direct", plan.value, direct),
        _row("final value > 0", True, bool(quantum_value(state, fixed).value > 0)),
    ]
    if n == 3 and weights[0] == weights[1]:
        rows.insert(1, _row("z0 in {i, -i}", True, bool(min(abs(plan.z - 1j), abs(plan.z + 1j)) < 1e-9)))
        rows.append(_row("value", 1 / 8, direct))
    else:
        rows.insert(1, _row("z0", z_formula, plan.z))
    return rows


def example_mixed5() -> list[dict]:
    state = mixed5()
    frame = computational_frame(state)
    plan, st = plan_hardy(frame, v=4, config=YSearch())
    direct = quantum_value(state, st).value
    flipped = computational_frame(state, flipped=True)
    _, bst = plan_bell(flipped, 0.0)
    bell_direct = quantum_value(state, bst).value
    fixed = degeneracy_fix(st, frame, state)
    return [
        _row("magic degree (Hardy frame)", 2, frame.m),
        _row("c_k = 0", True, all(abs(c) < 1e-12 for c in plan.c.values())),
        _row("f", 1.0, plan.f),
        _row("e = -z", True, bool(abs(plan.e + plan.z) < 1e-12)),
        _row("z0 = i admissible", True, bool(abs(np.polyval(
            hardy_polynomial(frame, plan.S, plan.v, plan.y)[::-1], 1j)) < 1e-12)),
        _row("Hardy value (3*2^(n-3))^-1", 1 / 12, direct),
        _row("magic degree (flipped frame)", 3, flipped.m),
        _row("Bell value", 1 / 12, bell_direct),
        _row("Bell closed form", 1 / 12, bell_value(flipped, 0.0)),
        _row("repaired Hardy value within 10%", True,
             bool(abs(quantum_value(state, fixed).value - 1 / 12) <= 0.1 / 12)),
    ]


def run_example(name: str, n: int = 4, weights=(0.5, 0.5)) -> list[dict]:
    if name == "w3":
        return example_w3()
    if name == "ghz3":
        return example_ghz(3, weights) + example_ghz(3, (1 / 5, 4 / 5))
    if name == "ghz-n":
        return example_ghz(n, weights)
    if name == "mixed5":
        return example_mixed5()
    raise ValueError(f"unknown example {name!r}; choose from {', '.join(NAMES)}")
