"""State, frame and settings generators shared by the test modules."""

from __future__ import annotations

import itertools
from functools import reduce

import numpy as np

from hardy_forge.magic import build_frame
from hardy_forge.settings import MeasurementSettings
from hardy_forge.statekit import (
    PureState,
    apply_local,
    haar_random_state,
    haar_random_unitary,
    popcount,
    random_unit_vector,
)


def kron_all(vectors):
    return reduce(np.kron, vectors)


def dense_operator(ops):
    """Kronecker product of local operators, party 0 leftmost."""
    return reduce(np.kron, ops)


def entangled_haar(dims, rng, tol=1e-6):
    """Haar state; rejects (vanishingly rare) near-product draws by a reduced-purity test."""
    while True:
        state = haar_random_state(dims, seed=rng.integers(2**63))
        t = state.tensor
        pur = [np.linalg.norm(np.moveaxis(t, k, 0).reshape(t.shape[k], -1), 2) ** 2
               for k in range(state.n)]
        if min(pur) < 1 - tol:
            return state


def rotate(state, rng):
    us = {k: haar_random_unitary(d, rng) for k, d in enumerate(state.dims)}
    return PureState.from_tensor(apply_local(state.tensor, us)), us


def hardy_frame(rng, n=None):
    """A random frame with ``m <= n - 3``: ``h`` supported on ``I`` and subsets of size ``<= m``.

    Built in frame coordinates and rotated by random local unitaries, so stationarity holds by
    construction.
    """
    n = n or int(rng.integers(3, 7))
    m = int(rng.integers(0, n - 2))
    full = (1 << n) - 1
    h = np.zeros(1 << n, dtype=complex)
    h[full] = 1.0 + rng.uniform(0, 1)
    small = [a for a in range(full) if popcount(a) <= m]
    top = [a for a in small if popcount(a) == m]
    for a in small:
        if rng.uniform() < 0.6 or a == top[0]:
            h[a] = rng.normal() + 1j * rng.normal()
    t = np.zeros((2,) * n, dtype=complex)
    for mask in range(1 << n):
        digits = tuple(0 if mask >> k & 1 else 1 for k in range(n))
        t[digits] = np.conj(h[mask])
    state = PureState.from_tensor(t).normalized()
    state, us = rotate(state, rng)
    e0 = [us[k][:, 0] for k in range(n)]
    e1 = [us[k][:, 1] for k in range(n)]
    return state, build_frame(state, e0, e1)


def qudit_hardy_state(dims, rng, weight=0.3):
    """Dominant ``|0...0>`` plus random blocks with at most one party on level 0 (so ``m <= 1``)."""
    n = len(dims)
    amps = np.zeros(dims, dtype=complex)
    amps[(0,) * n] = 1.0
    for alpha in [()] + [(k,) for k in range(n)]:
        sl = tuple(0 if k in alpha else slice(1, None) for k in range(n))
        shape = amps[sl].shape
        block = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        amps[sl] = weight * block / np.sqrt(block.size)
    state = PureState.from_tensor(amps).normalized()
    return rotate(state, rng)[0]


def random_settings(dims, rng, policies=True):
    """Random ``b``, ``bbar`` orthonormal and ``a`` inside their span, per party."""
    a, b, bb, pa, pb = [], [], [], [], []
    for d in dims:
        u = haar_random_unitary(d, rng)
        b.append(u[:, 0])
        bb.append(u[:, 1])
        w = random_unit_vector(2, rng)
        a.append(w[0] * u[:, 0] + w[1] * u[:, 1])
        pa.append(int(rng.integers(2)) if policies else 0)
        pb.append(int(rng.integers(2)) if policies else 1)
    return MeasurementSettings(a=tuple(a), b=tuple(b), bbar=tuple(bb),
                               policy_a=tuple(pa), policy_b=tuple(pb))


def dense_hardy_value(state, settings):
    """Hardy value from full ``prod d_k`` dimensional projectors (no tensor contractions)."""
    n = state.n
    psi = state.amps
    proj = []
    for k in range(n):
        a, b, bb = settings.a[k], settings.b[k], settings.bbar[k]
        d = a.size
        q = np.eye(d) - np.outer(b, b.conj()) - np.outer(bb, bb.conj())
        if d == 2:
            q = np.zeros((2, 2))
        pa = np.outer(a, a.conj()) + (q if settings.policy_a[k] == 1 else 0)
        pb1 = np.outer(b, b.conj()) + (q if settings.policy_b[k] == 1 else 0)
        pb0 = np.outer(bb, bb.conj()) + (q if settings.policy_b[k] == 0 else 0)
        proj.append((pa, pb1, pb0))

    def ev(ops):
        return float(np.real(psi.conj() @ dense_operator(ops) @ psi))

    p_a = ev([p[0] for p in proj])
    p_bb = ev([p[2] for p in proj])
    p_x = [ev([proj[j][1] if j == k else proj[j][0] for j in range(n)]) for k in range(n)]
    return p_a, p_bb, p_x, p_a - p_bb - sum(p_x)


def brute_hardy_max(n):
    """Classical maximum by a plain loop over tuples."""
    best = None
    for a in itertools.product((0, 1), repeat=n):
        for b in itertools.product((0, 1), repeat=n):
            val = int(all(a)) - int(not any(b))
            val -= sum(b[k] and all(a[j] for j in range(n) if j != k) for k in range(n))
            best = val if best is None else max(best, val)
    return best


def direct_bbar_overlap(state, frame, S, v, y, z):
    """``<bbar_I(z)|psi>`` from the settings-table kets (unnormalized), embedded in the frame."""
    from hardy_forge.settings import HardyPlan, c_linear, table_coords

    s = popcount(S)
    c = {k: c0 + c1 * z for k, (c0, c1) in c_linear(frame, S, v, y).items()}
    plan = HardyPlan(v=v, S=S, s=s, y=y, z=z, c=c,
                     e=-frame.h_A * y**s * z / frame.h_I, f=frame.h_I * y ** (-s) / frame.h_A)
    _, _, bb = table_coords(frame, plan)
    kets = [bb[k][0] * frame.e0[k] + bb[k][1] * frame.e1[k] for k in range(frame.n)]
    return np.vdot(kron_all(kets), state.amps), plan
