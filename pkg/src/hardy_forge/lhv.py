"""Classical side of Hardy's inequality by exhaustive enumeration, plus a joint-distribution
oracle for quantum measurements.

A deterministic assignment of ``n`` parties is a ``2n``-bit integer: bit ``k`` is ``a_k`` and
bit ``n + k`` is ``b_k``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .statekit import PureState

MAX_N = 13
CHUNK = 1 << 22


@dataclass(frozen=True)
class ClassicalBound:
    n: int
    max_value: int
    maximizers: int
    witnesses: tuple[int, ...]


def hardy_value(assignment: int, n: int) -> int:
    """``H = a_I - bbar_I - sum_k b_k a_{rest}`` for one assignment."""
    full = (1 << n) - 1
    a = assignment & full
    b = assignment >> n & full
    h = int(a == full) - int(b == 0)
    for k in range(n):
        if b >> k & 1 and (a | 1 << k) == full:
            h -= 1
    return h


def _terms(lo: int, hi: int, n: int):
    idx = np.arange(lo, hi, dtype=np.int64)
    full = (1 << n) - 1
    a = idx & full
    b = (idx >> n) & full
    a_all = a == full
    bbar_all = b == 0
    cross = np.zeros(idx.size, dtype=np.int64)
    for k in range(n):
        cross += ((b >> k) & 1).astype(bool) & ((a | (1 << k)) == full)
    return idx, a_all, bbar_all, cross


def _workers():
    try:
        return max(1, int(os.environ.get("HARDY_FORGE_THREADS", "1")))
    except ValueError:
        return 1


def _check_n(n):
    if not 2 <= n <= MAX_N:
        raise ValueError(f"n must lie in [2, {MAX_N}], got {n}")


def _map_chunks(fn, n):
    total = 1 << (2 * n)
    bounds = [(lo, min(lo + CHUNK, total)) for lo in range(0, total, CHUNK)]
    workers = _workers()
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda bd: fn(*bd), bounds))
    return [fn(*bd) for bd in bounds]


@lru_cache(maxsize=None)
def classical_max(n: int, witnesses: int = 16) -> ClassicalBound:
    """Exact maximum of H over all ``4**n`` deterministic assignments."""
    _check_n(n)

    def chunk(lo, hi):
        idx, a_all, bbar_all, cross = _terms(lo, hi, n)
        h = a_all.astype(np.int64) - bbar_all - cross
        top = int(h.max())
        hits = idx[h == top]
        return top, hits.size, hits[:witnesses]

    parts = _map_chunks(chunk, n)
    top = max(p[0] for p in parts)
    count = sum(p[1] for p in parts if p[0] == top)
    wit = np.concatenate([p[2] for p in parts if p[0] == top])[:witnesses]
    return ClassicalBound(n, top, int(count), tuple(int(w) for w in wit))


def contextual_impossibility(n: int) -> bool:
    """True when no assignment has ``a_I = 1``, ``bbar_I = 0`` and every ``b_k a_rest = 0``."""
    _check_n(n)

    def chunk(lo, hi):
        _, a_all, bbar_all, cross = _terms(lo, hi, n)
        return bool(np.any(a_all & ~bbar_all & (cross == 0)))

    return not any(_map_chunks(chunk, n))


def logical_chain(n: int) -> bool:
    """The three-step argument on symbols: ``a_I = 1`` forces ``b_k = 0`` hence ``bbar_I = 1``."""
    a = [1] * n  # a_I = 1 forces every a_k = 1
    # b_k a_rest = 0 with a_rest = 1 forces b_k = 0
    b = [0 if all(a[j] for j in range(n) if j != k) else None for k in range(n)]
    bbar_I = int(all(bk == 0 for bk in b))
    return bbar_I == 1


# joint distributions


@dataclass(frozen=True)
class JointDistribution:
    """``table[s, o]``: probability of outcome string ``o`` under setting string ``s``.

    Bit ``k`` of ``s`` set means party ``k`` measures ``b``; ``o`` is flat with party 0 most
    significant, outcome 1 meaning ``a_k = 1`` or ``b_k = 1``.
    """

    n: int
    table: np.ndarray

    def prob(self, setting: int, outcomes) -> float:
        return float(self.table[setting, np.ravel_multi_index(tuple(outcomes), (2,) * self.n)])

    def normalization_residual(self) -> float:
        return float(np.max(np.abs(self.table.sum(axis=1) - 1)))

    def no_signaling_residual(self) -> float:
        n = self.n
        t = self.table.reshape((1 << n,) + (2,) * n)
        worst = 0.0
        for k in range(n):
            marg = t.sum(axis=1 + k)
            for s in range(1 << n):
                if s >> k & 1:
                    worst = max(worst, float(np.max(np.abs(marg[s] - marg[s ^ 1 << k]))))
        return worst

    def marginal(self, setting: int, k: int) -> np.ndarray:
        n = self.n
        t = self.table[setting].reshape((2,) * n)
        return t.sum(axis=tuple(j for j in range(n) if j != k))

    def hardy_terms(self):
        n = self.n
        ones, zeros = (1,) * n, (0,) * n
        p_a = self.prob(0, ones)
        p_bb = self.prob((1 << n) - 1, zeros)
        p_x = tuple(self.prob(1 << k, ones) for k in range(n))
        return p_a, p_bb, p_x


def _outcome_basis(settings, k: int, which: str):
    """A unitary whose columns are eigenvectors of the measurement, plus their outcome labels."""
    d = settings.dims[k]
    b, bb = settings.b[k], settings.bbar[k]
    comp = np.eye(d) - np.outer(b, b.conj()) - np.outer(bb, bb.conj())
    w, v = np.linalg.eigh(comp)
    qcols = v[:, w > 0.5]
    if which == "b":
        cols = [bb, b] + list(qcols.T)
        labels = [0, 1] + [settings.policy_b[k]] * qcols.shape[1]
    else:
        a = settings.a[k]
        # a lies in span{b, bbar}; its partner in that plane is the other rank-one outcome
        c0, c1 = np.vdot(b, a), np.vdot(bb, a)
        a_perp = -np.conj(c1) * b + np.conj(c0) * bb
        cols = [a_perp, a] + list(qcols.T)
        labels = [0, 1] + [settings.policy_a[k]] * qcols.shape[1]
    return np.column_stack(cols), np.array(labels)


def joint_distribution(state: PureState, settings, max_n: int = 6) -> JointDistribution:
    n = state.n
    if n > max_n:
        raise ValueError(f"joint distribution limited to n <= {max_n}")
    if settings.dims != state.dims:
        raise ValueError(f"settings dims {settings.dims} != state dims {state.dims}")
    bases = {w: [_outcome_basis(settings, k, w) for k in range(n)] for w in ("a", "b")}
    table = np.zeros((1 << n, 1 << n))
    for s in range(1 << n):
        t = state.tensor
        labels = []
        for k in range(n):
            u, lab = bases["b" if s >> k & 1 else "a"][k]
            t = np.moveaxis(np.tensordot(u.conj().T, t, axes=([1], [k])), 0, k)
            labels.append(lab)
        probs = np.abs(t) ** 2
        for k in range(n):
            probs = np.moveaxis(probs, k, 0)
            probs = np.stack([probs[labels[k] == 0].sum(axis=0), probs[labels[k] == 1].sum(axis=0)])
            probs = np.moveaxis(probs, 0, k)
        table[s] = probs.reshape(-1)
    return JointDistribution(n, table)
