"""Local qubit frames, the coefficients h_alpha, magic degree and magic subset.

A frame picks two orthonormal vectors ``e0_k`` (the closest-product factor) and ``e1_k``
per party.  ``h[mask] = <psi| e0_alpha e1_rest>`` where ``mask`` encodes ``alpha``, the
parties sitting in ``e0``.  ``coeffs`` holds the same numbers conjugated, laid out as an
n-qubit amplitude tensor with local index 0 for ``e0`` and 1 for ``e1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .product import best_rank_one
from .statekit import (
    ProductVector,
    PureState,
    apply_local,
    canonical_phase,
    complement,
    orthogonal_complement,
    parties_of,
    popcount,
    random_unit_vector,
)

EPS_C = 1e-9


class FrameError(RuntimeError):
    pass


class ProductStateError(FrameError):
    """The collection is empty: the state is a product state."""


@dataclass(frozen=True)
class ResidualTensor:
    alpha: int
    tensor: np.ndarray  # axes are the parties outside alpha, in increasing order
    norm: float


@dataclass(frozen=True)
class MagicFrame:
    dims: tuple[int, ...]
    e0: tuple[np.ndarray, ...]
    e1: tuple[np.ndarray, ...]
    coeffs: np.ndarray
    h: np.ndarray
    m: int
    A: int
    C: frozenset
    eps_c: float
    residual_norms: np.ndarray = field(repr=False)
    state: PureState = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    @property
    def h_I(self) -> complex:
        return complex(self.h[self.full])

    @property
    def h_A(self) -> complex:
        return complex(self.h[self.A])

    @property
    def is_qubit(self) -> bool:
        return all(d == 2 for d in self.dims)

    @property
    def scenario(self) -> str:
        return "bell" if self.m == self.n - 2 else "hardy"

    def embed(self, k: int, coords) -> np.ndarray:
        """Map frame coordinates ``(c0, c1)`` of party ``k`` into its full local space."""
        return coords[0] * self.e0[k] + coords[1] * self.e1[k]

    @property
    def projected_state(self) -> PureState:
        """The input locally projected onto ``span{e0_k, e1_k}``; not normalized."""
        ops = {k: np.column_stack([self.e0[k], self.e1[k]]) for k in range(self.n)}
        return PureState.from_tensor(apply_local(self.coeffs, ops))

    @property
    def qubit_state(self) -> PureState:
        """The projected state written in frame coordinates, as an n-qubit state."""
        return PureState.from_tensor(self.coeffs)


def _local_bases(pv: ProductVector):
    """Per party a unitary whose first column is ``p_k``; the rest span its complement."""
    out = []
    for p in pv.factors:
        p = p / np.linalg.norm(p)
        out.append(np.column_stack([p, orthogonal_complement([p], p.size)]))
    return out


def _split(state: PureState, pv: ProductVector) -> np.ndarray:
    """The state in the local bases of :func:`_local_bases`; index 0 is ``p_k``."""
    if state.dims != pv.dims:
        raise ValueError(f"state dims {state.dims} != product vector dims {pv.dims}")
    return apply_local(state.tensor, {k: b.conj().T for k, b in enumerate(_local_bases(pv))})


def block_weights(state: PureState, pv: ProductVector) -> np.ndarray:
    """``|G_alpha|^2`` for every mask ``alpha`` (mask ``I`` gives ``|<p|psi>|^2``)."""
    n = state.n
    w = np.abs(_split(state, pv)) ** 2
    for k in range(n):
        w = np.moveaxis(w, k, 0)
        w = np.stack([w[0], w[1:].sum(axis=0)])
        w = np.moveaxis(w, 0, k)
    out = np.zeros(1 << n)
    for mask in range(1 << n):
        digits = tuple(0 if mask >> k & 1 else 1 for k in range(n))
        out[mask] = w[digits]
    return out


def collection(state: PureState, pv: ProductVector, eps_c: float = EPS_C) -> set[int]:
    """Proper subsets ``alpha`` whose residual tensor is nonzero at threshold ``eps_c``."""
    norms = np.sqrt(block_weights(state, pv))
    full = (1 << state.n) - 1
    scale = eps_c * state.norm
    return {mask for mask in range(full) if norms[mask] > scale}


def residual_tensor(state: PureState, pv: ProductVector, alpha: int) -> ResidualTensor:
    n = state.n
    if alpha == (1 << n) - 1:
        raise ValueError("alpha must be a proper subset of the parties")
    inside = {k: pv.factors[k] for k in parties_of(alpha, n)}
    out = state.tensor
    for k in sorted(inside, reverse=True):
        out = np.tensordot(out, np.conj(inside[k]), axes=([k], [0]))
    rest = parties_of(complement(alpha, n), n)
    ops = {}
    for axis, k in enumerate(rest):
        p = pv.factors[k] / np.linalg.norm(pv.factors[k])
        ops[axis] = np.eye(p.size) - np.outer(p, p.conj())
    out = apply_local(out, ops)
    return ResidualTensor(alpha, out, float(np.linalg.norm(out)))


def _qubit_partner(p: np.ndarray) -> np.ndarray:
    return np.array([-np.conj(p[1]), np.conj(p[0])])


def build_frame(state: PureState, e0, e1, eps_c: float = EPS_C, m=None, A=None) -> MagicFrame:
    """Assemble a frame from explicit local vectors, filling ``h``, ``C``, ``m`` and ``A``.

    ``C`` is always measured against ``e0``; ``m`` and ``A`` default to the largest member and
    the smallest bitmask attaining it.
    """
    n = state.n
    e0 = tuple(np.asarray(v, dtype=complex) for v in e0)
    e1 = tuple(np.asarray(v, dtype=complex) for v in e1)
    pv = ProductVector(e0)
    norms = np.sqrt(block_weights(state, pv))
    full = (1 << n) - 1
    members = frozenset(a for a in range(full) if norms[a] > eps_c * state.norm)
    if m is None:
        m = max((popcount(a) for a in members), default=-1)
    if A is None:
        A = min((a for a in members if popcount(a) == m), default=0)
    ops = {k: np.array([e0[k], e1[k]]).conj() for k in range(n)}
    coeffs = apply_local(state.tensor, ops)
    h = np.zeros(1 << n, dtype=complex)
    for mask in range(1 << n):
        digits = tuple(0 if mask >> k & 1 else 1 for k in range(n))
        h[mask] = np.conj(coeffs[digits])
    return MagicFrame(
        dims=state.dims, e0=e0, e1=e1, coeffs=coeffs, h=h, m=m, A=A, C=members,
        eps_c=eps_c, residual_norms=norms, state=state,
    )


def magic_frame(state: PureState, pv: ProductVector, eps_c: float = EPS_C, seed=0) -> MagicFrame:
    n = state.n
    pv = pv.normalized()
    members = collection(state, pv, eps_c)
    if not members:
        raise ProductStateError("empty collection: the state is a product state")
    m = max(popcount(a) for a in members)
    if m > n - 2:
        raise FrameError(
            f"a subset of size {m} is in the collection; the product vector is not stationary")
    A = min(a for a in members if popcount(a) == m)

    bases = _local_bases(pv)
    split = _split(state, pv)
    outside = parties_of(complement(A, n), n)
    block = split[tuple(0 if A >> k & 1 else slice(1, None) for k in range(n))]
    g_norm = float(np.linalg.norm(block))
    if g_norm <= eps_c * state.norm:
        raise FrameError("residual tensor of the magic subset vanishes")

    e1: list[np.ndarray | None] = [None] * n
    if any(state.dims[k] > 2 for k in outside):
        factors, _, _, _ = best_rank_one(block, seed=seed)
    else:
        factors = [np.ones(1, dtype=complex) for _ in outside]
    for k, u in zip(outside, factors):
        if state.dims[k] == 2:
            e1[k] = _qubit_partner(pv.factors[k])
        else:
            e1[k] = canonical_phase(bases[k][:, 1:] @ u)
    for k in parties_of(A, n):
        p = pv.factors[k]
        if state.dims[k] == 2:
            e1[k] = _qubit_partner(p)
            continue
        q = np.eye(p.size) - np.outer(p, p.conj())
        mat = np.moveaxis(state.tensor, k, 0).reshape(p.size, -1)
        rho = q @ (mat @ mat.conj().T) @ q
        w, v = np.linalg.eigh(rho)
        if w[-1] > (eps_c * state.norm) ** 2:
            e1[k] = canonical_phase(v[:, -1])
        else:
            # no weight off p_k at this party; every orthogonal choice is equivalent
            e1[k] = bases[k][:, 1]
    return build_frame(state, pv.factors, e1, eps_c=eps_c, m=m, A=A)


def validate_magic_frame(frame: MagicFrame, tol: float = 1e-8, samples: int = 3,
                         seed=0) -> list[str]:
    """Every violated frame condition as a message; an empty list means the frame is valid."""
    n, h, m, A = frame.n, frame.h, frame.m, frame.A
    full = frame.full
    issues = []
    for k in range(n):
        gram = np.array([[np.vdot(a, b) for b in (frame.e0[k], frame.e1[k])]
                         for a in (frame.e0[k], frame.e1[k])])
        if not np.allclose(gram, np.eye(2), atol=tol):
            issues.append(f"frame vectors of party {k} are not orthonormal")
    if abs(h[full]) <= tol:
        issues.append("h_I = 0")
    for k in range(n):
        if abs(h[full ^ (1 << k)]) > tol:
            issues.append(f"h_{{k̄}} ≠ 0 for party {k}")
    if not 0 <= m <= n - 2:
        issues.append(f"magic degree m = {m} outside [0, n-2]")
    if popcount(A) != m:
        issues.append(f"|A| = {popcount(A)} differs from m = {m}")
    if A not in frame.C:
        issues.append("magic subset A is not in the collection")
    if abs(h[A]) <= tol:
        issues.append("h_A = 0")
    for size in range(max(m, 0) + 1, n - 1):
        for parties in combinations(range(n), size):
            B = sum(1 << k for k in parties)
            if abs(h[B]) > tol:
                issues.append(f"h_B ≠ 0 for B = {list(parties)} with m < |B| < n")
    if not frame.is_qubit:
        issues.extend(_spot_check_orthogonal(frame, tol, samples, seed))
    return issues


def _spot_check_orthogonal(frame: MagicFrame, tol, samples, seed) -> list[str]:
    """``<psi| p_B phi_rest> = 0`` for random ``phi_k`` orthogonal to ``p_k``, m < |B| < n."""
    rng = np.random.default_rng(seed)
    state, n = frame.state, frame.n
    comp = [orthogonal_complement([p], p.size) for p in frame.e0]
    out = []
    for size in range(max(frame.m, 0) + 1, n):
        for parties in combinations(range(n), size):
            for _ in range(samples):
                factors = [
                    frame.e0[k] if k in parties
                    else comp[k] @ random_unit_vector(comp[k].shape[1], rng)
                    for k in range(n)
                ]
                amp = np.vdot(state.amps, ProductVector(tuple(factors)).to_state().amps)
                if abs(amp) > tol:
                    out.append(f"nonzero overlap with p_B phi_rest for B = {list(parties)}")
                    break
    return out
