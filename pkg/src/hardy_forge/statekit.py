"""Dense pure states of n parties and the contractions built on them.

Amplitudes are stored flat, party 0 most significant, so the flat index of
``(i_0, ..., i_{n-1})`` is ``sum_k i_k * prod_{j>k} d_j`` (numpy C order).
Parties are 0-based everywhere in the API; a subset of parties is a bitmask
with bit ``k`` set when party ``k`` belongs to it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class PureState:
    dims: tuple[int, ...]
    amps: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 2:
            raise DimensionError("a pure state needs at least two parties")
        if any(d < 2 for d in dims):
            raise DimensionError(f"local dimensions must be >= 2, got {dims}")
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.size != int(np.prod(dims)):
            raise DimensionError(
                f"{amps.size} amplitudes do not fit dims {dims} (need {int(np.prod(dims))})"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> PureState:
        nrm = self.norm
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return PureState(self.dims, self.amps / nrm)

    @classmethod
    def from_tensor(cls, tensor: np.ndarray) -> PureState:
        tensor = np.asarray(tensor, dtype=complex)
        return cls(tensor.shape, tensor.reshape(-1))

    @classmethod
    def basis(cls, dims: Sequence[int], digits: Sequence[int]) -> PureState:
        amps = np.zeros(int(np.prod(dims)), dtype=complex)
        amps[np.ravel_multi_index(tuple(digits), tuple(dims))] = 1.0
        return cls(tuple(dims), amps)


@dataclass(frozen=True)
class ProductVector:
    """One local vector per party; ``|f_0> (x) |f_1> (x) ...``."""

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        factors = []
        for f in self.factors:
            arr = np.array(f, dtype=complex).reshape(-1)
            if not np.all(np.isfinite(arr)):
                raise ValueError("product factor has non-finite entries")
            arr.setflags(write=False)
            factors.append(arr)
        object.__setattr__(self, "factors", tuple(factors))

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.size for f in self.factors)

    def normalized(self) -> ProductVector:
        return ProductVector(tuple(f / np.linalg.norm(f) for f in self.factors))

    def to_state(self) -> PureState:
        out = self.factors[0]
        for f in self.factors[1:]:
            out = np.kron(out, f)
        return PureState(self.dims, out)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def parties_of(mask: int, n: int) -> list[int]:
    return [k for k in range(n) if mask >> k & 1]


def mask_of(parties) -> int:
    mask = 0
    for k in parties:
        mask |= 1 << k
    return mask


def complement(mask: int, n: int) -> int:
    return ~mask & ((1 << n) - 1)


def _check_factor(dims, k, vec):
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    if vec.size != dims[k]:
        raise DimensionError(f"party {k} vector has length {vec.size}, expected {dims[k]}")
    return vec


def contract_bras(tensor: np.ndarray, bras: Mapping[int, np.ndarray]) -> np.ndarray:
    """Apply ``<v_k|`` on every listed axis of ``tensor``; remaining axes keep their order."""
    out = np.asarray(tensor)
    # highest axis first so lower axis numbers stay valid
    for k in sorted(bras, reverse=True):
        out = np.tensordot(out, np.conj(bras[k]), axes=([k], [0]))
    return out


def apply_local(tensor: np.ndarray, ops: Mapping[int, np.ndarray]) -> np.ndarray:
    """Apply a local operator (matrix acting on kets) on each listed axis."""
    out = np.asarray(tensor)
    for k, op in ops.items():
        out = np.moveaxis(np.tensordot(op, out, axes=([1], [k])), 0, k)
    return out


def inner_product(state: PureState, pv: ProductVector) -> complex:
    """``<psi|pv>``, contracted one party at a time."""
    if state.dims != pv.dims:
        raise DimensionError(f"state dims {state.dims} != product vector dims {pv.dims}")
    out = np.conj(state.tensor)
    for f in reversed(pv.factors):
        out = out @ f
    return complex(out)


def conditional_vector(state: PureState, fixed: Mapping[int, np.ndarray], k: int) -> np.ndarray:
    """Unnormalized ``(prod_{j != k} <v_j|) |psi>`` living on party ``k``."""
    missing = set(range(state.n)) - set(fixed) - {k}
    if missing:
        raise ValueError(f"no fixed vector for parties {sorted(missing)}")
    bras = {j: _check_factor(state.dims, j, v) for j, v in fixed.items() if j != k}
    return contract_bras(state.tensor, bras)


def reduced_density(state: PureState, k: int) -> np.ndarray:
    mat = np.moveaxis(state.tensor, k, 0).reshape(state.dims[k], -1)
    return mat @ mat.conj().T


def haar_random_state(dims: Sequence[int], seed=None) -> PureState:
    rng = np.random.default_rng(seed)
    size = int(np.prod(dims))
    amps = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return PureState(tuple(dims), amps / np.linalg.norm(amps))


def haar_random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def orthogonal_complement(vectors: Sequence[np.ndarray], d: int) -> np.ndarray:
    """Columns form an orthonormal basis of the complement of ``span(vectors)``."""
    # null space of the conjugated rows: v with <u|v> = 0 for every listed u
    mat = np.conj(np.array(vectors, dtype=complex).reshape(len(vectors), d))
    _, s, vh = np.linalg.svd(mat)
    rank = int(np.sum(s > 1e-12 * max(1.0, s.max(initial=0.0))))
    return vh[rank:].conj().T


def canonical_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the largest-modulus entry is real and positive."""
    vec = np.asarray(vec, dtype=complex)
    i = int(np.argmax(np.abs(vec)))
    if abs(vec[i]) == 0:
        return vec
    return vec * (abs(vec[i]) / vec[i])
