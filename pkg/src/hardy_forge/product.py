"""Closest product state by alternating maximization with multistart."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .statekit import (
    ProductVector,
    PureState,
    canonical_phase,
    contract_bras,
    random_unit_vector,
    reduced_density,
)

log = logging.getLogger(__name__)

CERTIFY_RESIDUAL = 1e-8
TIE_TOL = 1e-12


class EntanglementVerdictError(RuntimeError):
    """The overlap criterion and the collection criterion disagree."""


def default_restarts(n: int) -> int:
    return 16 + 8 * n


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("HARDY_FORGE_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ClosestProductResult:
    pv: ProductVector
    overlap: float
    restarts_used: int
    residuals: tuple[float, ...]
    certified: bool
    iterations: int
    history: tuple[float, ...] = field(default=(), repr=False)


def _conditional(tensor, factors, k):
    return contract_bras(tensor, {j: f for j, f in enumerate(factors) if j != k})


def tensor_residuals(tensor: np.ndarray, factors) -> list[float]:
    out = []
    for k, p in enumerate(factors):
        chi = _conditional(tensor, factors, k)
        out.append(float(np.linalg.norm(chi - p * np.vdot(p, chi))))
    return out


def _batch_conditional(tensor, F, k):
    """Conditional vectors at party ``k`` for a batch of product vectors, shape ``(R, d_k)``."""
    n = tensor.ndim
    out = np.broadcast_to(tensor, (F[0].shape[0],) + tensor.shape)
    for j in reversed(range(n)):
        if j != k:
            out = np.einsum("r...i,ri->r...", np.moveaxis(out, j + 1, -1), F[j].conj())
    return out


def _batch_residuals(tensor, F):
    res = np.zeros(F[0].shape[0])
    for k, p in enumerate(F):
        chi = _batch_conditional(tensor, F, k)
        par = np.einsum("ri,ri->r", p.conj(), chi)
        res = np.maximum(res, np.linalg.norm(chi - p * par[:, None], axis=1))
    return res


def alternate_batch(tensor: np.ndarray, starts, max_iters: int = 2000, tol: float = 1e-12,
                    residual_target: float = 1e-14):
    """Alternating maximization run on several starting product vectors at once.

    Each run sweeps ``p_k <- chi_k / |chi_k|`` over the parties.  Once its sweep gain is below
    ``tol`` the overlap no longer resolves progress, so the run keeps sweeping on the
    stationarity residual until that reaches ``residual_target`` (relative to the overlap) or
    stops shrinking for three sweeps.  Returns a list of
    ``(factors, overlap, sweeps, history, converged)``, one per start; ``history`` holds the
    overlap after every single-party update.
    """
    tensor = np.asarray(tensor, dtype=complex)
    n = tensor.ndim
    R = len(starts)
    F = [np.array([np.asarray(s[k], dtype=complex) for s in starts]) for k in range(n)]
    F = [f / np.linalg.norm(f, axis=1, keepdims=True) for f in F]
    overlap = np.zeros(R)
    prev = np.full(R, -1.0)
    last_res = np.full(R, np.inf)
    stalls = np.zeros(R, dtype=int)
    active = np.ones(R, dtype=bool)
    converged = np.zeros(R, dtype=bool)
    sweeps = np.full(R, max_iters)
    history = []
    for sweep in range(1, max_iters + 1):
        idx = np.flatnonzero(active)
        sub = [f[idx] for f in F]
        for k in range(n):
            chi = _batch_conditional(tensor, sub, k)
            nrm = np.linalg.norm(chi, axis=1)
            # a start orthogonal to the state leaves chi = 0; keep the old factor then
            ok = nrm > 0
            sub[k][ok] = chi[ok] / nrm[ok, None]
            overlap[idx[ok]] = nrm[ok]
            history.append(overlap.copy())
        for k in range(n):
            F[k][idx] = sub[k]
        flat = idx[overlap[idx] - prev[idx] < tol]
        if flat.size:
            res = _batch_residuals(tensor, [f[flat] for f in F])
            done = res <= residual_target * np.maximum(overlap[flat], 1e-300)
            stalls[flat] = np.where(res >= last_res[flat], stalls[flat] + 1, 0)
            done |= stalls[flat] >= 3
            last_res[flat] = np.minimum(res, last_res[flat])
            finished = flat[done]
            active[finished] = False
            converged[finished] = True
            sweeps[finished] = sweep
        prev[idx] = overlap[idx]
        if not active.any():
            break
    hist = np.array(history) if history else np.zeros((0, R))
    return [
        ([F[k][r].copy() for k in range(n)], float(overlap[r]), int(sweeps[r]),
         tuple(hist[: sweeps[r] * n, r]), bool(converged[r]))
        for r in range(R)
    ]


def alternate(tensor: np.ndarray, factors, max_iters: int = 2000, tol: float = 1e-12,
              residual_target: float = 1e-14):
    """Single-start version of :func:`alternate_batch`."""
    return alternate_batch(tensor, [factors], max_iters, tol, residual_target)[0]


def _seed_starts(tensor: np.ndarray):
    """Deterministic starts: largest basis amplitude, local dominant eigenvectors, uniform."""
    dims = tensor.shape
    starts = []
    idx = np.unravel_index(int(np.argmax(np.abs(tensor))), dims)
    starts.append([np.eye(d, dtype=complex)[i] for d, i in zip(dims, idx)])
    eig = []
    for k, d in enumerate(dims):
        mat = np.moveaxis(tensor, k, 0).reshape(d, -1)
        _, v = np.linalg.eigh(mat @ mat.conj().T)
        eig.append(v[:, -1])
    starts.append(eig)
    starts.append([np.ones(d, dtype=complex) for d in dims])
    return starts


def _multistart(tensor, restarts, seed, max_iters, tol, workers):
    starts = _seed_starts(tensor)
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        starts.append([random_unit_vector(d, rng) for d in tensor.shape])

    workers = workers or worker_count()
    if workers > 1 and len(starts) > workers:
        chunks = np.array_split(np.arange(len(starts)), workers)
        with ThreadPoolExecutor(workers) as pool:
            parts = pool.map(
                lambda c: alternate_batch(tensor, [starts[i] for i in c], max_iters, tol), chunks)
            runs = [r for part in parts for r in part]
    else:
        runs = alternate_batch(tensor, starts, max_iters, tol)
    # overlaps equal to rounding are ties; the earliest start wins, deterministic ones first
    top = max(r[1] for r in runs)
    best = next(i for i, r in enumerate(runs) if r[1] >= top - TIE_TOL * top)
    return runs[best], len(runs)


def best_rank_one(tensor: np.ndarray, restarts: int = 8, seed=0, max_iters: int = 2000,
                  tol: float = 1e-12, workers: int | None = None):
    """Best rank-one approximation ``sigma * (x) u_k`` of a tensor.

    Returns ``(factors, sigma, restarts_used, converged)`` with ``sigma = |<(x) u_k|T>|``.
    """
    tensor = np.asarray(tensor, dtype=complex)
    if tensor.ndim == 1:
        nrm = float(np.linalg.norm(tensor))
        return [tensor / nrm], nrm, 1, True
    (factors, overlap, _, _, converged), used = _multistart(
        tensor, restarts, seed, max_iters, tol, workers)
    return factors, overlap, used, converged


def closest_product(state: PureState, restarts: int | None = None, max_iters: int = 2000,
                    tol: float = 1e-12, seed=0, workers: int | None = None) -> ClosestProductResult:
    if restarts is None:
        restarts = default_restarts(state.n)
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    (factors, overlap, iters, history, converged), used = _multistart(
        state.tensor, restarts, seed, max_iters, tol, workers)
    pv = ProductVector(tuple(canonical_phase(f) for f in factors))
    residuals = tuple(stationarity_residuals(state, pv))
    certified = converged and max(residuals) <= CERTIFY_RESIDUAL
    if not certified:
        log.warning("closest product not certified: max residual %.3g", max(residuals))
    return ClosestProductResult(
        pv=pv,
        overlap=float(overlap),
        restarts_used=used,
        residuals=residuals,
        certified=certified,
        iterations=iters,
        history=tuple(history),
    )


def stationarity_residuals(state: PureState, pv: ProductVector) -> list[float]:
    """``|(I - |p_k><p_k|) chi_k|`` per party; all zero exactly at a stationary point."""
    return tensor_residuals(state.tensor, pv.factors)


def is_entangled(state: PureState, result: ClosestProductResult, tol: float = 1e-9,
                 eps_c: float = 1e-9):
    """Overlap test ``Lambda <= 1 - tol``, cross-checked against a nonempty collection.

    Returns ``(verdict, certificate)``.  Raises :class:`EntanglementVerdictError` when the two
    criteria disagree, which usually means the optimizer stopped at a poor local maximum.
    """
    from .magic import collection

    by_overlap = result.overlap <= 1.0 - tol
    members = collection(state, result.pv, eps_c=eps_c)
    by_collection = bool(members)
    cert = {
        "overlap": result.overlap,
        "overlap_tol": tol,
        "collection": sorted(members),
        "eps_c": eps_c,
        "max_residual": max(result.residuals),
    }
    if by_overlap != by_collection:
        raise EntanglementVerdictError(
            f"overlap {result.overlap!r} says entangled={by_overlap} but the collection "
            f"has {len(members)} members"
        )
    return by_overlap, cert


def schmidt_coefficients(state: PureState) -> np.ndarray:
    if state.n != 2:
        raise ValueError("Schmidt coefficients need a bipartite state")
    return np.linalg.svd(state.tensor, compute_uv=False)


__all__ = [
    "ClosestProductResult",
    "EntanglementVerdictError",
    "alternate",
    "best_rank_one",
    "closest_product",
    "default_restarts",
    "is_entangled",
    "reduced_density",
    "stationarity_residuals",
]
