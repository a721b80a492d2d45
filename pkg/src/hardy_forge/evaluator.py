"""Exact quantum value of Hardy's inequality for a state and a set of measurements.

Outcome projectors per party (``Q`` is the complement of ``span{b, bbar}``)::

    a = 1   |a><a|    + Q  if policy_a == 1
    b = 1   |b><b|    + Q  if policy_b == 1
    b = 0   |bb><bb|  + Q  if policy_b == 0

The value is ``P(a_I) - P(bbar_I) - sum_k P(b_k, a_rest)``.  The "subspace" value keeps only
the rank-one parts; whatever the ``Q`` pieces add to each term is reported as leakage.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .settings import MeasurementSettings, degeneracy_metric, hardy_closed_form
from .statekit import ProductVector, PureState, apply_local, inner_product

log = logging.getLogger(__name__)

MARGIN = 1e-9


class SettingsError(ValueError):
    pass


class StaleClosedFormError(RuntimeError):
    pass


@dataclass(frozen=True)
class HardyReport:
    p_aI: float
    p_bbarI: float
    p_cross: tuple[float, ...]
    value: float
    subspace_value: float
    amp_aI: complex
    amp_bbarI: complex
    amp_cross: tuple[complex, ...]
    leak_aI: float
    leak_bbarI: float
    leak_cross: tuple[float, ...]
    lhv_bound: float = 0.0
    margin: float = MARGIN
    closed_form: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def total_leakage(self) -> float:
        return self.leak_bbarI + sum(self.leak_cross)

    @property
    def verdict(self) -> bool:
        return self.value > self.lhv_bound + self.margin


def complement_projector(settings: MeasurementSettings, k: int) -> np.ndarray:
    b, bb = settings.b[k], settings.bbar[k]
    return np.eye(b.size) - np.outer(b, b.conj()) - np.outer(bb, bb.conj())


def check_settings(state: PureState, settings: MeasurementSettings, tol: float = 1e-10):
    if settings.dims != state.dims:
        raise SettingsError(f"settings dims {settings.dims} != state dims {state.dims}")
    for k in range(state.n):
        a, b, bb = settings.a[k], settings.b[k], settings.bbar[k]
        for name, vec in (("a", a), ("b", b), ("bbar", bb)):
            if abs(np.linalg.norm(vec) - 1) > tol:
                raise SettingsError(f"{name} of party {k} is not unit norm")
        if abs(np.vdot(bb, b)) > tol:
            raise SettingsError(f"b and bbar of party {k} are not orthogonal")
        if state.dims[k] > 2:
            q = complement_projector(settings, k)
            if np.linalg.norm(q @ a) > tol:
                raise SettingsError(f"a of party {k} leaves the plane of b and bbar")


def _projectors(settings: MeasurementSettings, k: int):
    """``(Pi_a1, Pi_b1, Pi_b0)`` for party ``k``."""
    a, b, bb = settings.a[k], settings.b[k], settings.bbar[k]
    q = complement_projector(settings, k) if a.size > 2 else np.zeros((a.size, a.size))
    pa = np.outer(a, a.conj()) + (q if settings.policy_a[k] == 1 else 0)
    pb1 = np.outer(b, b.conj()) + (q if settings.policy_b[k] == 1 else 0)
    pb0 = np.outer(bb, bb.conj()) + (q if settings.policy_b[k] == 0 else 0)
    return pa, pb1, pb0


def expectation(state: PureState, ops: dict) -> float:
    """``<psi| (x)_k O_k |psi>`` for local operators ``O_k`` (identity where absent)."""
    out = apply_local(state.tensor, ops)
    return float(np.real(np.vdot(state.tensor, out)))


def quantum_value(state: PureState, settings: MeasurementSettings, lhv_bound: float = 0.0,
                  margin: float = MARGIN) -> HardyReport:
    check_settings(state, settings)
    n = state.n
    proj = [_projectors(settings, k) for k in range(n)]
    p_a = expectation(state, {k: proj[k][0] for k in range(n)})
    p_bb = expectation(state, {k: proj[k][2] for k in range(n)})
    p_x = tuple(
        expectation(state, {j: proj[j][1] if j == k else proj[j][0] for j in range(n)})
        for k in range(n)
    )
    amp_a = inner_product(state, ProductVector(settings.a))
    amp_bb = inner_product(state, ProductVector(settings.bbar))
    amp_x = tuple(
        inner_product(state, ProductVector(
            tuple(settings.b[j] if j == k else settings.a[j] for j in range(n))))
        for k in range(n)
    )
    sub = abs(amp_a) ** 2 - abs(amp_bb) ** 2 - sum(abs(x) ** 2 for x in amp_x)
    return HardyReport(
        p_aI=p_a, p_bbarI=p_bb, p_cross=p_x,
        value=p_a - p_bb - sum(p_x),
        subspace_value=float(sub),
        amp_aI=amp_a, amp_bbarI=amp_bb, amp_cross=amp_x,
        leak_aI=max(p_a - abs(amp_a) ** 2, 0.0),
        leak_bbarI=max(p_bb - abs(amp_bb) ** 2, 0.0),
        leak_cross=tuple(max(p - abs(x) ** 2, 0.0) for p, x in zip(p_x, amp_x)),
        lhv_bound=lhv_bound, margin=margin,
    )


def closed_form_hardy(frame, plan) -> float:
    if any(x != 0 for x in plan.x.values()):
        raise StaleClosedFormError("plan carries perturbations; the closed form no longer applies")
    return hardy_closed_form(frame.h_A, frame.h_I, plan.s, plan.y, plan.z)


def hardy_flags(report: HardyReport, tol: float = 1e-10):
    """``(bbar_zero, cross_zero, a_positive)``."""
    return (
        report.p_bbarI <= tol,
        all(p <= tol for p in report.p_cross),
        report.p_aI > tol,
    )


def leakage_report(state: PureState, settings: MeasurementSettings) -> dict:
    """Leakage per party computed from conditional vectors, independent of :func:`quantum_value`.

    ``cross[k] = |Q_k chi_k|^2`` with ``chi_k`` the state conditioned on ``a_j`` for ``j != k``;
    it enters the cross term when ``policy_b[k] == 1``.  ``aI`` and ``bbarI`` are the gains of
    the first two terms under non-default policies.
    """
    n = state.n
    qs = [complement_projector(settings, k) for k in range(n)]
    cross = []
    for k in range(n):
        if state.dims[k] == 2 or settings.policy_b[k] != 1:
            cross.append(0.0)
            continue
        ops = {j: settings.a[j].conj()[None, :] for j in range(n) if j != k}
        chi = apply_local(state.tensor, ops).reshape(-1)
        # the reshape leaves chi in party k's space since every other axis has length 1
        cross.append(float(np.linalg.norm(qs[k] @ chi) ** 2))

    def _gain(vectors, absorbing):
        # all parties pick |v><v| or Q; subtract the all-rank-one piece
        choices = []
        for k in range(n):
            opts = [np.outer(vectors[k], vectors[k].conj())]
            if state.dims[k] > 2 and absorbing[k]:
                opts.append(qs[k])
            choices.append(opts)
        total = 0.0
        for pick in itertools.product(*(range(len(c)) for c in choices)):
            if any(pick):
                total += expectation(state, {k: choices[k][i] for k, i in enumerate(pick)})
        return total

    gain_a = _gain(settings.a, [p == 1 for p in settings.policy_a])
    gain_bb = _gain(settings.bbar, [p == 0 for p in settings.policy_b])
    return {"cross": cross, "aI": gain_a, "bbarI": gain_bb}


def search_policy(state: PureState, settings: MeasurementSettings, max_n: int = 8):
    """Exhaustive search over complement policies of the parties with ``d_k > 2``."""
    qudits = [k for k, d in enumerate(state.dims) if d > 2]
    if state.n > max_n:
        raise ValueError(f"policy search limited to n <= {max_n}")
    best = None
    for combo in itertools.product((0, 1), repeat=2 * len(qudits)):
        pa, pb = list(settings.policy_a), list(settings.policy_b)
        for i, k in enumerate(qudits):
            pa[k], pb[k] = combo[2 * i], combo[2 * i + 1]
        cand = replace(settings, policy_a=tuple(pa), policy_b=tuple(pb))
        rep = quantum_value(state, cand)
        if best is None or rep.value > best[1].value + 1e-15:
            best = (cand, rep)
    return best


def _local_vectors(params, plane):
    """Map 4 angles to unit vectors ``a`` and ``b`` (plus ``bbar``) inside a party's plane."""
    t, phi, u, chi = params
    e0, e1 = plane
    a = np.cos(t) * e0 + np.exp(1j * phi) * np.sin(t) * e1
    b = np.cos(u) * e0 + np.exp(1j * chi) * np.sin(u) * e1
    bb = -np.exp(-1j * chi) * np.sin(u) * e0 + np.cos(u) * e1
    return a, b, bb


def _angles(vec, plane):
    c0, c1 = np.vdot(plane[0], vec), np.vdot(plane[1], vec)
    return np.arctan2(abs(c1), abs(c0)), np.angle(c1) - np.angle(c0)


def maximize_violation(state: PureState, settings0: MeasurementSettings, tol: float = 1e-10,
                       max_sweeps: int = 20, restarts: int = 3, seed=0):
    """Coordinate ascent on one party's ``(a_k, b_k)`` at a time, inside each party's plane.

    Returns ``(settings, trace)``; the trace of values never decreases.
    """
    rng = np.random.default_rng(seed)
    n = state.n
    current = settings0
    value = quantum_value(state, current).value
    trace = [value]
    planes = [(settings0.b[k], settings0.bbar[k]) for k in range(n)]
    for _ in range(max_sweeps):
        start_value = value
        for k in range(n):
            plane = planes[k]

            def build(params, k=k, plane=plane):
                a, b, bb = _local_vectors(params, plane)
                return replace(
                    current,
                    a=current.a[:k] + (a,) + current.a[k + 1:],
                    b=current.b[:k] + (b,) + current.b[k + 1:],
                    bbar=current.bbar[:k] + (bb,) + current.bbar[k + 1:],
                    stale=True,
                )

            def objective(params):
                return -quantum_value(state, build(params)).value

            x0 = np.array([*_angles(current.a[k], plane), *_angles(current.b[k], plane)])
            starts = [x0] + [rng.uniform(0, 2 * np.pi, 4) for _ in range(restarts)]
            for s in starts:
                res = minimize(objective, s, method="Nelder-Mead",
                               options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 800})
                if -res.fun > value:
                    current = build(res.x)
                    value = -res.fun
        trace.append(value)
        if value - start_value < tol:
            break
    return current, trace


def report_dict(report: HardyReport, settings: MeasurementSettings | None = None) -> dict:
    out = {
        "p_aI": report.p_aI,
        "p_bbarI": report.p_bbarI,
        "p_cross": list(report.p_cross),
        "value": report.value,
        "subspace_value": report.subspace_value,
        "leakage": {
            "aI_gain": report.leak_aI,
            "bbarI": report.leak_bbarI,
            "cross": list(report.leak_cross),
            "total": report.total_leakage,
        },
        "closed_form": report.closed_form,
        "lhv_bound": report.lhv_bound,
        "margin": report.margin,
        "verdict": report.verdict,
    }
    if settings is not None:
        out["degeneracy"] = degeneracy_metric(settings)
    out.update(report.extra)
    return out
