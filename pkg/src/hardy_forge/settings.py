"""Two-setting dichotomic measurements violating Hardy's inequality.

Bell scenario (``m = n - 2``) uses closed forms in an angle ``gamma``; the Hardy scenario
(``m < n - 2``) fixes a real ``y`` and a root ``z`` of the polynomial ``<bbar_I|psi'>``.
Vectors are first written in frame coordinates ``(c0, c1)`` (the coefficients of ``e0_k``
and ``e1_k``) and then embedded into the full local spaces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from . import polyroots
from .magic import MagicFrame
from .statekit import PureState, complement, parties_of, popcount

log = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-6
ADMISSIBLE_DIST = 1e-6
HALVING_CAP = 60

# policy for the part of a party's space outside the frame plane: the outcome it joins
DEFAULT_POLICY_A = 0
DEFAULT_POLICY_B = 1


class SynthesisError(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class BellPlan:
    gamma: float
    lam: float
    theta: float
    q: float
    r: complex


@dataclass(frozen=True)
class HardyPlan:
    v: int
    S: int
    s: int
    y: float
    z: complex
    c: dict
    e: complex
    f: complex
    x: dict = field(default_factory=dict)
    value: float = float("nan")


@dataclass(frozen=True)
class MeasurementSettings:
    """Per party: ``a`` (outcome 1 along it), ``b`` and its orthogonal partner ``bbar``.

    ``policy_a[k]`` / ``policy_b[k]`` name the outcome of the ``a`` / ``b`` measurement that
    absorbs the complement of ``span{b_k, bbar_k}``; irrelevant for qubits.
    ``b_coords`` keeps the unnormalized frame coordinates of ``b`` so that perturbations act
    on the same numbers the construction produced.
    """

    a: tuple
    b: tuple
    bbar: tuple
    policy_a: tuple
    policy_b: tuple
    scenario: str = "custom"
    plan: object = None
    a_coords: tuple = ()
    b_coords: tuple = ()
    perturbations: dict = field(default_factory=dict)
    stale: bool = False

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(v.size for v in self.a)

    def degeneracy(self) -> list[float]:
        return degeneracy_metric(self)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return v / np.linalg.norm(v)


def _partner(b) -> np.ndarray:
    return np.array([-np.conj(b[1]), np.conj(b[0])])


def degeneracy_metric(settings: MeasurementSettings) -> list[float]:
    """``min(|<a|b>|, |<a|bbar>|)`` per party; zero when both settings share a basis."""
    return [
        float(min(abs(np.vdot(a, b)), abs(np.vdot(a, bb))))
        for a, b, bb in zip(settings.a, settings.b, settings.bbar)
    ]


def from_coords(frame: MagicFrame, a_coords, b_coords, bbar_coords, scenario, plan,
                policy_a=None, policy_b=None) -> MeasurementSettings:
    n = frame.n
    a = tuple(frame.embed(k, _unit(a_coords[k])) for k in range(n))
    b = tuple(frame.embed(k, _unit(b_coords[k])) for k in range(n))
    bb = tuple(frame.embed(k, _unit(bbar_coords[k])) for k in range(n))
    return MeasurementSettings(
        a=a, b=b, bbar=bb,
        policy_a=tuple(policy_a or (DEFAULT_POLICY_A,) * n),
        policy_b=tuple(policy_b or (DEFAULT_POLICY_B,) * n),
        scenario=scenario, plan=plan,
        a_coords=tuple(np.asarray(c, dtype=complex) for c in a_coords),
        b_coords=tuple(np.asarray(c, dtype=complex) for c in b_coords),
    )


# Bell scenario


def bell_parameters(frame: MagicFrame):
    ratio = frame.h_A / frame.h_I
    lam = abs(ratio)
    theta = float(np.angle(ratio))
    q = np.sqrt(lam) / (1 + lam)
    r = 1j * np.exp(-0.5j * theta) * np.sqrt(1 - q * q)
    return lam, theta, q, r


def _require_bell(frame):
    if frame.m != frame.n - 2:
        raise SynthesisError(f"Bell scenario needs m = n - 2, got m = {frame.m}, n = {frame.n}")


def plan_bell(frame: MagicFrame, gamma: float = 0.0):
    _require_bell(frame)
    lam, theta, q, r = bell_parameters(frame)
    cg, sg = np.cos(gamma), np.sin(gamma)
    a, b, bb = [], [], []
    for k in range(frame.n):
        a.append(np.array([1, 0], dtype=complex))
        if frame.A >> k & 1:
            b.append(np.array([-sg, cg], dtype=complex))
            bb.append(np.array([cg, sg], dtype=complex))
        else:
            b.append(np.array([q, r], dtype=complex))
            bb.append(np.array([-np.conj(r), q], dtype=complex))
    plan = BellPlan(gamma=float(gamma), lam=float(lam), theta=theta, q=float(q), r=complex(r))
    return plan, from_coords(frame, a, b, bb, "bell", plan)


def bell_value(frame: MagicFrame, gamma: float) -> float:
    """Closed-form Hardy value of the Bell-scenario settings at angle ``gamma``."""
    _require_bell(frame)
    n, m, A, h = frame.n, frame.m, frame.A, frame.h
    lam, theta, q, r = bell_parameters(frame)
    outside = complement(A, n)
    rc = np.conj(r)
    cg, sg = np.cos(gamma), np.sin(gamma)
    amp = -frame.h_I * np.exp(1j * theta) / (1 + lam) * cg**m
    in_a = parties_of(A, n)
    for k in range(1, m + 1):
        for beta_parties in combinations(in_a, m - k):
            beta = sum(1 << j for j in beta_parties)
            term = rc * rc * h[beta | outside] + q * q * h[beta]
            term -= rc * q * sum(h[beta | 1 << v] for v in parties_of(outside, n))
            amp += sg**k * cg ** (m - k) * term
    return float(abs(frame.h_I) ** 2 * (1 - 2 * q * q - (n - 2) * sg * sg) - abs(amp) ** 2)


def choose_gamma(frame: MagicFrame, start: float = np.pi / 16):
    """Largest ``gamma = start / 2**j`` keeping at least half the ``gamma = 0`` violation."""
    _require_bell(frame)
    base = bell_value(frame, 0.0)
    if frame.A == 0:
        return 0.0, base
    floor = max(0.5 * base, np.finfo(float).tiny)
    gamma = start
    for _ in range(HALVING_CAP):
        val = bell_value(frame, gamma)
        _, st = plan_bell(frame, gamma)
        if val >= floor and min(degeneracy_metric(st)) > DEGENERACY_TOL:
            return gamma, val
        gamma /= 2
    raise SynthesisError("no angle found keeping half the violation", {"base": base})


# Hardy scenario


def hardy_closed_form(h_A, h_I, s: int, y: float, z: complex) -> float:
    ys = y**s
    num = abs(ys * h_A * h_I * (1 - z)) ** 2
    den = (1 + y * y) ** s * (abs(h_I) ** 2 + abs(ys * h_A * z) ** 2)
    return float(num / den)


def _require_hardy(frame):
    if frame.m >= frame.n - 2:
        raise SynthesisError(f"Hardy scenario needs m < n - 2, got m = {frame.m}, n = {frame.n}")


def c_linear(frame: MagicFrame, S: int, v: int, y: float) -> dict:
    """``c_k = c0 + c1 z`` for each ``k`` in ``A``, returned as ``{k: (c0, c1)}``."""
    n, A, h = frame.n, frame.A, frame.h
    s = popcount(S)
    out = {}
    for k in parties_of(A, n):
        rest = A & ~(1 << k)
        c0 = sum(h[rest | 1 << kp] for kp in parties_of(S, n)) / (y * frame.h_A)
        c0 += h[rest] / frame.h_A
        c1 = -(y**s) * h[rest | 1 << v] / frame.h_I
        out[k] = (complex(c0), complex(c1))
    return out


def hardy_factors(frame: MagicFrame, S: int, v: int, y: float):
    """Per party the bra weights of ``<bbar_k|`` on ``e0``/``e1`` as linear polynomials in z."""
    s = popcount(S)
    f = frame.h_I * y ** (-s) / frame.h_A
    cl = c_linear(frame, S, v, y)
    out = []
    for k in range(frame.n):
        if k == v:
            out.append(((f, 0j), (1 + 0j, 0j)))
        elif S >> k & 1:
            out.append(((0j, -y + 0j), (1 + 0j, 0j)))
        else:
            out.append(((1 + 0j, -1 + 0j), cl[k]))
    return out


def hardy_polynomial(frame: MagicFrame, S: int, v: int, y: float) -> np.ndarray:
    """Ascending coefficients of ``P(z) = <bbar_I(z)|psi'>``."""
    if y == 0:
        raise SynthesisError("y must be nonzero")
    n = frame.n
    # leading axis carries polynomial coefficients
    t = frame.coeffs[None, ...]
    for k, (w0, w1) in reversed(list(enumerate(hardy_factors(frame, S, v, y)))):
        x0 = np.take(t, 0, axis=k + 1)
        x1 = np.take(t, 1, axis=k + 1)
        grown = np.zeros((t.shape[0] + 1,) + x0.shape[1:], dtype=complex)
        for x, w in ((x0, w0), (x1, w1)):
            grown[:-1] += w[0] * x
            grown[1:] += w[1] * x
        t = grown
    return t.reshape(-1)[: n + 1]


@dataclass
class YSearch:
    ladder: tuple = (1.0, 2.0, 0.5, -1.0, 1.5, 2 / 3, -2.0, -0.5, 3.0, 1 / 3, -1.5, -2 / 3,
                     2.5, 0.4, -3.0, -1 / 3)
    random_tries: int = 64
    seed: int = 0
    tie_rel: float = 1e-9


def _select_root(candidates):
    """Highest value; ties by smallest principal argument, then smallest modulus."""
    top = max(val for _, val in candidates)
    tied = [(z, val) for z, val in candidates if val >= top * (1 - 1e-9)]
    tied.sort(key=lambda zv: (round(float(np.angle(zv[0])), 9), abs(zv[0])))
    return tied[0]


def find_y_z(frame: MagicFrame, S: int, v: int, config: YSearch | None = None):
    _require_hardy(frame)
    config = config or YSearch()
    s = popcount(S)
    rng = np.random.default_rng(config.seed)
    ladder = list(config.ladder)
    ladder += [float(np.sign(rng.uniform(-1, 1)) * np.exp(rng.uniform(-2, 2)))
               for _ in range(config.random_tries)]
    tried = []
    for y in ladder:
        coeffs = hardy_polynomial(frame, S, v, y)
        if np.max(np.abs(coeffs)) <= 1e-14 * max(abs(frame.h_I), 1e-300):
            # every z is a root
            zs = np.array([-1.0 + 0j])
        else:
            zs = polyroots.roots(coeffs)
        admissible = [z for z in zs if abs(z - 1) > ADMISSIBLE_DIST]
        values = [hardy_closed_form(frame.h_A, frame.h_I, s, y, z) for z in admissible]
        tried.append({"y": y, "roots": [complex(z) for z in zs], "values": values})
        good = [(z, val) for z, val in zip(admissible, values) if val > 0]
        if good:
            z, val = _select_root(good)
            diag = {"method": polyroots.METHOD, "tried": tried, "value": val}
            return y, complex(z), diag
    raise SynthesisError("y ladder exhausted without an admissible root", {"tried": tried})


def table_coords(frame: MagicFrame, plan: HardyPlan):
    """Unnormalized frame coordinates ``(a, b, bbar)`` of every party, per the settings table."""
    n, z, y = frame.n, plan.z, plan.y
    a, b, bb = [], [], []
    for k in range(n):
        if k == plan.v:
            a.append([plan.e, 1])
            b.append([-1, plan.f])
            bb.append([np.conj(plan.f), 1])
        elif plan.S >> k & 1:
            a.append([1, y])
            b.append([1, y * z])
            bb.append([-y * np.conj(z), 1])
        else:
            ck = plan.c[k]
            a.append([1, 0])
            b.append([ck, z - 1])
            bb.append([1 - np.conj(z), np.conj(ck)])
    arr = lambda rows: [np.array(r, dtype=complex) for r in rows]  # noqa: E731
    return arr(a), arr(b), arr(bb)


def _hardy_plan_for(frame, v, config):
    n = frame.n
    S = complement(frame.A, n) & ~(1 << v)
    s = popcount(S)
    y, z, diag = find_y_z(frame, S, v, config)
    c = {k: c0 + c1 * z for k, (c0, c1) in c_linear(frame, S, v, y).items()}
    e = -frame.h_A * y**s * z / frame.h_I
    f = frame.h_I * y ** (-s) / frame.h_A
    plan = HardyPlan(v=v, S=S, s=s, y=y, z=z, c=c, e=complex(e), f=complex(f),
                     value=hardy_closed_form(frame.h_A, frame.h_I, s, y, z))
    return plan, diag


def plan_hardy(frame: MagicFrame, v=None, config: YSearch | None = None):
    """Hardy-scenario settings; ``v=None`` tries every party outside ``A`` and keeps the best."""
    _require_hardy(frame)
    n = frame.n
    candidates = parties_of(complement(frame.A, n), n) if v is None else [v]
    best, failures = None, {}
    for cand in candidates:
        try:
            plan, diag = _hardy_plan_for(frame, cand, config)
        except SynthesisError as exc:
            failures[cand] = exc.diagnostics
            continue
        if best is None or plan.value > best[0].value:
            best = (plan, diag)
    if best is None:
        raise SynthesisError("no party v yields an admissible root", failures)
    plan, _ = best
    a, b, bb = table_coords(frame, plan)
    return plan, from_coords(frame, a, b, bb, "hardy", plan)


# repairs and embedding


def degeneracy_fix(settings: MeasurementSettings, frame: MagicFrame, state: PureState,
                   start: float = 0.1) -> MeasurementSettings:
    """Shift ``b_k0 -> b_k0 + x`` on degenerate parties until the violation survives."""
    from .evaluator import quantum_value

    bad = [k for k, d in enumerate(degeneracy_metric(settings)) if d <= DEGENERACY_TOL]
    if not bad:
        return settings
    # a qudit value already <= 0 (leakage) cannot be kept positive; only nondegeneracy is asked
    need_positive = quantum_value(state, settings).value > 0
    x = start
    for _ in range(HALVING_CAP):
        b = list(settings.b_coords)
        for k in bad:
            b[k] = b[k] + np.array([x, 0])
        bb = [_partner(_unit(c)) if k in bad else None for k, c in enumerate(b)]
        new = replace(
            settings,
            b=tuple(frame.embed(k, _unit(b[k])) if k in bad else settings.b[k]
                    for k in range(frame.n)),
            bbar=tuple(frame.embed(k, bb[k]) if k in bad else settings.bbar[k]
                       for k in range(frame.n)),
            b_coords=tuple(b),
            perturbations={k: x for k in bad},
            stale=True,
        )
        if min(degeneracy_metric(new)) > DEGENERACY_TOL and (
                not need_positive or quantum_value(state, new).value > 0):
            log.info("degeneracy repaired on parties %s with x = %g", bad, x)
            return new
        x /= 2
    raise SynthesisError("degeneracy could not be repaired", {"parties": bad})


def embed_qudit(settings: MeasurementSettings, frame: MagicFrame = None,
                policy=None) -> MeasurementSettings:
    """Attach complement policies; ``policy`` is ``(policy_a, policy_b)`` or ``None`` for the
    default (complement joins outcome 0 of ``a`` and outcome 1 of ``b``)."""
    n = settings.n
    if policy is None:
        pa, pb = (DEFAULT_POLICY_A,) * n, (DEFAULT_POLICY_B,) * n
    else:
        pa, pb = (tuple(int(x) for x in p) for p in policy)
    if frame is not None and frame.dims != settings.dims:
        raise ValueError("frame and settings dimensions differ")
    return replace(settings, policy_a=pa, policy_b=pb)
