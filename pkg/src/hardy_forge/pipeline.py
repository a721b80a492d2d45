"""End-to-end certification: optimizer, frame, settings, evaluation, classical bound."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .evaluator import (
    MARGIN,
    leakage_report,
    quantum_value,
    report_dict,
    search_policy,
)
from .formats import content_hash, frame_to_json, settings_to_json, state_to_json
from .lhv import MAX_N, classical_max
from .magic import EPS_C, FrameError, ProductStateError, magic_frame, validate_magic_frame
from .product import (
    EntanglementVerdictError,
    closest_product,
    default_restarts,
    is_entangled,
)
from .settings import (
    DEGENERACY_TOL,
    SynthesisError,
    bell_value,
    choose_gamma,
    degeneracy_fix,
    degeneracy_metric,
    embed_qudit,
    plan_bell,
    plan_hardy,
)
from .statekit import PureState

log = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_MALFORMED = 1
EXIT_NOT_ENTANGLED = 2
EXIT_FAILED = 3


@dataclass
class Options:
    seed: int = 0
    restarts: int | None = None
    tol: float = 1e-12
    margin: float = MARGIN
    policy_search: bool = False
    max_n: int = MAX_N
    eps_c: float = EPS_C
    entangled_tol: float = 1e-9
    attempts: int = 3


@dataclass
class Construction:
    frame: object
    optimizer: object
    settings: object
    plan: object
    gamma: float | None = None
    closed_form: float | None = None
    diagnostics: dict = field(default_factory=dict)


class NotEntangled(Exception):
    def __init__(self, overlap, certificate):
        super().__init__("state is not entangled")
        self.overlap = overlap
        self.certificate = certificate


def build_frame(state: PureState, options: Options):
    """Closest product plus a validated frame, retrying with more restarts on failure."""
    restarts = options.restarts or default_restarts(state.n)
    problems = []
    for attempt in range(options.attempts):
        res = closest_product(state, restarts=restarts, tol=options.tol,
                              seed=[options.seed, attempt])
        try:
            entangled, cert = is_entangled(state, res, tol=options.entangled_tol,
                                           eps_c=options.eps_c)
        except EntanglementVerdictError as exc:
            problems.append(str(exc))
            restarts *= 2
            continue
        if not entangled:
            raise NotEntangled(res.overlap, cert)
        try:
            frame = magic_frame(state, res.pv, eps_c=options.eps_c, seed=options.seed)
        except ProductStateError:
            raise NotEntangled(res.overlap, cert) from None
        except FrameError as exc:
            problems.append(str(exc))
            restarts *= 2
            continue
        issues = validate_magic_frame(frame)
        if issues:
            problems.append("; ".join(issues))
            restarts *= 2
            continue
        return frame, res
    raise FrameError("no valid frame after retries: " + " | ".join(problems))


def synthesize(state: PureState, frame, options: Options) -> Construction:
    diag = {}
    gamma = None
    if frame.scenario == "bell":
        gamma, _ = choose_gamma(frame)
        plan, settings = plan_bell(frame, gamma)
        closed = bell_value(frame, gamma)
    else:
        plan, settings = plan_hardy(frame)
        closed = plan.value
    settings = embed_qudit(settings, frame)
    fixed = degeneracy_fix(settings, frame, state)
    if fixed is not settings:
        closed = None
        diag["perturbations"] = dict(fixed.perturbations)
    return Construction(frame=frame, optimizer=None, settings=fixed, plan=plan, gamma=gamma,
                        closed_form=closed, diagnostics=diag)


def construct(state: PureState, options: Options | None = None) -> Construction:
    options = options or Options()
    frame, res = build_frame(state, options)
    out = synthesize(state, frame, options)
    out.optimizer = res
    return out


def certify(state: PureState, options: Options | None = None) -> dict:
    """Run the whole construction; returns the certificate as a JSON-ready dict."""
    options = options or Options()
    cert = {
        "version": __version__,
        "seed": options.seed,
        "state_hash": content_hash(state_to_json(state)),
        "dims": list(state.dims),
        "margin": options.margin,
    }
    if state.n > options.max_n:
        cert.update(status="construction-failed", passed=False,
                    diagnostics={"error": f"n = {state.n} exceeds --max-n {options.max_n}"})
        return _finish(cert)
    bound = classical_max(state.n)
    cert["classical_bound"] = {"max_value": bound.max_value, "maximizers": bound.maximizers}
    try:
        con = construct(state, options)
    except NotEntangled as exc:
        cert.update(status="not-entangled", passed=False,
                    frame={"overlap": exc.overlap, "C": exc.certificate["collection"]})
        return _finish(cert)
    except (FrameError, SynthesisError) as exc:
        diag = {"error": str(exc)}
        if isinstance(exc, SynthesisError):
            diag["details"] = _jsonable(exc.diagnostics)
        cert.update(status="construction-failed", passed=False, diagnostics=diag)
        return _finish(cert)

    frame, settings = con.frame, con.settings
    policy_info = None
    if any(d > 2 for d in state.dims) and (options.policy_search or frame.scenario == "hardy"):
        best_settings, best_rep = search_policy(state, settings)
        default_value = quantum_value(state, settings).value
        policy_info = {
            "default_value": default_value,
            "best_value": best_rep.value,
            "best_policy_a": list(best_settings.policy_a),
            "best_policy_b": list(best_settings.policy_b),
            "adopted": bool(options.policy_search),
        }
        if options.policy_search:
            settings = best_settings

    report = quantum_value(state, settings, lhv_bound=bound.max_value, margin=options.margin)
    leak = leakage_report(state, settings)
    deg = degeneracy_metric(settings)
    rdict = report_dict(report, settings)
    rdict["closed_form"] = None if settings.stale else con.closed_form
    rdict["leakage_by_party"] = leak
    frame_json = frame_to_json(frame)
    settings_json = settings_to_json(settings, A=frame.A)
    passed = bool(report.verdict and min(deg) > DEGENERACY_TOL)
    cert.update(
        status="pass" if passed else "no-violation",
        passed=passed,
        scenario=frame.scenario,
        frame={
            "m": frame.m,
            "A": frame.A,
            "overlap": con.optimizer.overlap,
            "max_residual": max(con.optimizer.residuals),
            "eps_c": frame.eps_c,
            "h_I": abs(frame.h_I),
            "h_A": abs(frame.h_A),
            "hash": content_hash(frame_json),
        },
        plan=settings_json["plan"],
        settings=settings_json,
        report=rdict,
        policy_search=policy_info,
    )
    return _finish(cert)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.complexfloating):
        return [float(obj.real), float(obj.imag)]
    return obj


def _finish(cert: dict) -> dict:
    cert = _jsonable(cert)
    cert["certificate_hash"] = content_hash(cert)
    cert["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return cert


def exit_code(cert: dict) -> int:
    return {
        "pass": EXIT_PASS,
        "not-entangled": EXIT_NOT_ENTANGLED,
    }.get(cert["status"], EXIT_FAILED)
