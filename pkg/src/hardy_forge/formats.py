"""JSON files: states, frames, settings, reports.  Complex numbers are ``[re, im]`` pairs."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .settings import BellPlan, HardyPlan, MeasurementSettings
from .statekit import PureState


class FormatError(ValueError):
    pass


def pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def pairs(vec) -> list[list[float]]:
    return [pair(z) for z in np.asarray(vec).reshape(-1)]


def unpair(items) -> np.ndarray:
    try:
        arr = np.array(items, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"expected a list of [re, im] pairs: {exc}") from None
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise FormatError("expected a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def dumps(obj) -> str:
    # float repr is the shortest string that round-trips exactly
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True)


def content_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


# states


def state_to_json(state: PureState) -> dict:
    return {"dims": list(state.dims), "amps": pairs(state.amps)}


def state_from_json(obj) -> tuple[PureState, float]:
    """Parse and normalize; returns the state and the scale factor that was applied."""
    if not isinstance(obj, dict) or "dims" not in obj or "amps" not in obj:
        raise FormatError('state file needs "dims" and "amps"')
    dims = obj["dims"]
    if not isinstance(dims, list) or not all(isinstance(d, int) for d in dims):
        raise FormatError('"dims" must be a list of integers')
    try:
        raw = PureState(tuple(dims), unpair(obj["amps"]))
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    if raw.norm == 0 or not np.isfinite(raw.norm):
        raise FormatError("state has zero or non-finite norm")
    scale = 1.0 / raw.norm
    return raw.normalized(), scale


def read_state(path) -> tuple[PureState, float]:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read state file {path}: {exc}") from None
    return state_from_json(obj)


def write_json(path, obj):
    Path(path).write_text(dumps(obj) + "\n")


# frames


def frame_to_json(frame) -> dict:
    return {
        "dims": list(frame.dims),
        "e0": [pairs(v) for v in frame.e0],
        "e1": [pairs(v) for v in frame.e1],
        "h": {str(mask): pair(frame.h[mask]) for mask in range(1 << frame.n)},
        "m": frame.m,
        "A": frame.A,
        "C": sorted(frame.C),
        "eps_c": frame.eps_c,
    }


# settings


def plan_to_json(plan) -> dict:
    if isinstance(plan, BellPlan):
        return {"kind": "bell", "gamma": plan.gamma, "lambda": plan.lam, "theta": plan.theta,
                "q": plan.q, "r": pair(plan.r)}
    if isinstance(plan, HardyPlan):
        return {"kind": "hardy", "v": plan.v, "S": plan.S, "s": plan.s, "y": plan.y,
                "z": pair(plan.z), "e": pair(plan.e), "f": pair(plan.f),
                "c": {str(k): pair(c) for k, c in plan.c.items()}, "hardy_closed_form": plan.value}
    return {"kind": "none"}


def settings_to_json(settings: MeasurementSettings, A: int | None = None) -> dict:
    parties = [
        {"a": pairs(a), "b": pairs(b), "bbar": pairs(bb), "policy_a": pa, "policy_b": pb}
        for a, b, bb, pa, pb in zip(settings.a, settings.b, settings.bbar,
                                    settings.policy_a, settings.policy_b)
    ]
    return {
        "parties": parties,
        "plan": {
            "scenario": settings.scenario,
            **plan_to_json(settings.plan),
            "A_mask": A,
            "perturbations": {str(k): x for k, x in settings.perturbations.items()},
            "stale": settings.stale,
        },
    }


def settings_from_json(obj) -> MeasurementSettings:
    try:
        parties = obj["parties"]
        a = tuple(unpair(p["a"]) for p in parties)
        b = tuple(unpair(p["b"]) for p in parties)
        bb = tuple(unpair(p["bbar"]) for p in parties)
        pa = tuple(int(p.get("policy_a", 0)) for p in parties)
        pb = tuple(int(p.get("policy_b", 1)) for p in parties)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed settings file: {exc}") from None
    plan = obj.get("plan", {})
    return MeasurementSettings(
        a=a, b=b, bbar=bb, policy_a=pa, policy_b=pb,
        scenario=plan.get("scenario", "custom"),
        perturbations={int(k): v for k, v in plan.get("perturbations", {}).items()},
        stale=bool(plan.get("stale", False)),
    )


def read_settings(path) -> MeasurementSettings:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read settings file {path}: {exc}") from None
    return settings_from_json(obj)


def report_to_json(report_dict: dict, settings_json: dict | None = None,
                   frame_json: dict | None = None) -> dict:
    out = dict(report_dict)
    out["settings_hash"] = content_hash(settings_json) if settings_json is not None else None
    out["frame_hash"] = content_hash(frame_json) if frame_json is not None else None
    out["version"] = __version__
    return out
