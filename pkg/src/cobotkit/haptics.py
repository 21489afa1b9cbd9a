"""Haptic cue rendering for a hand-membrane actuator array.

Contact forces map to per-actuator intensities by cosine projection onto
each actuator's preferred direction, scaled by |f|/f_max and clamped to
[0, 1]: actuators facing the force light up, opposed ones stay dark, so the
cue carries both direction and intensity. A small embedded pattern library
covers event cues (grasp, release, warnings) sampled with zero-order hold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

FINGERTIP = "fingertip"
PALM = "palm"
EDGE = "edge"

DEFAULT_FORCE_SCALE = 5.0  # Newtons mapping to full intensity


@dataclass(frozen=True)
class Actuator:
    actuator_id: str
    position: np.ndarray  # normalized 2D membrane coordinates
    preferred_direction: np.ndarray  # unit 3-vector, hand frame
    region: str = PALM

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(2)
        d = np.asarray(self.preferred_direction, dtype=float).reshape(3)
        n = float(np.linalg.norm(d))
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"actuator {self.actuator_id!r}: preferred direction must be unit-norm")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "preferred_direction", d)
        self.position.setflags(write=False)
        self.preferred_direction.setflags(write=False)


@dataclass(frozen=True)
class ActuatorLayout:
    actuators: tuple

    def __post_init__(self):
        acts = tuple(self.actuators)
        ids = [a.actuator_id for a in acts]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate actuator ids")
        object.__setattr__(self, "actuators", acts)
        dirs = np.array([a.preferred_direction for a in acts])
        pos = np.array([a.position for a in acts])
        dirs.setflags(write=False)
        pos.setflags(write=False)
        object.__setattr__(self, "_directions", dirs)
        object.__setattr__(self, "_positions", pos)

    @property
    def ids(self) -> list:
        return [a.actuator_id for a in self.actuators]

    @property
    def directions(self) -> np.ndarray:
        return self._directions

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    def to_json_dict(self) -> dict:
        return {
            "actuators": [
                {
                    "id": a.actuator_id,
                    "position": list(map(float, a.position)),
                    "preferred_direction": list(map(float, a.preferred_direction)),
                    "region": a.region,
                }
                for a in self.actuators
            ]
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "ActuatorLayout":
        return ActuatorLayout(
            actuators=tuple(
                Actuator(
                    actuator_id=a["id"],
                    position=np.asarray(a["position"], dtype=float),
                    preferred_direction=np.asarray(a["preferred_direction"], dtype=float),
                    region=a.get("region", PALM),
                )
                for a in doc["actuators"]
            )
        )


@dataclass(frozen=True)
class HapticFrame:
    intensities: dict  # actuator id -> [0, 1]
    timestamp: float = 0.0

    def __post_init__(self):
        for aid, v in self.intensities.items():
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"intensity for {aid!r} out of [0,1]: {v}")

    def argmax(self) -> str | None:
        """Id of the strongest actuator; ties broken by id order. None if all zero."""
        best = None
        best_v = 0.0
        for aid in sorted(self.intensities):
            v = self.intensities[aid]
            if v > best_v:
                best, best_v = aid, v
        return best

    def to_wire(self) -> dict:
        return {"intensities": {k: float(v) for k, v in self.intensities.items()}, "t": self.timestamp}


def _norm(v):
    return np.asarray(v, dtype=float) / np.linalg.norm(v)


def default_layout() -> ActuatorLayout:
    """16 actuators: two per fingertip, four palm, two edge.

    Fingertips are densest (matching hand receptivity); preferred directions
    jointly span +-x, +-y, +-z of the hand frame so any force direction
    projects positively onto some actuator.
    """
    fingers = ["thumb", "index", "middle", "ring", "little"]
    fx = [0.15, 0.35, 0.5, 0.65, 0.82]
    fy = [0.55, 0.92, 0.97, 0.92, 0.82]
    tip_dirs = [
        ([0, 0, 1], [1, 0, 0]),
        ([0, 0, 1], [0, 1, 0]),
        ([0, 0, 1], [0, 0, -1]),
        ([0, 0, 1], [0, -1, 0]),
        ([0, 0, 1], [-1, 0, 0]),
    ]
    actuators = []
    for i, name in enumerate(fingers):
        d_a, d_b = tip_dirs[i]
        actuators.append(Actuator(f"{name}_a", [fx[i], fy[i]], _norm(d_a), FINGERTIP))
        actuators.append(Actuator(f"{name}_b", [fx[i], fy[i] - 0.08], _norm(d_b), FINGERTIP))
    palm_dirs = [[1, 1, 1], [-1, 1, 1], [1, -1, 1], [-1, -1, 1]]
    palm_pos = [[0.38, 0.45], [0.62, 0.45], [0.38, 0.25], [0.62, 0.25]]
    for k in range(4):
        actuators.append(Actuator(f"palm_{k}", palm_pos[k], _norm(palm_dirs[k]), PALM))
    actuators.append(Actuator("edge_l", [0.08, 0.3], _norm([1, -1, -1]), EDGE))
    actuators.append(Actuator("edge_r", [0.92, 0.3], _norm([-1, -1, -1]), EDGE))
    return ActuatorLayout(actuators=tuple(actuators))


def render_force_cue(layout: ActuatorLayout, force, f_max: float = DEFAULT_FORCE_SCALE, timestamp: float = 0.0) -> HapticFrame:
    """Directional intensity frame for a hand-frame contact force."""
    if f_max <= 0:
        raise ValueError("f_max must be positive")
    f = np.asarray(force, dtype=float).reshape(3)
    mag = float(np.linalg.norm(f))
    ids = layout.ids
    if mag == 0.0:
        return HapticFrame(intensities=dict.fromkeys(ids, 0.0), timestamp=timestamp)
    scale = min(mag / f_max, 1.0)
    proj = layout.directions @ (f / mag)
    vals = scale * np.maximum(proj, 0.0)
    return HapticFrame(intensities=dict(zip(ids, vals.tolist())), timestamp=timestamp)


@dataclass(frozen=True)
class Pattern:
    name: str
    sample_rate: float  # Hz
    envelopes: dict  # actuator id -> tuple of samples in [0, 1]
    loop: bool = False

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        env = {aid: tuple(float(v) for v in samples) for aid, samples in self.envelopes.items()}
        lengths = {len(s) for s in env.values()}
        if len(lengths) > 1:
            raise ValueError("all envelopes in a pattern must have the same length")
        for aid, samples in env.items():
            if any(not 0.0 <= v <= 1.0 for v in samples):
                raise ValueError(f"envelope for {aid!r} has samples outside [0,1]")
        object.__setattr__(self, "envelopes", env)

    @property
    def duration(self) -> float:
        n = len(next(iter(self.envelopes.values()), ()))
        return n / self.sample_rate


class PatternLibrary:
    def __init__(self, patterns=None):
        self._patterns: dict[str, Pattern] = {p.name: p for p in (patterns or [])}

    def add(self, pattern: Pattern) -> None:
        self._patterns[pattern.name] = pattern

    def names(self) -> list:
        return sorted(self._patterns)

    def get(self, name: str) -> Pattern:
        if name not in self._patterns:
            raise KeyError(f"unknown haptic pattern {name!r}")
        return self._patterns[name]

    def play(self, name: str, t: float) -> HapticFrame:
        return play_pattern(self, name, t)

    def to_json_dict(self) -> dict:
        return {
            "patterns": [
                {
                    "name": p.name,
                    "sample_rate": p.sample_rate,
                    "loop": p.loop,
                    "envelopes": {k: list(v) for k, v in p.envelopes.items()},
                }
                for p in self._patterns.values()
            ]
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "PatternLibrary":
        return PatternLibrary(
            patterns=[
                Pattern(
                    name=p["name"],
                    sample_rate=float(p["sample_rate"]),
                    envelopes={k: tuple(v) for k, v in p["envelopes"].items()},
                    loop=bool(p.get("loop", False)),
                )
                for p in doc.get("patterns", [])
            ]
        )


def play_pattern(lib: PatternLibrary, name: str, t: float) -> HapticFrame:
    """Zero-order-hold sample of a stored pattern at time t.

    One-shot patterns return all zeros past their duration; looping patterns
    wrap around.
    """
    pattern = lib.get(name)
    n = len(next(iter(pattern.envelopes.values()), ()))
    if n == 0:
        return HapticFrame(intensities={}, timestamp=t)
    duration = pattern.duration
    if t < 0:
        t = 0.0
    if t >= duration:
        if not pattern.loop:
            return HapticFrame(intensities=dict.fromkeys(pattern.envelopes, 0.0), timestamp=t)
        t = math.fmod(t, duration)
    idx = min(int(t * pattern.sample_rate), n - 1)
    return HapticFrame(
        intensities={aid: samples[idx] for aid, samples in pattern.envelopes.items()},
        timestamp=t,
    )


def isolate_crosstalk(layout: ActuatorLayout, frame: HapticFrame, attenuation_radius: float) -> HapticFrame:
    """Perceived frame under residual membrane coupling.

    Each actuator reports the max over sources of intensity attenuated by
    exp(-distance/r); coincident actuators couple fully, distant ones
    exponentially little. Used to verify stimulus discriminability.
    """
    if attenuation_radius <= 0:
        raise ValueError("attenuation radius must be positive")
    ids = layout.ids
    intensities = np.array([frame.intensities.get(aid, 0.0) for aid in ids])
    pos = layout.positions
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    coupling = np.exp(-dist / attenuation_radius)
    perceived = (coupling * intensities[None, :]).max(axis=1)
    return HapticFrame(intensities=dict(zip(ids, perceived.tolist())), timestamp=frame.timestamp)


def builtin_patterns(layout: ActuatorLayout | None = None) -> PatternLibrary:
    """Event-cue patterns shipped with the engine."""
    layout = layout or default_layout()
    ids = layout.ids
    tips = [a.actuator_id for a in layout.actuators if a.region == FINGERTIP]
    palms = [a.actuator_id for a in layout.actuators if a.region == PALM]
    rate = 100.0

    def env(group, samples):
        return {aid: tuple(samples) if aid in group else tuple([0.0] * len(samples)) for aid in ids}

    ramp = [i / 49.0 for i in range(50)]
    pulse = [1.0, 1.0, 1.0, 0.0, 0.0] * 4
    buzz = [0.6, 0.0] * 15
    lib = PatternLibrary(
        patterns=[
            Pattern("grasp_confirm", rate, env(tips, pulse)),
            Pattern("release_confirm", rate, env(tips, list(reversed(ramp)))),
            Pattern("approach_ramp", rate, env(palms, ramp)),
            Pattern("warning_buzz", rate, env(ids, buzz), loop=True),
        ]
    )
    return lib


def load_layout(path) -> ActuatorLayout:
    with open(path) as fh:
        return ActuatorLayout.from_json_dict(json.load(fh))


def load_patterns(path) -> PatternLibrary:
    with open(path) as fh:
        return PatternLibrary.from_json_dict(json.load(fh))
