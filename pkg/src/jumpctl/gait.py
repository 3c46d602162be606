"""Phase-based gait generator.

A gait is a fixed contact sequence over one cycle of the phase variable
``phi`` in ``[0, 2 pi)``; only the timing (the stepping frequency) is
commanded online. The phase advances by ``2 pi f dt`` every control tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ConfigError

TWO_PI = 2.0 * math.pi
GAIT_NAMES = ("pronking", "bounding", "crawling", "pacing", "trotting", "fly_trotting", "custom")

# wraps landing within this many turns of a cycle boundary count as complete
_WRAP_SNAP = 1e-9


class NotInSwing(ValueError):
    pass


@dataclass(frozen=True)
class GaitConfig:
    """Per-leg stance windows ``[start, end)`` in radians, plus timing bounds."""

    name: str
    stance_windows: tuple
    default_frequency: float = 2.0
    frequency_bounds: tuple = (1.0, 4.0)

    def __post_init__(self):
        windows = tuple(tuple((float(a), float(b)) for a, b in leg) for leg in self.stance_windows)
        object.__setattr__(self, "stance_windows", windows)
        object.__setattr__(self, "frequency_bounds", tuple(float(b) for b in self.frequency_bounds))
        self.validate()

    def validate(self) -> None:
        if self.name not in GAIT_NAMES:
            raise ConfigError("gait.name", f"unknown gait {self.name!r}")
        if len(self.stance_windows) != 4:
            raise ConfigError("gait.stance_windows", "need one window list per leg")
        for i, leg in enumerate(self.stance_windows):
            ordered = sorted(leg)
            for a, b in ordered:
                if not (0.0 <= a < b <= TWO_PI):
                    raise ConfigError(f"gait.stance_windows[{i}]", f"window [{a}, {b}) not inside [0, 2pi)")
            for (_, b0), (a1, _) in zip(ordered, ordered[1:]):
                if a1 < b0:
                    raise ConfigError(f"gait.stance_windows[{i}]", "overlapping windows")
        lo, hi = self.frequency_bounds
        if not 0 < lo <= hi:
            raise ConfigError("gait.frequency_bounds", "require 0 < low <= high")
        if not lo <= self.default_frequency <= hi:
            raise ConfigError("gait.default_frequency", "outside frequency_bounds")

    def clamp_frequency(self, f: float) -> float:
        lo, hi = self.frequency_bounds
        return min(hi, max(lo, float(f)))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "stance_windows": [[list(w) for w in leg] for leg in self.stance_windows],
            "default_frequency": self.default_frequency,
            "frequency_bounds": list(self.frequency_bounds),
        }

    @classmethod
    def from_dict(cls, data: dict, path: str = "gait") -> "GaitConfig":
        if not isinstance(data, dict):
            raise ConfigError(path, "expected a mapping")
        known = {"name", "stance_windows", "default_frequency", "frequency_bounds", "preset"}
        for key in data:
            if key not in known:
                raise ConfigError(f"{path}.{key}", "unknown key")
        data = dict(data)
        preset = data.pop("preset", None)
        if preset is not None:
            base = preset_gait(preset).to_dict()
            base.update(data)
            data = base
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(path, str(exc)) from None


def _windows(*legs) -> tuple:
    return tuple(tuple((a * math.pi, b * math.pi) for a, b in leg) for leg in legs)


def preset_gait(name: str, **overrides) -> GaitConfig:
    """Named contact sequences. Windows are given in units of pi below."""
    half = [(0.0, 1.0)]
    other_half = [(1.0, 2.0)]
    presets = {
        "pronking": _windows(half, half, half, half),
        "bounding": _windows([(0.0, 0.7)], [(0.0, 0.7)], [(0.9, 1.6)], [(0.9, 1.6)]),
        # diagonal pairs FR+RL and FL+RR
        "trotting": _windows(half, other_half, other_half, half),
        "fly_trotting": _windows([(0.0, 0.8)], [(1.0, 1.8)], [(1.0, 1.8)], [(0.0, 0.8)]),
        # lateral pairs FR+RR and FL+RL
        "pacing": _windows(half, other_half, half, other_half),
        # one leg swings per quarter cycle: FR, RL, FL, RR
        "crawling": _windows(
            [(0.5, 2.0)],
            [(0.0, 1.0), (1.5, 2.0)],
            [(0.0, 1.5)],
            [(0.0, 0.5), (1.0, 2.0)],
        ),
        "standing": _windows([(0.0, 2.0)], [(0.0, 2.0)], [(0.0, 2.0)], [(0.0, 2.0)]),
    }
    if name not in presets:
        raise ConfigError("gait.preset", f"unknown preset {name!r}")
    gait_name = "custom" if name == "standing" else name
    return GaitConfig(name=gait_name, stance_windows=presets[name], **overrides)


@dataclass(frozen=True)
class PhaseState:
    """Phase stored as unwrapped turns so the cycle count stays exact."""

    turns: float = 0.0
    stepping_frequency: float = 2.0

    @classmethod
    def from_phase(cls, phi: float, cycle_count: int = 0, stepping_frequency: float = 2.0) -> "PhaseState":
        return cls(turns=cycle_count + phi / TWO_PI, stepping_frequency=stepping_frequency)

    @property
    def cycle_count(self) -> int:
        return int(math.floor(self.turns + _WRAP_SNAP))

    @property
    def phase(self) -> float:
        return TWO_PI * max(0.0, self.turns - self.cycle_count)


def advance_phase(state: PhaseState, f_step: float, dt: float, bounds: tuple | None = None) -> PhaseState:
    """One control tick: ``phi += 2 pi f dt`` with ``f`` clamped to ``bounds``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if bounds is not None:
        f_step = min(bounds[1], max(bounds[0], f_step))
    return PhaseState(turns=state.turns + f_step * dt, stepping_frequency=f_step)


def _in_window(phi: float, window) -> bool:
    a, b = window
    return a <= phi < b


def desired_contact_state(config: GaitConfig, phi: float) -> np.ndarray:
    phi = float(phi) % TWO_PI
    return np.array([any(_in_window(phi, w) for w in leg) for leg in config.stance_windows])


def stance_intervals(config: GaitConfig, leg: int) -> list[tuple[float, float]]:
    """Merged circular stance intervals of a leg as ``(start, length)``."""
    windows = sorted(config.stance_windows[leg])
    merged: list[list[float]] = []
    for a, b in windows:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    if len(merged) > 1 and merged[0][0] == 0.0 and merged[-1][1] == TWO_PI:
        last = merged.pop()
        merged[0] = [last[0], merged[0][1] + TWO_PI]
    return [(a, b - a) for a, b in merged]


def swing_intervals(config: GaitConfig, leg: int) -> list[tuple[float, float]]:
    """Circular complements of the stance intervals, as ``(start, length)``."""
    stance = sorted(stance_intervals(config, leg))
    if not stance:
        return [(0.0, TWO_PI)]
    out = []
    for i, (a, length) in enumerate(stance):
        end = (a + length) % TWO_PI
        nxt = stance[(i + 1) % len(stance)][0]
        gap = (nxt - end) % TWO_PI
        if gap > 0.0:
            out.append((end, gap))
    return out


def swing_progress(config: GaitConfig, phi: float, leg: int) -> float:
    """Fraction of the current swing elapsed: 0 at lift-off, 1 at touchdown."""
    phi = float(phi) % TWO_PI
    for start, length in swing_intervals(config, leg):
        offset = (phi - start) % TWO_PI
        if offset < length:
            return offset / length
    raise NotInSwing(f"leg {leg} is in stance at phase {phi:.6f}")


def estimate_stance_duration(config: GaitConfig, f_step: float, leg: int, phi: float | None = None) -> float:
    """Duration in seconds of the leg's next stance window at frequency ``f_step``.

    Without ``phi`` the first stance interval of the cycle is used.
    """
    if f_step <= 0:
        raise ValueError("f_step must be positive")
    intervals = stance_intervals(config, leg)
    if not intervals:
        return 0.0
    if phi is None:
        width = intervals[0][1]
    else:
        phi = float(phi) % TWO_PI
        width = min(intervals, key=lambda w: (w[0] - phi) % TWO_PI)[1]
    return (width / TWO_PI) / f_step
