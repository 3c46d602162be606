"""Nine-term jumping reward with per-cycle normalisation.

Each step's weighted sum is multiplied by the fraction of a gait cycle the
step covered, so a cycle's total reward does not depend on how long the
cycle lasted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

REWARD_TERMS = (
    "upright",
    "base_height",
    "contact_consistency",
    "foot_slipping",
    "foot_clearance",
    "knee_contact",
    "stepping_frequency",
    "distance_to_goal",
    "out_of_bound_action",
)

DEFAULT_WEIGHTS = {
    "upright": 0.02,
    "base_height": 0.01,
    "contact_consistency": 0.008,
    "foot_slipping": 0.032,
    "foot_clearance": 0.008,
    "knee_contact": 0.064,
    "stepping_frequency": 0.008,
    "distance_to_goal": 0.016,
    "out_of_bound_action": 0.01,
}

# the listed quantities grow with the penalised behaviour for these four
DEFAULT_SIGNS = {
    "upright": 1.0,
    "base_height": 1.0,
    "contact_consistency": 1.0,
    "foot_slipping": -1.0,
    "foot_clearance": 1.0,
    "knee_contact": -1.0,
    "stepping_frequency": 1.0,
    "distance_to_goal": -1.0,
    "out_of_bound_action": -1.0,
}

CLEARANCE_CAP = 0.02
FREQ_CLIP = (1.5, 4.0)


@dataclass(frozen=True, eq=False)
class RewardInputs:
    rotation: np.ndarray  # body-to-world
    base_position: np.ndarray
    contacts: np.ndarray
    desired_contacts: np.ndarray
    foot_velocities: np.ndarray  # world frame, (4, 3)
    foot_heights: np.ndarray  # above ground, (4,)
    knee_contacts: np.ndarray
    f_step: float
    goal: np.ndarray  # world xy
    action_excess: float = 0.0


@dataclass(frozen=True, eq=False)
class RewardBreakdown:
    terms: dict
    weighted: dict
    normalization: float
    total: float
    alive_bonus: float = 0.0

    @property
    def rate(self) -> float:
        """Weighted sum before normalisation (reward per full cycle)."""
        return float(sum(self.weighted.values())) + self.alive_bonus


def reward_terms(inp: RewardInputs) -> dict:
    desired = np.asarray(inp.desired_contacts, dtype=float)
    contacts = np.asarray(inp.contacts, dtype=bool)
    vel = np.asarray(inp.foot_velocities, dtype=float)
    heights = np.asarray(inp.foot_heights, dtype=float)
    return {
        "upright": float(np.asarray(inp.rotation)[2, 2]),
        "base_height": float(inp.base_position[2]),
        "contact_consistency": float(np.sum(contacts == np.asarray(inp.desired_contacts, dtype=bool))),
        "foot_slipping": float(np.sum(desired * np.hypot(vel[:, 0], vel[:, 1]))),
        "foot_clearance": float(np.sum((1.0 - desired) * np.minimum(heights, CLEARANCE_CAP))),
        "knee_contact": float(np.sum(np.asarray(inp.knee_contacts, dtype=float))),
        "stepping_frequency": FREQ_CLIP[0] - float(np.clip(inp.f_step, *FREQ_CLIP)),
        "distance_to_goal": float(np.linalg.norm(np.asarray(inp.base_position[:2]) - np.asarray(inp.goal))),
        "out_of_bound_action": float(inp.action_excess),
    }


def compute_reward(
    inp: RewardInputs,
    normalization: float,
    weights: dict | None = None,
    signs: dict | None = None,
    alive_bonus: float = 0.0,
) -> RewardBreakdown:
    weights = DEFAULT_WEIGHTS if weights is None else weights
    signs = DEFAULT_SIGNS if signs is None else signs
    terms = reward_terms(inp)
    weighted = {name: weights[name] * signs[name] * terms[name] for name in REWARD_TERMS}
    total = normalization * (sum(weighted.values()) + alive_bonus)
    return RewardBreakdown(terms, weighted, normalization, float(total), alive_bonus)


@dataclass
class CycleAccumulator:
    """Splits normalised step rewards across gait-cycle boundaries."""

    totals: list = field(default_factory=list)
    current: float = 0.0

    def add(self, rate: float, turns_before: float, turns_after: float, boundaries: list) -> None:
        """Book ``rate * (turns_after - turns_before)``, closing a cycle at each boundary."""
        start = turns_before
        for boundary in boundaries:
            self.current += rate * max(0.0, boundary - start)
            self.totals.append(self.current)
            self.current = 0.0
            start = boundary
        self.current += rate * max(0.0, turns_after - start)
