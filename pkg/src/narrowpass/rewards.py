"""Reward stack: dense shaping, sparse terminal rewards, and the
personality-gated composition of self and cooperative parts.

Each agent's self-reward is ``r_dense + r_sparse``. Within the interaction
gate (inter-vehicle distance <= 40 m) the composed reward becomes
``alpha * r_dense + r_sparse + beta * sum(other agents' dense rewards)``:
terminal rewards are never scaled by alpha and never shared through beta, so
a vehicle keeps its goal-seeking and collision-avoiding incentives at every
personality. Outside the gate the composed reward is the plain self-reward.
"""

from __future__ import annotations

from dataclasses import dataclass

from .simulator import Status


@dataclass(frozen=True)
class RewardConfig:
    k1: float = 1.0  # dense progress coefficient
    k2: float = 0.1  # dense speed coefficient
    goal_reward: float = 20.0
    collision_penalty: float = -30.0
    offroad_penalty: float = -30.0
    timeout_reward: float = 0.0
    gate_distance: float = 40.0  # m

    def to_dict(self) -> dict:
        return {
            "k1": self.k1,
            "k2": self.k2,
            "goal_reward": self.goal_reward,
            "collision_penalty": self.collision_penalty,
            "offroad_penalty": self.offroad_penalty,
            "timeout_reward": self.timeout_reward,
            "gate_distance": self.gate_distance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RewardConfig":
        return cls(**{k: float(v) for k, v in d.items()})


class PersonalityError(ValueError):
    """alpha/beta outside [0, 1] or not summing to 1."""


@dataclass(frozen=True)
class Personality:
    """Self-weight alpha and cooperation-weight beta, with alpha + beta = 1."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha < 0.0 or self.beta < 0.0:
            raise PersonalityError(f"alpha and beta must be >= 0, got ({self.alpha}, {self.beta})")
        if abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise PersonalityError(f"alpha + beta must equal 1, got {self.alpha + self.beta}")

    @classmethod
    def from_alpha(cls, alpha: float) -> "Personality":
        return cls(alpha=float(alpha), beta=1.0 - float(alpha))


@dataclass(frozen=True)
class RewardBreakdown:
    """Per-step reward components for one agent.

    self_stream and coop_stream are the two training streams; they sum to
    r_total exactly, and r_self = r_dense + r_sparse always holds.
    """

    r_dense: float
    r_sparse: float
    r_self: float
    r_coop: float
    r_total: float
    gated: bool
    self_stream: float
    coop_stream: float


def dense_reward(
    cfg: RewardConfig, prev_progress: float, new_progress: float, speed: float, v_max: float
) -> float:
    """Progress shaping plus a small speed incentive.

    Progress is remaining distance to the goal, so moving forward makes
    (prev - new) positive.
    """
    return cfg.k1 * (prev_progress - new_progress) + cfg.k2 * speed / v_max


_SPARSE_FIELD = {
    Status.RUNNING: None,
    Status.REACH_GOAL: "goal_reward",
    Status.COLLISION: "collision_penalty",
    Status.OFF_ROAD: "offroad_penalty",
    Status.TIMEOUT: "timeout_reward",
}


def sparse_reward(cfg: RewardConfig, status: Status) -> float:
    field = _SPARSE_FIELD[status]
    return 0.0 if field is None else float(getattr(cfg, field))


def compose_reward(
    cfg: RewardConfig,
    personality: Personality,
    r_dense: float,
    r_sparse: float,
    other_dense_sum: float,
    inter_vehicle_distance: float,
) -> RewardBreakdown:
    """Personality-gated composition for one agent at one step.

    ``other_dense_sum`` is the sum of the other agents' dense rewards this
    step; sparse terms are excluded from sharing by design.
    """
    gated = inter_vehicle_distance <= cfg.gate_distance
    if gated:
        self_stream = personality.alpha * r_dense + r_sparse
        coop_stream = personality.beta * other_dense_sum
    else:
        self_stream = r_dense + r_sparse
        coop_stream = 0.0
    return RewardBreakdown(
        r_dense=r_dense,
        r_sparse=r_sparse,
        r_self=r_dense + r_sparse,
        r_coop=coop_stream,
        r_total=self_stream + coop_stream,
        gated=gated,
        self_stream=self_stream,
        coop_stream=coop_stream,
    )


def step_rewards(
    cfg: RewardConfig,
    personalities: tuple[Personality, Personality],
    dense: tuple[float, float],
    sparse: tuple[float, float],
    inter_vehicle_distance: float,
) -> list[RewardBreakdown]:
    """Composed breakdowns for both agents of one step."""
    out = []
    for i in (0, 1):
        out.append(
            compose_reward(
                cfg,
                personalities[i],
                dense[i],
                sparse[i],
                dense[1 - i],
                inter_vehicle_distance,
            )
        )
    return out


@dataclass
class BoundCheckResult:
    ok: bool
    team_dense: float
    coop_parts: list[float]
    violations: list[int]  # agent indices whose coop share exceeds the team sum


def team_reward_bound_check(breakdowns: list[RewardBreakdown]) -> BoundCheckResult:
    """Audit that each agent's cooperative share stays within the step's team
    dense reward. A violation indicates a reward-plumbing bug."""
    team_dense = sum(b.r_dense for b in breakdowns)
    coop_parts = [b.r_coop for b in breakdowns]
    violations = [i for i, c in enumerate(coop_parts) if c > team_dense + 1e-12]
    return BoundCheckResult(
        ok=not violations,
        team_dense=team_dense,
        coop_parts=coop_parts,
        violations=violations,
    )
