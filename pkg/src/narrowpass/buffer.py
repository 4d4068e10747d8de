"""On-policy rollout storage and generalized advantage estimation.

Each agent gets its own buffer holding dual reward streams (self and
cooperative) and dual value estimates. Advantages are assembled per episode
segment once its terminal (or truncation bootstrap) is known. GAE is linear
in (rewards, values), which is what makes summing per-stream advantages
equivalent to running GAE on the combined stream with the summed critic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Variant(Enum):
    IPPO = "ippo"  # per-agent critic on the agent's own observation
    MAPPO = "mappo"  # one critic on the joint observation
    PEMN = "pemn"  # two critics per agent: self stream + cooperative stream


class ContractViolation(ValueError):
    pass


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    bootstrap: float,
    dones: np.ndarray,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Lambda-weighted advantages and return targets over one stream.

    delta_t = r_t + gamma*(1-done_t)*V_{t+1} - V_t, with V_T = bootstrap
    (pass 0 for a true terminal); A_t = delta_t + gamma*lam*(1-done_t)*A_{t+1};
    returns_t = A_t + V_t.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    if not (len(rewards) == len(values) == len(dones)):
        raise ContractViolation(
            f"stream lengths differ: rewards {len(rewards)}, values {len(values)}, dones {len(dones)}"
        )
    T = len(rewards)
    advantages = np.zeros(T)
    next_value = bootstrap
    next_adv = 0.0
    for t in range(T - 1, -1, -1):
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * live * next_value - values[t]
        next_adv = delta + gamma * lam * live * next_adv
        advantages[t] = next_adv
        next_value = values[t]
    return advantages, advantages + values


@dataclass
class Segment:
    """A contiguous slice of one episode as seen by one agent."""

    start: int
    stop: int
    bootstrap_self: float = 0.0
    bootstrap_coop: float = 0.0


@dataclass
class RolloutBuffer:
    """Transition arrays for one agent, filled during collection.

    reward_self_stream + reward_coop_stream equals the composed per-step
    reward exactly; value_coop stays zero for non-decomposed variants.
    """

    obs_dim: int
    joint_obs_dim: int
    obs_self: list = field(default_factory=list)
    obs_other: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    logprobs: list = field(default_factory=list)
    reward_self_stream: list = field(default_factory=list)
    reward_coop_stream: list = field(default_factory=list)
    value_self: list = field(default_factory=list)
    value_coop: list = field(default_factory=list)
    dones: list = field(default_factory=list)
    statuses: list = field(default_factory=list)
    segments: list[Segment] = field(default_factory=list)
    _open_start: int | None = None

    def __len__(self) -> int:
        return len(self.actions)

    def add(
        self,
        obs_self: np.ndarray,
        obs_other: np.ndarray,
        action: np.ndarray,
        logprob: float,
        reward_self_stream: float,
        reward_coop_stream: float,
        value_self: float,
        value_coop: float,
        done: bool,
        status,
    ) -> None:
        if self._open_start is None:
            self._open_start = len(self.actions)
        self.obs_self.append(obs_self)
        self.obs_other.append(obs_other)
        self.actions.append(action)
        self.logprobs.append(logprob)
        self.reward_self_stream.append(reward_self_stream)
        self.reward_coop_stream.append(reward_coop_stream)
        self.value_self.append(value_self)
        self.value_coop.append(value_coop)
        self.dones.append(done)
        self.statuses.append(status)
        if done:
            self.segments.append(Segment(self._open_start, len(self.actions)))
            self._open_start = None

    def close_segment(self, bootstrap_self: float, bootstrap_coop: float) -> None:
        """Truncate the open episode slice at the rollout boundary."""
        if self._open_start is not None:
            self.segments.append(
                Segment(self._open_start, len(self.actions), bootstrap_self, bootstrap_coop)
            )
            self._open_start = None

    def merge(self, other: "RolloutBuffer") -> None:
        if other._open_start is not None:
            raise ContractViolation("cannot merge a buffer with an open segment")
        offset = len(self.actions)
        for name in (
            "obs_self",
            "obs_other",
            "actions",
            "logprobs",
            "reward_self_stream",
            "reward_coop_stream",
            "value_self",
            "value_coop",
            "dones",
            "statuses",
        ):
            getattr(self, name).extend(getattr(other, name))
        for seg in other.segments:
            self.segments.append(
                Segment(seg.start + offset, seg.stop + offset, seg.bootstrap_self, seg.bootstrap_coop)
            )

    def clear(self) -> None:
        for name in (
            "obs_self",
            "obs_other",
            "actions",
            "logprobs",
            "reward_self_stream",
            "reward_coop_stream",
            "value_self",
            "value_coop",
            "dones",
            "statuses",
        ):
            getattr(self, name).clear()
        self.segments.clear()
        self._open_start = None


@dataclass
class AdvantageBatch:
    """Flat training arrays for one agent's PPO update."""

    obs_self: np.ndarray
    obs_other: np.ndarray
    actions: np.ndarray
    logprobs: np.ndarray
    advantages: np.ndarray
    returns_self: np.ndarray  # self-stream targets (total-stream for IPPO/MAPPO)
    returns_coop: np.ndarray | None  # cooperative-stream targets, decomposed variant only


def decomposed_advantage(
    buffer: RolloutBuffer, variant: Variant, gamma: float, lam: float
) -> AdvantageBatch:
    """Advantages for the decomposed-critic variant: per-stream GAE, summed."""
    if variant is not Variant.PEMN:
        raise ContractViolation(f"decomposed advantage requires the PEMN variant, got {variant.value}")
    return _assemble(buffer, variant, gamma, lam)


def advantage_batch(
    buffer: RolloutBuffer, variant: Variant, gamma: float, lam: float
) -> AdvantageBatch:
    """Variant-appropriate advantages and value targets for one buffer."""
    return _assemble(buffer, variant, gamma, lam)


def _assemble(buffer: RolloutBuffer, variant: Variant, gamma: float, lam: float) -> AdvantageBatch:
    if buffer._open_start is not None:
        raise ContractViolation("buffer has an open segment; close it before computing advantages")
    n = len(buffer)
    r_self = np.asarray(buffer.reward_self_stream)
    r_coop = np.asarray(buffer.reward_coop_stream)
    v_self = np.asarray(buffer.value_self)
    v_coop = np.asarray(buffer.value_coop)
    dones = np.asarray(buffer.dones, dtype=np.float64)
    advantages = np.zeros(n)
    returns_self = np.zeros(n)
    returns_coop = np.zeros(n) if variant is Variant.PEMN else None
    for seg in buffer.segments:
        sl = slice(seg.start, seg.stop)
        if variant is Variant.PEMN:
            adv_s, ret_s = compute_gae(
                r_self[sl], v_self[sl], seg.bootstrap_self, dones[sl], gamma, lam
            )
            adv_c, ret_c = compute_gae(
                r_coop[sl], v_coop[sl], seg.bootstrap_coop, dones[sl], gamma, lam
            )
            advantages[sl] = adv_s + adv_c
            returns_self[sl] = ret_s
            returns_coop[sl] = ret_c  # type: ignore[index]
        else:
            adv, ret = compute_gae(
                r_self[sl] + r_coop[sl], v_self[sl], seg.bootstrap_self, dones[sl], gamma, lam
            )
            advantages[sl] = adv
            returns_self[sl] = ret
    return AdvantageBatch(
        obs_self=np.asarray(buffer.obs_self),
        obs_other=np.asarray(buffer.obs_other),
        actions=np.asarray(buffer.actions),
        logprobs=np.asarray(buffer.logprobs),
        advantages=advantages,
        returns_self=returns_self,
        returns_coop=returns_coop,
    )
