"""Recurrent Q-learning agent for joint (bid, scale) actions.

The Q-network reads a four-component input per slot: previous generation,
previous price, state of charge, and the episode's (normalized) battery
capacity, and emits one Q-value per joint action.  Training uses randomly
positioned in-episode windows with the recurrent state zeroed at the window
start, against a periodically synced target network.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nn
from .errors import DefectError, TrainingError, ValidationError
from .market_env import Action

N_INPUTS = 4


@dataclass(frozen=True)
class ActionGrid:
    """Discrete bid and scale levels; the joint action set is their product.

    Joint indices are row-major over (bid index, scale index):
    index = bid_index * len(scales) + scale_index.
    """

    bids: tuple[float, ...]
    scales: tuple[float, ...]

    def __post_init__(self):
        for name, levels in (("bids", self.bids), ("scales", self.scales)):
            if len(levels) == 0:
                raise ValidationError(f"{name} must be non-empty")
            if any(v < 0 for v in levels):
                raise ValidationError(f"{name} must be non-negative")
            if any(b <= a for a, b in zip(levels, levels[1:])):
                raise ValidationError(f"{name} must be strictly increasing")

    @property
    def n_actions(self) -> int:
        return len(self.bids) * len(self.scales)

    def decode(self, index: int) -> Action:
        if not 0 <= index < self.n_actions:
            raise DefectError(f"action index {index} out of range")
        bid_idx, scale_idx = divmod(index, len(self.scales))
        return Action(self.bids[bid_idx], self.scales[scale_idx])

    def encode(self, bid_idx: int, scale_idx: int) -> int:
        return bid_idx * len(self.scales) + scale_idx


@dataclass(frozen=True)
class InputNormalization:
    """Scales that keep network inputs O(1); carried in checkpoints.

    design_reference is the capacity (MWh) that maps absolute battery size
    to the normalized design fed to the network and to the design policy.
    """

    generation_scale: float = 1.0
    price_scale: float = 1.0
    design_reference: float = 1.0

    def __post_init__(self):
        for name in ("generation_scale", "price_scale", "design_reference"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")


@dataclass(frozen=True)
class Observation:
    """What the agent sees at one slot, plus the episode's normalized design."""

    last_generation: float
    last_price: float
    soc: float
    design: float


class QNetwork:
    """dense -> LSTM -> dense action-value approximator plus its grids."""

    def __init__(self, net: nn.RecurrentNetwork, grid: ActionGrid,
                 norm: InputNormalization):
        if net.n_in != N_INPUTS or net.n_out != grid.n_actions:
            raise DefectError(
                f"network ({net.n_in} -> {net.n_out}) does not match "
                f"{N_INPUTS} inputs / {grid.n_actions} joint actions")
        self.net = net
        self.grid = grid
        self.norm = norm

    @classmethod
    def create(cls, rng: np.random.Generator, hidden_units: int,
               grid: ActionGrid, norm: InputNormalization) -> "QNetwork":
        net = nn.RecurrentNetwork.create(rng, N_INPUTS, hidden_units,
                                         grid.n_actions)
        return cls(net, grid, norm)

    def initial_state(self) -> tuple[np.ndarray, np.ndarray]:
        return self.net.initial_state(batch=1)

    def copy(self) -> "QNetwork":
        return QNetwork(self.net.copy(), self.grid, self.norm)

    def input_row(self, obs: Observation) -> np.ndarray:
        return np.array([obs.last_generation / self.norm.generation_scale,
                         obs.last_price / self.norm.price_scale,
                         obs.soc, obs.design])

    def batch_inputs(self, observations: np.ndarray, design: np.ndarray
                     ) -> np.ndarray:
        """(batch, time, 3) raw observations + per-row design -> network inputs."""
        batch, n_steps, _ = observations.shape
        inputs = np.empty((batch, n_steps, N_INPUTS))
        inputs[:, :, 0] = observations[:, :, 0] / self.norm.generation_scale
        inputs[:, :, 1] = observations[:, :, 1] / self.norm.price_scale
        inputs[:, :, 2] = observations[:, :, 2]
        inputs[:, :, 3] = design[:, None]
        return inputs


def q_values(network: QNetwork, obs: Observation, h: np.ndarray,
             c: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Q over all joint actions for one observation; advances (h, c)."""
    x = network.input_row(obs)[None, :]
    y, h_next, c_next = network.net.step(x, h, c)
    q = y[0]
    if not np.isfinite(q).all():
        raise DefectError("non-finite Q-values")
    return q, h_next, c_next


def select_action(q: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over joint-action indices; greedy ties break low."""
    if len(q) == 0:
        raise DefectError("empty Q-value vector")
    if not 0.0 <= epsilon <= 1.0:
        raise ValidationError(f"epsilon must be in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return int(rng.integers(len(q)))
    return int(np.argmax(q))


@dataclass(frozen=True)
class EpisodeRecord:
    """One rollout: raw observations, joint actions, rewards, and its design.

    observations has one more row than actions/rewards (the terminal
    observation); columns are (generation, price, soc), unnormalized.
    """

    observations: np.ndarray   # (T + 1, 3)
    actions: np.ndarray        # (T,) joint-action indices
    rewards: np.ndarray        # (T,)
    design: float              # normalized capacity, constant for the episode
    terminal: bool = True
    start_slot: int = 0

    def __post_init__(self):
        n = len(self.actions)
        if self.observations.shape != (n + 1, 3) or self.rewards.shape != (n,):
            raise DefectError(
                f"inconsistent episode shapes: obs {self.observations.shape}, "
                f"actions {self.actions.shape}, rewards {self.rewards.shape}")

    def __len__(self) -> int:
        return len(self.actions)


class ReplayMemory:
    """Bounded ring of whole episodes; sampling yields in-episode windows."""

    def __init__(self, capacity: int, sequence_length: int):
        if capacity < 1 or sequence_length < 1:
            raise ValidationError("capacity and sequence_length must be >= 1")
        self.capacity = capacity
        self.sequence_length = sequence_length
        self.episodes: deque[EpisodeRecord] = deque(maxlen=capacity)

    def add(self, episode: EpisodeRecord) -> None:
        self.episodes.append(episode)

    def __len__(self) -> int:
        return len(self.episodes)


@dataclass
class TrainingBatch:
    """Stacked fixed-length windows, each from a single episode."""

    observations: np.ndarray   # (B, L + 1, 3)
    actions: np.ndarray        # (B, L)
    rewards: np.ndarray        # (B, L)
    design: np.ndarray         # (B,)
    terminal: np.ndarray       # (B, L) bool; True only on episode-final steps
    starts: np.ndarray         # (B,) window start offsets (for audits)


def sample_training_batch(memory: ReplayMemory, batch_size: int,
                          sequence_length: int, rng: np.random.Generator
                          ) -> TrainingBatch | None:
    """Draw random in-episode windows, or None when no episode is long enough."""
    eligible = [ep for ep in memory.episodes if len(ep) >= sequence_length]
    if not eligible:
        return None
    length = sequence_length
    obs = np.empty((batch_size, length + 1, 3))
    actions = np.empty((batch_size, length), dtype=np.int64)
    rewards = np.empty((batch_size, length))
    design = np.empty(batch_size)
    terminal = np.zeros((batch_size, length), dtype=bool)
    starts = np.empty(batch_size, dtype=np.int64)
    for b in range(batch_size):
        ep = eligible[int(rng.integers(len(eligible)))]
        start = int(rng.integers(len(ep) - length + 1))
        obs[b] = ep.observations[start:start + length + 1]
        actions[b] = ep.actions[start:start + length]
        rewards[b] = ep.rewards[start:start + length]
        design[b] = ep.design
        if ep.terminal and start + length == len(ep):
            terminal[b, length - 1] = True
        starts[b] = start
    return TrainingBatch(obs, actions, rewards, design, terminal, starts)


def td_update(network: QNetwork, target_network: QNetwork,
              batch: TrainingBatch, gamma: float, adam: nn.AdamState,
              grad_clip_norm: float = 10.0) -> float:
    """One squared-TD-error gradient step on the batch; returns the loss.

    Both networks replay each window from a zeroed recurrent state; the
    bootstrap term comes from the target network's own pass and is dropped
    on episode-final steps.
    """
    n_windows, length = batch.actions.shape
    inputs = network.batch_inputs(batch.observations, batch.design)

    ys, _, caches = network.net.forward_sequence(inputs[:, :length, :])
    target_ys, _, _ = target_network.net.forward_sequence(inputs)
    q_next_max = target_ys[:, 1:, :].max(axis=2)

    q_taken = np.take_along_axis(ys, batch.actions[:, :, None], axis=2)[:, :, 0]
    targets = batch.rewards + gamma * q_next_max * ~batch.terminal
    td_error = q_taken - targets
    loss = float(np.mean(td_error ** 2))
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite TD loss ({loss})")

    d_ys = np.zeros_like(ys)
    scale = 2.0 / td_error.size
    np.put_along_axis(d_ys, batch.actions[:, :, None],
                      (scale * td_error)[:, :, None], axis=2)
    grads = network.net.backward_sequence(caches, d_ys)
    grads, _ = nn.clip_gradients(grads, grad_clip_norm)
    nn.adam_step(adam, network.net.parameters(), grads)
    return loss


def sync_target(network: QNetwork, target_network: QNetwork) -> None:
    """Make the target's parameters a bitwise copy of the live network's."""
    target_network.net.load_parameters(network.net.parameters())


def save_checkpoint(path: str | Path, network: QNetwork) -> None:
    """Versioned checkpoint: network weights + action grids + input scales."""
    nn.save_network(path, network.net, extra={
        "bids": np.array(network.grid.bids, dtype=float),
        "scales": np.array(network.grid.scales, dtype=float),
        "generation_scale": np.float64(network.norm.generation_scale),
        "price_scale": np.float64(network.norm.price_scale),
        "design_reference": np.float64(network.norm.design_reference),
    })


def load_checkpoint(path: str | Path) -> QNetwork:
    net, extra = nn.load_network(path)
    grid = ActionGrid(tuple(float(b) for b in extra["bids"]),
                      tuple(float(s) for s in extra["scales"]))
    norm = InputNormalization(float(extra["generation_scale"]),
                              float(extra["price_scale"]),
                              float(extra["design_reference"]))
    return QNetwork(net, grid, norm)
