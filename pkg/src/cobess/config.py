"""Declarative run configuration.

One JSON document drives every command: scenario source, battery template,
market terms, action grids, network hyperparameters, design-search
parameters, and the training schedule.  Unknown keys anywhere in the file
are errors, so typos fail fast instead of silently using defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .design_optimizer import DesignPolicy
from .drqn_agent import ActionGrid, InputNormalization
from .errors import ConfigError, ValidationError
from .market_env import BatterySpec, MarketParams
from .timeseries import ScenarioData, SyntheticProfile, load_scenario, synthesize_scenario

CONFIG_VERSION = 1


@dataclass(frozen=True)
class ScenarioConfig:
    """Where episode data comes from: a CSV path, or the synthetic generator.

    With a null path the scenario is synthesized from `synthetic_profile`
    using (synthetic_seed, n_slots).  Relative paths resolve against the
    config file's directory.  episode_slots is the rollout length; episodes
    use a random contiguous window of that length from the worker's slice.
    """

    path: str | None = None
    synthetic_seed: int = 0
    n_slots: int = 168
    slot_duration_h: float | None = None
    episode_slots: int = 24

    def __post_init__(self):
        if self.episode_slots < 1:
            raise ValidationError("episode_slots must be >= 1")
        if self.path is None and self.n_slots < 1:
            raise ValidationError("n_slots must be >= 1")
        if self.slot_duration_h is not None and not self.slot_duration_h > 0:
            raise ValidationError("slot_duration_h must be > 0")


@dataclass(frozen=True)
class BatteryConfig:
    """Battery template: everything but the capacity, which the design sets."""

    soc_min: float = 0.1
    soc_max: float = 0.9
    eta_c: float = 0.96
    eta_d: float = 0.995
    p_c_unit_max: float = 1.0
    p_d_unit_max: float = 1.0
    degradation_cost: float = 1.0

    def __post_init__(self):
        self.spec(1.0)   # validates the template fields

    def spec(self, e_max_mwh: float) -> BatterySpec:
        return BatterySpec(e_max_mwh, self.soc_min, self.soc_max, self.eta_c,
                           self.eta_d, self.p_c_unit_max, self.p_d_unit_max,
                           self.degradation_cost)


@dataclass(frozen=True)
class MarketConfig:
    """Deviation penalty factor; slot duration comes from the scenario."""

    alpha_pen: float = 1.0

    def __post_init__(self):
        if self.alpha_pen < 0:
            raise ValidationError("alpha_pen must be >= 0")

    def params(self, slot_duration_h: float) -> MarketParams:
        return MarketParams(self.alpha_pen, slot_duration_h)


@dataclass(frozen=True)
class DrqnConfig:
    """Network and Q-learning hyperparameters."""

    hidden_units: int = 64
    gamma: float = 0.9
    learning_rate: float = 1e-4
    batch_size: int = 8
    sequence_length: int = 8
    replay_capacity: int = 128
    min_replay_episodes: int = 1
    updates_per_episode: int = 4
    target_sync_interval: int = 100
    grad_clip_norm: float = 10.0
    epsilon_start: float = 1.0
    epsilon_final: float = 0.05
    epsilon_decay_fraction: float = 0.8

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValidationError(f"gamma must be in [0, 1), got {self.gamma}")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be > 0")
        for name in ("hidden_units", "batch_size", "sequence_length",
                     "replay_capacity", "min_replay_episodes",
                     "target_sync_interval"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.updates_per_episode < 0:
            raise ValidationError("updates_per_episode must be >= 0")
        if not self.grad_clip_norm > 0:
            raise ValidationError("grad_clip_norm must be > 0")
        if not 0 <= self.epsilon_final <= self.epsilon_start <= 1:
            raise ValidationError(
                "need 0 <= epsilon_final <= epsilon_start <= 1, got "
                f"({self.epsilon_start}, {self.epsilon_final})")
        if not 0 < self.epsilon_decay_fraction <= 1:
            raise ValidationError("epsilon_decay_fraction must be in (0, 1]")


@dataclass(frozen=True)
class DesignConfig:
    """Design-distribution parameters and the sizing economics.

    All capacities are in normalized units (multiples of the reference
    capacity in the normalization section).  annuity_weight scales an
    episode's summed reward onto the costing horizon; unit_capacity_cost
    is the per-horizon cost of one normalized capacity unit.  Setting
    fixed_design disables both sampling and mean updates.  The first
    warmup_blocks completed blocks are observed but produce no mean
    update, so early returns from a still-random policy cannot move mu.
    """

    mu0: float = 1.0
    sigma: float = 0.2
    learning_rate: float = 1e-5
    block_size: int = 15
    warmup_blocks: int = 0
    lower: float = 0.05
    upper: float = 2.0
    annuity_weight: float = 1.0
    unit_capacity_cost: float = 0.0
    fixed_design: float | None = None

    def __post_init__(self):
        self.policy()   # validates mu0/sigma/bounds
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be > 0")
        if self.block_size < 2:
            raise ValidationError("block_size must be >= 2")
        if self.warmup_blocks < 0:
            raise ValidationError("warmup_blocks must be >= 0")
        if self.annuity_weight < 0 or self.unit_capacity_cost < 0:
            raise ValidationError(
                "annuity_weight and unit_capacity_cost must be >= 0")
        if self.fixed_design is not None and not (
                self.lower <= self.fixed_design <= self.upper):
            raise ValidationError(
                f"fixed_design {self.fixed_design} outside "
                f"[{self.lower}, {self.upper}]")

    def policy(self) -> DesignPolicy:
        return DesignPolicy(self.mu0, self.sigma, self.lower, self.upper)


@dataclass(frozen=True)
class TrainingConfig:
    """Episode budget, seeding, evaluation cadence, and parallelism."""

    n_episodes: int = 800
    seed: int = 0
    eval_interval: int = 50
    workers: int = 1
    snapshot_staleness: int = 1
    rotate_slices: bool = False
    initial_soc: float | None = None

    def __post_init__(self):
        for name in ("n_episodes", "eval_interval", "workers",
                     "snapshot_staleness"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.initial_soc is not None and not 0 < self.initial_soc < 1:
            raise ValidationError("initial_soc must be in (0, 1)")


@dataclass(frozen=True)
class RunConfig:
    """The full declarative run description (versioned)."""

    scenario: ScenarioConfig = ScenarioConfig()
    battery: BatteryConfig = BatteryConfig()
    market: MarketConfig = MarketConfig()
    actions: ActionGrid = ActionGrid(
        bids=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6),
        scales=(0.0, 0.5, 1.0))
    normalization: InputNormalization = InputNormalization(
        generation_scale=1.0, price_scale=10.0, design_reference=1.0)
    drqn: DrqnConfig = DrqnConfig()
    design: DesignConfig = DesignConfig()
    training: TrainingConfig = TrainingConfig()
    synthetic_profile: SyntheticProfile = SyntheticProfile()
    config_version: int = CONFIG_VERSION
    base_dir: Path | None = field(default=None, compare=False, repr=False)

    def load_scenario_data(self) -> ScenarioData:
        """Materialize the scenario this config points at."""
        sc = self.scenario
        if sc.path is not None:
            path = Path(sc.path)
            if not path.is_absolute() and self.base_dir is not None:
                path = self.base_dir / path
            duration = sc.slot_duration_h if sc.slot_duration_h is not None else 1.0
            data = load_scenario(path, duration)
        else:
            data = synthesize_scenario(sc.synthetic_seed, sc.n_slots,
                                       self.synthetic_profile,
                                       sc.slot_duration_h)
        if len(data) < sc.episode_slots:
            raise ConfigError(
                f"scenario has {len(data)} slots, fewer than episode_slots "
                f"{sc.episode_slots}")
        return data


_SECTIONS: dict[str, type] = {
    "scenario": ScenarioConfig,
    "battery": BatteryConfig,
    "market": MarketConfig,
    "actions": ActionGrid,
    "normalization": InputNormalization,
    "drqn": DrqnConfig,
    "design": DesignConfig,
    "training": TrainingConfig,
    "synthetic_profile": SyntheticProfile,
}

_TUPLE_FIELDS = {"bids", "scales"}


def _build_section(cls: type, data: object, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    names = [f.name for f in dataclasses.fields(cls)]
    for key in data:
        if key not in names:
            raise ConfigError(f"{where}: unknown key '{key}'")
    kwargs = {k: tuple(v) if k in _TUPLE_FIELDS and isinstance(v, list) else v
              for k, v in data.items()}
    try:
        return cls(**kwargs)
    except ValidationError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(data: dict, base_dir: Path | None = None) -> RunConfig:
    """Build and validate a RunConfig from parsed JSON; unknown keys fail."""
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be an object, got {type(data).__name__}")
    for key in data:
        if key not in _SECTIONS and key != "config_version":
            raise ConfigError(f"unknown top-level key '{key}'")
    version = data.get("config_version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(
            f"unsupported config_version {version!r} (this build reads "
            f"version {CONFIG_VERSION})")
    kwargs = {name: _build_section(cls, data[name], name)
              for name, cls in _SECTIONS.items() if name in data}
    return RunConfig(config_version=version, base_dir=base_dir, **kwargs)


def config_to_dict(config: RunConfig) -> dict:
    out: dict = {"config_version": config.config_version}
    for name, cls in _SECTIONS.items():
        section = getattr(config, name)
        out[name] = dataclasses.asdict(section)
        for key, value in out[name].items():
            if isinstance(value, tuple):
                out[name][key] = list(value)
    return out


def load_config(path: str | Path) -> RunConfig:
    """Read, parse, and validate a config file; all failures are ConfigError."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(data, base_dir=path.resolve().parent)


def save_config(config: RunConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n")
