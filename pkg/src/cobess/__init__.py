"""Co-optimization of renewable market bidding and battery storage sizing.

A renewable producer bids energy into a single-price market with a
deviation penalty; a battery absorbs forecast mismatch.  A recurrent
Q-network learns the bidding/dispatch policy while a score-function
gradient over a Gaussian design distribution searches the battery
capacity, so the policy and the size are optimized together.
"""

from .config import (BatteryConfig, DesignConfig, DrqnConfig, MarketConfig,
                     RunConfig, ScenarioConfig, TrainingConfig,
                     config_from_dict, load_config, save_config)
from .design_optimizer import (DesignPolicy, design_objective, sample_design,
                               score_gradient, update_mu)
from .drqn_agent import (ActionGrid, EpisodeRecord, InputNormalization,
                         Observation, QNetwork, ReplayMemory, load_checkpoint,
                         q_values, sample_training_batch, save_checkpoint,
                         select_action, sync_target, td_update)
from .errors import (CobessError, ConfigError, DefectError,
                     ScenarioFormatError, TrainingError, ValidationError)
from .market_env import (Action, BatterySpec, EnvState, MarketParams,
                         StepOutcome, apply_action, charge_bound,
                         discharge_bound, initial_soc, settle, step)
from .timeseries import (MarketRecord, ScenarioData, SyntheticProfile,
                         load_scenario, save_scenario, synthesize_scenario)
from .trainer import (EvaluationResult, RunMetrics, SweepResult, evaluate,
                      run_episode, sweep, train, train_parallel)

__version__ = "0.1.0"

__all__ = [
    "Action", "ActionGrid", "BatteryConfig", "BatterySpec", "CobessError",
    "ConfigError", "DefectError", "DesignConfig", "DesignPolicy",
    "DrqnConfig", "EnvState", "EpisodeRecord", "EvaluationResult",
    "InputNormalization", "MarketConfig", "MarketParams", "MarketRecord",
    "Observation", "QNetwork", "ReplayMemory", "RunConfig", "RunMetrics",
    "ScenarioConfig", "ScenarioData", "ScenarioFormatError", "StepOutcome",
    "SweepResult", "SyntheticProfile", "TrainingConfig", "TrainingError",
    "ValidationError", "apply_action", "charge_bound", "config_from_dict",
    "design_objective",
    "discharge_bound", "evaluate", "initial_soc", "load_checkpoint",
    "load_config", "load_scenario", "q_values", "run_episode",
    "sample_design", "sample_training_batch", "save_checkpoint",
    "save_config", "save_scenario", "score_gradient", "select_action",
    "settle", "step", "sweep", "sync_target", "synthesize_scenario",
    "td_update", "train", "train_parallel", "update_mu",
]
