"""End-to-end training: rollouts, replay learning, design search, sweeps.

The serial and parallel modes share one driver loop built around a simple
contract: episodes are dispatched in index order to free workers, and all
learning (replay insertion, Q-updates, design-mean updates, evaluations)
happens in episode-completion order in the parent.  With one worker the
completion order equals the dispatch order, so the parallel mode with
W=1 reproduces the serial mode bit for bit.

Random streams are split by purpose so results do not depend on scheduling:
  [seed, 0]           network initialization
  [seed, 1]           design sampling (one draw per episode, dispatch order)
  [seed, 2, episode]  per-episode window choice and exploration
  [seed, 3]           replay sampling for learner updates
  [seed, 4, k]        k-th greedy evaluation
"""

from __future__ import annotations

import dataclasses
import json
import multiprocessing
import time
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import market_env, nn
from .config import BatteryConfig, RunConfig
from .design_optimizer import design_objective, sample_design, update_mu
from .drqn_agent import (ActionGrid, EpisodeRecord, InputNormalization,
                         Observation, QNetwork, ReplayMemory, q_values,
                         sample_training_batch, save_checkpoint, select_action,
                         sync_target, td_update)
from .errors import ConfigError, DefectError, TrainingError, ValidationError
from .market_env import BatterySpec, EnvState, MarketParams
from .timeseries import ScenarioData

_INIT_STREAM = 0
_DESIGN_STREAM = 1
_EPISODE_STREAM = 2
_LEARNER_STREAM = 3
_EVAL_STREAM = 4

METRICS_FILE = "metrics.csv"
MU_FILE = "mu_updates.csv"
EVAL_FILE = "evaluations.csv"
SUMMARY_FILE = "summary.json"
CHECKPOINT_FILE = "checkpoint.npz"
SWEEP_FILE = "sweep.csv"
SWEEP_SUMMARY_FILE = "sweep_summary.csv"


def epsilon_schedule(episode_idx: int, start: float, final: float,
                     decay_episodes: int) -> float:
    """Linear anneal from start to final over decay_episodes episodes."""
    if decay_episodes < 1:
        return final
    frac = min(episode_idx / decay_episodes, 1.0)
    return start + (final - start) * frac


def _rollout(network: QNetwork, design: float, scenario: ScenarioData,
             battery: BatterySpec, market: MarketParams, epsilon: float,
             rng: np.random.Generator, initial_soc: float | None,
             collect_outcomes: bool):
    """Run one episode; recurrent state threads across the whole scenario."""
    soc = initial_soc if initial_soc is not None else market_env.initial_soc(battery)
    if not battery.soc_min <= soc <= battery.soc_max:
        raise ValidationError(
            f"initial SOC {soc} outside [{battery.soc_min}, {battery.soc_max}]")
    state = EnvState(slot=scenario.records[0].timestamp_index, soc=soc)
    h, c = network.initial_state()

    n = len(scenario)
    obs_rows = np.empty((n + 1, 3))
    actions = np.empty(n, dtype=np.int64)
    rewards = np.empty(n)
    outcomes = [] if collect_outcomes else None
    total = 0.0
    for t, rec in enumerate(scenario.records):
        obs = Observation(state.last_generation, state.last_price, state.soc,
                          design)
        obs_rows[t] = (state.last_generation, state.last_price, state.soc)
        q, h, c = q_values(network, obs, h, c)
        action_idx = select_action(q, epsilon, rng)
        outcome = market_env.step(state, network.grid.decode(action_idx), rec,
                                  battery, market)
        actions[t] = action_idx
        rewards[t] = outcome.reward
        total += outcome.reward
        if outcomes is not None:
            outcomes.append(outcome)
        state = outcome.next_state
    obs_rows[n] = (state.last_generation, state.last_price, state.soc)

    record = EpisodeRecord(obs_rows, actions, rewards, design,
                           terminal=True,
                           start_slot=scenario.records[0].timestamp_index)
    return record, float(total), outcomes


def run_episode(network: QNetwork, design: float, scenario: ScenarioData,
                battery: BatterySpec, market: MarketParams, epsilon: float,
                rng: np.random.Generator, initial_soc: float | None = None
                ) -> tuple[EpisodeRecord, float]:
    """One training rollout; returns the trajectory and its summed reward."""
    record, total, _ = _rollout(network, design, scenario, battery, market,
                                epsilon, rng, initial_soc, False)
    return record, total


@dataclass(frozen=True)
class EvaluationResult:
    """Greedy-rollout revenue decomposition over one scenario.

    net_revenue = baseline_revenue + sum_reward holds by construction
    (the per-slot reward subtracts the sell-everything baseline), so the
    decomposition is checked here and again by the report command.
    """

    design: float
    sum_reward: float
    baseline_revenue: float
    market_revenue: float
    net_revenue: float
    deviation_penalty: float
    degradation: float
    negative_flag: bool


def evaluate(network: QNetwork, design: float, scenario: ScenarioData,
             battery: BatterySpec, market: MarketParams,
             rng: np.random.Generator, initial_soc: float | None = None
             ) -> EvaluationResult:
    """Greedy rollout with full revenue accounting."""
    _, total, outcomes = _rollout(network, design, scenario, battery, market,
                                  0.0, rng, initial_soc, True)
    dt = market.slot_duration_h
    baseline = float(np.dot(scenario.prices, scenario.generation) * dt)
    net = sum(o.net_profit for o in outcomes)
    result = EvaluationResult(
        design=design,
        sum_reward=total,
        baseline_revenue=baseline,
        market_revenue=sum(o.market_revenue for o in outcomes),
        net_revenue=net,
        deviation_penalty=sum(o.deviation_penalty for o in outcomes),
        degradation=sum(o.degradation for o in outcomes),
        negative_flag=total < 0,
    )
    if abs(result.sum_reward + baseline - net) > 1e-9 * max(1.0, abs(net)):
        raise DefectError(
            f"revenue decomposition broke: {result.sum_reward} + {baseline} "
            f"!= {net}")
    return result


# ---------------------------------------------------------------------------
# Task protocol shared by the serial and process-based executors.

@dataclass(frozen=True)
class RolloutContext:
    """Everything a worker needs besides per-episode tasks (shipped once)."""

    slices: tuple[ScenarioData, ...]
    grid: ActionGrid
    norm: InputNormalization
    battery: BatteryConfig
    alpha_pen: float
    episode_slots: int
    hidden_units: int
    seed: int
    initial_soc: float | None


@dataclass(frozen=True)
class EpisodeTask:
    """One dispatched episode: design, exploration, data slice, parameters.

    params is a fresh parameter snapshot or None to reuse the worker's held
    copy; params_version identifies the snapshot for staleness audits.
    """

    episode_idx: int
    omega: float
    epsilon: float
    slice_idx: int
    params: dict | None
    params_version: int


@dataclass(frozen=True)
class EpisodeResult:
    episode_idx: int
    record: EpisodeRecord
    sum_reward: float
    omega: float
    epsilon: float
    slice_idx: int
    window_start: int
    params_version: int


def execute_episode(task: EpisodeTask, ctx: RolloutContext, cache: dict
                    ) -> EpisodeResult:
    """Worker-side rollout.  cache persists the reconstructed network."""
    if "qnet" not in cache:
        net = nn.RecurrentNetwork.create(np.random.default_rng(0), 4,
                                         ctx.hidden_units, ctx.grid.n_actions)
        cache["qnet"] = QNetwork(net, ctx.grid, ctx.norm)
        cache["version"] = -1
    qnet: QNetwork = cache["qnet"]
    if task.params is not None:
        qnet.net.load_parameters(task.params)
        cache["version"] = task.params_version

    rng = np.random.default_rng([ctx.seed, _EPISODE_STREAM, task.episode_idx])
    data = ctx.slices[task.slice_idx]
    n_slots = ctx.episode_slots
    start = int(rng.integers(len(data) - n_slots + 1))
    window = data.slice(start, start + n_slots)

    battery = ctx.battery.spec(task.omega * ctx.norm.design_reference)
    market = MarketParams(ctx.alpha_pen, data.slot_duration_h)
    record, total = run_episode(qnet, task.omega, window, battery, market,
                                task.epsilon, rng, ctx.initial_soc)
    return EpisodeResult(task.episode_idx, record, total, task.omega,
                         task.epsilon, task.slice_idx, start,
                         cache["version"])


class SerialExecutor:
    """In-process executor: submit runs the task immediately."""

    def __init__(self, ctx: RolloutContext):
        self.ctx = ctx
        self.n_workers = 1
        self._cache: dict = {}
        self._done: deque = deque()

    def submit(self, worker_id: int, task: EpisodeTask) -> None:
        result = execute_episode(task, self.ctx, self._cache)
        self._done.append(("ok", worker_id, result))

    def next_result(self):
        return self._done.popleft()

    def shutdown(self) -> None:
        pass


def _worker_main(worker_id: int, ctx: RolloutContext,
                 faults: tuple[tuple[int, int], ...], task_queue,
                 result_queue) -> None:
    """Rollout loop for one worker process; dies on its first failure."""
    fault_set = set(faults)
    cache: dict = {}
    while True:
        task = task_queue.get()
        if task is None:
            return
        try:
            if (worker_id, task.episode_idx) in fault_set:
                raise TrainingError(
                    f"injected fault on worker {worker_id}, "
                    f"episode {task.episode_idx}")
            result = execute_episode(task, ctx, cache)
        except Exception as exc:   # noqa: BLE001 - reported to the parent
            result_queue.put(("failed", worker_id,
                              (task.episode_idx, f"{type(exc).__name__}: {exc}")))
            return
        result_queue.put(("ok", worker_id, result))


class ProcessExecutor:
    """One process per worker, a task queue each, one shared result queue."""

    def __init__(self, ctx: RolloutContext, n_workers: int,
                 faults: tuple[tuple[int, int], ...] = ()):
        self.n_workers = n_workers
        mp = multiprocessing.get_context("spawn")
        self._result_queue = mp.Queue()
        self._task_queues = [mp.Queue() for _ in range(n_workers)]
        self._procs = [
            mp.Process(target=_worker_main,
                       args=(w, ctx, faults, self._task_queues[w],
                             self._result_queue),
                       daemon=True)
            for w in range(n_workers)]
        for proc in self._procs:
            proc.start()

    def submit(self, worker_id: int, task: EpisodeTask) -> None:
        self._task_queues[worker_id].put(task)

    def next_result(self):
        return self._result_queue.get()

    def shutdown(self) -> None:
        for queue in self._task_queues:
            try:
                queue.put(None)
            except (ValueError, OSError):
                pass
        for proc in self._procs:
            proc.join(timeout=10)
            if proc.is_alive():
                proc.terminate()
                proc.join(timeout=5)


# ---------------------------------------------------------------------------
# Metrics.

@dataclass(frozen=True)
class EpisodeRow:
    episode: int
    omega: float
    sum_reward: float
    objective: float
    mu: float
    mean_loss: float
    epsilon: float
    worker: int
    slice_index: int
    window_start: int
    params_version: int


@dataclass(frozen=True)
class MuUpdateRow:
    update: int
    episode: int
    mu: float
    gradient: float


@dataclass(frozen=True)
class EvaluationRow:
    episode: int
    design: float
    sum_reward: float
    baseline_revenue: float
    market_revenue: float
    net_revenue: float
    deviation_penalty: float
    degradation: float
    negative_flag: bool


@dataclass
class RunMetrics:
    """Everything a run produced, in completion order."""

    episodes: list[EpisodeRow]
    mu_updates: list[MuUpdateRow]
    evaluations: list[EvaluationRow]
    mu0: float
    final_mu: float
    wall_seconds: float
    episodes_per_second: float

    @property
    def final_evaluation(self) -> EvaluationRow | None:
        return self.evaluations[-1] if self.evaluations else None


_CSV_HEADERS = {
    METRICS_FILE: ("episode,omega,sum_reward,objective,mu,mean_loss,epsilon,"
                   "worker,slice_index,window_start,params_version"),
    MU_FILE: "update,episode,mu,gradient",
    EVAL_FILE: ("episode,design,sum_reward,baseline_revenue,market_revenue,"
                "net_revenue,deviation_penalty,degradation,negative_flag"),
}


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_rows(path: Path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in
                              dataclasses.astuple(row)))
    path.write_text("\n".join(lines) + "\n")


def write_metrics(metrics: RunMetrics, out_dir: str | Path) -> None:
    """Persist per-episode metrics, design updates, evaluations, summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / METRICS_FILE, _CSV_HEADERS[METRICS_FILE], metrics.episodes)
    _write_rows(out / MU_FILE, _CSV_HEADERS[MU_FILE], metrics.mu_updates)
    _write_rows(out / EVAL_FILE, _CSV_HEADERS[EVAL_FILE], metrics.evaluations)
    final_eval = (dataclasses.asdict(metrics.final_evaluation)
                  if metrics.final_evaluation else None)
    summary = {
        "n_episodes": len(metrics.episodes),
        "mu0": metrics.mu0,
        "final_mu": metrics.final_mu,
        "n_mu_updates": len(metrics.mu_updates),
        "n_evaluations": len(metrics.evaluations),
        "wall_seconds": metrics.wall_seconds,
        "episodes_per_second": metrics.episodes_per_second,
        "final_evaluation": final_eval,
    }
    (out / SUMMARY_FILE).write_text(json.dumps(summary, indent=2) + "\n")


# ---------------------------------------------------------------------------
# The driver.

class _Run:
    """Owns all learner-side state; processes completions in arrival order."""

    def __init__(self, config: RunConfig):
        cfg_t = config.training
        self.config = config
        self.data = config.load_scenario_data()
        self.slices = tuple(self.data.partition(cfg_t.workers))
        min_slice = min(len(s) for s in self.slices)
        if min_slice < config.scenario.episode_slots:
            raise ConfigError(
                f"worker slice of {min_slice} slots is shorter than "
                f"episode_slots {config.scenario.episode_slots}")

        drqn = config.drqn
        init_rng = np.random.default_rng([cfg_t.seed, _INIT_STREAM])
        self.qnet = QNetwork.create(init_rng, drqn.hidden_units,
                                    config.actions, config.normalization)
        self.target = self.qnet.copy()
        self.adam = nn.AdamState.for_parameters(self.qnet.net.parameters(),
                                                drqn.learning_rate)
        self.sequence_length = min(drqn.sequence_length,
                                   config.scenario.episode_slots)
        self.replay = ReplayMemory(drqn.replay_capacity, self.sequence_length)
        self.policy = config.design.policy()
        self.design_rng = np.random.default_rng([cfg_t.seed, _DESIGN_STREAM])
        self.learner_rng = np.random.default_rng([cfg_t.seed, _LEARNER_STREAM])
        self.market = config.market.params(self.data.slot_duration_h)
        self.decay_episodes = max(
            int(round(drqn.epsilon_decay_fraction * cfg_t.n_episodes)), 1)

        self.update_count = 0
        self.completed = 0
        self.eval_count = 0
        self.blocks_completed = 0
        self.mu_update_count = 0
        self.last_eval_at = -1
        self.worker_versions: dict[int, int] = {}
        self.block_designs: list[float] = []
        self.block_objectives: list[float] = []
        self.episode_rows: list[EpisodeRow] = []
        self.mu_rows: list[MuUpdateRow] = []
        self.eval_rows: list[EvaluationRow] = []

    # -- dispatch side -----------------------------------------------------

    def context(self) -> RolloutContext:
        cfg = self.config
        return RolloutContext(
            slices=self.slices,
            grid=cfg.actions,
            norm=cfg.normalization,
            battery=cfg.battery,
            alpha_pen=cfg.market.alpha_pen,
            episode_slots=cfg.scenario.episode_slots,
            hidden_units=cfg.drqn.hidden_units,
            seed=cfg.training.seed,
            initial_soc=cfg.training.initial_soc,
        )

    def _snapshot(self) -> dict:
        return {k: np.array(v) for k, v in self.qnet.net.parameters().items()}

    def slice_for(self, worker_id: int, episode_idx: int) -> int:
        if self.config.training.rotate_slices:
            return (worker_id + episode_idx) % len(self.slices)
        return worker_id

    def new_task(self, episode_idx: int, worker_id: int) -> EpisodeTask:
        drqn = self.config.drqn
        epsilon = epsilon_schedule(episode_idx, drqn.epsilon_start,
                                   drqn.epsilon_final, self.decay_episodes)
        fixed = self.config.design.fixed_design
        omega = fixed if fixed is not None else sample_design(self.policy,
                                                              self.design_rng)
        return self._task(episode_idx, omega, epsilon, worker_id)

    def retry_task(self, episode_idx: int, omega: float, epsilon: float,
                   worker_id: int) -> EpisodeTask:
        # design/exploration already drawn at first dispatch; keep them
        self.worker_versions.pop(worker_id, None)
        return self._task(episode_idx, omega, epsilon, worker_id)

    def _task(self, episode_idx: int, omega: float, epsilon: float,
              worker_id: int) -> EpisodeTask:
        held = self.worker_versions.get(worker_id, -1)
        staleness = self.config.training.snapshot_staleness
        if held < 0 or self.update_count - held >= staleness:
            params = self._snapshot()
            self.worker_versions[worker_id] = self.update_count
        else:
            params = None
        age = self.update_count - self.worker_versions[worker_id]
        if age > staleness - 1:
            raise DefectError(
                f"snapshot age {age} exceeds staleness bound {staleness}")
        return EpisodeTask(episode_idx, omega, epsilon,
                           self.slice_for(worker_id, episode_idx), params,
                           self.worker_versions[worker_id])

    # -- completion side ---------------------------------------------------

    def process(self, result: EpisodeResult, worker_id: int) -> None:
        cfg = self.config
        drqn = cfg.drqn
        self.replay.add(result.record)

        losses = []
        if len(self.replay) >= drqn.min_replay_episodes:
            for _ in range(drqn.updates_per_episode):
                batch = sample_training_batch(self.replay, drqn.batch_size,
                                              self.sequence_length,
                                              self.learner_rng)
                if batch is None:
                    break
                losses.append(td_update(self.qnet, self.target, batch,
                                        drqn.gamma, self.adam,
                                        drqn.grad_clip_norm))
                self.update_count += 1
                if self.update_count % drqn.target_sync_interval == 0:
                    sync_target(self.qnet, self.target)

        objective = design_objective(result.sum_reward, result.omega,
                                     cfg.design.annuity_weight,
                                     cfg.design.unit_capacity_cost)
        self.completed += 1

        if cfg.design.fixed_design is None:
            self.block_designs.append(result.omega)
            self.block_objectives.append(objective)
            if len(self.block_designs) == cfg.design.block_size:
                self.blocks_completed += 1
                # blocks gathered while the policy is still near-random
                # carry a junk gradient that can slam mu into a clip bound
                if self.blocks_completed > cfg.design.warmup_blocks:
                    self.policy, grad = update_mu(
                        self.policy, np.array(self.block_designs),
                        np.array(self.block_objectives),
                        cfg.design.learning_rate)
                    self.mu_update_count += 1
                    self.mu_rows.append(MuUpdateRow(self.mu_update_count,
                                                    result.episode_idx,
                                                    self.policy.mu, grad))
                self.block_designs.clear()
                self.block_objectives.clear()

        mean_loss = float(np.mean(losses)) if losses else float("nan")
        self.episode_rows.append(EpisodeRow(
            result.episode_idx, result.omega, result.sum_reward, objective,
            self.policy.mu, mean_loss, result.epsilon, worker_id,
            result.slice_idx, result.window_start, result.params_version))

        if self.completed % cfg.training.eval_interval == 0:
            self.run_evaluation(result.episode_idx)

    def current_design(self) -> float:
        fixed = self.config.design.fixed_design
        return fixed if fixed is not None else self.policy.mu

    def run_evaluation(self, episode_idx: int) -> None:
        design = self.current_design()
        battery = self.config.battery.spec(
            design * self.config.normalization.design_reference)
        rng = np.random.default_rng([self.config.training.seed, _EVAL_STREAM,
                                     self.eval_count])
        result = evaluate(self.qnet, design, self.data, battery, self.market,
                          rng, self.config.training.initial_soc)
        self.eval_count += 1
        self.last_eval_at = self.completed
        self.eval_rows.append(EvaluationRow(
            episode_idx, design, result.sum_reward, result.baseline_revenue,
            result.market_revenue, result.net_revenue,
            result.deviation_penalty, result.degradation,
            result.negative_flag))

    def metrics(self, wall_seconds: float) -> RunMetrics:
        per_second = self.completed / wall_seconds if wall_seconds > 0 else 0.0
        return RunMetrics(self.episode_rows, self.mu_rows, self.eval_rows,
                          self.config.design.mu0, self.policy.mu,
                          wall_seconds, per_second)


def _drive(run: _Run, executor, out_dir: str | Path | None) -> RunMetrics:
    """Dispatch episodes to free workers; learn in completion order."""
    n_episodes = run.config.training.n_episodes
    start_time = time.perf_counter()
    free = deque(range(executor.n_workers))
    alive = set(range(executor.n_workers))
    in_flight: dict[int, EpisodeTask] = {}
    retries: deque[tuple[int, float, float]] = deque()
    next_episode = 0
    last_failure = ""

    try:
        while run.completed < n_episodes:
            while free and (retries or next_episode < n_episodes):
                worker_id = free.popleft()
                if retries:
                    episode_idx, omega, epsilon = retries.popleft()
                    task = run.retry_task(episode_idx, omega, epsilon,
                                          worker_id)
                else:
                    task = run.new_task(next_episode, worker_id)
                    next_episode += 1
                in_flight[worker_id] = task
                executor.submit(worker_id, task)
            if not in_flight:
                raise TrainingError(
                    f"stalled with {run.completed}/{n_episodes} episodes "
                    f"done and no worker available; last failure: "
                    f"{last_failure or 'none'}")
            kind, worker_id, payload = executor.next_result()
            task = in_flight.pop(worker_id)
            if kind == "failed":
                episode_idx, last_failure = payload
                alive.discard(worker_id)
                retries.append((task.episode_idx, task.omega, task.epsilon))
                if not alive:
                    raise TrainingError(
                        f"all {executor.n_workers} workers failed; last: "
                        f"{last_failure}")
                continue
            free.append(worker_id)
            run.process(payload, worker_id)

        if run.last_eval_at != run.completed:
            last_idx = run.episode_rows[-1].episode if run.episode_rows else 0
            run.run_evaluation(last_idx)
    except (TrainingError, DefectError):
        if out_dir is not None:
            write_metrics(run.metrics(time.perf_counter() - start_time),
                          out_dir)
        raise

    metrics = run.metrics(time.perf_counter() - start_time)
    if out_dir is not None:
        write_metrics(metrics, out_dir)
        save_checkpoint(Path(out_dir) / CHECKPOINT_FILE, run.qnet)
    return metrics


def train(config: RunConfig, out_dir: str | Path | None = None) -> RunMetrics:
    """Serial co-optimization of the bidding policy and the battery size."""
    run = _Run(config)
    executor = SerialExecutor(run.context())
    return _drive(run, executor, out_dir)


def train_parallel(config: RunConfig, out_dir: str | Path | None = None,
                   fault_injections: tuple[tuple[int, int], ...] = ()
                   ) -> RunMetrics:
    """Multi-process training: parallel rollouts, one learner, one design owner.

    With workers=1 and a fixed seed the result is bitwise identical to
    train().  A failing worker's episode is re-dispatched to a surviving
    worker; the run fails only when every worker has failed.
    fault_injections is a test seam: (worker_id, episode_idx) pairs that
    raise inside the worker.
    """
    run = _Run(config)
    executor = ProcessExecutor(run.context(), config.training.workers,
                               tuple(fault_injections))
    try:
        return _drive(run, executor, out_dir)
    finally:
        executor.shutdown()


# ---------------------------------------------------------------------------
# Capacity sweep (the two-stage baseline).

@dataclass(frozen=True)
class SweepCell:
    """One fixed-design training run inside a sweep."""

    omega: float
    repeat: int
    seed: int
    objective: float
    sum_reward: float
    negative_flag: bool
    failed: bool
    error: str = ""


@dataclass(frozen=True)
class SweepSummary:
    """Box-plot-ready statistics for one design cell."""

    omega: float
    n_runs: int
    n_flagged: int
    n_failed: int
    mean_objective: float
    filtered_mean_objective: float
    min_objective: float
    q1_objective: float
    median_objective: float
    q3_objective: float
    max_objective: float


@dataclass
class SweepResult:
    cells: list[SweepCell]
    summaries: list[SweepSummary]

    def argmax_omega(self) -> float:
        """Design with the best filtered mean (mean as fallback)."""
        def key(s: SweepSummary) -> float:
            if np.isfinite(s.filtered_mean_objective):
                return s.filtered_mean_objective
            return s.mean_objective
        finite = [s for s in self.summaries if np.isfinite(key(s))]
        if not finite:
            raise TrainingError("sweep produced no successful runs")
        return max(finite, key=key).omega


def _cell_seed(base_seed: int, cell_idx: int, repeat: int) -> int:
    rng = np.random.default_rng([base_seed, 7001, cell_idx, repeat])
    return int(rng.integers(0, 2 ** 63 - 1))


def sweep(config: RunConfig, design_grid, repeats: int = 3,
          out_dir: str | Path | None = None) -> SweepResult:
    """Independent fixed-design trainings over a grid of capacities.

    Each grid point trains `repeats` fresh agents (derived seeds), then
    scores the mean per-episode design objective over the last quarter
    of training episodes: the same in-sample G the design search climbs,
    so sweep argmax and co-optimized mu are directly comparable.  Runs
    whose late-window mean reward is negative are flagged and excluded
    from the filtered mean; failed runs are recorded and skipped.
    """
    grid = [float(w) for w in design_grid]
    if not grid:
        raise ValidationError("design grid must be non-empty")
    for omega in grid:
        if not config.design.lower <= omega <= config.design.upper:
            raise ValidationError(
                f"grid design {omega} outside "
                f"[{config.design.lower}, {config.design.upper}]")
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")

    cells: list[SweepCell] = []
    for cell_idx, omega in enumerate(grid):
        for repeat in range(repeats):
            seed = _cell_seed(config.training.seed, cell_idx, repeat)
            cell_config = replace(
                config,
                design=replace(config.design, fixed_design=omega),
                training=replace(config.training, seed=seed, workers=1))
            try:
                metrics = train(cell_config)
            except (TrainingError, DefectError) as exc:
                cells.append(SweepCell(omega, repeat, seed, float("nan"),
                                       float("nan"), True, True, str(exc)))
                continue
            tail = metrics.episodes[-max(1, len(metrics.episodes) // 4):]
            reward = float(np.mean([row.sum_reward for row in tail]))
            objective = float(np.mean([row.objective for row in tail]))
            cells.append(SweepCell(omega, repeat, seed, objective, reward,
                                   reward < 0.0, False))

    summaries = [summarize_cells(omega, [c for c in cells if c.omega == omega])
                 for omega in grid]
    result = SweepResult(cells, summaries)
    if out_dir is not None:
        write_sweep(result, out_dir)
    return result


def summarize_cells(omega: float, cells: list[SweepCell]) -> SweepSummary:
    ok = [c for c in cells if not c.failed]
    values = np.array([c.objective for c in ok])
    kept = np.array([c.objective for c in ok if not c.negative_flag])
    nan = float("nan")
    if len(values):
        q1, median, q3 = (float(np.percentile(values, p)) for p in (25, 50, 75))
        stats = (float(values.mean()),
                 float(kept.mean()) if len(kept) else nan,
                 float(values.min()), q1, median, q3, float(values.max()))
    else:
        stats = (nan,) * 7
    return SweepSummary(omega, len(cells),
                        sum(c.negative_flag for c in ok),
                        sum(c.failed for c in cells), *stats)


_SWEEP_HEADER = "omega,repeat,seed,objective,sum_reward,negative_flag,failed,error"
_SWEEP_SUMMARY_HEADER = ("omega,n_runs,n_flagged,n_failed,mean_objective,"
                         "filtered_mean_objective,min_objective,q1_objective,"
                         "median_objective,q3_objective,max_objective")


def write_sweep(result: SweepResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [_SWEEP_HEADER]
    for c in result.cells:
        error = c.error.replace(",", ";").replace("\n", " ")
        lines.append(f"{repr(c.omega)},{c.repeat},{c.seed},{repr(c.objective)},"
                     f"{repr(c.sum_reward)},{int(c.negative_flag)},"
                     f"{int(c.failed)},{error}")
    (out / SWEEP_FILE).write_text("\n".join(lines) + "\n")
    _write_rows(out / SWEEP_SUMMARY_FILE, _SWEEP_SUMMARY_HEADER,
                result.summaries)
