"""Real-time market environment: dispatch, settlement, battery dynamics, reward.

All operations are stateless functions over explicit value types, so
independent workers can step their own episodes concurrently without
coordination.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DefectError, ValidationError
from .timeseries import MarketRecord

SOC_TOLERANCE = 1e-9


@dataclass(frozen=True)
class BatterySpec:
    """Physical battery parameters; capacity e_max_mwh is the sized design.

    Power limits scale with capacity: the maximum charge (discharge) power
    is p_c_unit_max * e_max_mwh (p_d_unit_max * e_max_mwh).
    """

    e_max_mwh: float
    soc_min: float = 0.1
    soc_max: float = 0.9
    eta_c: float = 0.96
    eta_d: float = 0.995
    p_c_unit_max: float = 1.0   # MW per MWh of capacity
    p_d_unit_max: float = 1.0
    degradation_cost: float = 1.0   # currency per MWh of throughput

    def __post_init__(self):
        if not self.e_max_mwh > 0:
            raise ValidationError(f"e_max_mwh must be > 0, got {self.e_max_mwh}")
        if not 0 < self.soc_min < self.soc_max < 1:
            raise ValidationError(
                f"need 0 < soc_min < soc_max < 1, got ({self.soc_min}, {self.soc_max})")
        for name in ("eta_c", "eta_d"):
            eta = getattr(self, name)
            if not 0 < eta <= 1:
                raise ValidationError(f"{name} must be in (0, 1], got {eta}")
        if not self.p_c_unit_max > 0 or not self.p_d_unit_max > 0:
            raise ValidationError("per-unit power limits must be > 0")
        if self.degradation_cost < 0:
            raise ValidationError("degradation_cost must be >= 0")

    def sized(self, e_max_mwh: float) -> "BatterySpec":
        """Same chemistry, different capacity."""
        return BatterySpec(e_max_mwh, self.soc_min, self.soc_max, self.eta_c,
                           self.eta_d, self.p_c_unit_max, self.p_d_unit_max,
                           self.degradation_cost)


@dataclass(frozen=True)
class MarketParams:
    """Imbalance penalty factor and slot duration."""

    alpha_pen: float
    slot_duration_h: float

    def __post_init__(self):
        if self.alpha_pen < 0:
            raise ValidationError(f"alpha_pen must be >= 0, got {self.alpha_pen}")
        if not self.slot_duration_h > 0:
            raise ValidationError("slot_duration_h must be > 0")


@dataclass(frozen=True)
class EnvState:
    """Slot index, state of charge, and the previous slot's observables."""

    slot: int
    soc: float
    last_generation: float = 0.0
    last_price: float = 0.0


@dataclass(frozen=True)
class Action:
    """A market bid (MW) and a charge/discharge scaling factor."""

    bid_mw: float
    scale: float

    def __post_init__(self):
        if self.bid_mw < 0:
            raise ValidationError(f"bid_mw must be >= 0, got {self.bid_mw}")
        if self.scale < 0:
            raise ValidationError(f"scale must be >= 0, got {self.scale}")


@dataclass(frozen=True)
class StepOutcome:
    """Everything produced by one market slot, including the next state."""

    reward: float
    net_profit: float
    market_revenue: float
    dispatched_mw: float
    p_c_mw: float
    p_d_mw: float
    deviation_penalty: float
    degradation: float
    next_state: EnvState


def charge_bound(state: EnvState, spec: BatterySpec, params: MarketParams) -> float:
    """Maximum charging power (MW): SOC headroom or the capacity-scaled rate."""
    headroom = spec.e_max_mwh * (spec.soc_max - state.soc) / params.slot_duration_h
    return max(0.0, min(headroom, spec.p_c_unit_max * spec.e_max_mwh))


def discharge_bound(state: EnvState, spec: BatterySpec, params: MarketParams) -> float:
    """Maximum discharging power (MW): SOC floor margin or the rate limit.

    The floor margin carries the discharge efficiency so that draining at
    the bound lands exactly on soc_min (the cell drains p_d / eta_d).
    """
    margin = (spec.eta_d * spec.e_max_mwh * (state.soc - spec.soc_min)
              / params.slot_duration_h)
    return max(0.0, min(margin, spec.p_d_unit_max * spec.e_max_mwh))


def apply_action(state: EnvState, action: Action, x_t: float,
                 spec: BatterySpec, params: MarketParams) -> tuple[float, float]:
    """Map (bid, scale) and realized generation to clamped (p_c, p_d) in MW.

    Surplus generation charges, deficit discharges, each scaled by the
    action's factor; at most one of the two powers is nonzero.
    """
    if x_t < 0:
        raise ValidationError(f"generation must be >= 0, got {x_t}")
    mismatch = x_t - action.bid_mw
    p_c = min(action.scale * max(mismatch, 0.0),
              charge_bound(state, spec, params))
    p_d = min(action.scale * max(-mismatch, 0.0),
              discharge_bound(state, spec, params))
    return p_c, p_d


def settle(bid_mw: float, dispatched_mw: float, price: float,
           params: MarketParams) -> tuple[float, float]:
    """Market revenue and the separately-reported deviation penalty.

    Revenue = price * (dispatched - alpha_pen * |bid - dispatched|) * dt,
    which equals the two-price form with surplus price (1 - alpha_pen) * price
    and deficit price (1 + alpha_pen) * price.
    """
    deviation = abs(bid_mw - dispatched_mw)
    penalty = price * params.alpha_pen * deviation * params.slot_duration_h
    revenue = price * dispatched_mw * params.slot_duration_h - penalty
    return revenue, penalty


def step(state: EnvState, action: Action, record: MarketRecord,
         spec: BatterySpec, params: MarketParams) -> StepOutcome:
    """Advance one slot: dispatch, settle, degrade, update SOC, form reward.

    The reward subtracts the action-independent term price * generation * dt
    from the net profit, which reduces reward variance without changing the
    ordering of policies.
    """
    if record.timestamp_index != state.slot:
        raise ValidationError(
            f"record slot {record.timestamp_index} does not match state slot {state.slot}")
    x_t, price = record.generation_mw, record.price
    dt = params.slot_duration_h

    p_c, p_d = apply_action(state, action, x_t, spec, params)
    dispatched = x_t - p_c + p_d
    market_revenue, penalty = settle(action.bid_mw, dispatched, price, params)
    degradation = spec.degradation_cost * (p_c + p_d) * dt
    net_profit = market_revenue - degradation
    reward = net_profit - price * x_t * dt

    soc = (state.soc
           + spec.eta_c * p_c * dt / spec.e_max_mwh
           - p_d * dt / (spec.eta_d * spec.e_max_mwh))
    if soc < spec.soc_min - SOC_TOLERANCE or soc > spec.soc_max + SOC_TOLERANCE:
        raise DefectError(
            f"SOC {soc!r} escaped [{spec.soc_min}, {spec.soc_max}] at slot "
            f"{state.slot} (p_c={p_c}, p_d={p_d})")
    soc = min(max(soc, spec.soc_min), spec.soc_max)

    next_state = EnvState(slot=state.slot + 1, soc=soc,
                          last_generation=x_t, last_price=price)
    return StepOutcome(reward=reward, net_profit=net_profit,
                       market_revenue=market_revenue, dispatched_mw=dispatched,
                       p_c_mw=p_c, p_d_mw=p_d, deviation_penalty=penalty,
                       degradation=degradation, next_state=next_state)


def initial_soc(spec: BatterySpec) -> float:
    """Default episode-start SOC: midpoint of the admissible band."""
    return 0.5 * (spec.soc_min + spec.soc_max)
