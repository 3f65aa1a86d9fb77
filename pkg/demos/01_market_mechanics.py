"""Walk through one market slot by hand.

Shows how an action (bid, dispatch scale) turns into charge/discharge power,
how the two-price imbalance settlement prices the deviation from the bid,
and how the state of charge and degradation cost evolve.
"""

import numpy as np

from cobess.market_env import (Action, BatterySpec, EnvState, MarketParams,
                               charge_bound, discharge_bound, settle, step)
from cobess.timeseries import MarketRecord


def main():
    battery = BatterySpec(
        e_max_mwh=1.0, soc_min=0.1, soc_max=0.9,
        eta_c=0.96, eta_d=0.995,
        p_c_unit_max=1.0, p_d_unit_max=1.0,
        degradation_cost=1.0)
    market = MarketParams(alpha_pen=1.0, slot_duration_h=1.0)

    state = EnvState(slot=0, soc=0.5)
    record = MarketRecord(timestamp_index=0, generation_mw=0.5, price=10.0)

    print("slot 0: generating %.2f MW at %.1f EUR/MWh, soc %.2f"
          % (record.generation_mw, record.price, state.soc))
    print("  feasible charge up to %.3f MW, discharge up to %.3f MW"
          % (charge_bound(state, battery, market),
             discharge_bound(state, battery, market)))

    # bid below the generation and push the surplus into the battery
    action = Action(bid_mw=0.2, scale=1.0)
    out = step(state, action, record, battery, market)
    print("  bid %.1f MW, scale %.1f -> charge %.3f MW, dispatch %.3f MW"
          % (action.bid_mw, action.scale, out.p_c_mw, out.dispatched_mw))
    print("  market revenue %+.3f, degradation %-.3f, net %+.3f"
          % (out.market_revenue, out.degradation, out.net_profit))
    print("  soc %.3f -> %.3f" % (state.soc, out.next_state.soc))

    # the settlement itself is a pure function; deviations are charged a
    # penalty on top of the energy price, equivalent to a two-price scheme
    revenue, penalty = settle(bid_mw=0.4, dispatched_mw=0.3, price=10.0,
                              params=market)
    surplus_price = (1.0 - market.alpha_pen) * 10.0
    deficit_price = (1.0 + market.alpha_pen) * 10.0
    two_price = 10.0 * 0.4 - deficit_price * 0.1
    print("\nunder-delivering 0.3 MW against a 0.4 MW bid:")
    print("  settlement %+.3f (penalty %.3f), two-price form %+.3f"
          % (revenue, penalty, two_price))
    print("  surplus price %.1f, deficit price %.1f EUR/MWh"
          % (surplus_price, deficit_price))
    assert np.isclose(revenue, two_price, rtol=1e-12)

    # reward = net profit minus the sell-everything baseline, so a policy
    # that never touches the battery and bids its generation scores zero
    baseline = record.price * record.generation_mw * market.slot_duration_h
    print("\nreward decomposition: net %+.3f - baseline %+.3f = %+.3f"
          % (out.net_profit, baseline, out.reward))


if __name__ == "__main__":
    main()
