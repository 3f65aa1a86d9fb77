"""Generate, save and reload a synthetic market scenario.

The generator produces an hourly series with a solar-like diurnal
generation profile and a daily price shape plus noise. Files are plain
CSV so they can be swapped for real data.
"""

from pathlib import Path

import numpy as np

from cobess.timeseries import (SyntheticProfile, load_scenario,
                               save_scenario, synthesize_scenario)


def main():
    profile = SyntheticProfile(
        peak_generation_mw=1.0, generation_noise_mw=0.05,
        price_mean=40.0, price_daily_amplitude=25.0,
        price_noise=5.0, price_weekly_ramp=10.0)
    scenario = synthesize_scenario(seed=42, n_slots=7 * 24, profile=profile)

    gen = np.array([r.generation_mw for r in scenario.records])
    price = np.array([r.price for r in scenario.records])
    print("one synthetic week, %d slots of %.1f h"
          % (len(scenario.records), scenario.slot_duration_h))
    print("  generation: mean %.3f MW, peak %.3f MW, %d zero-output slots"
          % (gen.mean(), gen.max(), int((gen == 0.0).sum())))
    print("  price: mean %.2f, min %.2f, max %.2f EUR/MWh"
          % (price.mean(), price.min(), price.max()))

    # value of the plant with no battery at all: sell whatever is produced
    baseline = float(np.dot(price, gen) * scenario.slot_duration_h)
    print("  sell-everything revenue for the week: %.2f EUR" % baseline)

    out = Path("demo_week.csv")
    save_scenario(scenario, out)
    reloaded = load_scenario(out, slot_duration_h=scenario.slot_duration_h)
    assert reloaded.records == scenario.records
    print("\nwrote %s (%d bytes), reload is exact" %
          (out, out.stat().st_size))
    out.unlink()


if __name__ == "__main__":
    main()
