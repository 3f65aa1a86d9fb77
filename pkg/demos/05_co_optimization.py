"""Co-optimize the bidding policy and the battery size in one run.

The battery capacity is drawn each episode from a Gaussian design
distribution; after every block of episodes the mean is nudged along a
score-function gradient estimate of the capacity-cost-adjusted return.
The policy network sees the sampled capacity as an input, so a single
network serves the whole design range while the distribution narrows
onto the profitable sizes.  A few warmup blocks are discarded first:
returns collected while the policy is still near-random say nothing
about capacity and would only kick the mean around.
"""

from cobess.config import config_from_dict
from cobess.trainer import train


def main():
    config = config_from_dict({
        "scenario": {"synthetic_seed": 11, "n_slots": 168,
                     "episode_slots": 24},
        "synthetic_profile": {"peak_generation_mw": 0.3, "price_noise": 0.3,
                              "price_weekly_ramp": 0.0,
                              "generation_noise_mw": 0.01},
        "actions": {"bids": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
                    "scales": [0.0, 0.5, 1.0]},
        "drqn": {"hidden_units": 32, "gamma": 0.9, "learning_rate": 2e-3,
                 "sequence_length": 8, "batch_size": 8,
                 "replay_capacity": 64, "updates_per_episode": 4,
                 "target_sync_interval": 100, "epsilon_final": 0.02,
                 "epsilon_decay_fraction": 0.2},
        "design": {"mu0": 0.9, "sigma": 0.15, "learning_rate": 5e-4,
                   "block_size": 15, "warmup_blocks": 10,
                   "unit_capacity_cost": 3.5},
        "training": {"n_episodes": 2000, "seed": 0,
                     "eval_interval": 10 ** 9},
    })

    print("co-optimizing over %d episodes (design blocks of %d)..."
          % (config.training.n_episodes, config.design.block_size))
    metrics = train(config)

    print("\n%-8s %-10s %-12s" % ("update", "episode", "mu"))
    stride = max(1, len(metrics.mu_updates) // 10)
    for row in metrics.mu_updates[::stride]:
        print("%-8d %-10d %.4f" % (row.update, row.episode, row.mu))

    print("\ndesign mean moved %.3f -> %.3f over %d updates"
          % (metrics.mu0, metrics.final_mu, len(metrics.mu_updates)))
    final = metrics.final_evaluation
    print("final greedy evaluation at design %.3f: net revenue %+.3f"
          % (final.design, final.net_revenue))


if __name__ == "__main__":
    main()
