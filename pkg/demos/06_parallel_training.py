"""Parallel episode rollouts with a single central learner.

Workers each roll out episodes against a snapshot of the policy
parameters; the parent process does all learning and design updates.
Dispatch happens in episode order with one task in flight per worker,
so a single worker reproduces the serial run bit for bit, and crashed
workers have their episodes retried elsewhere with the same sampled
design and exploration rate.
"""

import os

from cobess.config import config_from_dict
from cobess.trainer import train, train_parallel


def base_config(workers):
    return config_from_dict({
        "scenario": {"synthetic_seed": 5, "n_slots": 96,
                     "episode_slots": 24},
        "drqn": {"hidden_units": 16, "sequence_length": 8,
                 "batch_size": 8, "replay_capacity": 32,
                 "updates_per_episode": 2},
        "design": {"sigma": 0.2, "learning_rate": 1e-4, "block_size": 10},
        "training": {"n_episodes": 30, "seed": 9, "eval_interval": 10,
                     "workers": workers},
    })


def main():
    print("serial run...")
    serial = train(base_config(workers=1))
    print("  final mu %.6f, %d evaluations" %
          (serial.final_mu, len(serial.evaluations)))

    print("parallel run with one worker (must be bitwise identical)...")
    one = train_parallel(base_config(workers=1))
    assert one.episodes == serial.episodes
    assert one.evaluations == serial.evaluations
    print("  identical: yes")

    workers = min(4, os.cpu_count() or 1)
    if workers > 1:
        print("parallel run with %d workers..." % workers)
        wide = train_parallel(base_config(workers=workers))
        by_worker = {}
        for row in wide.episodes:
            by_worker[row.worker] = by_worker.get(row.worker, 0) + 1
        print("  episodes per worker: %s" % dict(sorted(by_worker.items())))
        print("  %.1f episodes/s (serial ran %.1f)" %
              (wide.episodes_per_second, serial.episodes_per_second))
    else:
        print("single-CPU machine, skipping the multi-worker comparison")

    # deliberate worker crashes are retried on the remaining workers
    print("injecting a worker fault at episode 2...")
    faulty = train_parallel(base_config(workers=2),
                            fault_injections=((0, 2),))
    assert len(faulty.episodes) == 30
    print("  run still completed all %d episodes" % len(faulty.episodes))


if __name__ == "__main__":
    main()
