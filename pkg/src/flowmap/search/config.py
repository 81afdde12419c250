from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class SearchConfig:
    """Settings of the search for a minimal code length.

    Attributes:
        seed: Seed of the random number generators.
        num_trials: Number of independent restarts; the best one is kept.
        epsilon: Smallest improvement in bits that counts as progress.
        max_tune_iterations: Cap on alternating fine- and coarse-tuning.
        max_level_iterations: Cap on aggregation levels.
        max_move_iterations: Cap on node-moving sweeps per level.
        two_level_only: Skip the search for hierarchical structure.
        parallel_submodules: Search submodules in worker threads.
        max_workers: Number of worker threads (None for the default).
    """

    seed: int = 123
    num_trials: int = 10
    epsilon: float = 1e-10
    max_tune_iterations: int = 20
    max_level_iterations: int = 100
    max_move_iterations: int = 100
    two_level_only: bool = False
    parallel_submodules: bool = False
    max_workers: Optional[int] = None

    def __post_init__(self):
        if self.seed < 0:
            message = f"The seed ({self.seed}) must not be negative."
            raise ValueError(message)
        caps = {
            "num_trials": self.num_trials,
            "max_tune_iterations": self.max_tune_iterations,
            "max_level_iterations": self.max_level_iterations,
            "max_move_iterations": self.max_move_iterations,
        }
        for name, value in caps.items():
            if value < 1:
                message = f"The setting {name} ({value}) must be at least 1."
                raise ValueError(message)
        if not self.epsilon > 0:
            message = f"The threshold epsilon ({self.epsilon}) must be positive."
            raise ValueError(message)
        if self.max_workers is not None and self.max_workers < 1:
            message = f"The number of workers ({self.max_workers}) must be positive."
            raise ValueError(message)
