"""Simulation parameters shared by every run.

All lengths are expressed in units of the perception range, all times in
integer timesteps.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Raised when a parameter set violates a hard constraint."""


@dataclass
class SimConfig:
    n_agents: int
    swarm_radius: float
    refractory_time: int = 5
    cycle_max: int = 100
    perception_range: float = 1.0
    step_length: float | None = None
    activate_delay: int = 1
    loss_probability: float = 0.0
    heading_noise_std: float = 0.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_agents < 2:
            raise ConfigError(f"n_agents must be >= 2, got {self.n_agents}")
        if self.swarm_radius <= 0:
            raise ConfigError(f"swarm_radius must be > 0, got {self.swarm_radius}")
        if self.perception_range <= 0:
            raise ConfigError(
                f"perception_range must be > 0, got {self.perception_range}"
            )
        if self.step_length is None:
            # agents advance one sixth of a perception range per move
            self.step_length = self.perception_range / 6.0
        if self.step_length <= 0:
            raise ConfigError(f"step_length must be > 0, got {self.step_length}")
        if self.refractory_time < 1:
            raise ConfigError(
                f"refractory_time must be >= 1, got {self.refractory_time}"
            )
        if self.cycle_max < 1:
            raise ConfigError(f"cycle_max must be >= 1, got {self.cycle_max}")
        if self.activate_delay != 1:
            raise ConfigError("activate_delay is fixed at 1 timestep")
        if not 0.0 <= self.loss_probability <= 1.0:
            raise ConfigError(
                f"loss_probability must be in [0, 1], got {self.loss_probability}"
            )
        if self.heading_noise_std < 0:
            raise ConfigError(
                f"heading_noise_std must be >= 0, got {self.heading_noise_std}"
            )
        bound = self.edge_propagation_bound()
        if self.refractory_time < bound:
            warnings.warn(
                f"refractory_time={self.refractory_time} is below the edge "
                f"propagation bound of {bound} hops for swarm_radius="
                f"{self.swarm_radius}; a wave circling the rim may re-trigger "
                "agents (echo).",
                RefractoryBoundWarning,
                stacklevel=2,
            )

    def edge_propagation_bound(self) -> int:
        """Hops for a wave to travel half the rim of the initial disc.

        A wavefront started on the rim splits both ways and the two fronts
        meet after half a circumference, so that is the relevant bound on
        echo-free refractory time.
        """
        return math.ceil(math.pi * self.swarm_radius / self.perception_range)


class RefractoryBoundWarning(UserWarning):
    """refractory_time is shorter than the rim propagation time."""
