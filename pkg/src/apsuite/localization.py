"""Self-localization tasks: LightDark and the LIDAR map environments.

In both, the prediction target for a step is the position at which the agent's
most recent observation was taken, i.e. the position before the step's move.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constants as C
from .core import ActivePerceptionEnv, PredictionSpace, TaskSpec, make_rngs, project_to_unit_disk
from .maps import generate_maze, generate_rooms, lidar_scan, move_with_collision

LIGHTDARK_BOUNDS = 2.0
STATIC_MAP_SEEDS = {"maze": 0, "rooms": 0}


@dataclass(frozen=True)
class BrightnessField:
    """Vertical light band: brightness is a Gaussian in x around ``band_center``."""

    band_center: float = 0.75
    band_width: float = 0.4
    sigma_min: float = 0.01
    sigma_max: float = 0.5

    def brightness(self, pos):
        x = float(pos[0])
        return float(np.exp(-((x - self.band_center) ** 2) / (2 * self.band_width ** 2)))

    def sigma(self, pos):
        return self.sigma_min + (1.0 - self.brightness(pos)) * (self.sigma_max - self.sigma_min)


def lightdark_observe(pos, field: BrightnessField, rng):
    pos = np.asarray(pos, dtype=np.float64)
    noisy = pos + rng.normal(0.0, 1.0, size=2) * field.sigma(pos)
    return np.clip(noisy, -LIGHTDARK_BOUNDS, LIGHTDARK_BOUNDS)


class LightDarkEnv(ActivePerceptionEnv):
    env_id = "LightDark-v0"

    def __init__(self, field: BrightnessField = BrightnessField(),
                 step_limit=C.STEP_LIMITS["LightDark-v0"]):
        super().__init__()
        self.field = field
        self.spec = TaskSpec(2, PredictionSpace("regression", 2), step_limit, "mse",
                             C.LIGHTDARK_BONUS, ("noisy_position", "time_step"))

    def _reset(self, seed):
        init_rng, self._noise_rng = make_rngs(seed, 2)
        self._pos = init_rng.uniform(-1.0, 1.0, size=2)
        self._obs_pos = self._pos.copy()
        return self._observe()

    def _observe(self):
        self._obs_pos = self._pos.copy()
        return {"noisy_position": lightdark_observe(self._pos, self.field, self._noise_rng)
                .astype(np.float32)}

    def _transition(self, a):
        self._pos = self._pos + C.LIGHTDARK_STEP_SCALE * project_to_unit_disk(a)
        out = bool(np.any(np.abs(self._pos) > LIGHTDARK_BOUNDS))
        return self._observe(), out

    def prediction_target(self):
        return self._obs_pos.copy()

    def hidden_state(self):
        return {"pos": self._pos.copy()}


class LidarLocEnv(ActivePerceptionEnv):
    """Localize inside a grid map from 8 LIDAR beams and exact odometry.

    Static variants keep one map (generated at a pinned seed) for every episode;
    dynamic variants draw a fresh map per episode and show it to the agent.
    """

    def __init__(self, kind="maze", static=False, step_limit=16, static_seed=None):
        super().__init__()
        self.kind = kind
        self.static = static
        self.size = C.MAP_SIZES[kind]
        self._generator = generate_maze if kind == "maze" else generate_rooms
        name = "Maze" if kind == "maze" else "Rooms"
        self.env_id = f"LIDARLoc{name}{'Static' if static else ''}-v0"
        keys = ("lidar", "odometry", "time_step") + (() if static else ("map",))
        self.spec = TaskSpec(2, PredictionSpace("regression", 2), step_limit, "mse", 0.0, keys)
        self._static_map = None
        if static:
            seed = STATIC_MAP_SEEDS[kind] if static_seed is None else static_seed
            self._static_map = self._generator(seed, self.size)

    def _reset(self, seed):
        map_rng, pos_rng = make_rngs(seed, 2)
        if self.static:
            self.map = self._static_map
        else:
            self.map = self._generator(int(map_rng.integers(2 ** 63)), self.size)
        free = self.map.free_cells()
        cell = free[int(pos_rng.integers(len(free)))]
        self._pos = cell + pos_rng.uniform(0.0, 1.0, size=2)
        self._obs_pos = self._pos.copy()
        return self._observe(np.zeros(2))

    def _observe(self, odometry):
        self._obs_pos = self._pos.copy()
        obs = {
            "lidar": lidar_scan(self.map, self._pos).astype(np.float32),
            "odometry": np.asarray(odometry, dtype=np.float32),
        }
        if not self.static:
            obs["map"] = self.map.as_image()
        return obs

    def _transition(self, a):
        self._pos, realized = move_with_collision(self.map, self._pos, project_to_unit_disk(a))
        return self._observe(realized), False

    def normalized(self, pos):
        return 2.0 * np.asarray(pos, dtype=np.float64) / (self.size - 1) - 1.0

    def prediction_target(self):
        return self.normalized(self._obs_pos)

    def hidden_state(self):
        return {"pos": self._pos.copy(), "map": self.map.cells.copy()}
