"""Tactile tasks: a depth-rendering sensor moved over a 100 x 100 mm platform."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import constants as C
from .assets import (mnist3d_label, mnist3d_mesh, shape_mesh, split_mnist3d, starstruck_scene,
                     starstruck_split, wrench_mesh)
from .core import ActivePerceptionEnv, InvalidArgument, PredictionSpace, TaskSpec, make_rngs, \
    project_to_unit_disk
from .mesh import TriangleMesh, mesh_volume, read_obj
from .metrics import angle_between, regression_metrics
from .render import MeshIndex, depth_to_obs, render_depth

WORKSPACE_LO = np.array([-60.0, -60.0, 0.0])
WORKSPACE_HI = np.array([60.0, 60.0, 30.0])
STEP_SCALE_MM = np.array([20.0, 20.0, 10.0])
CONTACT_EPS_MM = 1e-6
PERTURB_SIGMA_MM = 1.0
PERTURB_SIGMA_RAD = math.radians(2.0)
VOLUME_REF_MM3 = 20_000.0
PLATFORM_HALF = C.PLATFORM_SIZE_MM / 2
MNIST_MAX_ROTATION = math.pi / 8


def move_sensor(pos, action, step_scale=STEP_SCALE_MM):
    step = np.asarray(step_scale) * project_to_unit_disk(action)
    return np.clip(np.asarray(pos, dtype=np.float64) + step, WORKSPACE_LO, WORKSPACE_HI)


def normalize_sensor_pos(pos):
    return 2.0 * (np.asarray(pos) - WORKSPACE_LO) / (WORKSPACE_HI - WORKSPACE_LO) - 1.0


def angular_error(pred, true_theta):
    """Angle between a predicted ``(sin, cos)`` orientation and ``true_theta``."""
    s, c = float(pred[0]), float(pred[1])
    if s == 0.0 and c == 0.0:
        raise InvalidArgument("orientation undefined for a zero (sin, cos) vector")
    return angle_between(s, c, true_theta)


@dataclass
class ObjectInstance:
    mesh: TriangleMesh
    index: MeshIndex
    pose: np.ndarray  # (x mm, y mm, theta rad)
    outline: np.ndarray  # xy points whose rotated extent bounds the footprint

    def extent(self, theta):
        c, s = math.cos(theta), math.sin(theta)
        x = c * self.outline[:, 0] - s * self.outline[:, 1]
        y = s * self.outline[:, 0] + c * self.outline[:, 1]
        return np.array([x.min(), y.min()]), np.array([x.max(), y.max()])

    def clamp_to_platform(self, pose):
        lo, hi = self.extent(pose[2])
        out = np.array(pose, dtype=np.float64)
        for k in range(2):
            a, b = -PLATFORM_HALF - lo[k], PLATFORM_HALF - hi[k]
            out[k] = min(max(out[k], a), b) if a <= b else (a + b) / 2
        return out

    def random_pose(self, rng, max_rotation=math.pi):
        theta = rng.uniform(-max_rotation, max_rotation)
        lo, hi = self.extent(theta)
        xy = []
        for k in range(2):
            a, b = -PLATFORM_HALF - lo[k], PLATFORM_HALF - hi[k]
            xy.append(rng.uniform(a, b) if a <= b else (a + b) / 2)
        return np.array([xy[0], xy[1], theta])


def _hull_points(mesh):
    from scipy.spatial import ConvexHull

    xy = mesh.vertices[:, :2]
    return xy[ConvexHull(xy).vertices]


def mnist3d_obj_name(object_id):
    return f"mnist3d_{int(object_id):05d}.obj"


@lru_cache(maxsize=64)
def _mnist_instance_parts(object_id, corpus_seed, asset_dir=None):
    path = Path(asset_dir) / mnist3d_obj_name(object_id) if asset_dir else None
    if path is not None and path.exists():
        mesh = read_obj(path)
    else:
        mesh = mnist3d_mesh(object_id, corpus_seed)
    return mesh, MeshIndex(mesh), _hull_points(mesh)


@lru_cache(maxsize=16)
def _fixed_instance_parts(kind, key):
    mesh = shape_mesh(key) if kind == "shape" else wrench_mesh(key)
    return mesh, MeshIndex(mesh), _hull_points(mesh)


def perturb_on_contact(obj: ObjectInstance, contact, rng, enabled=True):
    """Random shift of a touched object; returns a new instance."""
    if not (contact and enabled):
        return obj
    d = rng.normal(0.0, 1.0, size=3) * np.array([PERTURB_SIGMA_MM, PERTURB_SIGMA_MM,
                                                  PERTURB_SIGMA_RAD])
    pose = obj.clamp_to_platform(obj.pose + d)
    return ObjectInstance(obj.mesh, obj.index, pose, obj.outline)


class TactileEnv(ActivePerceptionEnv):
    perturbation = True

    def __init__(self, prediction_space, step_limit, split="train", perturbation=None):
        super().__init__()
        self.split = split
        if perturbation is not None:
            self.perturbation = bool(perturbation)
        self.spec = TaskSpec(3, prediction_space, step_limit,
                             "cross_entropy" if prediction_space.is_classification else "mse",
                             0.0, ("sensor_img", "sensor_pos", "time_step"))

    def _reset(self, seed):
        scene_rng, sensor_rng, self._perturb_rng = make_rngs(seed, 3)
        self.objects = self._make_scene(scene_rng)
        self._sensor = sensor_rng.uniform(WORKSPACE_LO, WORKSPACE_HI)
        return self._observe()

    def _observe(self):
        depth = render_depth([(o.index, tuple(o.pose)) for o in self.objects], self._sensor)
        self.last_depth = depth
        return {"sensor_img": depth_to_obs(depth),
                "sensor_pos": normalize_sensor_pos(self._sensor).astype(np.float32)}

    def _transition(self, a):
        self._sensor = move_sensor(self._sensor, a)
        obs = self._observe()
        contact = bool(self.last_depth.max() > CONTACT_EPS_MM)
        self.objects = [perturb_on_contact(o, contact, self._perturb_rng, self.perturbation)
                        for o in self.objects]
        return obs, False

    def hidden_state(self):
        return {"sensor": self._sensor.copy(),
                "poses": np.array([o.pose for o in self.objects])}

    def _make_scene(self, rng):
        raise NotImplementedError


class _MnistObjectMixin:
    def _init_pool(self, split, corpus_seed, max_objects, asset_dir):
        if split not in C.MNIST3D_SPLITS:
            raise InvalidArgument(f"unknown MNIST 3D split {split!r}")
        self.corpus_seed = corpus_seed
        # pre-generated OBJ files are used when present, otherwise meshes are built on demand
        self.asset_dir = None if asset_dir is None else str(asset_dir)
        pool = split_mnist3d(seed=corpus_seed)[split]
        self.pool = pool if max_objects is None else pool[:max_objects]

    def _mnist_object(self, rng):
        self.object_id = int(self.pool[int(rng.integers(len(self.pool)))])
        mesh, index, hull = _mnist_instance_parts(self.object_id, self.corpus_seed,
                                                  self.asset_dir)
        obj = ObjectInstance(mesh, index, np.zeros(3), hull)
        obj.pose = obj.random_pose(rng, MNIST_MAX_ROTATION)
        return obj


class TactileMNISTEnv(_MnistObjectMixin, TactileEnv):
    env_id = "TactileMNIST-v0"

    def __init__(self, split="train", corpus_seed=0, max_objects=None, asset_dir=None,
                 perturbation=None):
        super().__init__(PredictionSpace("classification", 10), C.STEP_LIMITS[self.env_id], split,
                         perturbation)
        self._init_pool(split, corpus_seed, max_objects, asset_dir)

    def _make_scene(self, rng):
        return [self._mnist_object(rng)]

    def prediction_target(self):
        return mnist3d_label(self.object_id)


class TactileMNISTVolumeEnv(_MnistObjectMixin, TactileEnv):
    env_id = "TactileMNISTVolume-v0"

    def __init__(self, split="train", corpus_seed=0, max_objects=None, asset_dir=None,
                 perturbation=None):
        super().__init__(PredictionSpace("regression", 1), C.STEP_LIMITS[self.env_id], split,
                         perturbation)
        self._init_pool(split, corpus_seed, max_objects, asset_dir)

    def _make_scene(self, rng):
        obj = self._mnist_object(rng)
        self.volume_mm3 = mesh_volume(obj.mesh)
        return [obj]

    def prediction_target(self):
        return np.array([self.volume_mm3 / VOLUME_REF_MM3])

    def _metrics(self, prediction, target):
        return regression_metrics(prediction, target, "volume", volume_ref_mm3=VOLUME_REF_MM3)


class ToolboxEnv(TactileEnv):
    env_id = "Toolbox-v0"

    def __init__(self, split="train", perturbation=None):
        super().__init__(PredictionSpace("regression", 4), C.STEP_LIMITS[self.env_id], split,
                         perturbation)

    def _make_scene(self, rng):
        self.variant = int(rng.integers(C.TOOLBOX_VARIANTS))
        mesh, index, hull = _fixed_instance_parts("tool", self.variant)
        obj = ObjectInstance(mesh, index, np.zeros(3), hull)
        obj.pose = obj.random_pose(rng)
        return [obj]

    def prediction_target(self):
        x, y, th = self.objects[0].pose
        return np.array([x / PLATFORM_HALF, y / PLATFORM_HALF, math.sin(th), math.cos(th)])

    def _metrics(self, prediction, target):
        return regression_metrics(prediction, target, "toolbox", position_scale_mm=PLATFORM_HALF)


class StarstruckEnv(TactileEnv):
    env_id = "Starstruck-v0"
    perturbation = False

    def __init__(self, split="train", corpus_seed=0, perturbation=None):
        super().__init__(PredictionSpace("classification", 3), C.STEP_LIMITS[self.env_id], split,
                         perturbation)
        self.corpus_seed = corpus_seed
        self.pool = starstruck_split(split)

    def _make_scene(self, rng):
        self.layout_index = int(self.pool[int(rng.integers(len(self.pool)))])
        self.layout = starstruck_scene(self.layout_index, self.corpus_seed)
        objs = []
        for shape, pose in self.layout.items:
            mesh, index, hull = _fixed_instance_parts("shape", shape)
            objs.append(ObjectInstance(mesh, index, np.array(pose, dtype=np.float64), hull))
        return objs

    def prediction_target(self):
        return self.layout.label
