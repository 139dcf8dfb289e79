"""Shared contract for every environment: losses, reward, action projection,
and the reset/step lifecycle.

An action is a pair ``(base_action, prediction)``. Only the base action moves
the hidden state; the prediction is scored against the hidden target and
otherwise ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import constants as C
from .metrics import classification_metrics, regression_metrics


class InvalidArgument(ValueError):
    pass


class InvalidState(ValueError):
    pass


class LifecycleError(RuntimeError):
    pass


@dataclass(frozen=True)
class PredictionSpace:
    """Either ``classification`` with ``size`` = number of classes K, or
    ``regression`` with ``size`` = target dimension."""

    kind: str
    size: int

    def __post_init__(self):
        if self.kind == "classification":
            if self.size < 2:
                raise InvalidArgument("classification needs K >= 2")
        elif self.kind == "regression":
            if self.size < 1:
                raise InvalidArgument("regression needs dim >= 1")
        else:
            raise InvalidArgument(f"unknown prediction kind {self.kind!r}")

    @property
    def is_classification(self):
        return self.kind == "classification"


@dataclass(frozen=True)
class TaskSpec:
    base_action_dim: int
    prediction_space: PredictionSpace
    step_limit: int
    loss_kind: str
    reward_bonus: float = 0.0
    observation_keys: tuple = ()
    # agent-side discount; environments never read it
    gamma: float = 1.0

    def __post_init__(self):
        if self.step_limit < 1:
            raise InvalidArgument("step_limit must be >= 1")
        if self.loss_kind not in ("cross_entropy", "mse"):
            raise InvalidArgument(f"unknown loss {self.loss_kind!r}")

    def to_dict(self):
        return {
            "base_action_dim": self.base_action_dim,
            "prediction_kind": self.prediction_space.kind,
            "prediction_size": self.prediction_space.size,
            "step_limit": self.step_limit,
            "loss_kind": self.loss_kind,
            "reward_bonus": self.reward_bonus,
            "observation_keys": list(self.observation_keys),
            "gamma": self.gamma,
        }


@dataclass
class StepOutcome:
    observation: dict
    reward: float
    loss: float
    terminated: bool
    truncated: bool
    metrics: list = field(default_factory=list)

    def metric(self, name):
        for k, v in self.metrics:
            if k == name:
                return v
        raise KeyError(name)


def _finite_vector(v, what="input"):
    a = np.asarray(v, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(a)):
        raise InvalidArgument(f"non-finite {what}: {v!r}")
    return a


def project_to_unit_disk(v):
    """Scale ``v`` down onto the unit ball if its norm exceeds one.

    Vectors already inside the ball are returned unchanged, so small steps keep
    their magnitude. Works for any dimension.
    """
    a = _finite_vector(v, "vector")
    n = math.sqrt(float(np.dot(a, a)))
    if n > 1.0:
        return a / n
    return a


def cross_entropy(logits, label):
    z = _finite_vector(logits, "logits")
    if z.size < 2:
        raise InvalidArgument("cross entropy needs at least 2 logits")
    label = int(label)
    if not 0 <= label < z.size:
        raise InvalidArgument(f"label {label} out of range for K={z.size}")
    m = z.max()
    lse = m + math.log(float(np.sum(np.exp(z - m))))
    return max(0.0, lse - float(z[label]))


def mse(pred, target):
    p = _finite_vector(pred, "prediction")
    t = np.asarray(target, dtype=np.float64).reshape(-1)
    if p.shape != t.shape:
        raise InvalidArgument(f"length mismatch {p.size} vs {t.size}")
    d = p - t
    return float(np.mean(d * d))


def step_reward(base_action, loss, bonus=0.0):
    if loss < 0:
        raise InvalidArgument("loss must be non-negative")
    a = _finite_vector(base_action, "action")
    return float(bonus) - C.ACTION_REG_COEF * math.sqrt(float(np.dot(a, a))) - float(loss)


def normalize_time(step_index, step_limit):
    if not 0 <= step_index <= step_limit:
        raise InvalidArgument(f"step {step_index} outside [0, {step_limit}]")
    return 2.0 * step_index / step_limit - 1.0


def make_rngs(seed, n):
    """``n`` independent generators derived from one 64-bit seed."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return [np.random.Generator(np.random.PCG64(child)) for child in ss.spawn(n)]


class ActivePerceptionEnv:
    """Base class implementing the step/reset lifecycle.

    Subclasses provide ``_reset(seed)`` returning the first observation (without
    ``time_step``), ``_transition(base_action)`` returning ``(obs, terminated)``,
    ``prediction_target()`` and optionally ``_metrics``.
    """

    env_id = "base"
    spec: TaskSpec

    def __init__(self):
        self._step_index = 0
        self._done = True
        self._started = False

    @property
    def step_index(self):
        return self._step_index

    def reset(self, seed=0):
        self._step_index = 0
        self._done = False
        self._started = True
        obs = self._reset(int(seed))
        obs["time_step"] = np.float32(-1.0)
        return obs

    def step(self, base_action, prediction):
        if not self._started:
            raise LifecycleError("step() called before reset()")
        if self._done:
            raise LifecycleError("step() called after episode end")
        a = np.asarray(base_action, dtype=np.float64).reshape(-1)
        if a.size != self.spec.base_action_dim:
            raise InvalidArgument(
                f"expected base action of size {self.spec.base_action_dim}, got {a.size}")
        a = _finite_vector(a, "action")
        y = np.asarray(prediction, dtype=np.float64).reshape(-1)
        if y.size != self.spec.prediction_space.size:
            raise InvalidArgument(
                f"expected prediction of size {self.spec.prediction_space.size}, got {y.size}")
        y = _finite_vector(y, "prediction")

        target = self.prediction_target()
        if self.spec.prediction_space.is_classification:
            loss = cross_entropy(y, target)
        else:
            loss = mse(y, target)
        metrics = self._metrics(y, target)

        obs, env_terminated = self._transition(a)
        self._step_index += 1
        obs["time_step"] = np.float32(normalize_time(self._step_index, self.spec.step_limit))
        terminated = bool(env_terminated or self._step_index >= self.spec.step_limit)
        self._done = terminated
        reward = step_reward(a, loss, self.spec.reward_bonus)
        return StepOutcome(obs, reward, loss, terminated, False, metrics)

    def prediction_target(self) -> Any:
        raise NotImplementedError

    def hidden_state(self) -> dict:
        """Snapshot of the hidden state, for inspection and tests."""
        raise NotImplementedError

    def _reset(self, seed):
        raise NotImplementedError

    def _transition(self, base_action):
        raise NotImplementedError

    def _metrics(self, prediction, target):
        if self.spec.prediction_space.is_classification:
            return classification_metrics(prediction, target)
        return regression_metrics(prediction, target)
