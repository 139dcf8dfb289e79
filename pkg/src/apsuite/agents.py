"""Built-in baseline agents and the subprocess bridge for external agents.

An agent sees ``start(env_id, spec, seed)`` once per episode, where ``spec`` is
``TaskSpec.to_dict()``, then ``act(observation, feedback)`` every step.
``feedback`` is ``None`` on the first step and otherwise holds the previous
step's reward, loss and termination flags. Agents with ``needs_ground_truth``
also receive the current prediction target through the harness debug channel.
"""

from __future__ import annotations

import math
import os
import shlex
import subprocess
import sys

import numpy as np

from .core import InvalidArgument, make_rngs
from .localization import BrightnessField
from .protocol import Channel, ProtocolError, check_reply

BUILTIN = ("random", "stay", "oracle", "lightdark-seeker", "gradient-climber")
ORACLE_LOGIT = 1000.0


class Agent:
    needs_ground_truth = False

    def start(self, env_id, spec, seed):
        self.env_id = env_id
        self.spec = spec
        self.action_dim = spec["base_action_dim"]
        self.pred_kind = spec["prediction_kind"]
        self.pred_size = spec["prediction_size"]

    def act(self, observation, feedback, ground_truth=None):
        raise NotImplementedError

    def end(self, feedback):
        pass

    def close(self):
        pass

    def neutral_prediction(self):
        """Uniform logits for classification, zeros for regression."""
        return np.zeros(self.pred_size)


def sample_unit_ball(rng, dim):
    d = rng.normal(size=dim)
    n = np.linalg.norm(d)
    if n == 0.0:
        return np.zeros(dim)
    return d / n * rng.random() ** (1.0 / dim)


class RandomAgent(Agent):
    def start(self, env_id, spec, seed):
        super().start(env_id, spec, seed)
        (self.rng,) = make_rngs(seed ^ 0xA6E7, 1)

    def act(self, observation, feedback, ground_truth=None):
        return sample_unit_ball(self.rng, self.action_dim), self.neutral_prediction()


class StayAgent(Agent):
    def act(self, observation, feedback, ground_truth=None):
        return np.zeros(self.action_dim), self.neutral_prediction()


class OracleAgent(Agent):
    """Never moves; predicts the ground truth exactly."""

    needs_ground_truth = True

    def act(self, observation, feedback, ground_truth=None):
        if ground_truth is None:
            raise InvalidArgument("oracle agent needs the ground-truth channel")
        if self.pred_kind == "classification":
            logits = np.zeros(self.pred_size)
            logits[int(ground_truth)] = ORACLE_LOGIT
            return np.zeros(self.action_dim), logits
        return np.zeros(self.action_dim), np.asarray(ground_truth, dtype=np.float64).copy()


class LightDarkSeeker(Agent):
    """Drives into the light band using a 1-D Kalman estimate of x, then holds.

    The prediction is always the latest noisy position reading.
    """

    def __init__(self, field=BrightnessField(), step_scale=0.15):
        self.field = field
        self.step_scale = step_scale

    def start(self, env_id, spec, seed):
        super().start(env_id, spec, seed)
        self.mean = None
        self.var = None
        self.last_move = 0.0

    def act(self, observation, feedback, ground_truth=None):
        z = np.asarray(observation["noisy_position"], dtype=np.float64)
        if self.mean is None:
            self.mean, self.var = 0.0, 1.0 / 3.0
        else:
            self.mean += self.last_move
        r = self.field.sigma((self.mean, 0.0)) ** 2
        gain = self.var / (self.var + r)
        self.mean += gain * (z[0] - self.mean)
        self.var *= 1.0 - gain
        dx = (self.field.band_center - self.mean) / self.step_scale
        dx = float(np.clip(dx, -1.0, 1.0))
        self.last_move = dx * self.step_scale
        return np.array([dx, 0.0]), z.copy()


class GradientClimber(Agent):
    """Follows the background brightness gradient of CircleSquare to the shape."""

    def act(self, observation, feedback, ground_truth=None):
        g = np.asarray(observation["glimpse"], dtype=np.float64)[..., 0]
        prediction = self.neutral_prediction()
        if np.any(g >= 1.0):
            return np.zeros(2), prediction
        gx = g[:, -1].mean() - g[:, 0].mean()
        gy = g[-1, :].mean() - g[0, :].mean()
        n = math.hypot(gx, gy)
        if n == 0.0:
            return np.zeros(2), prediction
        return np.array([gx / n, gy / n]), prediction


class ExecAgent(Agent):
    """Agent living in a child process, reached through the wire protocol."""

    def __init__(self, command):
        if isinstance(command, str):
            command = shlex.split(command)
        if len(command) == 1 and command[0].endswith(".py"):
            command = [sys.executable] + command
        self.command = list(command)
        self.proc = None
        self.chan = None
        self._pending_end = False

    def _ensure_started(self):
        if self.proc is None:
            try:
                self.proc = subprocess.Popen(self.command, stdin=subprocess.PIPE,
                                             stdout=subprocess.PIPE, env=dict(os.environ))
            except OSError as e:
                raise InvalidArgument(f"cannot start agent {self.command}: {e}") from None
            self.chan = Channel(self.proc.stdout, self.proc.stdin)

    def _request(self, message):
        try:
            try:
                seq = self.chan.send(message)
            except (BrokenPipeError, OSError):
                raise ProtocolError("agent process closed its input", self.chan.offset) from None
            start = self.chan.offset
            return check_reply(message["type"], seq, self.chan.receive(), start)
        except ProtocolError:
            # the stream is out of sync; the next episode gets a fresh process
            self._terminate()
            raise

    def start(self, env_id, spec, seed):
        super().start(env_id, spec, seed)
        self._ensure_started()
        self.seed = seed
        self._first = True

    def act(self, observation, feedback, ground_truth=None):
        if self._first:
            self._first = False
            msg = {"type": "reset", "env_id": self.env_id, "spec": self.spec,
                   "seed": self.seed, "observation": observation}
        else:
            msg = {"type": "step", "observation": observation, "feedback": feedback}
        reply = self._request(msg)
        out = []
        for key, size in (("action", self.action_dim), ("prediction", self.pred_size)):
            try:
                v = np.asarray(reply[key], dtype=np.float64).reshape(-1)
            except (TypeError, ValueError):
                v = None
            if v is None or v.size != size or not np.all(np.isfinite(v)):
                offset = self.chan.offset
                self._terminate()
                raise ProtocolError(f"{key} must be {size} finite numbers", offset)
            out.append(v)
        return tuple(out)

    def end(self, feedback):
        self._request({"type": "end", "feedback": feedback})

    def close(self):
        if self.proc is None:
            return
        try:
            self._request({"type": "close"})
        except ProtocolError:
            pass
        self._terminate()

    def _terminate(self):
        proc, self.proc, self.chan = self.proc, None, None
        if proc is None:
            return
        for stream in (proc.stdin, proc.stdout):
            try:
                stream.close()
            except OSError:
                pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()


_FACTORIES = {
    "random": RandomAgent,
    "stay": StayAgent,
    "oracle": OracleAgent,
    "lightdark-seeker": LightDarkSeeker,
    "gradient-climber": GradientClimber,
}


def builtin_agent(name):
    if name not in _FACTORIES:
        raise InvalidArgument(f"unknown agent {name!r}; choose from {', '.join(BUILTIN)}")
    return _FACTORIES[name]()


def make_agent(spec):
    """``spec`` is a built-in name or ``exec:COMMAND``."""
    if spec.startswith("exec:"):
        command = spec[len("exec:"):]
        if not command:
            raise InvalidArgument("exec: needs a command")
        return ExecAgent(command)
    return builtin_agent(spec)
