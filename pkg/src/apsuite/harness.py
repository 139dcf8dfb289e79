"""Episode orchestration, logs, aggregation and replay."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import constants as C
from .core import InvalidArgument
from .metrics import AVERAGE, FINAL, aggregate_steps
from .protocol import ProtocolError


def observation_digest(obs):
    """SHA-256 over the keys, dtypes, shapes and raw bytes of an observation."""
    h = hashlib.sha256()
    for key in sorted(obs):
        a = np.ascontiguousarray(obs[key])
        h.update(key.encode())
        h.update(a.dtype.str.encode())
        h.update(repr(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


@dataclass
class StepRecord:
    action: list
    prediction: list
    reward: float
    loss: float
    terminated: bool
    truncated: bool
    metrics: dict
    obs_digest: str

    def to_json(self):
        return {"kind": "step", "action": self.action, "prediction": self.prediction,
                "reward": self.reward, "loss": self.loss, "terminated": self.terminated,
                "truncated": self.truncated, "metrics": self.metrics,
                "obs_digest": self.obs_digest}


@dataclass
class EpisodeLog:
    env_id: str
    seed: int
    agent: str = ""
    config: dict = field(default_factory=dict)
    initial_digest: str = ""
    steps: list = field(default_factory=list)
    status: str = "ok"
    error: str = ""

    @property
    def per_step_metrics(self):
        return [s.metrics for s in self.steps]

    def summary(self):
        if not self.steps:
            return {}
        return {mode: dict(aggregate_steps([self.per_step_metrics], mode))
                for mode in (AVERAGE, FINAL)}

    def write(self, path):
        path = Path(path)
        header = {"kind": "header", "env_id": self.env_id, "seed": self.seed,
                  "spec_version": C.SPEC_VERSION, "agent": self.agent, "config": self.config,
                  "initial_digest": self.initial_digest}
        lines = [json.dumps(header)]
        lines += [json.dumps(s.to_json()) for s in self.steps]
        lines.append(json.dumps({"kind": "summary", "status": self.status, "error": self.error,
                                 **self.summary()}))
        path.write_text("\n".join(lines) + "\n")

    @classmethod
    def read(cls, path):
        path = Path(path)
        records = []
        for n, line in enumerate(path.read_text().splitlines()):
            if line.strip():
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as e:
                    raise InvalidArgument(f"{path}:{n + 1}: {e.msg}") from None
        if not records or records[0].get("kind") != "header":
            raise InvalidArgument(f"{path}: missing log header")
        h = records[0]
        if h.get("spec_version") != C.SPEC_VERSION:
            raise InvalidArgument(f"{path}: unsupported log version {h.get('spec_version')!r}")
        log = cls(h["env_id"], int(h["seed"]), h.get("agent", ""), h.get("config", {}),
                  h.get("initial_digest", ""))
        for r in records[1:]:
            if r.get("kind") == "step":
                log.steps.append(StepRecord(r["action"], r["prediction"], r["reward"], r["loss"],
                                            r["terminated"], r["truncated"], r["metrics"],
                                            r["obs_digest"]))
            elif r.get("kind") == "summary":
                log.status = r.get("status", "ok")
                log.error = r.get("error", "")
        return log


def run_episode(env, agent, seed, agent_name="", config=None):
    """Play one episode; protocol failures abort it and are flagged in the log."""
    log = EpisodeLog(env.env_id, int(seed), agent_name, dict(config or {}))
    obs = env.reset(seed)
    log.initial_digest = observation_digest(obs)
    feedback = None
    try:
        agent.start(env.env_id, env.spec.to_dict(), int(seed))
        while True:
            truth = env.prediction_target() if agent.needs_ground_truth else None
            action, prediction = agent.act(obs, feedback, truth)
            out = env.step(action, prediction)
            obs = out.observation
            log.steps.append(StepRecord(
                np.asarray(action, dtype=np.float64).reshape(-1).tolist(),
                np.asarray(prediction, dtype=np.float64).reshape(-1).tolist(),
                out.reward, out.loss, out.terminated, out.truncated,
                {k: float(v) for k, v in out.metrics}, observation_digest(obs)))
            feedback = {"reward": out.reward, "loss": out.loss,
                        "terminated": out.terminated, "truncated": out.truncated}
            if out.terminated or out.truncated:
                break
        agent.end(feedback)
    except ProtocolError as e:
        log.status = "protocol_error"
        log.error = str(e)
    return log


def run_many(env_factory, agent_factory, seeds, lanes=1, agent_name="", config=None):
    """Run one episode per seed across ``lanes`` worker lanes.

    Each lane builds its own env and agent and handles every ``lanes``-th seed.
    Logs come back in seed-list order whatever the completion order.
    """
    seeds = [int(s) for s in seeds]
    lanes = max(1, min(int(lanes), len(seeds) or 1))

    def lane(k):
        env, agent = env_factory(), agent_factory()
        try:
            return [(i, run_episode(env, agent, seeds[i], agent_name, config))
                    for i in range(k, len(seeds), lanes)]
        finally:
            agent.close()

    if lanes == 1:
        results = lane(0)
    else:
        with ThreadPoolExecutor(max_workers=lanes) as pool:
            results = [r for part in pool.map(lane, range(lanes)) for r in part]
    results.sort(key=lambda r: r[0])
    return [log for _, log in results]


def aggregate(logs, mode):
    """Average or Final metrics over a batch of episode logs."""
    if not logs:
        raise InvalidArgument("aggregate needs at least one episode log")
    if mode not in (AVERAGE, FINAL):
        raise InvalidArgument(f"unknown mode {mode!r}")
    episodes = [log.per_step_metrics for log in logs if log.steps]
    if not episodes:
        raise InvalidArgument("no episode produced any step")
    try:
        return aggregate_steps(episodes, mode)
    except ValueError as e:
        raise InvalidArgument(str(e)) from None


@dataclass
class ReplayResult:
    identical: bool
    steps_checked: int
    mismatches: list
    max_reward_diff: float = 0.0
    max_loss_diff: float = 0.0


def replay(log: EpisodeLog, env):
    """Feed the logged actions back into ``env`` and compare everything."""
    mismatches = []
    obs = env.reset(log.seed)
    if log.initial_digest and observation_digest(obs) != log.initial_digest:
        mismatches.append((-1, "observation"))
    dr = dl = 0.0
    for t, s in enumerate(log.steps):
        out = env.step(np.array(s.action), np.array(s.prediction))
        dr = max(dr, abs(out.reward - s.reward))
        dl = max(dl, abs(out.loss - s.loss))
        if out.reward != s.reward:
            mismatches.append((t, "reward"))
        if out.loss != s.loss:
            mismatches.append((t, "loss"))
        if observation_digest(out.observation) != s.obs_digest:
            mismatches.append((t, "observation"))
        if {k: float(v) for k, v in out.metrics} != s.metrics:
            mismatches.append((t, "metrics"))
        if (out.terminated, out.truncated) != (s.terminated, s.truncated):
            mismatches.append((t, "termination"))
    return ReplayResult(not mismatches, len(log.steps), mismatches, dr, dl)
