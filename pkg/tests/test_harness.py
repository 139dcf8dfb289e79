import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from apsuite.agents import ExecAgent, RandomAgent, StayAgent
from apsuite.cli import main
from apsuite.core import InvalidArgument
from apsuite.harness import (EpisodeLog, aggregate, observation_digest, replay, run_episode,
                             run_many)
from apsuite.mesh import is_watertight, read_obj
from apsuite.registry import make

SCRIPTS = Path(__file__).parent / "agent_scripts"


def stay_script():
    return ExecAgent([sys.executable, str(SCRIPTS / "stay_agent.py")])


def bad_script(mode):
    return ExecAgent([sys.executable, str(SCRIPTS / "bad_agent.py"), mode])


# --- in-process harness ------------------------------------------------------------


def test_digest_sensitivity():
    a = {"x": np.zeros(3, np.float32), "t": np.float32(0.5)}
    d = observation_digest(a)
    assert d == observation_digest({"t": np.float32(0.5), "x": np.zeros(3, np.float32)})
    assert d != observation_digest({"x": np.zeros(3, np.float64), "t": np.float32(0.5)})
    assert d != observation_digest({"x": np.zeros((3, 1), np.float32), "t": np.float32(0.5)})
    b = {"x": np.array([0, 0, -0.0], np.float32), "t": np.float32(0.5)}
    assert d != observation_digest(b)


def test_random_tactile_mnist_runs_16_steps(env_factory):
    log = run_episode(env_factory("TactileMNIST-v0"), RandomAgent(), 0)
    assert len(log.steps) == 16 and log.steps[-1].terminated


def test_log_round_trip_and_replay(tmp_path):
    env = make("LightDark-v0")
    log = run_episode(env, RandomAgent(), 7, "random", {"split": "train"})
    log.write(tmp_path / "ep.jsonl")
    lines = (tmp_path / "ep.jsonl").read_text().splitlines()
    header = json.loads(lines[0])
    assert header["kind"] == "header" and header["env_id"] == "LightDark-v0"
    assert header["seed"] == 7 and "spec_version" in header
    assert json.loads(lines[-1])["kind"] == "summary"
    back = EpisodeLog.read(tmp_path / "ep.jsonl")
    assert back.steps == log.steps and back.seed == 7 and back.config == {"split": "train"}
    res = replay(back, make("LightDark-v0"))
    assert res.identical and res.steps_checked == len(log.steps)
    assert res.max_reward_diff == 0.0


def test_replay_detects_tampering(tmp_path):
    log = run_episode(make("CircleSquare-v0"), RandomAgent(), 1)
    log.steps[3].reward += 1e-9
    res = replay(log, make("CircleSquare-v0"))
    assert not res.identical and (3, "reward") in res.mismatches
    log = run_episode(make("CircleSquare-v0"), RandomAgent(), 1)
    log.seed = 2
    assert not replay(log, make("CircleSquare-v0")).identical


def test_log_read_errors(tmp_path):
    (tmp_path / "a.jsonl").write_text('{"kind": "step"}\n')
    with pytest.raises(InvalidArgument):
        EpisodeLog.read(tmp_path / "a.jsonl")
    (tmp_path / "b.jsonl").write_text('{"kind": "header", "env_id": "x", "seed": 0, '
                                      '"spec_version": "999"}\n')
    with pytest.raises(InvalidArgument):
        EpisodeLog.read(tmp_path / "b.jsonl")
    (tmp_path / "c.jsonl").write_text("{nope\n")
    with pytest.raises(InvalidArgument):
        EpisodeLog.read(tmp_path / "c.jsonl")


def test_aggregate_semantics():
    def fake(accs):
        log = EpisodeLog("E", 0)
        for a in accs:
            log.steps.append(type("S", (), {"metrics": {"accuracy": float(a)}})())
        return log

    m = dict(aggregate([fake([0, 0, 1, 1])], "average"))
    assert m["accuracy"] == 0.5 and m["first_correct"] == 2.0 and m["last_incorrect"] == 1.0
    assert dict(aggregate([fake([0, 0, 1, 1])], "final"))["accuracy"] == 1.0
    m = dict(aggregate([fake([1]), fake([0])], "final"))
    assert m["accuracy"] == 0.5
    m = dict(aggregate([fake([0, 0])], "average"))
    assert "first_correct" not in m and m["first_correct_count"] == 0.0
    a = dict(aggregate([fake([0, 1]), fake([1, 1]), fake([0, 0])], "average"))
    b = dict(aggregate([fake([0, 0]), fake([0, 1]), fake([1, 1])], "average"))
    assert a == b
    with pytest.raises(InvalidArgument):
        aggregate([], "average")
    with pytest.raises(InvalidArgument):
        aggregate([fake([1])], "median")


def test_lanes_match_single_lane():
    seeds = list(range(10, 22))
    one = run_many(lambda: make("CircleSquare-v0"), RandomAgent, seeds, lanes=1)
    three = run_many(lambda: make("CircleSquare-v0"), RandomAgent, seeds, lanes=3)
    assert [l.seed for l in three] == seeds
    assert [l.steps for l in one] == [l.steps for l in three]
    for mode in ("average", "final"):
        assert aggregate(one, mode) == aggregate(three, mode)


# --- external agents ----------------------------------------------------------------


def test_exec_agent_matches_builtin():
    seeds = [0, 1, 2]
    ext = run_many(lambda: make("LightDark-v0"), stay_script, seeds)
    ref = run_many(lambda: make("LightDark-v0"), StayAgent, seeds)
    assert all(l.status == "ok" for l in ext)
    assert [l.steps for l in ext] == [l.steps for l in ref]


@pytest.mark.parametrize("mode", ["exit", "garbage", "wrong-reply-to", "wrong-size", "double",
                                  "overflow"])
def test_misbehaving_agent_flagged(mode):
    logs = run_many(lambda: make("CircleSquare-v0"), lambda: bad_script(mode), [0, 1])
    for log in logs:
        assert log.status == "protocol_error" and log.error
        assert len(log.steps) < 16


# --- CLI ------------------------------------------------------------------------------


def test_cli_run_report_replay(tmp_path, capsys):
    out = tmp_path / "runs"
    assert main(["run", "--env", "CircleSquare-v0", "--agent", "random", "--episodes", "3",
                 "--seed", "5", "--out", str(out)]) == 0
    files = sorted(out.glob("episode_*.jsonl"))
    assert len(files) == 3
    summary = json.loads((out / "summary.json").read_text())
    assert summary["episodes"] == 3 and summary["average"]["correct_label_prob"] == 0.5
    capsys.readouterr()
    assert main(["report", "--logs", str(out), "--mode", "final"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["environments"]["CircleSquare-v0"]["episodes"] == 3
    assert main(["replay", "--log", str(files[0])]) == 0
    lines = files[1].read_text().splitlines()
    step = json.loads(lines[2])
    step["loss"] += 1.0
    lines[2] = json.dumps(step)
    files[1].write_text("\n".join(lines) + "\n")
    assert main(["replay", "--log", str(files[1])]) == 1


def test_cli_exit_codes(tmp_path):
    assert main(["run", "--env", "Nope-v0", "--agent", "random", "--out", str(tmp_path)]) == 3
    assert main(["run", "--env", "MNIST-v0", "--agent", "random", "--out", str(tmp_path)]) == 3
    assert main(["run", "--env", "LightDark-v0", "--agent", "wizard", "--out", str(tmp_path)]) == 3
    assert main(["run", "--env", "LightDark-v0", "--agent", "random", "--episodes", "0",
                 "--out", str(tmp_path)]) == 3
    assert main(["run", "--env", "LightDark-v0", "--agent", "random", "--no-perturbation",
                 "--out", str(tmp_path)]) == 3
    assert main(["report", "--logs", str(tmp_path / "empty")]) == 3
    assert main([]) == 3
    bad = f"exec:{sys.executable} {SCRIPTS / 'bad_agent.py'} garbage"
    assert main(["run", "--env", "CircleSquare-v0", "--agent", bad, "--episodes", "2",
                 "--out", str(tmp_path / "bad")]) == 2
    good = f"exec:{SCRIPTS / 'stay_agent.py'}"
    assert main(["run", "--env", "CircleSquare-v0", "--agent", good, "--episodes", "2",
                 "--out", str(tmp_path / "good")]) == 0


def test_cli_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "apsuite", "run", "--env", "LightDark-v0",
                        "--agent", "stay", "--episodes", "1", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "apsuite", "run"], capture_output=True, text=True)
    assert r.returncode == 3


def test_cli_gen_assets(tmp_path):
    assert main(["gen-assets", "--kind", "mnist3d", "--count", "2", "--out",
                 str(tmp_path / "m")]) == 0
    mesh = read_obj(tmp_path / "m" / "mnist3d_00001.obj")
    assert is_watertight(mesh)
    pbm = (tmp_path / "m" / "mnist3d_00000.pbm").read_text().split()
    assert pbm[:3] == ["P1", "500", "500"]
    rows = (tmp_path / "m" / "splits.txt").read_text().splitlines()[1:]
    assert [r.split()[:2] for r in rows] == [["0", "0"], ["1", "1"]]

    assert main(["gen-assets", "--kind", "starstruck", "--count", "6", "--out",
                 str(tmp_path / "s")]) == 0
    scene = (tmp_path / "s" / "scene_0004.txt").read_text().splitlines()
    assert scene[0] == "# star_count=2"
    kinds = [line.split()[0] for line in scene[2:]]
    assert kinds.count("star") == 2
    assert (tmp_path / "s" / "star.obj").exists()
    split_rows = (tmp_path / "s" / "splits.txt").read_text().splitlines()[1:]
    assert len(split_rows) == 6 and all(r.endswith("test") for r in split_rows)

    assert main(["gen-assets", "--kind", "toolbox", "--out", str(tmp_path / "t")]) == 0
    assert len(list((tmp_path / "t").glob("wrench_*.obj"))) == 4
    assert main(["gen-assets", "--kind", "mnist3d", "--count", "-1", "--out",
                 str(tmp_path / "x")]) == 3


def test_env_uses_pregenerated_assets(tmp_path):
    from apsuite.assets import split_mnist3d
    from apsuite.mesh import box_mesh, write_obj

    # only the pooled objects need files; a box stands in for each digit
    pool = split_mnist3d()["train"][:2]
    d = tmp_path / "assets"
    d.mkdir()
    for i in pool:
        write_obj(d / f"mnist3d_{int(i):05d}.obj", box_mesh((-10, -10, 0), (10, 10, 4)))
    env = make("TactileMNIST-v0", asset_dir=d, max_objects=2)
    env.reset(0)
    assert env.objects[0].mesh.vertices[:, 2].max() == 4.0
    assert len(env.objects[0].mesh.triangles) == 12
