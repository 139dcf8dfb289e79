import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apsuite.core import (InvalidArgument, LifecycleError, PredictionSpace, TaskSpec,
                          cross_entropy, make_rngs, mse, normalize_time, project_to_unit_disk,
                          step_reward)
from apsuite.registry import make

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_projection_examples():
    np.testing.assert_array_equal(project_to_unit_disk([0.3, 0.4]), [0.3, 0.4])
    np.testing.assert_allclose(project_to_unit_disk([3, 4]), [0.6, 0.8], rtol=0, atol=1e-15)
    np.testing.assert_array_equal(project_to_unit_disk([0, 0]), [0, 0])


def test_projection_rejects_non_finite():
    with pytest.raises(InvalidArgument):
        project_to_unit_disk([np.nan, 0])
    with pytest.raises(InvalidArgument):
        project_to_unit_disk([np.inf, 0])


@given(st.lists(finite, min_size=1, max_size=5))
def test_projection_properties(v):
    v = np.array(v)
    p = project_to_unit_disk(v)
    assert np.linalg.norm(p) <= 1 + 1e-12
    assert np.linalg.norm(p) <= np.linalg.norm(v) + 1e-12
    np.testing.assert_allclose(project_to_unit_disk(p), p, atol=1e-12)
    n = np.linalg.norm(v)
    if n > 1:
        # same direction, unit length
        np.testing.assert_allclose(p * n, v, rtol=1e-12, atol=1e-9)
    else:
        np.testing.assert_array_equal(p, v)


def _softmax_oracle(logits, label):
    # direct evaluation without max subtraction; safe for small logits
    e = [math.exp(z) for z in logits]
    return -math.log(e[label] / sum(e))


def test_cross_entropy_examples():
    assert cross_entropy([0, 0], 0) == pytest.approx(math.log(2), abs=1e-12)
    assert cross_entropy([1000, 0], 0) == pytest.approx(0, abs=1e-12)
    assert cross_entropy([1, 2, 3], 2) == pytest.approx(_softmax_oracle([1, 2, 3], 2), abs=1e-12)
    assert cross_entropy(np.zeros(10), 4) == pytest.approx(math.log(10), abs=1e-12)


def test_cross_entropy_errors():
    with pytest.raises(InvalidArgument):
        cross_entropy([0, 0], 2)
    with pytest.raises(InvalidArgument):
        cross_entropy([0, 0], -1)
    with pytest.raises(InvalidArgument):
        cross_entropy([0], 0)


@given(st.lists(st.floats(-30, 30), min_size=2, max_size=8), st.data(),
       st.floats(-1e3, 1e3))
def test_cross_entropy_oracle_and_shift(logits, data, c):
    label = data.draw(st.integers(0, len(logits) - 1))
    ce = cross_entropy(logits, label)
    assert ce >= 0
    assert ce == pytest.approx(_softmax_oracle(logits, label), abs=1e-9)
    assert cross_entropy(np.array(logits) + c, label) == pytest.approx(ce, abs=1e-9)


def test_mse_examples():
    assert mse([1, 2], [1, 2]) == 0
    assert mse([0, 0], [2, 0]) == 2
    with pytest.raises(InvalidArgument):
        mse([1, 2], [1, 2, 3])


@given(st.lists(finite, min_size=4, max_size=4), st.lists(finite, min_size=4, max_size=4))
def test_mse_loop_oracle(a, b):
    total = 0.0
    for x, y in zip(a, b):
        total += (x - y) ** 2
    assert mse(a, b) == pytest.approx(total / 4, rel=1e-12, abs=1e-12)


def test_step_reward_examples():
    assert step_reward([0, 0], 0.5, 0) == -0.5
    assert step_reward([1, 0], 0, 0) == pytest.approx(-0.001, abs=1e-15)
    assert step_reward([0, 0], 0.04, 0.1) == pytest.approx(0.06, abs=1e-15)
    with pytest.raises(InvalidArgument):
        step_reward([0, 0], -1.0)


def test_normalize_time():
    assert normalize_time(0, 16) == -1
    assert normalize_time(16, 16) == 1
    assert normalize_time(8, 16) == 0
    with pytest.raises(InvalidArgument):
        normalize_time(17, 16)
    with pytest.raises(InvalidArgument):
        normalize_time(-1, 16)


def test_prediction_space_and_taskspec_validation():
    with pytest.raises(InvalidArgument):
        PredictionSpace("classification", 1)
    with pytest.raises(InvalidArgument):
        PredictionSpace("regression", 0)
    with pytest.raises(InvalidArgument):
        PredictionSpace("ranking", 3)
    with pytest.raises(InvalidArgument):
        TaskSpec(2, PredictionSpace("regression", 2), 0, "mse")
    with pytest.raises(InvalidArgument):
        TaskSpec(2, PredictionSpace("regression", 2), 4, "hinge")


def test_make_rngs_deterministic_and_independent():
    a = [g.random(4) for g in make_rngs(123, 3)]
    b = [g.random(4) for g in make_rngs(123, 3)]
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    assert not np.array_equal(a[0], a[1])


def test_lifecycle_errors():
    env = make("LightDark-v0")
    with pytest.raises(LifecycleError):
        env.step([0, 0], [0, 0])
    env.reset(0)
    with pytest.raises(InvalidArgument):
        env.step([0, 0, 0], [0, 0])
    with pytest.raises(InvalidArgument):
        env.step([0, 0], [0, 0, 0])
    with pytest.raises(InvalidArgument):
        env.step([np.nan, 0], [0, 0])
    for _ in range(16):
        out = env.step([0, 0], [0, 0])
    assert out.terminated
    with pytest.raises(LifecycleError):
        env.step([0, 0], [0, 0])


def test_reset_mid_episode_restarts_counter():
    env = make("CircleSquare-v0")
    env.reset(1)
    for _ in range(5):
        env.step([0.1, 0], [0, 0])
    obs = env.reset(2)
    assert env.step_index == 0
    assert obs["time_step"] == -1


def test_reset_determinism_and_seed_variety():
    env = make("LightDark-v0")
    o1, o2 = env.reset(7), env.reset(7)
    for k in o1:
        assert np.asarray(o1[k]).tobytes() == np.asarray(o2[k]).tobytes()
    targets = set()
    for s in range(1000):
        env.reset(s)
        targets.add(tuple(env.prediction_target()))
    assert len(targets) == 1000


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 63 - 1))
def test_exact_prediction_gives_zero_loss(seed):
    env = make("LIDARLocRooms-v0")
    env.reset(seed)
    rng = np.random.default_rng(seed % 1000)
    while True:
        a = rng.uniform(-1, 1, 2)
        out = env.step(a, env.prediction_target())
        assert out.loss == 0
        assert out.reward == pytest.approx(-1e-3 * np.linalg.norm(a), abs=1e-15)
        if out.terminated:
            break
