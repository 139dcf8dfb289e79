"""Per-step metrics and their episode-level aggregation."""

from __future__ import annotations

import math

import numpy as np

AVERAGE = "average"
FINAL = "final"

EPISODE_METRICS = ("first_correct", "last_incorrect")


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


def classification_metrics(logits, label):
    """Accuracy counts only a unique argmax; a tie for first place is a miss."""
    z = np.asarray(logits, dtype=np.float64).reshape(-1)
    label = int(label)
    top = z.max()
    correct = z[label] == top and np.count_nonzero(z == top) == 1
    return [
        ("accuracy", 1.0 if correct else 0.0),
        ("correct_label_prob", float(softmax(z)[label])),
    ]


def episode_classification_summary(accuracies):
    """Return ``(first_correct, last_incorrect)``; either may be ``None``."""
    acc = [int(round(a)) for a in accuracies]
    if not acc:
        raise ValueError("empty accuracy sequence")
    first = next((i for i, a in enumerate(acc) if a == 1), None)
    last = next((i for i in range(len(acc) - 1, -1, -1) if acc[i] == 0), None)
    return first, last


def angle_between(pred_sin, pred_cos, true_theta):
    """Absolute angle in [0, pi] between the predicted and the true orientation."""
    if pred_sin == 0.0 and pred_cos == 0.0:
        raise ValueError("orientation undefined for a zero (sin, cos) vector")
    ts, tc = math.sin(true_theta), math.cos(true_theta)
    return angle_between_vectors(pred_sin, pred_cos, ts, tc)


def angle_between_vectors(s1, c1, s2, c2):
    cross = c2 * s1 - s2 * c1
    dot = c1 * c2 + s1 * s2
    return abs(math.atan2(cross, dot))


def regression_metrics(pred, target, kind="plain", *, position_scale_mm=50.0, volume_ref_mm3=None):
    p = np.asarray(pred, dtype=np.float64).reshape(-1)
    t = np.asarray(target, dtype=np.float64).reshape(-1)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {t.shape}")
    d = p - t
    m = float(np.mean(d * d))
    out = [("mse", m), ("euclidean_distance", math.sqrt(m))]
    if kind == "toolbox":
        lin = math.hypot(d[0], d[1]) * position_scale_mm
        if p[2] == 0.0 and p[3] == 0.0:
            ang = math.pi / 2
        else:
            ang = angle_between_vectors(p[2], p[3], t[2], t[3])
        out += [("linear_error", lin), ("angular_error", ang)]
    elif kind == "volume":
        if volume_ref_mm3 is None:
            raise ValueError("volume metrics need volume_ref_mm3")
        out += [
            ("volume_error_cm3", float(abs(d[0]) * volume_ref_mm3 / 1000.0)),
            ("relative_error", float(p[0] / t[0]) if t[0] != 0 else math.inf),
        ]
    elif kind != "plain":
        raise ValueError(f"unknown regression metric kind {kind!r}")
    return out


def _mean(values):
    return math.fsum(values) / len(values)


def aggregate_steps(episodes, mode):
    """Aggregate a list of episodes, each a list of per-step ``{name: value}``.

    ``average`` takes the per-episode mean over steps, ``final`` the last step;
    both are then averaged over episodes. Accuracy-based episode metrics
    (``first_correct``/``last_incorrect``) are averaged over the episodes where
    they exist and reported with a ``<name>_count`` companion.
    """
    if mode not in (AVERAGE, FINAL):
        raise ValueError(f"unknown mode {mode!r}")
    if not episodes or any(len(ep) == 0 for ep in episodes):
        raise ValueError("aggregate needs at least one non-empty episode")
    names = list(episodes[0][0].keys())
    for ep in episodes:
        for step in ep:
            if list(step.keys()) != names:
                raise ValueError("episodes carry heterogeneous metric names")

    per_episode = {n: [] for n in names}
    for ep in episodes:
        for n in names:
            if mode == AVERAGE:
                per_episode[n].append(_mean([s[n] for s in ep]))
            else:
                per_episode[n].append(ep[-1][n])
    out = [(n, _mean(per_episode[n])) for n in names]

    if "accuracy" in names:
        firsts, lasts = [], []
        for ep in episodes:
            f, l = episode_classification_summary([s["accuracy"] for s in ep])
            if f is not None:
                firsts.append(float(f))
            if l is not None:
                lasts.append(float(l))
        for name, vals in (("first_correct", firsts), ("last_incorrect", lasts)):
            if vals:
                out.append((name, _mean(vals)))
            out.append((name + "_count", float(len(vals))))
    return out
