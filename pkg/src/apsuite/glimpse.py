"""Image tasks where a small glimpse window is the only sensor."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import constants as C
from .core import (ActivePerceptionEnv, InvalidArgument, PredictionSpace, TaskSpec,
                   make_rngs, project_to_unit_disk)
from .corpora import ImageCorpus


def glimpse_origin(center, size, g):
    """Top-left pixel index of a ``g``-wide window centred at normalized ``center``."""
    p = (center + 1.0) / 2.0 * (size - 1)
    o = math.floor(p - g / 2.0 + 0.5)
    return min(max(o, 0), size - g)


def extract_glimpse(image, center, g):
    """``g x g`` window of an ``(H, W, C)`` image; ``center`` is ``(x, y)`` in [-1, 1]².

    The window is clamped to lie inside the image, so it never contains padding.
    """
    h, w = image.shape[:2]
    if g > min(h, w) or g < 1:
        raise InvalidArgument(f"glimpse size {g} does not fit a {w}x{h} image")
    x0 = glimpse_origin(float(center[0]), w, g)
    y0 = glimpse_origin(float(center[1]), h, g)
    return image[y0:y0 + g, x0:x0 + g]


def move_glimpse(pos, action, scale=C.GLIMPSE_STEP_SCALE):
    step = scale * project_to_unit_disk(action)
    return np.clip(np.asarray(pos, dtype=np.float64) + step, -1.0, 1.0)


# --- CircleSquare ----------------------------------------------------------

CS_SIZE = 28
CS_TEST_SEED_OFFSET = C.CIRCLE_SQUARE_COUNT


@dataclass
class CircleSquareSample:
    image: np.ndarray  # (28, 28, 1) float32
    label: int  # 0 circle, 1 square
    center: tuple  # (x, y) in pixel coordinates
    radius: float
    mask: np.ndarray  # shape pixels


def circle_square_sample(seed):
    rng = np.random.default_rng(np.random.SeedSequence([0xC5, int(seed)]))
    label = int(rng.integers(2))
    r = rng.uniform(3.0, 6.0)
    lo, hi = r + 1.0, CS_SIZE - 1 - r - 1.0
    cx, cy = rng.uniform(lo, hi, size=2)
    yy, xx = np.mgrid[0:CS_SIZE, 0:CS_SIZE].astype(np.float64)
    dx, dy = xx - cx, yy - cy
    if label == 0:
        mask = dx * dx + dy * dy <= r * r
    else:
        mask = (np.abs(dx) <= r) & (np.abs(dy) <= r)
    img = 1.0 / (1.0 + np.hypot(dx, dy) / 8.0)
    img[mask] = 1.0
    return CircleSquareSample(img.astype(np.float32)[..., None], label, (cx, cy), r, mask)


def generate_circle_square(seed):
    s = circle_square_sample(seed)
    return s.image, s.label


@lru_cache(maxsize=4)
def circle_square_corpus(split="train"):
    """Seeds ``0..1567`` form the training corpus; the test corpus uses the next
    1,568 seeds so the two never share an image."""
    start = 0 if split == "train" else CS_TEST_SEED_OFFSET
    samples = [circle_square_sample(s) for s in range(start, start + C.CIRCLE_SQUARE_COUNT)]
    images = np.stack([s.image for s in samples])
    labels = np.array([s.label for s in samples], dtype=np.int64)
    return ImageCorpus(images, labels, 2, split)


# --- environments ----------------------------------------------------------


class GlimpseClassificationEnv(ActivePerceptionEnv):
    def __init__(self, corpus: ImageCorpus, glimpse_size, env_id="glimpse", step_limit=16):
        super().__init__()
        if corpus.labels is None:
            raise InvalidArgument("classification corpus needs labels")
        self.env_id = env_id
        self.corpus = corpus
        self.glimpse_size = glimpse_size
        h, w, _ = corpus.shape
        if glimpse_size > min(h, w):
            raise InvalidArgument("glimpse larger than image")
        self.spec = TaskSpec(2, PredictionSpace("classification", corpus.num_classes), step_limit,
                             "cross_entropy", 0.0, ("glimpse", "glimpse_pos", "time_step"))

    def _reset(self, seed):
        (rng,) = make_rngs(seed, 1)
        self._index = int(rng.integers(len(self.corpus)))
        self._image = self.corpus.images[self._index]
        self._pos = rng.uniform(-1.0, 1.0, size=2)
        return self._observe()

    def _observe(self):
        return {
            "glimpse": np.array(extract_glimpse(self._image, self._pos, self.glimpse_size)),
            "glimpse_pos": self._pos.astype(np.float32),
        }

    def _transition(self, a):
        self._pos = move_glimpse(self._pos, a)
        return self._observe(), False

    def prediction_target(self):
        return int(self.corpus.labels[self._index])

    def hidden_state(self):
        return {"image_index": self._index, "pos": self._pos.copy()}


class GlimpseLocalizationEnv(ActivePerceptionEnv):
    """Find where a given target patch sits in the image."""

    def __init__(self, corpus: ImageCorpus, glimpse_size, env_id="glimpse-loc", step_limit=16):
        super().__init__()
        self.env_id = env_id
        self.corpus = corpus
        self.glimpse_size = glimpse_size
        self.spec = TaskSpec(2, PredictionSpace("regression", 2), step_limit, "mse", 0.0,
                             ("glimpse", "glimpse_pos", "target_glimpse", "time_step"))

    def _reset(self, seed):
        (rng,) = make_rngs(seed, 1)
        self._index = int(rng.integers(len(self.corpus)))
        self._image = self.corpus.images[self._index]
        self._pos = rng.uniform(-1.0, 1.0, size=2)
        self._target_pos = rng.uniform(-1.0, 1.0, size=2)
        self._target_patch = np.array(
            extract_glimpse(self._image, self._target_pos, self.glimpse_size))
        return self._observe()

    def _observe(self):
        return {
            "glimpse": np.array(extract_glimpse(self._image, self._pos, self.glimpse_size)),
            "glimpse_pos": self._pos.astype(np.float32),
            "target_glimpse": self._target_patch.copy(),
        }

    def _transition(self, a):
        self._pos = move_glimpse(self._pos, a)
        return self._observe(), False

    def prediction_target(self):
        return self._target_pos.copy()

    def hidden_state(self):
        return {"image_index": self._index, "pos": self._pos.copy(),
                "target_pos": self._target_pos.copy()}
