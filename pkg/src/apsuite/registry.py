"""Environment ids and the factory that builds them."""

from __future__ import annotations

from . import constants as C
from .core import InvalidArgument
from .corpora import ImageCorpus, load_corpus
from .glimpse import GlimpseClassificationEnv, GlimpseLocalizationEnv, circle_square_corpus
from .localization import LidarLocEnv, LightDarkEnv
from .tactile import StarstruckEnv, TactileMNISTEnv, TactileMNISTVolumeEnv, ToolboxEnv

ENV_IDS = tuple(C.STEP_LIMITS)

_CLASSIFICATION = {"CircleSquare-v0": "CircleSquare", "MNIST-v0": "MNIST",
                   "CIFAR10-v0": "CIFAR10", "TinyImageNet-v0": "TinyImageNet"}
_LOCALIZATION = {"CIFAR10Loc-v0": "CIFAR10", "TinyImageNetLoc-v0": "TinyImageNet"}
_LIDAR = {"LIDARLocMaze-v0": ("maze", False), "LIDARLocMazeStatic-v0": ("maze", True),
          "LIDARLocRooms-v0": ("rooms", False), "LIDARLocRoomsStatic-v0": ("rooms", True)}


def _image_corpus(task, split, corpus, corpus_path):
    if corpus is not None:
        if not isinstance(corpus, ImageCorpus):
            raise InvalidArgument("corpus must be an ImageCorpus")
        loaded = corpus
    elif task == "CircleSquare" and corpus_path is None:
        return circle_square_corpus(split)
    else:
        loaded = load_corpus(task, corpus_path, split)
    size, _, channels, _ = C.IMAGE_TASKS[task]
    if loaded.shape[2] != channels:
        raise InvalidArgument(f"{task} expects {channels} channel(s), corpus has {loaded.shape[2]}")
    if task != "CircleSquare" and loaded.shape[:2] != (size, size):
        raise InvalidArgument(f"{task} expects {size}x{size} images, corpus has {loaded.shape[:2]}")
    return loaded


def make(env_id, split="train", corpus_path=None, corpus=None, **kwargs):
    """Build the environment named ``env_id``.

    Image tasks other than CircleSquare need either ``corpus`` (an ImageCorpus)
    or ``corpus_path`` (native dataset directory or manifest file). Extra
    keyword arguments go to the environment constructor.
    """
    if env_id not in C.STEP_LIMITS:
        raise InvalidArgument(f"unknown environment {env_id!r}")
    if split not in ("train", "test") and env_id not in ("TactileMNIST-v0",
                                                          "TactileMNISTVolume-v0"):
        raise InvalidArgument(f"unknown split {split!r}")
    limit = C.STEP_LIMITS[env_id]
    if env_id in _CLASSIFICATION:
        task = _CLASSIFICATION[env_id]
        data = _image_corpus(task, split, corpus, corpus_path)
        return GlimpseClassificationEnv(data, C.IMAGE_TASKS[task][1], env_id, limit)
    if env_id in _LOCALIZATION:
        task = _LOCALIZATION[env_id]
        data = _image_corpus(task, split, corpus, corpus_path)
        return GlimpseLocalizationEnv(data, C.IMAGE_TASKS[task][1], env_id, limit)
    if env_id == "LightDark-v0":
        return LightDarkEnv(step_limit=limit, **kwargs)
    if env_id in _LIDAR:
        kind, static = _LIDAR[env_id]
        return LidarLocEnv(kind, static, step_limit=limit, **kwargs)
    if env_id == "TactileMNIST-v0":
        return TactileMNISTEnv(split, **kwargs)
    if env_id == "TactileMNISTVolume-v0":
        return TactileMNISTVolumeEnv(split, **kwargs)
    if env_id == "Toolbox-v0":
        return ToolboxEnv(split, **kwargs)
    return StarstruckEnv(split, **kwargs)
