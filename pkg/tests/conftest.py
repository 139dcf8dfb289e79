import numpy as np
import pytest

from apsuite import constants as C
from apsuite.corpora import ImageCorpus, write_idx, write_manifest
from apsuite.registry import make


def random_corpus(n, size, channels, classes, seed=0, split="train"):
    rng = np.random.default_rng(seed)
    images = rng.random((n, size, size, channels)).astype(np.float32)
    labels = rng.integers(0, classes, size=n)
    return ImageCorpus(images, labels, classes, split)


@pytest.fixture(scope="session")
def mnist_dir(tmp_path_factory):
    """Tiny MNIST in the native IDX layout (train- and t10k- files)."""
    d = tmp_path_factory.mktemp("mnist")
    rng = np.random.default_rng(1)
    for prefix, n in (("train", 40), ("t10k", 20)):
        write_idx(d / f"{prefix}-images-idx3-ubyte", rng.integers(0, 256, (n, 28, 28), dtype=np.uint8))
        write_idx(d / f"{prefix}-labels-idx1-ubyte", (np.arange(n) % 10).astype(np.uint8))
    return d


@pytest.fixture(scope="session")
def cifar_dir(tmp_path_factory):
    """Tiny CIFAR-10 binary batches."""
    d = tmp_path_factory.mktemp("cifar")
    rng = np.random.default_rng(2)

    def batch(path, n):
        rows = np.zeros((n, 1 + 3072), dtype=np.uint8)
        rows[:, 0] = np.arange(n) % 10
        rows[:, 1:] = rng.integers(0, 256, (n, 3072), dtype=np.uint8)
        path.write_bytes(rows.tobytes())

    for i in range(1, 6):
        batch(d / f"data_batch_{i}.bin", 6)
    batch(d / "test_batch.bin", 10)
    return d


@pytest.fixture(scope="session")
def tinyimagenet_manifest(tmp_path_factory):
    """TinyImageNet-shaped corpus as a generic manifest pair, one per split."""
    d = tmp_path_factory.mktemp("tin")
    rng = np.random.default_rng(3)
    for split, n in (("train", 12), ("test", 6)):
        images = rng.random((n, 64, 64, 3)).astype(np.float32)
        write_manifest(d / f"tin_{split}.txt", images, np.arange(n) % 200, 200)
    return d / "tin_{split}.txt"


@pytest.fixture(scope="session")
def env_factory(mnist_dir, cifar_dir, tinyimagenet_manifest):
    """``factory(env_id, split="train")`` building any environment with test corpora."""
    paths = {"MNIST-v0": mnist_dir, "CIFAR10-v0": cifar_dir, "CIFAR10Loc-v0": cifar_dir,
             "TinyImageNet-v0": tinyimagenet_manifest,
             "TinyImageNetLoc-v0": tinyimagenet_manifest}

    def factory(env_id, split="train", **kw):
        if env_id in ("TactileMNIST-v0", "TactileMNISTVolume-v0"):
            # a small object pool keeps mesh generation time bounded
            kw.setdefault("max_objects", 6)
        return make(env_id, split=split, corpus_path=paths.get(env_id), **kw)

    return factory


ALL_ENV_IDS = tuple(C.STEP_LIMITS)


# criterion number -> (passed, description); filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, text = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")
