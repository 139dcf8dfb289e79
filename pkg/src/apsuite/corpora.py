"""Image corpus ingestion: MNIST IDX files, CIFAR-10 binary batches, the
TinyImageNet directory layout, and a generic raw-float32 manifest.

Every reader returns an :class:`ImageCorpus` with images as ``(N, H, W, C)``
float32 arrays scaled to ``[0, 1]``.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import InvalidArgument


@dataclass
class ImageCorpus:
    images: np.ndarray
    labels: np.ndarray | None
    num_classes: int
    split: str = "train"

    def __post_init__(self):
        if self.images.ndim != 4 or self.images.shape[-1] not in (1, 3):
            raise InvalidArgument(f"images must be (N, H, W, C) with C in {{1, 3}}, "
                                  f"got {self.images.shape}")
        if self.labels is not None:
            if len(self.labels) != len(self.images):
                raise InvalidArgument("label count does not match image count")
            if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
                raise InvalidArgument("labels outside {0..K-1}")

    def __len__(self):
        return len(self.images)

    @property
    def shape(self):
        return self.images.shape[1:]

    def subset(self, indices, split=None):
        idx = np.asarray(indices, dtype=np.int64)
        labels = None if self.labels is None else self.labels[idx]
        return ImageCorpus(self.images[idx], labels, self.num_classes, split or self.split)


def _open(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


_IDX_TYPES = {0x08: ">u1", 0x09: ">i1", 0x0B: ">i2", 0x0C: ">i4", 0x0D: ">f4", 0x0E: ">f8"}


def read_idx(path):
    with _open(path) as f:
        data = f.read()
    if len(data) < 4 or data[0] != 0 or data[1] != 0:
        raise InvalidArgument(f"{path}: not an IDX file")
    code, ndim = data[2], data[3]
    if code not in _IDX_TYPES:
        raise InvalidArgument(f"{path}: unknown IDX type code 0x{code:02x}")
    dims = struct.unpack(f">{ndim}I", data[4:4 + 4 * ndim])
    dtype = np.dtype(_IDX_TYPES[code])
    n = int(np.prod(dims)) if dims else 1
    offset = 4 + 4 * ndim
    if len(data) - offset != n * dtype.itemsize:
        raise InvalidArgument(f"{path}: payload size does not match header")
    return np.frombuffer(data, dtype=dtype, count=n, offset=offset).reshape(dims)


def write_idx(path, array):
    array = np.asarray(array)
    inv = {np.dtype(v).newbyteorder("="): k for k, v in _IDX_TYPES.items()}
    code = inv[array.dtype.newbyteorder("=")]
    header = bytes([0, 0, code, array.ndim]) + struct.pack(f">{array.ndim}I", *array.shape)
    big = array.astype(np.dtype(_IDX_TYPES[code]))
    Path(path).write_bytes(header + big.tobytes())


def _find(directory, names):
    for name in names:
        for cand in (name, name + ".gz"):
            p = Path(directory) / cand
            if p.exists():
                return p
    raise InvalidArgument(f"none of {names} found in {directory}")


def load_mnist(directory, split="train"):
    prefix = "train" if split == "train" else "t10k"
    imgs = read_idx(_find(directory, [f"{prefix}-images-idx3-ubyte", f"{prefix}-images.idx3-ubyte"]))
    labels = read_idx(_find(directory, [f"{prefix}-labels-idx1-ubyte", f"{prefix}-labels.idx1-ubyte"]))
    images = (imgs.astype(np.float32) / 255.0)[..., None]
    return ImageCorpus(images, labels.astype(np.int64), 10, split)


def read_cifar_batch(path):
    raw = Path(path).read_bytes()
    rec = 1 + 3 * 32 * 32
    if len(raw) % rec:
        raise InvalidArgument(f"{path}: size {len(raw)} is not a multiple of {rec}")
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(-1, rec)
    labels = arr[:, 0].astype(np.int64)
    images = arr[:, 1:].reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)
    return images, labels


def load_cifar10(directory, split="train"):
    directory = Path(directory)
    if (directory / "cifar-10-batches-bin").is_dir():
        directory = directory / "cifar-10-batches-bin"
    names = [f"data_batch_{i}.bin" for i in range(1, 6)] if split == "train" else ["test_batch.bin"]
    parts = [read_cifar_batch(directory / n) for n in names if (directory / n).exists()]
    if not parts:
        raise InvalidArgument(f"no CIFAR-10 {split} batches in {directory}")
    images = np.concatenate([p[0] for p in parts])
    labels = np.concatenate([p[1] for p in parts])
    return ImageCorpus(images.astype(np.float32) / 255.0, labels, 10, split)


def load_tinyimagenet(directory, split="train"):
    """Training images come from ``train/<wnid>/images``; the test split uses
    ``val/images`` labelled through ``val/val_annotations.txt``."""
    from PIL import Image

    directory = Path(directory)
    wnids = (directory / "wnids.txt").read_text().split()
    index = {w: i for i, w in enumerate(wnids)}
    files, labels = [], []
    if split == "train":
        for w in wnids:
            for f in sorted((directory / "train" / w / "images").glob("*")):
                files.append(f)
                labels.append(index[w])
    else:
        for line in (directory / "val" / "val_annotations.txt").read_text().splitlines():
            parts = line.split("\t")
            if len(parts) >= 2:
                files.append(directory / "val" / "images" / parts[0])
                labels.append(index[parts[1]])
    if not files:
        raise InvalidArgument(f"no TinyImageNet {split} images in {directory}")
    images = np.stack([np.asarray(Image.open(f).convert("RGB"), dtype=np.float32) / 255.0
                       for f in files])
    return ImageCorpus(images, np.asarray(labels, dtype=np.int64), len(wnids), split)


MANIFEST_MAGIC = "apsuite-corpus 1"


def write_manifest(path, images, labels=None, num_classes=0):
    """Write ``path`` (text header) plus ``<stem>.f32`` and ``<stem>.labels``."""
    path = Path(path)
    images = np.ascontiguousarray(images, dtype="<f4")
    n, h, w, c = images.shape
    payload = path.with_suffix(".f32")
    payload.write_bytes(images.tobytes())
    lines = [MANIFEST_MAGIC, f"width {w}", f"height {h}", f"channels {c}", f"count {n}",
             f"label_count {num_classes}", f"payload {payload.name}"]
    if labels is not None:
        lab = path.with_suffix(".labels")
        lab.write_bytes(np.asarray(labels, dtype="<i4").tobytes())
        lines.append(f"labels {lab.name}")
    path.write_text("\n".join(lines) + "\n")


def read_manifest(path, split="train"):
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != MANIFEST_MAGIC:
        raise InvalidArgument(f"{path}: missing manifest header")
    fields = {}
    for line in lines[1:]:
        if line.strip():
            key, _, value = line.partition(" ")
            fields[key] = value.strip()
    try:
        w, h, c, n = (int(fields[k]) for k in ("width", "height", "channels", "count"))
        k = int(fields.get("label_count", 0))
        payload = path.parent / fields["payload"]
    except (KeyError, ValueError) as e:
        raise InvalidArgument(f"{path}: bad manifest field ({e})") from None
    data = np.fromfile(payload, dtype="<f4")
    if data.size != n * h * w * c:
        raise InvalidArgument(f"{payload}: expected {n * h * w * c} floats, found {data.size}")
    labels = None
    if "labels" in fields:
        labels = np.fromfile(path.parent / fields["labels"], dtype="<i4").astype(np.int64)
    return ImageCorpus(data.reshape(n, h, w, c).astype(np.float32), labels, k, split)


_LOADERS = {"MNIST": load_mnist, "CIFAR10": load_cifar10, "TinyImageNet": load_tinyimagenet}


def load_corpus(name, path, split="train"):
    """Load a named corpus from either its native layout or a manifest file.

    A manifest path may contain ``{split}``, which is replaced by the split name.
    """
    if path is None:
        raise InvalidArgument(f"{name} needs a corpus path (datasets are not bundled)")
    p = Path(str(path).replace("{split}", split))
    if p.is_file():
        return read_manifest(p, split)
    if name not in _LOADERS:
        raise InvalidArgument(f"no native reader for corpus {name!r}")
    return _LOADERS[name](p, split)
