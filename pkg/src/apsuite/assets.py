"""Procedural 3D assets for the tactile tasks: MNIST-3D style digit meshes,
Starstruck scene layouts, Toolbox wrenches and the dataset splits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import ndimage
from shapely.geometry import Polygon

from . import constants as C
from .core import InvalidArgument
from .mesh import (TriangleMesh, build_occupancy, extrude_polygon, marching_cubes, mesh_volume,
                   smooth_mesh)

KERNEL_SIZES = tuple(range(1, 20, 2))
LAYER_THICKNESS_MM = 0.2
SMOOTH_ITERATIONS = 10
SMOOTH_LAMBDA = 0.5


# --- synthetic high-resolution digits ---------------------------------------


def _arc(cx, cy, r, a0, a1, n=48, ry=None):
    a = np.radians(np.linspace(a0, a1, n))
    return np.stack([cx + r * np.cos(a), cy + (ry or r) * np.sin(a)], axis=1)


def _line(*pts):
    return np.array(pts, dtype=np.float64)


# unit-square strokes, y pointing down like image rows
DIGIT_STROKES = {
    0: [_arc(0.5, 0.5, 0.27, 0, 360, 96, ry=0.4)],
    1: [_line((0.38, 0.24), (0.52, 0.1), (0.52, 0.9))],
    2: [np.concatenate([_arc(0.5, 0.32, 0.22, 200, 380), _line((0.26, 0.9), (0.8, 0.9))])],
    3: [_arc(0.48, 0.3, 0.2, -160, 90), _arc(0.48, 0.69, 0.21, -90, 160)],
    4: [_line((0.66, 0.9), (0.66, 0.1), (0.22, 0.64), (0.82, 0.64))],
    5: [np.concatenate([_line((0.76, 0.1), (0.34, 0.1), (0.31, 0.46)),
                        _arc(0.5, 0.65, 0.24, -125, 150)])],
    6: [np.concatenate([_line((0.72, 0.12), (0.4, 0.36)), _arc(0.5, 0.66, 0.22, 215, 575)])],
    7: [_line((0.22, 0.1), (0.8, 0.1), (0.44, 0.9))],
    8: [_arc(0.5, 0.3, 0.18, 0, 360, 72), _arc(0.5, 0.69, 0.22, 0, 360, 72)],
    9: [_arc(0.5, 0.34, 0.2, 0, 360, 72), _line((0.7, 0.34), (0.62, 0.9))],
}


def synthetic_digit(label, seed, size=C.MNIST3D_IMAGE_SIZE):
    """Binary ``size x size`` bitmap (``[row, col]``) of a hand-drawn-looking digit.

    Stroke skeletons are distorted by a random affine map and thickened by a
    random pen radius; the source image stays inside the frame.
    """
    if label not in DIGIT_STROKES:
        raise InvalidArgument(f"no strokes for digit {label}")
    rng = np.random.default_rng(np.random.SeedSequence([0xD161, int(label), int(seed)]))
    scale = rng.uniform(0.55, 0.85)
    rot = rng.uniform(-0.25, 0.25)
    shear = rng.uniform(-0.25, 0.25)
    pen = rng.uniform(0.03, 0.055) * size
    m = np.array([[math.cos(rot), -math.sin(rot)], [math.sin(rot), math.cos(rot)]])
    m = m @ np.array([[1.0, shear], [0.0, 1.0]]) * scale * size
    strokes = []
    for s in DIGIT_STROKES[label]:
        jitter = rng.normal(0.0, 0.006, size=s.shape)
        strokes.append(((s - 0.5) + jitter) @ m.T)
    pts = np.concatenate(strokes)
    lo, hi = pts.min(axis=0) - pen, pts.max(axis=0) + pen
    room = size - 2 - (hi - lo)
    offset = -lo + 1 + rng.uniform(0.0, 1.0, size=2) * np.maximum(room, 0.0)
    canvas = np.zeros((size, size), dtype=bool)
    for s in strokes:
        s = s + offset
        for a, b in zip(s[:-1], s[1:]):
            n = int(np.ceil(np.hypot(*(b - a)))) + 1
            t = np.linspace(0.0, 1.0, n)[:, None]
            p = np.rint(a + t * (b - a)).astype(int)
            ok = (p[:, 0] >= 0) & (p[:, 0] < size) & (p[:, 1] >= 0) & (p[:, 1] < size)
            canvas[p[ok, 1], p[ok, 0]] = True
    return ndimage.distance_transform_edt(~canvas) <= pen


# --- MNIST 3D -------------------------------------------------------------------


def digit_to_mesh(img, kernel_sizes=KERNEL_SIZES, mm_per_pixel=C.MNIST3D_MM_PER_PIXEL,
                  layer_mm=LAYER_THICKNESS_MM, smooth_iterations=SMOOTH_ITERATIONS):
    """Stacked-erosion digit solid, centred on the ink centroid and resting on z = 0.

    ``img`` is a binary ``[row, col]`` bitmap; rows are flipped so the digit reads
    correctly seen from above with y pointing up.
    """
    img = np.asarray(img, dtype=bool)
    if not img.any():
        raise InvalidArgument("blank digit image")
    grid_xy = img[::-1, :].T
    occ = build_occupancy(grid_xy, kernel_sizes)
    mesh = marching_cubes(occ)
    mesh = smooth_mesh(mesh, smooth_iterations, SMOOTH_LAMBDA)
    xs, ys = np.nonzero(grid_xy)
    centroid = np.array([xs.mean(), ys.mean()]) * mm_per_pixel
    v = mesh.vertices * np.array([mm_per_pixel, mm_per_pixel, layer_mm])
    v[:, :2] -= centroid
    v[:, 2] -= v[:, 2].min()
    return TriangleMesh(v, mesh.triangles)


def mnist3d_label(object_id):
    return int(object_id) % C.MNIST3D_CLASSES


@lru_cache(maxsize=64)
def mnist3d_mesh(object_id, corpus_seed=0):
    """Mesh of synthetic MNIST-3D object ``object_id`` (label ``id % 10``)."""
    label = mnist3d_label(object_id)
    return digit_to_mesh(synthetic_digit(label, (int(corpus_seed) << 20) + int(object_id)))


@lru_cache(maxsize=256)
def mnist3d_volume(object_id, corpus_seed=0):
    return mesh_volume(mnist3d_mesh(object_id, corpus_seed))


def split_mnist3d(total=C.MNIST3D_TOTAL, seed=0, labels=None):
    """Assign every object id to a named split, class by class.

    Returns ``{split: sorted array of object ids}``. ``labels`` defaults to the
    synthetic corpus labelling ``id % 10``.
    """
    ids = np.arange(total)
    labels = ids % C.MNIST3D_CLASSES if labels is None else np.asarray(labels)
    per_class = sum(C.MNIST3D_SPLITS.values())
    rng = np.random.default_rng(np.random.SeedSequence([0x5917, int(seed)]))
    out = {name: [] for name in C.MNIST3D_SPLITS}
    for k in range(C.MNIST3D_CLASSES):
        members = ids[labels == k]
        if len(members) < per_class:
            raise InvalidArgument(f"class {k} has {len(members)} objects, needs {per_class}")
        members = members[rng.permutation(len(members))]
        start = 0
        for name, n in C.MNIST3D_SPLITS.items():
            out[name].extend(members[start:start + n].tolist())
            start += n
    return {name: np.sort(np.array(v, dtype=np.int64)) for name, v in out.items()}


# --- Starstruck -------------------------------------------------------------------

STAR_OUTER_MM = 15.0
STAR_INNER_MM = 6.0
CIRCLE_RADIUS_MM = 12.0
SQUARE_SIDE_MM = 20.0
SHAPE_HEIGHT_MM = 4.0
CIRCLE_SEGMENTS = 48


def shape_outline(shape):
    """Outline of a Starstruck shape around its own origin (counter-clockwise)."""
    if shape == "star":
        a = np.pi / 2 + np.arange(10) * np.pi / 5
        r = np.where(np.arange(10) % 2 == 0, STAR_OUTER_MM, STAR_INNER_MM)
        return np.stack([r * np.cos(a), r * np.sin(a)], axis=1)
    if shape == "circle":
        a = np.arange(CIRCLE_SEGMENTS) * 2 * np.pi / CIRCLE_SEGMENTS
        return CIRCLE_RADIUS_MM * np.stack([np.cos(a), np.sin(a)], axis=1)
    if shape == "square":
        h = SQUARE_SIDE_MM / 2
        return np.array([(-h, -h), (h, -h), (h, h), (-h, h)])
    raise InvalidArgument(f"unknown shape {shape!r}")


def place_outline(outline, pose):
    x, y, th = pose
    c, s = math.cos(th), math.sin(th)
    return outline @ np.array([[c, s], [-s, c]]) + np.array([x, y])


@lru_cache(maxsize=8)
def shape_mesh(shape):
    return extrude_polygon(shape_outline(shape), SHAPE_HEIGHT_MM)


@dataclass
class SceneLayout:
    items: list = field(default_factory=list)  # (shape, (x, y, theta))
    star_count: int = 1

    @property
    def label(self):
        return self.star_count - 1


def _bounding_radius(shape):
    return float(np.max(np.linalg.norm(shape_outline(shape), axis=1)))


def generate_starstruck_scene(seed, star_count=None):
    """Random non-overlapping arrangement of 1-3 stars and 0-5 circles/squares.

    Items are placed one by one (stars first) at uniform positions; a placement
    that overlaps an earlier item is redrawn, and after 100 failures for one item
    the whole arrangement restarts.
    """
    rng = np.random.default_rng(np.random.SeedSequence([0x57A2, int(seed)]))
    if star_count is None:
        star_count = int(rng.integers(1, C.STARSTRUCK_MAX_STARS + 1))
    n_distractors = int(rng.integers(0, C.STARSTRUCK_MAX_DISTRACTORS + 1))
    kinds = ["star"] * star_count + [
        "circle" if rng.random() < 0.5 else "square" for _ in range(n_distractors)]
    half = C.PLATFORM_SIZE_MM / 2
    while True:
        placed, polys = [], []
        for kind in kinds:
            outline = shape_outline(kind)
            r = _bounding_radius(kind)
            for _ in range(C.STARSTRUCK_PLACEMENT_ATTEMPTS):
                pose = (rng.uniform(-half + r, half - r), rng.uniform(-half + r, half - r),
                        rng.uniform(0.0, 2 * np.pi))
                poly = Polygon(place_outline(outline, pose))
                if not any(poly.intersects(q) for q in polys):
                    placed.append((kind, pose))
                    polys.append(poly)
                    break
            else:
                break
        else:
            return SceneLayout(placed, star_count)


def starstruck_corpus_seed(index, corpus_seed=0):
    return (int(corpus_seed) << 20) + int(index)


def starstruck_scene(index, corpus_seed=0):
    """Layout ``index`` of the 3,300-layout corpus; the class cycles 1, 2, 3 stars."""
    return generate_starstruck_scene(starstruck_corpus_seed(index, corpus_seed),
                                     star_count=index % 3 + 1)


def starstruck_split(split):
    """Test split = first 300 layouts (100 per class); training = the rest."""
    if split == "test":
        return np.arange(C.STARSTRUCK_TEST)
    return np.arange(C.STARSTRUCK_TEST, C.STARSTRUCK_TOTAL)


# --- Toolbox ----------------------------------------------------------------------

WRENCH_HANDLE_LEN_MM = 70.0
WRENCH_HANDLE_WIDTH_MM = 12.0
WRENCH_HEAD_RADIUS_MM = 14.0
WRENCH_JAW_RADIUS_MM = 7.0
WRENCH_JAW_HALF_ANGLE = math.radians(35)
WRENCH_HEIGHT_MM = 6.0


def wrench_outline(scale=1.0, arc_segments=24):
    """Open-ended wrench: C-shaped head (jaw facing +x) joined to a handle with a
    rounded end, recentred on its area centroid."""
    R, r = WRENCH_HEAD_RADIUS_MM, WRENCH_JAW_RADIUS_MM
    hw = WRENCH_HANDLE_WIDTH_MM / 2
    ja = WRENCH_JAW_HALF_ANGLE
    join = math.asin(hw / R)
    x_end = -R - WRENCH_HANDLE_LEN_MM + hw
    pts = []
    for a in np.linspace(ja, np.pi - join, arc_segments):
        pts.append((R * math.cos(a), R * math.sin(a)))
    for a in np.linspace(np.pi / 2, 3 * np.pi / 2, arc_segments):
        pts.append((x_end + hw * math.cos(a), hw * math.sin(a)))
    for a in np.linspace(np.pi + join, 2 * np.pi - ja, arc_segments):
        pts.append((R * math.cos(a), R * math.sin(a)))
    for a in np.linspace(2 * np.pi - ja, ja, 2 * arc_segments):
        pts.append((r * math.cos(a), r * math.sin(a)))
    p = np.array(pts) * scale
    poly = Polygon(p)
    return p - np.array(poly.centroid.coords[0])


@lru_cache(maxsize=8)
def wrench_mesh(variant):
    """One of the four tool variants; sizes are drawn from the variant seed."""
    if not 0 <= variant < C.TOOLBOX_VARIANTS:
        raise InvalidArgument(f"wrench variant must be in 0..{C.TOOLBOX_VARIANTS - 1}")
    rng = np.random.default_rng(np.random.SeedSequence([0x7001, int(variant)]))
    scale = rng.uniform(0.8, 1.0)  # keeps the longest variant under the platform side
    return extrude_polygon(wrench_outline(scale), WRENCH_HEIGHT_MM)
