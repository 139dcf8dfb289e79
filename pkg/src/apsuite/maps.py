"""Occupancy grid maps: procedural generation, DDA raycasting, collision."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import constants as C
from .core import InvalidArgument, InvalidState

COLLISION_EPS = 1e-6


@dataclass
class GridMap:
    """``cells[y, x]`` is True for obstacles; cell ``(x, y)`` covers
    ``[x, x+1) x [y, y+1)`` in continuous map coordinates."""

    cells: np.ndarray
    kind: str = "maze"
    seed: int | None = None

    @property
    def width(self):
        return self.cells.shape[1]

    @property
    def height(self):
        return self.cells.shape[0]

    def is_free(self, x, y):
        ix, iy = math.floor(x), math.floor(y)
        if not (0 <= ix < self.width and 0 <= iy < self.height):
            return False
        return not self.cells[iy, ix]

    def free_cells(self):
        ys, xs = np.nonzero(~self.cells)
        return np.stack([xs, ys], axis=1)

    def as_image(self):
        """``(H, W, 1)`` float32 image: free space 1, obstacles 0."""
        return (~self.cells).astype(np.float32)[..., None]


def raycast(grid: GridMap, origin, direction):
    """Distance from ``origin`` to the first obstacle cell along ``direction``."""
    x, y = float(origin[0]), float(origin[1])
    if not grid.is_free(x, y):
        raise InvalidState(f"ray origin {(x, y)} lies inside an obstacle")
    dx, dy = float(direction[0]), float(direction[1])
    n = math.hypot(dx, dy)
    if n == 0:
        raise InvalidArgument("zero ray direction")
    dx, dy = dx / n, dy / n
    ix, iy = math.floor(x), math.floor(y)
    cells = grid.cells

    if dx > 0:
        sx, tx, ddx = 1, (ix + 1 - x) / dx, 1 / dx
    elif dx < 0:
        sx, tx, ddx = -1, (x - ix) / -dx, -1 / dx
    else:
        sx, tx, ddx = 0, math.inf, math.inf
    if dy > 0:
        sy, ty, ddy = 1, (iy + 1 - y) / dy, 1 / dy
    elif dy < 0:
        sy, ty, ddy = -1, (y - iy) / -dy, -1 / dy
    else:
        sy, ty, ddy = 0, math.inf, math.inf

    w, h = grid.width, grid.height
    while True:
        if tx < ty:
            ix += sx
            t = tx
            tx += ddx
        else:
            iy += sy
            t = ty
            ty += ddy
        if not (0 <= ix < w and 0 <= iy < h) or cells[iy, ix]:
            return t


BEAM_ANGLES = np.arange(C.LIDAR_BEAMS) * (2 * np.pi / C.LIDAR_BEAMS)
BEAM_DIRS = np.stack([np.cos(BEAM_ANGLES), np.sin(BEAM_ANGLES)], axis=1)


def lidar_scan(grid: GridMap, pos):
    """Eight beam distances at 45° steps starting along +x, normalized by the
    larger map side and clipped to [0, 1]."""
    scale = max(grid.width, grid.height)
    d = np.array([raycast(grid, pos, v) for v in BEAM_DIRS])
    return np.clip(d / scale, 0.0, 1.0)


def move_with_collision(grid: GridMap, pos, delta):
    """Apply ``delta`` one axis at a time, stopping just short of obstacles.

    Returns ``(new_pos, realized_delta)``. ``|delta|`` must be at most one cell
    per axis, so at most one cell boundary is crossed per axis.
    """
    x, y = float(pos[0]), float(pos[1])
    dx, dy = float(delta[0]), float(delta[1])
    if abs(dx) > 1 or abs(dy) > 1:
        raise InvalidArgument("move_with_collision expects |delta| <= 1 per axis")
    nx = x + dx
    if dx != 0 and not grid.is_free(nx, y):
        nx = math.floor(nx) - COLLISION_EPS if dx > 0 else math.floor(nx) + 1 + COLLISION_EPS
    ny = y + dy
    if dy != 0 and not grid.is_free(nx, ny):
        ny = math.floor(ny) - COLLISION_EPS if dy > 0 else math.floor(ny) + 1 + COLLISION_EPS
    new = np.array([nx, ny])
    return new, new - np.array([x, y])


def generate_maze(seed, size=C.MAP_SIZES["maze"]):
    """Perfect maze by randomized depth-first search on a ``(2k+1)²`` lattice."""
    if size % 2 == 0 or size < 3:
        raise InvalidArgument("maze size must be odd and >= 3")
    rng = np.random.default_rng(np.random.SeedSequence([0x3A2E, int(seed)]))
    k = (size - 1) // 2
    cells = np.ones((size, size), dtype=bool)
    visited = np.zeros((k, k), dtype=bool)
    start = (int(rng.integers(k)), int(rng.integers(k)))
    stack = [start]
    visited[start[1], start[0]] = True
    cells[2 * start[1] + 1, 2 * start[0] + 1] = False
    steps = ((1, 0), (-1, 0), (0, 1), (0, -1))
    while stack:
        cx, cy = stack[-1]
        options = [(cx + sx, cy + sy) for sx, sy in steps
                   if 0 <= cx + sx < k and 0 <= cy + sy < k and not visited[cy + sy, cx + sx]]
        if not options:
            stack.pop()
            continue
        nx, ny = options[int(rng.integers(len(options)))]
        visited[ny, nx] = True
        cells[2 * ny + 1, 2 * nx + 1] = False
        cells[cy + ny + 1, cx + nx + 1] = False
        stack.append((nx, ny))
    return GridMap(cells, "maze", int(seed))


MIN_ROOM = 5


def generate_rooms(seed, size=C.MAP_SIZES["rooms"]):
    """Binary space partition into rooms of at least 5x5 cells, each dividing
    wall pierced by one door of width 1 or 2."""
    rng = np.random.default_rng(np.random.SeedSequence([0x8005, int(seed)]))
    cells = np.ones((size, size), dtype=bool)
    cells[1:-1, 1:-1] = False
    doors = set()

    def split(x0, y0, x1, y1):
        w, h = x1 - x0 + 1, y1 - y0 + 1
        if w <= 15 and h <= 15 and rng.random() < 0.3:
            return
        vert = [x for x in range(x0 + MIN_ROOM, x1 - MIN_ROOM + 1)
                if (x, y0 - 1) not in doors and (x, y1 + 1) not in doors]
        horz = [y for y in range(y0 + MIN_ROOM, y1 - MIN_ROOM + 1)
                if (x0 - 1, y) not in doors and (x1 + 1, y) not in doors]
        if not vert and not horz:
            return
        if vert and horz:
            use_vert = w > h or (w == h and rng.random() < 0.5)
        else:
            use_vert = bool(vert)
        if use_vert:
            x = vert[int(rng.integers(len(vert)))]
            cells[y0:y1 + 1, x] = True
            width = int(rng.integers(1, 3))
            d = int(rng.integers(y0, y1 - width + 2))
            for yy in range(d, d + width):
                cells[yy, x] = False
                doors.add((x, yy))
            split(x0, y0, x - 1, y1)
            split(x + 1, y0, x1, y1)
        else:
            y = horz[int(rng.integers(len(horz)))]
            cells[y, x0:x1 + 1] = True
            width = int(rng.integers(1, 3))
            d = int(rng.integers(x0, x1 - width + 2))
            for xx in range(d, d + width):
                cells[y, xx] = False
                doors.add((xx, y))
            split(x0, y0, x1, y - 1)
            split(x0, y + 1, x1, y1)

    split(1, 1, size - 2, size - 2)
    return GridMap(cells, "rooms", int(seed))


def write_bitmap_pbm(path, bits):
    """Plain PBM (P1) of a boolean ``[row, col]`` array; True is written as 1."""
    bits = np.asarray(bits, dtype=bool)
    h, w = bits.shape
    body = np.where(bits, "1", "0")
    rows = "\n".join(" ".join(row) for row in body)
    Path(path).write_text(f"P1\n{w} {h}\n{rows}\n")


def write_pbm(path, grid: GridMap):
    """Plain PBM (P1), obstacle = 1, plus a one-line ``.manifest`` sidecar."""
    path = Path(path)
    write_bitmap_pbm(path, grid.cells)
    path.with_suffix(".manifest").write_text(
        f"kind={grid.kind} seed={grid.seed} width={grid.width} height={grid.height}\n")


def read_pbm(path, kind=None):
    path = Path(path)
    tokens = []
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    if not tokens or tokens[0] != "P1":
        raise InvalidArgument(f"{path}: not a plain PBM file")
    w, h = int(tokens[1]), int(tokens[2])
    bits = "".join(tokens[3:])
    if len(bits) != w * h:
        raise InvalidArgument(f"{path}: expected {w * h} pixels, found {len(bits)}")
    cells = np.frombuffer(bits.encode(), dtype=np.uint8).reshape(h, w) == ord("1")
    seed = None
    side = path.with_suffix(".manifest")
    if side.exists():
        meta = dict(kv.split("=", 1) for kv in side.read_text().split())
        kind = kind or meta.get("kind")
        seed = None if meta.get("seed") in (None, "None") else int(meta["seed"])
    return GridMap(cells, kind or "maze", seed)
