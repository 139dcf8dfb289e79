"""Triangle meshes: erosion/occupancy stacking, marching cubes, smoothing,
volume, polygon extrusion and OBJ I/O."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .core import InvalidArgument


@dataclass
class TriangleMesh:
    vertices: np.ndarray  # (V, 3) float64
    triangles: np.ndarray  # (T, 3) int64, counter-clockwise seen from outside

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)

    def __len__(self):
        return len(self.triangles)

    @property
    def is_empty(self):
        return len(self.triangles) == 0

    def copy(self):
        return TriangleMesh(self.vertices.copy(), self.triangles.copy())

    def translated(self, offset):
        return TriangleMesh(self.vertices + np.asarray(offset, dtype=np.float64), self.triangles.copy())

    def scaled(self, factors):
        return TriangleMesh(self.vertices * np.asarray(factors, dtype=np.float64), self.triangles.copy())

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def merge_meshes(meshes):
    verts, tris, off = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + off)
        off += len(m.vertices)
    if not verts:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    return TriangleMesh(np.concatenate(verts), np.concatenate(tris))


# --- topology checks --------------------------------------------------------


def _edges(tris):
    return np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])


def _edge_keys(e, n):
    # one int64 per (a, b) pair; much faster to sort than rows
    e = e.astype(np.int64)
    return e[:, 0] * n + e[:, 1]


def is_watertight(mesh: TriangleMesh):
    """Every undirected edge is shared by exactly two triangles."""
    if mesh.is_empty:
        return False
    e = np.sort(_edges(mesh.triangles), axis=1)
    _, counts = np.unique(_edge_keys(e, len(mesh.vertices)), return_counts=True)
    return bool(np.all(counts == 2))


def is_consistently_oriented(mesh: TriangleMesh):
    """Each directed edge occurs once and its reverse occurs once."""
    e = _edges(mesh.triangles)
    n = len(mesh.vertices)
    fwd = np.sort(_edge_keys(e, n))
    if np.any(fwd[1:] == fwd[:-1]):
        return False
    return bool(np.array_equal(fwd, np.sort(_edge_keys(e[:, ::-1], n))))


def triangle_areas(mesh: TriangleMesh):
    v = mesh.vertices[mesh.triangles]
    return 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)


def surface_area(mesh: TriangleMesh):
    return float(triangle_areas(mesh).sum())


def connected_components(mesh: TriangleMesh):
    """Number of vertex-connected components among referenced vertices."""
    from scipy.sparse.csgraph import connected_components as cc

    e = _edges(mesh.triangles)
    n = len(mesh.vertices)
    g = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    _, labels = cc(g, directed=False)
    used = np.unique(mesh.triangles)
    return len(np.unique(labels[used]))


def mesh_volume(mesh: TriangleMesh):
    """Enclosed volume as a sum of signed tetrahedra against the origin."""
    if not is_watertight(mesh):
        raise InvalidArgument("mesh_volume needs a watertight mesh")
    v = mesh.vertices[mesh.triangles]
    return float(np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2])).sum() / 6.0)


# --- erosion and occupancy --------------------------------------------------


def _erode_axis(bits, k, axis):
    r = k // 2
    b = np.moveaxis(bits, axis, -1).astype(np.int32)
    pad = np.zeros(b.shape[:-1] + (r,), dtype=np.int32)
    c = np.cumsum(np.concatenate([pad, b, pad], axis=-1), axis=-1)
    c = np.concatenate([np.zeros(b.shape[:-1] + (1,), dtype=c.dtype), c], axis=-1)
    n = b.shape[-1]
    window = c[..., k:k + n] - c[..., 0:n]
    return np.moveaxis(window == k, -1, axis)


def binary_erode(img, k):
    """Erosion with a ``k x k`` square; pixels outside the image count as off."""
    img = np.asarray(img, dtype=bool)
    if k < 1 or k % 2 == 0:
        raise InvalidArgument(f"kernel size must be odd and positive, got {k}")
    if k > min(img.shape):
        raise InvalidArgument("kernel larger than image")
    if k == 1:
        return img.copy()
    return _erode_axis(_erode_axis(img, k, 0), k, 1)


def build_occupancy(img, kernel_sizes):
    """Stack increasingly eroded copies of ``img`` and mirror them in depth.

    ``img`` is indexed ``[x, y]``; the result is ``[x, y, z]`` with ``2 L`` layers
    whose outermost layers are the most eroded ones.
    """
    ks = list(kernel_sizes)
    if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
        raise InvalidArgument("kernel sizes must be a non-empty increasing list")
    layers = [binary_erode(img, k) for k in ks]
    half = np.stack(layers, axis=-1)  # least eroded first
    return np.concatenate([half[..., ::-1], half], axis=-1)


# --- marching cubes ---------------------------------------------------------

CORNERS = np.array([(i & 1, (i >> 1) & 1, (i >> 2) & 1) for i in range(8)])


def _edge_list():
    edges = []
    for axis in range(3):
        others = [a for a in range(3) if a != axis]
        for u, v in itertools.product((0, 1), repeat=2):
            lo = [0, 0, 0]
            lo[others[0]], lo[others[1]] = u, v
            hi = list(lo)
            hi[axis] = 1
            a = lo[0] + 2 * lo[1] + 4 * lo[2]
            b = hi[0] + 2 * hi[1] + 4 * hi[2]
            edges.append((a, b, axis))
    return edges


EDGES = _edge_list()
EDGE_MID = np.array([(CORNERS[a] + CORNERS[b]) / 2.0 for a, b, _ in EDGES])
EDGE_BASE = np.array([CORNERS[a] for a, _, _ in EDGES])
EDGE_AXIS = np.array([ax for _, _, ax in EDGES])


def _faces():
    faces = []
    for axis in range(3):
        for side in (0, 1):
            corners = [c for c in range(8) if CORNERS[c][axis] == side]
            edges = [e for e, (a, b, _) in enumerate(EDGES) if a in corners and b in corners]
            normal = np.zeros(3)
            normal[axis] = 1 if side else -1
            faces.append((corners, edges, normal))
    return faces


FACES = _faces()
_FACE_OF_EDGE_PAIR = {frozenset((e1, e2)) for _, es, _ in FACES for e1 in es for e2 in es if e1 != e2}


def _case_loops(config):
    inside = [(config >> c) & 1 for c in range(8)]
    nxt = {}
    for corners, edges, normal in FACES:
        cut = [e for e in edges if inside[EDGES[e][0]] != inside[EDGES[e][1]]]
        if not cut:
            continue
        ins = [c for c in corners if inside[c]]
        if len(cut) == 2:
            groups = [(cut, ins)]
        else:
            # ambiguous face: cut off each inside corner separately
            groups = []
            for c in ins:
                adj = [e for e in cut if c in EDGES[e][:2]]
                groups.append((adj, [c]))
        for (e1, e2), cs in groups:
            mid = (EDGE_MID[e1] + EDGE_MID[e2]) / 2
            u = CORNERS[cs].mean(axis=0) - mid
            d = EDGE_MID[e2] - EDGE_MID[e1]
            if np.dot(np.cross(u, d), normal) < 0:
                e1, e2 = e2, e1
            if e1 in nxt:
                raise AssertionError("inconsistent marching cubes orientation")
            nxt[e1] = e2
    loops = []
    seen = set()
    for start in sorted(nxt):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        e = nxt[start]
        while e != start:
            loop.append(e)
            seen.add(e)
            e = nxt[e]
        loops.append(loop)
    return loops


def _triangulate_loop(loop, centroid_code):
    n = len(loop)
    if n == 3:
        return [tuple(loop)]
    for s in range(n):
        order = loop[s:] + loop[:s]
        if all(frozenset((order[0], order[i])) not in _FACE_OF_EDGE_PAIR for i in range(2, n - 1)):
            return [(order[0], order[i], order[i + 1]) for i in range(1, n - 1)]
    return [(centroid_code, loop[i], loop[(i + 1) % n]) for i in range(n)]


@lru_cache(maxsize=1)
def marching_cubes_table():
    """For each of the 256 corner configurations: ``(triangles, centroid_loops)``.

    Triangle entries 0..11 are cube edges (vertex at the edge midpoint); entries
    ``12 + j`` refer to the centroid of ``centroid_loops[j]``. Ambiguous faces
    always separate the inside corners, which keeps neighbouring cubes
    consistent, and fan diagonals are only used between edges that no other cube
    shares, so the output is a closed 2-manifold.
    """
    table = []
    for config in range(256):
        tris, cloops = [], []
        for loop in _case_loops(config):
            code = 12 + len(cloops)
            t = _triangulate_loop(loop, code)
            if any(code in tri for tri in t):
                cloops.append(loop)
            tris.extend(t)
        table.append((np.array(tris, dtype=np.int64).reshape(-1, 3), cloops))
    return table


def marching_cubes(grid, iso=0.5):
    """Surface of a binary ``[x, y, z]`` occupancy grid, with grid points as
    samples. The grid is padded with empty samples so the surface is closed;
    output coordinates are in sample units of the unpadded grid."""
    g = np.pad(np.asarray(grid, dtype=np.float64) > iso, 1)
    nx, ny, nz = g.shape
    config = np.zeros((nx - 1, ny - 1, nz - 1), dtype=np.int32)
    for c, (i, j, k) in enumerate(CORNERS):
        config |= g[i:nx - 1 + i, j:ny - 1 + j, k:nz - 1 + k].astype(np.int32) << c
    flat = config.ravel()
    cells = np.nonzero((flat != 0) & (flat != 255))[0]
    if len(cells) == 0:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    cfg = flat[cells]
    order = np.argsort(cfg, kind="stable")
    cells, cfg = cells[order], cfg[order]
    ci, cj, ck = np.unravel_index(cells, config.shape)
    base = np.stack([ci, cj, ck], axis=1)
    starts = np.flatnonzero(np.r_[True, cfg[1:] != cfg[:-1]])
    ends = np.r_[starts[1:], len(cfg)]

    table = marching_cubes_table()
    tri_parts, cent_pos = [], []
    n_edge_ids = nx * ny * nz * 3
    next_cent = n_edge_ids
    for s, e in zip(starts, ends):
        tris, cloops = table[cfg[s]]
        b = base[s:e]  # (M, 3)
        m = len(b)
        # global id of every cube edge for every cell: (M, 12)
        corner = b[:, None, :] + EDGE_BASE[None, :, :]
        lin = (corner[..., 0] * ny + corner[..., 1]) * nz + corner[..., 2]
        ids = lin * 3 + EDGE_AXIS[None, :]
        if cloops:
            cids = next_cent + np.arange(m * len(cloops)).reshape(m, len(cloops))
            next_cent += m * len(cloops)
            ids = np.concatenate([ids, cids], axis=1)
            for j, loop in enumerate(cloops):
                cent_pos.append((cids[:, j], b + EDGE_MID[loop].mean(axis=0)))
        tri_parts.append(ids[:, tris].reshape(-1, 3))
    all_tris = np.concatenate(tri_parts)
    used, inv = np.unique(all_tris, return_inverse=True)
    inv = inv.reshape(-1, 3)
    verts = np.empty((len(used), 3))
    edge_mask = used < n_edge_ids
    eid = used[edge_mask]
    axis = eid % 3
    lin = eid // 3
    pi, pj, pk = np.unravel_index(lin, (nx, ny, nz))
    ev = np.stack([pi, pj, pk], axis=1).astype(np.float64)
    ev[np.arange(len(ev)), axis] += 0.5
    verts[edge_mask] = ev
    if cent_pos:
        cid = np.concatenate([c for c, _ in cent_pos])
        cpos = np.concatenate([p for _, p in cent_pos])
        verts[np.searchsorted(used, cid)] = cpos
    # samples were shifted by the one-sample padding
    verts -= 1.0
    return TriangleMesh(verts, inv)


# --- smoothing ----------------------------------------------------------------


def vertex_adjacency(mesh: TriangleMesh):
    e = np.sort(_edges(mesh.triangles), axis=1)
    n = len(mesh.vertices)
    key = np.unique(_edge_keys(e, n))
    e = np.stack([key // n, key % n], axis=1)
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))


def smooth_mesh(mesh: TriangleMesh, iterations=10, lam=0.5):
    """Uniform Laplacian smoothing; connectivity is left untouched."""
    if iterations <= 0:
        return mesh.copy()
    adj = vertex_adjacency(mesh)
    deg = np.asarray(adj.sum(axis=1)).ravel()
    deg[deg == 0] = 1.0
    v = mesh.vertices.copy()
    for _ in range(iterations):
        v += lam * ((adj @ v) / deg[:, None] - v)
    return TriangleMesh(v, mesh.triangles.copy())


# --- primitives ---------------------------------------------------------------


def polygon_area(poly):
    p = np.asarray(poly, dtype=np.float64)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, p3, p4):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def is_simple_polygon(poly):
    p = np.asarray(poly, dtype=np.float64)
    n = len(p)
    if n < 3:
        return False
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]):
                return False
    return abs(polygon_area(p)) > 0


def ear_clip(poly):
    """Triangulate a simple counter-clockwise polygon; returns index triples."""
    p = np.asarray(poly, dtype=np.float64)
    idx = list(range(len(p)))
    tris = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def inside(pt, a, b, c):
        return cross(a, b, pt) >= 0 and cross(b, c, pt) >= 0 and cross(c, a, pt) >= 0

    guard = 0
    while len(idx) > 3:
        n = len(idx)
        for k in range(n):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % n]
            a, b, c = p[i0], p[i1], p[i2]
            if cross(a, b, c) <= 1e-12:
                continue
            if any(inside(p[j], a, b, c) for j in idx if j not in (i0, i1, i2)
                   and not (np.allclose(p[j], a) or np.allclose(p[j], b) or np.allclose(p[j], c))):
                continue
            tris.append((i0, i1, i2))
            idx.pop(k)
            break
        else:
            guard += 1
            if guard > 1:
                raise InvalidArgument("ear clipping failed; polygon not simple")
    tris.append(tuple(idx))
    return tris


def extrude_polygon(poly, height):
    """Watertight prism over a simple 2D loop, base at z = 0."""
    p = np.asarray(poly, dtype=np.float64)
    if not is_simple_polygon(p):
        raise InvalidArgument("polygon is self-intersecting or degenerate")
    if polygon_area(p) < 0:
        p = p[::-1]
    n = len(p)
    verts = np.concatenate([np.c_[p, np.zeros(n)], np.c_[p, np.full(n, float(height))]])
    cap = np.array(ear_clip(p), dtype=np.int64)
    tris = [cap[:, ::-1], cap + n]
    i = np.arange(n)
    j = (i + 1) % n
    tris.append(np.stack([i, j, j + n], axis=1))
    tris.append(np.stack([i, j + n, i + n], axis=1))
    return TriangleMesh(verts, np.concatenate(tris))


def box_mesh(lo, hi):
    lo, hi = np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64)
    mesh = extrude_polygon([(lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]), (lo[0], hi[1])],
                           hi[2] - lo[2])
    return mesh.translated((0.0, 0.0, lo[2]))


def icosphere(radius=1.0, subdivisions=0):
    t = (1 + 5 ** 0.5) / 2
    v = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t), (0, -1, -t),
         (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    f = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
         (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
         (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(p, dtype=np.float64) / math.sqrt(1 + t * t) for p in v]
    faces = f
    for _ in range(subdivisions):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return TriangleMesh(np.array(verts) * radius, np.array(faces))


# --- OBJ ------------------------------------------------------------------------


def write_obj(path, mesh: TriangleMesh):
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path):
    verts, tris = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) - 1 for p in parts[1:]]
            for i in range(1, len(idx) - 1):
                tris.append((idx[0], idx[i], idx[i + 1]))
    return TriangleMesh(np.array(verts).reshape(-1, 3), np.array(tris).reshape(-1, 3))
