"""Orthographic top-down depth rendering of meshes under a tactile sensor."""

from __future__ import annotations

import math

import numpy as np

from . import constants as C
from .mesh import TriangleMesh

SENSOR_FOOTPRINT_MM = 14.0
SENSOR_RESOLUTION = 64
BIN_MM = 1.0
_EPS = 1e-9


class MeshIndex:
    """Uniform 2D bin grid over the up-facing triangles of a mesh.

    The highest intersection of a vertical ray with a closed, outward-oriented
    mesh always lies on an up-facing triangle, so the others are dropped.
    """

    def __init__(self, mesh: TriangleMesh, bin_mm=BIN_MM):
        v = mesh.vertices[mesh.triangles]  # (T, 3, 3)
        a, b, c = v[:, 0, :2], v[:, 1, :2], v[:, 2, :2]
        ab, ac = b - a, c - a
        det = ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0]
        keep = det > 1e-14
        self.a, self.ab, self.ac, self.det = a[keep], ab[keep], ac[keep], det[keep]
        self.z = v[keep, :, 2]
        self.height = float(mesh.vertices[:, 2].max()) if len(mesh.vertices) else 0.0
        self.radius = float(np.linalg.norm(mesh.vertices[:, :2], axis=1).max()) if len(mesh.vertices) else 0.0
        xy = v[keep, :, :2]
        self.bin = bin_mm
        if len(xy) == 0:
            self.origin = np.zeros(2)
            self.shape = (0, 0)
            self.indptr = np.zeros(1, dtype=np.int64)
            self.items = np.zeros(0, dtype=np.int64)
            return
        lo = xy.reshape(-1, 2).min(axis=0)
        hi = xy.reshape(-1, 2).max(axis=0)
        self.origin = lo
        nb = np.maximum(np.ceil((hi - lo) / bin_mm).astype(int), 1)
        self.shape = (int(nb[0]), int(nb[1]))
        tlo = np.clip(np.floor((xy.min(axis=1) - lo) / bin_mm).astype(int), 0, nb - 1)
        thi = np.clip(np.floor((xy.max(axis=1) - lo) / bin_mm).astype(int), 0, nb - 1)
        span = thi - tlo + 1
        counts = span[:, 0] * span[:, 1]
        tri = np.repeat(np.arange(len(xy)), counts)
        k = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        sx = span[tri, 0]
        bx = tlo[tri, 0] + k % sx
        by = tlo[tri, 1] + k // sx
        bins = bx * nb[1] + by
        order = np.argsort(bins, kind="stable")
        self.items = tri[order]
        self.indptr = np.searchsorted(bins[order], np.arange(nb[0] * nb[1] + 1))

    def surface_height(self, pts):
        """Highest surface z above each local ``(x, y)`` point; ``-inf`` if none."""
        out = np.full(len(pts), -np.inf)
        if len(self.items) == 0:
            return out
        b = np.floor((pts - self.origin) / self.bin).astype(np.int64)
        ok = (b[:, 0] >= 0) & (b[:, 0] < self.shape[0]) & (b[:, 1] >= 0) & (b[:, 1] < self.shape[1])
        pidx = np.nonzero(ok)[0]
        if len(pidx) == 0:
            return out
        flat = b[pidx, 0] * self.shape[1] + b[pidx, 1]
        start, stop = self.indptr[flat], self.indptr[flat + 1]
        counts = stop - start
        total = int(counts.sum())
        if total == 0:
            return out
        rep = np.repeat(pidx, counts)
        k = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        tri = self.items[np.repeat(start, counts) + k]
        d = pts[rep] - self.a[tri]
        ab, ac, det = self.ab[tri], self.ac[tri], self.det[tri]
        wb = (d[:, 0] * ac[:, 1] - d[:, 1] * ac[:, 0]) / det
        wc = (ab[:, 0] * d[:, 1] - ab[:, 1] * d[:, 0]) / det
        wa = 1.0 - wb - wc
        hit = (wa >= -_EPS) & (wb >= -_EPS) & (wc >= -_EPS)
        z = self.z[tri]
        h = wa * z[:, 0] + wb * z[:, 1] + wc * z[:, 2]
        np.maximum.at(out, rep[hit], h[hit])
        return out


def sensor_pixel_centers(x, y, footprint=SENSOR_FOOTPRINT_MM, res=SENSOR_RESOLUTION):
    """World ``(x, y)`` of every pixel centre, shape ``(res, res, 2)``.

    Columns run along +x; rows run along -y so the image reads upright.
    """
    off = (np.arange(res) + 0.5) * footprint / res - footprint / 2
    xs = x + off
    ys = y - off
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx, gy], axis=-1)


def render_depth(objects, sensor_pos, clip=C.GEL_CLIP_MM,
                 footprint=SENSOR_FOOTPRINT_MM, res=SENSOR_RESOLUTION):
    """Penetration depth map (mm) of the gel plane at height ``sensor_pos[2]``.

    ``objects`` is a sequence of ``(MeshIndex, (x, y, theta))``. Each pixel gets
    ``min(clip, max(0, surface - z))``; pixels with no geometry stay 0.
    """
    sx, sy, sz = (float(v) for v in sensor_pos)
    pts = sensor_pixel_centers(sx, sy, footprint, res).reshape(-1, 2)
    height = np.full(len(pts), -np.inf)
    half_diag = footprint / math.sqrt(2)
    for index, (ox, oy, th) in objects:
        if index.height <= sz:
            continue
        if math.hypot(ox - sx, oy - sy) > index.radius + half_diag:
            continue
        c, s = math.cos(th), math.sin(th)
        rel = pts - np.array([ox, oy])
        local = np.stack([c * rel[:, 0] + s * rel[:, 1], -s * rel[:, 0] + c * rel[:, 1]], axis=1)
        np.maximum(height, index.surface_height(local), out=height)
    depth = np.clip(height - sz, 0.0, clip)
    depth[~np.isfinite(height)] = 0.0
    return depth.reshape(res, res)


def depth_to_obs(depth, clip=C.GEL_CLIP_MM):
    """Map depths in [0, clip] to [-1, 1] (no contact = +1), as 3 identical channels."""
    depth = np.asarray(depth, dtype=np.float64)
    if depth.min() < 0 or depth.max() > clip:
        raise AssertionError("depth outside [0, clip]")
    n = (1.0 - 2.0 * depth / clip).astype(np.float32)
    return np.repeat(n[..., None], 3, axis=-1)
