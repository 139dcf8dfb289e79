import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apsuite.core import InvalidArgument
from apsuite.mesh import (TriangleMesh, binary_erode, box_mesh, build_occupancy,
                          connected_components, ear_clip, extrude_polygon, icosphere,
                          is_consistently_oriented, is_simple_polygon, is_watertight,
                          marching_cubes, marching_cubes_table, mesh_volume, merge_meshes,
                          polygon_area, read_obj, smooth_mesh, surface_area, triangle_areas,
                          write_obj)

from oracles import min_filter_erode


def star(outer=15.0, inner=6.0, points=5):
    a = np.arange(2 * points) * math.pi / points
    r = np.where(np.arange(2 * points) % 2 == 0, outer, inner)
    return np.c_[r * np.cos(a), r * np.sin(a)]


def shoelace(p):
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(sum(x[i] * y[(i + 1) % len(p)] - x[(i + 1) % len(p)] * y[i]
                         for i in range(len(p))))


# --- erosion ------------------------------------------------------------------


def test_erosion_examples():
    img = np.ones((5, 5), dtype=bool)
    out = binary_erode(img, 3)
    expected = np.zeros((5, 5), dtype=bool)
    expected[1:4, 1:4] = True
    assert np.array_equal(out, expected)
    rng = np.random.default_rng(0)
    r = rng.random((9, 7)) < 0.5
    assert np.array_equal(binary_erode(r, 1), r)
    assert not binary_erode(np.zeros((6, 6), dtype=bool), 3).any()
    with pytest.raises(InvalidArgument):
        binary_erode(img, 2)
    with pytest.raises(InvalidArgument):
        binary_erode(img, 7)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([1, 3, 5, 7]))
def test_erosion_matches_min_filter(seed, k):
    img = np.random.default_rng(seed).random((20, 17)) < 0.7
    assert np.array_equal(binary_erode(img, k), min_filter_erode(img, k))


def test_erosion_monotone():
    img = np.random.default_rng(3).random((40, 40)) < 0.85
    prev = img
    for k in (3, 5, 7, 9):
        cur = binary_erode(img, k)
        assert not np.any(cur & ~prev)
        prev = cur


# --- occupancy ------------------------------------------------------------------


def test_build_occupancy():
    img = np.zeros((30, 30), dtype=bool)
    img[5:25, 8:22] = True
    occ = build_occupancy(img, [1])
    assert occ.shape == (30, 30, 2)
    assert np.array_equal(occ[..., 0], occ[..., 1])
    occ = build_occupancy(img, [1, 3, 5, 7])
    assert occ.shape[-1] == 8
    assert np.array_equal(occ, occ[..., ::-1])
    # layers shrink towards the outside
    for z in range(3, 0, -1):
        assert not np.any(occ[..., z - 1] & ~occ[..., z])
    assert np.array_equal(occ[..., 3], img)
    with pytest.raises(InvalidArgument):
        build_occupancy(img, [3, 1])
    with pytest.raises(InvalidArgument):
        build_occupancy(img, [])


# --- marching cubes -------------------------------------------------------------


def test_marching_cubes_empty_and_single_voxel():
    assert marching_cubes(np.zeros((4, 4, 4), dtype=bool)).is_empty
    g = np.zeros((3, 3, 3), dtype=bool)
    g[1, 1, 1] = True
    m = marching_cubes(g)
    assert len(m.triangles) == 8
    assert is_watertight(m) and is_consistently_oriented(m)
    assert mesh_volume(m) == pytest.approx(1 / 6)


def test_marching_cubes_table_covers_all_cases():
    table = marching_cubes_table()
    assert len(table) == 256
    assert len(table[0][0]) == 0 and len(table[255][0]) == 0
    assert all(len(tris) > 0 for tris, _ in table[1:255])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.1, 0.9))
def test_marching_cubes_watertight_on_random_grids(seed, density):
    g = np.random.default_rng(seed).random((8, 8, 8)) < density
    m = marching_cubes(g)
    assert is_watertight(m)
    assert is_consistently_oriented(m)
    assert mesh_volume(m) > 0
    assert np.all(triangle_areas(m) > 0)


def test_solid_block_volume():
    g = np.ones((10, 10, 10), dtype=bool)
    m = marching_cubes(g)
    assert abs(mesh_volume(m) - 1000) / 1000 < 0.10


# --- volume and primitives ------------------------------------------------------


def test_box_volumes():
    assert mesh_volume(box_mesh((0, 0, 0), (1, 1, 1))) == pytest.approx(1.0, abs=1e-12)
    assert len(box_mesh((0, 0, 0), (1, 1, 1)).triangles) == 12
    assert mesh_volume(box_mesh((0, 0, 0), (2, 3, 4))) == pytest.approx(24.0, abs=1e-12)


def test_icosphere_volume():
    m = icosphere(10.0, 3)
    assert is_watertight(m) and is_consistently_oriented(m)
    assert abs(mesh_volume(m) - 4188.8) / 4188.8 < 0.02


def test_volume_rejects_open_mesh():
    m = box_mesh((0, 0, 0), (1, 1, 1))
    open_mesh = TriangleMesh(m.vertices, m.triangles[:-1])
    assert not is_watertight(open_mesh)
    with pytest.raises(InvalidArgument):
        mesh_volume(open_mesh)


def test_inverted_mesh_has_negative_volume():
    m = box_mesh((0, 0, 0), (1, 2, 3))
    inv = TriangleMesh(m.vertices, m.triangles[:, ::-1])
    assert mesh_volume(inv) == pytest.approx(-6.0)


def test_extrude_examples():
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    assert mesh_volume(extrude_polygon(sq, 1.0)) == pytest.approx(1.0)
    s = star()
    m = extrude_polygon(s, 4.0)
    assert is_watertight(m) and is_consistently_oriented(m)
    assert mesh_volume(m) == pytest.approx(shoelace(s) * 4.0, rel=1e-12)
    tri = extrude_polygon([(0, 0), (2, 0), (0, 1)], 1.0)
    assert len(tri.triangles) == 8
    # clockwise input is accepted and reoriented
    assert mesh_volume(extrude_polygon(sq[::-1], 2.0)) == pytest.approx(2.0)


def test_extrude_rejects_self_intersection():
    bowtie = [(0, 0), (1, 1), (1, 0), (0, 1)]
    assert not is_simple_polygon(bowtie)
    with pytest.raises(InvalidArgument):
        extrude_polygon(bowtie, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 14), st.integers(0, 10 ** 6))
def test_ear_clip_area_matches_shoelace(n, seed):
    rng = np.random.default_rng(seed)
    ang = np.sort(rng.uniform(0, 2 * np.pi, n))
    gaps = np.diff(np.r_[ang, ang[0] + 2 * np.pi])
    if gaps.min() < 1e-3 or gaps.max() >= np.pi - 1e-3:
        return
    r = rng.uniform(1, 3, n)
    # star-shaped about the origin, so polar order gives a simple loop
    poly = np.c_[r * np.cos(ang), r * np.sin(ang)]
    assert is_simple_polygon(poly)
    if polygon_area(poly) < 0:
        poly = poly[::-1]
    tris = ear_clip(poly)
    assert len(tris) == n - 2
    area = sum(shoelace(poly[list(t)]) for t in tris)
    assert area == pytest.approx(abs(polygon_area(poly)), rel=1e-9)


# --- smoothing --------------------------------------------------------------------


def test_smoothing_identity_and_connectivity():
    m = icosphere(5.0, 2)
    same = smooth_mesh(m, 0)
    assert np.array_equal(same.vertices, m.vertices)
    s = smooth_mesh(m, 10, 0.5)
    assert len(s.vertices) == len(m.vertices)
    assert np.array_equal(s.triangles, m.triangles)
    assert is_watertight(s)


def test_smoothing_area_non_increasing_on_convex_input():
    m = icosphere(6.0, 2)
    prev = surface_area(m)
    for _ in range(10):
        m = smooth_mesh(m, 1, 0.5)
        a = surface_area(m)
        assert a <= prev + 1e-9
        prev = a


# --- misc -------------------------------------------------------------------------


def test_components_and_merge():
    a = box_mesh((0, 0, 0), (1, 1, 1))
    b = box_mesh((3, 0, 0), (4, 1, 1))
    m = merge_meshes([a, b])
    assert connected_components(m) == 2
    assert mesh_volume(m) == pytest.approx(2.0)


def test_obj_roundtrip(tmp_path):
    m = smooth_mesh(icosphere(3.3, 1), 2)
    write_obj(tmp_path / "m.obj", m)
    back = read_obj(tmp_path / "m.obj")
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.triangles, m.triangles)
    (tmp_path / "quad.obj").write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n")
    assert len(read_obj(tmp_path / "quad.obj").triangles) == 2
