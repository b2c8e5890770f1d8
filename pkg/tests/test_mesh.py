"""Mesh assembly, geometry, quality metrics, interchange format."""

import io
import math

import numpy as np
import pytest

from fvgrad import dd
from fvgrad.errors import DegenerateCell, MeshFormatError
from fvgrad.mesh import (NfPolicy, build_geometry, cell_centroid_dd,
                         cell_face_geom, cellface_table, cellface_table_dd,
                         check_mesh, face_centroid_dd, from_lists, quality,
                         read_mesh, write_mesh)
from fvgrad.meshgen import GridFamilySpec, gen_cartesian, gen_harc, generate


def two_triangles():
    """Unit square split along the diagonal into two triangles."""
    nodes = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    faces = [(0, 1, 0, "south"),   # 0
             (1, 2, 1, "east"),    # 1
             (2, 3, 1, "north"),   # 2
             (3, 0, 0, "west"),    # 3
             (1, 3, 0, 1)]         # 4 diagonal
    cells = [[0, 4, 3], [1, 2, 4]]
    m = from_lists(nodes, faces, cells)
    return build_geometry(m)


def test_triangle_areas_and_centroids():
    m = two_triangles()
    assert m.cell_area == pytest.approx([0.5, 0.5])
    assert m.cell_centroid[0] == pytest.approx([1 / 3, 1 / 3])
    assert m.cell_centroid[1] == pytest.approx([2 / 3, 2 / 3])


def test_face_normals_point_away_from_owner():
    m = two_triangles()
    for f in range(m.n_faces):
        own = m.face_owner[f]
        outward = m.face_centroid[f] - m.cell_centroid[own]
        assert np.dot(m.face_normal[f], outward) > 0


def test_face_lengths():
    m = two_triangles()
    assert m.face_length[4] == pytest.approx(math.sqrt(2.0))
    assert m.face_length[0] == pytest.approx(1.0)


def test_check_mesh_closed_surface():
    check_mesh(two_triangles())
    check_mesh(gen_cartesian(2))
    check_mesh(gen_harc(2))


def test_clockwise_loop_is_reoriented_by_default():
    nodes = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    faces = [(0, 1, 0, "b"), (1, 2, 0, "b"), (2, 3, 0, "b"), (3, 0, 0, "b")]
    m = from_lists(nodes, faces, [[3, 2, 1, 0]], cell_nodes=[[0, 3, 2, 1]])
    build_geometry(m)
    assert m.cell_area[0] == pytest.approx(1.0)


def test_clockwise_loop_rejected_without_reorient():
    nodes = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    faces = [(0, 1, 0, "b"), (1, 2, 0, "b"), (2, 3, 0, "b"), (3, 0, 0, "b")]
    m = from_lists(nodes, faces, [[3, 2, 1, 0]], cell_nodes=[[0, 3, 2, 1]])
    with pytest.raises(DegenerateCell):
        build_geometry(m, reorient=False)


def test_annular_sector_area_closed_form():
    # sum of cell areas = polygonal sector area: straight chords replace
    # arcs, so each circumferential band is n * (1/2) sin(dtheta) (ro^2-ri^2)
    level, R, A, dt0 = 2, 1.0, 1000.0, 0.256
    m = gen_harc(level, R=R, A=A, dtheta0=dt0)
    n = 2 ** (level + 1)
    dtheta = dt0 / 2 ** level
    dr = R * dtheta / A
    radii = R + dr * np.arange(n + 1)
    bands = 0.5 * math.sin(dtheta) * (radii[1:] ** 2 - radii[:-1] ** 2)
    assert m.cell_area.sum() == pytest.approx(n * bands.sum(), rel=1e-12)


def test_projection_point_hand_case():
    # owner centroid (1/3,1/3), neighbour (2/3,2/3), diagonal face centre
    # (1/2,1/2): the projection lands exactly on the face centre, alpha=1/2
    m = two_triangles()
    g = cell_face_geom(m, 0, 4, NfPolicy.PROJECTED_FACE_CENTROID)
    assert g.alpha == pytest.approx(0.5)
    assert g.c_prime == pytest.approx([0.5, 0.5])
    assert g.R == pytest.approx(np.asarray([1 / 6, 1 / 6]))


def test_nf_policies_give_distinct_points():
    m = two_triangles()
    gn = cell_face_geom(m, 0, 4, NfPolicy.NEIGHBOUR_CENTROID)
    gm = cell_face_geom(m, 0, 4, NfPolicy.MIDPOINT)
    assert gn.R == pytest.approx(np.asarray([1 / 3, 1 / 3]))
    assert gm.R == pytest.approx(np.asarray([1 / 6, 1 / 6]))


def test_quality_uniform_cartesian_is_perfect():
    s = quality(gen_cartesian(2)).summary()
    assert s["max_skewness"] == pytest.approx(0.0, abs=1e-13)
    assert s["max_unevenness"] == pytest.approx(0.0, abs=1e-13)
    assert s["max_nonorthogonality"] == pytest.approx(0.0, abs=1e-7)
    assert s["max_aspect_ratio"] == pytest.approx(1.0)


def test_quality_harc_aspect_ratio():
    s = quality(gen_harc(4)).summary()
    assert s["max_aspect_ratio"] == pytest.approx(1000.0, rel=2e-3)
    assert s["max_nonorthogonality"] < 1e-5


def test_cellface_table_signs_and_alpha():
    m = two_triangles()
    t = cellface_table(m)
    e = np.where((t.cell == 0) & (t.face == 4))[0][0]
    assert t.sign[e] == 1
    assert t.alpha[e] == pytest.approx(0.5)
    e1 = np.where((t.cell == 1) & (t.face == 4))[0][0]
    assert t.sign[e1] == -1
    # outward normals of the shared face are opposite
    assert t.snx[e] == pytest.approx(-t.snx[e1])


def test_dd_table_matches_double_on_exact_geometry():
    m = gen_cartesian(2)
    t = cellface_table(m)
    td = cellface_table_dd(m)
    assert np.allclose(td.Dx[0], t.Dx, atol=1e-15)
    assert np.max(np.abs(td.Dx[1])) < 1e-18
    assert np.allclose(td.omega[0], m.cell_area)


def test_dd_centroids_refine_thin_cell_roundoff():
    m = gen_harc(5)
    cx, cy = cell_centroid_dd(m)
    # binary64 and compensated centroids agree to ~5e-12 (shoelace
    # cancellation), far above the dd resolution
    dx = np.abs(cx[0] + cx[1] - m.cell_centroid[:, 0])
    assert 1e-16 < dx.max() < 1e-10


def test_dd_face_centroid_is_exact_midpoint():
    m = gen_harc(3)
    fx, fy = face_centroid_dd(m)
    a = m.nodes[m.face_nodes[:, 0]]
    b = m.nodes[m.face_nodes[:, 1]]
    ref = dd.mul_pwr2(dd.add(dd.from_double(a[:, 0]), dd.from_double(b[:, 0])), 0.5)
    assert np.array_equal(fx[0], ref[0]) and np.array_equal(fx[1], ref[1])


def test_roundtrip_preserves_everything():
    for spec in (GridFamilySpec("cartesian", 1, {}),
                 GridFamilySpec("locally-refined", 1, {}),
                 GridFamilySpec("harc", 1, {})):
        m = generate(spec)
        buf = io.StringIO()
        write_mesh(m, buf)
        buf.seek(0)
        m2 = build_geometry(read_mesh(buf))
        assert np.array_equal(m.nodes, m2.nodes)
        assert np.array_equal(m.face_nodes, m2.face_nodes)
        assert np.array_equal(m.face_owner, m2.face_owner)
        assert np.array_equal(m.face_neighbour, m2.face_neighbour)
        assert np.array_equal(m.cell_face_idx, m2.cell_face_idx)
        assert np.array_equal(m.cell_centroid, m2.cell_centroid)
        assert list(m.face_tags) == list(m2.face_tags)


def test_read_mesh_rejects_bad_header():
    with pytest.raises(MeshFormatError):
        read_mesh(io.StringIO("not-a-mesh\n"))


def test_read_mesh_rejects_truncation():
    m = gen_cartesian(0)
    buf = io.StringIO()
    write_mesh(m, buf)
    text = buf.getvalue()
    with pytest.raises(MeshFormatError):
        read_mesh(io.StringIO("\n".join(text.splitlines()[:5])))


def test_golden_mesh_file(tmp_path):
    # byte-stable output: the interchange writer uses repr() floats
    m = two_triangles()
    buf = io.StringIO()
    write_mesh(m, buf)
    first = buf.getvalue()
    buf2 = io.StringIO()
    write_mesh(m, buf2)
    assert buf2.getvalue() == first
    assert first.startswith("fvgrad-mesh v1\n4 5 2\n")
    assert "0.0 0.0" in first
