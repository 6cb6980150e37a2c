"""Point clouds: sampling recipes, weights, co-normals, serialization."""

import numpy as np
import pytest

from nlpoisson.geometry import (
    PointCloud,
    _cell_weight,
    _segment_weights,
    _simplex_cell_weights,
    boundary_weights,
    build_cloud,
    conormal,
    exact_fields,
    get_case,
    load_cloud_csv,
    sample_case,
    save_cloud_csv,
    volume_weights,
)

SQ3 = np.sqrt(3.0)


def test_counts_and_delta():
    c = sample_case("hemisphere2", 5, 1)
    assert (c.n0, c.m0) == (40, 15)
    assert c.delta == pytest.approx(np.sqrt(0.2), rel=1e-15)
    c3 = sample_case("hemisphere3", 4, 1)
    assert (c3.n0, c3.m0) == (256, 64)


def test_unknown_case_and_small_t():
    with pytest.raises(ValueError):
        sample_case("klein_bottle", 5, 1)
    with pytest.raises(ValueError):
        sample_case("hemisphere2", 3, 1)


def test_determinism_bit_exact():
    a = build_cloud("hemisphere2", 8, 42)
    b = build_cloud("hemisphere2", 8, 42)
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.A, b.A)
    assert np.array_equal(a.L, b.L)
    c = build_cloud("hemisphere2", 8, 43)
    assert not np.array_equal(a.points, c.points)


@pytest.mark.parametrize("name,t", [("hemisphere2", 7), ("hemisphere3", 4)])
def test_points_on_manifold(name, t):
    case = get_case(name)
    cloud = sample_case(name, t, 3)
    norms = (cloud.points**2).sum(axis=1)
    assert np.abs(norms - 1.0).max() < 1e-12
    q = cloud.boundary
    if name == "hemisphere2":
        assert np.abs(q[:, 0] ** 2 + q[:, 1] ** 2 - 0.75).max() < 1e-12
        assert np.abs(q[:, 2] - 0.5).max() == 0.0
    else:
        assert np.abs(q[:, 3]).max() == 0.0
    # boundary aliases the tail of the point list exactly
    assert np.array_equal(q, cloud.points[cloud.n0 - cloud.m0:])


def test_conormal_values():
    q = np.array([[SQ3 / 2.0, 0.0, 0.5]])
    n = conormal("hemisphere2", q)
    assert np.allclose(n, [[0.5, 0.0, -SQ3 / 2.0]], atol=1e-14)
    q3 = np.array([[3**-0.5, 3**-0.5, 3**-0.5, 0.0]])
    n3 = conormal("hemisphere3", q3)
    assert np.allclose(n3, [[0.0, 0.0, 0.0, -1.0]], atol=1e-15)
    with pytest.raises(ValueError):
        conormal("hemisphere2", np.array([[0.0, 0.0, 1.0]]))


@pytest.mark.parametrize("name,t", [("hemisphere2", 10), ("hemisphere3", 4)])
def test_conormal_field(name, t):
    cloud = sample_case(name, t, 5)
    case = get_case(name)
    n = case.conormal(cloud.boundary)
    assert np.abs(np.linalg.norm(n, axis=1) - 1.0).max() < 1e-12
    # tangent to the manifold: orthogonal to the ambient surface normal q
    assert np.abs((n * cloud.boundary).sum(axis=1)).max() < 1e-10


def test_conormal_smoothness():
    cloud = sample_case("hemisphere2", 20, 2)
    case = get_case("hemisphere2")
    q = cloud.boundary
    n = case.conormal(q)
    diffs = np.linalg.norm(q[:, None, :] - q[None, :, :], axis=2)
    ndiffs = np.linalg.norm(n[:, None, :] - n[None, :, :], axis=2)
    mask = (diffs > 0) & (diffs <= cloud.delta)
    assert np.all(ndiffs[mask] <= 3.0 * diffs[mask])


def test_exact_fields_values():
    u, f = exact_fields("hemisphere2", np.array([[0.0, 0.0, 1.0]]))
    assert u[0] == pytest.approx(1.0 / 6.0, abs=1e-15)
    assert f[0] == pytest.approx(2.0, abs=1e-15)
    q = np.array([[SQ3 / 2.0, 0.0, 0.5]])
    u, _ = exact_fields("hemisphere2", q)
    assert u[0] == pytest.approx(-1.0 / 12.0, abs=1e-15)
    x3 = np.array([[3**-0.5, 3**-0.5, 3**-0.5, 0.0]])
    u3, f3 = exact_fields("hemisphere3", x3)
    assert u3[0] == pytest.approx(3.0**-1.5, rel=1e-14)
    assert f3[0] == pytest.approx(15.0 * 3.0**-1.5, rel=1e-14)
    with pytest.raises(ValueError):
        exact_fields("hemisphere2", np.array([[2.0, 0.0, 0.0]]))


def test_exact_u_weighted_mean_small():
    for t, tol in ((10, 2e-2), (30, 5e-3)):
        cloud = build_cloud("hemisphere2", t, 1)
        u = get_case("hemisphere2").exact_u(cloud.points)
        assert abs(float(u @ cloud.A) / cloud.A.sum()) < tol


def test_flat_patch_cell_weights():
    """Dense planar patch: interior cells carry the analytic area per point.

    A triangular lattice tiles the plane with 6 triangles per interior
    vertex and no cocircular ambiguity, so the cell rule must reproduce
    the per-point area h * (sqrt(3)/2 h) away from the patch edges.
    """
    h = 0.05
    rows = []
    for j in range(22):
        x0 = 0.5 * h if j % 2 else 0.0
        xs = x0 + h * np.arange(22)
        rows.append(np.column_stack(
            [xs, np.full(22, j * h * SQ3 / 2.0), np.zeros(22)]))
    pts = np.concatenate(rows)
    frames = np.tile(np.array([[1.0, 0, 0], [0, 1.0, 0]]), (len(pts), 1, 1))
    w = _simplex_cell_weights(pts, frames, k=12, seed=0)
    cell = h * h * SQ3 / 2.0
    lo, hi = 3 * h, 18 * h
    interior = ((pts[:, 0] > lo) & (pts[:, 0] < hi)
                & (pts[:, 1] > lo) & (pts[:, 1] < hi))
    assert interior.sum() > 100
    assert np.all(np.abs(w[interior] - cell) <= 0.2 * cell)


def test_degenerate_collinear_perturbation():
    local = np.zeros((21, 2))
    local[:, 0] = np.linspace(0.0, 1.0, 21)
    local[0] = [0.5, 0.0]
    w = _cell_weight(local, spacing=0.05, seed=7)
    assert np.isfinite(w) and w >= 0.0


def test_volume_weights_cap_area():
    cloud = build_cloud("hemisphere2", 40, 1)
    assert np.all(cloud.A > 0)
    assert abs(cloud.A.sum() - np.pi) < 0.05 * np.pi
    for t in (10, 20):
        c = build_cloud("hemisphere2", t, 2)
        assert abs(c.A.sum() - np.pi) < 0.10 * np.pi


def test_volume_weights_shell_volume():
    cloud = build_cloud("hemisphere3", 6, 1)
    assert np.all(cloud.A > 0)
    assert abs(cloud.A.sum() - np.pi**2) < 0.10 * np.pi**2


def test_boundary_weights_equispaced_circle():
    m0 = 48
    phi = 2.0 * np.pi * np.arange(m0) / m0
    rho = SQ3 / 2.0
    q = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), np.full(m0, 0.5)])
    L = _segment_weights(q)
    # equal chords; chord vs arc differs by O(1/m0^2)
    arc = 2.0 * np.pi * rho / m0
    assert np.abs(L - arc).max() < 2e-3 * arc
    assert np.abs(L - L[0]).max() < 1e-12


def test_boundary_weights_modes():
    cloud = sample_case("hemisphere2", 8, 1)
    L = boundary_weights(cloud)
    assert np.all(L >= 0)
    assert np.all(boundary_weights(cloud, reduced=True) == 0.0)
    tiny = sample_case("hemisphere2", 8, 1)
    tiny.m0 = 2
    with pytest.raises(ValueError):
        boundary_weights(tiny)


def test_boundary_weights_sphere_area():
    cloud = sample_case("hemisphere3", 10, 1)
    cloud.L = boundary_weights(cloud)
    assert abs(cloud.L.sum() - 4.0 * np.pi) < 0.05 * 4.0 * np.pi


def test_cloud_csv_roundtrip(tmp_path):
    cloud = build_cloud("hemisphere2", 6, 9)
    path = tmp_path / "cloud.csv"
    save_cloud_csv(cloud, path)
    back = load_cloud_csv(path)
    assert back.case_name == cloud.case_name
    assert (back.t, back.seed, back.m0) == (cloud.t, cloud.seed, cloud.m0)
    assert back.delta == cloud.delta
    assert np.array_equal(back.points, cloud.points)
    assert np.array_equal(back.A, cloud.A)
    assert np.array_equal(back.L, cloud.L)
    assert np.array_equal(back.normals, cloud.normals)
