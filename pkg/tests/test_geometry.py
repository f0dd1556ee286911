"""Chart geometry: connections, geodesics, transport, Pfaffian, quadrature."""

import math

import numpy as np
import pytest

import chernlab.geometry as ge
from chernlab.errors import DomainError, EscapeError


def wrap_pi(a):
    while a <= -math.pi:
        a += 2 * math.pi
    while a > math.pi:
        a -= 2 * math.pi
    return a


# -- covariant derivative --------------------------------------------------------

def test_flat_directional_derivative():
    conn = ge.flat_connection(2)
    x = ge.coordinate_field(0, 2)
    y = lambda p: np.array([0.0, p[0]])
    out = ge.covariant_derivative(conn, x, y, np.array([0.3, -0.7]))
    assert np.allclose(out, [0.0, 1.0], atol=1e-9)


def test_flat_constant_field_has_zero_derivative():
    conn = ge.flat_connection(3)
    out = ge.covariant_derivative(
        conn, ge.constant_field([1.0, 2.0, 3.0]), ge.constant_field([5.0, 0.0, -1.0]),
        np.zeros(3),
    )
    assert np.allclose(out, 0.0, atol=1e-10)


def test_constant_gamma_term():
    gamma = np.zeros((2, 2, 2))
    gamma[0, 1, 0] = 2.0   # Gamma^0_{10} = 2
    gamma[1, 0, 1] = -3.0  # Gamma^1_{01} = -3
    conn = ge.constant_connection(gamma)
    a = np.array([1.0, 4.0])
    b = np.array([2.0, 5.0])
    out = ge.covariant_derivative(
        conn, ge.constant_field(a), ge.constant_field(b), np.zeros(2)
    )
    expected = np.einsum("kij,j,i->k", gamma, b, a)
    assert np.allclose(out, expected, atol=1e-9)


# -- torsion and curvature ---------------------------------------------------------

def test_flat_connection_is_torsion_free_and_flat():
    conn = ge.flat_connection(2)
    x = lambda p: np.array([p[1], 1.0])
    y = lambda p: np.array([0.5, p[0] * p[1]])
    z = ge.constant_field([1.0, -1.0])
    p = np.array([0.4, 0.9])
    assert np.allclose(ge.torsion(conn, x, y, p), 0.0, atol=ge.FD_TOL)
    assert np.allclose(ge.curvature(conn, x, y, z, p), 0.0, atol=ge.FD_TOL)


def test_torsion_of_asymmetric_constant_connection():
    gamma = np.zeros((2, 2, 2))
    gamma[0, 0, 1] = 1.5
    gamma[0, 1, 0] = -0.5
    gamma[1, 0, 1] = 2.0
    conn = ge.constant_connection(gamma)
    e0, e1 = ge.coordinate_field(0, 2), ge.coordinate_field(1, 2)
    out = ge.torsion(conn, e0, e1, np.zeros(2))
    expected = gamma[:, 0, 1] - gamma[:, 1, 0]
    assert np.allclose(out, expected, atol=1e-8)


def test_sphere_sectional_curvature():
    for radius in (1.0, 2.0):
        g = ge.sphere_metric(radius)
        conn = ge.levi_civita(g, 2)
        p = np.array([1.1, 0.3])
        k = ge.gaussian_curvature(conn, g, p)
        assert k == pytest.approx(1.0 / radius**2, abs=1e-5)


def test_fast_coordinate_curvature_matches_generic_op():
    g = ge.sphere_metric(1.3)
    conn = ge.levi_civita(g, 2)
    rng = np.random.default_rng(3)
    for _ in range(5):
        p = np.array([rng.uniform(0.5, 2.5), rng.uniform(0.0, 6.0)])
        fast = ge.coordinate_curvature_12(conn, p)
        slow = ge.curvature(
            conn,
            ge.coordinate_field(0, 2),
            ge.coordinate_field(1, 2),
            ge.coordinate_field(1, 2),
            p,
        )
        assert np.allclose(fast, slow, atol=1e-9)


def test_tensoriality_in_function_multiples():
    g = ge.sphere_metric(1.0)
    conn = ge.levi_civita(g, 2)
    f = lambda p: math.sin(p[0]) + 2.0 * math.cos(p[1])
    x = lambda p: np.array([0.7, p[1] * 0.1 + 0.4])
    y = lambda p: np.array([p[0] * 0.2, 1.0])
    z = ge.constant_field([0.3, -0.8])
    fx = lambda p: f(p) * x(p)
    rng = np.random.default_rng(7)
    for _ in range(4):
        p = np.array([rng.uniform(0.5, 2.5), rng.uniform(0.0, 3.0)])
        t1 = ge.torsion(conn, fx, y, p)
        t2 = f(p) * ge.torsion(conn, x, y, p)
        assert np.allclose(t1, t2, atol=ge.FD_TOL)
        r1 = ge.curvature(conn, fx, y, z, p)
        r2 = f(p) * ge.curvature(conn, x, y, z, p)
        assert np.allclose(r1, r2, atol=ge.FD_TOL)
        r3 = ge.curvature(conn, x, y, lambda q: f(q) * z(q), p)
        r4 = f(p) * ge.curvature(conn, x, y, z, p)
        assert np.allclose(r3, r4, atol=ge.FD_TOL)


# -- Levi-Civita ---------------------------------------------------------------------

def test_levi_civita_euclidean_is_flat():
    conn = ge.levi_civita(lambda p: np.eye(3), 3)
    assert np.allclose(conn.gamma(np.array([0.2, -0.5, 1.0])), 0.0, atol=1e-9)
    assert conn.symmetric


def test_levi_civita_sphere_symbols():
    conn = ge.levi_civita(ge.sphere_metric(1.0), 2)
    for theta in (0.6, 1.2, 2.2):
        gam = conn.gamma(np.array([theta, 0.9]))
        assert gam[0, 1, 1] == pytest.approx(-math.sin(theta) * math.cos(theta), abs=1e-7)
        assert gam[1, 0, 1] == pytest.approx(math.cos(theta) / math.sin(theta), abs=1e-7)
        assert gam[1, 1, 0] == pytest.approx(math.cos(theta) / math.sin(theta), abs=1e-7)
        assert np.allclose(gam, gam.transpose(0, 2, 1), atol=1e-7)


def test_levi_civita_conformal_metric():
    # g = exp(2 f) * I with f = a x + b y^2: symbols are combinations of df
    a, b = 0.3, 0.2
    f_grad = lambda p: np.array([a, 2.0 * b * p[1]])
    metric = lambda p: math.exp(2 * (a * p[0] + b * p[1] ** 2)) * np.eye(2)
    conn = ge.levi_civita(metric, 2)
    p = np.array([0.5, -0.8])
    df = f_grad(p)
    gam = conn.gamma(p)
    assert gam[0, 0, 0] == pytest.approx(df[0], abs=1e-6)
    assert gam[0, 0, 1] == pytest.approx(df[1], abs=1e-6)
    assert gam[0, 1, 1] == pytest.approx(-df[0], abs=1e-6)
    assert gam[1, 1, 1] == pytest.approx(df[1], abs=1e-6)
    assert gam[1, 0, 1] == pytest.approx(df[0], abs=1e-6)
    assert gam[1, 0, 0] == pytest.approx(-df[1], abs=1e-6)


def test_levi_civita_metric_compatibility():
    g = ge.sphere_metric(1.0)
    conn = ge.levi_civita(g, 2)
    x = lambda p: np.array([0.4, 0.6])
    y = lambda p: np.array([p[1] * 0.1, 1.0])
    z = lambda p: np.array([1.0, p[0] * 0.2])
    rng = np.random.default_rng(11)
    h = ge.H_DEFAULT
    for _ in range(4):
        p = np.array([rng.uniform(0.6, 2.4), rng.uniform(0.0, 3.0)])
        e = np.zeros(2)
        lhs = 0.0
        for i in range(2):
            e[:] = 0.0
            e[i] = h
            gp, gm = g(p + e), g(p - e)
            val_p = float(y(p + e) @ gp @ z(p + e))
            val_m = float(y(p - e) @ gm @ z(p - e))
            lhs += x(p)[i] * (val_p - val_m) / (2 * h)
        gp = g(p)
        rhs = float(
            ge.covariant_derivative(conn, x, y, p) @ gp @ z(p)
            + y(p) @ gp @ ge.covariant_derivative(conn, x, z, p)
        )
        assert lhs == pytest.approx(rhs, abs=ge.FD_TOL)


def test_levi_civita_singular_metric_raises():
    conn = ge.levi_civita(lambda p: np.zeros((2, 2)), 2)
    with pytest.raises(DomainError):
        conn.gamma(np.zeros(2))


# -- geodesics --------------------------------------------------------------------

def test_flat_geodesic_is_straight_line():
    conn = ge.flat_connection(3)
    traj = ge.geodesic(conn, [1.0, 2.0, 3.0], [0.5, -1.0, 0.0], 4.0, steps=64)
    assert not traj.escape_flag
    assert np.allclose(traj.end_point, [3.0, -2.0, 3.0], atol=1e-12)
    assert np.allclose(traj.end_velocity, [0.5, -1.0, 0.0], atol=1e-14)


def test_hopf_geodesic_aimed_at_origin_escapes():
    geo = ge.parse_geometry("hopf:3")
    p = np.array([0.6, -0.2, 0.3])
    traj = ge.geodesic(geo.connection, p, -p, 1.01)
    assert traj.escape_flag
    assert traj.end_time < 1.01


def test_hopf_geodesic_missing_origin_survives():
    geo = ge.parse_geometry("hopf:2")
    traj = ge.geodesic(geo.connection, [1.0, 0.5], [0.0, 1.0], 2.0, steps=500)
    assert not traj.escape_flag


def test_flat_torus_geodesic_runs_forever():
    geo = ge.parse_geometry("flat-torus:2")
    traj = ge.geodesic(geo.connection, [0.1, 0.2], [0.3, 0.7], 50.0, steps=5000)
    assert not traj.escape_flag
    assert traj.end_time == pytest.approx(50.0)
    for q in traj.points[:: len(traj.points) // 10]:
        assert np.all(np.asarray(q) >= 0.0) and np.all(np.asarray(q) < 1.0)


def test_sphere_geodesic_fourth_order_convergence():
    geo = ge.parse_geometry("sphere:1")
    p, v, t = [1.2, 0.4], [0.31, 0.52], 1.0
    ref = ge.geodesic(geo.connection, p, v, t, steps=4096).end_point
    e1 = np.linalg.norm(ge.geodesic(geo.connection, p, v, t, steps=64).end_point - ref)
    e2 = np.linalg.norm(ge.geodesic(geo.connection, p, v, t, steps=128).end_point - ref)
    assert 8.0 < e1 / e2 < 32.0


def test_geodesic_rejects_bad_steps():
    conn = ge.flat_connection(2)
    with pytest.raises(DomainError):
        ge.geodesic(conn, [0.0, 0.0], [1.0, 0.0], 1.0, steps=0)


def test_trajectory_validation():
    with pytest.raises(DomainError):
        ge.Trajectory((0.0, 0.0), ((0.0,), (1.0,)), ((1.0,), (1.0,)), False)


# -- exponential map -----------------------------------------------------------------

def test_exponential_of_zero_is_base_point():
    conn = ge.flat_connection(2)
    assert np.allclose(ge.exponential_map(conn, [0.4, 0.5], [0, 0], steps=16),
                       [0.4, 0.5], atol=1e-14)


def test_exponential_flat_translation():
    conn = ge.flat_connection(2)
    assert np.allclose(ge.exponential_map(conn, [1.0, 1.0], [0.25, -0.5], steps=32),
                       [1.25, 0.5], atol=1e-12)


def test_exponential_incomplete_direction_raises():
    geo = ge.parse_geometry("hopf:2")
    with pytest.raises(EscapeError):
        ge.exponential_map(geo.connection, [0.7, 0.0], [-0.7, 0.0])


# -- parallel transport ----------------------------------------------------------------

def latitude_path(theta0, samples):
    return [
        np.array([theta0, 2.0 * math.pi * k / samples])
        for k in range(samples + 1)
    ]


def analytic_sphere_connection():
    """Closed-form sphere Christoffels; equality with the levi_civita
    output is pinned by test_levi_civita_sphere_symbols."""

    def gamma(p):
        theta = p[0]
        out = np.zeros((2, 2, 2))
        out[0, 1, 1] = -math.sin(theta) * math.cos(theta)
        out[1, 0, 1] = out[1, 1, 0] = math.cos(theta) / math.sin(theta)
        return out

    return ge.ChartConnection(2, gamma, ge.free_chart(2), symmetric=True)


def test_flat_transport_is_identity():
    conn = ge.flat_connection(2)
    path = [np.array([t, t * t]) for t in np.linspace(0.0, 1.0, 40)]
    out = ge.parallel_transport(conn, path, [0.3, -0.9])
    assert np.allclose(out, [0.3, -0.9], atol=1e-12)


def test_transport_is_linear():
    geo = ge.parse_geometry("sphere:1")
    path = latitude_path(1.0, 200)
    v = np.array([0.2, 0.5])
    w = np.array([-0.4, 0.1])
    a, b = 1.7, -0.6
    combo = ge.parallel_transport(geo.connection, path, a * v + b * w)
    split = a * ge.parallel_transport(geo.connection, path, v) + (
        b * ge.parallel_transport(geo.connection, path, w)
    )
    assert np.allclose(combo, split, atol=1e-9)


def test_transport_reverse_composes_to_identity():
    geo = ge.parse_geometry("sphere:1")
    path = latitude_path(0.8, 300)
    v = np.array([0.4, 0.3])
    there = ge.parallel_transport(geo.connection, path, v)
    back = ge.parallel_transport(geo.connection, path[::-1], there)
    assert np.allclose(back, v, atol=1e-5)


def holonomy_angle(conn, samples):
    theta0 = 1.0
    path = latitude_path(theta0, samples)
    g = ge.sphere_metric(1.0)(np.array([theta0, 0.0]))
    sq = np.diag([math.sqrt(g[0, 0]), math.sqrt(g[1, 1])])
    v = np.array([1.0, 0.0])
    out = ge.parallel_transport(conn, path, v)
    a = sq @ v
    b = sq @ out
    return math.atan2(a[0] * b[1] - a[1] * b[0], float(a @ b))


def test_latitude_holonomy_is_a_rotation_with_stable_angle():
    conn = analytic_sphere_connection()
    coarse = holonomy_angle(conn, 16000)
    fine = holonomy_angle(conn, 32000)
    finer = holonomy_angle(conn, 64000)
    richardson = fine + (finer - fine) * 4.0 / 3.0
    assert coarse == pytest.approx(richardson, abs=1e-6)
    # the rotation angle is the wrapped enclosed-holonomy value
    assert abs(coarse) == pytest.approx(
        abs(wrap_pi(2.0 * math.pi * math.cos(1.0))), abs=1e-4
    )
    # transport preserves the metric length
    g = ge.sphere_metric(1.0)(np.array([1.0, 0.0]))
    v = np.array([1.0, 0.0])
    out = ge.parallel_transport(conn, latitude_path(1.0, 16000), v)
    assert float(out @ g @ out) == pytest.approx(float(v @ g @ v), abs=1e-6)


# -- Pfaffian ----------------------------------------------------------------------------

def test_pfaffian_zero_matrix():
    assert ge.pfaffian(np.zeros((4, 4))) == 0.0


def test_pfaffian_two_by_two():
    assert ge.pfaffian(np.array([[0.0, 3.0], [-3.0, 0.0]])) == pytest.approx(3.0)


def test_pfaffian_block_diagonal():
    a, b = 1.7, -2.4
    m = np.zeros((4, 4))
    m[0, 1], m[1, 0] = a, -a
    m[2, 3], m[3, 2] = b, -b
    assert ge.pfaffian(m) == pytest.approx(a * b)


def test_pfaffian_properties_random():
    rng = np.random.default_rng(13)
    for n2 in (2, 4, 6):
        for _ in range(10):
            raw = rng.uniform(-1.0, 1.0, size=(n2, n2))
            a = raw - raw.T
            b = rng.uniform(-1.0, 1.0, size=(n2, n2))
            pf = ge.pfaffian(a)
            assert pf * pf == pytest.approx(np.linalg.det(a), rel=1e-8, abs=1e-10)
            bab = b @ a @ b.T
            bab = (bab - bab.T) / 2.0
            assert ge.pfaffian(bab) == pytest.approx(
                np.linalg.det(b) * pf, rel=1e-8, abs=1e-10
            )


def test_pfaffian_rejects_bad_input():
    with pytest.raises(DomainError):
        ge.pfaffian(np.zeros((3, 3)))
    with pytest.raises(DomainError):
        ge.pfaffian(np.ones((2, 2)))
    with pytest.raises(DomainError):
        ge.pfaffian(np.zeros((10, 10)))


# -- Gauss-Bonnet -----------------------------------------------------------------------

def test_gauss_bonnet_unit_sphere():
    geo = ge.parse_geometry("sphere:1")
    assert ge.gauss_bonnet(geo.patches, 32) == pytest.approx(2.0, abs=1e-3)


def test_gauss_bonnet_flat_torus_is_exactly_zero():
    geo = ge.parse_geometry("flat-torus:2")
    assert ge.gauss_bonnet(geo.patches, 16) == 0.0


def test_gauss_bonnet_radius_two_sphere():
    geo = ge.parse_geometry("sphere:2")
    assert ge.gauss_bonnet(geo.patches, 32) == pytest.approx(2.0, abs=1e-3)


def test_gauss_bonnet_rejects_small_mesh():
    geo = ge.parse_geometry("sphere:1")
    with pytest.raises(DomainError):
        ge.gauss_bonnet(geo.patches, 4)


# -- Nijenhuis and para-hypercomplex -------------------------------------------------------

def test_nijenhuis_of_identity_vanishes():
    a_field = lambda p: np.eye(2)
    x = lambda p: np.array([p[1], 0.4])
    y = lambda p: np.array([0.2, p[0] * p[1]])
    out = ge.nijenhuis(a_field, x, y, np.array([0.3, 0.8]))
    assert np.allclose(out, 0.0, atol=ge.FD_TOL)


def test_nijenhuis_of_standard_complex_structure_vanishes():
    m = 2
    i_mat, _ = ge.standard_para_pair(m)
    a_field = lambda p: i_mat
    p = np.array([0.1, -0.4, 0.7, 0.2])
    for i in range(2 * m):
        for j in range(i + 1, 2 * m):
            out = ge.nijenhuis(
                a_field,
                ge.coordinate_field(i, 2 * m),
                ge.coordinate_field(j, 2 * m),
                p,
            )
            assert np.allclose(out, 0.0, atol=1e-12)


def test_nijenhuis_two_resolution_agreement():
    def a_field(p):
        c, s = math.cos(p[0]), math.sin(p[0])
        return np.array([[c, -s], [s, c]])

    x = lambda p: np.array([1.0, p[1]])
    y = lambda p: np.array([p[0], 1.0])
    p = np.array([0.37, 0.81])
    h = 1e-3
    coarse = ge.nijenhuis(a_field, x, y, p, h=h)
    fine = ge.nijenhuis(a_field, x, y, p, h=h / 2)
    assert np.max(np.abs(coarse - fine)) < 10.0 * h * h


def test_para_structure_check_small():
    report = ge.para_structure_check(1)
    assert report["passed"]


def test_para_structure_check_z_is_i():
    i_mat, j_mat = ge.standard_para_pair(3)
    jz = i_mat @ j_mat  # z = i
    assert np.allclose(jz @ jz, np.eye(6), atol=1e-12)


def test_para_structure_check_range():
    for m in (1, 2, 3, 4):
        report = ge.para_structure_check(m, z_samples=16)
        assert report["passed"], report


def test_para_structure_check_rejects_bad_m():
    with pytest.raises(DomainError):
        ge.para_structure_check(0)


# -- named geometries ------------------------------------------------------------------------

def test_parse_geometry_keys():
    assert ge.parse_geometry("euclidean:3").chart.dim == 3
    assert ge.parse_geometry("hopf:2").chart.hole_center == (0.0, 0.0)
    assert ge.parse_geometry("flat-torus:2").chart.periods == (1.0, 1.0)
    assert ge.parse_geometry("sphere:1.5").patches


def test_parse_geometry_rejects_unknown():
    with pytest.raises(DomainError):
        ge.parse_geometry("mobius:2")
    with pytest.raises(DomainError):
        ge.parse_geometry("sphere")
    with pytest.raises(DomainError):
        ge.parse_geometry("sphere:-1")
    with pytest.raises(DomainError):
        ge.parse_geometry("euclidean:zero")
