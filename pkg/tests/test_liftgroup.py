"""Universal-cover arithmetic: examples, invariants, and the path oracle."""

import math

import numpy as np
import pytest

import chernlab.liftgroup as lg
from chernlab.errors import DomainError, SubdivisionError

A0 = np.array([[2.0, 0.0], [0.0, 0.5]])
A1 = np.array([[-2.5, 4.5], [-3.0, 5.0]])
A2 = np.array([[-5.0, 9.0], [-1.5, 2.5]])


# -- independent oracle -------------------------------------------------------
# Continuous angle lifting along a sampled path, written from scratch so it
# shares no code with the lift_mul window selection.

def _angle(m):
    return math.atan2(m[0, 1] - m[1, 0], m[0, 0] + m[1, 1])


def _wrap(a):
    while a <= -math.pi:
        a += 2 * math.pi
    while a > math.pi:
        a -= 2 * math.pi
    return a


def path_lift(path, samples=4096):
    """Lifted retract angle at t=1 of a path starting at the identity."""
    prev = _angle(np.asarray(path(0.0)))
    total = prev
    for i in range(1, samples + 1):
        cur = _angle(np.asarray(path(i / samples)))
        total += _wrap(cur - prev)
        prev = cur
    return total


def random_element(rng):
    """Random covered element with principal lift and a random deck shift."""
    while True:
        m = rng.uniform(-2.0, 2.0, size=(2, 2))
        if lg.det2(m) > 0.05:
            break
    x = lg.principal_lift(m)
    return lg.deck_shift(x, int(rng.integers(-2, 3)) * 2)


# -- retract ------------------------------------------------------------------

def test_retract_identity_is_zero():
    assert lg.retract(np.eye(2)) == 0.0


def test_retract_spd_is_zero():
    assert lg.retract(A0) == 0.0


def test_retract_shear():
    assert lg.retract(np.array([[1.0, 3.0], [0.0, 1.0]])) == pytest.approx(
        math.atan2(3.0, 2.0)
    )


def test_retract_seed_matrix():
    # x = a + d = 5/2, y = b - c = 15/2
    assert lg.retract(A1) == pytest.approx(math.atan2(7.5, 2.5))
    assert lg.retract(A1) == pytest.approx(math.atan(3.0))


def test_retract_rejects_nonpositive_determinant():
    with pytest.raises(DomainError):
        lg.retract(np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(DomainError):
        lg.retract(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_retract_never_divides_by_zero():
    rng = np.random.default_rng(7)
    for _ in range(300):
        m = rng.uniform(-3.0, 3.0, size=(2, 2))
        if lg.det2(m) <= 0.0:
            continue
        x = m[0, 0] + m[1, 1]
        y = m[0, 1] - m[1, 0]
        assert x * x + y * y > 0.0
        lg.retract(m)


# -- lift_mul -----------------------------------------------------------------

def test_lift_mul_identity():
    e = lg.COVER_IDENTITY
    out = lg.lift_mul(e, e)
    assert out.lift == 0.0
    assert np.array_equal(out.matrix, np.eye(2))


def test_lift_mul_rotations_add_exactly():
    x = lg.CoveredElement(lg.rotation(math.pi / 2), math.pi / 2)
    y = lg.CoveredElement(lg.rotation(math.pi), math.pi)
    out = lg.lift_mul(x, y)
    assert out.lift == math.pi / 2 + math.pi
    assert np.allclose(out.matrix, lg.rotation(-math.pi / 2), atol=1e-15)


def test_lift_mul_seed_product_against_path_oracle():
    x = lg.principal_lift(A0)
    y = lg.principal_lift(A1)
    out = lg.lift_mul(x, y)
    assert np.allclose(out.matrix, A2, atol=1e-12)
    # oracle: continuous lifting along the pointwise product of canonical paths
    f = lg.word_path([x, y])
    expected = path_lift(f)
    assert out.lift == pytest.approx(expected, abs=1e-6)
    assert math.pi / 2 < out.lift < 3 * math.pi / 2  # the n = +1 branch


def test_lift_mul_defect_below_half_pi():
    rng = np.random.default_rng(11)
    for _ in range(400):
        x, y = random_element(rng), random_element(rng)
        out = lg.lift_mul(x, y)
        assert abs(out.lift - x.lift - y.lift) < math.pi / 2


def test_lift_mul_associative():
    rng = np.random.default_rng(13)
    for _ in range(200):
        x, y, z = (random_element(rng) for _ in range(3))
        left = lg.lift_mul(lg.lift_mul(x, y), z)
        right = lg.lift_mul(x, lg.lift_mul(y, z))
        assert abs(left.lift - right.lift) < 10 * lg.TAU_ANGLE
        assert np.allclose(left.matrix, right.matrix, atol=1e-9)


def test_lift_mul_strong_shears_against_oracle():
    s = 80.0
    x = lg.principal_lift(np.array([[1.0, s], [0.0, 1.0]]))
    y = lg.principal_lift(np.array([[1.0, 0.0], [-s, 1.0]]))
    out = lg.lift_mul(x, y)
    f = lg.word_path([x, y])
    assert out.lift == pytest.approx(path_lift(f, samples=20000), abs=1e-5)


def test_lift_mul_near_boundary_takes_split_route():
    # two huge stretches at almost-orthogonal axes: the defect sits within
    # EPS_GUARD of pi/2, forcing the polar-split fallback
    lam, psi = 3e8, math.pi / 2 - 2e-7
    d1 = np.diag([lam, 1.0 / lam])
    r = lg.rotation(psi)
    d2 = r @ d1 @ r.T
    d2 = (d2 + d2.T) / 2.0
    x, y = lg.principal_lift(d1), lg.principal_lift(d2)
    gap = math.pi / 2 - abs(lg.retract(d1 @ d2))
    assert gap <= lg.EPS_GUARD  # the guard really fires here
    out = lg.lift_mul(x, y)
    f = lg.word_path([x, y])
    assert out.lift == pytest.approx(path_lift(f, samples=60000), abs=1e-6)
    assert np.allclose(out.matrix, d1 @ d2, rtol=1e-9)


# -- lift_inv -----------------------------------------------------------------

def test_lift_inv_identity():
    out = lg.lift_inv(lg.COVER_IDENTITY)
    assert out.lift == 0.0
    assert np.array_equal(out.matrix, np.eye(2))


def test_lift_inv_rotation_with_deck_shift():
    phi = 0.83
    x = lg.deck_shift(lg.CoveredElement(lg.rotation(phi), phi), 4)
    out = lg.lift_inv(x)
    assert out.lift == -(phi + 4 * math.pi)
    assert np.allclose(out.matrix, lg.rotation(-phi), atol=1e-15)


def test_lift_inv_round_trip_lift_exactly_zero():
    x = lg.principal_lift(A1)
    out = lg.lift_mul(x, lg.lift_inv(x))
    assert out.lift == 0.0
    assert np.allclose(out.matrix, np.eye(2), atol=1e-12)


def test_inverse_law_random():
    rng = np.random.default_rng(17)
    for _ in range(200):
        x = random_element(rng)
        out = lg.lift_mul(x, lg.lift_inv(x))
        assert out.lift == 0.0
        assert np.allclose(out.matrix, np.eye(2), atol=1e-9)


# -- lift_commutator ----------------------------------------------------------

def test_commutator_of_equal_elements_is_trivial():
    x = lg.principal_lift(A1)
    out = lg.lift_commutator(x, x)
    assert out.lift == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(out.matrix, np.eye(2), atol=1e-12)


def test_commutator_of_rotations_is_trivial():
    x = lg.CoveredElement(lg.rotation(0.7), 0.7)
    y = lg.CoveredElement(lg.rotation(2.1), 2.1)
    out = lg.lift_commutator(x, y)
    assert out.lift == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(out.matrix, np.eye(2), atol=1e-14)


def _conjugator(m, n):
    """Solve s m s^-1 = n for similar 2x2 matrices, det(s) > 0 (test-local)."""
    wm, vm = np.linalg.eig(m)
    wn, vn = np.linalg.eig(n)
    order_m = np.argsort(wm)[::-1]
    order_n = np.argsort(wn)[::-1]
    vm, vn = vm[:, order_m].real, vn[:, order_n].real
    s = vn @ np.linalg.inv(vm)
    if np.linalg.det(s) < 0:
        vn[:, 0] *= -1.0
        s = vn @ np.linalg.inv(vm)
    return s


def test_commutator_reaching_shifted_class():
    # y conjugates x^-1 to the lift of A1, so [x, y] covers A0 A1
    x = lg.principal_lift(A0)
    s = _conjugator(np.linalg.inv(A0), A1)
    y = lg.principal_lift(s)
    out = lg.lift_commutator(x, y)
    assert np.isclose(np.trace(out.matrix), -2.5, atol=1e-9)
    assert np.isclose(lg.det2(out.matrix), 1.0, atol=1e-9)
    assert math.pi / 2 < out.lift < 3 * math.pi / 2
    # path-winding oracle on the pointwise commutator path
    f = lg.word_path([x, y, lg.lift_inv(x), lg.lift_inv(y)])
    assert out.lift == pytest.approx(path_lift(f, samples=8192), abs=1e-5)


# -- deck_shift ---------------------------------------------------------------

def test_deck_shift_zero_is_identity_map():
    x = lg.principal_lift(A1)
    out = lg.deck_shift(x, 0)
    assert out.lift == x.lift
    assert np.array_equal(out.matrix, x.matrix)


def test_deck_shift_full_turn():
    out = lg.deck_shift(lg.COVER_IDENTITY, 2)
    assert out.lift == 2 * math.pi
    assert np.array_equal(out.matrix, np.eye(2))


def test_deck_shift_half_turn_matrix():
    out = lg.deck_shift(lg.CoveredElement(A0, 0.0), 1)
    assert np.array_equal(out.matrix, -A0)
    assert out.lift == math.pi


def test_deck_shift_is_central():
    rng = np.random.default_rng(19)
    for _ in range(100):
        x, y = random_element(rng), random_element(rng)
        n = int(rng.integers(-3, 4))
        a = lg.deck_shift(lg.lift_mul(x, y), n)
        b = lg.lift_mul(lg.deck_shift(x, n), y)
        c = lg.lift_mul(x, lg.deck_shift(y, n))
        for other in (b, c):
            assert abs(a.lift - other.lift) < 1e-9
            assert np.allclose(a.matrix, other.matrix, atol=1e-9)


# -- lift_mul_rotation --------------------------------------------------------

def test_mul_rotation_by_zero_is_identity_map():
    x = lg.principal_lift(A1)
    out = lg.lift_mul_rotation(x, lg.RotationLift(0.0))
    assert out.lift == x.lift
    assert np.allclose(out.matrix, x.matrix, atol=1e-15)


def test_mul_rotation_half_turn_of_identity():
    out = lg.lift_mul_rotation(lg.COVER_IDENTITY, lg.RotationLift(math.pi))
    assert out.lift == math.pi
    assert np.allclose(out.matrix, lg.rotation(math.pi), atol=1e-15)


def test_mul_rotation_agrees_with_lift_mul():
    x = lg.CoveredElement(A0, 0.0)
    r = lg.RotationLift(math.pi / 2)
    a = lg.lift_mul_rotation(x, r)
    b = lg.lift_mul(x, r.as_element())
    assert a.lift == pytest.approx(b.lift, abs=1e-12)
    assert np.allclose(a.matrix, A0 @ lg.rotation(math.pi / 2), atol=1e-15)


# -- loops and winding --------------------------------------------------------

def test_constant_identity_loop_winds_zero():
    loop = lg.SampledLoop(tuple(np.eye(2) for _ in range(17)))
    assert lg.lift_loop(loop) == 0


def test_full_rotation_loop_winds_once():
    loop = lg.SampledLoop(
        tuple(lg.rotation(2 * math.pi * i / 16) for i in range(17))
    )
    assert lg.lift_loop(loop) == 1


def test_loop_requires_identity_endpoints():
    with pytest.raises(DomainError):
        lg.SampledLoop((np.eye(2), lg.rotation(0.3)))


def test_loop_rejects_coarse_adjacency():
    samples = (np.eye(2), lg.rotation(2.0), lg.rotation(4.0), np.eye(2))
    with pytest.raises(DomainError):
        lg.SampledLoop(samples)


def test_from_path_refines_fast_loop():
    loop = lg.SampledLoop.from_path(
        lambda t: lg.rotation(6 * math.pi * t), initial_samples=4
    )
    assert lg.lift_loop(loop) == 3


def test_from_path_gives_up_on_discontinuity():
    def jump(t):
        return np.eye(2) if t < 0.5 else -np.eye(2)

    with pytest.raises(SubdivisionError):
        lg.SampledLoop.from_path(jump)


def test_word_winding_matches_deck_shift():
    rng = np.random.default_rng(23)
    for _ in range(25):
        x, y = random_element(rng), random_element(rng)
        k = int(rng.integers(-2, 3))
        closer = lg.deck_shift(lg.lift_inv(lg.lift_mul(x, y)), 2 * k)
        word = [x, y, closer]
        total = lg.product_lift(word)
        assert np.allclose(total.matrix, np.eye(2), atol=1e-8)
        loop = lg.SampledLoop.from_path(lg.word_path(word))
        assert lg.lift_loop(loop) == k
        assert total.lift == pytest.approx(2 * math.pi * k, abs=1e-9)


# -- type invariants ----------------------------------------------------------

def test_covered_element_rejects_wrong_lift():
    with pytest.raises(DomainError):
        lg.CoveredElement(A0, 0.5)


def test_covered_element_accepts_deck_shifted_lift():
    lg.CoveredElement(A1, lg.retract(A1) + 2 * math.pi)


def test_covered_element_matrix_is_immutable():
    x = lg.principal_lift(A0)
    with pytest.raises(ValueError):
        x.matrix[0, 0] = 5.0
