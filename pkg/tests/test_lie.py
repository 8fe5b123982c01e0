import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasefold import lie
from phasefold.errors import DegenerateAngleError
from phasefold.lie import (
    PhaseElement,
    compose,
    det_jac_left,
    exp_group,
    exp_so3,
    hat3,
    hat6,
    inverse,
    jac_left_so3,
    jac_right_inv_partial,
    jac_right_inv_so3,
    jac_right_so3,
    little_ad,
    log_group,
    log_so3,
    structure_constants,
    vee3,
    vee6,
)


def random_unit(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def random_rotation(rng, max_angle=np.pi - 0.2):
    return exp_so3(random_unit(rng) * rng.uniform(0.0, max_angle))


def random_element(rng, max_angle=np.pi - 0.2, mom_scale=2.0):
    return PhaseElement(random_rotation(rng, max_angle), mom_scale * rng.standard_normal(3))


def matrix_power_series(m, terms=40):
    out = np.eye(m.shape[0])
    acc = np.eye(m.shape[0])
    for n in range(1, terms):
        acc = acc @ m / n
        out = out + acc
    return out


vec3 = st.lists(st.floats(-2.0, 2.0), min_size=3, max_size=3).map(np.array)
vec6 = st.lists(st.floats(-1.5, 1.5), min_size=6, max_size=6).map(np.array)


# ---------------------------------------------------------------------------
# hat3 / vee3
# ---------------------------------------------------------------------------


def test_hat3_zero():
    assert np.array_equal(hat3(np.zeros(3)), np.zeros((3, 3)))


def test_hat3_matches_cross_product(rng):
    for _ in range(100):
        v = rng.standard_normal(3)
        w = rng.standard_normal(3)
        assert np.allclose(hat3(v) @ w, np.cross(v, w), atol=1e-15)


def test_vee3_inverts_hat3(rng):
    v = rng.standard_normal(3)
    assert np.array_equal(vee3(hat3(v)), v)


def test_hat3_broadcasts(rng):
    vs = rng.standard_normal((5, 3))
    stacked = hat3(vs)
    for i in range(5):
        assert np.array_equal(stacked[i], hat3(vs[i]))


# ---------------------------------------------------------------------------
# exp_so3 / log_so3
# ---------------------------------------------------------------------------


def test_exp_so3_identity():
    assert np.allclose(exp_so3(np.zeros(3)), np.eye(3), atol=1e-16)


def test_exp_so3_matches_power_series(rng):
    for _ in range(1000):
        a = random_unit(rng) * rng.uniform(0.0, np.pi - 1e-3)
        assert np.allclose(exp_so3(a), matrix_power_series(hat3(a)), atol=1e-12)


def test_exp_so3_small_angles_match_series(rng):
    for scale in (1e-10, 1e-8, 1e-7, 1e-6, 1e-5):
        a = random_unit(rng) * scale
        assert np.allclose(exp_so3(a), matrix_power_series(hat3(a)), atol=1e-15)


def test_log_so3_identity():
    assert np.array_equal(log_so3(np.eye(3)), np.zeros(3))


def test_exp_log_round_trip(rng):
    for _ in range(200):
        r = random_rotation(rng)
        assert np.allclose(exp_so3(log_so3(r)), r, atol=1e-9)


def test_log_exp_round_trip_inside_injectivity(rng):
    for _ in range(200):
        a = random_unit(rng) * rng.uniform(0.0, np.pi - 0.1)
        assert np.allclose(log_so3(exp_so3(a)), a, atol=1e-9)


def test_log_so3_near_cut_locus_round_trip(rng):
    for _ in range(20):
        a = random_unit(rng) * (np.pi - 1e-3)
        assert np.allclose(log_so3(exp_so3(a)), a, atol=1e-6)


def test_log_so3_degenerate_angle_raises(rng):
    a = random_unit(rng) * (np.pi - 1e-8)
    with pytest.raises(DegenerateAngleError) as info:
        log_so3(exp_so3(a))
    assert info.value.angle == pytest.approx(np.pi, abs=1e-6)
    # Axis from the symmetric part is recoverable up to sign per component.
    assert np.allclose(np.abs(info.value.axis), np.abs(a) / np.linalg.norm(a), atol=1e-2)


def test_log_so3_wrap_mode_recovers_cut_locus(rng):
    for _ in range(20):
        a = random_unit(rng) * (np.pi - 1e-8)
        r = exp_so3(a)
        out = log_so3(r, wrap_degenerate=True)
        # Sign is ambiguous at the cut locus; both logs describe r.
        assert min(
            np.linalg.norm(out - a), np.linalg.norm(out + a)
        ) < 1e-4
        assert np.linalg.norm(exp_so3(out) - r) < 1e-6


def test_log_so3_batch(rng):
    rs = np.stack([random_rotation(rng) for _ in range(7)])
    logs = log_so3(rs)
    for i in range(7):
        assert np.allclose(logs[i], log_so3(rs[i]), atol=1e-14)


# ---------------------------------------------------------------------------
# Jacobians
# ---------------------------------------------------------------------------


def test_jac_right_at_origin():
    assert np.allclose(jac_right_so3(np.zeros(3)), np.eye(3), atol=1e-16)


def test_jac_right_defining_relation_finite_difference(rng):
    # For g(t) = exp(x(t)): J_r(x) dx/dt == vee(g^-1 dg/dt).
    h = 1e-6
    for _ in range(100):
        x0 = random_unit(rng) * rng.uniform(0.0, 2.5)
        v = rng.standard_normal(3)
        gp = exp_so3(x0 + h * v)
        gm = exp_so3(x0 - h * v)
        gdot = (gp - gm) / (2.0 * h)
        body_vel = vee3(exp_so3(x0).T @ gdot)
        assert np.allclose(jac_right_so3(x0) @ v, body_vel, atol=1e-6)


def test_jac_right_inverse_pair(rng):
    for _ in range(100):
        a = random_unit(rng) * rng.uniform(0.0, 3.0)
        assert np.allclose(jac_right_so3(a) @ jac_right_inv_so3(a), np.eye(3), atol=1e-12)


def test_jac_left_is_transposed_right(rng):
    a = rng.standard_normal(3)
    assert np.allclose(jac_left_so3(a), jac_right_so3(a).T, atol=1e-15)


def _fd_jac_right_inv_partial(a, axis, h=1e-6):
    e = np.zeros(3)
    e[axis] = h
    return (jac_right_inv_so3(a + e) - jac_right_inv_so3(a - e)) / (2.0 * h)


def test_jac_right_inv_partial_at_origin_matches_fd():
    for axis in range(3):
        analytic = jac_right_inv_partial(np.zeros(3), axis)
        fd = _fd_jac_right_inv_partial(np.zeros(3), axis)
        assert np.allclose(analytic, fd, atol=1e-6)


def test_jac_right_inv_partial_matches_fd(rng):
    for _ in range(50):
        a = random_unit(rng) * rng.uniform(0.05, 2.5)
        for axis in range(3):
            analytic = jac_right_inv_partial(a, axis)
            fd = _fd_jac_right_inv_partial(a, axis)
            assert np.allclose(analytic, fd, atol=1e-6)


def test_jac_right_inv_partial_schwarz_symmetry(rng):
    # Mixed second derivatives agree when the order of coordinates flips.
    h = 1e-5
    for _ in range(10):
        a = random_unit(rng) * rng.uniform(0.1, 2.0)
        for j in range(3):
            for k in range(j + 1, 3):
                ej = np.zeros(3)
                ej[j] = h
                ek = np.zeros(3)
                ek[k] = h
                djk = (jac_right_inv_partial(a + ej, k) - jac_right_inv_partial(a - ej, k)) / (2 * h)
                dkj = (jac_right_inv_partial(a + ek, j) - jac_right_inv_partial(a - ek, j)) / (2 * h)
                assert np.allclose(djk, dkj, atol=1e-4)


def test_jac_right_inv_partial_rejects_bad_axis():
    for axis in (-1, 3, 7):
        with pytest.raises(ValueError):
            jac_right_inv_partial(np.zeros(3), axis)


# ---------------------------------------------------------------------------
# compose / inverse
# ---------------------------------------------------------------------------


def test_compose_inverse_gives_identity(rng):
    h = random_element(rng)
    out = compose(h, inverse(h))
    assert np.allclose(out.rotation, np.eye(3), atol=1e-13)
    assert np.allclose(out.momentum, np.zeros(3), atol=1e-13)


def test_compose_matches_matrix_product(rng):
    for _ in range(1000):
        h1 = random_element(rng)
        h2 = random_element(rng)
        expected = h1.as_matrix() @ h2.as_matrix()
        assert np.allclose(compose(h1, h2).as_matrix(), expected, atol=1e-13)


def test_inverse_matches_matrix_inverse(rng):
    h = random_element(rng)
    assert np.allclose(inverse(h).as_matrix(), np.linalg.inv(h.as_matrix()), atol=1e-12)


def test_compose_identity_left(rng):
    h = random_element(rng)
    out = compose(PhaseElement.identity(), h)
    assert np.allclose(out.rotation, h.rotation, atol=1e-15)
    assert np.allclose(out.momentum, h.momentum, atol=1e-15)


def test_group_axioms_against_matrix_oracle(rng):
    for _ in range(50):
        h1, h2, h3 = (random_element(rng) for _ in range(3))
        left = compose(compose(h1, h2), h3).as_matrix()
        right = compose(h1, compose(h2, h3)).as_matrix()
        assert np.allclose(left, right, atol=1e-12)
        assert np.allclose(left, h1.as_matrix() @ h2.as_matrix() @ h3.as_matrix(), atol=1e-12)


def test_phase_element_rejects_non_rotation():
    with pytest.raises(ValueError):
        PhaseElement(np.eye(3) * 1.01, np.zeros(3))


# ---------------------------------------------------------------------------
# hat6 / vee6
# ---------------------------------------------------------------------------


def test_hat6_zero():
    assert np.array_equal(hat6(np.zeros(6)), np.zeros((4, 4)))


def test_vee6_inverts_hat6(rng):
    x = rng.standard_normal(6)
    assert np.array_equal(vee6(hat6(x)), x)


def test_vee6_rejects_non_skew_block():
    m = np.zeros((4, 4))
    m[0, 1] = 1.0  # no compensating -1 below the diagonal
    with pytest.raises(ValueError):
        vee6(m)


def test_left_trivialized_velocity_identity(rng):
    # Along a smooth trajectory (R(t), l(t)) the 6-vector of  dh/dt h^-1
    # must equal (omega; dl/dt + omega x l).
    h = 1e-6

    def path(t):
        a = np.array([0.3 * t, 0.2 * np.sin(t), 0.1 * t * t])
        l = np.array([1.0 + t, 0.5 * t * t, -0.3 * t])
        return PhaseElement(exp_so3(a), l)

    for t in np.linspace(0.1, 2.0, 25):
        hp, hm = path(t + h), path(t - h)
        hdot = (hp.as_matrix() - hm.as_matrix()) / (2.0 * h)
        measured = vee6(hdot @ np.linalg.inv(path(t).as_matrix()))

        r = path(t).rotation
        rdot = (hp.rotation - hm.rotation) / (2.0 * h)
        omega = vee3(r.T @ rdot)
        ldot = (hp.momentum - hm.momentum) / (2.0 * h)
        expected = np.concatenate([omega, ldot + np.cross(omega, path(t).momentum)])
        assert np.allclose(measured, expected, atol=1e-5)


# ---------------------------------------------------------------------------
# exp_group / log_group
# ---------------------------------------------------------------------------


def test_exp_group_zero_is_identity():
    h = exp_group(np.zeros(6))
    assert np.allclose(h.rotation, np.eye(3), atol=1e-16)
    assert np.allclose(h.momentum, np.zeros(3), atol=1e-16)


def test_exp_group_matches_power_series(rng):
    for _ in range(1000):
        x = np.concatenate([random_unit(rng) * rng.uniform(0.0, np.pi - 0.05),
                            rng.uniform(-2.5, 2.5, 3)])
        expected = matrix_power_series(hat6(x))
        assert np.allclose(exp_group(x).as_matrix(), expected, atol=1e-11)


def test_log_group_round_trip(rng):
    for _ in range(500):
        x = np.concatenate([random_unit(rng) * rng.uniform(0.0, np.pi - 0.1),
                            2.0 * rng.standard_normal(3)])
        assert np.allclose(log_group(exp_group(x)), x, atol=1e-9)


def test_log_group_degenerate_angle(rng):
    x = np.concatenate([random_unit(rng) * (np.pi - 1e-9), np.ones(3)])
    with pytest.raises(DegenerateAngleError):
        log_group(exp_group(x))


def test_log_group_batched(rng):
    xs = rng.uniform(-1.0, 1.0, size=(9, 6))
    h = exp_group(xs)
    assert np.allclose(log_group(h), xs, atol=1e-12)


# ---------------------------------------------------------------------------
# little_ad / structure constants
# ---------------------------------------------------------------------------


def test_little_ad_matches_commutator(rng):
    for _ in range(1000):
        x = rng.standard_normal(6)
        y = rng.standard_normal(6)
        bracket = hat6(x) @ hat6(y) - hat6(y) @ hat6(x)
        assert np.allclose(little_ad(x) @ y, vee6(bracket), atol=1e-13)


def test_little_ad_zero():
    assert np.array_equal(little_ad(np.zeros(6)), np.zeros((6, 6)))


def test_little_ad_rotational_basis_vector_is_block_diagonal():
    e1 = np.zeros(6)
    e1[0] = 1.0
    expected = np.zeros((6, 6))
    expected[:3, :3] = -hat3([1.0, 0.0, 0.0])
    expected[3:, 3:] = -hat3([1.0, 0.0, 0.0])
    assert np.array_equal(little_ad(e1), expected)


def test_little_ad_linear_in_argument(rng):
    x, y = rng.standard_normal(6), rng.standard_normal(6)
    assert np.allclose(little_ad(2.0 * x + y), 2.0 * little_ad(x) + little_ad(y), atol=1e-14)


def test_structure_constants_antisymmetry():
    c = structure_constants()
    assert np.array_equal(c, -c.transpose(0, 2, 1))


def test_structure_constants_jacobi_identity():
    c = structure_constants()
    jac = (
        np.einsum("mij,pmk->ijkp", c, c)
        + np.einsum("mjk,pmi->ijkp", c, c)
        + np.einsum("mki,pmj->ijkp", c, c)
    )
    assert np.array_equal(jac, np.zeros_like(jac))


def test_structure_constants_match_commutators():
    c = structure_constants()
    eye = np.eye(6)
    for i in range(6):
        for j in range(6):
            bracket = hat6(eye[i]) @ hat6(eye[j]) - hat6(eye[j]) @ hat6(eye[i])
            assert np.array_equal(c[:, i, j], vee6(bracket))


# ---------------------------------------------------------------------------
# Haar measure density
# ---------------------------------------------------------------------------


def _fd_group_jacobians(x, h=1e-6):
    """Left/right 6x6 Jacobians of the coordinate map by central differences."""
    g = exp_group(x).as_matrix()
    g_inv = np.linalg.inv(g)
    jl = np.zeros((6, 6))
    jr = np.zeros((6, 6))
    for i in range(6):
        e = np.zeros(6)
        e[i] = h
        dg = (exp_group(x + e).as_matrix() - exp_group(x - e).as_matrix()) / (2.0 * h)
        jl[:, i] = vee6(dg @ g_inv)
        jr[:, i] = vee6(g_inv @ dg)
    return jl, jr


def test_det_jac_left_at_origin():
    assert det_jac_left(np.zeros(6)) == pytest.approx(1.0, abs=1e-15)


def test_unimodularity_via_finite_differences(rng):
    for _ in range(1000):
        x = np.concatenate([random_unit(rng) * rng.uniform(0.0, 2.8),
                            rng.standard_normal(3)])
        jl, jr = _fd_group_jacobians(x)
        dl, dr = abs(np.linalg.det(jl)), abs(np.linalg.det(jr))
        assert dl == pytest.approx(dr, abs=1e-9)


def test_det_jac_left_matches_finite_difference(rng):
    for _ in range(50):
        x = np.concatenate([random_unit(rng) * rng.uniform(0.0, 2.8),
                            rng.standard_normal(3)])
        jl, _ = _fd_group_jacobians(x)
        assert det_jac_left(x) == pytest.approx(abs(np.linalg.det(jl)), abs=1e-8)


def test_invariant_integration_under_left_shift():
    # Integral of an intrinsic test function against the Haar density, with
    # and without a left shift, by importance-sampled quasi Monte Carlo on a
    # shared scrambled Sobol set.  A wrong density (e.g. flat) moves the
    # relative difference to the 5e-3 level on this configuration.
    from scipy.special import ndtri
    from scipy.stats import qmc

    shift = exp_group(np.array([0.1, -0.08, 0.12, 0.08, -0.1, 0.09]))

    def f(h: PhaseElement):
        trace = np.trace(h.rotation, axis1=-2, axis2=-1)
        # 3 - tr R = 2(1 - cos angle): decays fast away from the identity.
        rot_part = np.exp(-6.0 * (3.0 - trace))
        mom_part = np.exp(-np.sum(h.momentum**2, axis=-1) / (2.0 * 0.45**2))
        return rot_part * mom_part

    sig_a, sig_b = 0.4, 0.8
    sampler = qmc.Sobol(d=6, scramble=True, seed=7)
    pts = np.clip(sampler.random_base2(m=17), 1e-12, 1.0 - 1e-12)
    z = ndtri(pts)
    xs = np.concatenate([sig_a * z[:, :3], sig_b * z[:, 3:]], axis=1)
    inv_proposal = np.exp(
        0.5 * (np.sum((xs[:, :3] / sig_a) ** 2, 1) + np.sum((xs[:, 3:] / sig_b) ** 2, 1))
    )

    weights = det_jac_left(xs) * inv_proposal
    elems = exp_group(xs)
    i_base = np.mean(f(elems) * weights)
    i_shift = np.mean(f(compose(shift, elems)) * weights)
    assert abs(i_shift - i_base) / i_base < 1e-3


# ---------------------------------------------------------------------------
# Property tests
# ---------------------------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(vec6)
def test_property_round_trip(x):
    if np.linalg.norm(x[:3]) >= np.pi - 0.1:
        return
    assert np.allclose(log_group(exp_group(x)), x, atol=1e-9)


@settings(max_examples=150, deadline=None)
@given(vec6, vec6)
def test_property_ad_homomorphism(x, y):
    bracket = hat6(x) @ hat6(y) - hat6(y) @ hat6(x)
    assert np.allclose(little_ad(x) @ y, vee6(bracket), atol=1e-13)


@settings(max_examples=100, deadline=None)
@given(vec3, vec3, vec3, vec3)
def test_property_compose_matches_matrices(a1, l1, a2, l2):
    h1 = PhaseElement(exp_so3(a1), l1)
    h2 = PhaseElement(exp_so3(a2), l2)
    assert np.allclose(
        compose(h1, h2).as_matrix(), h1.as_matrix() @ h2.as_matrix(), atol=1e-12
    )
