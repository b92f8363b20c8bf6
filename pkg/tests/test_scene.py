"""Scenario validation, steering vectors, geometry helpers, and the two relay
models (exact-phase geometric vs rank-one far-field)."""

import math
from dataclasses import replace

import numpy as np
import pytest

from bdris.errors import ArgumentError, DegenerateSceneError
from bdris.fisher import crb_theta, objective_g
from bdris.linalg import as_rng, haar_random_unitary
from bdris.scene import (
    angle_at_bs,
    angle_at_ris,
    bs_element_positions,
    build_channel,
    channel_norms,
    geometry_to_scene,
    pathloss_gain,
    relay_matrix,
    ris_element_positions,
    sample_scene,
    steering_derivative,
    steering_vector,
)
from helpers import unit_scene


class TestSteering:
    def test_first_entry_is_one(self):
        a = steering_vector(0.7, 6, 0.5)
        assert a[0] == 1.0 + 0.0j

    def test_unit_modulus(self):
        a = steering_vector(-0.3, 8, 0.5)
        assert np.max(np.abs(np.abs(a) - 1.0)) <= 1e-15

    def test_phase_formula(self):
        theta, n, sp = 0.4, 5, 0.5
        a = steering_vector(theta, n, sp)
        for k in range(n):
            expect = np.exp(-2j * np.pi * sp * k * np.sin(theta))
            assert abs(a[k] - expect) <= 1e-15

    def test_derivative_first_entry_exact_zero(self):
        d = steering_derivative(0.9, 7, 0.5)
        assert d[0] == 0.0 + 0.0j

    def test_derivative_matches_finite_difference(self):
        theta, n, sp = 0.25, 6, 0.5
        h = 1e-6
        fd = (steering_vector(theta + h, n, sp) - steering_vector(theta - h, n, sp)) / (2 * h)
        d = steering_derivative(theta, n, sp)
        assert np.max(np.abs(d - fd)) <= 1e-6

    def test_rejects_empty(self):
        with pytest.raises(ArgumentError):
            steering_vector(0.0, 0, 0.5)
        with pytest.raises(ArgumentError):
            steering_derivative(0.0, 0, 0.5)


class TestAngles:
    def test_angle_at_bs_value(self):
        assert angle_at_bs((-10.0, 0.0), (0.0, 20.0)) == pytest.approx(math.atan2(20.0, 10.0))

    def test_angle_at_bs_rejects_behind(self):
        with pytest.raises(ArgumentError):
            angle_at_bs((0.0, 0.0), (-1.0, 5.0))

    def test_angle_at_ris_value(self):
        assert angle_at_ris((0.0, 20.0), (5.0, 0.0)) == pytest.approx(math.atan2(5.0, 20.0))

    def test_angle_at_ris_rejects_behind(self):
        with pytest.raises(ArgumentError):
            angle_at_ris((0.0, 0.0), (1.0, 1.0))

    def test_pathloss_formula(self):
        assert pathloss_gain(2.0, 8.0, 2.0, 1.0) == pytest.approx(1.0 / 16.0)
        with pytest.raises(ArgumentError):
            pathloss_gain(0.0, 1.0, 2.0, 1.0)


class TestScenarioValidation:
    def test_valid_scene_constructs(self):
        scene = unit_scene()
        assert scene.n_r == 4
        assert scene.reference_gain == 1.0

    def test_default_reference_gain(self):
        scene = unit_scene(reference_gain=None)
        assert scene.reference_gain == pytest.approx((0.1 / (4 * math.pi)) ** 2)

    def test_rejects_bad_counts(self):
        with pytest.raises(ArgumentError):
            unit_scene(n_bs=0)
        with pytest.raises(ArgumentError):
            unit_scene(n_r=0)

    def test_rejects_nonpositive_powers(self):
        with pytest.raises(ArgumentError):
            unit_scene(power=0.0)
        with pytest.raises(ArgumentError):
            unit_scene(noise_power=-1.0)
        with pytest.raises(ArgumentError):
            unit_scene(wavelength=0.0)

    def test_rejects_angle_outside_range(self):
        with pytest.raises(ArgumentError):
            unit_scene(theta=2.0)

    def test_half_pi_float_accepted(self):
        # float64 pi/2 is strictly below the real pi/2 (pi rounds down), so
        # the open-interval rule admits it.
        scene = unit_scene(theta=np.pi / 2.0)
        assert scene.theta == np.pi / 2.0

    def test_geometric_requires_positions(self):
        with pytest.raises(ArgumentError):
            unit_scene(ris_pos=None, bs_pos=None)

    def test_rejects_unknown_relay_model(self):
        with pytest.raises(ArgumentError):
            unit_scene(relay_model="sparse")

    def test_rejects_inconsistent_bs_angle(self):
        with pytest.raises(ArgumentError, match="phi_bs"):
            unit_scene(phi_bs=0.1)

    def test_rejects_inconsistent_theta(self):
        good = unit_scene()
        with pytest.raises(ArgumentError, match="theta"):
            replace(good, target_pos=(1.0, -2.0), theta=good.theta + 0.05)

    def test_rejects_inconsistent_alpha_magnitude(self):
        good = unit_scene()
        with pytest.raises(ArgumentError, match="alpha"):
            replace(good, target_pos=(1.0, -2.0), alpha=1.0 + 0.0j)


class TestElementPositions:
    def test_bs_layout(self):
        scene = unit_scene(n_bs=3)
        pos = bs_element_positions(scene)
        assert pos.shape == (3, 2)
        assert np.array_equal(pos[0], np.asarray(scene.bs_pos))
        step = scene.d_bs * scene.wavelength
        assert pos[1, 1] == pytest.approx(scene.bs_pos[1] - step)
        assert pos[1, 0] == scene.bs_pos[0]

    def test_ris_layout(self):
        scene = unit_scene(n_r=3)
        pos = ris_element_positions(scene)
        step = scene.d_ris * scene.wavelength
        assert pos[2, 0] == pytest.approx(scene.ris_pos[0] + 2 * step)
        assert pos[2, 1] == scene.ris_pos[1]


class TestRelayMatrix:
    def test_geometric_unit_modulus_and_reference_entry(self):
        g = relay_matrix(unit_scene())
        assert np.max(np.abs(np.abs(g) - 1.0)) <= 1e-14
        assert g[0, 0] == 1.0 + 0.0j

    def test_cached_per_scene(self):
        scene = unit_scene()
        assert relay_matrix(scene) is relay_matrix(scene)

    def test_farfield_is_rank_one(self):
        g = relay_matrix(unit_scene(relay_model="farfield"))
        sv = np.linalg.svd(g, compute_uv=False)
        assert sv[1] <= 1e-12 * sv[0]

    def test_geometric_converges_to_farfield_at_long_range(self):
        # push the BS far away along the same bearing: the exact-phase matrix
        # must approach the plane-wave outer product.
        scale = 1e5
        far_bs = (-1.5 * scale, -2.5 * scale)
        geo = unit_scene(
            bs_pos=far_bs,
            phi_r=angle_at_ris((0.0, 0.0), far_bs),
            phi_bs=angle_at_bs(far_bs, (0.0, 0.0)),
        )
        g_geo = relay_matrix(geo)
        g_far = relay_matrix(replace(geo, relay_model="farfield"))
        rel = np.linalg.norm(g_geo - g_far) / np.linalg.norm(g_far)
        assert rel <= 1e-4

    def test_farfield_angle_information_collapses(self):
        # rank-one relay: h and h_dot are parallel for every scattering
        # matrix, so the objective vanishes (up to rounding) and the bound
        # diverges. This is the degeneracy that motivates the geometric model.
        scene = unit_scene(relay_model="farfield")
        for seed in range(5):
            phi = haar_random_unitary(scene.n_r, seed)
            bundle = build_channel(scene, phi)
            hd = float(np.vdot(bundle.h_dot, bundle.h_dot).real)
            assert objective_g(bundle) <= 1e-10 * hd
        assert crb_theta(build_channel(scene, np.eye(scene.n_r)), scene) > 1e10


class TestBuildChannel:
    def test_channel_identity(self):
        scene = unit_scene()
        phi = haar_random_unitary(scene.n_r, 3)
        bundle = build_channel(scene, phi)
        h = scene.alpha * (bundle.g_mat @ (phi @ bundle.a_ris_theta))
        assert np.array_equal(bundle.h, h)

    def test_arrays_read_only(self):
        bundle = build_channel(unit_scene(), np.eye(4))
        with pytest.raises(ValueError):
            bundle.h[0] = 0.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ArgumentError):
            build_channel(unit_scene(), np.eye(3))

    def test_channel_norms_guard(self):
        tiny = unit_scene(alpha=1e-20 + 0.0j)
        bundle = build_channel(tiny, np.eye(4))
        with pytest.raises(DegenerateSceneError):
            channel_norms(tiny, bundle)

    def test_channel_norms_values(self):
        scene = unit_scene()
        bundle = build_channel(scene, haar_random_unitary(4, 5))
        hh, dd = channel_norms(scene, bundle)
        assert hh == pytest.approx(float(np.vdot(bundle.h, bundle.h).real))
        assert dd == pytest.approx(float(np.vdot(bundle.h_dot, bundle.h_dot).real))


class TestGeometryToScene:
    def test_fields_consistent(self):
        base = unit_scene()
        scene = geometry_to_scene((2.0, -3.0), (0.5, 0.0), (-2.0, -1.0), base, alpha_phase=0.25)
        assert scene.theta == pytest.approx(angle_at_ris((0.5, 0.0), (2.0, -3.0)))
        assert scene.phi_bs == pytest.approx(angle_at_bs((-2.0, -1.0), (0.5, 0.0)))
        d1 = math.hypot(1.5, 3.0)
        d2 = math.hypot(2.5, 1.0)
        assert abs(scene.alpha) == pytest.approx(
            pathloss_gain(d1, d2, base.pathloss_exponent, base.reference_gain)
        )
        assert math.atan2(scene.alpha.imag, scene.alpha.real) == pytest.approx(0.25)

    def test_seeded_phase_deterministic(self):
        base = unit_scene()
        s1 = geometry_to_scene((2.0, -3.0), (0.5, 0.0), (-2.0, -1.0), base, seed=4)
        s2 = geometry_to_scene((2.0, -3.0), (0.5, 0.0), (-2.0, -1.0), base, seed=4)
        s3 = geometry_to_scene((2.0, -3.0), (0.5, 0.0), (-2.0, -1.0), base, seed=5)
        assert s1.alpha == s2.alpha
        assert s1.alpha != s3.alpha

    def test_rejects_coincident_points(self):
        with pytest.raises(ArgumentError):
            geometry_to_scene((0.0, 0.0), (0.0, 0.0), (-1.0, -1.0), unit_scene())


class TestSampleScene:
    def test_deterministic(self):
        a = sample_scene((7, 1))
        b = sample_scene((7, 1))
        assert a == b

    def test_dimensions_honored(self):
        scene = sample_scene(3, n_bs=8, n_r=16)
        assert (scene.n_bs, scene.n_r) == (8, 16)

    def test_default_dimensions_in_small_set(self):
        for seed in range(10):
            scene = sample_scene(seed)
            assert scene.n_bs in (2, 4, 8)
            assert scene.n_r in (2, 4, 8)

    def test_geometric_and_well_conditioned(self):
        scene = sample_scene(11, n_bs=4, n_r=8)
        assert scene.relay_model == "geometric"
        bundle = build_channel(scene, haar_random_unitary(8, 0))
        assert objective_g(bundle) > 0.0
