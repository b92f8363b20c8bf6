"""Matrix kernels: skew exponentials, Haar sampling, block masks, polar
re-unitarization, and seed handling."""

import numpy as np
import pytest
import scipy.linalg

from bdris.errors import ArgumentError, SingularMatrixError, SkewToleranceError
from bdris.linalg import (
    SkewFactorization,
    as_rng,
    block_diag_haar,
    block_mask,
    expm_skew,
    haar_random_unitary,
    reunitarize,
    reunitarize_blocks,
    skew_eigensystem,
    unitarity_report,
)


def random_skew(n: int, rng) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a - a.conj().T


class TestSkewExponential:
    def test_matches_pade_reference(self):
        rng = as_rng(101)
        for _ in range(20):
            n = int(rng.integers(1, 9))
            s = random_skew(n, rng)
            mu = float(rng.uniform(-2.0, 2.0))
            ours = expm_skew(s, mu)
            ref = scipy.linalg.expm(mu * s)
            assert np.linalg.norm(ours - ref) <= 1e-10 * (1.0 + np.linalg.norm(ref))

    def test_result_is_unitary(self):
        rng = as_rng(102)
        for _ in range(10):
            s = random_skew(6, rng)
            r = expm_skew(s, 0.7)
            assert unitarity_report(r).frobenius_drift <= 1e-12

    def test_zero_step_is_identity(self):
        s = random_skew(4, as_rng(103))
        assert np.allclose(expm_skew(s, 0.0), np.eye(4), atol=1e-14)

    def test_group_property(self):
        # exp((a+b) S) = exp(a S) exp(b S): same generator commutes with itself
        s = random_skew(5, as_rng(104))
        lhs = expm_skew(s, 0.9)
        rhs = expm_skew(s, 0.4) @ expm_skew(s, 0.5)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(lhs)

    def test_rejects_non_skew(self):
        m = np.eye(3, dtype=complex)
        with pytest.raises(SkewToleranceError):
            expm_skew(m, 1.0)

    def test_rejects_non_square_and_non_finite(self):
        with pytest.raises(ArgumentError):
            expm_skew(np.zeros((2, 3)), 1.0)
        bad = np.zeros((2, 2), dtype=complex)
        bad[0, 1] = np.nan
        with pytest.raises(ArgumentError):
            expm_skew(bad, 1.0)
        with pytest.raises(ArgumentError):
            expm_skew(np.zeros((2, 2)), np.inf)


class TestSkewEigensystem:
    def test_reconstruction(self):
        rng = as_rng(105)
        for _ in range(10):
            s = random_skew(7, rng)
            fac = skew_eigensystem(s)
            assert isinstance(fac, SkewFactorization)
            assert np.linalg.norm(fac.reconstruct() - s) <= 1e-12 * np.linalg.norm(s)

    def test_eigenvalues_are_imaginary(self):
        s = random_skew(6, as_rng(106))
        fac = skew_eigensystem(s)
        # omega real by construction; eigenvalues of S are j*omega
        assert fac.omega.dtype.kind == "f"
        vals = np.linalg.eigvals(s)
        assert np.max(np.abs(np.sort(vals.imag) - np.sort(fac.omega))) <= 1e-10

    def test_rotation_at_many_steps_consistent(self):
        # one factorization must reproduce expm at every step size
        s = random_skew(5, as_rng(107))
        fac = skew_eigensystem(s)
        for mu in (1e-3, 0.1, 1.0, 10.0):
            ref = scipy.linalg.expm(mu * s)
            assert np.linalg.norm(fac.rotation(mu) - ref) <= 1e-9 * np.linalg.norm(ref)


class TestHaarSampling:
    def test_deterministic_per_seed(self):
        a = haar_random_unitary(5, 42)
        b = haar_random_unitary(5, 42)
        c = haar_random_unitary(5, 43)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_unitary(self):
        for seed in range(5):
            u = haar_random_unitary(6, seed)
            assert unitarity_report(u).frobenius_drift <= 1e-13

    def test_second_moment(self):
        # Haar moment E|U_ij|^2 = 1/n within Monte Carlo error
        n, samples = 4, 10000
        rng = as_rng(108)
        acc = 0.0
        for _ in range(samples):
            u = haar_random_unitary(n, rng)
            acc += abs(u[0, 0]) ** 2
        assert abs(acc / samples - 1.0 / n) < 0.02

    def test_rejects_bad_dimension(self):
        with pytest.raises(ArgumentError):
            haar_random_unitary(0, 1)


class TestSeedHandling:
    def test_tuple_flattening_matches_flat_seed(self):
        flat = as_rng((1, 2, 3)).standard_normal(4)
        nested = as_rng((1, (2, 3))).standard_normal(4)
        deeper = as_rng(((1,), (2, (3,)))).standard_normal(4)
        assert np.array_equal(flat, nested)
        assert np.array_equal(flat, deeper)

    def test_generator_passthrough(self):
        gen = as_rng(7)
        assert as_rng(gen) is gen

    def test_seedsequence_accepted(self):
        ss = np.random.SeedSequence(5)
        a = as_rng(ss).standard_normal(3)
        b = as_rng(np.random.SeedSequence(5)).standard_normal(3)
        assert np.array_equal(a, b)

    def test_distinct_components_give_distinct_streams(self):
        a = as_rng((0, 1)).standard_normal(4)
        b = as_rng((1, 0)).standard_normal(4)
        assert not np.array_equal(a, b)


class TestBlockStructure:
    def test_block_mask_support(self):
        mask = block_mask(4, 2)
        expect = np.array(
            [
                [True, True, False, False],
                [True, True, False, False],
                [False, False, True, True],
                [False, False, True, True],
            ]
        )
        assert np.array_equal(mask, expect)

    def test_block_mask_extremes(self):
        assert np.array_equal(block_mask(3, 1), np.eye(3, dtype=bool))
        assert block_mask(3, 3).all()

    def test_block_mask_rejects_non_divisor(self):
        with pytest.raises(ArgumentError):
            block_mask(6, 4)
        with pytest.raises(ArgumentError):
            block_mask(4, 0)

    def test_block_diag_haar_structure(self):
        m = block_diag_haar(6, 2, 9)
        assert np.all(m[~block_mask(6, 2)] == 0)
        for start in range(0, 6, 2):
            blk = m[start : start + 2, start : start + 2]
            assert unitarity_report(blk).frobenius_drift <= 1e-13

    def test_block_diag_haar_full_group_matches_haar(self):
        full = block_diag_haar(5, 5, 11)
        plain = haar_random_unitary(5, 11)
        assert np.array_equal(full, plain)


class TestReunitarize:
    def test_projects_to_unitary(self):
        rng = as_rng(109)
        u = haar_random_unitary(5, rng)
        drifted = u + 1e-6 * (rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)))
        fixed = reunitarize(drifted)
        assert unitarity_report(fixed).frobenius_drift <= 1e-13
        # the polar factor stays near the perturbed input
        assert np.linalg.norm(fixed - drifted) <= 1e-5

    def test_unitary_is_fixed_point(self):
        u = haar_random_unitary(4, 110)
        assert np.linalg.norm(reunitarize(u) - u) <= 1e-14

    def test_rejects_singular(self):
        m = np.zeros((3, 3), dtype=complex)
        m[0, 0] = 1.0
        with pytest.raises(SingularMatrixError):
            reunitarize(m)

    def test_blockwise_preserves_support(self):
        rng = as_rng(111)
        m = block_diag_haar(6, 3, rng)
        noisy = m + 1e-8 * block_mask(6, 3) * (
            rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        )
        fixed = reunitarize_blocks(noisy, 3)
        assert np.all(fixed[~block_mask(6, 3)] == 0)
        assert unitarity_report(fixed).frobenius_drift <= 1e-12

    def test_blockwise_full_group(self):
        u = haar_random_unitary(4, 112)
        assert np.allclose(reunitarize_blocks(u, 4), reunitarize(u))


class TestUnitarityReport:
    def test_zero_for_unitary(self):
        rep = unitarity_report(np.eye(4))
        assert rep.frobenius_drift == 0.0
        assert rep.max_entry_drift == 0.0

    def test_measures_drift(self):
        m = np.diag([1.0, 1.0 + 1e-6])
        rep = unitarity_report(m)
        assert 1e-6 < rep.frobenius_drift < 1e-5
        assert rep.max_entry_drift <= rep.frobenius_drift
