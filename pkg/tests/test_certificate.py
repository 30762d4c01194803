import json

import numpy as np
import pytest

from mcanm.certificate import (
    CertificateReport,
    build_certificate,
    draw_index_mask,
    fejer_coeffs,
    kernel_eval,
    verify_certificate,
    verify_grid_certificate,
)
from mcanm.errors import ContractViolationError, InfeasibleError
from mcanm.model import draw_frequencies, draw_sphere_phases


def closed_form_kernel(n, f):
    f = np.asarray(f, dtype=float)
    num = np.sin(np.pi * (n + 1) * f)
    den = (n + 1) * np.sin(np.pi * f)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (num / den) ** 4
    return np.where(np.isclose(f % 1.0, 0.0, atol=1e-12), 1.0, val)


class TestFejerCoeffs:
    def test_sum_is_one(self):
        for n in (1, 4, 8, 16, 32):
            assert fejer_coeffs(n).g.sum() == pytest.approx(1.0, abs=1e-12)

    def test_symmetric_positive_bounded(self):
        for n in (1, 3, 8):
            g = fejer_coeffs(n).g
            assert g.size == 4 * n + 1
            assert np.allclose(g, g[::-1])
            assert np.all(g > 0.0) and np.all(g <= 1.0)

    def test_n1_center_maximal(self):
        g = fejer_coeffs(1).g
        assert g.size == 5
        assert np.argmax(g) == 2

    def test_two_formula_agreement(self):
        rng = np.random.default_rng(0)
        for n in (4, 8, 16, 32):
            ker = fejer_coeffs(n)
            f = rng.uniform(0.01, 0.99, size=1000)
            series = kernel_eval(ker, f).real
            closed = closed_form_kernel(n, f)
            assert np.max(np.abs(series - closed)) < 1e-10

    def test_invalid_n(self):
        with pytest.raises(ContractViolationError):
            fejer_coeffs(0)


class TestKernelEval:
    def test_origin_values(self):
        for n in (4, 8, 16, 32):
            ker = fejer_coeffs(n)
            assert kernel_eval(ker, 0.0) == pytest.approx(1.0, abs=1e-12)
            assert abs(kernel_eval(ker, 0.0, 1)) < 1e-10
            c0sq = 4 * np.pi**2 * n * (n + 2) / 3.0
            assert kernel_eval(ker, 0.0, 2).real == pytest.approx(-c0sq, rel=1e-10)
            assert ker.c0**2 == pytest.approx(c0sq, rel=1e-14)

    def test_masked_matches_direct_sum(self):
        rng = np.random.default_rng(1)
        n = 6
        ker = fejer_coeffs(n)
        mask = draw_index_mask(n, 0.5, rng)
        f = 0.217
        for order in range(4):
            direct = sum(
                ker.g[j + 2 * n]
                * (-2j * np.pi * j) ** order
                * np.exp(-2j * np.pi * j * f)
                for j in mask
            )
            assert kernel_eval(ker, f, order, mask) == pytest.approx(direct, rel=1e-12)

    def test_derivative_matches_finite_difference(self):
        ker = fejer_coeffs(8)
        h = 1e-6
        for f in (0.13, 0.42, 0.77):
            fd = (kernel_eval(ker, f + h) - kernel_eval(ker, f - h)) / (2 * h)
            assert abs(fd - kernel_eval(ker, f, 1)) < 1e-5

    def test_order_out_of_range(self):
        with pytest.raises(ContractViolationError):
            kernel_eval(fejer_coeffs(4), 0.1, order=4)


class TestDrawIndexMask:
    def test_range_and_determinism(self):
        m1 = draw_index_mask(8, 0.5, np.random.default_rng(3))
        m2 = draw_index_mask(8, 0.5, np.random.default_rng(3))
        assert np.array_equal(m1, m2)
        assert m1.min() >= -16 and m1.max() <= 16

    def test_invalid_p(self):
        with pytest.raises(ContractViolationError):
            draw_index_mask(8, 0.0, np.random.default_rng(0))


class TestBuildCertificate:
    def test_single_support_full_data(self):
        rng = np.random.default_rng(4)
        phi = draw_sphere_phases(1, 3, rng)
        system = build_certificate([0.3], phi, 16)
        assert np.allclose(system.alpha, phi, atol=1e-10)
        assert np.allclose(system.beta, 0.0, atol=1e-10)

    def test_interpolation_conditions(self):
        rng = np.random.default_rng(5)
        freqs = draw_frequencies(5, 129, rng)
        phi = draw_sphere_phases(5, 3, rng)
        system = build_certificate(freqs, phi, 32)
        q = system.evaluate(freqs)
        assert np.linalg.norm(q - phi, axis=1).max() < 1e-8
        dq = system.evaluate(freqs, order=1)
        assert np.linalg.norm(dq, axis=1).max() < 1e-6 * system.c0

    def test_system_matrix_hermitian_with_mask(self):
        rng = np.random.default_rng(6)
        freqs = draw_frequencies(4, 129, rng)
        phi = draw_sphere_phases(4, 2, rng)
        mask = draw_index_mask(32, 0.6, rng)
        system = build_certificate(freqs, phi, 32, mask=mask)
        d = system.dbar
        assert np.allclose(d, d.conj().T, atol=1e-10)
        k = 4
        assert np.allclose(d[k:, :k], -d[:k, k:], atol=1e-12)

    def test_separation_precondition(self):
        phi = draw_sphere_phases(2, 2, np.random.default_rng(7))
        with pytest.raises(ContractViolationError):
            build_certificate([0.3, 0.3 + 0.5 / 16], phi, 16)

    def test_tiny_mask_is_infeasible(self):
        rng = np.random.default_rng(8)
        freqs = draw_frequencies(5, 129, rng)
        phi = draw_sphere_phases(5, 2, rng)
        with pytest.raises(InfeasibleError):
            build_certificate(freqs, phi, 32, mask=np.array([0, 1, -1]))


class TestVerifyCertificate:
    def test_full_data_k1_margin_positive(self):
        rng = np.random.default_rng(9)
        phi = draw_sphere_phases(1, 2, rng)
        system = build_certificate([0.4], phi, 16)
        report = verify_certificate(system)
        assert report.valid
        assert report.off_support_margin > 0
        assert np.all(report.near_curvature < 0)

    def test_full_data_k5_valid(self):
        rng = np.random.default_rng(10)
        freqs = draw_frequencies(5, 129, rng)
        phi = draw_sphere_phases(5, 3, rng)
        report = verify_certificate(build_certificate(freqs, phi, 32))
        assert report.valid
        assert report.interp_errors.max() <= 1e-8

    def test_curvature_matches_finite_difference(self):
        rng = np.random.default_rng(11)
        freqs = draw_frequencies(3, 129, rng)
        phi = draw_sphere_phases(3, 2, rng)
        system = build_certificate(freqs, phi, 32)

        def norm_sq(f):
            q = system.evaluate(f)
            return np.sum(np.abs(q) ** 2)

        h = 1e-5
        for f in rng.uniform(size=100):
            fd = (norm_sq(f + h) - 2 * norm_sq(f) + norm_sq(f - h)) / h**2
            q0 = system.evaluate(f)
            q1 = system.evaluate(f, 1)
            q2 = system.evaluate(f, 2)
            an = 2 * np.sum(q2 * np.conj(q0)).real + 2 * np.sum(np.abs(q1) ** 2)
            assert abs(fd - an) <= 1e-6 * max(abs(an), system.c0**2)

    def test_bernoulli_success_region(self):
        valid = 0
        for seed in range(10):
            rng = np.random.default_rng(np.random.SeedSequence([1, seed]))
            freqs = draw_frequencies(5, 129, rng)
            phi = draw_sphere_phases(5, 4, rng)
            mask = draw_index_mask(32, 60 / 128, rng)
            try:
                report = verify_certificate(build_certificate(freqs, phi, 32, mask=mask))
                valid += report.valid
            except InfeasibleError:
                pass
        assert valid >= 8

    def test_undersampled_never_valid(self):
        for seed in range(5):
            rng = np.random.default_rng(np.random.SeedSequence([2, seed]))
            freqs = draw_frequencies(5, 129, rng)
            phi = draw_sphere_phases(5, 4, rng)
            mask = draw_index_mask(32, 5 / 128, rng)
            try:
                report = verify_certificate(build_certificate(freqs, phi, 32, mask=mask))
                assert not report.valid
            except InfeasibleError:
                pass

    def test_grid_evaluation_matches_direct(self):
        rng = np.random.default_rng(12)
        freqs = draw_frequencies(3, 65, rng)
        phi = draw_sphere_phases(3, 2, rng)
        system = build_certificate(freqs, phi, 16)
        p = 256
        grid = np.arange(p) / p
        assert np.allclose(system.grid_values(p), system.evaluate(grid), atol=1e-10)
        assert np.allclose(
            system.grid_values(p, order=2), system.evaluate(grid, order=2), atol=1e-6
        )


class TestVerifyGridCertificate:
    def _system(self, seed=13):
        rng = np.random.default_rng(seed)
        freqs = np.array([4.0, 13.0, 25.0]) / 32.0
        phi = draw_sphere_phases(3, 2, rng)
        return build_certificate(freqs, phi, 16)

    def test_continuous_valid_implies_grid_valid(self):
        system = self._system()
        cont = verify_certificate(system)
        assert cont.valid
        grid = np.concatenate([np.arange(32) / 32.0, system.freqs])
        rep = verify_grid_certificate(system, np.unique(grid % 1.0))
        assert rep.valid
        assert rep.off_support_margin >= cont.off_support_margin - 1e-12

    def test_support_only_grid(self):
        system = self._system()
        rep = verify_grid_certificate(system, system.freqs)
        assert rep.valid
        assert rep.off_support_margin == pytest.approx(1.0)
        assert rep.near_curvature.size == 0

    def test_support_must_be_on_grid(self):
        system = self._system()
        with pytest.raises(ContractViolationError):
            verify_grid_certificate(system, np.array([0.0, 0.5]))


class TestReportSerialization:
    def test_round_trips_through_json(self):
        report = CertificateReport(
            interp_errors=np.array([1e-12]),
            off_support_margin=0.2,
            near_curvature=np.array([-100.0]),
            valid=True,
        )
        payload = json.loads(json.dumps(report.to_dict(mask=[-1, 0, 2], seed=7)))
        assert payload["valid"] is True
        assert payload["mask"] == [-1, 0, 2]
        assert payload["seed"] == 7
