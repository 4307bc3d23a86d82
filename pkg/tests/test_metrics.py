import math

import numpy as np
import pytest

from spectv import MetricsReport, band_metrics, psnr, slmse, ssim


def slmse_bruteforce(b, bhat, patch=16, stride=8):
    """Independent oracle: explicit window enumeration, same protocol."""

    def starts(dim):
        s = list(range(0, dim - patch + 1, stride))
        if s[-1] != dim - patch:
            s.append(dim - patch)
        return s

    num = den = 0.0
    for sy in starts(b.shape[0]):
        for sx in starts(b.shape[1]):
            pb = b[sy : sy + patch, sx : sx + patch]
            ph = bhat[sy : sy + patch, sx : sx + patch]
            num += ((pb - ph) ** 2).sum()
            den += (ph**2).sum()
    if den == 0:
        return 1.0 if num == 0 else 0.0
    return 1.0 - num / den


class TestPsnr:
    def test_known_value(self):
        b = np.zeros((4, 4))
        bhat = np.full((4, 4), 0.5)
        # MSE = 0.25, range 1 -> 10 log10(1/0.25)
        assert psnr(b, bhat, max_i=1.0) == pytest.approx(10 * math.log10(4.0))

    def test_identical_is_inf(self, rng):
        b = rng.standard_normal((8, 8))
        assert psnr(b, b.copy(), max_i=2.0) == math.inf

    def test_range_scaling(self, rng):
        b = rng.standard_normal((8, 8))
        h = b + 0.1
        # doubling the asserted range adds 20 log10(2) dB
        assert psnr(b, h, 2.0) - psnr(b, h, 1.0) == pytest.approx(20 * math.log10(2))

    def test_validation(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((2, 2)), np.zeros((2, 3)), 1.0)
        with pytest.raises(ValueError):
            psnr(np.zeros((2, 2)), np.zeros((2, 2)), 0.0)


class TestSsim:
    def test_identity_is_one(self, rng):
        b = rng.standard_normal((24, 24))
        assert ssim(b, b.copy(), data_range=float(np.ptp(b))) == pytest.approx(1.0)

    def test_matches_skimage(self, rng, camera64):
        from skimage.metrics import structural_similarity

        pairs = []
        noisy = camera64 + 0.1 * rng.standard_normal(camera64.shape)
        pairs.append((camera64, noisy, float(np.ptp(camera64))))
        a = rng.standard_normal((32, 40))
        pairs.append((a, 0.7 * a + 0.2, float(np.ptp(a))))
        for b, bhat, dr in pairs:
            ours = ssim(b, bhat, data_range=dr)
            theirs = structural_similarity(
                b,
                bhat,
                data_range=dr,
                gaussian_weights=True,
                sigma=1.5,
                use_sample_covariance=False,
            )
            assert ours == pytest.approx(theirs, abs=1e-6)

    def test_global_variant_formula(self):
        b = np.array([[0.0, 1.0], [1.0, 0.0]])
        h = np.array([[0.0, 1.0], [0.0, 0.0]])
        c1, c2 = 0.01**2, 0.03**2
        mb, mh = b.mean(), h.mean()
        cov = ((b - mb) * (h - mh)).mean()
        expected = ((2 * mb * mh + c1) * (2 * cov + c2)) / (
            (mb**2 + mh**2 + c1) * (b.var() + h.var() + c2)
        )
        assert ssim(b, h, data_range=1.0, windowed=False) == pytest.approx(expected)

    def test_too_small_for_window(self):
        with pytest.raises(ValueError, match="too small"):
            ssim(np.zeros((8, 8)), np.zeros((8, 8)), data_range=1.0)

    def test_sensitivity_orders_distortions(self, rng, camera64):
        small = ssim(camera64, camera64 + 0.01 * rng.standard_normal((64, 64)),
                     data_range=float(np.ptp(camera64)))
        large = ssim(camera64, camera64 + 0.3 * rng.standard_normal((64, 64)),
                     data_range=float(np.ptp(camera64)))
        assert small > large

    def test_bounded_on_near_constant_noise(self, rng):
        # one-pass windowed moments cancel to ~-1e-18 on near-constant
        # windows; without projecting onto the feasible cone the score
        # blows past [-1, 1] once the stabilizing constants shrink with
        # a tiny data range
        b = 1.0 + 1e-9 * rng.standard_normal((24, 24))
        h = 1.0 + 1e-9 * rng.standard_normal((24, 24))
        s = ssim(b, h, data_range=1e-9)
        assert -1.0 <= s <= 1.0

    def test_bounded_when_plateaus_carry_arithmetic_dust(self, rng):
        # flat regions of a decomposition band hold only femtoscale
        # round-off; scored against a floored range these windows used
        # to produce values like -32
        b = np.zeros((32, 32))
        h = np.zeros((32, 32))
        b[12:17, 12:17] = 1.0
        h[13:18, 12:17] = 1.0
        b += 1e-15 * rng.standard_normal(b.shape)
        h += 1e-15 * rng.standard_normal(h.shape)
        s = ssim(b, h, data_range=1e-9)
        assert -1.0 <= s <= 1.0

    def test_global_variant_bounded(self, rng):
        b = 1.0 + 1e-12 * rng.standard_normal((4, 4))
        h = 1.0 - 1e-12 * rng.standard_normal((4, 4))
        s = ssim(b, h, data_range=1e-9, windowed=False)
        assert -1.0 <= s <= 1.0

    def test_anticorrelated_bounded(self, rng):
        b = rng.standard_normal((24, 24))
        s = ssim(b, (-b).copy(), data_range=float(np.ptp(b)))
        assert -1.0 <= s <= 1.0


class TestSlmse:
    def test_identity_and_zero(self, rng):
        b = rng.standard_normal((32, 32))
        assert slmse(b, b.copy()) == pytest.approx(1.0)
        # zero ground truth against itself is the degenerate perfect case
        z = np.zeros((32, 32))
        assert slmse(z, z) == 1.0
        # nonzero truth, zero prediction: degenerate denominator scores 0
        assert slmse(b, z) == 0.0

    def test_matches_bruteforce(self, rng):
        for shape in ((32, 32), (48, 40), (33, 50), (16, 16)):
            b = rng.standard_normal(shape)
            h = b + 0.3 * rng.standard_normal(shape)
            assert slmse(b, h) == pytest.approx(slmse_bruteforce(b, h), rel=1e-12)

    def test_rejects_small_images(self):
        with pytest.raises(ValueError):
            slmse(np.zeros((8, 8)), np.zeros((8, 8)))

    def test_localized_error_bounded_effect(self, rng):
        # a localized corruption must not dominate: score stays well above 0
        b = rng.standard_normal((64, 64))
        h = b.copy()
        h[:8, :8] += 2.0
        assert 0.5 < slmse(b, h) < 1.0


class TestBandMetrics:
    def test_perfect_prediction(self, rng):
        gt = rng.standard_normal((3, 32, 32))
        rep = band_metrics(gt, gt.copy())
        assert all(s == pytest.approx(1.0) for s, _, _ in rep.per_band)
        assert all(p == math.inf for _, p, _ in rep.per_band)
        assert all(l == pytest.approx(1.0) for _, _, l in rep.per_band)
        assert rep.averages[1] == math.inf

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            band_metrics(rng.standard_normal((2, 16, 16)), rng.standard_normal((3, 16, 16)))

    def test_csv_layout(self, rng):
        gt = rng.standard_normal((3, 32, 32))
        rep = band_metrics(gt, gt + 0.05 * rng.standard_normal(gt.shape))
        lines = rep.to_csv().strip().splitlines()
        assert lines[0] == "metric,band1,band2,residual_band,average"
        assert [ln.split(",")[0] for ln in lines[1:]] == ["ssim", "psnr", "slmse"]

    def test_json_round_trip(self, rng):
        import json

        gt = rng.standard_normal((2, 32, 32))
        rep = band_metrics(gt, gt + 0.1)
        data = json.loads(rep.to_json())
        assert len(data["per_band"]) == 2
        assert data["averages"]["ssim"] == pytest.approx(rep.averages[0])

    def test_average_of_reports(self, rng):
        gt = rng.standard_normal((2, 32, 32))
        r1 = band_metrics(gt, gt + 0.1)
        r2 = band_metrics(gt, gt + 0.2)
        merged = MetricsReport.average([r1, r2])
        for k in range(2):
            assert merged.per_band[k][0] == pytest.approx(
                (r1.per_band[k][0] + r2.per_band[k][0]) / 2
            )
        with pytest.raises(ValueError):
            MetricsReport.average([])
