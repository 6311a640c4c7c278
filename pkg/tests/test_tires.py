import numpy as np
import pytest

from hebmplan.params import DEFAULT_LAT_TIRE, DEFAULT_LON_TIRE, PacejkaCoeffs
from hebmplan.refsim.tires import combined_slip_scale, pacejka_force
from oracles import pacejka_scalar


class TestPacejka:
    def test_zero_slip_zero_force(self):
        assert pacejka_force(0.0, 5000.0, DEFAULT_LON_TIRE, 1.0) == 0.0

    def test_odd_symmetry(self, rng):
        s = rng.uniform(-1, 1, 1000)
        f_pos = pacejka_force(s, 4000.0, DEFAULT_LAT_TIRE, 1.0)
        f_neg = pacejka_force(-s, 4000.0, DEFAULT_LAT_TIRE, 1.0)
        assert np.max(np.abs(f_pos + f_neg)) < 1e-9

    def test_bounded_by_d(self, rng):
        s = rng.uniform(-5, 5, 10_000)
        fz = 4500.0
        f = pacejka_force(s, fz, DEFAULT_LON_TIRE, 0.9)
        assert np.max(np.abs(f)) <= DEFAULT_LON_TIRE.d_scale * 0.9 * fz + 1e-9

    def test_peak_by_dense_scan(self):
        """The dense-grid force maximum is a stationary point: forces at
        neighboring grid points do not exceed it."""
        s = np.linspace(0, 1.5, 200_001)
        f = pacejka_force(s, 5000.0, DEFAULT_LON_TIRE, 1.0)
        k = int(np.argmax(f))
        assert 0 < k < len(s) - 1
        # numerical dF/ds crosses zero at the peak
        dfd = np.gradient(f, s)
        assert dfd[k - 5] > 0 > dfd[k + 5]
        assert np.all(f <= f[k])

    def test_matches_scalar_oracle(self, rng):
        c = DEFAULT_LAT_TIRE
        for _ in range(200):
            s = rng.uniform(-2, 2)
            fz = rng.uniform(0, 8000)
            got = float(pacejka_force(s, fz, c, 0.85))
            exp = pacejka_scalar(s, fz, c.b, c.c, c.d_scale, c.e, 0.85)
            assert got == pytest.approx(exp, abs=1e-9)

    def test_negative_load_clamped(self):
        assert pacejka_force(0.1, -500.0, DEFAULT_LON_TIRE, 1.0) == 0.0


class TestCoeffValidation:
    def test_rejects_c_out_of_range(self):
        with pytest.raises(ValueError):
            PacejkaCoeffs(b=10, c=3.0, d_scale=1.0, e=0.9)

    def test_rejects_e_above_one(self):
        with pytest.raises(ValueError):
            PacejkaCoeffs(b=10, c=1.3, d_scale=1.0, e=1.5)

    def test_rejects_nonpositive_b(self):
        with pytest.raises(ValueError):
            PacejkaCoeffs(b=0, c=1.3, d_scale=1.0, e=0.9)


class TestCombinedSlip:
    def test_inside_ellipse_unchanged(self):
        fx, fy = combined_slip_scale(100.0, 200.0, 5000.0, 1.0)
        assert fx == 100.0 and fy == 200.0

    def test_axis_case(self):
        fz, mu = 4000.0, 1.0
        fx, fy = combined_slip_scale(2 * mu * fz, 0.0, fz, mu)
        assert fx == pytest.approx(mu * fz, abs=1e-9)
        assert fy == 0.0

    def test_outside_projected_to_circle(self, rng):
        for _ in range(500):
            fz = rng.uniform(100, 8000)
            mu = rng.uniform(0.3, 1.2)
            fmax = mu * fz
            ang = rng.uniform(0, 2 * np.pi)
            r = rng.uniform(1.01, 5.0) * fmax
            fx0, fy0 = r * np.cos(ang), r * np.sin(ang)
            fx, fy = combined_slip_scale(fx0, fy0, fz, mu)
            assert np.hypot(fx, fy) == pytest.approx(fmax, abs=1e-9)
            # direction preserved
            assert fx * fy0 == pytest.approx(fy * fx0, abs=1e-6)

    def test_zero_load(self):
        fx, fy = combined_slip_scale(300.0, 400.0, 0.0, 1.0)
        assert fx == 0.0 and fy == 0.0
