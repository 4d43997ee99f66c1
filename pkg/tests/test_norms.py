import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kp5 import Grid, SpectralField, free_trajectory, lqlr_norm
from kp5.norms import (
    NormReport,
    SampledPath,
    band_v2_profile,
    hm12_norm,
    l2_norm,
    spacetime_l2,
    v2_variation,
    ydot_norm,
    zdot_surrogate_norm,
)
from kp5.lab import v2_variation_bruteforce
from kp5.calibration import HM12_LADDER_C
from kp5.propagator import DyadicLadder

from conftest import random_field


class TestSobolevNorms:
    def test_zero(self, grid):
        f = SpectralField.zeros(grid)
        assert l2_norm(f) == 0 and hm12_norm(f) == 0

    def test_single_mode_weight(self, grid):
        c = np.zeros(grid.shape, dtype=np.complex128)
        c[2, 0] = 1.0
        c[-2, 0] = 1.0
        f = SpectralField(grid, c)
        # |xi| = 2 mode: weight 1/sqrt(2) relative to L2
        assert abs(hm12_norm(f) - l2_norm(f) / np.sqrt(2)) < 1e-14 * l2_norm(f)

    def test_band_projection_bound(self, grid, rng):
        from kp5.propagator import lp_project
        f = random_field(grid, rng)
        N = 4.0
        pf = lp_project(f, N)
        if l2_norm(pf) > 0:
            assert hm12_norm(pf) <= (N / 2) ** -0.5 * l2_norm(pf) * (1 + 1e-12)


class TestV2Variation:
    def test_zero_path(self):
        p = SampledPath((np.zeros(3, dtype=complex),) * 4)
        assert v2_variation(p) == 0.0

    def test_constant_path_single_jump(self, rng):
        c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        p = SampledPath((c, c, c))
        expect = np.sqrt(np.real(np.vdot(c, c)))
        assert abs(v2_variation(p) - expect) < 1e-15 * expect
        # frozen from the brute-force oracle on the 3-point path
        assert abs(v2_variation(p) - v2_variation_bruteforce(p)) == 0.0

    def test_zero_then_a_two_jumps(self, rng):
        a = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        p = SampledPath((np.zeros_like(a), a))
        expect = np.sqrt(2 * np.real(np.vdot(a, a)))
        assert abs(v2_variation(p) - expect) < 1e-14 * expect
        assert v2_variation(p) == v2_variation_bruteforce(p)

    def test_dp_matches_bruteforce_random(self, rng):
        for _ in range(40):
            n = int(rng.integers(1, 13))
            d = int(rng.integers(1, 5))
            vals = tuple(rng.standard_normal(d) + 1j * rng.standard_normal(d)
                         for _ in range(n))
            p = SampledPath(vals)
            assert v2_variation(p) == v2_variation_bruteforce(p)

    def test_dominates_endpoint_values(self, rng):
        vals = tuple(rng.standard_normal(3) + 1j * rng.standard_normal(3)
                     for _ in range(6))
        p = SampledPath(vals)
        v2 = v2_variation(p)
        for v in vals:
            assert v2 >= np.sqrt(np.real(np.vdot(v, v))) - 1e-12

    def test_monotone_under_refinement(self, rng):
        vals = [rng.standard_normal(3) + 1j * rng.standard_normal(3)
                for _ in range(7)]
        coarse = SampledPath(tuple(vals[::2]))
        fine = SampledPath(tuple(vals[::2]) + (vals[1],))
        # adding a sample (in order here: append keeps chains valid) never decreases
        sub = v2_variation(coarse)
        full = v2_variation(SampledPath(tuple(vals)))
        assert full >= sub - 1e-12

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=8))
    def test_scalar_paths_match_bruteforce(self, xs):
        vals = tuple(np.array([complex(x)]) for x in xs)
        p = SampledPath(vals)
        assert v2_variation(p) == v2_variation_bruteforce(p)

    def test_field_paths(self, grid, rng):
        vals = tuple(random_field(grid, rng, 0.1) for _ in range(5))
        p = SampledPath(vals)
        assert v2_variation(p) == v2_variation_bruteforce(p)


class TestLadderNorms:
    def test_free_wave_single_band(self, params):
        grid = Grid(32, 32, 2 * np.pi, 2 * np.pi)
        c = np.zeros(grid.shape, dtype=np.complex128)
        c[4, 1] = 0.5 - 0.25j
        c[-4, -1] = 0.5 + 0.25j
        phi = SpectralField(grid, c)
        traj = free_trajectory(phi, params, 0.0, 0.25, 9)
        s = -0.5
        expect = 4.0**s * l2_norm(phi)
        got = ydot_norm(traj, s, params)
        assert abs(got - expect) < 1e-13 * expect
        assert zdot_surrogate_norm(traj, s, params) == got

    def test_zero_trajectory(self, grid, params):
        z = SpectralField.zeros(grid)
        traj = free_trajectory(z, params, 0.0, 0.25, 5)
        assert ydot_norm(traj, -0.5, params) == 0.0

    def test_homogeneity(self, grid, params, rng):
        f = random_field(grid, rng)
        t1 = free_trajectory(f, params, 0.0, 0.25, 9)
        t3 = free_trajectory(3.0 * f, params, 0.0, 0.25, 9)
        a, b = ydot_norm(t1, -0.5, params), ydot_norm(t3, -0.5, params)
        assert abs(b - 3 * a) <= 1e-12 * b

    def test_sup_hm12_controlled_by_ladder_norm(self, grid, params, rng):
        f = random_field(grid, rng)
        traj = free_trajectory(f, params, 0.0, 0.25, 9)
        y = ydot_norm(traj, -0.5, params)
        for m in range(traj.n_snapshots):
            assert hm12_norm(traj.field(m)) <= HM12_LADDER_C * y


class TestSpaceTimeNorms:
    def test_zero(self, grid, params):
        z = SpectralField.zeros(grid)
        traj = free_trajectory(z, params, 0.0, 0.5, 4)
        assert lqlr_norm(traj, 4.0, 4.0) == 0.0

    def test_constant_integrand_closed_form(self, grid, params):
        # time-constant physical field: L4_t L4_x = T^(1/4) * L4_x
        c = np.zeros(grid.shape, dtype=np.complex128)
        c[3, 0] = 0.5
        c[-3, 0] = 0.5
        f = SpectralField(grid, c)
        from kp5.propagator import FieldTrajectory
        n = 9
        data = np.repeat(f.coeffs[None], n, axis=0)
        traj = FieldTrajectory(grid, 0.0, 0.5, data)
        T = traj.duration
        from kp5.fields import to_physical
        phys = to_physical(f)
        l4x = (np.sum(np.abs(phys) ** 4) * grid.cell_area) ** 0.25
        assert abs(lqlr_norm(traj, 4.0, 4.0) - T**0.25 * l4x) < 1e-12 * l4x

    def test_monotone_under_window_restriction(self, grid, params, rng):
        f = random_field(grid, rng)
        long = free_trajectory(f, params, 0.0, 0.25, 17)
        short = free_trajectory(f, params, 0.0, 0.25, 9)
        assert lqlr_norm(short, 4.0, 4.0) <= lqlr_norm(long, 4.0, 4.0) + 1e-12

    def test_rejects_small_exponents(self, grid, params, rng):
        traj = free_trajectory(random_field(grid, rng), params, 0.0, 0.5, 4)
        with pytest.raises(ValueError):
            lqlr_norm(traj, 1.5, 4.0)

    def test_spacetime_l2_matches_lqlr(self, grid, params, rng):
        traj = free_trajectory(random_field(grid, rng), params, 0.0, 0.25, 9)
        assert abs(spacetime_l2(traj) - lqlr_norm(traj, 2.0, 2.0)) \
            < 1e-10 * spacetime_l2(traj)


class TestNormReport:
    def test_roundtrip(self):
        rep = NormReport()
        rep.set("L2", 1.5)
        rep.set("Hm12", 0.25)
        rep.set("LqLr(4,4)", 2.0)
        rep2 = NormReport.from_json(rep.to_json())
        assert rep2.entries == rep.entries

    def test_rejects_unknown_key(self):
        rep = NormReport()
        with pytest.raises(KeyError):
            rep.set("Linf", 1.0)

    def test_rejects_negative(self):
        rep = NormReport()
        with pytest.raises(ValueError):
            rep.set("L2", -1.0)
