import numpy as np
import pytest

from kp5 import (
    Grid,
    DispersionParams,
    SpectralField,
    free_trajectory,
    lp_project,
    modulation_project,
    propagate,
)
from kp5.propagator import DyadicLadder, FieldTrajectory, raised_cosine_taper, scale_snapshots
from kp5.norms import l2_norm, spacetime_l2, v2_variation, SampledPath
from kp5.calibration import QBIG1_C

from conftest import random_field


class TestBump:
    def test_plateau_and_support(self):
        lad = DyadicLadder(-2, 2)
        assert np.all(lad.phi(np.array([0.0, 0.5, 1.0])) == 1)
        assert np.all(lad.phi(np.array([2.0, 3.0])) == 0)
        mid = lad.phi(np.array([1.5]))[0]
        assert 0 < mid < 1

    def test_psi_is_one_at_band_center(self):
        # psi(1) = phi(1) - phi(2) = 1
        assert DyadicLadder.psi(np.array([1.0]))[0] == 1.0

    def test_psi_support(self):
        xs = np.array([0.4, 0.5, 2.0, 2.5])
        v = DyadicLadder.psi(xs)
        assert v[0] == 0 and v[3] == 0

    def test_partition_of_unity_on_lattice(self, grid):
        lad = DyadicLadder.covering(grid)
        xi = grid.xi[grid.xi != 0]
        vals = lad.partition_values(np.abs(xi))
        assert np.max(np.abs(vals - 1.0)) < 1e-12

    def test_band_outside_ladder_rejected(self, grid):
        lad = DyadicLadder(0, 3)
        with pytest.raises(ValueError, match="outside ladder"):
            lad.psi_n(32.0, grid.xi)


class TestPropagate:
    def test_identity_at_zero_time(self, field, params):
        out = propagate(field, 0.0, params)
        assert np.array_equal(out.coeffs, field.coeffs)

    def test_single_mode_half_period(self, grid, params):
        # mode xi=1: p = 2, so t = pi/2 gives phase pi -> multiplier -1
        c = np.zeros(grid.shape, dtype=np.complex128)
        c[1, 0] = 1.0
        c[-1, 0] = 1.0
        f = SpectralField(grid, c)
        out = propagate(f, np.pi / 2, params)
        assert np.allclose(out.coeffs, -c, atol=1e-14)

    def test_unitarity(self, field, params):
        out = propagate(field, 7.3, params)
        assert abs(l2_norm(out) - l2_norm(field)) <= 1e-13 * l2_norm(field)

    def test_group_law(self, field, params):
        a = propagate(propagate(field, 0.75, params), 1.5, params)
        b = propagate(field, 2.25, params)
        num = l2_norm(a - b)
        assert num <= 1e-12 * l2_norm(field)

    def test_inverse(self, field, params):
        back = propagate(propagate(field, 3.25, params), -3.25, params)
        assert l2_norm(back - field) <= 1e-12 * l2_norm(field)

    def test_commutes_with_band_projection(self, field, params):
        a = lp_project(propagate(field, 1.1, params), 2.0)
        b = propagate(lp_project(field, 2.0), 1.1, params)
        assert np.max(np.abs(a.coeffs - b.coeffs)) <= 1e-14 * np.max(np.abs(field.coeffs))


class TestLpProject:
    def test_band_center_passes(self, grid):
        c = np.zeros(grid.shape, dtype=np.complex128)
        c[4, 0] = 1.0
        c[-4, 0] = 1.0
        f = SpectralField(grid, c)
        out = lp_project(f, 4.0)
        assert np.array_equal(out.coeffs, c)

    def test_far_mode_annihilated(self, grid):
        c = np.zeros(grid.shape, dtype=np.complex128)
        c[8, 0] = 1.0
        c[-8, 0] = 1.0
        f = SpectralField(grid, c)
        out = lp_project(f, 2.0)  # mode sits at 4N
        assert np.all(out.coeffs == 0)

    def test_bands_reconstruct(self, grid, rng):
        f = random_field(grid, rng)
        lad = DyadicLadder.covering(grid)
        acc = SpectralField.zeros(grid)
        for N in lad.bands:
            acc = acc + lp_project(f, N, lad)
        assert l2_norm(acc - f) < 1e-12 * l2_norm(f)


class TestTrajectory:
    def test_needs_two_snapshots(self, grid, field):
        with pytest.raises(ValueError, match="two snapshots"):
            FieldTrajectory.from_fields([field], 0.0, 0.1)

    def test_times(self, grid, field, params):
        traj = free_trajectory(field, params, 0.0, 0.5, 5)
        assert np.allclose(traj.times, [0, 0.5, 1.0, 1.5, 2.0])
        assert traj.duration == 2.0

    def test_free_trajectory_matches_propagate(self, field, params):
        traj = free_trajectory(field, params, 0.0, 0.5, 4)
        direct = propagate(field, 1.0, params)
        assert l2_norm(traj.field(2) - direct) <= 1e-13 * l2_norm(field)


class TestModulation:
    def test_unresolvable_scale_rejected(self, field, params):
        traj = free_trajectory(field, params, 0.0, 0.25, 17)
        with pytest.raises(ValueError, match="unresolvable"):
            modulation_project(traj, 100.0, "below", params)
        with pytest.raises(ValueError, match="unresolvable"):
            modulation_project(traj, 0.01, "below", params)

    def test_halves_sum_to_windowed_input(self, field, params):
        traj = free_trajectory(field, params, 0.0, 0.25, 33)
        lo = modulation_project(traj, 1.0, "below", params)
        hi = modulation_project(traj, 1.0, "at_or_above", params)
        taper = raised_cosine_taper(33)
        windowed = traj.data * taper[:, None, None]
        err = np.max(np.abs(lo.data + hi.data - windowed))
        assert err < 1e-12 * np.max(np.abs(field.coeffs))

    def test_free_wave_has_no_high_modulation(self, field, params):
        # conjugated free wave is time-constant; M >= 4/duration
        traj = free_trajectory(field, params, 0.0, 0.25, 33)
        duration = traj.duration
        hi = modulation_project(traj, 4.0 / duration * 1.25, "at_or_above", params)
        ratio = spacetime_l2(hi) / spacetime_l2(traj)
        assert ratio < 1e-3

    def test_high_modulation_bounded_by_variation(self, grid, params, rng):
        # two-step conjugated paths: ||Q_{>=M}|| <= c M^{-1/2} V2, frozen c
        n, dt = 65, 0.25
        ts = dt * np.arange(n)
        p_a = random_field(grid, rng)
        p_b = random_field(grid, rng)
        from kp5.fields import unimodular_phases
        phases = unimodular_phases(grid, params.alpha, ts)
        jx, jy = grid._mirror_index
        for m_jump in (20, 32, 44):
            w = np.where(np.arange(n)[:, None, None] < m_jump, p_a.coeffs, p_b.coeffs)
            data = w * phases
            data = 0.5 * (data + np.conj(data[:, jx][:, :, jy]))
            traj = FieldTrajectory(grid, 0.0, dt, data)
            path = SampledPath((p_a, p_a, p_b, p_b))
            v2 = v2_variation(path)
            for M in (0.5, 1.0, 2.0):
                hi = modulation_project(traj, M, "at_or_above", params)
                assert spacetime_l2(hi) <= QBIG1_C * M**-0.5 * v2


class TestScaleSnapshots:
    def test_weights(self, field, params):
        traj = free_trajectory(field, params, 0.0, 0.5, 4)
        out = scale_snapshots(traj, np.array([0.0, 1.0, 2.0, 0.5]))
        assert np.all(out.data[0] == 0)
        assert np.allclose(out.data[2], 2 * traj.data[2])
