import numpy as np
import pytest

from kp5 import (
    DispersionParams,
    Grid,
    SpectralField,
    bilinear_nonlinearity,
    duhamel,
    final_value_solve,
    free_trajectory,
    picard_solve,
)
from kp5.lab import make_small_datum
from kp5.norms import hm12_norm, l2_norm, ydot_norm
from kp5.solver import ConvergenceError, CutoffProfile, DivergenceError, SolverConfig

from conftest import random_field


@pytest.fixture
def sgrid():
    return Grid(32, 32, 16 * np.pi, 16 * np.pi)


@pytest.fixture
def scfg():
    return SolverConfig(t_max=4.0, dt=0.125, picard_tol=1e-10,
                        picard_max_iters=20, small_data_delta=1e-2)


class TestCutoffProfile:
    def test_indicator(self):
        w = CutoffProfile(2.0, "indicator").weights(np.array([0.0, 1.0, 2.0, 3.0]))
        assert w.tolist() == [1, 1, 1, 0]

    def test_ramp_knots(self):
        prof = CutoffProfile(3.0, "ramp")
        t = np.array([1.0, 2.0, 2.5, 3.0, 5.0])
        assert prof.weights(t).tolist() == [0.0, 0.0, 0.5, 1.0, 1.0]

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            CutoffProfile(1.0, "boxcar")


class TestSolverConfig:
    def test_step_must_divide_horizon(self):
        with pytest.raises(ValueError, match="integer multiple"):
            SolverConfig(t_max=1.0, dt=0.3)

    def test_phase_resolution_positive(self, sgrid, params):
        cfg = SolverConfig(t_max=1.0, dt=0.25)
        assert cfg.phase_resolution(sgrid, params) > 0

    def test_phase_resolution_warning_fires(self, sgrid, params, rng):
        import warnings as _w
        cfg = SolverConfig(t_max=1.0, dt=0.5, small_data_delta=1e-2)
        u0 = make_small_datum(sgrid, rng, 1e-4)
        with _w.catch_warnings(record=True) as rec:
            _w.simplefilter("always")
            picard_solve(u0, params, cfg)
        assert any("dt*max|p|" in str(r.message) for r in rec)


class TestBilinearNonlinearity:
    def test_zero_factor(self, sgrid, rng):
        u = random_field(sgrid, rng)
        z = SpectralField.zeros(sgrid)
        assert np.all(bilinear_nonlinearity(u, z).coeffs == 0)

    def test_symmetric_bit_exact(self, sgrid, rng):
        u = random_field(sgrid, rng)
        v = random_field(sgrid, rng)
        a = bilinear_nonlinearity(u, v)
        b = bilinear_nonlinearity(v, u)
        assert np.array_equal(a.coeffs, b.coeffs)

    def test_single_modes_convolve(self, sgrid):
        # cos(3 dxi x) * cos(5 dxi x): output only at |j| in {2, 8}
        c1 = np.zeros(sgrid.shape, dtype=np.complex128)
        c1[3, 0] = 0.5
        c1[-3, 0] = 0.5
        c2 = np.zeros(sgrid.shape, dtype=np.complex128)
        c2[5, 0] = 0.5
        c2[-5, 0] = 0.5
        out = bilinear_nonlinearity(SpectralField(sgrid, c1), SpectralField(sgrid, c2))
        nz = np.nonzero(np.abs(out.coeffs) > 1e-15)
        assert set(np.abs(np.fft.fftfreq(sgrid.nx, 1 / sgrid.nx))[nz[0]].astype(int)) == {2, 8}
        assert set(nz[1].tolist()) == {0}

    def test_grid_mismatch(self, sgrid, grid, rng):
        with pytest.raises(ValueError, match="grids"):
            bilinear_nonlinearity(random_field(sgrid, rng), random_field(grid, rng))

    def test_derivative_kills_mean_column(self, sgrid, rng):
        out = bilinear_nonlinearity(random_field(sgrid, rng), random_field(sgrid, rng))
        assert np.all(out.coeffs[0, :] == 0)


class TestDuhamel:
    def test_zero_input(self, sgrid, params, scfg, rng):
        z = SpectralField.zeros(sgrid)
        traj = free_trajectory(z, params, 0.0, scfg.dt, scfg.n_snapshots)
        u = free_trajectory(random_field(sgrid, rng), params, 0.0, scfg.dt, scfg.n_snapshots)
        out = duhamel(u, traj, None, params, scfg)
        assert np.all(out.data == 0)

    def test_first_snapshot_zero(self, sgrid, params, scfg, rng):
        u = free_trajectory(random_field(sgrid, rng, 0.01), params, 0.0, scfg.dt,
                            scfg.n_snapshots)
        out = duhamel(u, u, None, params, scfg)
        assert np.all(out.data[0] == 0)

    def test_misaligned_rejected(self, sgrid, params, scfg, rng):
        u = free_trajectory(random_field(sgrid, rng), params, 0.0, scfg.dt, 9)
        v = free_trajectory(random_field(sgrid, rng), params, 0.0, scfg.dt, 17)
        with pytest.raises(ValueError, match="aligned"):
            duhamel(u, v, None, params, scfg)

    def test_bilinearity(self, sgrid, params, scfg, rng):
        n = scfg.n_snapshots
        u = free_trajectory(random_field(sgrid, rng, 0.1), params, 0.0, scfg.dt, n)
        v = free_trajectory(random_field(sgrid, rng, 0.1), params, 0.0, scfg.dt, n)
        w = free_trajectory(random_field(sgrid, rng, 0.1), params, 0.0, scfg.dt, n)
        from kp5.propagator import FieldTrajectory
        comb = FieldTrajectory(sgrid, 0.0, scfg.dt, 2.0 * u.data + 3.0 * v.data)
        lhs = duhamel(comb, w, None, params, scfg)
        a = duhamel(u, w, None, params, scfg)
        b = duhamel(v, w, None, params, scfg)
        rhs = 2.0 * a.data + 3.0 * b.data
        scale = np.max(np.abs(rhs)) or 1.0
        assert np.max(np.abs(lhs.data - rhs)) <= 1e-12 * scale

    def test_sharp_cutoff_freezes(self, sgrid, params, scfg, rng):
        u = free_trajectory(random_field(sgrid, rng, 0.01), params, 0.0, scfg.dt,
                            scfg.n_snapshots)
        out = duhamel(u, u, CutoffProfile(2.0, "indicator"), params, scfg)
        m2 = int(round(2.0 / scfg.dt))
        # beyond T the conjugated integral is frozen: values are S(t - 2) of the frozen state
        from kp5.fields import unimodular_phases
        ph = unimodular_phases(sgrid, params.alpha, out.times[-1] - out.times[m2])
        want = out.data[m2] * ph
        got = out.data[-1]
        assert np.max(np.abs(got - want)) <= 1e-12 * max(np.max(np.abs(want)), 1e-30)

    def test_cutoff_off_grid_rejected(self, sgrid, params, scfg, rng):
        u = free_trajectory(random_field(sgrid, rng), params, 0.0, scfg.dt,
                            scfg.n_snapshots)
        with pytest.raises(ValueError, match="sample grid"):
            duhamel(u, u, CutoffProfile(2.01, "indicator"), params, scfg)

    def test_simpson_self_convergence(self, sgrid, params, rng):
        # halving dt reduces the error against a dt/8 reference by >= 8x
        f = make_small_datum(sgrid, rng, 5e-3)
        t_max = 2.0
        outs = {}
        for dt in (0.25, 0.125, 0.03125):
            cfg = SolverConfig(t_max=t_max, dt=dt)
            u = free_trajectory(f, params, 0.0, dt, cfg.n_snapshots)
            outs[dt] = duhamel(u, u, None, params, cfg).final_field()
        ref = outs[0.03125]
        e1 = l2_norm(outs[0.25] - ref)
        e2 = l2_norm(outs[0.125] - ref)
        assert e1 / e2 >= 8.0

    def test_uniform_in_T_constant(self, sgrid, params, rng):
        # spread of the bilinear constant across sharp horizons <= 3
        cfg = SolverConfig(t_max=16.0, dt=0.25)
        consts = []
        for T in (2.0, 4.0, 8.0, 16.0):
            worst = 0.0
            for trial in range(2):
                trng = np.random.default_rng([5, trial])
                u = free_trajectory(make_small_datum(sgrid, trng, 1e-3), params,
                                    0.0, cfg.dt, cfg.n_snapshots)
                v = free_trajectory(make_small_datum(sgrid, trng, 1e-3), params,
                                    0.0, cfg.dt, cfg.n_snapshots)
                out = duhamel(u, v, CutoffProfile(T, "indicator"), params, cfg)
                ratio = ydot_norm(out, -0.5, params) / (
                    ydot_norm(u, -0.5, params) * ydot_norm(v, -0.5, params))
                worst = max(worst, ratio)
            consts.append(worst)
        assert max(consts) / min(consts) <= 3.0


class TestPicard:
    def test_zero_datum_fixed_point(self, sgrid, params, scfg):
        traj, log = picard_solve(SpectralField.zeros(sgrid), params, scfg)
        assert np.all(traj.data == 0)
        assert len(log.rows) == 1

    def test_large_datum_rejected(self, sgrid, params, scfg, rng):
        big = make_small_datum(sgrid, rng, 10 * scfg.small_data_delta)
        with pytest.raises(ValueError, match="small ball"):
            picard_solve(big, params, scfg)

    def test_small_datum_contracts(self, sgrid, params, scfg, rng):
        u0 = make_small_datum(sgrid, rng, 1e-3)
        traj, log = picard_solve(u0, params, scfg)
        assert all(r < 1 for r in log.ratios)
        assert log.diffs[-1] < scfg.picard_tol

    def test_l2_conserved(self, sgrid, params, scfg, rng):
        u0 = make_small_datum(sgrid, rng, 1e-3)
        traj, _ = picard_solve(u0, params, scfg)
        l2s = np.array([l2_norm(traj.field(m)) for m in range(traj.n_snapshots)])
        assert np.max(np.abs(l2s - l2s[0])) <= 1e-6 * l2s[0]

    def test_nonlinearity_disabled_gives_free_wave(self, sgrid, params, scfg, rng):
        u0 = make_small_datum(sgrid, rng, 1e-3)
        traj, _ = picard_solve(u0, params, scfg, nonlinearity_enabled=False)
        free = free_trajectory(u0, params, 0.0, scfg.dt, scfg.n_snapshots)
        assert np.max(np.abs(traj.data - free.data)) == 0.0

    def test_divergence_detected(self, sgrid, params, rng):
        cfg = SolverConfig(t_max=4.0, dt=0.125, picard_tol=1e-12,
                           picard_max_iters=25, small_data_delta=1e4)
        big = make_small_datum(sgrid, rng, 2e2)
        with pytest.raises((DivergenceError, ConvergenceError)):
            with np.errstate(over="ignore", invalid="ignore"):
                picard_solve(big, params, cfg)

    def test_log_csv(self, sgrid, params, scfg, rng, tmp_path):
        u0 = make_small_datum(sgrid, rng, 1e-3)
        _, log = picard_solve(u0, params, scfg)
        path = tmp_path / "log.csv"
        log.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "iter,ydot_diff,zdot_surrogate,l2_at_tmax,wall_ms"
        assert len(lines) == len(log.rows) + 1

    def test_continuity_in_data(self, sgrid, params, scfg):
        rng1 = np.random.default_rng(11)
        u0a = make_small_datum(sgrid, rng1, 1e-3)
        pert = make_small_datum(sgrid, np.random.default_rng(12), 1e-5)
        u0b = u0a + pert
        ta, _ = picard_solve(u0a, params, scfg)
        tb, _ = picard_solve(u0b, params, scfg)
        dd = hm12_norm(u0a - u0b)
        worst = max(hm12_norm(ta.field(m) - tb.field(m))
                    for m in range(ta.n_snapshots))
        assert worst <= 2.0 * dd


class TestFinalValue:
    def test_zero(self, sgrid, params, scfg):
        traj, _ = final_value_solve(SpectralField.zeros(sgrid), params, scfg)
        assert np.all(traj.data == 0)

    def test_nonlinearity_disabled_gives_free_wave(self, sgrid, params, scfg, rng):
        u_plus = make_small_datum(sgrid, rng, 1e-3)
        traj, _ = final_value_solve(u_plus, params, scfg, nonlinearity_enabled=False)
        free = free_trajectory(u_plus, params, 0.0, scfg.dt, scfg.n_snapshots)
        assert np.max(np.abs(traj.data - free.data)) == 0.0

    def test_matched_inverse_of_forward(self, sgrid, params, scfg, rng):
        from kp5.fields import unimodular_phases
        u0 = make_small_datum(sgrid, rng, 1e-3)
        fwd, _ = picard_solve(u0, params, scfg)
        u_plus_c = fwd.data[-1] * np.conj(
            unimodular_phases(sgrid, params.alpha, fwd.times[-1]))
        from kp5.fields import hermitianize
        u_plus = SpectralField(sgrid, hermitianize(sgrid, u_plus_c))
        back, _ = final_value_solve(u_plus, params, scfg)
        rec = back.field(0)
        assert hm12_norm(rec - u0) <= 1e-9 * hm12_norm(u0)
