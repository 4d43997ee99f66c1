"""Batch experiment runner: ``kp5 <experiment> [--key=value ...] [--config path] --out dir``.

Every run writes a manifest (config echo, package version, wall time) plus the
experiment's CSV/JSON artifacts into the output directory.  Exit status is 0
on pass, 2 on a failed numerical assertion (diagnostics still written), and 1
on usage errors.  With a fixed seed every emitted byte is deterministic except
the wall-time fields of the manifest.
"""

from __future__ import annotations

import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, calibration, lab, norms
from .fields import DispersionParams, Grid
from .fileio import write_trajectory
from .kernel import gaussian_column_response, kernel_gn
from .propagator import DyadicLadder
from .scattering import extract_asymptote, inverse_wave_operator, scattering_report
from .solver import ConvergenceError, DivergenceError, SolverConfig, picard_solve

EXPERIMENTS = (
    "solve", "scatter", "roundtrip", "strichartz", "bilinear", "resonance",
    "modulation", "kernel", "tailshrink", "norms-selftest",
)


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    output_dir: str
    nx: int = 256
    ny: int = 256
    lx: float = 16 * math.pi
    ly: float = 16 * math.pi
    alpha: float = 1.0
    t_max: float = 64.0
    dt: float = 0.25
    small_data_delta: float = 1e-3
    picard_tol: float = 1e-6
    seed: int = 42
    trials: int = 2

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {self.experiment!r}; "
                             f"choose one of {', '.join(EXPERIMENTS)}")
        if self.alpha <= 0:
            raise UsageError("alpha > 0 required")
        for key in ("t_max", "dt", "small_data_delta", "picard_tol", "lx", "ly"):
            if getattr(self, key) <= 0:
                raise UsageError(f"{key} must be positive")
        if self.nx < 2 or self.ny < 2:
            raise UsageError("grid sizes must be at least 2")
        if self.seed < 0 or self.trials < 1:
            raise UsageError("seed must be >= 0 and trials >= 1")

    def grid(self) -> Grid:
        return Grid(self.nx, self.ny, self.lx, self.ly)

    def params(self) -> DispersionParams:
        return DispersionParams(alpha=self.alpha)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(t_max=self.t_max, dt=self.dt,
                            picard_tol=self.picard_tol,
                            small_data_delta=self.small_data_delta)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _coerce(key: str, value: str):
    typ = _FIELD_TYPES[key]
    try:
        if typ == "int":
            return int(value)
        if typ == "float":
            return float(value)
        return value
    except ValueError as exc:
        raise UsageError(f"malformed value for {key!r}: {value!r}") from exc


def parse_config(argv: list[str]) -> ExperimentConfig:
    """First positional token is the experiment; remaining tokens are
    --key=value overrides, --config FILE (flat key=value lines, flags win),
    and --out DIR."""
    if not argv:
        raise UsageError("missing experiment name")
    experiment = argv[0]
    file_values: dict = {}
    flag_values: dict = {}
    out_dir = None
    config_path = None
    i = 1
    while i < len(argv):
        tok = argv[i]
        if tok in ("--config", "--out"):
            if i + 1 >= len(argv):
                raise UsageError(f"{tok} requires a value")
            if tok == "--config":
                config_path = argv[i + 1]
            else:
                out_dir = argv[i + 1]
            i += 2
            continue
        if tok.startswith("--config="):
            config_path = tok.split("=", 1)[1]
        elif tok.startswith("--out="):
            out_dir = tok.split("=", 1)[1]
        elif tok.startswith("--") and "=" in tok:
            key, value = tok[2:].split("=", 1)
            if key not in _FIELD_TYPES or key in ("experiment", "output_dir"):
                raise UsageError(f"unknown key {key!r}")
            flag_values[key] = _coerce(key, value)
        else:
            raise UsageError(f"unrecognized argument {tok!r}")
        i += 1
    if config_path is not None:
        text = Path(config_path).read_text()
        for ln, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{config_path}:{ln}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _FIELD_TYPES or key in ("experiment", "output_dir"):
                raise UsageError(f"unknown key {key!r} in config file")
            file_values[key] = _coerce(key, value)
    if out_dir is None:
        raise UsageError("missing required --out directory")
    merged = {**file_values, **flag_values}
    return ExperimentConfig(experiment=experiment, output_dir=out_dir, **merged)


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                              for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _summary(out: Path, cfg: ExperimentConfig, statistic, passed: bool, extra=None):
    obj = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "params": {k: getattr(cfg, k) for k in _FIELD_TYPES},
        "statistic": statistic,
        "pass": bool(passed),
    }
    if extra:
        obj.update(extra)
    _write_json(out / "summary.json", obj)
    return passed


def _run_solve(cfg: ExperimentConfig, out: Path) -> bool:
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.grid()
    params = cfg.params()
    u0 = lab.make_small_datum(grid, rng, 0.999 * cfg.small_data_delta)
    traj, log = picard_solve(u0, params, cfg.solver_config())
    write_trajectory(traj, out / "solution.kp5t")
    log.to_csv(out / "picard_log.csv")
    rep = norms.NormReport()
    rep.set("L2", norms.l2_norm(u0))
    rep.set("Hm12", norms.hm12_norm(u0))
    rep.set(norms.key_ydot(-0.5), norms.ydot_norm(traj, -0.5, params))
    (out / "norms.json").write_text(rep.to_json() + "\n")
    final_diff = log.diffs[-1]
    ok = final_diff < cfg.picard_tol and all(r < 1 for r in log.ratios)
    return _summary(out, cfg, {"final_ydot_diff": final_diff}, ok)


def _run_scatter(cfg: ExperimentConfig, out: Path) -> bool:
    rng = np.random.default_rng(cfg.seed)
    u0 = lab.make_small_datum(cfg.grid(), rng, 0.999 * cfg.small_data_delta)
    rep = scattering_report(u0, cfg.params(), cfg.solver_config())
    _write_json(out / "scatter_report.json", rep)
    _write_csv(out / "cauchy.csv", "time,diff",
               list(zip(rep["cauchy_times"][1:], rep["cauchy_log"])))
    d = rep["cauchy_log"]
    decreasing = all(d[i + 1] < d[i] for i in range(len(d) - 4, len(d) - 1))
    ok = (decreasing and d[-1] < 1e-4 * rep["u0_norms"]["Hm12"]
          and rep["l2_defect"] < 1e-5)
    return _summary(out, cfg, {"final_cauchy_diff": d[-1],
                               "l2_defect": rep["l2_defect"]}, ok)


def _run_roundtrip(cfg: ExperimentConfig, out: Path) -> bool:
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.grid()
    params = cfg.params()
    u0 = lab.make_small_datum(grid, rng, 0.999 * cfg.small_data_delta)
    h0 = norms.hm12_norm(u0)

    def cfg_at(tm):
        return SolverConfig(t_max=tm, dt=cfg.dt, picard_tol=cfg.picard_tol,
                            small_data_delta=cfg.small_data_delta)

    # matched round trip at t_max/2
    half = cfg_at(cfg.t_max / 2)
    traj, _ = picard_solve(u0, params, half)
    u_plus, _ = extract_asymptote(traj, "plus", params)
    u0_rec = inverse_wave_operator(u_plus, "plus", params, half)
    matched = norms.hm12_norm(u0_rec - u0) / h0

    # tail defect against the long-horizon reference asymptote
    ref_traj, _ = picard_solve(u0, params, cfg_at(cfg.t_max))
    u_plus_ref, _ = extract_asymptote(ref_traj, "plus", params)
    defects = []
    for tm in (cfg.t_max / 4, cfg.t_max / 2):
        rec = inverse_wave_operator(u_plus_ref, "plus", params, cfg_at(tm))
        defects.append(norms.hm12_norm(rec - u0) / h0)
    halving = defects[0] / defects[1]
    ok = matched < 5e-3 and 1.4 <= halving <= 2.6
    _write_csv(out / "roundtrip.csv", "t_max,defect",
               [(cfg.t_max / 4, defects[0]), (cfg.t_max / 2, defects[1])])
    return _summary(out, cfg, {"matched_defect": matched, "halving": halving}, ok)


def _run_strichartz(cfg: ExperimentConfig, out: Path) -> bool:
    params = cfg.params()
    hi = lab.strichartz_scaling_experiment((4., 8., 16., 32., 64.), (4., 4.),
                                           cfg.trials, params, cfg.seed)
    lo = lab.strichartz_scaling_experiment((1 / 16., 1 / 8., 1 / 4.), (4., 4.),
                                           cfg.trials, params, cfg.seed)
    _write_csv(out / "strichartz.csv", "band,trial,norm,tail_fraction",
               hi.rows + lo.rows)
    ok = hi.ok and lo.ok
    return _summary(out, cfg, {"quintic_slope": hi.slope, "cubic_slope": lo.slope,
                               "expected": [hi.expected_slope, lo.expected_slope]}, ok)


def _run_bilinear(cfg: ExperimentConfig, out: Path) -> bool:
    res = lab.bilinear_ratio_sweep(cfg.trials, cfg.params(), cfg.seed)
    _write_csv(out / "bilinear.csv", "N1,N2,trial,ratio_bs1,ratio_sharp", res.rows)
    return _summary(out, cfg, {"spread": res.spread,
                               "sharp_means": list(res.sharp_mean)}, res.ok)


def _run_resonance(cfg: ExperimentConfig, out: Path) -> bool:
    res = lab.resonance_batch(10_000, cfg.params(), cfg.seed)
    _write_csv(out / "resonance.csv",
               "n,max_residual,sign_violations,nu_range_violations",
               [(res.n, res.max_residual, res.sign_violations, res.nu_range_violations)])
    return _summary(out, cfg, {"max_residual": res.max_residual,
                               "sign_violations": res.sign_violations,
                               "nu_range_violations": res.nu_range_violations}, res.ok)


def _run_modulation(cfg: ExperimentConfig, out: Path) -> bool:
    failures, min_slack = lab.modulation_bounds_batch(10_000, cfg.params(), cfg.seed)
    rows = [(str(f.triple.xi), str(f.bands), min(f.slacks)) for f in failures]
    _write_csv(out / "modulation_failures.csv", "xi,bands,worst_slack", rows)
    return _summary(out, cfg, {"violations": len(failures),
                               "min_slack": min_slack}, len(failures) == 0)


def _run_kernel(cfg: ExperimentConfig, out: Path) -> bool:
    params = cfg.params()
    rows = []
    worst = 0.0
    for N in (4.0, 8.0, 16.0, 32.0, 64.0):
        for t in (1.0, 2.0, 4.0, 8.0):
            for frac in (0.55, 0.8, 1.1, 1.6):
                xs = frac * N
                u = -t * (5 * xs**4 + 3 * params.alpha * xs**2)
                g = kernel_gn(N, u, 0.0, t, params, epsrel=1e-6).real
                rows.append((N, t, u, g, abs(g) * t * N))
                worst = max(worst, abs(g) * t * N)
    _write_csv(out / "kernel_decay.csv", "N,t,u,G,G_t_N", rows)

    # consistency of the quadrature path against the FFT path
    grid = Grid(1024, 256, 256.0, 64.0)
    N, t = 4.0, 0.02
    sy = 3.0 * grid.ly / grid.ny
    err2 = ref2 = 0.0
    p = np.asarray(lab.symbol_grid(grid, params.alpha))
    ys = (grid.ly / grid.ny) * np.arange(grid.ny)
    x0, y0 = grid.lx / 2, grid.ly / 2
    phys = np.zeros(grid.shape)
    phys[grid.nx // 2, :] = np.exp(-((ys - y0) ** 2) / (2 * sy**2)) / (grid.lx / grid.nx)
    from .fields import to_spectral
    from .propagator import lp_project, propagate
    field = lp_project(to_spectral(phys, grid), N)
    evolved = propagate(field, t, params)
    out_phys = np.fft.ifft2(evolved.coeffs).real * (grid.nx * grid.ny)
    for dx in (-100.0, -60.0, -30.0, -10.0, -3.0, 0.0, 4.0):
        for dy in (0.0, 1.5):
            acc = sum(gaussian_column_response(N, dx + n_im * grid.lx, dy, t, sy,
                                               1.0, params)
                      for n_im in range(-3, 2))
            ix = int(round((x0 + dx) / (grid.lx / grid.nx))) % grid.nx
            iy = int(round((y0 + dy) / (grid.ly / grid.ny))) % grid.ny
            a = out_phys[ix, iy]
            err2 += (a - acc) ** 2
            ref2 += a**2
    consistency = math.sqrt(err2 / ref2)
    ok = worst <= calibration.KERNEL_DECAY_C and consistency < 1e-6
    return _summary(out, cfg, {"max_G_t_N": worst, "frozen_C": calibration.KERNEL_DECAY_C,
                               "consistency_rel_l2": consistency}, ok)


def _run_tailshrink(cfg: ExperimentConfig, out: Path) -> bool:
    params = cfg.params()
    phi, _ = lab.make_tailshrink_packet(cfg.seed)
    res = lab.tail_shrink_experiment(phi, 1.0, (8.0, 16.0, 24.0, 31.0), params)
    _write_csv(out / "tailshrink.csv", "T,low_l4,high_l4",
               list(zip(res.T_values, res.low_curve, res.high_curve)))
    final = max(res.low_curve[-1], res.high_curve[-1])
    ok = res.strictly_decreasing and final < 0.05 * res.phi_l2
    return _summary(out, cfg, {"final_l4_over_l2": final / res.phi_l2,
                               "decreasing": res.strictly_decreasing}, ok)


def _run_norms_selftest(cfg: ExperimentConfig, out: Path) -> bool:
    rng = np.random.default_rng(cfg.seed)
    mismatches = 0
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 13))
        d = int(rng.integers(1, 6))
        vals = tuple(rng.standard_normal(d) + 1j * rng.standard_normal(d)
                     for _ in range(n))
        path = norms.SampledPath(vals)
        a = norms.v2_variation(path)
        b = lab.v2_variation_bruteforce(path)
        if a != b:
            mismatches += 1
            worst = max(worst, abs(a - b))
    return _summary(out, cfg, {"mismatches": mismatches, "worst_abs_diff": worst},
                    mismatches == 0)


_RUNNERS = {
    "solve": _run_solve,
    "scatter": _run_scatter,
    "roundtrip": _run_roundtrip,
    "strichartz": _run_strichartz,
    "bilinear": _run_bilinear,
    "resonance": _run_resonance,
    "modulation": _run_modulation,
    "kernel": _run_kernel,
    "tailshrink": _run_tailshrink,
    "norms-selftest": _run_norms_selftest,
}


def run(cfg: ExperimentConfig) -> int:
    out = Path(cfg.output_dir)
    if not out.parent.exists():
        raise UsageError(f"parent of output directory {out} does not exist")
    out.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()
    status = 0
    try:
        passed = _RUNNERS[cfg.experiment](cfg, out)
        status = 0 if passed else 2
    except (DivergenceError, ConvergenceError, RuntimeError) as exc:
        _write_json(out / "failure.json", {"error": type(exc).__name__,
                                           "message": str(exc)})
        status = 2
    manifest = {
        "config": {k: getattr(cfg, k) for k in _FIELD_TYPES},
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - t_start, 3),
        "status": status,
    }
    _write_json(out / "manifest.json", manifest)
    return status


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        print(f"usage: kp5 <experiment> [--key=value ...] [--config path] --out dir",
              file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
