"""
The experiment registry: every CLI subcommand runs one function here,
writes its CSV tables and returns the checks recorded in the manifest.
"""
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from pinsim import __version__
from pinsim.coarse_grain import MesoGrid, cg_convergence_experiment, \
    no_triple_gap_experiment, no_triple_l2_distance, theta_moment_experiment
from pinsim.continuum_kernels import QuadratureScheme, default_scheme, \
    hitting_moment, make_test_function, pairings
from pinsim.dickman import DickmanDensity, GThetaTable, build_ubar, \
    dickman_grid, dickman_tail_bound, gtheta_asymptotic_ratios, \
    gtheta_renewal_identity, sample_dickman_renewal
from pinsim.disorder import parse_disorder_law, solve_critical_beta, zeta_fields
from pinsim.ensemble import MCEstimate, run_ensemble
from pinsim.partition import annealed_free_energy, build_partition_table, \
    chaos_eval, decomposition_identity_check, exact_second_moment, \
    free_energy_estimate, pin_partition, point_to_line_partition, \
    polymer_kernels, polymer_measure_integral, v1_theta
from pinsim.she_continuum import continuum_window, make_mollifier, she_mc, \
    she_second_moment_limit, she_second_moment_semianalytic, \
    vartheta_from_theta
from pinsim.utils import canonical_hash, euler_gamma, mylog, read_table, \
    write_table
from pinsim.walks import K_asymptotics_check, load_or_build_kernel_table, \
    validate_step_law

manifest_suffix = ".manifest.json"


@dataclass
class Check:
    """One named pass/fail assertion of a run."""
    name: str
    value: float
    threshold: float
    passed: bool
    comparison: str = "<"

    @classmethod
    def below(cls, name, value, threshold):
        value = float(value)
        return cls(name, value, float(threshold), bool(value < threshold), "<")

    @classmethod
    def above(cls, name, value, threshold):
        value = float(value)
        return cls(name, value, float(threshold), bool(value > threshold), ">")

    @classmethod
    def decreasing(cls, name, values):
        values = np.asarray(values, dtype="float64")
        steps = np.diff(values)
        worst = float(steps.max()) if steps.size else -np.inf
        return cls(name, worst, 0.0, bool(np.all(steps < 0.0)), "max step <")

    def as_dict(self):
        return {"name": self.name, "value": self.value,
                "threshold": self.threshold, "passed": self.passed,
                "comparison": self.comparison}


@dataclass
class ExperimentResult:
    checks: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def table(self, out_dir, name, columns, meta=None):
        fn = write_table(Path(out_dir) / f"{name}.csv", columns, meta=meta)
        self.outputs.append(fn.name)
        return fn

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def cache_dir():
    return os.environ.get("PINSIM_CACHE_DIR")


def _kernel_table(config, n_max):
    return load_or_build_kernel_table(config.step_law, n_max, cache_dir=cache_dir())


def _gtheta_table(vartheta, t_max=4.0):
    cache = cache_dir()
    if cache is None:
        return GThetaTable(vartheta, t_max=t_max)
    fn = Path(cache) / f"gtheta_{vartheta:+.6f}_{t_max:g}.h5"
    if fn.exists():
        mylog.info(f"Reading G_theta table from {fn}.")
        return GThetaTable.from_hdf5(fn, vartheta=vartheta)
    table = GThetaTable(vartheta, t_max=t_max)
    fn.parent.mkdir(parents=True, exist_ok=True)
    table.to_hdf5(fn, overwrite=True)
    return table


def _test_function(entry):
    return make_test_function(entry.name, **entry.params)


def _disorder_entry(config):
    # name and params travel to worker processes instead of the law object
    return {"name": config.disorder.name, "params": dict(config.disorder.params)}


def run_validate_walk(config, out_dir):
    sec = config.walk
    res = ExperimentResult()
    report = validate_step_law(config.step_law)
    res.table(out_dir, "walk_moments",
              {"quantity": ["mean", "variance", "third_moment", "fourth_moment",
                            "span", "period"],
               "value": [float(report.mean), float(report.variance),
                         float(report.third_moment), float(report.fourth_moment),
                         float(report.span), float(report.period)]},
              meta={"law": report.name, "exact": report.exact})
    res.checks.append(Check.below("moment_violations", len(report.violations), 1))
    res.info["violations"] = report.violations
    if not report.accepted:
        return res
    table = _kernel_table(config, sec.n_max)
    K = K_asymptotics_check(table, n_min=min(sec.n_min, sec.n_max))
    res.table(out_dir, "first_return_ratio", {"n": K.n, "ratio": K.ratio},
              meta={"law": report.name})
    res.checks.append(Check.below("first_return_residual",
                                  table.first_return_residual(), 1.0e-12))
    res.checks.append(Check("K_asymptotics", float(K.ratio[-1]), K.bounds[1],
                            K.passed, "in bounds"))
    return res


def run_kernels(config, out_dir):
    sec = config.kernels
    res = ExperimentResult()
    table = _kernel_table(config, sec.n_max)
    fn = table.write_csv(Path(out_dir) / "kernels.csv", stride=sec.stride)
    res.outputs.append(Path(fn).name)
    K = K_asymptotics_check(table, bounds=tuple(sec.ratio_bounds))
    res.checks.append(Check.below("first_return_residual",
                                  table.first_return_residual(), 1.0e-10))
    res.checks.append(Check.below("first_return_mass", K.total_mass, 1.0 + 1.0e-12))
    res.checks.append(Check.above("first_return_min", K.min_value, -1.0e-15))
    n = np.array([n for n in (10, 100, 1000, 10000, 100000) if n <= table.n_max])
    res.info["R_over_log"] = dict(zip(n.tolist(),
                                      (2.0 * np.pi * table.R[n] / np.log(n)).tolist()))

    rows = {"k": [], "s": [], "quadrature": [], "exact": [], "relative": []}
    for k in range(7):
        for s in (0.25, 0.5, 1.0):
            value, exact = hitting_moment(k, s)
            for key, v in (("k", k), ("s", s), ("quadrature", value),
                           ("exact", exact), ("relative", abs(value / exact - 1.0))):
                rows[key].append(v)
    res.table(out_dir, "hitting_moments", rows)
    res.checks.append(Check.below("hitting_moments", max(rows["relative"]), 1.0e-8))
    return res


def run_beta(config, out_dir):
    sec = config.beta
    res = ExperimentResult()
    table = _kernel_table(config, max(sec.N))
    law = parse_disorder_law(_disorder_entry(config))
    rows = [solve_critical_beta(law, N, sec.vartheta, table.R[N]).as_dict()
            for N in sorted(sec.N)]
    cols = {k: [r[k] for r in rows] for k in ("N", "R_N", "sigma2", "beta",
                                              "lambda_N", "residual")}
    res.table(out_dir, "critical_beta", cols,
              meta={"law": law.name, "vartheta": sec.vartheta})
    res.checks.append(Check.below("max_residual_relative",
                                  max(r["residual"] / r["sigma2"] for r in rows),
                                  1.0e-12))
    if len(rows) > 1:
        res.checks.append(Check.decreasing("beta_decreasing_in_N", cols["beta"]))
    return res


def run_partition(config, out_dir):
    sec = config.partition
    res = ExperimentResult()
    law = _disorder_entry(config)
    table = _kernel_table(config, max(sec.N, sec.compare_N))
    window = solve_critical_beta(law, sec.N, sec.vartheta, table.R[sec.N])
    phi, psi = _test_function(config.phi), _test_function(config.psi)
    fields = zeta_fields(law, window.beta, sec.N, config.seed, sec.n_fields)
    kernels = polymer_kernels(sec.N, phi, psi, table)
    gap = decomposition_identity_check(fields, kernels)
    res.checks.append(Check.below("decomposition_gap", gap, sec.tolerance))

    cw = solve_critical_beta(law, sec.compare_N, sec.vartheta, table.R[sec.compare_N])
    cf = zeta_fields(law, cw.beta, sec.compare_N, config.seed, 10)
    chaos = chaos_eval(cf, sec.compare_N, table)
    ptl = point_to_line_partition(cf, sec.compare_N, table)
    rel = np.abs(chaos - ptl) / np.abs(chaos)
    res.table(out_dir, "point_to_line",
              {"field": cf.streams, "chaos": chaos, "first_last_visit": ptl,
               "relative_gap": rel},
              meta={"N": sec.compare_N, "beta": cw.beta})
    res.checks.append(Check.below("chaos_vs_first_last_visit", rel.max(), 1.0e-12))
    quenched = free_energy_estimate(law, cw.beta, 0.0, sec.compare_N, sec.n_fields,
                                    config.seed, table, workers=config.workers)
    annealed = annealed_free_energy(0.0, sec.compare_N, table)
    res.checks.append(Check.below("jensen_bound_sigmas",
                                  (quenched.mean - annealed) / quenched.stderr, 3.0))
    res.info.update(quenched_free_energy=quenched.as_dict(),
                    annealed_free_energy=annealed)

    small = zeta_fields(law, window.beta, sec.brute_N, config.seed, 1).row(0)
    pt = build_partition_table(small, sec.brute_N, table)
    direct = np.array([pin_partition(small, m, n, table)
                       for m in range(sec.brute_N + 1)
                       for n in range(m, sec.brute_N + 1)])
    m, n = np.triu_indices(sec.brute_N + 1)
    fn = pt.write_csv(Path(out_dir) / "partition_table.csv")
    res.outputs.append(Path(fn).name)
    res.checks.append(Check.below("table_vs_pin_partition",
                                  np.max(np.abs(pt.Z[m, n] - direct) / direct),
                                  1.0e-12))
    return res


def _polymer_chunk(first, count, law, beta, kernels, seed):
    fields = zeta_fields(law, beta, kernels.N, seed, count, first=first)
    return polymer_measure_integral(fields, kernels)


def run_moments(config, out_dir):
    sec = config.moments
    res = ExperimentResult()
    law = _disorder_entry(config)
    Ns = sorted(sec.N)
    table = _kernel_table(config, max(Ns + [sec.mc_N]))
    phi, psi = _test_function(config.phi), _test_function(config.psi)
    scheme = QuadratureScheme(abs_tol=config.quadrature.abs_tol,
                              rel_tol=config.quadrature.rel_tol)
    g = pairings(phi, psi, scheme=scheme).phi_psi
    gtheta = _gtheta_table(sec.vartheta)
    limit = g ** 2 + v1_theta(phi, psi, gtheta)
    rows = {"N": [], "q": [], "g": [], "mean_gap": [], "second_moment": [],
            "limit": [], "limit_gap": []}
    for N in Ns:
        window = solve_critical_beta(law, N, sec.vartheta, table.R[N])
        kernels = polymer_kernels(N, phi, psi, table)
        ubar = build_ubar(N, window.sigma2, table)
        m2 = exact_second_moment(kernels, ubar)
        for k, v in (("N", N), ("q", kernels.q), ("g", g),
                     ("mean_gap", abs(kernels.q - g) / abs(g)),
                     ("second_moment", m2), ("limit", limit),
                     ("limit_gap", abs(m2 - limit))):
            rows[k].append(v)
    res.table(out_dir, "moments", rows, meta={"vartheta": sec.vartheta})
    res.checks.append(Check.below("mean_relative_gap", rows["mean_gap"][-1], 0.02))
    if len(Ns) > 1:
        res.checks.append(Check.decreasing("second_moment_limit_gap",
                                           rows["limit_gap"]))

    window = solve_critical_beta(law, sec.mc_N, sec.vartheta, table.R[sec.mc_N])
    kernels = polymer_kernels(sec.mc_N, phi, psi, table)
    ubar = build_ubar(sec.mc_N, window.sigma2, table)
    exact = exact_second_moment(kernels, ubar)
    t0 = time.perf_counter()
    vals = run_ensemble(_polymer_chunk, sec.samples, workers=config.workers,
                        desc="Sampling polymer integrals", law=law,
                        beta=window.beta, kernels=kernels, seed=config.seed)
    wall = time.perf_counter() - t0
    mean = MCEstimate.from_samples(vals, keep=False, seed=config.seed, wall_time=wall)
    second = MCEstimate.from_samples(vals ** 2, keep=False, seed=config.seed,
                                     wall_time=wall)
    res.table(out_dir, "polymer_samples",
              {"sample": np.arange(vals.size), "value": vals},
              meta={"N": sec.mc_N, "beta": window.beta})
    res.checks.append(Check.below("mc_mean_sigmas",
                                  abs(mean.mean - kernels.q) / mean.stderr, sec.n_sigma))
    res.checks.append(Check.below("mc_second_moment_sigmas",
                                  abs(second.mean - exact) / second.stderr, sec.n_sigma))
    res.info.update(mean=mean.as_dict(), second_moment=second.as_dict(),
                    exact_second_moment=exact)
    return res


def run_dickman(config, out_dir):
    sec = config.dickman
    res = ExperimentResult()
    t = np.linspace(0.0, sec.t_max, sec.n_t)[1:]
    grid = dickman_grid(sec.s_values, t)
    fn = grid.write_csv(Path(out_dir) / "dickman_density.csv")
    res.outputs.append(Path(fn).name)
    unit = DickmanDensity(1.0, t_max=2.0)
    head = np.linspace(1.0e-6, 1.0, 1001)
    res.checks.append(Check.below("f1_constant_head",
                                  np.abs(unit(head) - np.exp(-euler_gamma)).max(),
                                  1.0e-10))
    for s in sec.s_values:
        top = sec.t_max
        while dickman_tail_bound(s, top) > 1.0e-8 and top < 64.0:
            top += 1.0
        mass, tail = DickmanDensity(s, t_max=top).normalization()
        res.checks.append(Check.below(f"normalization_s{s:g}",
                                      abs(mass - 1.0) - tail, 1.0e-6))
    # f_1(t) = e^{-gamma}(1 - log t) on [1, 2]
    mid = np.linspace(1.0 + 1.0e-6, 2.0, 501)
    closed = np.exp(-euler_gamma) * (1.0 - np.log(mid))
    res.checks.append(Check.below("continuation_vs_closed_form",
                                  np.abs(unit(mid) - closed).max(), 1.0e-8))
    for s in sec.s_values:
        base = DickmanDensity(s, t_max=2.0)
        fine = DickmanDensity(s, t_max=2.0, order=2 * base.order,
                              levels=2 * base.levels)
        res.checks.append(Check.below(f"continuation_vs_refined_s{s:g}",
                                      np.abs(base(mid) - fine(mid)).max(), 1.0e-8))

    table = _kernel_table(config, sec.renewal_N)
    sample = sample_dickman_renewal(sec.renewal_N, sec.renewal_s, sec.samples,
                                    config.seed, table, workers=config.workers)
    res.table(out_dir, "dickman_renewal",
              {"sample": np.arange(sample.values.size), "value": sample.values},
              meta={"N": sample.N, "s": sample.s, "steps": sample.steps})
    res.checks.append(Check.below("renewal_ks", sample.ks_matched, sec.ks_threshold))
    res.info["renewal"] = sample.as_dict()
    return res


def run_gtheta(config, out_dir):
    sec = config.gtheta
    res = ExperimentResult()
    gt = _gtheta_table(sec.vartheta, sec.t_max)
    fn = gt.write_csv(Path(out_dir) / "gtheta.csv")
    res.outputs.append(Path(fn).name)
    rows = {"t": [], "tbar": [], "lhs": [], "rhs": [], "relative": []}
    for t, tbar in sec.identity_points:
        lhs, rhs = gtheta_renewal_identity(gt, t, tbar)
        for k, v in (("t", t), ("tbar", tbar), ("lhs", lhs), ("rhs", rhs),
                     ("relative", abs(lhs - rhs) / abs(lhs))):
            rows[k].append(v)
    res.table(out_dir, "gtheta_renewal_identity", rows,
              meta={"vartheta": sec.vartheta})
    res.checks.append(Check.below("renewal_identity", max(rows["relative"]),
                                  sec.rel_tol))
    ts = np.sort(np.asarray(sec.asymptotic_t))[::-1]
    density, cumulative = gtheta_asymptotic_ratios(gt, ts)
    res.table(out_dir, "gtheta_asymptotics",
              {"t": ts, "density_ratio": density, "cumulative_ratio": cumulative})
    res.checks.append(Check.below("asymptotic_ratio_deviation",
                                  abs(density[-1] - 1.0), 0.3))
    if ts.size > 1:
        res.checks.append(Check.decreasing("asymptotic_ratio_trend",
                                           np.abs(density - 1.0)))

    Ns = sorted(sec.ubar_N)
    table = _kernel_table(config, max(Ns))
    law = parse_disorder_law(_disorder_entry(config))
    dev = []
    for N in Ns:
        window = solve_critical_beta(law, N, sec.vartheta, table.R[N])
        ubar = build_ubar(N, window.sigma2, table)
        dev.append(ubar.ratio_deviation(gt))
    res.table(out_dir, "ubar_vs_gtheta", {"N": Ns, "sup_ratio_deviation": dev},
              meta={"vartheta": sec.vartheta})
    if len(Ns) > 1:
        res.checks.append(Check.decreasing("ubar_deviation_trend", dev))
    return res


def run_cg(config, out_dir):
    sec = config.cg
    res = ExperimentResult()
    law = _disorder_entry(config)
    phi, psi = _test_function(config.phi), _test_function(config.psi)
    Ns = sorted(sec.N)
    table = _kernel_table(config, max(Ns + [sec.theta_N, sec.l2_N]))

    grid = MesoGrid(sec.theta_N, sec.eps[0], sec.K, sec.r_max)
    res.info["theta_grid"] = grid.as_dict()
    window = solve_critical_beta(law, grid.N, sec.vartheta, table.R[grid.N])
    report = theta_moment_experiment(law, window.beta, grid, sec.samples,
                                     config.seed, table, workers=config.workers)
    rows = report.rows()
    res.table(out_dir, "theta_moments",
              {k: [r[k] for r in rows] for k in rows[0]},
              meta=grid.as_dict())
    z = [abs(c.mean) / c.stderr for c in report.covariances.values() if c.stderr > 0]
    within = float(np.mean(np.asarray(z) < 3.0)) if z else 1.0
    res.checks.append(Check.above("disjoint_covariance_within_3sigma", within, 0.9))
    m2 = [abs(r["m2"] - r["m2_exact"]) / max(r["m2_stderr"], 1.0e-300) for r in rows]
    res.checks.append(Check.above("theta_variance_within_3sigma",
                                  float(np.mean(np.asarray(m2) < 3.0)), 0.9))

    kernels = polymer_kernels(sec.l2_N, phi, psi, table)
    window = solve_critical_beta(law, sec.l2_N, sec.vartheta, table.R[sec.l2_N])
    sigma2 = window.sigma2
    ubar = build_ubar(sec.l2_N, sigma2, table)
    dist = {"inv_eps": [], "K": [], "r_max": [], "exact": [], "empirical": [],
            "empirical_stderr": []}
    for eps in sorted(sec.eps, reverse=True):
        g = MesoGrid(sec.l2_N, eps, sec.K, sec.r_max)
        gap = no_triple_gap_experiment(law, window.beta, g, kernels, sec.samples,
                                       config.seed, r_max=sec.r_max,
                                       workers=config.workers)
        for k, v in (("inv_eps", round(1.0 / eps)), ("K", g.K), ("r_max", g.r_max),
                     ("exact", no_triple_l2_distance(g, kernels, sigma2, ubar, sec.r_max)),
                     ("empirical", np.sqrt(gap.mean)),
                     ("empirical_stderr", 0.5 * gap.stderr / max(np.sqrt(gap.mean), 1.0e-300))):
            dist[k].append(v)
    res.table(out_dir, "no_triple_distance", dist, meta={"N": sec.l2_N})
    if len(sec.eps) > 1:
        res.checks.append(Check.decreasing("no_triple_distance_trend", dist["exact"]))
        res.checks.append(Check.decreasing("no_triple_empirical_trend",
                                           dist["empirical"]))

    conv = cg_convergence_experiment(sec.eps[0], sec.K, Ns, phi, psi, law,
                                     sec.vartheta, sec.samples, config.seed,
                                     table, repetitions=sec.repetitions,
                                     workers=config.workers)
    ks_rows = conv.rows()
    res.table(out_dir, "cg_ks", {k: [r[k] for r in ks_rows] for k in ks_rows[0]},
              meta={"eps": sec.eps[0], "K": sec.K, "repetitions": sec.repetitions})
    sig = [abs(m.mean - conv.g1) / m.stderr for m in conv.means.values()]
    res.checks.append(Check.below("cg_mean_sigmas", max(sig), 3.0))
    if len(Ns) > 2:
        pairs = [conv.ks[(a, b)] for a, b in zip(Ns[:-1], Ns[1:])]
        res.checks.append(Check.decreasing("cg_ks_trend", pairs))
    else:
        mylog.warning(f"The KS trend needs at least 3 values of N, got {len(Ns)}.")
        res.checks.append(Check("cg_ks_trend", float(len(Ns)), 3.0, False, ">="))
    return res


def _she_renewal_steps(sec, delta):
    # the renewal grid spacing in microscopic time stays below max_dT
    return max(sec.n_steps, 2 * int(np.ceil(0.5 * delta ** -2 / sec.max_dT)))


def run_she(config, out_dir):
    sec = config.she
    res = ExperimentResult()
    rho = make_mollifier(sec.mollifier)
    rho.check()
    f = _test_function(config.f)
    slope = vartheta_from_theta(sec.theta + 1.0, rho) - vartheta_from_theta(sec.theta, rho)
    res.checks.append(Check.below("vartheta_slope", abs(slope - 0.5 / np.pi), 1.0e-12))
    deltas = np.sqrt(sorted(sec.delta2, reverse=True))
    rows = {"delta2": [], "beta": [], "vartheta": [], "R_delta": [],
            "consistency_gap": [], "variance": [], "limit": [],
            "discretization_error": []}
    limit = None
    for d in deltas:
        w = continuum_window(d, sec.theta, rho)
        m2 = she_second_moment_semianalytic(d, sec.theta, f, rho,
                                            _she_renewal_steps(sec, d))
        if limit is None:
            limit = she_second_moment_limit(w.vartheta, f)
        for k, v in (("delta2", d * d), ("beta", w.beta), ("vartheta", w.vartheta),
                     ("R_delta", w.R_delta), ("consistency_gap", w.consistency_gap),
                     ("variance", m2.variance), ("limit", limit),
                     ("discretization_error", m2.discretization_error)):
            rows[k].append(v)
    res.table(out_dir, "she_moments", rows,
              meta={"theta": sec.theta, "mollifier": rho.name})
    if deltas.size > 1:
        res.checks.append(Check.decreasing("consistency_gap_trend",
                                           np.abs(rows["consistency_gap"])))
        res.checks.append(Check.decreasing("variance_limit_gap",
                                           np.abs(np.subtract(rows["variance"], limit))))

    d = float(np.sqrt(sec.mc_delta2))
    target = she_second_moment_semianalytic(d, sec.theta, f, rho,
                                            _she_renewal_steps(sec, d)).variance
    t0 = time.perf_counter()
    est = she_mc(d, sec.theta, f, dt=sec.dt, n_paths=sec.n_paths,
                 n_noise=sec.n_noise, seed=config.seed, mollifier=rho,
                 n_starts=sec.n_starts, workers=config.workers)
    est.wall_time = time.perf_counter() - t0
    res.table(out_dir, "she_samples",
              {"noise_index": np.arange(est.n), "value": est.samples},
              meta={"delta2": sec.mc_delta2, "theta": sec.theta})
    lo, hi = f.interval()
    mass = default_scheme.integrate(f, lo, hi, breakpoints=f.breakpoints)[0]
    res.checks.append(Check.below("mc_mean_sigmas", abs(est.mean - mass) / est.stderr, 3.0))
    res.checks.append(Check.below("mc_variance_relative",
                                  abs(est.variance - target) / target,
                                  sec.variance_tolerance))
    res.info["mc"] = est.as_dict()
    return res


def _manifests(directory):
    return sorted(Path(directory).rglob(f"*{manifest_suffix}"))


def run_report(config, out_dir):
    """Collect the checks of every manifest below the report directory."""
    res = ExperimentResult()
    directory = config.report.directory or config.output_dir
    rows = {"run": [], "command": [], "check": [], "value": [], "threshold": [],
            "passed": []}
    for fn in _manifests(directory):
        m = json.loads(fn.read_text())
        if m["command"] == "report":
            continue
        for c in m["checks"]:
            for k, v in (("run", m["name"]), ("command", m["command"]),
                         ("check", c["name"]), ("value", c["value"]),
                         ("threshold", c["threshold"]), ("passed", c["passed"])):
                rows[k].append(v)
        res.checks.append(Check(f"{m['name']}", float(sum(c["passed"] for c in m["checks"])),
                                float(len(m["checks"])), bool(m["passed"]),
                                "checks passed of"))
    if rows["run"]:
        res.table(out_dir, "report", rows)
    else:
        mylog.warning(f"No manifests found below {directory}.")
    return res


experiments = {"validate-walk": run_validate_walk,
               "kernels": run_kernels,
               "beta": run_beta,
               "partition": run_partition,
               "moments": run_moments,
               "dickman": run_dickman,
               "gtheta": run_gtheta,
               "cg": run_cg,
               "she": run_she,
               "report": run_report}


def run(config):
    """
    Run the experiment selected by *config*, write its CSV tables and
    its JSON manifest into ``output_dir/name`` and return the manifest.
    """
    if config.command not in experiments:
        raise KeyError(f"{config.command} is not a known experiment!")
    out_dir = Path(config.output_dir) / config.run_name
    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = config.model_dump(mode="json")
    mylog.info(f"Running '{config.command}' into {out_dir}.")
    t0 = time.perf_counter()
    result = experiments[config.command](config, out_dir)
    wall = time.perf_counter() - t0
    manifest = {"name": config.run_name,
                "command": config.command,
                "version": __version__,
                "config": resolved,
                "config_hash": canonical_hash(resolved),
                "seed": config.seed,
                "workers": config.workers,
                "outputs": result.outputs,
                "checks": [c.as_dict() for c in result.checks],
                "passed": result.passed,
                "info": result.info,
                "wall_time": wall}
    fn = out_dir / f"{config.run_name}{manifest_suffix}"
    fn.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable))
    for c in result.checks:
        if not c.passed:
            mylog.warning(f"Check '{c.name}' failed: {c.value:.6g} vs {c.threshold:.6g}.")
    mylog.info(f"'{config.command}' finished in {wall:.1f} s: "
               f"{'all checks passed' if result.passed else 'some checks failed'}.")
    return manifest


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def read_manifest(filename):
    return json.loads(Path(filename).read_text())


def read_output(manifest_file, name):
    """Read one CSV output listed in a manifest."""
    return read_table(Path(manifest_file).parent / name)
