"""Preset benchmark scenarios (fig2 .. figA1).

Each entry reproduces one reference dataset as CSV files.  The parameter
sets live in PARAMS so they are written down exactly once; values are in
units of Gamma' unless noted.  The heavy Monte Carlo presets honour
``n_traj``/``fast`` so they can be smoke-tested quickly.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .effective import (analytic_infidelity, optimal_detunings, optimal_omega1,
                        steady_state_ratio_terms, tilde_population_ratio)
from .imperfections import (CHANNELS, BroadeningSpec, cs_scheme, channel_scan,
                            ensemble_fidelity, ensemble_to_csv)
from .liouville import (GeneratorAction, evolve, fidelity, mixed_ground_initial,
                        steady_state)
from .microwave import (MicrowaveSpec, build_mw_system, mw_error_budget,
                        mw_effective, optimal_omega_mw, singlet_state)
from .model import (DriveSpec, SystemSpec, basis_transform, lambda_scheme,
                    target_state)
from .motion import (MotionSpec, disordered_peak_scan, peak_scan,
                     trap_frequency_from_eta)
from .tables import write_csv

GAMMA_PRIME_MHZ = 5.234  # Cs D2 excited-state linewidth / 2 pi

PARAMS = {
    "fig2": dict(beta=0.99, omega0=1 / 20, delta0=1 / 20, delta1=-1 / 20,
                 omega1="optimal", c_range=(10.0, 1e4)),
    "fig3a": dict(beta=0.99, omega0_values=(0.10, 0.05, 0.02),
                  delta_rule="delta1 = -delta0 = delta/2", omega1="optimal"),
    "fig3b": dict(beta=0.99, delta0=1 / 20, delta1=-1 / 20, gamma_d=1e-5,
                  omega1="optimal"),
    # The N >= 3 detunings below follow the dataset caption as printed
    # (delta0 = +0.4 Omega_0, delta1 = -0.7 Omega_0); the two-emitter
    # closed-form optimum uses the opposite sign pattern
    # (delta0 < 0 < delta1).  Both conventions are recorded here; the
    # preset uses the caption values.
    "fig4": dict(omega0=1 / 100, delta0_over_omega0=0.4, delta1_over_omega0=-0.7,
                 ratios={3: 0.88, 4: 0.69, 5: 0.59},
                 alt_sign_convention="delta0<0<delta1 (two-emitter optimum)"),
    "fig5": dict(beta=0.99, omega0=1 / 100, delta0=1 / 5, delta1=-1 / 5,
                 delta2=0.0, omega2=2 / 5,
                 ratios={2: 1.14, 3: 0.88, 4: 0.69}),
    "fig6a": dict(beta=0.98, omega0=1 / 20, eta=0.05, nbar0=0.2, n_cutoff=20,
                  n_cutoff_two_mode=8),
    "fig6b": dict(beta=0.98, omega0=1 / 30, n_cutoff=15,
                  eta_values=(0.02, 0.05, 0.08, 0.11, 0.15),
                  nbar0_values=(0.2, 2.5, 5.0)),
    "fig7": dict(beta=0.98, omega0=1 / 15, delta0=1 / 50, delta1=-1 / 50,
                 sigma_values=(1e-4, 1e-3, 1e-2, 1e-1)),
    "fig8": dict(omega0=1 / 20, omega2=2 / 5, delta0=1 / 5, delta1=-1 / 5,
                 sigma_dif_minus=1e-4, n_cutoff=15,
                 cases=((1.0, 0.98), (1.0, 0.90), (0.1, 0.98))),
    "figA1": dict(beta=0.99, omega0_a=1 / 50, omega_mw_a=1 / 300,
                  omega0_b_values=(1 / 50, 1 / 100)),
}


def _beta_to_c(beta: float) -> float:
    return beta / (1 - beta)


def _two_emitter_spec(beta, omega0, delta0, delta1, gamma_d=0.0) -> SystemSpec:
    spec0 = SystemSpec(2, lambda_scheme(),
                       DriveSpec(omega=(omega0, omega0), delta=(delta0, delta1)),
                       gamma_1d=_beta_to_c(beta), gamma_d=gamma_d)
    omega1 = optimal_omega1(spec0)
    return SystemSpec(2, lambda_scheme(),
                      DriveSpec(omega=(omega0, omega1), delta=(delta0, delta1)),
                      gamma_1d=_beta_to_c(beta), gamma_d=gamma_d)


def _st_observables(n_levels: int):
    u = basis_transform("singlet_triplet", n_levels=n_levels).matrix
    return {lbl: u[:, k] for k, lbl in enumerate(("p00", "pT", "pS", "p11"))}


def fig2(outdir, seed=1, workers=1, n_traj=None, fast=False, full=False):
    p = PARAMS["fig2"]
    spec = _two_emitter_spec(p["beta"], p["omega0"], p["delta0"], p["delta1"])
    psi_t = target_state(2, n_levels=3)
    times = np.linspace(0.0, 40000.0 if not fast else 4000.0, 120 if fast else 400)

    from .effective import effective_operators
    obs = _st_observables(3)
    traj_full, _ = evolve(GeneratorAction.from_spec(spec), mixed_ground_initial(spec),
                          times, observables=obs)
    dyn = effective_operators(spec)
    obs_eff = {lbl: dyn.basis[:, k] for k, lbl in enumerate(("p00", "pT", "pS", "p11"))}
    rho0 = np.eye(4, dtype=complex) / 4
    traj_eff, _ = evolve(dyn.generator(), rho0, times, observables=obs_eff)
    header = ["time"] + [f"{l}_full" for l in ("p00", "pT", "pS", "p11")] + \
        [f"{l}_eff" for l in ("p00", "pT", "pS", "p11")]
    rows = [[t] + list(traj_full.data[k]) + list(traj_eff.data[k])
            for k, t in enumerate(times)]
    write_csv(os.path.join(outdir, "fig2a.csv"), header, rows)

    cs = np.logspace(math.log10(p["c_range"][0]), math.log10(p["c_range"][1]),
                     7 if fast else 13)
    rows = []
    for c in cs:
        beta = c / (1 + c)
        spec_c = _two_emitter_spec(beta, p["omega0"], p["delta0"], p["delta1"])
        rho = steady_state(GeneratorAction.from_spec(spec_c))
        ratio = sum(steady_state_ratio_terms(spec_c))
        rows.append([c, 1.0 - fidelity(rho, psi_t), ratio / (1 + ratio)])
    write_csv(os.path.join(outdir, "fig2b.csv"),
              ["C", "infidelity_full", "infidelity_analytic"], rows)
    return ["fig2a.csv", "fig2b.csv"]


def fig3(outdir, seed=1, workers=1, n_traj=None, fast=False, full=False):
    pa = PARAMS["fig3a"]
    psi_t = target_state(2, n_levels=3)
    deltas = np.logspace(-4, 0, 9 if fast else 25)
    header = ["delta"]
    for w0 in pa["omega0_values"]:
        header += [f"infid_full_w{w0:g}", f"infid_analytic_w{w0:g}"]
    rows = []
    for d in deltas:
        row = [d]
        for w0 in pa["omega0_values"]:
            spec = _two_emitter_spec(pa["beta"], w0, -d / 2, d / 2)
            rho = steady_state(GeneratorAction.from_spec(spec))
            budget = analytic_infidelity(spec)
            row += [1.0 - fidelity(rho, psi_t),
                    budget.partial_infidelity("coop", "detu", "dark")]
        rows.append(row)
    write_csv(os.path.join(outdir, "fig3a.csv"), header, rows)

    pb = PARAMS["fig3b"]
    omegas = np.logspace(math.log10(1 / 200), math.log10(0.1), 8 if fast else 20)
    rows = []
    for w0 in omegas:
        spec = _two_emitter_spec(pb["beta"], w0, pb["delta0"], pb["delta1"],
                                 gamma_d=pb["gamma_d"])
        rho = steady_state(GeneratorAction.from_spec(spec))
        b = analytic_infidelity(spec)
        rows.append([w0, 1.0 - fidelity(rho, psi_t), b.infidelity])
    write_csv(os.path.join(outdir, "fig3b.csv"),
              ["omega0", "infidelity_full", "infidelity_analytic"], rows)
    return ["fig3a.csv", "fig3b.csv"]


def _n_emitter_spec(n, omega0, omega1, delta0, delta1, gamma_1d) -> SystemSpec:
    return SystemSpec(n, lambda_scheme(),
                      DriveSpec(omega=(omega0, omega1), delta=(delta0, delta1)),
                      gamma_1d=gamma_1d, dim_cap=65536)


def fig4(outdir, seed=1, workers=1, n_traj=None, fast=False, full=False):
    p = PARAMS["fig4"]
    w0 = p["omega0"]
    ns = [2, 3, 4] + ([5] if full else [])
    cs = np.array([30.0, 100.0, 300.0, 1000.0] if not fast else [30.0, 100.0])
    header = ["C"] + [f"infid_N{n}" for n in ns]
    rows = []
    for c in cs:
        row = [c]
        for n in ns:
            if n == 2:
                spec = _two_emitter_spec(c / (1 + c), w0, 0.0, 0.0)
                d0, d1 = optimal_detunings(spec)
                spec = _two_emitter_spec(c / (1 + c), w0, d0, d1)
            else:
                spec = _n_emitter_spec(n, w0, p["ratios"][n] * w0,
                                       p["delta0_over_omega0"] * w0,
                                       p["delta1_over_omega0"] * w0, c)
            rho = steady_state(GeneratorAction.from_spec(spec))
            row.append(1.0 - fidelity(rho, target_state(n, n_levels=3)))
        rows.append(row)
    write_csv(os.path.join(outdir, "fig4b.csv"), header, rows)
    return ["fig4b.csv"]


def _cs_spec(n, omega0, omega1, omega2, delta0, delta1, delta2, gamma_1d) -> SystemSpec:
    return SystemSpec(n, cs_scheme(),
                      DriveSpec(omega=(omega0, omega1, omega2),
                                delta=(delta0, delta1, delta2)),
                      gamma_1d=gamma_1d, dim_cap=65536)


def fig5(outdir, seed=1, workers=1, n_traj=None, fast=False, full=False):
    p = PARAMS["fig5"]
    w0 = p["omega0"]
    g1d = _beta_to_c(p["beta"])
    psi_t = target_state(2, n_levels=4)
    r1 = np.linspace(0.6, 2.0, 6 if fast else 12)
    r2 = np.logspace(0, math.log10(40.0), 6 if fast else 12)
    rows = []
    for a in r1:
        for b in r2:
            spec = _cs_spec(2, w0, a * w0, b * w0, p["delta0"], p["delta1"],
                            p["delta2"], g1d)
            rho = steady_state(GeneratorAction.from_spec(spec))
            rows.append([a, b, fidelity(rho, psi_t)])
    write_csv(os.path.join(outdir, "fig5b.csv"),
              ["omega1_over_omega0", "omega2_over_omega0", "fidelity"], rows)

    ns = [2, 3] + ([4] if full else [])
    cs_values = np.array([30.0, 100.0, 300.0, 1000.0] if not fast else [30.0, 100.0])
    rows = []
    for c in cs_values:
        row = [c]
        for n in ns:
            spec = _cs_spec(n, w0, p["ratios"][n] * w0, p["omega2"],
                            p["delta0"], p["delta1"], p["delta2"], c)
            method = "dense" if spec.dim < 64 else "sparse"
            rho = steady_state(GeneratorAction.from_spec(spec), method=method)
            row.append(1.0 - fidelity(rho, target_state(n, n_levels=4)))
        rows.append(row)
    write_csv(os.path.join(outdir, "fig5c.csv"),
              ["C"] + [f"infid_N{n}" for n in ns], rows)
    return ["fig5b.csv", "fig5c.csv"]


def fig6(outdir, seed=1, workers=1, n_traj=None, fast=False, full=False):
    p = PARAMS["fig6a"]
    nt = n_traj or (60 if fast else 400)
    spec0 = _two_emitter_spec(p["beta"], p["omega0"], 0.0, 0.0)
    d0, d1 = optimal_detunings(spec0)
    spec = _two_emitter_spec(p["beta"], p["omega0"], d0, d1)
    times = np.linspace(0.0, 1500.0 if fast else 3500.0, 60 if fast else 140)
    res1 = peak_scan(spec, MotionSpec(eta=p["eta"], n_cutoff=p["n_cutoff"],
                                      nbar0=p["nbar0"]),
                     nt, seed, times=times, n_workers=workers)
    res2 = peak_scan(spec, MotionSpec(eta=p["eta"], n_cutoff=p["n_cutoff_two_mode"],
                                      nbar0=p["nbar0"], modes="relative_and_cm"),
                     nt, seed + 1, times=times, n_workers=workers,
                     guard_action="warn")
    rows = [[t,
             res1.trajectory.column("fidelity")[k],
             res1.trajectory.column("fidelity_stderr")[k],
             res2.trajectory.column("fidelity")[k],
             res2.trajectory.column("fidelity_stderr")[k]]
            for k, t in enumerate(times)]
    write_csv(os.path.join(outdir, "fig6a.csv"),
              ["time", "F_relative_only", "stderr_1", "F_two_mode", "stderr_2"], rows)

    pb = PARAMS["fig6b"]
    nt_b = n_traj or (40 if fast else 300)
    etas = pb["eta_values"][:3] if fast else pb["eta_values"]
    nbars = pb["nbar0_values"][:2] if fast else pb["nbar0_values"]
    spec0 = _two_emitter_spec(pb["beta"], pb["omega0"], 0.0, 0.0)
    d0, d1 = optimal_detunings(spec0)
    spec_b = _two_emitter_spec(pb["beta"], pb["omega0"], d0, d1)
    rows = []
    for nbar in nbars:
        for eta in etas:
            n_cut = pb["n_cutoff"] if nbar <= 1.0 else max(pb["n_cutoff"], 24)
            res = peak_scan(spec_b, MotionSpec(eta=eta, n_cutoff=n_cut, nbar0=nbar),
                            nt_b, seed, t_max=2000.0 if fast else 6000.0,
                            n_points=60 if fast else 150,
                            n_workers=workers, guard_action="warn")
            k = int(np.argmax(res.trajectory.column("fidelity")))
            stderr = res.trajectory.column("fidelity_stderr")[k]
            rows.append([eta, trap_frequency_from_eta(eta), nbar,
                         res.f_max, res.t_max, stderr])
    write_csv(os.path.join(outdir, "fig6b.csv"),
              ["eta", "omega_z", "nbar0", "F_max", "t_max", "stderr"], rows)
    return ["fig6a.csv", "fig6b.csv"]


def fig7(outdir, seed=1, workers=1, n_traj=None, fast=False, full=False):
    p = PARAMS["fig7"]
    spec = _two_emitter_spec(p["beta"], p["omega0"], p["delta0"], p["delta1"])
    n_samples = n_traj or (8 if fast else 32)
    sigmas = p["sigma_values"][:2] if fast else p["sigma_values"]
    rows = []
    for sigma in sigmas:
        for name in CHANNELS:
            bspec = BroadeningSpec(**{f"sigma_{name}": sigma},
                                   n_samples=n_samples, seed=seed)
            mean, stderr = ensemble_fidelity(spec, bspec)
            rows.append([name, sigma, mean, stderr, n_samples])
    ensemble_to_csv(os.path.join(outdir, "fig7.csv"), rows)
    return ["fig7.csv"]


def fig8_case(omega_z_mhz: float, beta: float, n_traj: int, seed: int,
              workers: int = 1, fast: bool = False, times=None):
    """One combined-realism run: caesium scheme, motion, and quasi-static
    ground-state broadening."""
    p = PARAMS["fig8"]
    w0 = p["omega0"]
    scheme = cs_scheme()
    g0, g1 = scheme.gammas()[:2]
    ratio = math.sqrt(math.sqrt((1.0 + g0) / (2 * g1 * (4.0 + g1))))
    omega1 = w0 / ratio
    spec = _cs_spec(2, w0, omega1, p["omega2"], p["delta0"], p["delta1"], 0.0,
                    _beta_to_c(beta))
    omega_z = omega_z_mhz / GAMMA_PRIME_MHZ
    mspec = MotionSpec(omega_z=omega_z, n_cutoff=p["n_cutoff"])
    bspec = BroadeningSpec(sigma_dif_minus=p["sigma_dif_minus"],
                           n_samples=1, seed=seed)
    if times is None:
        times = np.linspace(0.0, 900.0 if fast else 3000.0, 50 if fast else 140)
    return disordered_peak_scan(spec, mspec, bspec, n_traj, seed,
                                times=times, n_workers=workers,
                                n_groups=max(10, n_traj // 10))


def fig8(outdir, seed=1, workers=1, n_traj=None, fast=False, full=False):
    p = PARAMS["fig8"]
    nt = n_traj or (30 if fast else 300)
    rows = []
    curves = {}
    for omega_z_mhz, beta in p["cases"]:
        res = fig8_case(omega_z_mhz, beta, nt, seed, workers=workers, fast=fast)
        k = int(np.argmax(res.trajectory.column("fidelity")))
        stderr = res.trajectory.column("fidelity_stderr")[k]
        rows.append([omega_z_mhz, beta, res.f_max, res.t_max, stderr, nt])
        curves[(omega_z_mhz, beta)] = res.trajectory
    write_csv(os.path.join(outdir, "fig8.csv"),
              ["omega_z_mhz", "beta", "F_max", "t_max", "stderr", "n_traj"], rows)
    any_curve = next(iter(curves.values()))
    header = ["time"] + [f"F_wz{wz:g}_b{b:g}" for wz, b in curves]
    data_rows = []
    for k, t in enumerate(any_curve.times):
        data_rows.append([t] + [curves[key].column("fidelity")[k] for key in curves])
    write_csv(os.path.join(outdir, "fig8_curves.csv"), header, data_rows)
    return ["fig8.csv", "fig8_curves.csv"]


def figA1(outdir, seed=1, workers=1, n_traj=None, fast=False, full=False):
    p = PARAMS["figA1"]
    g1d = _beta_to_c(p["beta"])
    mw = MicrowaveSpec(omega_mw=p["omega_mw_a"], omega0=p["omega0_a"], gamma_1d=g1d)
    gen = build_mw_system(mw)
    u = basis_transform("microwave_U", n_levels=3).matrix
    labels = ("pS", "pU0", "pUp", "pUm")
    obs = {lbl: u[:, k] for k, lbl in enumerate(labels)}
    times = np.linspace(0.0, 30000.0 if not fast else 4000.0, 100 if fast else 300)
    rho0 = mixed_ground_initial(mw.lambda_spec())
    traj_full, _ = evolve(gen, rho0, times, observables=obs)
    dyn = mw_effective(mw)
    obs_eff = {lbl: dyn.basis[:, k] for k, lbl in enumerate(labels)}
    traj_eff, _ = evolve(dyn.generator(), np.eye(4, dtype=complex) / 4, times,
                         observables=obs_eff)
    header = ["time"] + [f"{l}_full" for l in labels] + [f"{l}_eff" for l in labels]
    rows = [[t] + list(traj_full.data[k]) + list(traj_eff.data[k])
            for k, t in enumerate(times)]
    write_csv(os.path.join(outdir, "figA1a.csv"), header, rows)

    psi_s = singlet_state()
    rows = []
    omegas_mw = np.logspace(-4, math.log10(0.8), 8 if fast else 20)
    for w0 in p["omega0_b_values"]:
        for wmw in omegas_mw:
            mw_b = MicrowaveSpec(omega_mw=wmw, omega0=w0, gamma_1d=g1d)
            rho = steady_state(build_mw_system(mw_b))
            b = mw_error_budget(mw_b)
            rows.append([w0, wmw, 1.0 - fidelity(rho, psi_s), b.infidelity])
    write_csv(os.path.join(outdir, "figA1b.csv"),
              ["omega0", "omega_mw", "infidelity_full", "infidelity_analytic"], rows)
    return ["figA1a.csv", "figA1b.csv"]


FIGURES = {
    "fig2": fig2,
    "fig3": fig3,
    "fig4": fig4,
    "fig5": fig5,
    "fig6": fig6,
    "fig7": fig7,
    "fig8": fig8,
    "figA1": figA1,
}
