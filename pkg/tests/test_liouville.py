"""Lindblad evolution, steady states, unraveling, and diagnostics."""

import math
import os

import numpy as np
import pytest

from wqed.errors import NonUniqueSteadyStateError
from wqed.liouville import (DensityMatrix, GeneratorAction, Trajectory,
                            apply_generator, evolve, fidelity,
                            ground_basis_sampler, mixed_ground_initial,
                            peak_fidelity, steady_state, trajectories)
from wqed.model import (DriveSpec, SystemSpec, basis_transform, lambda_scheme,
                        target_state)
from wqed.effective import steady_state_ratio_terms

OPT = 3**0.25


def lam_spec(omega0=0.05, delta=(0.05, -0.05), gamma_1d=99.0, gamma_d=0.0, n=2):
    return SystemSpec(n, lambda_scheme(),
                      DriveSpec(omega=(omega0, omega0 * OPT), delta=delta),
                      gamma_1d=gamma_1d, gamma_d=gamma_d)


def st_populations(n_levels=3):
    u = basis_transform("singlet_triplet", n_levels=n_levels).matrix
    return {lbl: u[:, k] for k, lbl in enumerate(("p00", "pT", "pS", "p11"))}


class TestApplyGenerator:
    def test_one_way_decay(self):
        gamma = 0.37
        l = math.sqrt(gamma) * np.array([[0, 1], [0, 0]], dtype=complex)
        gen = GeneratorAction(np.zeros((2, 2)), [l])
        rho = np.diag([0.0, 1.0]).astype(complex)
        out = apply_generator(gen, rho)
        assert np.allclose(out, gamma * np.diag([1.0, -1.0]))

    def test_steady_state_is_fixed_point(self):
        gen = GeneratorAction.from_spec(lam_spec())
        rho = steady_state(gen)
        assert np.max(np.abs(apply_generator(gen, rho))) < 1e-10 * gen.scale()

    def test_traceless_on_random_hermitian(self):
        rng = np.random.default_rng(5)
        gen = GeneratorAction.from_spec(lam_spec())
        for _ in range(10):
            a = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
            rho = (a + a.conj().T) / 2
            assert abs(np.trace(gen.apply(rho))) < 1e-12 * np.max(np.abs(rho))

    def test_dimension_mismatch(self):
        gen = GeneratorAction.from_spec(lam_spec())
        with pytest.raises(ValueError):
            gen.apply(np.eye(4))


class TestEvolve:
    def test_undriven_ground_state_is_constant(self):
        spec = lam_spec(omega0=0.0)
        gen = GeneratorAction.from_spec(spec)
        rho0 = mixed_ground_initial(spec)
        traj, final = evolve(gen, rho0, np.linspace(0, 100, 11))
        assert np.allclose(traj.data, traj.data[0], atol=1e-12)
        assert np.allclose(final.matrix, rho0.matrix, atol=1e-12)

    def test_fidelity_rises_to_cooperativity_plateau(self):
        spec = lam_spec()
        gen = GeneratorAction.from_spec(spec)
        psi_t = target_state(2, n_levels=3)
        times = np.linspace(0, 80000, 160)
        traj, final = evolve(gen, mixed_ground_initial(spec), times, target=psi_t)
        f = traj.fidelity
        assert np.all(np.diff(f) > -1e-9)
        assert f[-1] == pytest.approx(1 - 4.1 / 99, abs=0.012)
        final.validate()

    def test_trace_and_positivity_along_evolution(self):
        spec = lam_spec(gamma_d=1e-5)
        gen = GeneratorAction.from_spec(spec)
        times = np.linspace(0, 5000, 40)
        rho = mixed_ground_initial(spec).matrix
        samples, _ = evolve(gen, rho, times)
        # re-evolve capturing states through the rk path as well
        traj_rk, final_rk = evolve(gen, rho, np.linspace(0, 300, 10), method="rk")
        for state in (final_rk,):
            assert abs(np.trace(state.matrix) - 1) < 1e-8
            assert np.linalg.eigvalsh((state.matrix + state.matrix.conj().T) / 2).min() > -1e-7

    def test_rk_matches_eig_propagation(self):
        spec = lam_spec()
        gen = GeneratorAction.from_spec(spec)
        times = np.linspace(0, 400, 9)
        rho0 = mixed_ground_initial(spec)
        t_eig, _ = evolve(gen, rho0, times, method="eig", target=target_state(2, 3))
        t_rk, _ = evolve(gen, rho0, times, method="rk", target=target_state(2, 3))
        assert np.max(np.abs(t_eig.fidelity - t_rk.fidelity)) < 1e-7

    def test_effective_matches_full_transient(self):
        from wqed.effective import effective_operators

        spec = lam_spec()
        gen = GeneratorAction.from_spec(spec)
        times = np.linspace(0, 50000, 120)
        traj_full, _ = evolve(gen, mixed_ground_initial(spec), times,
                              observables=st_populations())
        dyn = effective_operators(spec)
        obs = {lbl: dyn.basis[:, k] for k, lbl in enumerate(("p00", "pT", "pS", "p11"))}
        traj_eff, _ = evolve(dyn.generator(), np.eye(4, dtype=complex) / 4, times,
                             observables=obs)
        dev = np.max(np.abs(traj_full.data - traj_eff.data))
        assert dev <= 0.01


class TestSteadyState:
    def test_optical_pumping_single_emitter(self):
        spec = SystemSpec(1, lambda_scheme(),
                          DriveSpec(omega=(0.05, 0.0), delta=(0.0, 0.0)),
                          gamma_1d=99.0)
        rho = steady_state(GeneratorAction.from_spec(spec))
        assert rho.population(1) == pytest.approx(1.0, abs=1e-9)

    def test_agrees_with_rate_formula(self):
        spec = lam_spec()
        rho = steady_state(GeneratorAction.from_spec(spec))
        f = fidelity(rho, target_state(2, n_levels=3))
        ratio = sum(steady_state_ratio_terms(spec))
        f_rate = 1 / (1 + ratio)
        assert abs((1 - f) - (1 - f_rate)) <= 0.1 * (1 - f_rate)

    def test_cooperativity_limited_infidelity_at_c1000(self):
        spec = lam_spec(omega0=0.01, delta=(0.0, 0.0), gamma_1d=1000.0)
        d0, d1 = -5e-4, 5e-4  # tiny splitting to lift the dark degeneracy
        spec = SystemSpec(2, lambda_scheme(),
                          DriveSpec(omega=spec.drives.omega, delta=(d0, d1)),
                          gamma_1d=1000.0)
        rho = steady_state(GeneratorAction.from_spec(spec))
        f = fidelity(rho, target_state(2, n_levels=3))
        assert 1 - f == pytest.approx(4.1e-3, rel=0.15)

    def test_degenerate_manifold_detected(self):
        spec = lam_spec(omega0=0.0)
        with pytest.raises(NonUniqueSteadyStateError):
            steady_state(GeneratorAction.from_spec(spec))

    def test_sparse_path_matches_dense(self):
        spec = lam_spec()
        gen = GeneratorAction.from_spec(spec)
        rho_d = steady_state(gen, method="dense")
        rho_s = steady_state(gen, method="sparse")
        assert np.max(np.abs(rho_d.matrix - rho_s.matrix)) < 1e-6


class TestTrajectories:
    def test_pure_schrodinger_limit(self):
        # no jump channels: exact Rabi oscillation, norm conserved
        omega = 0.2
        h = 0.5 * omega * np.array([[0, 1], [1, 0]], dtype=complex)
        gen = GeneratorAction(h, [])
        times = np.linspace(0, 200, 81)
        psi0 = np.array([1.0, 0.0], dtype=complex)
        traj = trajectories(gen, lambda rng: psi0, times, n_traj=1, seed=0,
                            target=psi0)
        expected = np.cos(omega * times / 2) ** 2
        assert np.max(np.abs(traj.fidelity - expected)) < 1e-8

    def test_ensemble_matches_density_matrix(self):
        spec = lam_spec()
        gen = GeneratorAction.from_spec(spec)
        times = np.linspace(0, 1500, 40)
        psi_t = target_state(2, n_levels=3)
        traj_mc = trajectories(gen, ground_basis_sampler(spec), times,
                               n_traj=2000, seed=21, target=psi_t,
                               observables=st_populations())
        traj_dm, _ = evolve(gen, mixed_ground_initial(spec), times, target=psi_t,
                            observables=st_populations())
        for col in ("fidelity", "p00", "pT", "pS", "p11"):
            dev = np.abs(traj_mc.column(col) - traj_dm.column(col))
            err = np.maximum(traj_mc.column(f"{col}_stderr"), 1e-12)
            # skip t=0 where the sampler variance dominates the error bar
            assert np.all(dev[1:] <= 3.0 * err[1:] + 1e-9)

    def test_deterministic_and_worker_invariant(self):
        spec = lam_spec()
        gen = GeneratorAction.from_spec(spec)
        times = np.linspace(0, 500, 12)
        a = trajectories(gen, ground_basis_sampler(spec), times, 40, seed=3,
                         target=target_state(2, 3))
        b = trajectories(gen, ground_basis_sampler(spec), times, 40, seed=3,
                         target=target_state(2, 3))
        c = trajectories(gen, ground_basis_sampler(spec), times, 40, seed=3,
                         target=target_state(2, 3), n_workers=2)
        assert np.array_equal(a.data, b.data)
        assert np.array_equal(a.data, c.data)

    def test_csv_bit_reproducible(self, tmp_path):
        spec = lam_spec()
        gen = GeneratorAction.from_spec(spec)
        times = np.linspace(0, 200, 8)
        paths = []
        for k in range(2):
            traj = trajectories(gen, ground_basis_sampler(spec), times, 20,
                                seed=9, target=target_state(2, 3))
            p = tmp_path / f"t{k}.csv"
            traj.to_csv(p)
            paths.append(p.read_bytes())
        assert paths[0] == paths[1]
        header = paths[0].decode().splitlines()[0]
        assert header.startswith("time,fidelity")


class TestFidelity:
    def test_pure_target(self):
        psi = target_state(2)
        rho = DensityMatrix.pure(psi, dims=(2, 2))
        assert fidelity(rho, psi) == pytest.approx(1.0)

    def test_maximally_mixed(self):
        rho = DensityMatrix.maximally_mixed(4, dims=(2, 2))
        assert fidelity(rho, target_state(2)) == pytest.approx(0.25)

    def test_fig2b_point_at_c100(self):
        spec = lam_spec(gamma_1d=100.0)
        rho = steady_state(GeneratorAction.from_spec(spec))
        f = fidelity(rho, target_state(2, n_levels=3))
        assert 1 - f == pytest.approx(4.1e-2, abs=0.008)

    def test_embeds_ground_vector(self):
        spec = lam_spec()
        rho = steady_state(GeneratorAction.from_spec(spec))
        f_embedded = fidelity(rho, target_state(2))          # length-4 vector
        f_direct = fidelity(rho, target_state(2, n_levels=3))
        assert f_embedded == pytest.approx(f_direct)

    def test_rejects_unnormalised(self):
        rho = DensityMatrix.maximally_mixed(4, dims=(2, 2))
        with pytest.raises(ValueError):
            fidelity(rho, np.array([1.0, 1.0, 0, 0]))


class TestPeakFidelity:
    def test_monotone_gives_last_point(self):
        traj = Trajectory(np.array([0.0, 1.0, 2.0]), ["fidelity"],
                          np.array([[0.1], [0.2], [0.3]]))
        assert peak_fidelity(traj) == (2.0, 0.3)

    def test_tie_breaks_earliest(self):
        traj = Trajectory(np.array([0.0, 1.0, 2.0]), ["fidelity"],
                          np.array([[0.1], [0.5], [0.5]]))
        assert peak_fidelity(traj) == (1.0, 0.5)

    def test_empty_rejected(self):
        traj = Trajectory(np.array([]), ["fidelity"], np.zeros((0, 1)))
        with pytest.raises(ValueError):
            peak_fidelity(traj)


def test_density_matrix_validation():
    rho = DensityMatrix(np.diag([0.5, 0.5]).astype(complex), (2,))
    rho.validate()
    bad = DensityMatrix(np.diag([0.7, 0.5]).astype(complex), (2,))
    with pytest.raises(ValueError):
        bad.validate()
    lop = np.array([[0.5, 0.1j], [0.0, 0.5]])
    with pytest.raises(ValueError):
        DensityMatrix(lop, (2,)).validate()
