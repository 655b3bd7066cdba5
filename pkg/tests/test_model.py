"""Generator construction: Hamiltonians, jump operators, targets, bases."""

import math

import numpy as np
import pytest

from wqed.errors import DimensionCapError
from wqed.imperfections import cs_scheme
from wqed.model import (DriveSpec, SystemSpec, basis_transform, build_hamiltonian,
                        build_lindblads, drive_phases, embed, lambda_scheme,
                        state_labels, target_state, transition)

OPT = 3**0.25


def lam_spec(n=2, omega=(0.05, 0.05 * OPT), delta=(0.05, -0.05), gamma_1d=99.0,
             gamma_d=0.0, scheme=None, **kw):
    return SystemSpec(n, scheme or lambda_scheme(), DriveSpec(omega=omega, delta=delta),
                      gamma_1d=gamma_1d, gamma_d=gamma_d, **kw)


def idx(digits, n_levels=3):
    """Composite index from per-emitter digits (emitter 0 first)."""
    return sum(d * n_levels**k for k, d in enumerate(digits))


class TestHamiltonian:
    def test_single_emitter_no_drive_is_zero(self):
        spec = lam_spec(n=1, omega=(0.0, 0.0), delta=(0.0, 0.0))
        h = build_hamiltonian(spec)
        assert np.all(h.matrix == 0)

    def test_two_emitter_drive_elements_and_phases(self):
        spec = lam_spec(omega=(0.05, 0.05), delta=(0.05, -0.05))
        h = build_hamiltonian(spec).matrix
        assert h.shape == (9, 9)
        assert np.array_equal(h, h.conj().T)
        # |00> -> |e0> carries Omega_0/2 (emitter 0 has phase 0)
        assert h[idx((2, 0)), idx((0, 0))] == pytest.approx(0.025)
        # the two g0 -> e legs differ by sign (phases 0 and pi)
        assert h[idx((0, 2)), idx((0, 0))] == pytest.approx(-0.025)

    def test_cs_hamiltonian_matches_hand_built_matrix(self):
        # independent construction: loop over the 16 four-level basis states
        # and place every matrix element from the definition
        omega = (0.01, 0.012, 0.4)
        delta = (0.2, -0.2, 0.0)
        spec = SystemSpec(2, cs_scheme(), DriveSpec(omega=omega, delta=delta),
                          gamma_1d=99.0)
        h = build_hamiltonian(spec).matrix
        nl = 4
        phases = (0.0, math.pi)
        expected = np.zeros((16, 16), dtype=complex)
        for a in range(4):
            for b in range(4):
                k = a + nl * b
                for lvl, em in ((a, 0), (b, 1)):
                    if lvl < 3:
                        expected[k, k] += -delta[lvl]
                for em, lvl in ((0, a), (1, b)):
                    if lvl < 3:
                        digits = [a, b]
                        digits[em] = 3
                        amp = omega[lvl] / 2
                        if lvl == 0:
                            amp *= np.exp(1j * phases[em])
                        expected[digits[0] + nl * digits[1], k] += amp
        expected = expected + np.triu(expected, 1).conj().T - np.tril(
            np.zeros_like(expected))
        # symmetrise: add the h.c. of the drive part only
        lower = np.tril(expected, -1)
        expected_full = np.diag(np.diag(expected)) + lower + lower.conj().T
        assert np.max(np.abs(h - expected_full)) < 1e-15
        assert h[idx((3, 0), 4), idx((2, 0), 4)] == pytest.approx(0.2)  # g2 -> e leg

    def test_disorder_shifts_detunings(self):
        eps = np.array([[1e-3, -1e-3], [0.0, 2e-3]])
        spec = lam_spec().with_disorder(eps)
        h = build_hamiltonian(spec).matrix
        h0 = build_hamiltonian(lam_spec()).matrix
        diff = h - h0
        assert diff[idx((0, 0)), idx((0, 0))] == pytest.approx(-1e-3 - (-1e-3))
        assert diff[idx((0, 1)), idx((0, 1))] == pytest.approx(-1e-3 - 2e-3)

    def test_hermitian_for_random_parameters(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            spec = lam_spec(
                omega=tuple(rng.uniform(0, 0.1, 2)),
                delta=tuple(rng.uniform(-0.5, 0.5, 2)),
                gamma_1d=float(rng.uniform(1, 1e3)),
            )
            h = build_hamiltonian(spec).matrix
            assert np.array_equal(h, h.conj().T)

    def test_dimension_cap(self):
        spec = lam_spec(n=8, gamma_1d=99.0)
        with pytest.raises(DimensionCapError):
            build_hamiltonian(spec)
        spec5 = lam_spec(n=5, gamma_1d=99.0, dim_cap=100)
        with pytest.raises(DimensionCapError):
            build_lindblads(spec5)
        assert build_hamiltonian(spec5, cap=3**5).dim == 3**5


class TestLindblads:
    def test_collective_operator_amplitudes(self):
        spec = lam_spec(gamma_1d=99.0)
        ops = build_lindblads(spec)
        coll = ops[4].matrix
        vals = coll[np.abs(coll) > 0]
        assert len(vals) == 2 * 3  # |0><e| on each emitter, 3 spectator levels
        assert np.allclose(np.abs(vals), math.sqrt(99.0))
        # restricted to one spectator level there are exactly 2 amplitudes
        sub = coll[np.ix_([idx((0, 1))], [idx((2, 1))])]
        assert abs(sub[0, 0]) == pytest.approx(math.sqrt(99.0))

    def test_cs_local_rate_ratios(self):
        spec = SystemSpec(2, cs_scheme(),
                          DriveSpec(omega=(0.01, 0.01, 0.1), delta=(0, 0, 0)),
                          gamma_1d=99.0)
        ops = build_lindblads(spec)
        # first three operators: emitter-0 decays to g0, g1, g2
        rates = [np.max(np.abs(op.matrix)) ** 2 for op in ops[:3]]
        assert rates[0] == pytest.approx(7 / 15)
        assert rates[1] == pytest.approx(5 / 12)
        assert rates[2] == pytest.approx(7 / 60)
        assert sum(rates) == pytest.approx(1.0)

    def test_dephasing_operator_count(self):
        spec = lam_spec(gamma_d=1e-5)
        ops = build_lindblads(spec)
        spec0 = lam_spec(gamma_d=0.0)
        assert len(ops) == len(build_lindblads(spec0)) + 4
        for op in ops[-4:]:
            m = op.matrix
            assert np.allclose(m, np.diag(np.diag(m)))
            assert np.max(np.abs(m)) == pytest.approx(math.sqrt(1e-5))

    def test_superradiant_total_rate_on_excited_emitter(self):
        spec = lam_spec(gamma_1d=99.0)
        ops = build_lindblads(spec)
        ldl = sum(op.matrix.conj().T @ op.matrix for op in ops)
        e1 = idx((2, 1))  # emitter 0 excited, emitter 1 in g1
        assert ldl[e1, e1].real == pytest.approx(99.0 + 1.0)

    def test_collective_annihilates_antisymmetric_state(self):
        spec = lam_spec(gamma_1d=99.0)
        coll = build_lindblads(spec)[4].matrix
        psi = np.zeros(9, dtype=complex)
        psi[idx((2, 0))] = 1 / math.sqrt(2)   # |e0>
        psi[idx((0, 2))] = -1 / math.sqrt(2)  # |0e>
        assert np.max(np.abs(coll @ psi)) < 1e-14


class TestPhasesAndTarget:
    def test_drive_phase_values(self):
        assert np.allclose(drive_phases(2), [0.0, math.pi])
        assert np.allclose(drive_phases(1), [0.0])
        assert np.allclose(drive_phases(4), [0, math.pi / 2, math.pi, 3 * math.pi / 2])

    def test_drive_phase_sum_identity(self):
        for n in range(1, 9):
            assert drive_phases(n).sum() == pytest.approx(math.pi * (n - 1))

    def test_drive_phases_rejects_zero(self):
        with pytest.raises(ValueError):
            drive_phases(0)

    def test_target_two_emitters(self):
        psi = target_state(2)
        expected = np.zeros(4)
        expected[idx((0, 1), 2)] = 1 / math.sqrt(2)
        expected[idx((1, 0), 2)] = 1 / math.sqrt(2)
        assert np.allclose(psi, expected)

    def test_target_three_emitters(self):
        psi = target_state(3)
        nz = np.nonzero(psi)[0]
        assert len(nz) == 3
        assert np.allclose(np.abs(psi[nz]), 1 / math.sqrt(3))

    def test_target_normalised(self):
        for n in range(2, 7):
            assert np.linalg.norm(target_state(n)) == pytest.approx(1.0)

    def test_target_rejects_single_emitter(self):
        with pytest.raises(ValueError):
            target_state(1)

    def test_target_is_total_g0_population_eigenstate(self):
        for n in (2, 3, 4):
            psi = target_state(n, n_levels=3)
            pop = sum(embed(transition(3, 0, 0), j, n, 3) for j in range(n))
            assert np.allclose(pop @ psi, psi)


class TestBasisTransform:
    def test_singlet_triplet_coordinates(self):
        u = basis_transform("singlet_triplet", n_levels=3).matrix
        psi01 = np.zeros(9)
        psi01[idx((0, 1))] = 1.0
        coords = u.conj().T @ psi01
        expected = np.zeros(9)
        expected[1] = expected[2] = 1 / math.sqrt(2)  # T and S slots
        assert np.allclose(coords, expected)

    def test_bright_dark_equal_coefficients(self):
        w0 = 0.03
        u = basis_transform("bright_dark", n_levels=3,
                            omega0=w0, omega1=math.sqrt(2) * w0).matrix
        bright = u[:, 0]
        expected = np.zeros(9)
        expected[idx((0, 0))] = 1 / math.sqrt(2)
        expected[idx((0, 1))] = -0.5
        expected[idx((1, 0))] = 0.5
        assert np.allclose(bright, expected)

    def test_microwave_u_coordinates(self):
        u = basis_transform("microwave_U", n_levels=3).matrix
        psi00 = np.zeros(9)
        psi00[idx((0, 0))] = 1.0
        coords = u.conj().T @ psi00
        # basis order [S, U0, U+, U-]
        assert coords[0] == pytest.approx(0.0)
        assert coords[1] == pytest.approx(1 / math.sqrt(2))
        assert coords[2] == pytest.approx(0.5)
        assert coords[3] == pytest.approx(0.5)

    def test_unitarity(self):
        for name, kw in (("singlet_triplet", {}), ("microwave_U", {}),
                         ("bright_dark", dict(omega0=0.02, omega1=0.05))):
            u = basis_transform(name, n_levels=3, **kw).matrix
            assert np.max(np.abs(u @ u.conj().T - np.eye(9))) < 1e-14

    def test_unsupported_basis_rejected(self):
        with pytest.raises(ValueError):
            basis_transform("singlet_triplet", n=3)
        with pytest.raises(ValueError):
            basis_transform("nonsense")

    def test_bright_dark_requires_drives(self):
        with pytest.raises(ValueError):
            basis_transform("bright_dark")


def test_state_labels_ordering():
    labels = state_labels(2, 3)
    assert labels[idx((0, 1))] == "01"
    assert labels[idx((2, 0))] == "e0"
    assert len(labels) == 9
