"""Quantised motion of two trapped emitters along the waveguide axis.

Each emitter sits in a harmonic well of frequency omega_z; photon recoil on
drives and decays enters through displacement factors exp(+-i eta (a + a^+)).
The two local oscillators are recast as relative and centre-of-mass modes;
a local displacement of emitter j becomes a displacement of amplitude
eta/sqrt(2) on each collective mode, with opposite signs on the relative
mode for the two emitters.  By default only the relative mode is retained
(the centre-of-mass mode barely couples back for small eta^2 nbar) with a
two-mode variant kept for validation.

Non-guided decays carry a heuristic 1/sqrt(3) recoil-projection factor in
the exponent; the guided collective decay is fully along the axis and is
split into right/left-propagating channels with sqrt(Gamma_1D/2) amplitudes
and opposite-sign displacements.  For caesium parameters the Lamb-Dicke
factor and the trap frequency are tied by eta = sqrt(4e-4 Gamma'/omega_z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import DimensionCapError, PhononTruncationError
from .liouville import (DensityMatrix, GeneratorAction, Trajectory,
                        peak_fidelity, trajectories)
from .model import (Operator, SystemSpec, build_lindblads, detuning_hamiltonian,
                    drive_raising_operator, ground_state_indices, target_state,
                    transition)

CS_ETA_OMEGA_CONSTANT = 4e-4  # eta = sqrt(4e-4 Gamma' / omega_z) for Cs


def eta_from_trap_frequency(omega_z: float) -> float:
    return math.sqrt(CS_ETA_OMEGA_CONSTANT / omega_z)


def trap_frequency_from_eta(eta: float) -> float:
    return CS_ETA_OMEGA_CONSTANT / eta**2


@dataclass(frozen=True)
class MotionSpec:
    """Trap and phonon-space parameters (rates in Gamma', eta dimensionless).

    ``n_cutoff`` is the number of retained Fock states per mode.  When both
    ``omega_z`` and ``eta`` are given they must satisfy the caesium relation
    within 5% unless ``allow_inconsistent`` is set; when one is omitted it is
    derived from the other.
    """

    omega_z: float | None = None
    eta: float | None = None
    n_cutoff: int = 15
    nbar0: float = 0.0
    modes: str = "relative_only"
    allow_inconsistent: bool = False

    def __post_init__(self):
        if self.modes not in ("relative_only", "relative_and_cm"):
            raise ValueError(f"unknown mode selection '{self.modes}'")
        if self.n_cutoff < 2:
            raise ValueError("need at least two phonon levels")
        if self.omega_z is None and self.eta is None:
            raise ValueError("give omega_z or eta")
        if self.eta is not None and self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.nbar0 < 0:
            raise ValueError("nbar0 must be non-negative")
        if self.omega_z is not None and self.eta is not None and self.eta > 0:
            implied = eta_from_trap_frequency(self.omega_z)
            if abs(self.eta - implied) > 0.05 * implied and not self.allow_inconsistent:
                raise ValueError(
                    f"eta={self.eta} inconsistent with omega_z={self.omega_z} "
                    f"(caesium relation implies eta={implied:.4g}); "
                    f"set allow_inconsistent to override"
                )

    @property
    def eta_value(self) -> float:
        if self.eta is not None:
            return self.eta
        return eta_from_trap_frequency(self.omega_z)

    @property
    def omega_z_value(self) -> float:
        if self.omega_z is not None:
            return self.omega_z
        if self.eta == 0:
            raise ValueError("omega_z undefined for eta = 0")
        return trap_frequency_from_eta(self.eta)

    @property
    def n_modes(self) -> int:
        return 2 if self.modes == "relative_and_cm" else 1


def displacement(eta_eff: float, n_cutoff: int) -> Operator:
    """exp(i eta_eff (a + a^+)) on the truncated Fock space; exactly unitary
    because the truncated generator is anti-Hermitian."""
    if n_cutoff < 2:
        raise ValueError("need at least two phonon levels")
    a = np.diag(np.sqrt(np.arange(1, n_cutoff)), 1).astype(complex)
    return Operator(la.expm(1j * eta_eff * (a + a.conj().T)), (n_cutoff,))


@dataclass(frozen=True)
class ThermalState:
    """Truncated, renormalised thermal occupation of one mode."""

    nbar: float
    n_cutoff: int

    def probabilities(self) -> np.ndarray:
        n = np.arange(self.n_cutoff)
        if self.nbar == 0:
            p = np.zeros(self.n_cutoff)
            p[0] = 1.0
            return p
        x = self.nbar / (self.nbar + 1.0)
        p = (1 - x) * x**n
        return p / p.sum()

    def matrix(self) -> np.ndarray:
        return np.diag(self.probabilities()).astype(complex)

    def mean_occupation(self) -> float:
        p = self.probabilities()
        return float(np.sum(np.arange(self.n_cutoff) * p))


class MotionalSystem:
    """Two-emitter internal dynamics tensored with collective phonon modes."""

    def __init__(self, spec: SystemSpec, mspec: MotionSpec, cap: int | None = None):
        if spec.n_emitters != 2:
            raise ValueError("motional systems are defined for two emitters")
        self.spec = spec
        self.mspec = mspec
        nl = spec.scheme.n_levels
        self.dim_int = spec.dim
        nc = mspec.n_cutoff
        self.phonon_dims = (nc, nc) if mspec.n_modes == 2 else (nc,)
        self.dim_ph = int(np.prod(self.phonon_dims))
        dim = self.dim_int * self.dim_ph
        cap = spec.dim_cap if cap is None else cap
        if dim > cap:
            raise DimensionCapError(dim, cap)
        self.dims = (self.dim_int,) + self.phonon_dims
        self.dim = dim

        eta = mspec.eta_value
        omega_z = mspec.omega_z_value if eta > 0 else (mspec.omega_z or 0.0)
        amp = eta / math.sqrt(2)

        def disp_pair(scale: float):
            """Phonon-space displacement for each emitter, exponent scale*eta."""
            out = []
            for sign in (+1.0, -1.0):
                d_rel = displacement(sign * scale * amp, nc).matrix if eta > 0 else np.eye(nc)
                if mspec.n_modes == 2:
                    d_cm = displacement(scale * amp, nc).matrix if eta > 0 else np.eye(nc)
                    out.append(np.kron(d_cm, d_rel))
                else:
                    out.append(d_rel)
            return out

        d_drive = disp_pair(+1.0)
        d_local = disp_pair(-1.0 / math.sqrt(3))
        d_coll_plus = disp_pair(+1.0)
        d_coll_minus = disp_pair(-1.0)

        eye_ph = np.eye(self.dim_ph, dtype=complex)
        num_op = np.diag(np.arange(nc)).astype(complex)
        if mspec.n_modes == 2:
            h_m = np.kron(num_op, np.eye(nc)) + np.kron(np.eye(nc), num_op)
        else:
            h_m = num_op
        self.number_rel = np.kron(np.eye(self.dim_int), (
            np.kron(np.eye(nc), num_op) if mspec.n_modes == 2 else num_op))

        h0 = detuning_hamiltonian(spec).matrix
        h = np.kron(h0, eye_ph) + omega_z * np.kron(np.eye(self.dim_int), h_m)
        for j in range(2):
            vp = drive_raising_operator(spec, j).matrix
            term = np.kron(vp, d_drive[j])
            h += term + term.conj().T
        self.h = h

        guided = spec.scheme.guided_ground_index
        excited = nl - 1
        lops = []
        for j in range(2):
            for i, g in enumerate(spec.scheme.ground_labels):
                rate = spec.scheme.gamma(g)
                if rate > 0:
                    from .model import embed
                    lint = math.sqrt(rate) * embed(transition(nl, i, excited), j, 2, nl)
                    lops.append(np.kron(lint, d_local[j]))
        from .model import embed
        for d_coll in (d_coll_plus, d_coll_minus):
            op = np.zeros((dim, dim), dtype=complex)
            for j in range(2):
                lint = embed(transition(nl, guided, excited), j, 2, nl)
                op += np.kron(lint, d_coll[j])
            lops.append(math.sqrt(spec.gamma_1d / 2) * op)
        if spec.gamma_d > 0:
            for j in range(2):
                for i in (0, 1):
                    lint = math.sqrt(spec.gamma_d) * embed(transition(nl, i, i), j, 2, nl)
                    lops.append(np.kron(lint, eye_ph))
        self.lindblads = lops

    def generator(self) -> GeneratorAction:
        return GeneratorAction(self.h, self.lindblads, dims=self.dims)

    def target_projector_rows(self) -> np.ndarray:
        """Rows spanning |T> x (any phonon state); the squared projection is
        the internal-state fidelity."""
        psi_t = target_state(2, n_levels=self.spec.scheme.n_levels)
        rows = np.kron(psi_t.conj()[None, :], np.eye(self.dim_ph, dtype=complex))
        return rows

    def initial_density(self) -> DensityMatrix:
        rho_int = np.zeros((self.dim_int, self.dim_int), dtype=complex)
        idx = ground_state_indices(2, self.spec.scheme.n_levels)
        rho_int[idx, idx] = 1.0 / idx.size
        th = ThermalState(self.mspec.nbar0, self.mspec.n_cutoff).matrix()
        rho_ph = np.kron(th, th) if self.mspec.n_modes == 2 else th
        return DensityMatrix(np.kron(rho_int, rho_ph), self.dims)

    def initial_sampler(self) -> "ThermalGroundSampler":
        """Internal ground basis state (uniform) x thermal Fock states."""
        idx = ground_state_indices(2, self.spec.scheme.n_levels)
        probs = ThermalState(self.mspec.nbar0, self.mspec.n_cutoff).probabilities()
        return ThermalGroundSampler(idx, self.dim_int, self.mspec.n_cutoff,
                                    self.mspec.n_modes, probs)

    def truncation_observable(self) -> np.ndarray:
        """Diagonal operator measuring the population of the top two Fock
        levels, summed over the retained modes (a conservative badness
        measure for cutoff starvation)."""
        nc = self.mspec.n_cutoff
        weights = np.zeros(self.dims)
        marker = np.zeros(nc)
        marker[nc - 2:] = 1.0
        for axis in range(1, 1 + self.mspec.n_modes):
            shape = [1] * len(self.dims)
            shape[axis] = nc
            weights = weights + marker.reshape(shape)
        return np.diag(weights.ravel()).astype(complex)

    def truncation_guard(self, threshold: float = 0.01) -> "TruncationGuard":
        """Callable for evolve/trajectories aborting when the top two levels
        of any retained mode hold more than ``threshold`` population."""
        return TruncationGuard(self.dims, self.mspec.n_cutoff,
                               self.mspec.n_modes, threshold)


class ThermalGroundSampler:
    """Picklable initial-state sampler for motional trajectory runs."""

    def __init__(self, ground_idx, dim_int, n_cutoff, n_modes, probs):
        self.ground_idx = np.asarray(ground_idx, dtype=int)
        self.dim_int = dim_int
        self.n_cutoff = n_cutoff
        self.n_modes = n_modes
        self.probs = np.asarray(probs)
        self.dim_ph = n_cutoff**n_modes

    def __call__(self, rng) -> np.ndarray:
        g = self.ground_idx[rng.integers(self.ground_idx.size)]
        ph = 0
        for _ in range(self.n_modes):
            ph = ph * self.n_cutoff + rng.choice(self.n_cutoff, p=self.probs)
        psi = np.zeros(self.dim_int * self.dim_ph, dtype=complex)
        psi[g * self.dim_ph + ph] = 1.0
        return psi


class TruncationGuard:
    """Raises once the top two Fock levels of any mode exceed the threshold."""

    def __init__(self, dims, n_cutoff, n_modes, threshold):
        self.dims = dims
        self.n_cutoff = n_cutoff
        self.n_modes = n_modes
        self.threshold = threshold

    def __call__(self, t, state):
        if state.ndim == 1:
            pops = np.abs(state.reshape(self.dims)) ** 2
        else:
            pops = np.real(np.diagonal(state)).reshape(self.dims)
        worst = 0.0
        for axis in range(1, 1 + self.n_modes):
            top = np.moveaxis(pops, axis, 0)[self.n_cutoff - 2:].sum()
            worst = max(worst, float(top))
        if worst > self.threshold:
            raise PhononTruncationError(t, worst, self.threshold)


def build_motional_system(spec: SystemSpec, mspec: MotionSpec,
                          cap: int | None = None) -> GeneratorAction:
    """Composite generator: internal dynamics dressed by recoil displacements
    plus the free phonon Hamiltonian."""
    return MotionalSystem(spec, mspec, cap=cap).generator()


@dataclass
class PeakScanResult:
    f_max: float
    t_max: float
    trajectory: Trajectory
    truncation: tuple[float, float] | None = None


def _smoothed_peak(traj: Trajectory, half_width: int) -> tuple[float, float]:
    """Peak of the boxcar-smoothed fidelity column.

    The raw argmax of a Monte Carlo mean curve is biased upward by roughly
    stderr * sqrt(2 ln n_points); averaging over neighbouring grid points
    suppresses that while barely moving a broad peak.
    """
    if half_width <= 0:
        return peak_fidelity(traj)
    f = traj.fidelity
    w = 2 * half_width + 1
    kernel = np.ones(w) / w
    padded = np.concatenate([np.full(half_width, f[0]), f,
                             np.full(half_width, f[-1])])
    smooth = np.convolve(padded, kernel, mode="valid")
    k = int(np.argmax(smooth))
    return float(traj.times[k]), float(smooth[k])


def peak_scan(
    spec: SystemSpec,
    mspec: MotionSpec,
    n_traj: int,
    seed: int,
    *,
    times=None,
    t_max: float = 4000.0,
    n_points: int = 160,
    n_workers: int = 1,
    guard_threshold: float = 0.01,
    guard_action: str = "raise",
    extra_observables: dict | None = None,
    smooth: int = 0,
) -> PeakScanResult:
    """Monte Carlo fidelity curve from the mixed-ground x thermal initial
    state, with the peak located on the sampling grid.

    ``guard_action='raise'`` aborts any trajectory whose top two phonon
    levels exceed ``guard_threshold``; ``'warn'`` records instead the first
    time the ensemble-mean badness crosses it (useful for hot initial
    states whose thermal tail already touches the cutoff).  ``smooth`` is
    the boxcar half-width applied to the mean curve before locating the
    peak (removes the upward argmax bias of a noisy ensemble mean).
    """
    system = MotionalSystem(spec, mspec)
    gen = system.generator()
    if times is None:
        times = np.linspace(0.0, t_max, n_points)
    obs = {"fidelity": system.target_projector_rows(),
           "nbar_rel": system.number_rel,
           "trunc_top2": system.truncation_observable()}
    if extra_observables:
        obs.update(extra_observables)
    guard = system.truncation_guard(guard_threshold) if guard_action == "raise" else None
    traj = trajectories(
        gen, system.initial_sampler(), times, n_traj, seed,
        observables=obs, n_workers=n_workers, guard=guard,
    )
    t_pk, f_pk = _smoothed_peak(traj, smooth)
    trunc = None
    bad = traj.column("trunc_top2")
    over = np.nonzero(bad > guard_threshold)[0]
    if over.size:
        trunc = (float(traj.times[over[0]]), float(bad[over[0]]))
    return PeakScanResult(f_max=f_pk, t_max=t_pk, trajectory=traj, truncation=trunc)


def disordered_peak_scan(
    spec: SystemSpec,
    mspec: MotionSpec,
    bspec,
    n_traj: int,
    seed: int,
    *,
    n_groups: int = 30,
    times=None,
    t_max: float = 4000.0,
    n_points: int = 160,
    n_workers: int = 1,
    guard_threshold: float = 0.01,
    guard_action: str = "warn",
    smooth: int = 0,
) -> PeakScanResult:
    """Peak scan with quasi-static transition broadening: the ensemble is
    split into groups, each propagated with its own frozen disorder draw
    (deterministic in the broadening seed and group index).  The standard
    error is taken across group means, so it reflects both the Monte Carlo
    noise and the disorder spread.
    """
    from .imperfections import apply_disorder, sample_disorder

    if times is None:
        times = np.linspace(0.0, t_max, n_points)
    times = np.asarray(times, dtype=float)
    n_groups = min(n_groups, n_traj)
    per_group = [n_traj // n_groups + (1 if g < n_traj % n_groups else 0)
                 for g in range(n_groups)]
    curves = []
    bad = []
    for g in range(n_groups):
        spec_g = apply_disorder(spec, sample_disorder(bspec, g))
        system = MotionalSystem(spec_g, mspec)
        obs = {"fidelity": system.target_projector_rows(),
               "trunc_top2": system.truncation_observable()}
        guard = system.truncation_guard(guard_threshold) if guard_action == "raise" else None
        traj_g = trajectories(
            system.generator(), system.initial_sampler(), times, per_group[g],
            seed * 100003 + g, observables=obs, n_workers=n_workers, guard=guard,
        )
        curves.append(traj_g.column("fidelity"))
        bad.append(traj_g.column("trunc_top2"))
    curves = np.asarray(curves)
    mean = curves.mean(axis=0)
    stderr = (curves.std(axis=0, ddof=1) / math.sqrt(n_groups)
              if n_groups > 1 else np.zeros_like(mean))
    bad_mean = np.asarray(bad).mean(axis=0)
    traj = Trajectory(times.copy(),
                      ["fidelity", "fidelity_stderr", "trunc_top2"],
                      np.column_stack([mean, stderr, bad_mean]),
                      meta={"n_traj": n_traj, "n_groups": n_groups, "seed": seed})
    t_pk, f_pk = _smoothed_peak(traj, smooth)
    trunc = None
    over = np.nonzero(bad_mean > guard_threshold)[0]
    if over.size:
        trunc = (float(times[over[0]]), float(bad_mean[over[0]]))
    return PeakScanResult(f_max=f_pk, t_max=t_pk, trajectory=traj, truncation=trunc)
