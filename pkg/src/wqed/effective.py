"""Adiabatic elimination of the decaying excited manifold, classical rate
equations on the ground manifold, and the closed-form error budget.

The reduction follows the effective-operator recipe: split the space into a
ground manifold G (no emitter excited) and a decaying manifold D, group the
ground states into classes sharing an eigenenergy E_m of the ground-block
Hamiltonian, and for each class solve

    (H_DD - E_m - (i/2) sum_k L_k^+ L_k) X_m = V_+ P_m

on the decaying block.  Then H_eff = H_GG - (V_- X + h.c.)/2 and
L_eff^(k) = L_k|_GG + L_k|_GD X.  Keeping the excited-block Hamiltonian
H_DD (rather than a scalar detuning) makes per-transition detunings, drive
phases and per-emitter disorder come out automatically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .errors import SingularEliminationError, WeakDriveError
from .liouville import GeneratorAction
from .model import (
    SystemSpec,
    basis_transform,
    build_hamiltonian,
    build_lindblads,
    ground_state_indices,
    state_labels,
)
from .tables import write_csv


@dataclass(frozen=True, eq=False)
class ManifoldPartition:
    """Ground / decaying index sets used by the reduction."""

    ground: np.ndarray
    decaying: np.ndarray
    class_tol: float = 1e-9

    @classmethod
    def from_spec(cls, spec: SystemSpec) -> "ManifoldPartition":
        g = ground_state_indices(spec.n_emitters, spec.scheme.n_levels)
        mask = np.ones(spec.dim, dtype=bool)
        mask[g] = False
        return cls(ground=g, decaying=np.nonzero(mask)[0])


@dataclass(eq=False)
class EffectiveDynamics:
    """Reduced ground-manifold generator plus the derived classical rates.

    ``h_eff`` and ``lindblads`` live in the computational ground-manifold
    coordinates; ``rate_matrix[f, i] = sum_k |<f|L_eff^(k)|i>|^2`` is
    expressed in the (possibly rotated) ``basis``.
    """

    h_eff: np.ndarray
    lindblads: list[np.ndarray]
    basis: np.ndarray
    basis_labels: list[str]
    ground_indices: np.ndarray
    class_energies: tuple[float, ...] = ()

    def __post_init__(self):
        b = self.basis
        rates = np.zeros((b.shape[1], b.shape[1]))
        for l in self.lindblads:
            rates += np.abs(b.conj().T @ l @ b) ** 2
        self.rate_matrix = rates

    @property
    def dim(self) -> int:
        return self.h_eff.shape[0]

    def generator(self) -> GeneratorAction:
        """The reduced dynamics as a Lindblad generator (coherences kept)."""
        return GeneratorAction(self.h_eff, self.lindblads, dims=(self.dim,))

    def h_eff_in_basis(self) -> np.ndarray:
        return self.basis.conj().T @ self.h_eff @ self.basis

    def lindblads_in_basis(self) -> list[np.ndarray]:
        return [self.basis.conj().T @ l @ self.basis for l in self.lindblads]


def reduce_generator(
    h: np.ndarray,
    lindblads: list[np.ndarray],
    ground: np.ndarray,
    *,
    basis: np.ndarray | None = None,
    basis_labels: list[str] | None = None,
    class_tol: float = 1e-9,
) -> EffectiveDynamics:
    """Generic second-order elimination of the decaying manifold."""
    h = np.asarray(h, dtype=complex)
    dim = h.shape[0]
    ground = np.asarray(ground, dtype=int)
    mask = np.ones(dim, dtype=bool)
    mask[ground] = False
    decaying = np.nonzero(mask)[0]
    if decaying.size == 0:
        raise ValueError("nothing to eliminate: every state is in the ground manifold")

    h_gg = h[np.ix_(ground, ground)]
    h_dd = h[np.ix_(decaying, decaying)]
    v_plus = h[np.ix_(decaying, ground)]
    v_minus = h[np.ix_(ground, decaying)]

    k_dd = np.zeros_like(h_dd)
    for l in lindblads:
        ld = np.asarray(l, dtype=complex)
        k_dd += (ld.conj().T @ ld)[np.ix_(decaying, decaying)]
    decay_diag = np.real(np.diag(k_dd))
    if decay_diag.min() <= 1e-14:
        raise SingularEliminationError(int(decaying[np.argmin(decay_diag)]))

    # group ground states into classes of equal H_GG eigenenergy
    evals, q = la.eigh(h_gg)
    scale = max(float(np.max(np.abs(evals))), 1.0)
    classes: list[tuple[float, list[int]]] = []
    for idx, e in enumerate(evals):
        if classes and abs(e - classes[-1][0]) <= class_tol * scale:
            classes[-1][1].append(idx)
        else:
            classes.append((float(e), [idx]))

    x = np.zeros((decaying.size, ground.size), dtype=complex)
    eye = np.eye(decaying.size)
    for energy, members in classes:
        p = q[:, members] @ q[:, members].conj().T
        m = h_dd - energy * eye - 0.5j * k_dd
        try:
            x += la.solve(m, v_plus @ p)
        except la.LinAlgError as exc:
            raise SingularEliminationError(-1) from exc

    vx = v_minus @ x
    h_eff = h_gg - 0.5 * (vx + vx.conj().T)
    l_effs = []
    for l in lindblads:
        ld = np.asarray(l, dtype=complex)
        l_eff = ld[np.ix_(ground, ground)] + ld[np.ix_(ground, decaying)] @ x
        if np.max(np.abs(l_eff)) > 1e-15:
            l_effs.append(l_eff)

    if basis is None:
        basis = np.eye(ground.size, dtype=complex)
    if basis_labels is None:
        basis_labels = [f"g{i}" for i in range(ground.size)]
    return EffectiveDynamics(
        h_eff=h_eff,
        lindblads=l_effs,
        basis=np.asarray(basis, dtype=complex),
        basis_labels=list(basis_labels),
        ground_indices=ground,
        class_energies=tuple(e for e, _ in classes),
    )


def _ground_basis_from_transform(name: str, spec: SystemSpec, ground: np.ndarray,
                                 **kwargs) -> tuple[np.ndarray, list[str]]:
    """Restrict a named full-space basis transform to the ground manifold."""
    u = basis_transform(name, n=2, n_levels=spec.scheme.n_levels, **kwargs).matrix
    named = {"singlet_triplet": ["00", "T", "S", "11"],
             "bright_dark": ["B", "D", "T", "11"],
             "microwave_U": ["S", "U0", "U+", "U-"]}[name]
    ground_set = set(int(i) for i in ground)
    cols = []
    labels = []
    full_labels = state_labels(2, spec.scheme.n_levels)
    for c in range(u.shape[1]):
        support = np.nonzero(np.abs(u[:, c]) > 1e-14)[0]
        if all(int(s) in ground_set for s in support):
            cols.append(u[ground, c])
            if c < len(named):
                labels.append(named[c])
            else:
                labels.append(full_labels[support[0]])
    return np.column_stack(cols), labels


def effective_operators(
    spec: SystemSpec,
    part: ManifoldPartition | None = None,
    *,
    basis: str | np.ndarray | None = None,
    enforce_weak_drive: bool = True,
) -> EffectiveDynamics:
    """Effective ground-manifold dynamics of an emitter ensemble.

    For two emitters the rate matrix defaults to the singlet-triplet basis;
    larger ensembles default to the computational ground basis.
    """
    if enforce_weak_drive and not spec.drives.is_weak():
        raise WeakDriveError(
            f"max Rabi frequency {spec.drives.max_omega} exceeds Gamma'/10; "
            f"pass enforce_weak_drive=False to override"
        )
    if part is None:
        part = ManifoldPartition.from_spec(spec)
    h = build_hamiltonian(spec).matrix
    ls = [op.matrix for op in build_lindblads(spec)]

    labels = None
    if basis is None and spec.n_emitters == 2:
        basis = "singlet_triplet"
    if isinstance(basis, str):
        basis, labels = _ground_basis_from_transform(
            basis, spec, part.ground,
            **({"omega0": spec.drives.omega[0], "omega1": spec.drives.omega[1]}
               if basis == "bright_dark" else {}),
        )
    elif basis is None:
        full = state_labels(spec.n_emitters, spec.scheme.n_levels)
        labels = [full[i] for i in part.ground]
        basis = np.eye(part.ground.size, dtype=complex)
    return reduce_generator(h, ls, part.ground, basis=basis, basis_labels=labels,
                            class_tol=part.class_tol)


# ---------------------------------------------------------------------------
# closed-form effective rates and the two-emitter rate model
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EffectiveRates:
    """Closed-form effective decay rates, units of Gamma'.

    gamma_f[n, m]: fast (subradiant-mediated) rate, drive leg m decaying to
    level n; gamma_s[m]: slow superradiant-mediated rate; gamma_es[n, m]:
    extra-slow non-guided leak from the superradiant manifold; gamma_fm[m]:
    microwave-protocol variant of the fast rate.
    """

    gamma_f: np.ndarray
    gamma_s: np.ndarray
    gamma_es: np.ndarray
    gamma_fm: np.ndarray | None = None

    def check_hierarchy(self) -> bool:
        """gamma_f >= gamma_s >= gamma_es elementwise (valid for C >= 10,
        |Delta| <= Gamma')."""
        ok = True
        for m in range(self.gamma_s.size):
            ok &= bool(np.all(self.gamma_f[:, m] >= self.gamma_s[m] - 1e-15))
            ok &= bool(np.all(self.gamma_s[m] >= self.gamma_es[:, m] - 1e-15))
        return ok


def effective_rates(spec: SystemSpec, omega_mw: float | None = None) -> EffectiveRates:
    """Evaluate the closed-form rates gamma^F, gamma^S, gamma^ES (and
    gamma^FM when a microwave Rabi frequency is supplied)."""
    gammas = spec.scheme.gammas()
    omega = np.asarray(spec.drives.omega, dtype=float)
    delta = np.asarray(spec.drives.delta, dtype=float)
    gtot = spec.gamma_1d + 1.0
    gamma_f = gammas[:, None] * omega[None, :] ** 2 / (4 * delta[None, :] ** 2 + 1.0)
    gamma_s = omega**2 / gtot
    gamma_es = gammas[:, None] * omega[None, :] ** 2 / gtot**2
    gamma_fm = None
    if omega_mw is not None:
        gamma_fm = gammas * omega[0] ** 2 / (4 * omega_mw**2 + 1.0)
    return EffectiveRates(gamma_f, gamma_s, gamma_es, gamma_fm)


_ST_LABELS = ["00", "T", "S", "11"]


def two_emitter_rate_dynamics(spec: SystemSpec) -> EffectiveDynamics:
    """Closed-form effective operators of the two-emitter Lambda protocol in
    the singlet-triplet basis (the truncated leading-order forms, detunings
    kept only on the subradiant-mediated legs)."""
    if spec.n_emitters != 2 or spec.scheme.n_ground != 2:
        raise ValueError("the closed-form rate model is defined for two Lambda emitters")
    r = effective_rates(spec)
    gf, gs, ges = r.gamma_f, r.gamma_s, r.gamma_es
    k00, kt, ks, k11 = (np.eye(4, dtype=complex)[:, i] for i in range(4))
    ops = []
    for sign in (+1.0, -1.0):
        ops.append(
            math.sqrt(gf[0, 0]) * np.outer(k00, k00)
            + math.sqrt(gf[0, 1] / 2) * np.outer(k00, ks)
        )
        ops.append(
            math.sqrt(gf[1, 0] / 2) * np.outer(kt + sign * ks, k00)
            + math.sqrt(gf[1, 1] / 4) * np.outer(kt + sign * ks, ks)
            + math.sqrt(ges[1, 0] / 2) * np.outer(k11, kt)
        )
    ops.append(
        math.sqrt(gs[1] / 2) * np.outer(k00, kt)
        + math.sqrt(gs[0]) * np.outer(ks, kt)
        + math.sqrt(2 * gs[1]) * np.outer(kt, k11)
    )
    h_g = np.diag(
        [-2 * spec.drives.delta[0],
         -(spec.drives.delta[0] + spec.drives.delta[1]),
         -(spec.drives.delta[0] + spec.drives.delta[1]),
         -2 * spec.drives.delta[1]]
    ).astype(complex)
    return EffectiveDynamics(
        h_eff=h_g,
        lindblads=ops,
        basis=np.eye(4, dtype=complex),
        basis_labels=list(_ST_LABELS),
        ground_indices=np.arange(4),
    )


def rate_steady_state(dyn: EffectiveDynamics, tol: float = 1e-10) -> np.ndarray:
    """Stationary distribution of dp/dt = (R - diag(colsum R)) p.

    Diagonal rate-matrix entries feed a state from itself and drop out of
    the classical master equation.
    """
    r = dyn.rate_matrix.copy()
    np.fill_diagonal(r, 0.0)
    gen = r - np.diag(r.sum(axis=0))
    evals, evecs = la.eig(gen)
    order = np.argsort(np.abs(evals))
    scale = max(float(np.max(np.abs(evals))), 1e-300)
    null = [i for i in order if abs(evals[i]) <= tol * scale]
    if len(null) != 1:
        raise ValueError(
            f"rate matrix is reducible: {len(null)} stationary distributions "
            f"(eigenvalues within {tol:.1e} of zero)"
        )
    p = np.real(evecs[:, null[0]])
    p = np.abs(p)
    return p / p.sum()


# ---------------------------------------------------------------------------
# closed-form infidelity budget
# ---------------------------------------------------------------------------

@dataclass
class ErrorBudget:
    """Evaluated closed-form error contributions.

    Each term enters the population balance as a contribution to the ratio
    (1-F)/F; the printed closed forms are those ratio contributions, which
    coincide with infidelities while small.  ``total`` is their sum and
    ``infidelity`` solves (1-F)/F = total for 1-F, which stays meaningful
    (and bounded by 1) even when a term saturates.
    """

    coop: float = 0.0
    detu: float = 0.0
    dark: float = 0.0
    deph: float = 0.0
    dre: float = 0.0
    mix: float = 0.0
    k0: float | None = None
    k1: float | None = None
    k2: float | None = None

    @property
    def total(self) -> float:
        return self.coop + self.detu + self.dark + self.deph + self.dre + self.mix

    @property
    def infidelity(self) -> float:
        t = self.total
        if t == math.inf:
            return 1.0
        return t / (1.0 + t)

    def partial_infidelity(self, *terms: str) -> float:
        """Ratio-to-infidelity conversion restricted to selected terms."""
        t = sum(getattr(self, name) for name in terms)
        if t == math.inf:
            return 1.0
        return t / (1.0 + t)

    def to_csv(self, path, precision: int = 12) -> None:
        write_csv(path, ["coop", "detu", "dark", "deph", "total"],
                  [[self.coop, self.detu, self.dark, self.deph, self.total]],
                  precision=precision)


def _two_emitter_params(spec: SystemSpec):
    if spec.n_emitters != 2 or spec.scheme.n_ground != 2:
        raise ValueError("closed forms hold for the two-emitter Lambda scheme")
    g0, g1 = spec.scheme.gammas()
    w0, w1 = spec.drives.omega
    d0, d1 = spec.drives.delta
    if w0 <= 0 or w1 <= 0:
        raise ValueError("both drives must be on for the closed-form budget")
    return g0, g1, w0, w1, d0, d1


def steady_state_ratio_terms(spec: SystemSpec) -> tuple[float, float, float]:
    """The three terms of the rate-model population balance (1-F)/F,
    equal respectively to p11/pT, pS/pT, and p00/pT."""
    g0, g1, w0, w1, d0, d1 = _two_emitter_params(spec)
    gtot = spec.gamma_1d + 1.0
    rr = w0**2 / w1**2
    t1 = g1 * rr / (2 * gtot)
    t2 = (1.0 + 4 * d1**2) / 2 * (1 + 4 * rr) / gtot
    t3 = (1.0 + 4 * d0**2) / (4 * g1 * gtot * rr) * (1 + g0 * (1 + 4 * rr))
    return t1, t2, t3


def coefficients(spec: SystemSpec) -> tuple[float, float, float]:
    """The k0, k1, k2 coefficients entering the detuning and dark errors."""
    g0, g1, w0, w1, _, _ = _two_emitter_params(spec)
    rr = w0**2 / w1**2
    k0 = 1.0 / rr + g0 * (1 + 4 * rr) / rr
    k1 = 2 + 8 * rr
    k2 = (1 + 2 * rr) ** 3 * (2 * g0 / g1 + 1 + 4 * rr) / (16 * rr**3)
    return k0, k1, k2


def analytic_infidelity(spec: SystemSpec) -> ErrorBudget:
    """Closed-form budget: cooperativity floor, detuning error, dark-state
    trapping, and ground-state dephasing.  A vanishing detuning difference
    makes the dark term divergent, reported as +inf."""
    g0, g1, w0, w1, d0, d1 = _two_emitter_params(spec)
    g1d = spec.gamma_1d
    rr = w0**2 / w1**2
    k0, k1, k2 = coefficients(spec)

    coop = sum(steady_state_ratio_terms(
        spec.__class__(n_emitters=2, scheme=spec.scheme,
                       drives=spec.drives.__class__(omega=(w0, w1), delta=(0.0, 0.0)),
                       gamma_1d=spec.gamma_1d)))

    detu = d0**2 * k0 / (g1d * g1) + d1**2 * k1 / g1d
    delta_diff = d1 - d0
    if delta_diff == 0.0:
        dark = math.inf if w0 > 0 else 0.0
    else:
        dark = w0**4 * k2 / (g1d * delta_diff**2)
    deph = 0.0
    if spec.gamma_d > 0.0:
        deph = spec.gamma_d / w0**2 * ((2 * g1 * w0**2 / w1**2 + g0) / g1)
    return ErrorBudget(coop=coop, detu=detu, dark=dark, deph=deph, k0=k0, k1=k1, k2=k2)


def optimal_ratio(spec: SystemSpec) -> float:
    """R = (Omega_0/Omega_1)^2 minimising the rate-model infidelity in the
    C >> 1, |Delta| << Gamma' regime."""
    g0, g1 = spec.scheme.gammas()[:2]
    return math.sqrt((1.0 + g0) / (2 * g1 * (4.0 + g1)))


def optimal_omega1(spec: SystemSpec) -> float:
    """Omega_1 = Omega_0 / sqrt(R) realising the optimal ratio."""
    return spec.drives.omega[0] / math.sqrt(optimal_ratio(spec))


def optimal_detunings(spec: SystemSpec) -> tuple[float, float]:
    """Detunings minimising detu + dark at fixed drive strengths;
    Delta_0 comes out negative and Delta_1 positive."""
    g0, g1, w0, w1, _, _ = _two_emitter_params(spec)
    k0, k1, k2 = coefficients(spec)
    denom = (k0 + k1 * g1) ** 3
    d0 = -w0 * (k2 * (k1 * g1) ** 3 / (k0 * denom) * g1) ** 0.25
    d1 = w0 * (k2 * k0**3 / (k1 * denom)) ** 0.25
    return d0, d1


def tilde_population_ratio(spec: SystemSpec, f_t: float | None = None) -> float:
    """Predicted steady-state population of the spectator symmetric state
    (both emitters sharing one g2 excitation) relative to unity fidelity:
    P = (Gamma_2/Gamma_1) (Omega_1^2 + 2 Omega_0^2)/(Omega_2^2 + 2 Omega_0^2) F_T."""
    if spec.scheme.n_ground < 3:
        raise ValueError("needs a scheme with a third ground level")
    gammas = spec.scheme.gammas()
    w0, w1, w2 = spec.drives.omega[:3]
    if f_t is None:
        from .liouville import fidelity as _fid, steady_state as _ss
        from .model import target_state as _target
        rho = _ss(GeneratorAction.from_spec(spec))
        f_t = _fid(rho, _target(2, n_levels=spec.scheme.n_levels))
    return gammas[2] / gammas[1] * (w1**2 + 2 * w0**2) / (w2**2 + 2 * w0**2) * f_t
