"""Hilbert spaces, Hamiltonians and jump operators for driven Lambda-type
emitters coupled to a common waveguide.

Each emitter carries a set of ground levels (g0, g1, and optionally g2) plus
one excited level e, listed last.  The transition e <-> g0 is the only one
coupled to the waveguide; it decays collectively at the guided rate Gamma_1D,
while every transition also decays non-collectively with branching fractions
of the total non-guided rate Gamma'.  All rates and frequencies are expressed
in units of Gamma' = 1, all times in 1/Gamma'.

Conventions
-----------
* Per-emitter level order: ground levels in listed order, excited level last.
* Composite index: little-endian over emitters (emitter 0 is the least
  significant digit).  State labels are written emitter 0 first, so "01"
  means emitter 0 in g0 and emitter 1 in g1.
* Rotating frame: the Hamiltonian is the time-independent frame-transformed
  one; detunings enter as -Delta_i on the ground populations and the drive
  on the g0 -> e leg of emitter j carries the phase exp(i*phi_j).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import DimensionCapError

DEFAULT_DIM_CAP = 4096

_BRANCH_TOL = 1e-12


def drive_phases(n: int) -> np.ndarray:
    """Drive phases on the g0 -> e legs that maximise subradiant coupling.

    phi_j = 2*pi*j/n for emitters j = 0..n-1.  For n = 2 this is (0, pi),
    i.e. opposite-sign drives on the two emitters.
    """
    if n < 1:
        raise ValueError(f"need at least one emitter, got n={n}")
    return 2.0 * np.pi * np.arange(n) / n


@dataclass(frozen=True, eq=False)
class LevelScheme:
    """Level structure of a single emitter.

    Parameters
    ----------
    labels : tuple of str
        Level names, ground levels first, excited level last
        (e.g. ``("g0", "g1", "e")``).
    branching : dict
        Map (excited, ground) -> fraction of the non-guided rate Gamma'
        decaying on that transition.  Fractions must sum to 1.
    guided_transition : tuple
        The (excited, ground) pair enhanced by the waveguide.
    """

    labels: tuple[str, ...]
    branching: dict[tuple[str, str], float]
    guided_transition: tuple[str, str]

    def __post_init__(self):
        if len(self.labels) < 3:
            raise ValueError("need at least two ground levels and one excited level")
        excited = self.labels[-1]
        for (up, low), frac in self.branching.items():
            if up != excited:
                raise ValueError(f"branching must start from the excited level, got {up}")
            if low not in self.labels[:-1]:
                raise ValueError(f"unknown ground level {low}")
            if frac < 0:
                raise ValueError(f"negative branching fraction for {low}")
        total = sum(self.branching.values())
        if abs(total - 1.0) > _BRANCH_TOL:
            raise ValueError(f"non-guided branching fractions sum to {total}, not 1")
        if self.guided_transition[0] != excited or self.guided_transition[1] not in self.labels[:-1]:
            raise ValueError(f"invalid guided transition {self.guided_transition}")

    @property
    def n_levels(self) -> int:
        return len(self.labels)

    @property
    def n_ground(self) -> int:
        return len(self.labels) - 1

    @property
    def ground_labels(self) -> tuple[str, ...]:
        return self.labels[:-1]

    @property
    def excited_label(self) -> str:
        return self.labels[-1]

    @property
    def guided_ground_index(self) -> int:
        return self.labels.index(self.guided_transition[1])

    def gamma(self, ground_label: str) -> float:
        """Non-guided decay rate (units of Gamma') to the given ground level."""
        return self.branching.get((self.excited_label, ground_label), 0.0)

    def gammas(self) -> np.ndarray:
        """Non-guided rates ordered like the ground levels."""
        return np.array([self.gamma(g) for g in self.ground_labels])


def lambda_scheme(gamma0: float = 0.5, gamma1: float = 0.5) -> LevelScheme:
    """Three-level Lambda emitter with branching Gamma_0 + Gamma_1 = Gamma'."""
    return LevelScheme(
        labels=("g0", "g1", "e"),
        branching={("e", "g0"): gamma0, ("e", "g1"): gamma1},
        guided_transition=("e", "g0"),
    )


@dataclass(frozen=True, eq=False)
class DriveSpec:
    """Optical drive parameters, one Rabi frequency/detuning per ground level.

    ``omega[i]`` and ``delta[i]`` refer to the i-th ground level of the
    scheme; ``phases`` are the per-emitter phases on the g0 -> e leg and
    default to :func:`drive_phases`.
    """

    omega: tuple[float, ...]
    delta: tuple[float, ...]
    phases: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(self.omega) != len(self.delta):
            raise ValueError("omega and delta must have one entry per ground level")
        if any(o < 0 for o in self.omega):
            raise ValueError("Rabi frequencies must be non-negative")

    @property
    def max_omega(self) -> float:
        return max(self.omega)

    def is_weak(self, threshold: float = 0.1) -> bool:
        """Weak-drive flag used by the effective reduction (max Omega <= Gamma'/10)."""
        return self.max_omega <= threshold + 1e-15


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Complete description of the emitter ensemble.

    All rates are in units of Gamma'.  ``disorder`` optionally holds
    per-transition, per-emitter detuning offsets eps[i, j] added to the
    detuning of ground level i on emitter j.
    """

    n_emitters: int
    scheme: LevelScheme
    drives: DriveSpec
    gamma_1d: float
    gamma_d: float = 0.0
    disorder: np.ndarray | None = None
    dim_cap: int = DEFAULT_DIM_CAP

    def __post_init__(self):
        if self.n_emitters < 1:
            raise ValueError("need at least one emitter")
        if not (0 < self.gamma_1d < math.inf):
            raise ValueError("gamma_1d must be positive and finite")
        if self.gamma_d < 0:
            raise ValueError("gamma_d must be non-negative")
        if len(self.drives.omega) != self.scheme.n_ground:
            raise ValueError(
                f"drive spec has {len(self.drives.omega)} entries for "
                f"{self.scheme.n_ground} ground levels"
            )
        if self.drives.phases is not None and len(self.drives.phases) != self.n_emitters:
            raise ValueError("need one drive phase per emitter")
        if self.disorder is not None:
            eps = np.asarray(self.disorder, dtype=float)
            if eps.shape != (self.scheme.n_ground, self.n_emitters):
                raise ValueError(
                    f"disorder must have shape (n_ground, n_emitters) = "
                    f"({self.scheme.n_ground}, {self.n_emitters}), got {eps.shape}"
                )
            object.__setattr__(self, "disorder", eps)

    @property
    def beta(self) -> float:
        """Waveguide coupling efficiency Gamma_1D / (Gamma_1D + Gamma')."""
        return self.gamma_1d / (self.gamma_1d + 1.0)

    @property
    def cooperativity(self) -> float:
        """C = Gamma_1D / Gamma' = beta / (1 - beta)."""
        return self.gamma_1d

    @property
    def phases(self) -> np.ndarray:
        if self.drives.phases is not None:
            return np.asarray(self.drives.phases, dtype=float)
        return drive_phases(self.n_emitters)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.scheme.n_levels,) * self.n_emitters

    @property
    def dim(self) -> int:
        return self.scheme.n_levels**self.n_emitters

    def detuning(self, level: int, emitter: int) -> float:
        """Detuning of ground level ``level`` on ``emitter``, disorder included."""
        delta = self.drives.delta[level]
        if self.disorder is not None:
            delta += self.disorder[level, emitter]
        return delta

    def with_disorder(self, eps: np.ndarray) -> "SystemSpec":
        return SystemSpec(
            n_emitters=self.n_emitters,
            scheme=self.scheme,
            drives=self.drives,
            gamma_1d=self.gamma_1d,
            gamma_d=self.gamma_d,
            disorder=eps,
            dim_cap=self.dim_cap,
        )


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix over a composite space, with per-subsystem dims."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        d = int(np.prod(self.dims))
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match dims {self.dims}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.dims)

    def is_hermitian(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)


def _check_cap(dim: int, cap: int) -> None:
    if dim > cap:
        raise DimensionCapError(dim, cap)


def embed(op: np.ndarray, emitter: int, n_emitters: int, n_levels: int) -> np.ndarray:
    """Lift a single-emitter operator to the composite space.

    Emitter 0 is the least significant digit of the composite index.
    """
    mats = [np.eye(n_levels, dtype=complex)] * n_emitters
    mats[emitter] = np.asarray(op, dtype=complex)
    # numpy kron puts its first factor in the most significant position
    return reduce(np.kron, reversed(mats))


def transition(n_levels: int, to_level: int, from_level: int) -> np.ndarray:
    """Single-emitter matrix |to><from|."""
    op = np.zeros((n_levels, n_levels), dtype=complex)
    op[to_level, from_level] = 1.0
    return op


def state_labels(n_emitters: int, n_levels: int, level_chars: str | None = None) -> list[str]:
    """Composite basis labels in index order, emitter 0 written first."""
    if level_chars is None:
        level_chars = "012e"[: n_levels - 1] + "e" if n_levels <= 4 else None
    if level_chars is None or len(level_chars) < n_levels:
        level_chars = "".join(chr(ord("0") + k) for k in range(n_levels - 1)) + "e"
    labels = []
    for idx in range(n_levels**n_emitters):
        digits = []
        rem = idx
        for _ in range(n_emitters):
            digits.append(level_chars[rem % n_levels])
            rem //= n_levels
        labels.append("".join(digits))
    return labels


def ground_state_indices(n_emitters: int, n_levels: int) -> np.ndarray:
    """Composite indices of states with no emitter in the excited level."""
    excited = n_levels - 1
    idx = []
    for i in range(n_levels**n_emitters):
        rem = i
        ok = True
        for _ in range(n_emitters):
            if rem % n_levels == excited:
                ok = False
                break
            rem //= n_levels
        if ok:
            idx.append(i)
    return np.array(idx, dtype=int)


def build_hamiltonian(spec: SystemSpec, cap: int | None = None) -> Operator:
    """Rotating-frame Hamiltonian H = H0 + V_+ + V_- for the ensemble.

    H0 carries -Delta_i (plus disorder offsets) on each ground population;
    V_+ drives every ground level to the excited one with Omega_i/2, the
    g0 leg of emitter j carrying exp(i*phi_j).
    """
    cap = spec.dim_cap if cap is None else cap
    _check_cap(spec.dim, cap)
    nl = spec.scheme.n_levels
    n = spec.n_emitters
    guided = spec.scheme.guided_ground_index
    phases = spec.phases
    h = np.zeros((spec.dim, spec.dim), dtype=complex)
    for j in range(n):
        local = np.zeros((nl, nl), dtype=complex)
        for i in range(spec.scheme.n_ground):
            local[i, i] = -spec.detuning(i, j)
            omega = spec.drives.omega[i]
            if omega != 0.0:
                amp = 0.5 * omega
                if i == guided:
                    amp *= np.exp(1j * phases[j])
                local[nl - 1, i] += amp
                local[i, nl - 1] += np.conj(amp)
        h += embed(local, j, n, nl)
    return Operator(h, spec.dims)


def drive_raising_operator(spec: SystemSpec, emitter: int, cap: int | None = None) -> Operator:
    """Raising part of the drive on one emitter,
    sum_i Omega_i/2 e^{i phi_j [i = guided]} |e><i|_emitter, lifted to the
    composite space."""
    cap = spec.dim_cap if cap is None else cap
    _check_cap(spec.dim, cap)
    nl = spec.scheme.n_levels
    guided = spec.scheme.guided_ground_index
    local = np.zeros((nl, nl), dtype=complex)
    for i in range(spec.scheme.n_ground):
        omega = spec.drives.omega[i]
        if omega != 0.0:
            amp = 0.5 * omega
            if i == guided:
                amp *= np.exp(1j * spec.phases[emitter])
            local[nl - 1, i] = amp
    return Operator(embed(local, emitter, spec.n_emitters, nl), spec.dims)


def detuning_hamiltonian(spec: SystemSpec, cap: int | None = None) -> Operator:
    """The drive-free part of the Hamiltonian (detunings and disorder only)."""
    cap = spec.dim_cap if cap is None else cap
    _check_cap(spec.dim, cap)
    nl = spec.scheme.n_levels
    h = np.zeros((spec.dim, spec.dim), dtype=complex)
    for j in range(spec.n_emitters):
        local = np.zeros((nl, nl), dtype=complex)
        for i in range(spec.scheme.n_ground):
            local[i, i] = -spec.detuning(i, j)
        h += embed(local, j, spec.n_emitters, nl)
    return Operator(h, spec.dims)


def build_lindblads(spec: SystemSpec, cap: int | None = None) -> list[Operator]:
    """Jump operators: per-emitter non-guided decays, one collective guided
    decay, and (when gamma_d > 0) ground-state dephasing projectors.

    Order: local decays grouped by emitter, then the collective operator,
    then dephasing operators.
    """
    cap = spec.dim_cap if cap is None else cap
    _check_cap(spec.dim, cap)
    nl = spec.scheme.n_levels
    n = spec.n_emitters
    excited = nl - 1
    guided = spec.scheme.guided_ground_index
    ops: list[Operator] = []
    for j in range(n):
        for i, g in enumerate(spec.scheme.ground_labels):
            rate = spec.scheme.gamma(g)
            if rate > 0.0:
                local = math.sqrt(rate) * transition(nl, i, excited)
                ops.append(Operator(embed(local, j, n, nl), spec.dims))
    collective = np.zeros((spec.dim, spec.dim), dtype=complex)
    for j in range(n):
        collective += embed(transition(nl, guided, excited), j, n, nl)
    ops.append(Operator(math.sqrt(spec.gamma_1d) * collective, spec.dims))
    if spec.gamma_d > 0.0:
        # dephasing acts on the two protocol levels g0 and g1 only
        for j in range(n):
            for i in (0, 1):
                proj = math.sqrt(spec.gamma_d) * transition(nl, i, i)
                ops.append(Operator(embed(proj, j, n, nl), spec.dims))
    return ops


def target_state(n: int, n_levels: int = 2) -> np.ndarray:
    """W-type target: equal superposition of the n states with a single
    emitter in g0 and the rest in g1, amplitude 1/sqrt(n) each.

    With the g1 -> e drives in phase across emitters (the convention used
    throughout), the symmetric combination is the state fed by subradiant
    decay, so all amplitudes are +1/sqrt(n).  ``n_levels`` sets the
    per-emitter dimension of the returned vector (2 for the bare qubit
    ground manifold, 3/4 to embed into a Lambda/four-level space).
    """
    if n < 2:
        raise ValueError(f"the target state needs at least two emitters, got n={n}")
    dim = n_levels**n
    psi = np.zeros(dim, dtype=complex)
    for j in range(n):
        # emitter j in level 0, all others in level 1
        idx = 0
        for k in range(n):
            digit = 0 if k == j else 1
            idx += digit * n_levels**k
        psi[idx] = 1.0
    return psi / math.sqrt(n)


def embed_ground_vector(psi: np.ndarray, n_emitters: int, n_levels: int) -> np.ndarray:
    """Zero-pad a 2-level-per-emitter vector into an n_levels-per-emitter space
    (digit map 0 -> 0, 1 -> 1, everything else unpopulated)."""
    psi = np.asarray(psi, dtype=complex)
    if psi.size != 2**n_emitters:
        raise ValueError(f"expected a 2^{n_emitters} vector, got length {psi.size}")
    out = np.zeros(n_levels**n_emitters, dtype=complex)
    for src in range(psi.size):
        if psi[src] == 0.0:
            continue
        rem = src
        dst = 0
        for k in range(n_emitters):
            dst += (rem % 2) * n_levels**k
            rem //= 2
        out[dst] = psi[src]
    return out


def _ground_index(digits: tuple[int, ...], n_levels: int) -> int:
    return sum(d * n_levels**k for k, d in enumerate(digits))


def basis_transform(
    name: str,
    n: int = 2,
    n_levels: int = 3,
    omega0: float | None = None,
    omega1: float | None = None,
) -> Operator:
    """Unitary mapping the computational basis to a named ground basis.

    Supported for two emitters:

    * ``singlet_triplet``: {|00>, |T>, |S>, |11>}
    * ``bright_dark`` (needs omega0, omega1): {|B>, |D>, |T>, |11>} with
      |B> = (sqrt(2) W0 |00> - W1 |S>)/sqrt(2 W0^2 + W1^2) and |D> its
      orthogonal complement in span{|00>, |S>}
    * ``microwave_U``: {|S>, |U0>, |U+>, |U->} with |U0> = (|00>-|11>)/sqrt(2)
      and |U+-> = (|00>+|11> +- sqrt(2)|T>)/2

    Columns of the returned operator are the new basis states in
    computational coordinates; excited-state rows pass through unchanged,
    so coordinates in the new basis are U^dagger psi.
    """
    if n != 2:
        raise ValueError(f"basis '{name}' is only defined for n=2, got n={n}")
    dim = n_levels**2
    i00 = _ground_index((0, 0), n_levels)
    i01 = _ground_index((0, 1), n_levels)  # emitter 0 in g0, emitter 1 in g1
    i10 = _ground_index((1, 0), n_levels)
    i11 = _ground_index((1, 1), n_levels)
    ket = {}
    for key, idx in (("00", i00), ("01", i01), ("10", i10), ("11", i11)):
        v = np.zeros(dim, dtype=complex)
        v[idx] = 1.0
        ket[key] = v
    t = (ket["01"] + ket["10"]) / math.sqrt(2)
    s = (ket["01"] - ket["10"]) / math.sqrt(2)

    if name == "singlet_triplet":
        new_basis = [ket["00"], t, s, ket["11"]]
    elif name == "bright_dark":
        if omega0 is None or omega1 is None:
            raise ValueError("bright_dark requires omega0 and omega1")
        norm = math.sqrt(2 * omega0**2 + omega1**2)
        bright = (math.sqrt(2) * omega0 * ket["00"] - omega1 * s) / norm
        dark = (omega1 * ket["00"] + math.sqrt(2) * omega0 * s) / norm
        new_basis = [bright, dark, t, ket["11"]]
    elif name == "microwave_U":
        u0 = (ket["00"] - ket["11"]) / math.sqrt(2)
        up = (ket["00"] + ket["11"] + math.sqrt(2) * t) / 2
        um = (ket["00"] + ket["11"] - math.sqrt(2) * t) / 2
        new_basis = [s, u0, up, um]
    else:
        raise ValueError(f"unsupported basis '{name}' for n={n}")

    used = {i00, i01, i10, i11}
    u = np.zeros((dim, dim), dtype=complex)
    col = 0
    for v in new_basis:
        u[:, col] = v
        col += 1
    for idx in range(dim):
        if idx not in used:
            u[idx, col] = 1.0
            col += 1
    return Operator(u, (n_levels, n_levels))
