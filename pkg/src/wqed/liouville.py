"""Lindblad evolution, steady states, and Monte Carlo wave-function unraveling.

The generator acts matrix-free as rho -> -i[H, rho] + sum_k D[L_k] rho.
Dense column-stacked superoperators are materialised only inside the
steady-state solver (small spaces) and the eigendecomposition propagator;
large spaces go through sparse factorisations or trajectory sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import IntegrationFailureError, NonUniqueSteadyStateError
from .model import Operator, SystemSpec, build_hamiltonian, build_lindblads, \
    embed_ground_vector, ground_state_indices, state_labels
from .tables import write_csv

DENSE_STEADY_CUTOFF = 64  # Hilbert dimension above which the sparse solver is used
DENSE_EVOLVE_CUTOFF = 32


def _as_matrix(op) -> np.ndarray:
    if isinstance(op, Operator):
        return op.matrix
    return np.asarray(op, dtype=complex)


@dataclass(eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = int(np.prod(self.dims))
        if self.matrix.shape != (d, d):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match dims {self.dims}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, psi: np.ndarray, dims: tuple[int, ...] | None = None) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / la.norm(psi)
        if dims is None:
            dims = (psi.size,)
        return cls(np.outer(psi, psi.conj()), dims)

    @classmethod
    def maximally_mixed(cls, dim: int, dims: tuple[int, ...] | None = None,
                        support: np.ndarray | None = None) -> "DensityMatrix":
        """Uniform mixture, optionally restricted to a subset of basis states."""
        rho = np.zeros((dim, dim), dtype=complex)
        if support is None:
            rho[np.diag_indices(dim)] = 1.0 / dim
        else:
            support = np.asarray(support, dtype=int)
            rho[support, support] = 1.0 / support.size
        return cls(rho, dims if dims is not None else (dim,))

    def validate(self, trace_tol: float = 1e-9, herm_tol: float = 1e-10,
                 eig_floor: float = -1e-8) -> "DensityMatrix":
        tr = np.trace(self.matrix)
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace {tr} deviates from 1 by more than {trace_tol}")
        herm = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if herm > herm_tol:
            raise ValueError(f"Hermiticity violation {herm:.3e} exceeds {herm_tol}")
        evals = la.eigvalsh((self.matrix + self.matrix.conj().T) / 2)
        if evals.min() < eig_floor:
            raise ValueError(f"minimum eigenvalue {evals.min():.3e} below {eig_floor}")
        return self

    def population(self, index: int) -> float:
        return self.matrix[index, index].real


class GeneratorAction:
    """A Liouvillian as an applicable map, never materialised as dim^2 x dim^2
    unless a solver explicitly asks for the superoperator."""

    def __init__(self, hamiltonian, lindblads, dims: tuple[int, ...] | None = None):
        self.h = _as_matrix(hamiltonian)
        self.lindblads = [_as_matrix(l) for l in lindblads]
        if dims is None:
            if isinstance(hamiltonian, Operator):
                dims = hamiltonian.dims
            else:
                dims = (self.h.shape[0],)
        self.dims = tuple(dims)
        d = self.h.shape[0]
        for l in self.lindblads:
            if l.shape != (d, d):
                raise ValueError("Lindblad operator dimension mismatch")
        self.ldl = [l.conj().T @ l for l in self.lindblads]
        self.ldl_sum = sum(self.ldl, np.zeros((d, d), dtype=complex))
        # non-Hermitian drift Hamiltonian used by evolve/trajectories
        self.h_nh = self.h - 0.5j * self.ldl_sum

    @property
    def dim(self) -> int:
        return self.h.shape[0]

    @classmethod
    def from_spec(cls, spec: SystemSpec, cap: int | None = None) -> "GeneratorAction":
        h = build_hamiltonian(spec, cap=cap)
        ls = build_lindblads(spec, cap=cap)
        return cls(h, ls, dims=h.dims)

    def scale(self) -> float:
        """Magnitude scale of the generator, used to normalise residuals."""
        s = np.max(np.abs(self.h)) if self.h.size else 0.0
        if self.ldl_sum.size:
            s = max(s, float(np.max(np.abs(self.ldl_sum))))
        return max(s, 1e-300)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """-i[H, rho] + sum_k (L rho L^+ - {L^+L, rho}/2), matrix-free."""
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != self.h.shape:
            raise ValueError(f"state shape {rho.shape} does not match generator dim {self.dim}")
        out = -1j * (self.h_nh @ rho - rho @ self.h_nh.conj().T)
        for l in self.lindblads:
            out += l @ rho @ l.conj().T
        return out


def apply_generator(gen: GeneratorAction, rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        rho = rho.matrix
    return gen.apply(rho)


# ---------------------------------------------------------------------------
# superoperators (column-stacking convention: vec stacks columns, so
# vec(A X B) = (B^T kron A) vec(X))
# ---------------------------------------------------------------------------

def dense_superoperator(gen: GeneratorAction) -> np.ndarray:
    d = gen.dim
    eye = np.eye(d)
    s = -1j * (np.kron(eye, gen.h) - np.kron(gen.h.T, eye))
    for l, ldl in zip(gen.lindblads, gen.ldl):
        s += np.kron(l.conj(), l)
        s -= 0.5 * (np.kron(eye, ldl) + np.kron(ldl.T, eye))
    return s


def sparse_superoperator(gen: GeneratorAction, threshold: float = 0.0) -> sp.csc_matrix:
    d = gen.dim
    eye = sp.identity(d, dtype=complex, format="csr")

    def _sparse(mat):
        m = sp.csr_matrix(mat)
        if threshold > 0.0:
            m.data[np.abs(m.data) < threshold] = 0.0
            m.eliminate_zeros()
        return m

    h = _sparse(gen.h)
    s = -1j * (sp.kron(eye, h, format="csr") - sp.kron(h.T, eye, format="csr"))
    for l, ldl in zip(gen.lindblads, gen.ldl):
        ls = _sparse(l)
        ldls = _sparse(ldl)
        s = s + sp.kron(ls.conj(), ls, format="csr")
        s = s - 0.5 * (sp.kron(eye, ldls, format="csr") + sp.kron(ldls.T, eye, format="csr"))
    return s.tocsc()


def _vec(rho: np.ndarray) -> np.ndarray:
    return rho.flatten(order="F")


def _unvec(v: np.ndarray, d: int) -> np.ndarray:
    return v.reshape((d, d), order="F")


# ---------------------------------------------------------------------------
# steady state
# ---------------------------------------------------------------------------

def steady_state(
    gen: GeneratorAction,
    *,
    method: str = "auto",
    check_unique: bool = True,
    gap_rtol: float = 1e-13,
    residual_rtol: float = 1e-10,
) -> DensityMatrix:
    """Unique stationary state of the generator.

    For Hilbert dimension <= 64 the dense superoperator is diagonalised and
    the null eigenvector extracted; the spectral gap doubles as the
    uniqueness check.  Larger spaces use a sparse LU factorisation of the
    (tiny-shifted) superoperator and inverse iteration, with a deflated
    second vector estimating the gap.  Direct long-time integration is not
    viable here: the slowest relaxation rates scale like Omega^2/Gamma_1D^2,
    which puts the equilibration time beyond 1e8/Gamma' for the parameter
    ranges of interest.
    """
    d = gen.dim
    if method == "auto":
        method = "dense" if d <= DENSE_STEADY_CUTOFF else "sparse"
    if method == "dense":
        rho, lam0, gap, spec_scale = _steady_dense(gen)
    elif method == "sparse":
        rho, lam0, gap, spec_scale = _steady_sparse(gen)
    else:
        raise ValueError(f"unknown steady-state method '{method}'")

    if check_unique:
        tol = max(10.0 * abs(lam0), gap_rtol * spec_scale)
        if gap < tol:
            raise NonUniqueSteadyStateError(gap, tol)

    rho = (rho + rho.conj().T) / 2
    tr = np.trace(rho).real
    if abs(tr) < 1e-8 * la.norm(rho):
        raise NonUniqueSteadyStateError(abs(tr), 1e-8)
    rho = rho / tr
    resid = float(np.max(np.abs(gen.apply(rho))))
    scale = gen.scale()
    if resid > residual_rtol * scale:
        raise NonUniqueSteadyStateError(resid / scale, residual_rtol)
    return DensityMatrix(rho, gen.dims)


def _steady_dense(gen: GeneratorAction):
    s = dense_superoperator(gen)
    evals, evecs = la.eig(s)
    order = np.argsort(np.abs(evals))
    lam0 = evals[order[0]]
    gap = abs(evals[order[1]]) if len(evals) > 1 else math.inf
    spec_scale = float(np.max(np.abs(evals))) if len(evals) else 1.0
    rho = _unvec(evecs[:, order[0]], gen.dim)
    return rho, abs(lam0), gap, max(spec_scale, 1e-300)


def _steady_sparse(gen: GeneratorAction, shift: float = 1e-12, max_iter: int = 30):
    from scipy.sparse.csgraph import reverse_cuthill_mckee

    d = gen.dim
    s = sparse_superoperator(gen)
    spec_scale = float(abs(s).sum(axis=0).max())  # 1-norm upper bound on |lambda|
    shifted = (s - shift * sp.identity(d * d, dtype=complex, format="csc")).tocsc()
    # bandwidth-reducing permutation roughly halves the LU fill here
    pattern = (abs(shifted) + abs(shifted).T).tocsr()
    perm = reverse_cuthill_mckee(pattern, symmetric_mode=True)
    lu = spla.splu(shifted[perm][:, perm].tocsc(), permc_spec="NATURAL")
    inv_perm = np.empty_like(perm)
    inv_perm[perm] = np.arange(perm.size)

    def solve(v):
        return lu.solve(v[perm])[inv_perm]

    rng = np.random.default_rng(1234)
    x = rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d)
    x /= la.norm(x)
    resid = math.inf
    for _ in range(max_iter):
        x = solve(x)
        x /= la.norm(x)
        resid = la.norm(s @ x)
        if resid < 1e-13 * max(spec_scale, 1.0):
            break
    lam0 = resid
    # deflated inverse iteration for the spectral gap
    y = rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d)
    y -= (x.conj() @ y) * x
    y /= la.norm(y)
    mu = math.inf
    for _ in range(8):
        y = solve(y)
        y -= (x.conj() @ y) * x
        nrm = la.norm(y)
        if nrm == 0.0:
            break
        y /= nrm
        mu_new = abs(y.conj() @ (s @ y))
        if mu != math.inf and abs(mu_new - mu) < 0.05 * mu_new:
            mu = mu_new
            break
        mu = mu_new
    rho = _unvec(x, d)
    return rho, lam0, mu, max(spec_scale, 1e-300)


# ---------------------------------------------------------------------------
# trajectories of observables
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Time grid plus named scalar observables sampled on it."""

    times: np.ndarray
    columns: list[str]
    data: np.ndarray  # shape (len(times), len(columns))
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    @property
    def fidelity(self) -> np.ndarray:
        return self.column("fidelity")

    def to_csv(self, path, precision: int = 12) -> None:
        header = ["time"] + list(self.columns)
        rows = [[t] + list(row) for t, row in zip(self.times, self.data)]
        write_csv(path, header, rows, precision=precision)


class _ObservableSet:
    """Named scalar observables evaluated on rho or on a pure state."""

    def __init__(self, entries: list[tuple[str, str, object]]):
        self.entries = entries

    @classmethod
    def build(cls, dim, observables=None, target=None, population_labels=None,
              max_auto_populations: int = 64):
        entries: list[tuple[str, str, object]] = []
        if target is not None:
            psi = np.asarray(target, dtype=complex)
            entries.append(("fidelity", "proj", psi))
        if observables:
            for name, payload in observables.items():
                payload = np.asarray(payload, dtype=complex)
                if payload.ndim == 1:
                    kind = "proj"
                elif payload.shape[0] == payload.shape[1]:
                    kind = "op"
                else:
                    kind = "rows"  # subspace projector given by its row space
                entries.append((name, kind, payload))
        else:
            if dim <= max_auto_populations:
                labels = population_labels or [f"p{i}" for i in range(dim)]
                for i in range(dim):
                    entries.append((labels[i], "pop", i))
        return cls(entries)

    @property
    def names(self) -> list[str]:
        return [name for name, _, _ in self.entries]

    def eval_rho(self, rho: np.ndarray) -> np.ndarray:
        out = np.empty(len(self.entries))
        for k, (_, kind, payload) in enumerate(self.entries):
            if kind == "pop":
                out[k] = rho[payload, payload].real
            elif kind == "proj":
                out[k] = (payload.conj() @ rho @ payload).real
            elif kind == "rows":
                out[k] = np.sum((payload @ rho) * payload.conj()).real
            else:
                out[k] = np.trace(payload @ rho).real
        return out

    def eval_psi(self, psi: np.ndarray, norm2: float) -> np.ndarray:
        out = np.empty(len(self.entries))
        for k, (_, kind, payload) in enumerate(self.entries):
            if kind == "pop":
                out[k] = (abs(psi[payload]) ** 2) / norm2
            elif kind == "proj":
                out[k] = (abs(payload.conj() @ psi) ** 2) / norm2
            elif kind == "rows":
                out[k] = float(la.norm(payload @ psi) ** 2) / norm2
            else:
                out[k] = (psi.conj() @ (payload @ psi)).real / norm2
        return out


def evolve(
    gen: GeneratorAction,
    rho0,
    times,
    *,
    observables=None,
    target=None,
    population_labels=None,
    method: str = "auto",
    rtol: float = 1e-8,
    atol: float = 1e-10,
    guard=None,
) -> tuple[Trajectory, DensityMatrix]:
    """Integrate d rho/dt = L[rho], sampling observables on ``times``.

    ``method='eig'`` propagates exactly through the eigendecomposition of the
    dense superoperator (best for small dimensions: the weak-drive problems
    are stiff, with rates spanning Gamma_1D down to Omega^2/Gamma_1D^2).
    ``method='rk'`` is the adaptive explicit Runge-Kutta path (DOP853,
    rtol 1e-8 / atol 1e-10); the state is re-Hermitised after every accepted
    segment and the right-hand side is symmetrised, which keeps the
    Hermiticity drift at rounding level.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ValueError("need a non-empty 1-D time grid")
    if isinstance(rho0, DensityMatrix):
        rho0 = rho0.matrix
    rho0 = np.asarray(rho0, dtype=complex)
    d = gen.dim
    obs = _ObservableSet.build(d, observables, target, population_labels)
    if method == "auto":
        method = "eig" if d <= DENSE_EVOLVE_CUTOFF else "rk"

    if method == "eig":
        samples, rho_t = _evolve_eig(gen, rho0, times)
        if samples is None:  # defective superoperator, fall back
            samples, rho_t = _evolve_rk(gen, rho0, times, rtol, atol)
    elif method == "rk":
        samples, rho_t = _evolve_rk(gen, rho0, times, rtol, atol)
    else:
        raise ValueError(f"unknown evolve method '{method}'")

    data = np.empty((times.size, len(obs.entries)))
    for k, rho in enumerate(samples):
        if guard is not None:
            guard(times[k], rho)
        data[k] = obs.eval_rho(rho)
    traj = Trajectory(times.copy(), obs.names, data)
    final = DensityMatrix(rho_t, gen.dims)
    return traj, final


def _evolve_eig(gen: GeneratorAction, rho0: np.ndarray, times: np.ndarray):
    s = dense_superoperator(gen)
    evals, evecs = la.eig(s)
    v0 = _vec(rho0)
    try:
        coeff = la.solve(evecs, v0)
    except la.LinAlgError:
        return None, None
    recon = evecs @ coeff
    if la.norm(recon - v0) > 1e-8 * max(la.norm(v0), 1e-300):
        return None, None
    t0 = times[0]
    samples = []
    rho_t = rho0
    tr0 = np.trace(rho0).real
    for t in times:
        v = evecs @ (coeff * np.exp(evals * (t - t0)))
        rho_t = _unvec(v, gen.dim)
        rho_t = (rho_t + rho_t.conj().T) / 2
        # the exact flow conserves the trace; rescaling removes the
        # exp(lambda_err * t) drift of the numerically-zero eigenvalue
        tr = np.trace(rho_t).real
        if tr != 0.0:
            rho_t = rho_t * (tr0 / tr)
        samples.append(rho_t)
    return samples, rho_t


def _evolve_rk(gen: GeneratorAction, rho0: np.ndarray, times: np.ndarray,
               rtol: float, atol: float):
    d = gen.dim

    def rhs(t, y):
        rho = y.reshape((d, d))
        drho = gen.apply(rho)
        drho = (drho + drho.conj().T) / 2
        return drho.ravel()

    samples = [rho0]
    y = rho0.ravel().astype(complex)
    for t_prev, t_next in zip(times[:-1], times[1:]):
        if t_next == t_prev:
            samples.append(samples[-1])
            continue
        sol = solve_ivp(rhs, (t_prev, t_next), y, method="DOP853",
                        rtol=rtol, atol=atol, dense_output=False)
        if not sol.success:
            raise IntegrationFailureError(float(sol.t[-1]), sol.message)
        y = sol.y[:, -1]
        rho = y.reshape((d, d))
        rho = (rho + rho.conj().T) / 2
        y = rho.ravel()
        samples.append(rho)
    return samples, samples[-1].copy()


# ---------------------------------------------------------------------------
# Monte Carlo wave functions
# ---------------------------------------------------------------------------

class _Propagator:
    """Dyadic ladder of exp(-i H_nh dt) factors for one interval length.

    The interval is split into 2^levels units no longer than the jump
    resolution; propagation over any number of units is a product of the
    precomputed dyadic exponentials, so locating a norm-threshold crossing
    is a walk down the ladder (bisection to within one unit).
    """

    def __init__(self, h_nh: np.ndarray, delta: float, resolution: float):
        self.delta = delta
        levels = max(0, math.ceil(math.log2(delta / resolution))) if delta > resolution else 0
        self.levels = levels
        self.n_units = 1 << levels
        self.unit = delta / self.n_units
        base = -1j * h_nh
        self.u = {}
        mat = la.expm(base * self.unit)
        self.u[1] = mat
        size = 1
        while size < self.n_units:
            mat = mat @ mat
            size *= 2
            self.u[size] = mat

    def advance(self, psi: np.ndarray, n_units: int, threshold: float):
        """Propagate up to ``n_units``; stop at the first norm^2 crossing.

        Returns (psi, units_consumed, crossed).  When ``crossed`` the
        returned state sits within one unit past the crossing point.
        """
        consumed = 0
        while consumed < n_units:
            remaining = n_units - consumed
            chunk = 1 << (remaining.bit_length() - 1)
            while True:
                cand = self.u[chunk] @ psi
                n2 = float(np.real(np.vdot(cand, cand)))
                if n2 > threshold:
                    psi = cand
                    consumed += chunk
                    break
                if chunk == 1:
                    return cand, consumed + 1, True
                chunk //= 2
        return psi, consumed, False


def _run_trajectories(args):
    (h_nh, lindblads, intervals, indices, seed, obs_entries, sampler,
     jump_resolution, guard, times) = args
    obs = _ObservableSet(obs_entries)
    props = {}
    for delta in sorted({round(dt, 12) for dt in intervals if dt > 0}):
        props[delta] = _Propagator(h_nh, delta, jump_resolution)
    n_t = len(times)
    n_cols = len(obs.entries)
    out = np.empty((len(indices), n_t, n_cols))
    for row, idx in enumerate(indices):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, idx)))
        psi = np.asarray(sampler(rng), dtype=complex)
        psi = psi / la.norm(psi)
        threshold = rng.random()
        norm_ref = 1.0
        out[row, 0] = obs.eval_psi(psi, float(np.real(np.vdot(psi, psi))))
        if guard is not None:
            guard(times[0], psi / la.norm(psi))
        for k, dt in enumerate(intervals):
            if dt > 0:
                prop = props[round(dt, 12)]
                units_left = prop.n_units
                while units_left > 0:
                    psi, used, crossed = prop.advance(psi, units_left, threshold)
                    units_left -= used
                    if crossed:
                        psi, threshold = _do_jump(psi, lindblads, rng)
            n2 = float(np.real(np.vdot(psi, psi)))
            if n2 < 1e-280:
                raise IntegrationFailureError(times[k + 1], "state norm collapsed")
            out[row, k + 1] = obs.eval_psi(psi, n2)
            if guard is not None:
                guard(times[k + 1], psi / math.sqrt(n2))
    return out


def _do_jump(psi: np.ndarray, lindblads: list[np.ndarray], rng):
    jumps = [l @ psi for l in lindblads]
    weights = np.array([float(np.real(np.vdot(j, j))) for j in jumps])
    total = weights.sum()
    if total <= 0.0:
        # no open channel: renormalise and continue (can only happen for
        # pathological thresholds)
        psi = psi / la.norm(psi)
        return psi, rng.random()
    pick = rng.random() * total
    k = int(np.searchsorted(np.cumsum(weights), pick))
    k = min(k, len(jumps) - 1)
    psi = jumps[k] / math.sqrt(weights[k])
    return psi, rng.random()


def trajectories(
    gen: GeneratorAction,
    psi_sampler,
    times,
    n_traj: int,
    seed: int,
    *,
    observables=None,
    target=None,
    population_labels=None,
    n_workers: int = 1,
    jump_resolution: float = 1e-3,
    guard=None,
) -> Trajectory:
    """Monte Carlo wave-function unraveling of the master equation.

    Between jumps the state evolves under the non-Hermitian drift
    H - (i/2) sum L^+L, propagated exactly with precomputed matrix
    exponentials; jump times are located by norm-threshold bisection to
    within ``jump_resolution`` (units of 1/Gamma'), the channel is drawn
    proportionally to <L^+L>, and the state renormalised.  Fully
    reproducible: trajectory i is seeded from (seed, i), and the ensemble
    reduction is index-ordered.

    Returns the ensemble-mean trajectory; for every observable column
    ``x`` a companion column ``x_stderr`` holds the standard error.
    """
    times = np.asarray(times, dtype=float)
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    if np.any(np.diff(times) < 0):
        raise ValueError("time grid must be non-decreasing")
    obs = _ObservableSet.build(gen.dim, observables, target, population_labels)
    intervals = list(np.diff(times))
    common = (gen.h_nh, gen.lindblads, intervals, None, seed, obs.entries,
              psi_sampler, jump_resolution, guard, list(times))

    if n_workers <= 1 or n_traj == 1:
        per_traj = _run_trajectories(_with_indices(common, list(range(n_traj))))
    else:
        from concurrent.futures import ProcessPoolExecutor

        chunks = _split(list(range(n_traj)), n_workers)
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_run_trajectories,
                                    [_with_indices(common, c) for c in chunks]))
        per_traj = np.concatenate(results, axis=0)

    mean = per_traj.mean(axis=0)
    if n_traj > 1:
        stderr = per_traj.std(axis=0, ddof=1) / math.sqrt(n_traj)
    else:
        stderr = np.zeros_like(mean)
    names = list(obs.names) + [f"{n}_stderr" for n in obs.names]
    data = np.concatenate([mean, stderr], axis=1)
    traj = Trajectory(times.copy(), names, data, meta={"n_traj": n_traj, "seed": seed})
    return traj


def _with_indices(common, indices):
    (h_nh, lindblads, intervals, _, seed, obs_entries, sampler,
     jump_resolution, guard, times) = common
    return (h_nh, lindblads, intervals, indices, seed, obs_entries, sampler,
            jump_resolution, guard, times)


def _split(items, n):
    size = math.ceil(len(items) / n)
    return [items[i:i + size] for i in range(0, len(items), size)]


# ---------------------------------------------------------------------------
# scalar diagnostics
# ---------------------------------------------------------------------------

def fidelity(rho, psi: np.ndarray) -> float:
    """<psi|rho|psi>; psi may live in the two-level ground manifold of a
    larger emitter space and is then embedded by zero-padding."""
    dims = None
    if isinstance(rho, DensityMatrix):
        dims = rho.dims
        rho = rho.matrix
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if psi.size != rho.shape[0]:
        if dims is not None and len(set(dims)) == 1 and psi.size == 2 ** len(dims):
            psi = embed_ground_vector(psi, len(dims), dims[0])
        else:
            raise ValueError(
                f"state vector length {psi.size} incompatible with dim {rho.shape[0]}")
    nrm = la.norm(psi)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"state vector norm {nrm} is not 1")
    val = psi.conj() @ rho @ psi
    if abs(val.imag) > 1e-10:
        raise ValueError(f"fidelity has imaginary part {val.imag:.3e}")
    return float(val.real)


def peak_fidelity(traj: Trajectory) -> tuple[float, float]:
    """Grid point of maximal fidelity; ties break toward the earliest time."""
    f = traj.fidelity
    if f.size == 0:
        raise ValueError("empty trajectory")
    k = int(np.argmax(f))
    return float(traj.times[k]), float(f[k])


# ---------------------------------------------------------------------------
# convenience constructors
# ---------------------------------------------------------------------------

def mixed_ground_initial(spec: SystemSpec) -> DensityMatrix:
    """Maximally mixed state over the ground manifold of the ensemble."""
    idx = ground_state_indices(spec.n_emitters, spec.scheme.n_levels)
    return DensityMatrix.maximally_mixed(spec.dim, dims=spec.dims, support=idx)


class BasisStateSampler:
    """Pure-state sampler drawing uniformly from a set of basis states
    (picklable, so it can cross process boundaries)."""

    def __init__(self, indices: np.ndarray, dim: int):
        self.indices = np.asarray(indices, dtype=int)
        self.dim = dim

    def __call__(self, rng) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.indices[rng.integers(self.indices.size)]] = 1.0
        return psi


def ground_basis_sampler(spec: SystemSpec) -> BasisStateSampler:
    """Sampler drawing uniformly from the ground basis states."""
    idx = ground_state_indices(spec.n_emitters, spec.scheme.n_levels)
    return BasisStateSampler(idx, spec.dim)


def singlet_triplet_labels(spec: SystemSpec) -> list[str]:
    return state_labels(spec.n_emitters, spec.scheme.n_levels)
