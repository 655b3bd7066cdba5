"""Experimental imperfection models: the caesium four-level scheme and
quasi-static broadening of the transition frequencies.

Broadening is modelled as per-emitter, per-transition detuning offsets
eps[i, j] frozen within each run.  For two emitters and two optical legs the
offsets decompose into four collective combinations (all-same, emitter-odd,
transition-odd, and doubly-odd); the doubly-odd one acts like an effective
drive between the symmetric and antisymmetric ground states and is the
channel the protocol is most sensitive to.  Its standard deviation sets the
inhomogeneous dephasing time T2* = 2/sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import WqedError
from .liouville import GeneratorAction, fidelity, steady_state
from .model import LevelScheme, SystemSpec, target_state
from .tables import write_csv

# sign conventions of the four collective combinations: transitions i in
# {0, 1} carry (+1, -1), emitters (paper index j in {1, 2}) carry (-1, +1)
_SIGN_I = np.array([1.0, -1.0])
_SIGN_J = np.array([-1.0, 1.0])

CHANNELS = ("sum_plus", "dif_plus", "sum_minus", "dif_minus")


def cs_scheme() -> LevelScheme:
    """Caesium D2 four-level scheme: ground levels g0, g1, g2 and one
    excited level, with non-guided branching 7/15 : 5/12 : 7/60 and the
    pi-polarised e <-> g0 transition coupled to the waveguide."""
    return LevelScheme(
        labels=("g0", "g1", "g2", "e"),
        branching={
            ("e", "g0"): 7.0 / 15.0,
            ("e", "g1"): 5.0 / 12.0,
            ("e", "g2"): 7.0 / 60.0,
        },
        guided_transition=("e", "g0"),
    )


@dataclass(frozen=True)
class BroadeningSpec:
    """Standard deviations (units of Gamma') of the four collective
    detuning combinations, plus the ensemble size and master seed."""

    sigma_sum_plus: float = 0.0
    sigma_dif_plus: float = 0.0
    sigma_sum_minus: float = 0.0
    sigma_dif_minus: float = 0.0
    n_samples: int = 1
    seed: int = 0

    def __post_init__(self):
        if min(self.sigmas) < 0:
            raise ValueError("standard deviations must be non-negative")
        if self.n_samples < 1:
            raise ValueError("need at least one sample")

    @property
    def sigmas(self) -> tuple[float, float, float, float]:
        return (self.sigma_sum_plus, self.sigma_dif_plus,
                self.sigma_sum_minus, self.sigma_dif_minus)

    def t2_star(self) -> float:
        """Inhomogeneous dephasing time 2/sigma_dif_minus (units 1/Gamma')."""
        if self.sigma_dif_minus == 0:
            return math.inf
        return 2.0 / self.sigma_dif_minus


@dataclass(frozen=True)
class DisorderSample:
    """One frozen draw of the detuning offsets eps[i, j] (two optical
    transitions x two emitters)."""

    eps: np.ndarray
    draws: tuple[float, float, float, float]

    def combinations(self) -> tuple[float, float, float, float]:
        """Recompute the four collective combinations (round-trip check)."""
        e = self.eps
        out = []
        for si, sj in ((1, 1), (1, _SIGN_J), (_SIGN_I, 1), (_SIGN_I, _SIGN_J)):
            w = np.outer(np.atleast_1d(si) * np.ones(2), np.atleast_1d(sj) * np.ones(2))
            out.append(float(np.sum(w * e) / 4.0))
        return tuple(out)


def sample_disorder(bspec: BroadeningSpec, index: int) -> DisorderSample:
    """Draw the four collective amplitudes from independent zero-mean
    Gaussians and invert the linear map to per-emitter offsets.
    Deterministic in (seed, index)."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(bspec.seed, index)))
    draws = tuple(rng.normal(0.0, s) if s > 0 else 0.0 for s in bspec.sigmas)
    sp, dp, sm, dm = draws
    eps = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            eps[i, j] = (sp + _SIGN_J[j] * dp + _SIGN_I[i] * sm
                         + _SIGN_I[i] * _SIGN_J[j] * dm)
    return DisorderSample(eps=eps, draws=draws)


def apply_disorder(spec: SystemSpec, sample: DisorderSample) -> SystemSpec:
    """Attach a disorder draw to a system spec (offsets act on the first two
    ground transitions; any further levels are left unshifted)."""
    eps = np.zeros((spec.scheme.n_ground, spec.n_emitters))
    eps[:2, :2] = sample.eps
    return spec.with_disorder(eps)


def ensemble_fidelity(
    spec: SystemSpec,
    bspec: BroadeningSpec,
    *,
    target=None,
    return_samples: bool = False,
):
    """Mean steady-state fidelity over the disorder ensemble, with the
    standard error of the mean."""
    if spec.n_emitters != 2:
        raise ValueError("broadening ensembles are defined for two emitters")
    if target is None:
        target = target_state(2, n_levels=spec.scheme.n_levels)
    values = np.empty(bspec.n_samples)
    for k in range(bspec.n_samples):
        sample = sample_disorder(bspec, k)
        try:
            rho = steady_state(GeneratorAction.from_spec(apply_disorder(spec, sample)))
        except WqedError as exc:
            raise WqedError(f"sample {k}: {exc}") from exc
        values[k] = fidelity(rho, target)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(bspec.n_samples)) if bspec.n_samples > 1 else 0.0
    if return_samples:
        return mean, stderr, values
    return mean, stderr


def channel_scan(
    spec: SystemSpec,
    sigma: float,
    n_samples: int,
    seed: int = 0,
) -> dict[str, tuple[float, float]]:
    """Mean fidelity with one broadening channel active at a time."""
    out = {}
    for name in CHANNELS:
        bspec = BroadeningSpec(**{f"sigma_{name}": sigma},
                               n_samples=n_samples, seed=seed)
        out[name] = ensemble_fidelity(spec, bspec)
    return out


def ensemble_to_csv(path, rows, precision: int = 12) -> None:
    """rows: iterables (sigma_channel, sigma_value, mean_fidelity, stderr, n_samples)."""
    write_csv(path, ["sigma_channel", "sigma_value", "mean_fidelity", "stderr", "n_samples"],
              rows, precision=precision)
