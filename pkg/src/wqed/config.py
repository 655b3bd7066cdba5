"""Line-oriented scenario configuration.

The format is ``section.key = value`` with ``#`` comments.  Physical rates
and frequencies must carry a unit annotation (``Gp`` for units of Gamma',
``MHz``/``kHz`` for ordinary frequencies converted through
``system.gamma_prime_mhz``); times accept ``invGp`` or ``us``.  Dimensionless
numbers, counts and strings are bare.  Unknown keys are rejected with the
offending line number.  Environment variables prefixed ``WQED_`` override
file values (``WQED_SOLVER_SEED`` overrides ``solver.seed``).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .imperfections import BroadeningSpec, cs_scheme
from .model import DriveSpec, SystemSpec, lambda_scheme
from .motion import MotionSpec

ENV_PREFIX = "WQED_"

# key -> (kind, default); kinds: rate (unit Gp/MHz/kHz), time (invGp/us),
# float, int, str, bool.  Defaults of None mean "absent unless given".
KNOWN_KEYS: dict[str, tuple[str, object]] = {
    "system.n_emitters": ("int", 2),
    "system.scheme": ("str", "lambda"),
    "system.gamma0": ("float", None),
    "system.gamma1": ("float", None),
    "system.beta": ("float", None),
    "system.gamma_1d": ("rate", None),
    "system.gamma_d": ("rate", 0.0),
    "system.gamma_prime_mhz": ("float", 5.234),
    "drive.omega0": ("rate", 0.0),
    "drive.omega1": ("rate_or_auto", "auto"),
    "drive.omega2": ("rate", None),
    "drive.delta0": ("rate", 0.0),
    "drive.delta1": ("rate", 0.0),
    "drive.delta2": ("rate", None),
    "drive.phases": ("str", "auto"),
    "disorder.sigma_sum_plus": ("rate", 0.0),
    "disorder.sigma_dif_plus": ("rate", 0.0),
    "disorder.sigma_sum_minus": ("rate", 0.0),
    "disorder.sigma_dif_minus": ("rate", 0.0),
    "disorder.samples": ("int", 16),
    "motion.enabled": ("bool", False),
    "motion.omega_z": ("rate", None),
    "motion.eta": ("float", None),
    "motion.nbar0": ("float", 0.0),
    "motion.n_cutoff": ("int", 15),
    "motion.modes": ("str", "relative_only"),
    "solver.method": ("str", "full"),
    "solver.task": ("str", "steady"),
    "solver.t_max": ("time", 3000.0),
    "solver.grid_points": ("int", 200),
    "solver.n_traj": ("int", 200),
    "solver.seed": ("int", 1),
    "solver.workers": ("int", 1),
    "solver.dim_cap": ("int", 4096),
    "output.path": ("str", "out.csv"),
    "output.precision": ("int", 12),
}

_RATE_UNITS = ("Gp", "MHz", "kHz")
_TIME_UNITS = ("invGp", "us")


def _parse_scalar(key: str, kind: str, raw: str, gamma_prime_mhz: float,
                  line: int | None = None):
    raw = raw.strip()
    if kind in ("rate", "rate_or_auto", "time"):
        if kind == "rate_or_auto" and raw == "auto":
            return "auto"
        parts = raw.split()
        if len(parts) != 2:
            raise ConfigError(
                f"{key}: physical quantity needs a unit annotation "
                f"({', '.join(_RATE_UNITS if kind != 'time' else _TIME_UNITS)})",
                line)
        try:
            value = float(parts[0])
        except ValueError:
            raise ConfigError(f"{key}: bad number '{parts[0]}'", line) from None
        unit = parts[1]
        if kind == "time":
            if unit == "invGp":
                return value
            if unit == "us":
                # 1 us in units of 1/Gamma' = 2*pi*gamma_prime_MHz
                return value * 2 * math.pi * gamma_prime_mhz
            raise ConfigError(f"{key}: unknown time unit '{unit}'", line)
        if unit == "Gp":
            return value
        if unit == "MHz":
            return value / gamma_prime_mhz
        if unit == "kHz":
            return value / (1000.0 * gamma_prime_mhz)
        raise ConfigError(f"{key}: unknown unit '{unit}'", line)
    if kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: bad number '{raw}'", line) from None
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: bad integer '{raw}'", line) from None
    if kind == "bool":
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{key}: bad boolean '{raw}'", line)
    return raw


@dataclass(eq=True)
class ScenarioConfig:
    """Parsed scenario: a flat map of known keys to canonical values
    (rates in Gamma', times in 1/Gamma')."""

    values: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str, apply_env: bool = True) -> "ScenarioConfig":
        # two passes so the unit reference is available wherever it appears
        gamma_prime_mhz = KNOWN_KEYS["system.gamma_prime_mhz"][1]
        entries = []
        for lineno, rawline in enumerate(text.splitlines(), start=1):
            stripped = rawline.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError("expected 'key = value'", lineno,
                                  column=len(rawline) - len(rawline.lstrip()) + 1)
            key, _, raw = stripped.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in KNOWN_KEYS:
                raise ConfigError(f"unknown key '{key}'", lineno)
            entries.append((lineno, key, raw))
            if key == "system.gamma_prime_mhz":
                gamma_prime_mhz = float(raw)
        values = {}
        for lineno, key, raw in entries:
            kind = KNOWN_KEYS[key][0]
            values[key] = _parse_scalar(key, kind, raw, gamma_prime_mhz, lineno)
        cfg = cls(values=values)
        if apply_env:
            cfg._apply_env(gamma_prime_mhz)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path, apply_env: bool = True) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.parse(fh.read(), apply_env=apply_env)

    def _apply_env(self, gamma_prime_mhz: float) -> None:
        for key, (kind, _) in KNOWN_KEYS.items():
            env = ENV_PREFIX + key.replace(".", "_").upper()
            if env in os.environ:
                self.values[key] = _parse_scalar(key, kind, os.environ[env],
                                                 gamma_prime_mhz)

    def get(self, key: str):
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown key '{key}'")
        return self.values.get(key, KNOWN_KEYS[key][1])

    def set(self, key: str, value) -> None:
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown key '{key}'")
        self.values[key] = value

    def set_numeric(self, key: str, value: float) -> None:
        """Set a numeric leaf from a bare number in canonical units."""
        kind = KNOWN_KEYS[key][0]
        if kind == "int":
            self.values[key] = int(value)
        elif kind in ("rate", "rate_or_auto", "time", "float"):
            self.values[key] = float(value)
        else:
            raise ConfigError(f"key '{key}' is not numeric")

    def serialize(self) -> str:
        """Canonical text (rates in Gp, times in invGp); parsing it back
        reproduces the same scenario."""
        lines = []
        for key in sorted(self.values):
            kind = KNOWN_KEYS[key][0]
            v = self.values[key]
            if kind in ("rate", "rate_or_auto") and v != "auto":
                lines.append(f"{key} = {v!r} Gp")
            elif kind == "time":
                lines.append(f"{key} = {v!r} invGp")
            elif kind == "bool":
                lines.append(f"{key} = {'true' if v else 'false'}")
            else:
                lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"

    def validate(self) -> None:
        if self.get("system.beta") is None and self.get("system.gamma_1d") is None:
            raise ConfigError("give system.beta or system.gamma_1d")
        if self.get("system.scheme") not in ("lambda", "cs"):
            raise ConfigError(f"unknown scheme '{self.get('system.scheme')}'")
        if self.get("solver.method") not in ("full", "effective", "trajectories"):
            raise ConfigError(f"unknown solver.method '{self.get('solver.method')}'")
        if self.get("solver.task") not in ("steady", "transient", "peak"):
            raise ConfigError(f"unknown solver.task '{self.get('solver.task')}'")

    # ------------------------------------------------------------------
    # builders
    # ------------------------------------------------------------------

    def gamma_1d(self) -> float:
        g = self.get("system.gamma_1d")
        if g is not None:
            return g
        beta = self.get("system.beta")
        if not (0 < beta < 1):
            raise ConfigError(f"beta must lie in (0, 1), got {beta}")
        return beta / (1 - beta)

    def system_spec(self) -> SystemSpec:
        from .effective import optimal_omega1

        scheme_name = self.get("system.scheme")
        if scheme_name == "cs":
            scheme = cs_scheme()
        else:
            g0, g1 = self.get("system.gamma0"), self.get("system.gamma1")
            scheme = lambda_scheme(g0 or 0.5, g1 or 0.5)
        omega0 = self.get("drive.omega0")
        delta = [self.get("drive.delta0"), self.get("drive.delta1")]
        omegas = [omega0, self.get("drive.omega1")]
        if scheme.n_ground == 3:
            omegas.append(self.get("drive.omega2") or 0.0)
            delta.append(self.get("drive.delta2") or 0.0)
        phases = None
        phases_raw = self.get("drive.phases")
        if phases_raw != "auto":
            try:
                phases = tuple(float(x) for x in phases_raw.split(","))
            except ValueError:
                raise ConfigError(f"bad phase list '{phases_raw}'") from None

        spec = SystemSpec(
            n_emitters=self.get("system.n_emitters"),
            scheme=scheme,
            drives=DriveSpec(omega=tuple(1.0 if o == "auto" else o for o in omegas),
                             delta=tuple(delta), phases=phases),
            gamma_1d=self.gamma_1d(),
            gamma_d=self.get("system.gamma_d"),
            dim_cap=self.get("solver.dim_cap"),
        )
        if omegas[1] == "auto":
            omegas[1] = optimal_omega1(spec)
            spec = SystemSpec(
                n_emitters=spec.n_emitters, scheme=scheme,
                drives=DriveSpec(omega=tuple(omegas), delta=tuple(delta), phases=phases),
                gamma_1d=spec.gamma_1d, gamma_d=spec.gamma_d,
                dim_cap=spec.dim_cap)
        return spec

    def broadening_spec(self) -> BroadeningSpec | None:
        sigmas = {name: self.get(f"disorder.sigma_{name}")
                  for name in ("sum_plus", "dif_plus", "sum_minus", "dif_minus")}
        if all(v == 0.0 for v in sigmas.values()):
            return None
        return BroadeningSpec(
            sigma_sum_plus=sigmas["sum_plus"],
            sigma_dif_plus=sigmas["dif_plus"],
            sigma_sum_minus=sigmas["sum_minus"],
            sigma_dif_minus=sigmas["dif_minus"],
            n_samples=self.get("disorder.samples"),
            seed=self.get("solver.seed"),
        )

    def motion_spec(self) -> MotionSpec | None:
        if not self.get("motion.enabled"):
            return None
        return MotionSpec(
            omega_z=self.get("motion.omega_z"),
            eta=self.get("motion.eta"),
            n_cutoff=self.get("motion.n_cutoff"),
            nbar0=self.get("motion.nbar0"),
            modes=self.get("motion.modes"),
        )

    def time_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.get("solver.t_max"),
                           self.get("solver.grid_points"))
