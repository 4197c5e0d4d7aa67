import dataclasses
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml

from .exceptions import ConfigError

CONFIG_DIR_ENV = "SCSS_SIM_CONFIG_DIR"
WORKERS_ENV = "SCSS_SIM_WORKERS"
CONFIG_FILENAME = "config.yml"


@dataclass(frozen=True)
class ExperimentConfig:
    """Physical parameters of the heralded squeezed-cat experiment model.

    Efficiencies and losses are fractions in [0, 1]; rates are in Hz.
    ``eta`` is the overall heralding-channel efficiency and must equal
    ``eta_f * eta_apd``. ``tmsv_phase`` only enters the exact TMSV heralding
    cross-check; the perturbative resource states do not depend on it.
    """

    eta: float = 0.15
    eta_f: float = 0.25
    eta_apd: float = 0.6
    single_click_rate: float = 4.0e5
    double_click_rate: float = 1.0e3
    f_pump: float = 76.0e6
    eta_prop: float = 0.06
    eta_qmc: float = 0.01
    n_stor_min: int = 9
    n_stor_max: int = 18
    r_hd: float = 0.24
    truncation: int = 20
    herald_halfwidth: float = 0.2
    tmsv_phase: float = 0.0
    reflectivity: float = 0.72
    target_working_truncation: int = 80

    def __post_init__(self):
        for name in ("eta", "eta_f", "eta_apd", "eta_prop", "eta_qmc", "r_hd", "reflectivity"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if abs(self.eta - self.eta_f * self.eta_apd) > 1e-12:
            raise ConfigError(
                f"eta ({self.eta}) must equal eta_f * eta_apd ({self.eta_f * self.eta_apd})"
            )
        for name in ("single_click_rate", "double_click_rate", "f_pump", "herald_halfwidth"):
            value = getattr(self, name)
            if value < 0 or not math.isfinite(value):
                raise ConfigError(f"{name} must be a finite non-negative number, got {value}")
        if not 0 <= self.n_stor_min <= self.n_stor_max:
            raise ConfigError(
                f"storage range must satisfy 0 <= n_stor_min <= n_stor_max, "
                f"got [{self.n_stor_min}, {self.n_stor_max}]"
            )
        if self.truncation < 1:
            raise ConfigError(f"truncation must be >= 1, got {self.truncation}")
        if self.target_working_truncation < self.truncation:
            raise ConfigError("target_working_truncation must be >= truncation")

    @property
    def storage_range(self) -> range:
        return range(self.n_stor_min, self.n_stor_max + 1)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown experiment config keys: {', '.join(unknown)}")
        kwargs = {}
        for key, value in data.items():
            caster = int if known[key].type in (int, "int") else float
            try:
                kwargs[key] = caster(value)
            except (TypeError, ValueError):
                raise ConfigError(f"{key}: cannot interpret {value!r} as {caster.__name__}")
        return cls(**kwargs)


# Frozen "paper" profile; config.yml may restate it but not redefine it
BUILTIN_PROFILES: Dict[str, Dict[str, Any]] = {
    "paper": ExperimentConfig().to_dict(),
    "lossless": ExperimentConfig(
        single_click_rate=0.0,
        eta_prop=0.0,
        eta_qmc=0.0,
        r_hd=0.0,
        herald_halfwidth=0.0,
    ).to_dict(),
}


class Config:
    """Central configuration: paths, runtime and tomography defaults, profiles."""

    def __init__(self, config_dir: Optional[Path] = None):
        self._explicit_dir = config_dir
        self.reload()

    def reload(self):
        """Re-read config.yml (after changing SCSS_SIM_CONFIG_DIR, for instance)."""
        env_dir = os.getenv(CONFIG_DIR_ENV)
        if self._explicit_dir is not None:
            self.config_dir = Path(self._explicit_dir)
        elif env_dir:
            self.config_dir = Path(env_dir)
        else:
            self.config_dir = Path(os.getcwd())
        self.config_path = self.config_dir / CONFIG_FILENAME
        self._load_config()

    def _load_config(self):
        """Load configuration from config.yml."""
        if self.config_path.exists():
            with open(self.config_path) as f:
                self.data = yaml.safe_load(f) or {}
        else:
            self.data = {}

    def _section(self, name: str) -> Dict[str, Any]:
        return self.data.get(name) or {}

    @property
    def output_dir(self) -> Path:
        path = self._section("paths").get("output_dir", "results")
        return self.config_dir / path

    @property
    def workers(self) -> int:
        env = os.getenv(WORKERS_ENV)
        if env:
            return max(1, int(env))
        return int(self._section("runtime").get("workers", 1))

    @property
    def show_progress(self) -> bool:
        return bool(self._section("runtime").get("progress", True))

    @property
    def tomography(self) -> Dict[str, Any]:
        defaults = {
            "bin_width": 0.1,
            "x_range": 6.0,
            "phase_bins": 90,
            "max_iterations": 1000,
            "convergence_tol": 1e-8,
            "negativity_eps": 0.005,
            "ci_percentiles": [16.0, 84.0],
        }
        defaults.update(self._section("tomography"))
        return defaults

    @property
    def profiles(self) -> Dict[str, Dict[str, Any]]:
        merged = {name: dict(values) for name, values in BUILTIN_PROFILES.items()}
        for name, values in self._section("profiles").items():
            if name == "paper" and values and ExperimentConfig.from_dict(values) != ExperimentConfig():
                raise ConfigError("the 'paper' profile is frozen and cannot be redefined")
            merged[name] = dict(values or {})
        return merged


def _looks_like_path(ref: str) -> bool:
    return ref.endswith((".yml", ".yaml")) or os.sep in ref or "/" in ref


def resolve_experiment_config(
    ref: Union[str, Path, ExperimentConfig, None] = None,
    config: Optional[Config] = None,
) -> Tuple[str, ExperimentConfig]:
    """Resolve a profile name, YAML path or ready config into (label, config).

    A YAML file is either a flat mapping of ExperimentConfig fields or a
    ``profile:`` key naming a base profile plus field overrides.
    """
    config = config or cfg
    if isinstance(ref, ExperimentConfig):
        return "inline", ref
    if ref is None:
        ref = "paper"

    ref_str = str(ref)
    if isinstance(ref, Path) or _looks_like_path(ref_str):
        path = Path(ref_str)
        if not path.is_absolute() and not path.exists():
            path = config.config_dir / path
        if not path.exists():
            raise ConfigError(f"config file not found: {ref_str}")
        with open(path) as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{ref_str}: expected a mapping of config fields")
        base_name = data.pop("profile", None)
        base = {}
        if base_name is not None:
            base = _profile_values(str(base_name), config)
        return str(path), ExperimentConfig.from_dict({**base, **data})

    return ref_str, ExperimentConfig.from_dict(_profile_values(ref_str, config))


def _profile_values(name: str, config: "Config") -> Dict[str, Any]:
    profiles = config.profiles
    if name not in profiles:
        raise ConfigError(f"unknown profile '{name}' (available: {', '.join(sorted(profiles))})")
    return profiles[name]


def load_experiment_config(ref: Union[str, Path, ExperimentConfig, None] = None) -> ExperimentConfig:
    return resolve_experiment_config(ref)[1]


# Global instance
cfg = Config()
