"""Run configuration: INI file with unit-suffixed keys, deterministic hash."""

import configparser
import hashlib
from dataclasses import dataclass, field, asdict

from .device import DeviceSpec, GridSpec


class ConfigError(ValueError):
    """Raised for unreadable or inconsistent configuration input."""


@dataclass(frozen=True)
class SolverSpec:
    """Numerical knobs for the open-boundary solve."""

    evanescent_count: int = 4
    threshold_tolerance: float = 1e-4   # meV; |T| below this counts as closed
    direct_max_points: int = 45         # direct factorization up to this grid
    gmres_tol: float = 1e-10
    gmres_restart: int = 450
    gmres_max_restarts: int = 4
    flux_warn: float = 1e-6

    def __post_init__(self):
        if self.evanescent_count < 0:
            raise ConfigError("evanescent_count must be nonnegative")
        if not (0 < self.gmres_tol < 1e-2):
            raise ConfigError("gmres_tol out of range")


@dataclass(frozen=True)
class RunConfig:
    device: DeviceSpec = field(default_factory=DeviceSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)

    def canonical_hash(self) -> str:
        """Stable hex digest of every physical and numerical parameter."""
        items = []
        for section in (self.device, self.grid, self.solver):
            name = type(section).__name__
            for k, v in sorted(asdict(section).items()):
                items.append(f"{name}.{k}={v!r}")
        blob = "\n".join(items).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# INI keys carry their unit as a suffix; parsed values are plain floats in
# the internal meV/nm system.
_DEVICE_KEYS = {
    "length_nm": "length",
    "well_depth_mev": "well_depth",
    "well_width_nm": "well_width",
    "barrier_width_nm": "barrier_width",
    "coulomb_cutoff_nm": "coulomb_cutoff",
    "screening_length_nm": "screening_length",
}

_SOLVER_KEYS = {
    "evanescent_count": ("evanescent_count", int),
    "threshold_tolerance_mev": ("threshold_tolerance", float),
    "direct_max_points": ("direct_max_points", int),
    "gmres_tol": ("gmres_tol", float),
    "gmres_restart": ("gmres_restart", int),
    "gmres_max_restarts": ("gmres_max_restarts", int),
    "flux_warn": ("flux_warn", float),
}


def load_config(path=None, grid_override=None) -> RunConfig:
    """Read an INI file (all sections optional) into a RunConfig.

    Missing file or path=None yields the built-in device of Fig-1 type:
    100 nm segment, two 110 meV x 30 nm wells, 20 nm barrier.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is not None:
        read = parser.read(str(path))
        if not read:
            raise ConfigError(f"cannot read config file: {path}")

    dev_kwargs = {}
    if parser.has_section("device"):
        for key, value in parser.items("device"):
            if key == "coulomb":
                dev_kwargs["coulomb_on"] = parser.getboolean("device", key)
                continue
            if key not in _DEVICE_KEYS:
                raise ConfigError(f"unknown device key: {key}")
            try:
                dev_kwargs[_DEVICE_KEYS[key]] = float(value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {value}") from exc

    grid_kwargs = {}
    if parser.has_section("grid"):
        for key, value in parser.items("grid"):
            if key != "points":
                raise ConfigError(f"unknown grid key: {key}")
            grid_kwargs["points"] = int(value)
    if grid_override is not None:
        grid_kwargs["points"] = int(grid_override)

    sol_kwargs = {}
    if parser.has_section("solver"):
        for key, value in parser.items("solver"):
            if key not in _SOLVER_KEYS:
                raise ConfigError(f"unknown solver key: {key}")
            attr, cast = _SOLVER_KEYS[key]
            sol_kwargs[attr] = cast(value)

    try:
        return RunConfig(
            device=DeviceSpec(**dev_kwargs),
            grid=GridSpec(**grid_kwargs),
            solver=SolverSpec(**sol_kwargs),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
