"""Process-variation model for I/O pull-up and pull-down resistors.

A pin's base resistance is ``nominal * (1 + d_device + d_layout + d_pin)``:

* ``d_device``  one draw per device, shared by all of its pins and both kinds;
* ``d_layout``  one draw per pin position (and kind), shared by every device
  of the population and centred so the ten offsets sum to zero;
* ``d_pin``     an independent draw per device, pin and kind.

The default pull-down nominal sits well above the pull-up nominal, so the
ten pull-up voltages and the ten pull-down voltages form two separate
clusters and cross-group comparison bits come out the same on nearly every
device. The gap is wide enough that even a device several ``sigma_device``
off nominal keeps the clusters apart.

Temperature scales a resistance linearly around ``t_ref``. Supply voltage
does not change resistance; it only enters the divider equation.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, fields
from os import PathLike
from typing import Any, Mapping

import numpy as np

from .errors import EmptyPopulationError
from .seeding import rng_for

PIN_COUNT = 10


class PullKind(enum.Enum):
    PULL_UP = "pull-up"
    PULL_DOWN = "pull-down"


@dataclass(frozen=True)
class PopulationModel:
    r_pu_nominal: float = 5600.0
    r_pd_nominal: float = 10000.0
    sigma_device: float = 0.05
    sigma_pin: float = 0.02
    sigma_layout: float = 0.03
    tempco_pu: float = 0.0020
    tempco_pd: float = 0.0023
    t_ref: float = 29.0
    noise_sigma_v: float = 76e-6
    seed: int = 1

    def __post_init__(self):
        if self.r_pu_nominal <= 0 or self.r_pd_nominal <= 0:
            raise ValueError("nominal resistances must be positive")
        for name in ("sigma_device", "sigma_pin", "sigma_layout", "noise_sigma_v"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def replace(self, **changes: Any) -> "PopulationModel":
        return PopulationModel(**{**asdict(self), **changes})

    def tempco(self, kind: PullKind) -> float:
        return self.tempco_pu if kind is PullKind.PULL_UP else self.tempco_pd

    def nominal(self, kind: PullKind) -> float:
        return self.r_pu_nominal if kind is PullKind.PULL_UP else self.r_pd_nominal

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "PopulationModel":
        known = {f.name: f for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown population model keys: {sorted(unknown)}")
        values = {k: (int(v) if k == "seed" else float(v)) for k, v in data.items()}
        return cls(**values)

    @classmethod
    def from_file(cls, path: str | PathLike) -> "PopulationModel":
        """Load a model from a JSON object of field/value pairs.

        The file may hold the fields at top level or under a ``"population"``
        key (the layout used by experiment config files).
        """
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if "population" in data:
            data = data["population"]
        return cls.from_mapping(data)

    def to_mapping(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class Environment:
    temperature: float = 29.0
    vdd: float = 5.0

    def __post_init__(self):
        if self.vdd <= 0:
            raise ValueError("vdd must be positive")


@dataclass(frozen=True)
class DeviceInstance:
    device_id: int
    r_pu: tuple[float, ...]
    r_pd: tuple[float, ...]

    def __post_init__(self):
        if len(self.r_pu) != PIN_COUNT or len(self.r_pd) != PIN_COUNT:
            raise ValueError(f"a device has exactly {PIN_COUNT} pull-up and pull-down resistors")
        if min(self.r_pu) <= 0 or min(self.r_pd) <= 0:
            raise ValueError("resistances must be positive")

    def base(self, kind: PullKind) -> tuple[float, ...]:
        return self.r_pu if kind is PullKind.PULL_UP else self.r_pd


def layout_offsets(model: PopulationModel) -> tuple[np.ndarray, np.ndarray]:
    """Per-pin systematic offsets shared by the whole population (pull-up, pull-down)."""
    z = rng_for(model.seed, "layout").standard_normal((2, PIN_COUNT))
    z -= z.mean(axis=1, keepdims=True)
    return model.sigma_layout * z[0], model.sigma_layout * z[1]


def sample_device(model: PopulationModel, device_id: int,
                  layout: tuple[np.ndarray, np.ndarray] | None = None) -> DeviceInstance:
    if layout is None:
        layout = layout_offsets(model)
    rng = rng_for(model.seed, "device", device_id)
    d_device = model.sigma_device * rng.standard_normal()
    d_pin = model.sigma_pin * rng.standard_normal((2, PIN_COUNT))
    r_pu = model.r_pu_nominal * (1.0 + d_device + layout[0] + d_pin[0])
    r_pd = model.r_pd_nominal * (1.0 + d_device + layout[1] + d_pin[1])
    if r_pu.min() <= 0 or r_pd.min() <= 0:
        raise ValueError(f"device {device_id}: variation produced a non-positive resistance; "
                         "sigmas are too large for a linear model")
    return DeviceInstance(device_id, tuple(float(r) for r in r_pu), tuple(float(r) for r in r_pd))


def sample_population(model: PopulationModel, count: int) -> list[DeviceInstance]:
    """Sample ``count`` devices with ids ``0..count-1``.

    Each device draws from its own stream keyed by ``(seed, device_id)``, so
    device ``i`` is the same whatever ``count`` is.
    """
    if count < 1:
        raise EmptyPopulationError(f"population size must be >= 1, got {count}")
    layout = layout_offsets(model)
    return [sample_device(model, i, layout) for i in range(count)]


def resistance_at(device: DeviceInstance, pin: int, kind: PullKind, env: Environment,
                  model: PopulationModel) -> float:
    """Resistance of ``pin`` (1-based) at ``env``."""
    if not 1 <= pin <= PIN_COUNT:
        raise ValueError(f"pin must be in 1..{PIN_COUNT}, got {pin}")
    base = device.base(kind)[pin - 1]
    return base * (1.0 + model.tempco(kind) * (env.temperature - model.t_ref))


def resistances_at(device: DeviceInstance, env: Environment,
                   model: PopulationModel) -> tuple[np.ndarray, np.ndarray]:
    """All pull-up and pull-down resistances at ``env`` as arrays."""
    dt = env.temperature - model.t_ref
    r_pu = np.asarray(device.r_pu) * (1.0 + model.tempco_pu * dt)
    r_pd = np.asarray(device.r_pd) * (1.0 + model.tempco_pd * dt)
    return r_pu, r_pd
