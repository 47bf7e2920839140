"""Experiment drivers shared by the CLI and the acceptance suite.

Every acquisition draws from a stream keyed by the master seed plus a
description of the acquisition (see :mod:`respuf.seeding`):

* reference readings  ``("reference", device_id, repeat)``
* sweep probes        ``("probe", kind, point, device_id, repeat)``
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from os import PathLike
from typing import Any, Mapping, Sequence

import numpy as np

from .device_model import DeviceInstance, Environment, PopulationModel, sample_population
from .measurement import R_REF_DEFAULT, AdcConfig, ReadingSet, acquire
from .metrics import MetricReport, evaluate, stability_ber
from .response import PufResponse, ResponseConfig, response_for_config
from .seeding import split_seed

SWEEP_KINDS = ("temp", "voltage")


@dataclass(frozen=True)
class ExperimentConfig:
    model: PopulationModel = field(default_factory=PopulationModel)
    adc: AdcConfig = field(default_factory=AdcConfig)
    device_count: int = 30
    reference_env: Environment = field(default_factory=Environment)
    temperatures: tuple[float, ...] = (29.0, 40.0, 45.0, 50.0, 60.0, 70.0)
    voltages: tuple[float, ...] = (3.50, 4.00, 4.50, 4.75, 5.00, 5.25)
    reference_samples: int = 10_000
    probe_samples: int = 1
    probe_repeats: int = 10
    r_ref_pd: float = R_REF_DEFAULT
    r_ref_pu: float = R_REF_DEFAULT
    quantize_first: bool = True

    def __post_init__(self):
        if self.device_count < 1:
            raise ValueError("device_count must be >= 1")
        if not self.temperatures or not self.voltages:
            raise ValueError("sweep lists must be non-empty")
        if self.reference_env.temperature not in self.temperatures:
            raise ValueError("temperature sweep must include the reference temperature")
        if self.reference_env.vdd not in self.voltages:
            raise ValueError("voltage sweep must include the reference supply")
        if self.reference_samples < 1 or self.probe_samples < 1 or self.probe_repeats < 1:
            raise ValueError("sample and repeat counts must be >= 1")

    @property
    def seed(self) -> int:
        return self.model.seed

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, model=self.model.replace(seed=seed))

    def sweep_points(self, kind: str) -> tuple[float, ...]:
        return self.temperatures if kind == "temp" else self.voltages

    def env_for(self, kind: str, point: float) -> Environment:
        if kind == "temp":
            return Environment(point, self.reference_env.vdd)
        if kind == "voltage":
            return Environment(self.reference_env.temperature, point)
        raise ValueError(f"sweep kind must be one of {SWEEP_KINDS}, got {kind!r}")

    def reference_point(self, kind: str) -> float:
        return self.reference_env.temperature if kind == "temp" else self.reference_env.vdd

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        """Build from the JSON config layout::

            {"population": {...PopulationModel fields...},
             "adc": {"full_scale": 5.0, "bits": 16},
             "experiment": {"device_count": 30, "temperatures": [...], ...,
                            "reference_temperature": 29.0, "reference_vdd": 5.0}}
        """
        unknown = set(data) - {"population", "adc", "experiment"}
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        if "population" in data:
            kwargs["model"] = PopulationModel.from_mapping(data["population"])
        if "adc" in data:
            kwargs["adc"] = AdcConfig(**data["adc"])
        exp = dict(data.get("experiment", {}))
        ref_t = exp.pop("reference_temperature", None)
        ref_v = exp.pop("reference_vdd", None)
        if ref_t is not None or ref_v is not None:
            default = Environment()
            kwargs["reference_env"] = Environment(
                float(default.temperature if ref_t is None else ref_t),
                float(default.vdd if ref_v is None else ref_v))
        for key in ("temperatures", "voltages"):
            if key in exp:
                exp[key] = tuple(float(x) for x in exp[key])
        allowed = {"device_count", "temperatures", "voltages", "reference_samples", "probe_samples",
                   "probe_repeats", "r_ref_pd", "r_ref_pu", "quantize_first"}
        bad = set(exp) - allowed
        if bad:
            raise ValueError(f"unknown experiment keys: {sorted(bad)}")
        return cls(**kwargs, **exp)

    @classmethod
    def from_file(cls, path: str | PathLike) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_mapping(json.load(fh))

    def to_mapping(self) -> dict[str, Any]:
        return {
            "population": self.model.to_mapping(),
            "adc": asdict(self.adc),
            "experiment": {
                "device_count": self.device_count,
                "reference_temperature": self.reference_env.temperature,
                "reference_vdd": self.reference_env.vdd,
                "temperatures": list(self.temperatures),
                "voltages": list(self.voltages),
                "reference_samples": self.reference_samples,
                "probe_samples": self.probe_samples,
                "probe_repeats": self.probe_repeats,
                "r_ref_pd": self.r_ref_pd,
                "r_ref_pu": self.r_ref_pu,
                "quantize_first": self.quantize_first,
            },
        }


def population(cfg: ExperimentConfig) -> list[DeviceInstance]:
    return sample_population(cfg.model, cfg.device_count)


def _acquire(cfg: ExperimentConfig, device: DeviceInstance, env: Environment, samples: int,
             *key: int | str) -> ReadingSet:
    return acquire(device, env, cfg.model, cfg.adc, samples, split_seed(cfg.seed, *key),
                   r_ref_pd=cfg.r_ref_pd, r_ref_pu=cfg.r_ref_pu, quantize_first=cfg.quantize_first)


def reference_reading(cfg: ExperimentConfig, device: DeviceInstance, repeat: int = 0) -> ReadingSet:
    """Averaged acquisition at the reference environment."""
    return _acquire(cfg, device, cfg.reference_env, cfg.reference_samples,
                    "reference", device.device_id, repeat)


def probe_reading(cfg: ExperimentConfig, device: DeviceInstance, kind: str, point: float,
                  repeat: int = 0) -> ReadingSet:
    return _acquire(cfg, device, cfg.env_for(kind, point), cfg.probe_samples,
                    "probe", kind, repr(float(point)), device.device_id, repeat)


def reading_at(cfg: ExperimentConfig, device: DeviceInstance, env: Environment, samples: int,
               repeat: int = 0) -> ReadingSet:
    """Acquisition at an arbitrary environment.

    At the reference environment with the reference sample count this is
    the same draw as :func:`reference_reading`.
    """
    if env == cfg.reference_env and samples == cfg.reference_samples:
        return reference_reading(cfg, device, repeat)
    return _acquire(cfg, device, env, samples, "reading", repr(float(env.temperature)),
                    repr(float(env.vdd)), samples, device.device_id, repeat)


def repeated_readings(cfg: ExperimentConfig, devices: Sequence[DeviceInstance],
                      repeats: int) -> dict[int, list[ReadingSet]]:
    return {d.device_id: [reference_reading(cfg, d, r) for r in range(repeats)] for d in devices}


def metric_reports(readings_by_device: Mapping[int, Sequence[ReadingSet]],
                   configs: Sequence[ResponseConfig] = tuple(ResponseConfig)) -> list[MetricReport]:
    reports = []
    for config in configs:
        responses = {d: [response_for_config(rs, config) for rs in rsets]
                     for d, rsets in readings_by_device.items()}
        reports.append(evaluate(config.value, responses))
    return reports


@dataclass
class SweepResult:
    kind: str
    points: tuple[float, ...]
    reference_point: float
    references: dict[int, PufResponse]
    probes: dict[float, dict[int, list[PufResponse]]]
    ber: dict[float, np.ndarray]  # point -> BER (%) per (device, repeat), flattened

    def rows(self) -> list[dict[str, float]]:
        return [{"point": p, "min": float(b.min()), "mean": float(b.mean()), "max": float(b.max())}
                for p, b in ((p, self.ber[p]) for p in self.points)]

    def max_ber(self, exclude_reference: bool = False) -> float:
        pts = [p for p in self.points if not (exclude_reference and p == self.reference_point)]
        return max(float(self.ber[p].max()) for p in pts)

    def write_csv(self, stream) -> None:
        stream.write("point,min,mean,max\n")
        for row in self.rows():
            stream.write(f"{row['point']:g},{row['min']:.6f},{row['mean']:.6f},{row['max']:.6f}\n")


def run_sweep(cfg: ExperimentConfig, kind: str,
              devices: Sequence[DeviceInstance] | None = None) -> SweepResult:
    """BER of COMBINED responses across one sweep.

    Each device's reference is its averaged acquisition at the reference
    environment. Every other point is probed ``probe_repeats`` times with
    ``probe_samples`` samples each. The reference point is represented by
    the reference acquisition itself, so its row is zero by construction.
    """
    if kind not in SWEEP_KINDS:
        raise ValueError(f"sweep kind must be one of {SWEEP_KINDS}, got {kind!r}")
    if devices is None:
        devices = population(cfg)
    combined = ResponseConfig.COMBINED
    ref_point = cfg.reference_point(kind)
    references = {d.device_id: response_for_config(reference_reading(cfg, d), combined) for d in devices}
    probes: dict[float, dict[int, list[PufResponse]]] = {}
    ber: dict[float, np.ndarray] = {}
    for point in cfg.sweep_points(kind):
        per_device = {}
        for d in devices:
            if point == ref_point:
                per_device[d.device_id] = [references[d.device_id]]
            else:
                per_device[d.device_id] = [
                    response_for_config(probe_reading(cfg, d, kind, point, r), combined)
                    for r in range(cfg.probe_repeats)]
        probes[point] = per_device
        ber[point] = np.concatenate([stability_ber(references[i], per_device[i]) for i in sorted(per_device)])
    return SweepResult(kind, tuple(cfg.sweep_points(kind)), ref_point, references, probes, ber)
