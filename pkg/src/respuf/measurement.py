"""Resistor-divider measurements through a simulated ADC, and the reading CSV format.

Slot order in a :class:`ReadingSet` is fixed: ``v[0:10]`` are the pull-up
measurements of pins 1-10 (pin tied to an external pull-down reference),
``v[10:20]`` the pull-down measurements of pins 1-10 (external pull-up
reference). Response generation depends on this order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np
from scipy.special import ndtr

from .device_model import (PIN_COUNT, DeviceInstance, Environment, PopulationModel, PullKind,
                           resistances_at)
from .errors import CsvParseError

SLOT_COUNT = 2 * PIN_COUNT
R_REF_DEFAULT = 5600.0

CSV_HEADER = ["device_id", "temperature_c", "vdd"] + [f"v{i}" for i in range(1, SLOT_COUNT + 1)]
# Older captures without a supply column; vdd is then taken as the ADC full scale.
CSV_HEADER_NO_VDD = ["device_id", "temperature_c"] + [f"v{i}" for i in range(1, SLOT_COUNT + 1)]

# Noise tails beyond this many sigmas are folded into the outermost ADC codes.
_TAIL_SIGMAS = 8.0


@dataclass(frozen=True)
class AdcConfig:
    full_scale: float = 5.0
    bits: int = 16

    def __post_init__(self):
        if not 8 <= self.bits <= 24:
            raise ValueError("ADC resolution must be 8..24 bits")
        if self.full_scale <= 0:
            raise ValueError("full_scale must be positive")

    @property
    def lsb(self) -> float:
        return self.full_scale / (1 << self.bits)

    @property
    def max_code(self) -> int:
        return (1 << self.bits) - 1


@dataclass(frozen=True)
class ReadingSet:
    device_id: int
    env: Environment
    voltages: tuple[float, ...]
    # Not part of the CSV schema, so excluded from equality.
    sample_count: int = field(default=1, compare=False)

    def __post_init__(self):
        if len(self.voltages) != SLOT_COUNT:
            raise ValueError(f"a reading set has exactly {SLOT_COUNT} voltages")

    @property
    def pull_up(self) -> tuple[float, ...]:
        return self.voltages[:PIN_COUNT]

    @property
    def pull_down(self) -> tuple[float, ...]:
        return self.voltages[PIN_COUNT:]


def divider_voltage(r_internal: float, r_external: float, vdd: float, kind: PullKind) -> float:
    """Voltage at the divider node.

    Pull-up: the internal resistor sits above the external pull-down
    reference, so the node reads ``vdd * r_ext / (r_int + r_ext)``.
    Pull-down mirrors it: ``vdd * r_int / (r_int + r_ext)``.
    """
    if r_internal <= 0 or r_external <= 0:
        raise ValueError("resistances must be positive")
    if vdd <= 0:
        raise ValueError("vdd must be positive")
    top = r_external if kind is PullKind.PULL_UP else r_internal
    return vdd * top / (r_internal + r_external)


def quantize(v: float, adc: AdcConfig = AdcConfig()) -> int:
    """ADC code for ``v``: nearest code (halves round up), clamped to the code range."""
    code = math.floor(v / adc.lsb + 0.5)
    return min(max(code, 0), adc.max_code)


def _quantize_array(v: np.ndarray, adc: AdcConfig) -> np.ndarray:
    return np.clip(np.floor(v / adc.lsb + 0.5), 0, adc.max_code)


def noiseless_voltages(device: DeviceInstance, env: Environment, model: PopulationModel,
                       r_ref_pd: float = R_REF_DEFAULT, r_ref_pu: float = R_REF_DEFAULT) -> np.ndarray:
    """The 20 analytic divider voltages in slot order, before the ADC."""
    r_pu, r_pd = resistances_at(device, env, model)
    v_pu = env.vdd * r_ref_pd / (r_pu + r_ref_pd)
    v_pd = env.vdd * r_pd / (r_pd + r_ref_pu)
    return np.concatenate([v_pu, v_pd])


def _average_of_quantized(v: np.ndarray, sigma: float, adc: AdcConfig, samples: int,
                          rng: np.random.Generator) -> np.ndarray:
    # Averaging `samples` i.i.d. quantized readings only needs the count of
    # readings landing on each code, which is one multinomial draw per slot.
    lsb = adc.lsb
    width = int(math.ceil(2 * _TAIL_SIGMAS * sigma / lsb)) + 3
    first = np.floor((v - _TAIL_SIGMAS * sigma) / lsb + 0.5) - 1
    codes = first[:, None] + np.arange(width)[None, :]
    upper_edges = (codes[:, :-1] + 0.5) * lsb
    cdf = ndtr((upper_edges - v[:, None]) / sigma)
    probs = np.diff(cdf, prepend=0.0, append=1.0, axis=1)
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum(axis=1, keepdims=True)
    counts = rng.multinomial(samples, probs)
    codes = np.clip(codes, 0, adc.max_code)
    return (counts * codes).sum(axis=1) / samples * lsb


def acquire(device: DeviceInstance, env: Environment, model: PopulationModel,
            adc: AdcConfig = AdcConfig(), samples: int = 1, rng_seed=None, *,
            r_ref_pd: float = R_REF_DEFAULT, r_ref_pu: float = R_REF_DEFAULT,
            quantize_first: bool = True) -> ReadingSet:
    """Measure all 20 slots of ``device`` at ``env``, averaging ``samples`` acquisitions.

    Each acquisition adds Gaussian noise (``model.noise_sigma_v``) to the
    analytic voltage. With ``quantize_first`` (the default, matching firmware
    that averages ADC codes) every acquisition is quantized and the codes are
    averaged; otherwise the noisy voltages are averaged and quantized once.

    ``rng_seed`` is anything ``numpy.random.default_rng`` accepts.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    v = noiseless_voltages(device, env, model, r_ref_pd, r_ref_pu)
    sigma = model.noise_sigma_v
    if sigma == 0:
        out = _quantize_array(v, adc) * adc.lsb
    else:
        rng = np.random.default_rng(rng_seed)
        if quantize_first:
            out = _average_of_quantized(v, sigma, adc, samples, rng)
        else:
            noisy = v + sigma / math.sqrt(samples) * rng.standard_normal(v.shape)
            out = _quantize_array(noisy, adc) * adc.lsb
    return ReadingSet(device.device_id, env, tuple(float(x) for x in out), samples)


def write_reading_csv(readings: Iterable[ReadingSet], stream: TextIO, header: bool = True) -> None:
    """Write readings in the ``device_id,temperature_c,vdd,v1..v20`` schema.

    Floats use ``repr`` so a re-parse reproduces them exactly.
    """
    writer = csv.writer(stream, lineterminator="\n")
    if header:
        writer.writerow(CSV_HEADER)
    for rs in readings:
        writer.writerow([rs.device_id, repr(float(rs.env.temperature)), repr(float(rs.env.vdd))]
                        + [repr(float(x)) for x in rs.voltages])


def _parse_float(cell: str, line: int, name: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise CsvParseError(line, f"{name}: not a number: {cell!r}") from None
    if not math.isfinite(value):
        raise CsvParseError(line, f"{name}: not a finite number: {cell!r}")
    return value


def _parse_rows(rows: Iterator[Sequence[str]], adc: AdcConfig) -> Iterator[ReadingSet]:
    try:
        head = next(rows)
    except StopIteration:
        raise CsvParseError(1, "empty input, expected a header row") from None
    head = [h.strip() for h in head]
    if head == CSV_HEADER:
        has_vdd = True
    elif head == CSV_HEADER_NO_VDD:
        has_vdd = False
    else:
        raise CsvParseError(1, "header must be " + ",".join(CSV_HEADER))
    ncols = len(head)
    for line, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != ncols:
            raise CsvParseError(line, f"expected {ncols} fields, got {len(row)}")
        try:
            device_id = int(row[0])
        except ValueError:
            raise CsvParseError(line, f"device_id: not an integer: {row[0]!r}") from None
        if device_id < 0:
            raise CsvParseError(line, "device_id must be >= 0")
        temperature = _parse_float(row[1], line, "temperature_c")
        vdd = _parse_float(row[2], line, "vdd") if has_vdd else adc.full_scale
        if vdd <= 0:
            raise CsvParseError(line, "vdd must be positive")
        first_v = 3 if has_vdd else 2
        volts = []
        for k, cell in enumerate(row[first_v:], start=1):
            value = _parse_float(cell, line, f"v{k}")
            if not 0.0 <= value <= adc.full_scale:
                raise CsvParseError(line, f"v{k}={value} outside [0, {adc.full_scale}]")
            volts.append(value)
        yield ReadingSet(device_id, Environment(temperature, vdd), tuple(volts))


def parse_reading_csv(stream: TextIO | Iterable[str], adc: AdcConfig = AdcConfig()) -> list[ReadingSet]:
    """Parse a reading CSV into one :class:`ReadingSet` per data row.

    Accepts the full schema ``device_id,temperature_c,vdd,v1..v20`` or the
    22-column form without ``vdd``. Errors carry the 1-based line number.
    """
    return list(_parse_rows(iter(csv.reader(stream)), adc))
