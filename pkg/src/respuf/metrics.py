"""Standard PUF quality metrics.

All values are percentages, computed from integer bit counts with a single
final division so they equal the correctly rounded exact ratio. Reliability follows the usual definition
literally: the mean intra-device distance averages over *all* N responses,
including the reference's zero distance to itself, so two responses
differing in one of ten bits give a mean of 5%, not 10%.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .response import BitsLike, as_bits

HIST_EDGES = np.arange(0, 101, dtype=float)  # 1-percentage-point bins over [0, 100]


def _matrix(responses: Iterable[BitsLike]) -> np.ndarray:
    rows = [r.bits if hasattr(r, "bits") else as_bits(r) for r in responses]
    if not rows:
        raise ValueError("need at least one response")
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise ValueError(f"responses have different lengths: {sorted(lengths)}")
    if 0 in lengths:
        raise ValueError("responses must be non-empty")
    return np.vstack(rows).astype(np.uint8)


def hamming(a: BitsLike, b: BitsLike) -> int:
    a = a.bits if hasattr(a, "bits") else as_bits(a)
    b = b.bits if hasattr(b, "bits") else as_bits(b)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return int(np.count_nonzero(a != b))


def intra_distances(responses: Sequence[BitsLike]) -> np.ndarray:
    """Percent distance of every response to the first one (first entry is 0)."""
    m = _matrix(responses)
    return 100.0 * np.count_nonzero(m != m[0], axis=1) / m.shape[1]


def reliability(responses: Sequence[BitsLike]) -> float:
    m = _matrix(responses)
    return 100.0 - 100.0 * int(np.count_nonzero(m != m[0])) / m.size


def inter_distances(responses: Sequence[BitsLike]) -> np.ndarray:
    """Percent distance for every device pair (i < j), in row-major pair order."""
    m = _matrix(responses)
    k = m.shape[0]
    if k < 2:
        raise ValueError("uniqueness needs at least two devices")
    i, j = np.triu_indices(k, 1)
    return 100.0 * np.count_nonzero(m[i] != m[j], axis=1) / m.shape[1]


def uniqueness(responses: Sequence[BitsLike]) -> float:
    m = _matrix(responses)
    k = m.shape[0]
    if k < 2:
        raise ValueError("uniqueness needs at least two devices")
    i, j = np.triu_indices(k, 1)
    total = int(np.count_nonzero(m[i] != m[j]))
    return 100.0 * total / (i.size * m.shape[1])


def uniformity(response: BitsLike) -> float:
    bits = response.bits if hasattr(response, "bits") else as_bits(response)
    if bits.size == 0:
        raise ValueError("response must be non-empty")
    return 100.0 * int(bits.sum()) / bits.size


def bit_aliasing(responses: Sequence[BitsLike], position: int | None = None):
    """Percent of devices whose bit is 1 at ``position``; all positions when ``None``."""
    m = _matrix(responses)
    per_bit = 100.0 * m.sum(axis=0, dtype=np.int64) / m.shape[0]
    if position is None:
        return per_bit
    if not 0 <= position < m.shape[1]:
        raise ValueError(f"position {position} outside 0..{m.shape[1] - 1}")
    return float(per_bit[position])


def stability_ber(reference: BitsLike, probes: Sequence[BitsLike]) -> np.ndarray:
    """Bit error rate (%) of each probe against the reference."""
    ref = reference.bits if hasattr(reference, "bits") else as_bits(reference)
    return np.array([100.0 * hamming(ref, p) / ref.size for p in probes], dtype=float)


def ber_summary(bers: Sequence[float]) -> dict[str, float]:
    arr = np.asarray(bers, dtype=float)
    if arr.size == 0:
        raise ValueError("no BER values")
    return {"min": float(arr.min()), "mean": float(arr.mean()), "max": float(arr.max())}


def histogram(values: Sequence[float]) -> dict[str, list]:
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=HIST_EDGES)
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


@dataclass
class MetricReport:
    config: str
    device_ids: list[int]
    reliability_pct: list[float]
    uniformity_pct: list[float]
    bit_aliasing_pct: list[float]
    uniqueness_pct: float | None
    response_length: int
    histograms: dict[str, dict] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def mean_reliability(self) -> float:
        return float(np.mean(self.reliability_pct))

    @property
    def mean_uniformity(self) -> float:
        return float(np.mean(self.uniformity_pct))

    @property
    def mean_bit_aliasing(self) -> float:
        return float(np.mean(self.bit_aliasing_pct))

    def summary(self) -> dict:
        return {
            "config": self.config,
            "devices": len(self.device_ids),
            "response_length": self.response_length,
            "reliability_pct": round(self.mean_reliability, 6),
            "uniqueness_pct": None if self.uniqueness_pct is None else round(self.uniqueness_pct, 6),
            "uniformity_pct": round(self.mean_uniformity, 6),
            "bit_aliasing_pct": round(self.mean_bit_aliasing, 6),
            "notes": list(self.notes),
        }

    def to_json_dict(self) -> dict:
        return {"summary": self.summary(), "histograms": self.histograms}

    def write_device_csv(self, stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["device_id", "reliability_pct", "uniformity_pct"])
        for dev, rel, uni in zip(self.device_ids, self.reliability_pct, self.uniformity_pct):
            writer.writerow([dev, f"{rel:.6f}", f"{uni:.6f}"])


def evaluate(config: str, responses_by_device: Mapping[int, Sequence[BitsLike]]) -> MetricReport:
    """Full report for one configuration.

    ``responses_by_device`` maps device id to that device's repeated
    responses; the first response of each device is its reference and is
    the one used for uniqueness, uniformity and bit-aliasing.
    """
    if not responses_by_device:
        raise ValueError("no devices")
    ids = sorted(responses_by_device)
    intra_hist, rel = [], []
    for d in ids:
        dist = intra_distances(responses_by_device[d])
        rel.append(reliability(responses_by_device[d]))
        intra_hist.extend(dist[1:].tolist())
    refs = _matrix(responses_by_device[d][0] for d in ids)
    uni = [uniformity(r) for r in refs]
    ba = bit_aliasing(refs)
    notes = []
    if len(ids) >= 2:
        inter = inter_distances(refs)
        uq = uniqueness(refs)
    else:
        inter = np.array([])
        uq = None
        notes.append("uniqueness needs at least two devices; omitted")
    report = MetricReport(config, ids, rel, uni, ba.tolist(), uq, refs.shape[1], notes=notes)
    report.histograms = {
        "intra_hd": histogram(intra_hist),
        "inter_hd": histogram(inter),
        "uniformity": histogram(uni),
        "bit_aliasing": histogram(ba),
    }
    return report


def write_reports_json(reports: Sequence[MetricReport], stream: TextIO) -> None:
    json.dump({r.config: r.to_json_dict() for r in reports}, stream, indent=2, sort_keys=True)
    stream.write("\n")
