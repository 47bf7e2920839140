"""Acceptance suite: nine end-to-end criteria at their stated tolerances.

Run directly for a one-line-per-criterion report::

    python3 tests/test_acceptance.py

Under pytest each criterion is a test, and the same PASS/FAIL lines are
printed in the terminal summary (see conftest.py).
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np
import pytest

from respuf import channel
from respuf.bch import code_for
from respuf.crypto import aes128_ecb, derive_key, pkcs7_pad, pkcs7_unpad, sha256
from respuf.errors import ChannelError, PaddingError, RegenerationError
from respuf.experiments import (ExperimentConfig, metric_reports, population, reference_reading,
                                repeated_readings, run_sweep)
from respuf.fuzzy_extractor import enroll, regenerate
from respuf.metrics import bit_aliasing, uniformity, uniqueness
from respuf.response import PufResponse, ResponseConfig, response_for_config

RESULTS: dict[int, "Outcome"] = {}


@dataclass
class Outcome:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        return (f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number}: {self.name} "
                f"({self.detail}; {self.seconds:.1f} s)")


def _record(number, name, passed, detail, started):
    out = Outcome(number, name, bool(passed), detail, time.perf_counter() - started)
    RESULTS[number] = out
    return out


@lru_cache(maxsize=None)
def _population_run():
    """Default config, 30 devices, 100 averaged acquisitions each (timed)."""
    cfg = ExperimentConfig()
    started = time.perf_counter()
    devices = population(cfg)
    readings = repeated_readings(cfg, devices, 100)
    reports = {r.config: r for r in metric_reports(readings)}
    return cfg, devices, readings, reports, time.perf_counter() - started


@lru_cache(maxsize=None)
def _sweeps():
    cfg, devices, *_ = _population_run()
    return run_sweep(cfg, "temp", devices), run_sweep(cfg, "voltage", devices)


# -- criteria ---------------------------------------------------------------

def criterion_1() -> Outcome:
    started = time.perf_counter()
    _, devices, _, reports, elapsed = _population_run()
    worst = min(min(r.reliability_pct) for r in reports.values())
    ok = worst == 100.0 and len(devices) == 30 and elapsed < 10
    return _record(1, "reliability 100% for 30 devices x 100 acquisitions, all configs", ok,
                   f"min reliability {worst:.2f}%, pipeline {elapsed:.1f} s", started)


def _unimodal(values, width=10.0):
    counts, _ = np.histogram(values, bins=np.arange(0, 100 + width, width))
    mode = int(np.argmax(counts))
    rising = all(counts[i] <= counts[i + 1] for i in range(mode))
    falling = all(counts[i] >= counts[i + 1] for i in range(mode, len(counts) - 1))
    return rising and falling, (mode + 0.5) * width


def criterion_2() -> Outcome:
    started = time.perf_counter()
    report = _population_run()[3]["COMBINED_HASHED"]
    uq, uf = report.uniqueness_pct, report.mean_uniformity
    unimodal, mode_centre = _unimodal(report.bit_aliasing_pct)
    ok = abs(uq - 50) <= 3 and abs(uf - 50) <= 3 and unimodal and 40 <= mode_centre <= 60
    return _record(2, "hashed uniqueness/uniformity 50 +- 3, unimodal bit-aliasing", ok,
                   f"uniqueness {uq:.2f}%, uniformity {uf:.2f}%, aliasing mode bin ~{mode_centre:.0f}%, "
                   f"unimodal={unimodal}", started)


def criterion_3() -> Outcome:
    started = time.perf_counter()
    reports = _population_run()[3]
    u = {k: r.uniqueness_pct for k, r in reports.items()}
    ordered = u["COMBINED"] < min(u["PU_ONLY"], u["PD_ONLY"]) < u["COMBINED_HASHED"]

    def extreme(config):
        b = np.asarray(reports[config].bit_aliasing_pct)
        return float(np.mean((b == 0) | (b == 100)))

    clustered = extreme("COMBINED") > extreme("COMBINED_HASHED")
    return _record(3, "bias ordering COMBINED < PU/PD < HASHED", ordered and clustered,
                   f"{u['COMBINED']:.2f} < {u['PU_ONLY']:.2f}/{u['PD_ONLY']:.2f} < {u['COMBINED_HASHED']:.2f}; "
                   f"extreme aliasing {extreme('COMBINED'):.2f} vs {extreme('COMBINED_HASHED'):.2f}", started)


def criterion_4() -> Outcome:
    started = time.perf_counter()
    code = code_for()
    rng = np.random.default_rng(20240401)
    exact = 0
    for _ in range(10_000):
        msg = rng.integers(0, 2, code.k, dtype=np.uint8)
        word = code.codeword(msg)
        word[rng.choice(code.n, int(rng.integers(1, 6)), replace=False)] ^= 1
        result = code.decode(word)
        exact += result is not None and np.array_equal(result.message, msg)
    wrong = failed = 0
    for _ in range(1_000):
        response = PufResponse(rng.integers(0, 2, 190, dtype=np.uint8))
        puf_id, bundle = enroll(response)
        fresh = response.flipped(rng.choice(190, int(rng.integers(6, 11)), replace=False).tolist())
        try:
            wrong += regenerate(fresh, bundle).puf_id != puf_id
        except RegenerationError:
            failed += 1
    elapsed = time.perf_counter() - started
    ok = exact == 10_000 and wrong == 0 and elapsed < 60
    return _record(4, "BCH recovery and no silent miscorrection", ok,
                   f"{exact}/10000 exact at weight 1..5; weight 6..10: {wrong} wrong IDs, "
                   f"{failed} reported failures", started)


def criterion_5() -> Outcome:
    started = time.perf_counter()
    cfg, devices, *_ = _population_run()
    sweeps = _sweeps()
    trials = mismatches = 0
    for d in devices:
        puf_id, bundle = enroll(response_for_config(reference_reading(cfg, d), ResponseConfig.COMBINED))
        key = bytes(derive_key(puf_id))
        for sweep in sweeps:
            for point in sweep.points:
                for probe in sweep.probes[point][d.device_id]:
                    trials += 1
                    try:
                        out = regenerate(probe, bundle)
                        mismatches += out.puf_id != puf_id or bytes(derive_key(out.puf_id)) != key
                    except RegenerationError:
                        mismatches += 1
    return _record(5, "enroll/regenerate at every sweep point", mismatches == 0,
                   f"{trials - mismatches}/{trials} regenerations identical", started)


def criterion_6() -> Outcome:
    started = time.perf_counter()
    temp, volt = _sweeps()
    t_max, v_max = temp.max_ber(), volt.max_ber()
    return _record(6, "stability sweeps within worst-case BER", t_max <= 2.63 and v_max <= 2.10,
                   f"temperature max {t_max:.2f}% (<= 2.63), voltage max {v_max:.2f}% (<= 2.10)", started)


SHA_VECTORS = [
    (b"", "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"),
    (b"abc", "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"),
]
AES_VECTOR = ("000102030405060708090a0b0c0d0e0f", "00112233445566778899aabbccddeeff",
              "69c4e0d86a7b0430d8cdb78070b4c55a")


def criterion_7() -> Outcome:
    started = time.perf_counter()
    sha_ok = all(sha256(m).hex() == h for m, h in SHA_VECTORS)
    k, p, c = map(bytes.fromhex, AES_VECTOR)
    aes_ok = aes128_ecb(k, p) == c and aes128_ecb(k, c, "decrypt") == p
    pad_ok = True
    for n in range(65):
        data = bytes(range(n))
        padded = pkcs7_pad(data)
        pad = len(padded) - n
        pad_ok &= len(padded) % 16 == 0 and 1 <= pad <= 16 and padded[n:] == bytes([pad]) * pad
        pad_ok &= pkcs7_unpad(padded) == data
    try:
        pkcs7_unpad(b"a" * 13 + b"\x03\x02\x03")
        pad_ok = False
    except PaddingError:
        pass
    return _record(7, "SHA-256/AES-128 vectors and PKCS#7 lengths 0..64", sha_ok and aes_ok and pad_ok,
                   f"sha256={sha_ok}, aes128={aes_ok}, pkcs7={pad_ok}", started)


def criterion_8() -> Outcome:
    started = time.perf_counter()
    cfg, devices, *_ = _population_run()
    device = devices[0]
    _, bundle = enroll(response_for_config(reference_reading(cfg, device), ResponseConfig.COMBINED))
    endpoint = channel.DeviceEndpoint(
        lambda: response_for_config(reference_reading(cfg, device, 1), ResponseConfig.COMBINED), bundle)
    receiver = channel.ReceiverEndpoint()
    channel.provision_shared_key(endpoint, receiver)
    waveform = channel.load_waveform()
    pipe = channel.LoopbackTransport()
    channel.send_encrypted(channel.waveform_to_bytes(waveform), endpoint.key, pipe)
    pipe.close()
    identical = channel.waveform_from_bytes(channel.receive_decrypted(pipe, receiver.key)) == waveform
    rng = np.random.default_rng(8)
    payload = channel.waveform_to_bytes(waveform)
    padding_errors = 0
    for _ in range(1_000):
        pipe = channel.LoopbackTransport()
        channel.send_encrypted(payload, endpoint.key, pipe)
        pipe.close()
        try:
            channel.receive_decrypted(pipe, rng.bytes(16))
        except ChannelError as exc:
            padding_errors += "padding" in str(exc)
    ok = identical and len(waveform) == 1000 and padding_errors >= 990
    return _record(8, "loopback waveform transfer and mismatched keys", ok,
                   f"identical={identical}, padding errors {padding_errors}/1000", started)


def criterion_9() -> Outcome:
    started = time.perf_counter()
    cfg, devices, readings, *_ = _population_run()
    responses = [response_for_config(readings[d.device_id][0], ResponseConfig.PU_ONLY) for d in devices[:5]]
    rows = [[int(b) for b in r.bits] for r in responses]
    k, length = len(rows), len(rows[0])
    pairs = list(combinations(range(k), 2))
    brute_uq = Fraction(100 * sum(sum(x != y for x, y in zip(rows[a], rows[b])) for a, b in pairs),
                        len(pairs) * length)
    brute_uf = [Fraction(100 * sum(r), length) for r in rows]
    brute_ba = [Fraction(100 * sum(r[j] for r in rows), k) for j in range(length)]
    ok = (length == 45 and uniqueness(responses) == float(brute_uq)
          and [uniformity(r) for r in responses] == [float(x) for x in brute_uf]
          and bit_aliasing(responses).tolist() == [float(x) for x in brute_ba])
    return _record(9, "metrics equal brute-force recomputation exactly", ok,
                   f"5 devices x {length} bits, uniqueness {float(brute_uq):.4f}%", started)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 10)])
def test_acceptance(criterion):
    outcome = criterion()
    print(outcome.line())
    assert outcome.passed, outcome.line()


def main() -> int:
    outcomes = [c() for c in CRITERIA]
    for o in outcomes:
        print(o.line(), flush=True)
    print(f"{sum(o.passed for o in outcomes)}/{len(outcomes)} criteria passed")
    return 0 if all(o.passed for o in outcomes) else 1


if __name__ == "__main__":
    sys.exit(main())
