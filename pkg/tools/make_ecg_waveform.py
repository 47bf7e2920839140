"""Regenerate src/respuf/data/ecg_waveform_v1.csv (synthetic ECG-like trace).

1000 int16 samples at 250 Hz, ~72 bpm, built from Gaussian P/Q/R/S/T waves
plus slow baseline wander. Scale: 1000 counts per mV.
"""

from pathlib import Path

import numpy as np

FS = 250.0
N = 1000
HEART_RATE = 72.0
# (offset within beat in s, width in s, amplitude in mV)
WAVES = [(-0.20, 0.025, 0.15), (-0.04, 0.010, -0.12), (0.0, 0.012, 1.20),
         (0.04, 0.012, -0.25), (0.26, 0.045, 0.30)]


def trace() -> np.ndarray:
    t = np.arange(N) / FS
    period = 60.0 / HEART_RATE
    mv = 0.05 * np.sin(2 * np.pi * 0.25 * t)
    for beat in np.arange(0.35, t[-1] + period, period):
        for off, width, amp in WAVES:
            mv += amp * np.exp(-0.5 * ((t - beat - off) / width) ** 2)
    return np.round(1000 * mv).astype(np.int16)


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src" / "respuf" / "data" / "ecg_waveform_v1.csv"
    out.write_text("sample\n" + "".join(f"{int(s)}\n" for s in trace()), encoding="ascii")
    print(f"wrote {out}")
