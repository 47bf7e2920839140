import io
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from respuf.device_model import DeviceInstance, Environment, PopulationModel, PullKind, sample_population
from respuf.errors import CsvParseError
from respuf.measurement import (AdcConfig, ReadingSet, acquire, divider_voltage, noiseless_voltages,
                                parse_reading_csv, quantize, write_reading_csv)

ADC = AdcConfig()


def test_divider_symmetric():
    assert divider_voltage(5600, 5600, 5.0, PullKind.PULL_UP) == 2.5
    assert divider_voltage(5600, 5600, 5.0, PullKind.PULL_DOWN) == 2.5


def test_divider_pull_up_against_exact_arithmetic():
    exact = Fraction(5) * 5600 / (6160 + 5600)
    v = divider_voltage(6160, 5600, 5.0, PullKind.PULL_UP)
    assert v == pytest.approx(float(exact), abs=1e-12)
    assert round(v, 4) == 2.3810


def test_divider_rejects_bad_values():
    with pytest.raises(ValueError):
        divider_voltage(0, 5600, 5.0, PullKind.PULL_UP)
    with pytest.raises(ValueError):
        divider_voltage(5600, -1, 5.0, PullKind.PULL_DOWN)


@given(r1=st.floats(100, 1e5), r2=st.floats(100, 1e5), rext=st.floats(100, 1e5))
def test_divider_monotone(r1, r2, rext):
    if r1 == r2:
        return
    lo, hi = sorted((r1, r2))
    assert divider_voltage(lo, rext, 5.0, PullKind.PULL_UP) >= divider_voltage(hi, rext, 5.0, PullKind.PULL_UP)
    assert divider_voltage(lo, rext, 5.0, PullKind.PULL_DOWN) <= divider_voltage(hi, rext, 5.0, PullKind.PULL_DOWN)


def test_quantize_examples():
    assert ADC.lsb == pytest.approx(76.29e-6, rel=1e-4)
    assert quantize(0.0, ADC) == 0
    assert quantize(2.5, ADC) == 32768
    assert quantize(5.1, ADC) == 65535
    assert quantize(-0.2, ADC) == 0


@given(a=st.floats(-1, 6), b=st.floats(-1, 6))
def test_quantize_monotone_and_idempotent(a, b):
    lo, hi = sorted((a, b))
    assert quantize(lo, ADC) <= quantize(hi, ADC)
    code = quantize(a, ADC)
    assert quantize(code * ADC.lsb, ADC) == code


def test_adc_validation():
    with pytest.raises(ValueError):
        AdcConfig(bits=7)
    with pytest.raises(ValueError):
        AdcConfig(full_scale=0)


def test_noiseless_acquire_matches_analytic_after_quantization():
    model = PopulationModel(noise_sigma_v=0.0, seed=4)
    d = sample_population(model, 1)[0]
    env = Environment(45.0, 4.5)
    rs = acquire(d, env, model, ADC)
    r_pu_env = [r * (1 + model.tempco_pu * (45.0 - model.t_ref)) for r in d.r_pu]
    r_pd_env = [r * (1 + model.tempco_pd * (45.0 - model.t_ref)) for r in d.r_pd]
    expected = ([quantize(divider_voltage(r, 5600, 4.5, PullKind.PULL_UP), ADC) * ADC.lsb for r in r_pu_env]
                + [quantize(divider_voltage(r, 5600, 4.5, PullKind.PULL_DOWN), ADC) * ADC.lsb for r in r_pd_env])
    assert list(rs.voltages) == expected


def test_noiseless_acquire_ignores_samples_and_seed():
    model = PopulationModel(noise_sigma_v=0.0)
    d = sample_population(model, 1)[0]
    a = acquire(d, Environment(), model, ADC, samples=1, rng_seed=1)
    b = acquire(d, Environment(), model, ADC, samples=5000, rng_seed=99)
    assert a.voltages == b.voltages


def test_acquire_deterministic_under_seed():
    model = PopulationModel()
    d = sample_population(model, 1)[0]
    a = acquire(d, Environment(), model, ADC, samples=100, rng_seed=42)
    b = acquire(d, Environment(), model, ADC, samples=100, rng_seed=42)
    c = acquire(d, Environment(), model, ADC, samples=100, rng_seed=43)
    assert a == b
    assert a != c


def test_averaged_slots_concentrate_around_analytic_value():
    # Each slot average of 10k samples should land within 3 sigma/sqrt(N)
    # of the unquantized divider voltage in at least 99% of cases.
    model = PopulationModel(seed=21)
    devices = sample_population(model, 10)
    env = Environment()
    bound = 3 * model.noise_sigma_v / math.sqrt(10_000)
    hits = total = 0
    for d in devices:
        truth = noiseless_voltages(d, env, model)
        for rep in range(20):
            rs = acquire(d, env, model, ADC, samples=10_000, rng_seed=(d.device_id, rep))
            err = np.abs(np.asarray(rs.voltages) - truth)
            hits += int((err <= bound).sum())
            total += err.size
    assert hits / total >= 0.99


def test_multinomial_average_matches_brute_force_distribution():
    # Oracle: literally quantize every noisy sample and average.
    model = PopulationModel(seed=3, noise_sigma_v=100e-6)
    d = sample_population(model, 1)[0]
    env = Environment()
    truth = noiseless_voltages(d, env, model)
    rng = np.random.default_rng(0)
    samples, trials = 50, 400
    brute = np.empty((trials, 20))
    for t in range(trials):
        noisy = truth + model.noise_sigma_v * rng.standard_normal((samples, 20))
        codes = np.clip(np.floor(noisy / ADC.lsb + 0.5), 0, ADC.max_code)
        brute[t] = codes.mean(axis=0) * ADC.lsb
    fast = np.array([acquire(d, env, model, ADC, samples, rng_seed=t).voltages for t in range(trials)])
    se = brute.std(axis=0) / math.sqrt(trials)
    assert np.all(np.abs(fast.mean(axis=0) - brute.mean(axis=0)) < 5 * np.sqrt(2) * se)
    assert np.allclose(fast.std(axis=0), brute.std(axis=0), rtol=0.2)


def test_analog_averaging_option():
    model = PopulationModel(seed=3)
    d = sample_population(model, 1)[0]
    rs = acquire(d, Environment(), model, ADC, samples=10_000, rng_seed=1, quantize_first=False)
    codes = np.asarray(rs.voltages) / ADC.lsb
    assert np.allclose(codes, np.round(codes))


def test_two_devices_differ():
    model = PopulationModel(seed=8)
    a, b = sample_population(model, 2)
    assert acquire(a, Environment(), model, ADC, 10, 1).voltages != acquire(b, Environment(), model, ADC, 10, 1).voltages


def test_acquire_rejects_zero_samples():
    model = PopulationModel()
    with pytest.raises(ValueError):
        acquire(sample_population(model, 1)[0], Environment(), model, ADC, samples=0)


# -- CSV ---------------------------------------------------------------------

def _row(fields):
    return ",".join(str(f) for f in fields)


def test_parse_full_schema_row():
    text = ("device_id,temperature_c,vdd," + ",".join(f"v{i}" for i in range(1, 21)) + "\n"
            + _row([3, 29.5, 5.0] + [2.5] * 20) + "\n")
    (rs,) = parse_reading_csv(io.StringIO(text))
    assert rs.device_id == 3 and rs.env == Environment(29.5, 5.0)
    assert rs.voltages == (2.5,) * 20


def test_parse_22_field_row_without_vdd():
    text = ("device_id,temperature_c," + ",".join(f"v{i}" for i in range(1, 21)) + "\n"
            + _row([1, 29.0] + [1.0] * 20) + "\n")
    (rs,) = parse_reading_csv(io.StringIO(text))
    assert rs.env.vdd == 5.0 and len(rs.voltages) == 20


def test_short_row_reports_line():
    text = ("device_id,temperature_c," + ",".join(f"v{i}" for i in range(1, 21)) + "\n"
            + _row([1, 29.0] + [1.0] * 20) + "\n"
            + _row([1, 29.0] + [1.0] * 19) + "\n")
    with pytest.raises(CsvParseError, match="line 3") as exc:
        parse_reading_csv(io.StringIO(text))
    assert exc.value.line == 3


@pytest.mark.parametrize("bad,msg", [("abc", "not a number"), ("5.5", "outside"), ("-0.1", "outside"),
                                     ("nan", "finite")])
def test_bad_cells(bad, msg):
    cells = [0, 29.0, 5.0] + [1.0] * 19 + [bad]
    text = "device_id,temperature_c,vdd," + ",".join(f"v{i}" for i in range(1, 21)) + "\n" + _row(cells) + "\n"
    with pytest.raises(CsvParseError, match=msg):
        parse_reading_csv(io.StringIO(text))


def test_bad_header():
    with pytest.raises(CsvParseError, match="line 1"):
        parse_reading_csv(io.StringIO("a,b,c\n"))
    with pytest.raises(CsvParseError):
        parse_reading_csv(io.StringIO(""))


def test_csv_round_trip():
    model = PopulationModel(seed=12)
    devices = sample_population(model, 4)
    readings = [acquire(d, Environment(t, v), model, ADC, 500, rng_seed=d.device_id)
                for d in devices for t, v in ((29.0, 5.0), (70.0, 3.5))]
    buf = io.StringIO()
    write_reading_csv(readings, buf)
    buf.seek(0)
    assert parse_reading_csv(buf) == readings


def test_reading_set_slots():
    rs = ReadingSet(0, Environment(), tuple(float(i) / 10 for i in range(20)))
    assert rs.pull_up == tuple(float(i) / 10 for i in range(10))
    assert rs.pull_down[0] == 1.0
    with pytest.raises(ValueError):
        ReadingSet(0, Environment(), (1.0,) * 19)
