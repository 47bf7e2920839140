import io
import json

import pytest

from respuf.device_model import Environment, PopulationModel
from respuf.experiments import ExperimentConfig, population, reading_at, reference_reading, run_sweep
from respuf.seeding import rng_for, split_seed


def test_split_seed_is_order_independent():
    a = rng_for(5, "probe", "temp", 3).integers(0, 2**32, 4)
    rng_for(5, "other")  # unrelated draw in between
    b = rng_for(5, "probe", "temp", 3).integers(0, 2**32, 4)
    assert (a == b).all()
    assert (rng_for(6, "probe", "temp", 3).integers(0, 2**32, 4) != a).any()
    with pytest.raises(ValueError):
        split_seed(1, -1)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(device_count=0)
    with pytest.raises(ValueError):
        ExperimentConfig(temperatures=(40.0, 50.0))
    with pytest.raises(ValueError):
        ExperimentConfig(voltages=())


def test_config_file_round_trip(tmp_path):
    cfg = ExperimentConfig(model=PopulationModel(seed=9), device_count=4, probe_repeats=3)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_mapping()))
    assert ExperimentConfig.from_file(path) == cfg
    path.write_text(json.dumps({"experiment": {"devices": 3}}))
    with pytest.raises(ValueError):
        ExperimentConfig.from_file(path)


def test_reading_at_reference_matches_reference_reading():
    cfg = ExperimentConfig(device_count=2)
    d = population(cfg)[1]
    assert reading_at(cfg, d, cfg.reference_env, cfg.reference_samples, 3) == reference_reading(cfg, d, 3)
    assert reading_at(cfg, d, Environment(70.0, 5.0), 1, 0) != reference_reading(cfg, d, 0)


def test_sweep_reference_row_is_zero_and_csv_shape():
    cfg = ExperimentConfig(device_count=3, probe_repeats=2)
    result = run_sweep(cfg, "voltage")
    rows = result.rows()
    ref = next(r for r in rows if r["point"] == 5.0)
    assert ref["min"] == ref["mean"] == ref["max"] == 0.0
    buf = io.StringIO()
    result.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "point,min,mean,max" and len(lines) == 7
    with pytest.raises(ValueError):
        run_sweep(cfg, "humidity")


def test_sweep_deterministic():
    cfg = ExperimentConfig(device_count=2, probe_repeats=2)
    assert run_sweep(cfg, "temp").rows() == run_sweep(cfg, "temp").rows()
