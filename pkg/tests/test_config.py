import json

import pytest

from surfride import reference_config_document
from surfride.config import ConfigError, convert, find_config, load_config, parse_config


@pytest.fixture
def doc():
    return reference_config_document()


def test_reference_parses(doc):
    cfg = parse_config(doc)
    assert cfg.ship.mass == 420000.0
    assert cfg.ship.added_mass_estimated
    assert cfg.resistance.degree == 5
    wave, fk = cfg.resolve_wave()
    assert fk is None
    assert wave.force_amplitude == pytest.approx(0.05 * cfg.ship.virtual_mass * 9.81)


def test_round_trip(doc):
    cfg = parse_config(doc)
    again = parse_config(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert again.digest() == cfg.digest()


def test_unit_conversion():
    assert convert({"value": 10, "unit": "kn"}, "speed", "x") == pytest.approx(5.144444, rel=1e-6)
    assert convert({"value": 2, "unit": "kN"}, "force", "x") == 2000.0
    assert convert({"value": 100, "unit": "ft"}, "length", "x") == pytest.approx(30.48)
    with pytest.raises(ConfigError, match="unknown speed unit"):
        convert({"value": 1, "unit": "mph"}, "speed", "x")


def test_samples_with_units_round_trip(doc):
    kn = 1852 / 3600
    coeffs = [0.0, 500.0, 800.0, 0.0, 0.0, 2.5]
    speeds = [2 + 0.5 * i for i in range(20)]
    samples = [[v, sum(c * (v * kn) ** i for i, c in enumerate(coeffs)) / 1000] for v in speeds]
    doc["resistance"] = {"samples": samples, "degree": 5, "units": {"x": "kn", "y": "kN"}}
    cfg = parse_config(doc)
    assert cfg.resistance.coefficients == pytest.approx(coeffs, abs=1e-5)
    assert cfg.fits["resistance"]["residual_rms"] < 1e-6
    assert parse_config(cfg.to_dict()) == cfg


@pytest.mark.parametrize(
    "path,value,message",
    [
        (("ship", "mass"), -1.0, "ship: mass must be positive"),
        (("ship", "wake_fraction"), "x", "ship.wake_fraction"),
        (("wave", "wavelength"), 0.0, "wave.wavelength"),
        (("wave", "mu"), "bogus", "wave.mu"),
        (("wave", "force_amplitude"), "compute", "needs a hull"),
        (("resistance", "coefficients"), [], "resistance.coefficients"),
    ],
)
def test_field_level_errors(doc, path, value, message):
    doc[path[0]][path[1]] = value
    with pytest.raises(ConfigError, match=message):
        parse_config(doc)


def test_missing_sections(doc):
    del doc["resistance"]
    with pytest.raises(ConfigError, match="resistance: required section missing"):
        parse_config(doc)


def test_height_and_steepness_are_exclusive(doc):
    doc["wave"]["steepness"] = 0.05
    with pytest.raises(ConfigError, match="exactly one"):
        parse_config(doc)
    del doc["wave"]["height"]
    assert parse_config(doc).wave.height == pytest.approx(0.05 * 34.5)


def test_missing_referenced_file(doc, tmp_path):
    doc["hull"] = {"stations_file": "nope.txt"}
    with pytest.raises(ConfigError, match="file not found"):
        parse_config(doc, base_dir=tmp_path)


def test_compute_force_from_hull(doc, tmp_path):
    (tmp_path / "hull.txt").write_text("-20 0 2\n0 15 2.5\n20 0 2\n")
    doc["wave"]["force_amplitude"] = "compute"
    doc["hull"] = {"stations_file": "hull.txt"}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    cfg = load_config(path)
    wave, fk = cfg.resolve_wave()
    assert fk is not None and wave.force_amplitude == pytest.approx(fk.force)
    assert cfg.to_dict()["wave"]["force_amplitude"] == "compute"
    assert parse_config(cfg.to_dict()) == cfg


def test_explicit_force_scales_with_height(doc):
    cfg = parse_config(doc)
    wave, _ = cfg.resolve_wave(height=2.0)
    assert wave.force_amplitude == pytest.approx(2 * doc["wave"]["force_amplitude"])


def test_overrides_and_search_path(doc, tmp_path, monkeypatch):
    (tmp_path / "ship.json").write_text(json.dumps(doc))
    monkeypatch.setenv("SURFRIDE_CONFIG_PATH", str(tmp_path))
    monkeypatch.chdir(tmp_path.parent)
    path = find_config("ship.json")
    cfg = load_config(path, {"wave.height": 2.0, "oracle.horizon": 50.0})
    assert cfg.wave.height == 2.0
    assert cfg.capture_criteria().horizon == 50.0
    with pytest.raises(ConfigError):
        find_config("missing.json")


def test_unknown_oracle_option(doc):
    doc["oracle"] = {"horizn": 10}
    with pytest.raises(ConfigError, match="unknown option"):
        parse_config(doc)
