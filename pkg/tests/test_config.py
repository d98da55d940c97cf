import math
from pathlib import Path

import pytest

from floqstab.config import SECTIONS, ConfigError, load_config, parse_config

CONFIGS = sorted((Path(__file__).parents[1] / "configs").glob("*.yaml"))

QUASI = """\
version: 1
experiment: quasienergy
units: ratio
quasienergy:
  model:
    drive: {kind: circular, B0: 1.0, omega: 0.3}
"""


def test_shipped_configs_parse():
    assert len(CONFIGS) == len(SECTIONS)
    seen = {load_config(p).experiment for p in CONFIGS}
    assert seen == set(SECTIONS)


def test_defaults_filled_in():
    c = parse_config(QUASI)
    assert c.experiment == "quasienergy"
    m = c.data["model"]
    assert m["cavities"] == [] and m["gamma"] == 0.0 and m["qubit_frame"] == "excited_up"
    assert c.data["m_range"] == [0, 3]
    assert c.data["integrator"] == {"steps_per_period": 2000}
    assert len(c.digest) == 64


def test_missing_field_is_named_with_line():
    with pytest.raises(ConfigError) as err:
        parse_config(QUASI.replace(", omega: 0.3", ""))
    assert "quasienergy.model.drive.omega" in str(err.value)
    assert err.value.line == 6


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config(QUASI + "  n_tt: 12\n")
    assert "unknown key 'n_tt'" in str(err.value)
    assert err.value.line == 7


@pytest.mark.parametrize("text, fragment", [
    (QUASI.replace("version: 1", "version: 2"), "unsupported schema version"),
    (QUASI.replace("units: ratio", "units: GHz"), "units must be one of"),
    (QUASI.replace("B0: 1.0", "B0: fast"), "must be a finite number"),
    (QUASI.replace("B0: 1.0", "B0: .nan"), "must be a finite number"),
    (QUASI + "  m_range: [0, 1, 2]\n", "pair of integers"),
    (QUASI + "  n_t: 2.5\n", "must be an integer"),
    ("version: 1\nexperiment: quasienergy\nunits: ratio\nquasienergy: {model: [1\n", "invalid YAML"),
    ("- 1\n- 2\n", "must be a mapping"),
])
def test_schema_errors(text, fragment):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert fragment in str(err.value)


def test_mhz_units_scale_frequencies_only():
    c = parse_config(QUASI.replace("ratio", "mhz") + "  n_t: 64\n")
    assert math.isclose(c.data["model"]["drive"]["omega"], 2 * math.pi * 0.3)
    assert c.data["n_t"] == 64


def test_device_experiments_require_mhz():
    text = "version: 1\nexperiment: elliptical\nunits: ratio\nelliptical: {bx: 1, bz: 1, delta: 1}\n"
    with pytest.raises(ConfigError):
        parse_config(text)
    c = parse_config(text.replace("ratio", "mhz"))
    assert c.data["bx"] == 1.0          # device records are kept in MHz
    assert c.data["device"]["B0"] == 80.0


def test_missing_file():
    with pytest.raises(ConfigError) as err:
        load_config("/nonexistent/x.yaml")
    assert "cannot read config" in str(err.value)
