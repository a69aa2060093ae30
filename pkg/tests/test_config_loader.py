import pytest

from src.pipelines.resources.config_loader import ConfigLoader, config, load_yaml_file
from src.pipelines.resources.takagi_errors import ConfigError


def test_singleton():
    assert ConfigLoader() is config


def test_sections():
    assert config.get_limits_config()["mem_cap"] == 2 ** 26
    assert config.get_runtime_config()["out_dir_env"] == "TAKAGI_OUT_DIR"
    assert config.get_output_config()["decimal_precision"] == 12
    assert config.get_render_config()["hashsalt"] == "takagimesh"
    assert config.get_logging_config()["stream"] == "stderr"


def test_experiment_defaults():
    assert config.get_experiment_config("verify")["n_max"] == 6
    assert config.get_experiment_config("assouad")["m_list"] == list(range(1, 9))
    assert config.get_experiment_config("psum") == {}


def test_experiment_config_is_a_copy():
    config.get_experiment_config("boxdim")["n_min"] = 99
    assert config.get_experiment_config("boxdim")["n_min"] == 6


def test_presets():
    assert config.get_preset("classical") == {"base": 2, "kind": "geometric", "a": "1/2"}
    with pytest.raises(ConfigError):
        config.get_preset("weierstrass")


def test_config_value():
    assert config.get_config_value("limits", "cell_budget") == 10_000_000
    assert config.get_config_value("limits", "missing", default=5) == 5


def test_load_yaml_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_yaml_file(str(tmp_path / "absent.yml"))

    broken = tmp_path / "broken.yml"
    broken.write_text("a: [1, 2\n")
    with pytest.raises(ConfigError):
        load_yaml_file(str(broken))

    listing = tmp_path / "list.yml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_yaml_file(str(listing))

    empty = tmp_path / "empty.yml"
    empty.write_text("")
    assert load_yaml_file(str(empty)) == {}
