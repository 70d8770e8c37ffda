"""Tests for configuration management."""

import os
from pathlib import Path

import pytest
import yaml

from harmonic_mpa.config import (
    PROJECT_CONFIG_NAME,
    ExperimentConfig,
    StoppingConfig,
    SurrogateDefaults,
    WheelDefaults,
    create_default_config,
    get_global_config_path,
    get_project_config_path,
    load_config,
    load_yaml_config,
    merge_configs,
    parse_config,
    save_config,
    substitute_variables,
)


def test_stopping_config_validation() -> None:
    """Test StoppingConfig validation."""
    # Valid config
    StoppingConfig().validate()  # Should not raise

    # Invalid: zero tolerance
    with pytest.raises(ValueError, match="eps_w must be positive"):
        StoppingConfig(eps_w=0.0).validate()

    with pytest.raises(ValueError, match="eps_h must be positive"):
        StoppingConfig(eps_h=-1e-9).validate()

    # Invalid: no rounds
    with pytest.raises(ValueError, match="max_rounds must be at least 1"):
        StoppingConfig(max_rounds=0).validate()


def test_defaults_validation() -> None:
    """Test wheel and surrogate default validation."""
    WheelDefaults().validate()
    SurrogateDefaults().validate()

    with pytest.raises(ValueError, match="at least 3 nodes"):
        WheelDefaults(n=2).validate()

    with pytest.raises(ValueError, match="Wheel probability q"):
        WheelDefaults(q=1.5).validate()

    with pytest.raises(ValueError, match="sizes must be positive"):
        SurrogateDefaults(sizes=[10, 0]).validate()

    with pytest.raises(ValueError, match="p_out"):
        SurrogateDefaults(p_out=2.0).validate()


def test_config_initialization() -> None:
    """Test ExperimentConfig initialization."""
    config = ExperimentConfig()

    assert config.stopping.eps_w == 1e-10
    assert config.stopping.eps_h == 1e-9
    assert config.stopping.max_rounds == 200000
    assert config.field_weight == 0.040
    assert config.output_dir == "results/{command}"
    assert config.wheel.q == 0.25
    assert config.surrogate.sizes == [326, 434, 125]


def test_config_nested_dicts() -> None:
    """Test that nested sections may be given as dictionaries."""
    config = ExperimentConfig(stopping={"eps_w": 1e-12}, wheel={"n": 30})  # type: ignore[arg-type]

    assert isinstance(config.stopping, StoppingConfig)
    assert config.stopping.eps_w == 1e-12
    assert config.stopping.eps_h == 1e-9
    assert config.wheel.n == 30


def test_config_validation() -> None:
    """Test ExperimentConfig validation."""
    ExperimentConfig().validate()  # Should not raise

    with pytest.raises(ValueError, match="field_weight must be positive"):
        ExperimentConfig(field_weight=0.0).validate()

    with pytest.raises(ValueError, match="output_dir cannot be empty"):
        ExperimentConfig(output_dir="").validate()

    # Nested sections are validated too
    with pytest.raises(ValueError, match="max_rounds"):
        ExperimentConfig(stopping=StoppingConfig(max_rounds=-5)).validate()


def test_to_dict() -> None:
    """Test the plain dictionary view."""
    data = ExperimentConfig(seed=3).to_dict()
    assert data["seed"] == 3
    assert data["stopping"]["eps_h"] == 1e-9
    assert data["surrogate"]["sizes"] == [326, 434, 125]


def test_load_yaml_config(temp_dir: Path, sample_config_yaml: str) -> None:
    """Test loading YAML configuration."""
    # Non-existent file
    result = load_yaml_config(temp_dir / "nonexistent.yaml")
    assert result == {}

    # Valid file
    config_file = temp_dir / "config.yaml"
    config_file.write_text(sample_config_yaml)
    result = load_yaml_config(config_file)

    assert result["stopping"]["eps_w"] == 1e-11
    assert result["field_weight"] == 0.5
    assert result["output_dir"] == "out/{command}-{seed}"

    # Empty file
    config_file.write_text("")
    assert load_yaml_config(config_file) == {}

    # Not a mapping
    config_file.write_text("- a\n- b\n")
    with pytest.raises(ValueError, match="must be a mapping"):
        load_yaml_config(config_file)


def test_parse_config(sample_config_yaml: str) -> None:
    """Test parsing configuration data."""
    config = parse_config(yaml.safe_load(sample_config_yaml))

    assert config.stopping.eps_w == 1e-11
    assert config.stopping.max_rounds == 5000
    assert config.stopping.eps_h == 1e-9
    assert config.seed == 7
    assert config.wheel.n == 30
    assert config.wheel.p == 0.01


def test_parse_config_errors() -> None:
    """Test rejected configuration data."""
    with pytest.raises(ValueError, match="Unknown configuration keys: tolerance"):
        parse_config({"tolerance": 1e-6})

    with pytest.raises(ValueError, match="Invalid configuration"):
        parse_config({"stopping": {"tolerance": 1e-3}})


def test_merge_configs() -> None:
    """Test merging global and project configurations."""
    global_data = {
        "stopping": {"eps_w": 1e-11, "max_rounds": 1000},
        "field_weight": 0.5,
        "seed": 1,
    }
    project_data = {
        "stopping": {"max_rounds": 50},
        "seed": 9,
    }

    merged = merge_configs(global_data, project_data)

    # Project values override key by key
    assert merged["seed"] == 9
    assert merged["stopping"] == {"eps_w": 1e-11, "max_rounds": 50}

    # Global values survive
    assert merged["field_weight"] == 0.5

    # Inputs are left alone
    assert global_data["stopping"] == {"eps_w": 1e-11, "max_rounds": 1000}


def test_merge_configs_no_project() -> None:
    """Test merging when project config is None."""
    global_data = {"seed": 4}
    merged = merge_configs(global_data, None)

    assert merged == global_data
    assert merged is not global_data


def test_substitute_variables() -> None:
    """Test variable substitution."""
    template = "results/{command}-{seed}"
    context = {"command": "mpa", "seed": "3"}

    result = substitute_variables(template, context)
    assert result == "results/mpa-3"

    # With missing variables
    result = substitute_variables("{command}/{missing}", context)
    assert result == "mpa/{missing}"


def test_create_default_config() -> None:
    """Test creating default configuration."""
    config_content = create_default_config()

    assert "stopping:" in config_content
    assert "field_weight:" in config_content
    assert "wheel:" in config_content

    # Should be valid YAML that parses to the defaults
    data = yaml.safe_load(config_content)
    config = parse_config(data)
    config.validate()
    assert config == ExperimentConfig()


def test_save_config(temp_dir: Path) -> None:
    """Test saving configuration to file."""
    config_path = temp_dir / "test-config.yaml"
    content = "seed: 1\n"

    save_config(config_path, content)

    assert config_path.exists()
    assert config_path.read_text() == content

    # Test with nested directory
    nested_path = temp_dir / "nested" / "dir" / "config.yaml"
    save_config(nested_path, content)

    assert nested_path.exists()
    assert nested_path.read_text() == content


def test_global_config_path(isolated_home: Path) -> None:
    """Test that the global config lives under the home directory."""
    assert get_global_config_path() == isolated_home / ".config" / "harmonic-mpa" / "config.yaml"


def test_project_config_search(change_dir: Path) -> None:
    """Test finding the project config in a parent directory."""
    assert get_project_config_path() is None

    config_path = change_dir / PROJECT_CONFIG_NAME
    config_path.write_text("seed: 5\n")
    nested = change_dir / "a" / "b"
    nested.mkdir(parents=True)
    assert get_project_config_path() == config_path

    os.chdir(nested)
    assert get_project_config_path() == config_path


def test_load_config(change_dir: Path, sample_config_yaml: str) -> None:
    """Test loading global and project configuration together."""
    # Defaults only
    assert load_config() == ExperimentConfig()

    save_config(get_global_config_path(), sample_config_yaml)
    (change_dir / PROJECT_CONFIG_NAME).write_text("seed: 11\nstopping:\n  max_rounds: 20\n")

    config = load_config()
    assert config.seed == 11
    assert config.stopping.max_rounds == 20
    assert config.stopping.eps_w == 1e-11
    assert config.field_weight == 0.5


def test_load_config_invalid(change_dir: Path) -> None:
    """Test that invalid merged values are rejected."""
    (change_dir / PROJECT_CONFIG_NAME).write_text("field_weight: -1.0\n")
    with pytest.raises(ValueError, match="field_weight must be positive"):
        load_config()
