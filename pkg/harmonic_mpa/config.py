"""Configuration management for harmonic-mpa."""

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

PROJECT_CONFIG_NAME = ".harmonic-mpa.yaml"


@dataclass
class StoppingConfig:
    """When an MPA run stops."""

    eps_w: float = 1e-10
    eps_h: float = 1e-9
    max_rounds: int = 200000
    skip_into_field: bool = False  # messages into the field are never read

    def validate(self) -> None:
        """Validate stopping configuration."""
        if not self.eps_w > 0:
            raise ValueError("eps_w must be positive")
        if not self.eps_h > 0:
            raise ValueError("eps_h must be positive")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")


@dataclass
class WheelDefaults:
    """Default parameters of the wheel-with-chords family."""

    n: int = 50
    p: float = 0.01
    q: float = 0.25

    def validate(self) -> None:
        """Validate wheel defaults."""
        if self.n < 3:
            raise ValueError("Wheel needs at least 3 nodes")
        for name, value in (("p", self.p), ("q", self.q)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"Wheel probability {name} must be in [0, 1]")


@dataclass
class SurrogateDefaults:
    """Default parameters of the block-model community surrogate."""

    sizes: List[int] = field(default_factory=lambda: [326, 434, 125])
    mean_degree: float = 30.0
    p_out: float = 0.002

    def validate(self) -> None:
        """Validate surrogate defaults."""
        if not self.sizes or min(self.sizes) < 1:
            raise ValueError("Community sizes must be positive")
        if self.mean_degree <= 0:
            raise ValueError("mean_degree must be positive")
        if not 0.0 <= self.p_out <= 1.0:
            raise ValueError("p_out must be in [0, 1]")


@dataclass
class ExperimentConfig:
    """Main configuration for harmonic-mpa experiments."""

    stopping: StoppingConfig = field(default_factory=StoppingConfig)
    field_weight: float = 0.040
    seed: int = 0
    output_dir: str = "results/{command}"
    wheel: WheelDefaults = field(default_factory=WheelDefaults)
    surrogate: SurrogateDefaults = field(default_factory=SurrogateDefaults)

    def __post_init__(self) -> None:
        """Accept nested sections given as plain dictionaries."""
        if isinstance(self.stopping, dict):
            self.stopping = StoppingConfig(**self.stopping)
        if isinstance(self.wheel, dict):
            self.wheel = WheelDefaults(**self.wheel)
        if isinstance(self.surrogate, dict):
            self.surrogate = SurrogateDefaults(**self.surrogate)

    def validate(self) -> None:
        """Validate configuration."""
        if not self.field_weight > 0:
            raise ValueError("field_weight must be positive")
        if not self.output_dir:
            raise ValueError("output_dir cannot be empty")
        self.stopping.validate()
        self.wheel.validate()
        self.surrogate.validate()

    def to_dict(self) -> Dict[str, Any]:
        """Plain dictionary view, used when embedding the config in outputs."""
        return asdict(self)


def get_global_config_path() -> Path:
    """Get path to global config file."""
    return Path.home() / ".config" / "harmonic-mpa" / "config.yaml"


def get_project_config_path() -> Optional[Path]:
    """Find the project config file in the working directory or its parents."""
    current = Path.cwd()
    for directory in [current, *current.parents]:
        config_path = directory / PROJECT_CONFIG_NAME
        if config_path.exists():
            return config_path
    return None


def load_yaml_config(path: Path) -> Dict[str, Any]:
    """Load YAML configuration from file."""
    if not path.exists():
        return {}

    with open(path, "r") as f:
        data = yaml.safe_load(f)
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ValueError(f"Configuration in {path} must be a mapping")
        return data


def merge_configs(
    global_data: Dict[str, Any], project_data: Optional[Dict[str, Any]]
) -> Dict[str, Any]:
    """Merge global and project configuration data.

    Project values take precedence key by key; nested sections are merged
    recursively so a project file can override a single tolerance.
    """
    if not project_data:
        return dict(global_data)

    merged = dict(global_data)
    for key, value in project_data.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_configs(merged[key], value)
        else:
            merged[key] = value
    return merged


def parse_config(data: Dict[str, Any]) -> ExperimentConfig:
    """Build an ExperimentConfig from configuration data."""
    known = {"stopping", "field_weight", "seed", "output_dir", "wheel", "surrogate"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")

    try:
        return ExperimentConfig(**data)
    except TypeError as e:
        raise ValueError(f"Invalid configuration: {e}") from e


def load_config() -> ExperimentConfig:
    """Load and merge global and project configurations."""
    global_data = load_yaml_config(get_global_config_path())
    project_path = get_project_config_path()
    project_data = load_yaml_config(project_path) if project_path else None

    config = parse_config(merge_configs(global_data, project_data))
    config.validate()
    return config


def substitute_variables(template: str, context: Dict[str, str]) -> str:
    """Substitute variables in a template string.

    Supported variables:
    - {command}: CLI subcommand name
    - {seed}: Experiment seed
    """
    result = template
    for key, value in context.items():
        result = result.replace(f"{{{key}}}", value)
    return result


def create_default_config() -> str:
    """Create default configuration YAML content."""
    return """# harmonic-mpa configuration

# MPA stopping rule: stop when the largest W change is below eps_w and the
# largest relative change of the influence estimates is below eps_h.
stopping:
  eps_w: 1.0e-10
  eps_h: 1.0e-9
  max_rounds: 200000
  skip_into_field: false   # skip messages sent into the field (never read)

# Weight of every edge joining a node to the field
field_weight: 0.040

# Seed for generated graphs and random probes
seed: 0

# Output directory; variables: {command}, {seed}
output_dir: "results/{command}"

# Wheel-with-chords family
wheel:
  n: 50
  p: 0.01     # chord probability
  q: 0.25     # hub edge probability

# Block-model community surrogate
surrogate:
  sizes: [326, 434, 125]
  mean_degree: 30.0
  p_out: 0.002
"""


def save_config(config_path: Path, content: str) -> None:
    """Save configuration to file."""
    config_path.parent.mkdir(parents=True, exist_ok=True)
    with open(config_path, "w") as f:
        f.write(content)
