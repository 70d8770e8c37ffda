"""Pytest fixtures for harmonic-mpa tests."""

import os
import tempfile
from pathlib import Path
from typing import Generator, List

import pytest

from harmonic_mpa.graph import FIELD, WeightedFieldGraph, build_graph
from harmonic_mpa.generators import erdos_renyi_graph


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture(autouse=True)
def isolated_home(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> Path:
    """Keep the user's global config out of every test."""
    home = tmp_path / "home"
    home.mkdir()
    monkeypatch.setenv("HOME", str(home))
    return home


@pytest.fixture
def change_dir(temp_dir: Path) -> Generator[Path, None, None]:
    """Change to temporary directory and restore original directory after test."""
    original_dir = Path.cwd()
    os.chdir(temp_dir)
    yield temp_dir
    os.chdir(original_dir)


@pytest.fixture
def path_graph() -> WeightedFieldGraph:
    """The path field - 1 - 2 with unit weights."""
    return build_graph(2, [(FIELD, 1, 1.0), (1, 2, 1.0)])


@pytest.fixture
def star_graph() -> WeightedFieldGraph:
    """Field at the center of three leaves with weight 0.5."""
    return build_graph(3, [(FIELD, 1, 0.5), (FIELD, 2, 0.5), (FIELD, 3, 0.5)])


@pytest.fixture
def triangle_graph() -> WeightedFieldGraph:
    """Triangle 1-2-3, each node tied to the field; the smallest graph with a cycle."""
    return build_graph(
        3,
        [(FIELD, 1, 1.0), (FIELD, 2, 0.5), (FIELD, 3, 2.0), (1, 2, 1.0), (2, 3, 1.5), (1, 3, 0.7)],
    )


@pytest.fixture
def random_graphs() -> List[WeightedFieldGraph]:
    """Small weighted G(n, m) graphs with cycles."""
    graphs = []
    for seed in range(8):
        n = 8 + 3 * seed
        graphs.append(erdos_renyi_graph(n, 2 * n, field_weight=1.0, seed=seed, weight_range=(0.5, 2.0)))
    return graphs


@pytest.fixture
def sample_config_yaml() -> str:
    """Sample configuration YAML content."""
    return """
stopping:
  eps_w: 1.0e-11
  max_rounds: 5000

field_weight: 0.5
seed: 7
output_dir: "out/{command}-{seed}"

wheel:
  n: 30
"""
