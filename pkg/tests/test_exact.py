"""Tests for exact harmonic influence."""

from typing import List

import numpy as np
import pytest

from harmonic_mpa import exact
from harmonic_mpa.errors import FieldAsLeaderError, UnknownNodeError
from harmonic_mpa.exact import InfluenceProfile, exact_influence_all, solve_dirichlet
from harmonic_mpa.generators import erdos_renyi_graph
from harmonic_mpa.graph import FIELD, WeightedFieldGraph, build_graph, scale_weights


def test_solve_dirichlet_path(path_graph: WeightedFieldGraph) -> None:
    """Test the two hand-solved leaders of the path."""
    second = solve_dirichlet(path_graph, 2)
    np.testing.assert_allclose(second.x, [0.0, 0.5, 1.0])
    assert second.influence == pytest.approx(1.5)

    first = solve_dirichlet(path_graph, 1)
    np.testing.assert_allclose(first.x, [0.0, 1.0, 1.0])
    assert first.influence == pytest.approx(2.0)


def test_solve_dirichlet_star(star_graph: WeightedFieldGraph) -> None:
    """Test that star leaves cannot influence each other."""
    solution = solve_dirichlet(star_graph, 1)
    np.testing.assert_array_equal(solution.x, [0.0, 1.0, 0.0, 0.0])
    assert solution.influence == 1.0


def test_solve_dirichlet_boundary(random_graphs: List[WeightedFieldGraph]) -> None:
    """Test boundary values, maximum principle and residual."""
    for g in random_graphs:
        for leader in (1, g.n):
            solution = solve_dirichlet(g, leader)
            assert solution.x[FIELD] == 0.0
            assert solution.x[leader] == 1.0
            assert np.all((solution.x >= 0.0) & (solution.x <= 1.0))
            assert solution.influence == pytest.approx(solution.x.sum())

            interior = np.setdiff1d(np.arange(1, g.num_nodes), [leader])
            residual = (g.laplacian() @ solution.x)[interior]
            assert np.abs(residual).max() < 1e-10 * g.degrees.max()


def test_solve_dirichlet_positive_on_component() -> None:
    """Test strict positivity on the leader's component away from the field."""
    g = build_graph(4, [(FIELD, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (FIELD, 4, 1.0)])
    solution = solve_dirichlet(g, 3)
    assert np.all(solution.x[1:4] > 0.0)
    assert solution.x[4] == 0.0


def test_solve_dirichlet_errors(path_graph: WeightedFieldGraph) -> None:
    """Test rejected leaders."""
    with pytest.raises(FieldAsLeaderError):
        solve_dirichlet(path_graph, FIELD)

    with pytest.raises(UnknownNodeError):
        solve_dirichlet(path_graph, 3)


def test_exact_influence_all_path(path_graph: WeightedFieldGraph) -> None:
    """Test the path profile from both methods."""
    for method in ("grounded", "per-leader"):
        profile = exact_influence_all(path_graph, method=method)
        np.testing.assert_allclose(profile.values, [2.0, 1.5])
        assert profile.kind == "exact"
        assert profile.round is None


def test_exact_influence_all_unknown_method(path_graph: WeightedFieldGraph) -> None:
    """Test rejecting an unknown method."""
    with pytest.raises(ValueError, match="Unknown method"):
        exact_influence_all(path_graph, method="magic")


def test_grounded_matches_per_leader() -> None:
    """Test the grounded fast path against per-leader solves on 20 graphs."""
    rng = np.random.default_rng(4)
    for seed in range(20):
        n = int(rng.integers(5, 101))
        m = int(rng.integers(n, 3 * n))
        g = erdos_renyi_graph(n, m, field_weight=float(rng.uniform(0.05, 2.0)), seed=seed, weight_range=(0.1, 3.0))

        fast = exact_influence_all(g, method="grounded")
        reference = exact_influence_all(g, method="per-leader")
        np.testing.assert_allclose(fast.values, reference.values, rtol=1e-8)


@pytest.mark.parametrize("alpha", [0.5, 2.0, 10.0])
def test_scale_invariance(random_graphs: List[WeightedFieldGraph], alpha: float) -> None:
    """Test that scaling every weight leaves influence unchanged."""
    for g in random_graphs:
        np.testing.assert_allclose(
            exact_influence_all(scale_weights(g, alpha)).values,
            exact_influence_all(g).values,
            rtol=1e-9,
        )


def test_influence_at_least_one(random_graphs: List[WeightedFieldGraph]) -> None:
    """Test that every leader has influence at least 1."""
    for g in random_graphs:
        assert exact_influence_all(g).values.min() >= 1.0 - 1e-12


def test_profile_validation() -> None:
    """Test InfluenceProfile validation."""
    InfluenceProfile(np.array([1.0, 2.5]))  # Should not raise

    with pytest.raises(ValueError, match="at least 1"):
        InfluenceProfile(np.array([0.5, 2.0]))

    with pytest.raises(ValueError, match="finite"):
        InfluenceProfile(np.array([1.0, np.nan]))

    with pytest.raises(ValueError, match="Invalid profile kind"):
        InfluenceProfile(np.array([1.0]), kind="guess")


def test_profile_top_node_and_ranking() -> None:
    """Test that the lowest id wins ties."""
    profile = InfluenceProfile(np.array([2.0, 3.0, 3.0, 1.0]))
    assert profile.top_node() == 2
    np.testing.assert_array_equal(profile.ranking(), [2, 3, 1, 4])
    assert profile[3] == 3.0
    assert profile.as_dict() == {1: 2.0, 2: 3.0, 3: 3.0, 4: 1.0}

    with pytest.raises(KeyError):
        profile[0]


def test_sparse_paths_match_dense(monkeypatch: pytest.MonkeyPatch) -> None:
    """Test the sparse LU and CG solvers against the dense Cholesky result."""
    g = erdos_renyi_graph(60, 150, field_weight=0.3, seed=8, weight_range=(0.5, 2.0))
    dense = exact_influence_all(g)

    monkeypatch.setattr(exact, "DENSE_LIMIT", 5)
    for method in ("grounded", "per-leader"):
        np.testing.assert_allclose(exact_influence_all(g, method=method).values, dense.values, rtol=1e-8)


def test_sparse_inverse_stats_blocks() -> None:
    """Test that blocked diagonal solves agree with the dense inverse."""
    g = erdos_renyi_graph(40, 90, seed=2)
    grounded = g.grounded_laplacian()
    inverse = np.linalg.inv(grounded.toarray())

    column_sums, diagonal = exact._sparse_inverse_stats(grounded, block=7)
    np.testing.assert_allclose(column_sums, inverse.sum(axis=0), rtol=1e-10)
    np.testing.assert_allclose(diagonal, np.diag(inverse), rtol=1e-10)
