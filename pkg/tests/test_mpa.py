"""Tests for the Message Passing Algorithm."""

from typing import List

import networkx as nx
import numpy as np
import pytest

from harmonic_mpa.config import StoppingConfig
from harmonic_mpa.errors import FieldAsLeaderError, KeyMismatchError
from harmonic_mpa.exact import exact_influence_all
from harmonic_mpa.generators import erdos_renyi_graph, generate_wheel_pair, random_tree
from harmonic_mpa.graph import FIELD, WeightedFieldGraph, build_graph, scale_weights
from harmonic_mpa.mpa import (
    MessageState,
    estimate,
    estimate_all,
    mpa_init,
    mpa_run,
    mpa_step,
    naive_step,
    random_state,
)


def _check_ranges(g: WeightedFieldGraph, s: MessageState) -> None:
    field = g.src == FIELD
    assert np.all(s.W[field] == 0.0) and np.all(s.H[field] == 0.0)
    assert np.all((s.W[~field] > 0.0) & (s.W[~field] <= 1.0))
    assert np.all(s.H[~field] >= 1.0)


def test_mpa_init_path(path_graph: WeightedFieldGraph) -> None:
    """Test the standard initial messages."""
    s = mpa_init(path_graph)
    assert s.t == 0
    assert s.W.size == 2 * path_graph.num_edges
    assert s.message(1, FIELD) == (1.0, 1.0)
    assert s.message(1, 2) == (1.0, 1.0)
    assert s.message(2, 1) == (1.0, 1.0)
    assert s.message(FIELD, 1) == (0.0, 0.0)


def test_mpa_step_path(path_graph: WeightedFieldGraph) -> None:
    """Test one hand-evaluated round on the path."""
    s = mpa_step(path_graph, mpa_init(path_graph))
    assert s.t == 1
    assert s.message(1, 2) == (0.5, 1.0)
    assert s.message(2, 1) == (1.0, 1.0)
    assert s.message(1, FIELD) == (1.0, 2.0)
    assert s.message(FIELD, 1) == (0.0, 0.0)


def test_estimates_path(path_graph: WeightedFieldGraph) -> None:
    """Test that one round already gives the exact path influence."""
    s0 = mpa_init(path_graph)
    np.testing.assert_array_equal(estimate_all(path_graph, s0).values, [2.0, 2.0])

    s1 = mpa_step(path_graph, s0)
    assert estimate(path_graph, s1, 1) == 2.0
    assert estimate(path_graph, s1, 2) == 1.5

    profile = estimate_all(path_graph, s1)
    assert profile.kind == "mpa-estimate"
    assert profile.round == 1
    np.testing.assert_array_equal(profile.values, [2.0, 1.5])


def test_estimate_field_leader(path_graph: WeightedFieldGraph) -> None:
    """Test that the field cannot lead."""
    with pytest.raises(FieldAsLeaderError):
        estimate(path_graph, mpa_init(path_graph), FIELD)


def test_star_leaves_stay_at_one(star_graph: WeightedFieldGraph) -> None:
    """Test that leaves hanging from the field have influence 1."""
    s = mpa_init(star_graph)
    for _ in range(3):
        s = mpa_step(star_graph, s)
        np.testing.assert_array_equal(estimate_all(star_graph, s).values, [1.0, 1.0, 1.0])


def test_initial_estimates_count_peers(triangle_graph: WeightedFieldGraph) -> None:
    """Test estimates at t = 0: one plus the number of non-field neighbours."""
    np.testing.assert_array_equal(estimate_all(triangle_graph, mpa_init(triangle_graph)).values, [3.0, 3.0, 3.0])


def test_mpa_run_path(path_graph: WeightedFieldGraph) -> None:
    """Test that the path stops at round 2 with zero distances."""
    state, trace = mpa_run(path_graph)
    assert trace.stop_round == 2
    assert trace.stop_reason == "tolerance"
    assert trace.converged
    np.testing.assert_array_equal(trace.t, [0, 1, 2])
    np.testing.assert_array_equal(trace.dW, [0.5, 0.0, 0.0])
    np.testing.assert_array_equal(trace.dH, [0.5, 0.0, 0.0])
    assert trace.w_round == 1
    assert trace.h_round == 1
    np.testing.assert_array_equal(estimate_all(path_graph, state).values, [2.0, 1.5])


def test_mpa_run_max_rounds(random_graphs: List[WeightedFieldGraph]) -> None:
    """Test that running out of rounds is reported, not raised."""
    g = random_graphs[-1]
    state, trace = mpa_run(g, cfg=StoppingConfig(max_rounds=3))
    assert trace.stop_reason == "max_rounds"
    assert not trace.converged
    assert state.t == 3
    assert trace.rounds == 3
    assert list(trace.to_frame().columns) == ["t", "dW", "dH"]
    assert len(trace.to_frame()) == 4


def test_mpa_run_progress_callback(random_graphs: List[WeightedFieldGraph]) -> None:
    """Test that progress is reported with the round counter."""
    calls = []
    mpa_run(random_graphs[0], progress=lambda t, dw, dh: calls.append(t), progress_every=2)
    assert calls
    assert all(t % 2 == 0 for t in calls)


def test_mpa_run_without_backfill(random_graphs: List[WeightedFieldGraph]) -> None:
    """Test that skipping the backfill keeps the final state."""
    g = random_graphs[1]
    full_state, full_trace = mpa_run(g)
    quick_state, quick_trace = mpa_run(g, backfill=False)
    np.testing.assert_array_equal(full_state.W, quick_state.W)
    assert full_trace.stop_round == quick_trace.stop_round
    assert np.isnan(quick_trace.dW).all()


def test_trace_distances_end_at_zero(random_graphs: List[WeightedFieldGraph]) -> None:
    """Test that backfilled distances reach zero at the last round."""
    for g in random_graphs[:3]:
        _, trace = mpa_run(g)
        assert trace.dW[-1] == 0.0
        assert trace.dH[-1] == 0.0
        assert trace.t[0] <= trace.w_round <= trace.stop_round
        assert trace.t[0] <= trace.h_round <= trace.stop_round


def test_range_invariant(random_graphs: List[WeightedFieldGraph]) -> None:
    """Test message ranges over many rounds."""
    for g in random_graphs:
        s = mpa_init(g)
        for _ in range(50):
            s = mpa_step(g, s)
            _check_ranges(g, s)


def test_key_mismatch(path_graph: WeightedFieldGraph, triangle_graph: WeightedFieldGraph) -> None:
    """Test that a state cannot be stepped on another graph."""
    with pytest.raises(KeyMismatchError):
        mpa_step(triangle_graph, mpa_init(path_graph))

    with pytest.raises(KeyMismatchError):
        mpa_run(triangle_graph, mpa_init(path_graph))


def test_tree_exactness() -> None:
    """Test that estimates at t = diameter are exact on 50 random trees."""
    rng = np.random.default_rng(11)
    for seed in range(50):
        g = random_tree(int(rng.integers(5, 201)), seed=seed)
        diameter = nx.diameter(g.to_networkx())

        s = mpa_init(g)
        for _ in range(diameter):
            s = mpa_step(g, s)
        np.testing.assert_allclose(estimate_all(g, s).values, exact_influence_all(g).values, rtol=1e-9)

        # Fixed point reached
        after = mpa_step(g, s)
        np.testing.assert_array_equal(after.W, s.W)
        np.testing.assert_array_equal(after.H, s.H)


def test_path_settles_one_round_before_diameter() -> None:
    """Test that a path hanging off the field settles in exactly diameter - 1 rounds.

    Field messages never change, so the message into the far end is the
    last one to settle.
    """
    n = 30
    g = build_graph(n, [(k - 1, k, 0.5 + 0.5 * (k % 3)) for k in range(1, n + 1)])
    diameter = nx.diameter(g.to_networkx())
    assert diameter == n

    state, trace = mpa_run(g)
    assert trace.converged
    assert trace.w_round == diameter - 1
    assert trace.h_round == diameter - 1
    np.testing.assert_allclose(estimate_all(g, state).values, exact_influence_all(g).values, rtol=1e-9)


def test_overestimation() -> None:
    """Test that converged estimates never fall below exact influence."""
    rng = np.random.default_rng(5)
    cfg = StoppingConfig(eps_w=1e-12, eps_h=1e-12)
    for seed in range(30):
        n = int(rng.integers(10, 61))
        mean_degree = float(rng.uniform(4.0, 8.0))
        g = erdos_renyi_graph(n, int(round(mean_degree * n / 2)), field_weight=1.0, seed=seed)

        state, trace = mpa_run(g, cfg=cfg, backfill=False)
        assert trace.converged
        est = estimate_all(g, state).values
        exact = exact_influence_all(g).values
        assert np.all(est >= exact - 1e-8)


def test_monotone_w_under_standard_init() -> None:
    """Test W(t + 1) <= W(t) on trees, G(n, m) graphs and wheel pairs."""
    rng = np.random.default_rng(12)
    graphs = [random_tree(int(rng.integers(5, 201)), seed=seed) for seed in range(5)]
    for seed in range(5):
        n = int(rng.integers(20, 61))
        mean_degree = float(rng.uniform(4.0, 8.0))
        graphs.append(erdos_renyi_graph(n, int(round(mean_degree * n / 2)), field_weight=1.0, seed=seed))
    for seed in range(3):
        graphs.extend(generate_wheel_pair(seed=seed))
    for g in graphs:
        s = mpa_init(g)
        for _ in range(200):
            nxt = mpa_step(g, s)
            assert np.all(nxt.W <= s.W + 1e-12)
            s = nxt


def test_scale_invariant_trajectory(random_graphs: List[WeightedFieldGraph]) -> None:
    """Test that scaling weights leaves the trajectory unchanged."""
    g = random_graphs[2]
    scaled = scale_weights(g, 10.0)
    s, t = mpa_init(g), mpa_init(scaled)
    for _ in range(30):
        s, t = mpa_step(g, s), mpa_step(scaled, t)
        np.testing.assert_allclose(s.W, t.W, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(s.H, t.H, rtol=1e-12)


def test_optimized_step_matches_naive() -> None:
    """Test the O(m) round against the direct double sum on 20 graphs."""
    rng = np.random.default_rng(9)
    for seed in range(20):
        n = int(rng.integers(5, 41))
        g = erdos_renyi_graph(n, int(rng.integers(n, 3 * n)), field_weight=1.0, seed=seed, weight_range=(0.2, 5.0))

        s = mpa_init(g)
        for _ in range(100):
            fast = mpa_step(g, s)
            slow = naive_step(g, s)
            np.testing.assert_allclose(fast.W, slow.W, rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(fast.H, slow.H, rtol=1e-12, atol=1e-12 * float(slow.H.max()))
            s = fast


def test_synchronous_update_order(random_graphs: List[WeightedFieldGraph]) -> None:
    """Test that the emission order inside a round does not matter."""
    g = random_graphs[0]
    s = mpa_step(g, mpa_step(g, mpa_init(g)))
    order = np.random.default_rng(0).permutation(g.num_messages)
    forward = naive_step(g, s)
    shuffled = naive_step(g, s, order=order)
    np.testing.assert_array_equal(forward.W, shuffled.W)
    np.testing.assert_array_equal(forward.H, shuffled.H)


def test_skip_into_field_keeps_estimates(random_graphs: List[WeightedFieldGraph]) -> None:
    """Test that freezing messages into the field changes no estimate."""
    g = random_graphs[3]
    plain = skipped = mpa_init(g)
    for _ in range(40):
        plain = mpa_step(g, plain)
        skipped = mpa_step(g, skipped, skip_into_field=True)
        np.testing.assert_array_equal(estimate_all(g, plain).values, estimate_all(g, skipped).values)

    into_field = g.indices == FIELD
    np.testing.assert_array_equal(skipped.W[into_field], 1.0)


def test_random_state_ranges(random_graphs: List[WeightedFieldGraph]) -> None:
    """Test that random initial states respect the message ranges."""
    g = random_graphs[4]
    s = random_state(g, np.random.default_rng(1))
    _check_ranges(g, s)
    assert s.H.max() <= g.n
