"""Seeded graph families and community labels."""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .errors import EmptyKeepSetError, UnknownNodeError
from .graph import FIELD, NodeId, WeightedEdge, WeightedFieldGraph, build_graph

# Hubs of the paired wheel graphs; chords never touch them.
WHEEL_HUBS: Tuple[int, int] = (1, 26)

WeightRange = Optional[Tuple[float, float]]


@dataclass
class CommunityLabels:
    """Community id of every non-field node; ``labels[i - 1]`` belongs to node i."""

    labels: np.ndarray

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.validate()

    def validate(self) -> None:
        """Validate labels."""
        if self.labels.ndim != 1 or self.labels.size == 0:
            raise ValueError("Community labels need one entry per node")
        present = np.unique(self.labels)
        if not np.array_equal(present, np.arange(present.size)):
            raise ValueError("Community ids must be contiguous from 0")

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def count(self) -> int:
        return int(self.labels.max()) + 1

    def sizes(self) -> List[int]:
        """Number of nodes in each community, by community id."""
        return [int(size) for size in np.bincount(self.labels)]

    def members(self, community: int) -> np.ndarray:
        """Node ids of one community, ascending."""
        return np.flatnonzero(self.labels == community) + 1

    def label(self, node: NodeId) -> int:
        return int(self.labels[node - 1])


@dataclass
class WheelSpec:
    """A cycle 1..n plus field star, random chords and random hub edges."""

    n: int = 50
    p: float = 0.01
    q: float = 0.25
    hub: int = 1
    field_weight: float = 0.040
    seed: int = 0
    hub_seed: Optional[int] = None  # defaults to seed + 1
    reserved: Tuple[int, ...] = WHEEL_HUBS

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """Validate wheel parameters."""
        if self.n < 3:
            raise ValueError("A wheel needs at least 3 nodes")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"Chord probability p must be in [0, 1], got {self.p}")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"Hub probability q must be in [0, 1], got {self.q}")
        if not 1 <= self.hub <= self.n:
            raise ValueError(f"Hub {self.hub} is not in 1..{self.n}")
        if not self.field_weight > 0:
            raise ValueError("field_weight must be positive")


def _field_star(n: int, field_weight: float) -> List[WeightedEdge]:
    return [(FIELD, i, field_weight) for i in range(1, n + 1)]


def generate_wheel(spec: WheelSpec) -> WeightedFieldGraph:
    """Generate a wheel graph with random chords and hub edges.

    Random stream (numpy PCG64 via ``default_rng``): the chord candidates
    {i, j}, i < j, neither endpoint reserved and not on the cycle, are
    visited in lexicographic order with one uniform draw each from ``seed``;
    then the hub candidates {hub, j} not already present are visited by
    ascending j with one draw each from ``hub_seed``.
    """
    n = spec.n
    peers: Dict[Tuple[int, int], float] = {}
    for i in range(1, n):
        peers[(i, i + 1)] = 1.0
    peers[(1, n)] = 1.0

    reserved = np.array([r for r in spec.reserved if 1 <= r <= n], dtype=np.int64)
    rows, cols = np.triu_indices(n, k=1)
    rows, cols = rows + 1, cols + 1
    candidate = ~(np.isin(rows, reserved) | np.isin(cols, reserved))
    candidate &= ~((cols == rows + 1) | ((rows == 1) & (cols == n)))
    rows, cols = rows[candidate], cols[candidate]

    draws = np.random.default_rng(spec.seed).random(rows.size)
    for i, j in zip(rows[draws < spec.p], cols[draws < spec.p]):
        peers[(int(i), int(j))] = 1.0

    hub_candidates = [
        (min(spec.hub, j), max(spec.hub, j))
        for j in range(1, n + 1)
        if j != spec.hub and (min(spec.hub, j), max(spec.hub, j)) not in peers
    ]
    hub_seed = spec.seed + 1 if spec.hub_seed is None else spec.hub_seed
    hub_draws = np.random.default_rng(hub_seed).random(len(hub_candidates))
    for pair, draw in zip(hub_candidates, hub_draws):
        if draw < spec.q:
            peers[pair] = 1.0

    edges = _field_star(n, spec.field_weight)
    edges.extend((i, j, w) for (i, j), w in sorted(peers.items()))
    return build_graph(n, edges)


def generate_wheel_pair(
    n: int = 50,
    p: float = 0.01,
    q: float = 0.25,
    field_weight: float = 0.040,
    seed: int = 0,
    hubs: Tuple[int, int] = WHEEL_HUBS,
) -> Tuple[WeightedFieldGraph, WeightedFieldGraph]:
    """Two wheels sharing cycle and chords, differing only in their hub edges.

    The shared part comes from ``seed``; the hub edges of the first graph
    from ``seed + 1`` and those of the second from ``seed + 2``.
    """
    first = WheelSpec(n, p, q, hubs[0], field_weight, seed, seed + 1, hubs)
    second = WheelSpec(n, p, q, hubs[1], field_weight, seed, seed + 2, hubs)
    return generate_wheel(first), generate_wheel(second)


def _peer_weights(count: int, rng: np.random.Generator, weight_range: WeightRange) -> np.ndarray:
    if weight_range is None:
        return np.ones(count)
    low, high = weight_range
    return rng.uniform(low, high, count)


def erdos_renyi_graph(
    n: int,
    m: int,
    field_weight: float = 1.0,
    seed: int = 0,
    weight_range: WeightRange = None,
) -> WeightedFieldGraph:
    """G(n, m) random graph on 1..n, every node also joined to the field.

    Args:
        n: Number of non-field nodes
        m: Number of peer edges
        field_weight: Weight of the field edges
        seed: Random seed
        weight_range: Draw peer weights uniformly from this range (default: all 1)
    """
    peers = nx.gnm_random_graph(n, m, seed=seed)
    pairs = sorted((min(u, v) + 1, max(u, v) + 1) for u, v in peers.edges())
    weights = _peer_weights(len(pairs), np.random.default_rng(seed), weight_range)

    edges = _field_star(n, field_weight)
    edges.extend((i, j, float(w)) for (i, j), w in zip(pairs, weights))
    return build_graph(n, edges)


def random_tree(
    n: int, seed: int = 0, weight_range: WeightRange = (0.5, 2.0)
) -> WeightedFieldGraph:
    """Uniform random labelled tree on {field, 1..n} from a Prüfer sequence."""
    rng = np.random.default_rng(seed)
    if n == 1:
        pairs = [(FIELD, 1)]
    else:
        sequence = rng.integers(0, n + 1, size=n - 1).tolist()
        tree = nx.from_prufer_sequence(sequence)
        pairs = sorted((min(u, v), max(u, v)) for u, v in tree.edges())
    weights = _peer_weights(len(pairs), rng, weight_range)
    return build_graph(n, [(i, j, float(w)) for (i, j), w in zip(pairs, weights)])


def community_surrogate(
    sizes: Sequence[int] = (326, 434, 125),
    mean_degree: float = 30.0,
    p_out: float = 0.002,
    field_weight: float = 0.040,
    seed: int = 0,
) -> Tuple[WeightedFieldGraph, CommunityLabels]:
    """Stochastic block model standing in for a community-structured ego network.

    Each block gets the intra-block probability that gives it the same
    expected internal degree, so smaller blocks are denser.
    """
    probs = [
        [
            min(1.0, mean_degree / max(size - 1, 1)) if a == b else p_out
            for b in range(len(sizes))
        ]
        for a, size in enumerate(sizes)
    ]
    blocks = nx.stochastic_block_model(list(sizes), probs, seed=seed)
    n = int(sum(sizes))

    edges = _field_star(n, field_weight)
    edges.extend(
        (min(u, v) + 1, max(u, v) + 1, 1.0) for u, v in sorted(blocks.edges())
    )
    labels = np.repeat(np.arange(len(sizes)), sizes)
    return build_graph(n, edges), CommunityLabels(labels)


def induce_subgraph(
    g: WeightedFieldGraph, keep: Iterable[NodeId], field_weight: float
) -> Tuple[WeightedFieldGraph, Dict[NodeId, NodeId]]:
    """Subgraph induced by ``keep``, renumbered densely, with fresh field edges.

    Returns:
        The induced graph and the map from old to new node ids

    Raises:
        EmptyKeepSetError: If ``keep`` is empty
        UnknownNodeError: If ``keep`` contains the field or a node outside g
    """
    kept = sorted(set(int(node) for node in keep))
    if not kept:
        raise EmptyKeepSetError("Cannot induce a subgraph on an empty node set")
    for node in kept:
        if not 1 <= node <= g.n:
            raise UnknownNodeError(f"Node {node} is not a non-field node of the graph")

    mapping = {old: new for new, old in enumerate(kept, start=1)}
    edges = _field_star(len(kept), field_weight)
    edges.extend(
        (mapping[i], mapping[j], w)
        for i, j, w in g.peer_edges()
        if i in mapping and j in mapping
    )
    return build_graph(len(kept), edges), mapping
