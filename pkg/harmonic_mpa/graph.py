"""Weighted graphs with a distinguished field node."""

import math
from typing import FrozenSet, Iterable, List, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import (
    DisconnectedError,
    DuplicateEdgeError,
    GraphError,
    NonPositiveScaleError,
    NonPositiveWeightError,
    SelfLoopError,
    UnknownNodeError,
)

NodeId = int
WeightedEdge = Tuple[int, int, float]

# The field node is always index 0; leaders are 1..n.
FIELD: NodeId = 0


class WeightedFieldGraph:
    """Immutable undirected weighted graph on nodes {0 (field), 1, ..., n}.

    Adjacency is kept in CSR form with neighbors sorted by id. Every CSR
    position ``p`` in row ``i`` is also the slot of the directed edge
    ``i -> indices[p]``, which is how message states are keyed.
    """

    def __init__(self, n: int, adjacency: sp.spmatrix) -> None:
        """Wrap a symmetric adjacency matrix.

        Args:
            n: Number of non-field nodes
            adjacency: Symmetric (n+1)x(n+1) matrix of positive weights

        Raises:
            GraphError: If the matrix has the wrong shape or is not symmetric
            DisconnectedError: If some node is unreachable from the field
        """
        if n < 1:
            raise GraphError("A graph needs at least one non-field node")

        matrix = sp.csr_matrix(adjacency, dtype=np.float64)
        matrix.eliminate_zeros()
        matrix.sort_indices()
        if matrix.shape != (n + 1, n + 1):
            raise GraphError(f"Adjacency shape {matrix.shape} does not match n={n}")
        if matrix.diagonal().any():
            raise SelfLoopError("Adjacency matrix has a non-zero diagonal")
        if (matrix != matrix.T).nnz:
            raise GraphError("Adjacency matrix is not symmetric")
        if matrix.nnz and not (np.all(np.isfinite(matrix.data)) and matrix.data.min() > 0):
            raise NonPositiveWeightError("All edge weights must be positive and finite")

        _, labels = connected_components(matrix, directed=False)
        unreachable = np.flatnonzero(labels != labels[FIELD])
        if unreachable.size:
            raise DisconnectedError(int(unreachable[0]))

        self.n = n
        self._matrix = matrix
        self.indptr = _frozen(matrix.indptr.astype(np.int64))
        self.indices = _frozen(matrix.indices.astype(np.int64))
        self.weights = _frozen(matrix.data.copy())
        self.src = _frozen(np.repeat(np.arange(n + 1, dtype=np.int64), np.diff(self.indptr)))

        size = n + 1
        keys = self.src * size + self.indices
        self.reverse = _frozen(np.searchsorted(keys, self.indices * size + self.src))
        self.degrees = _frozen(np.bincount(self.src, weights=self.weights, minlength=size))

    @property
    def num_nodes(self) -> int:
        """Number of nodes including the field."""
        return self.n + 1

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return int(self.indices.size // 2)

    @property
    def num_messages(self) -> int:
        """Number of directed edges (two per undirected edge)."""
        return int(self.indices.size)

    @property
    def field_positions(self) -> slice:
        """Slots of the directed edges leaving the field."""
        return slice(int(self.indptr[FIELD]), int(self.indptr[FIELD + 1]))

    def check_node(self, i: NodeId) -> None:
        """Raise UnknownNodeError unless ``i`` is a node of this graph."""
        if not 0 <= int(i) <= self.n:
            raise UnknownNodeError(f"Node {i} is not in 0..{self.n}")

    def neighbors(self, i: NodeId) -> List[Tuple[NodeId, float]]:
        """Neighbors of ``i`` with their weights, ascending by node id."""
        self.check_node(i)
        start, stop = self.indptr[i], self.indptr[i + 1]
        return [
            (int(j), float(w)) for j, w in zip(self.indices[start:stop], self.weights[start:stop])
        ]

    def degree(self, i: NodeId) -> float:
        """Sum of the weights incident to ``i``."""
        self.check_node(i)
        return float(self.degrees[i])

    def weight(self, i: NodeId, j: NodeId) -> float:
        """Weight of edge {i, j}, or 0.0 if the nodes are not adjacent."""
        self.check_node(i)
        self.check_node(j)
        return float(self._matrix[i, j])

    def has_edge(self, i: NodeId, j: NodeId) -> bool:
        """Whether {i, j} is an edge."""
        return self.weight(i, j) > 0.0

    def edges(self) -> List[WeightedEdge]:
        """Undirected edges as (i, j, w) with i < j, in lexicographic order."""
        upper = self.src < self.indices
        return [
            (int(i), int(j), float(w))
            for i, j, w in zip(self.src[upper], self.indices[upper], self.weights[upper])
        ]

    def edge_set(self) -> FrozenSet[Tuple[NodeId, NodeId]]:
        """Undirected edges as (i, j) pairs with i < j."""
        return frozenset((i, j) for i, j, _ in self.edges())

    def peer_edges(self) -> List[WeightedEdge]:
        """Edges that do not touch the field."""
        return [e for e in self.edges() if e[0] != FIELD]

    def adjacency_matrix(self) -> sp.csr_matrix:
        """A copy of the weight matrix C."""
        return self._matrix.copy()

    def laplacian(self) -> sp.csr_matrix:
        """The Laplacian L = D - C as a sparse matrix."""
        return sp.csr_matrix(sp.diags(self.degrees) - self._matrix)

    def grounded_laplacian(self) -> sp.csr_matrix:
        """The Laplacian with the field row and column removed (n x n)."""
        return self.laplacian()[1:, 1:].tocsr()

    def to_networkx(self) -> nx.Graph:
        """Export as a networkx graph with a ``weight`` edge attribute."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.num_nodes))
        graph.add_weighted_edges_from(self.edges())
        return graph

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedFieldGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.indices.tobytes(), self.weights.tobytes()))

    def __repr__(self) -> str:
        return f"WeightedFieldGraph(n={self.n}, edges={self.num_edges})"


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def build_graph(n: int, weighted_edges: Iterable[WeightedEdge]) -> WeightedFieldGraph:
    """Build and validate a graph from an edge list.

    Args:
        n: Number of non-field nodes (node ids 1..n, field is 0)
        weighted_edges: Undirected edges as (i, j, w)

    Returns:
        The validated graph

    Raises:
        UnknownNodeError: If an endpoint is outside 0..n
        SelfLoopError: If an edge joins a node to itself
        NonPositiveWeightError: If a weight is not strictly positive
        DuplicateEdgeError: If an edge appears twice (in either orientation)
        DisconnectedError: If a node is unreachable from the field
    """
    if n < 1:
        raise GraphError("A graph needs at least one non-field node")

    seen = set()
    rows: List[int] = []
    cols: List[int] = []
    values: List[float] = []

    for i, j, w in weighted_edges:
        i, j, w = int(i), int(j), float(w)
        for node in (i, j):
            if not 0 <= node <= n:
                raise UnknownNodeError(f"Edge ({i}, {j}) has endpoint {node} outside 0..{n}")
        if i == j:
            raise SelfLoopError(f"Self-loop on node {i}")
        if not (math.isfinite(w) and w > 0):
            raise NonPositiveWeightError(f"Edge ({i}, {j}) has non-positive weight {w}")

        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdgeError(f"Edge {key} appears more than once")
        seen.add(key)

        rows.append(key[0])
        cols.append(key[1])
        values.append(w)

    size = n + 1
    upper = sp.coo_matrix(
        (
            np.asarray(values, dtype=np.float64),
            (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)),
        ),
        shape=(size, size),
    )
    return WeightedFieldGraph(n, upper + upper.T)


def neighbors(g: WeightedFieldGraph, i: NodeId) -> List[Tuple[NodeId, float]]:
    """Neighbors of ``i`` in ascending id order (see WeightedFieldGraph.neighbors)."""
    return g.neighbors(i)


def scale_weights(g: WeightedFieldGraph, alpha: float) -> WeightedFieldGraph:
    """Multiply every weight by ``alpha``.

    Raises:
        NonPositiveScaleError: If alpha is not a positive finite number
    """
    if not (math.isfinite(alpha) and alpha > 0):
        raise NonPositiveScaleError(f"Scale factor must be positive, got {alpha}")
    return WeightedFieldGraph(g.n, g.adjacency_matrix() * alpha)
