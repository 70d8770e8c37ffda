"""Exact harmonic influence by discrete Dirichlet problems."""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import FieldAsLeaderError, SolveFailureError
from .graph import FIELD, NodeId, WeightedFieldGraph

logger = logging.getLogger(__name__)

# Systems up to this size are factorized densely; larger ones use Jacobi-preconditioned CG.
DENSE_LIMIT = 2000
RESIDUAL_TOL = 1e-10

PROFILE_KINDS = ("exact", "mpa-estimate")


@dataclass
class InfluenceProfile:
    """Influence of every leader 1..n.

    ``values[l - 1]`` holds the influence of leader ``l``.
    """

    values: np.ndarray
    kind: str = "exact"
    round: Optional[int] = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        self.validate()

    def validate(self) -> None:
        """Validate the profile."""
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"Invalid profile kind: {self.kind}")
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("A profile needs a non-empty one-dimensional value vector")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Influence values must be finite")
        if self.values.min() < 1.0 - 1e-9:
            raise ValueError("Influence values must be at least 1")

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(1, self.n + 1)

    def __getitem__(self, leader: NodeId) -> float:
        if not 1 <= leader <= self.n:
            raise KeyError(leader)
        return float(self.values[leader - 1])

    def as_dict(self) -> Dict[NodeId, float]:
        return {int(node): float(value) for node, value in zip(self.nodes, self.values)}

    def top_node(self) -> NodeId:
        """Most influential leader; the lowest id wins exact ties."""
        return int(np.argmax(self.values)) + 1

    def ranking(self) -> np.ndarray:
        """Leaders from most to least influential, ties by ascending id."""
        order = np.lexsort((self.nodes, -self.values))
        return self.nodes[order]


@dataclass
class DirichletSolution:
    """Harmonic extension x with x_field = 0 and x_leader = 1."""

    leader: NodeId
    x: np.ndarray
    influence: float


def solve_dirichlet(g: WeightedFieldGraph, leader: NodeId) -> DirichletSolution:
    """Solve (L x)_R = 0, x_leader = 1, x_field = 0 for one leader.

    Args:
        g: Connected graph
        leader: Leader node (not the field)

    Returns:
        The solution vector indexed by node id and its entry sum

    Raises:
        FieldAsLeaderError: If the leader is the field node
        SolveFailureError: If the system could not be solved to tolerance
    """
    if leader == FIELD:
        raise FieldAsLeaderError()
    g.check_node(leader)

    lap = g.laplacian()
    x = np.zeros(g.num_nodes)
    x[leader] = 1.0

    interior = np.setdiff1d(np.arange(1, g.num_nodes), [leader])
    if interior.size:
        rows = lap[interior]
        system = rows[:, interior]
        rhs = -rows[:, [leader]].toarray().ravel()
        tol = RESIDUAL_TOL * float(g.degrees.max())

        x[interior] = _solve_spd(system, rhs, tol)

        residual = float(np.abs(rows @ x).max())
        if residual >= tol:
            raise SolveFailureError(
                f"Dirichlet solve for leader {leader} left residual {residual:.3e} (tolerance {tol:.3e})"
            )
        # Maximum principle; only rounding noise is clipped here.
        x[interior] = np.clip(x[interior], 0.0, 1.0)

    return DirichletSolution(leader=leader, x=x, influence=float(x.sum()))


def exact_influence_all(g: WeightedFieldGraph, method: str = "grounded") -> InfluenceProfile:
    """Exact harmonic influence of every leader.

    The ``grounded`` method inverts the grounded Laplacian once: with
    G = inverse of L restricted to 1..n, H(l) = (1^T G)_l / G_ll. The
    ``per-leader`` method runs one Dirichlet solve per leader and serves
    as the reference.

    Args:
        g: Connected graph
        method: ``grounded`` or ``per-leader``

    Returns:
        Exact influence profile

    Raises:
        SolveFailureError: If a factorization or solve fails
    """
    if method == "per-leader":
        values = [solve_dirichlet(g, leader).influence for leader in range(1, g.num_nodes)]
        return InfluenceProfile(np.array(values), kind="exact")
    if method != "grounded":
        raise ValueError(f"Unknown method: {method}")

    grounded = g.grounded_laplacian()
    if g.n <= DENSE_LIMIT:
        column_sums, diagonal = _dense_inverse_stats(grounded.toarray())
    else:
        column_sums, diagonal = _sparse_inverse_stats(grounded)

    logger.debug("Grounded Laplacian inverse computed for n=%d", g.n)
    return InfluenceProfile(column_sums / diagonal, kind="exact")


def _solve_spd(system: sp.spmatrix, rhs: np.ndarray, tol: float) -> np.ndarray:
    """Solve a symmetric positive definite system, densely or by PCG."""
    size = system.shape[0]
    if size <= DENSE_LIMIT:
        try:
            factor = la.cho_factor(system.toarray())
            return la.cho_solve(factor, rhs)
        except la.LinAlgError as e:
            raise SolveFailureError(f"Cholesky factorization failed: {e}") from e

    inverse_diagonal = 1.0 / system.diagonal()
    preconditioner = spla.LinearOperator(
        (size, size), matvec=lambda v: inverse_diagonal * v, dtype=np.float64
    )
    solution, info = spla.cg(
        system.tocsr(), rhs, rtol=0.0, atol=0.5 * tol, maxiter=10 * size, M=preconditioner
    )
    if info != 0:
        raise SolveFailureError(f"Conjugate gradient did not converge (info={info})")
    return solution


def _dense_inverse_stats(grounded: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    try:
        factor = la.cho_factor(grounded)
    except la.LinAlgError as e:
        raise SolveFailureError(f"Grounded Laplacian is not positive definite: {e}") from e
    inverse = la.cho_solve(factor, np.eye(grounded.shape[0]))
    return inverse.sum(axis=0), np.diag(inverse).copy()


def _sparse_inverse_stats(grounded: sp.spmatrix, block: int = 256) -> Tuple[np.ndarray, np.ndarray]:
    size = grounded.shape[0]
    try:
        lu = spla.splu(grounded.tocsc())
    except RuntimeError as e:
        raise SolveFailureError(f"Sparse factorization failed: {e}") from e

    # G is symmetric, so its column sums are G @ 1.
    column_sums = lu.solve(np.ones(size))
    diagonal = np.empty(size)
    for start in range(0, size, block):
        stop = min(start + block, size)
        unit = np.zeros((size, stop - start))
        unit[np.arange(start, stop), np.arange(stop - start)] = 1.0
        diagonal[start:stop] = lu.solve(unit)[np.arange(start, stop), np.arange(stop - start)]
    return column_sums, diagonal
