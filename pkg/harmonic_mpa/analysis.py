"""Comparing exact and MPA influence, convergence sweeps and stability probes."""

import logging
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd
from scipy import stats

from .config import StoppingConfig, WheelDefaults
from .errors import LabelMismatchError, NodeSetMismatchError, NotAFixedPointError
from .exact import InfluenceProfile
from .generators import CommunityLabels, WheelSpec, erdos_renyi_graph, generate_wheel, random_tree
from .graph import WeightedFieldGraph
from .mpa import MessageState, _check_keys, _RoundKernel, mpa_run

logger = logging.getLogger(__name__)

SWEEP_FAMILIES = ("er", "wheel", "tree")

FIXED_POINT_TOL = 1e-9
POWER_TOL = 1e-6
POWER_MAX_ITER = 5000
FD_EPSILON = 1e-7


@dataclass
class RankingComparison:
    """Rank agreement between an exact and an estimated profile."""

    kendall_tau: float
    spearman_rho: float
    top1_match: bool
    exact_top: int
    estimate_top: int
    ratios: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kendall_tau": self.kendall_tau,
            "spearman_rho": self.spearman_rho,
            "top1_match": self.top1_match,
            "exact_top": self.exact_top,
            "estimate_top": self.estimate_top,
            "mean_ratio": float(self.ratios.mean()),
            "max_ratio": float(self.ratios.max()),
        }


def _check_same_nodes(exact: InfluenceProfile, est: InfluenceProfile) -> None:
    if exact.n != est.n:
        raise NodeSetMismatchError(
            f"Profiles cover different node sets (1..{exact.n} and 1..{est.n})"
        )


def _rank_statistic(statistic: Callable[..., Any], a: np.ndarray, b: np.ndarray) -> float:
    """A rank correlation, defined as 1 or 0 where scipy returns NaN.

    scipy is undefined when one side has a single distinct value; two
    identical tie patterns then count as full agreement.
    """
    value = float(statistic(a, b)[0])
    if np.isnan(value):
        same = np.array_equal(stats.rankdata(a), stats.rankdata(b))
        return 1.0 if same else 0.0
    return value


def compare_rankings(exact: InfluenceProfile, est: InfluenceProfile) -> RankingComparison:
    """Kendall tau-b, Spearman rho and top-1 agreement of two profiles.

    Raises:
        NodeSetMismatchError: If the profiles cover different node sets
    """
    _check_same_nodes(exact, est)
    return RankingComparison(
        kendall_tau=_rank_statistic(stats.kendalltau, exact.values, est.values),
        spearman_rho=_rank_statistic(stats.spearmanr, exact.values, est.values),
        top1_match=exact.top_node() == est.top_node(),
        exact_top=exact.top_node(),
        estimate_top=est.top_node(),
        ratios=est.values / exact.values,
    )


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    if x.size < 2 or np.ptp(x) == 0.0:
        return float("nan")
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class CommunityArtefact:
    """Per-community overestimation and the least-squares slope of estimate on exact."""

    table: pd.DataFrame
    global_slope: float

    def smallest_community(self) -> int:
        return int(self.table.loc[self.table["size"].idxmin(), "community"])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "global_slope": self.global_slope,
            "communities": self.table.to_dict(orient="records"),
        }


def community_artefact(
    exact: InfluenceProfile,
    est: InfluenceProfile,
    labels: CommunityLabels,
    k: int = 10,
) -> CommunityArtefact:
    """Summarize how the MPA overestimates influence community by community.

    Args:
        exact: Exact profile
        est: MPA estimates
        labels: Community of every node
        k: Size of the top-k sets compared inside each community

    Raises:
        NodeSetMismatchError: If the profiles cover different node sets
        LabelMismatchError: If the labels do not cover exactly the profile's nodes
    """
    _check_same_nodes(exact, est)
    if labels.n != exact.n:
        raise LabelMismatchError(f"Labels cover {labels.n} nodes, profiles cover {exact.n}")

    ratios = est.values / exact.values
    rows = []
    for community in range(labels.count):
        members = labels.members(community) - 1
        x = exact.values[members]
        y = est.values[members]

        top = min(k, members.size)
        exact_top = set(members[np.lexsort((members, -x))][:top])
        est_top = set(members[np.lexsort((members, -y))][:top])

        rows.append(
            {
                "community": community,
                "size": int(members.size),
                "mean_ratio": float(ratios[members].mean()),
                "max_ratio": float(ratios[members].max()),
                "topk_overlap": len(exact_top & est_top) / top,
                "slope": _slope(x, y),
            }
        )

    return CommunityArtefact(
        table=pd.DataFrame(rows),
        global_slope=_slope(exact.values, est.values),
    )


def community_scatter(
    exact: InfluenceProfile, est: InfluenceProfile, labels: Optional[CommunityLabels] = None
) -> pd.DataFrame:
    """One row per node: ``node,exact,estimate[,community]``."""
    _check_same_nodes(exact, est)
    frame = pd.DataFrame({"node": exact.nodes, "exact": exact.values, "estimate": est.values})
    if labels is not None:
        if labels.n != exact.n:
            raise LabelMismatchError(f"Labels cover {labels.n} nodes, profiles cover {exact.n}")
        frame["community"] = labels.labels
    return frame


@dataclass
class SweepResult:
    """Convergence rounds per graph and the fit of H rounds against m/n."""

    table: pd.DataFrame
    slope: float
    intercept: float
    r_squared: float

    def mean_rounds(self) -> pd.DataFrame:
        """Mean rounds per (n, target ratio) point, averaged over seeds."""
        return (
            self.table.groupby(["n", "ratio"], as_index=False, dropna=False)[
                ["m_over_n", "w_rounds", "h_rounds", "diameter"]
            ]
            .mean()
            .sort_values(["n", "ratio"])
        )

    def fit_dict(self) -> Dict[str, float]:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared}


def _sweep_graph(
    family: str, n: int, ratio: float, seed: int, field_weight: float, wheel: WheelDefaults
) -> WeightedFieldGraph:
    if family == "er":
        return erdos_renyi_graph(n, int(round(ratio * n)), field_weight, seed)
    if family == "tree":
        return random_tree(n, seed)
    return generate_wheel(
        WheelSpec(n=n, p=wheel.p, q=wheel.q, field_weight=field_weight, seed=seed)
    )


def convergence_sweep(
    family: str,
    sizes: Sequence[int],
    seeds: Sequence[int],
    cfg: Optional[StoppingConfig] = None,
    ratios: Sequence[float] = (2.0,),
    field_weight: float = 1.0,
    wheel: Optional[WheelDefaults] = None,
    on_row: Optional[Callable[[Dict[str, Any]], None]] = None,
) -> SweepResult:
    """Measure MPA convergence rounds across a graph family.

    For ``er`` every size is crossed with every target ratio of peer edges
    to nodes; ``tree`` and ``wheel`` ignore the ratios. The m column counts
    all edges, field edges included.

    Args:
        family: ``er``, ``wheel`` or ``tree``
        sizes: Node counts
        seeds: Random seeds, one graph per seed and point
        cfg: Stopping configuration
        ratios: Peer edges per node for ``er``
        field_weight: Weight of the field edges (``er`` and ``wheel``)
        wheel: Chord and hub probabilities for ``wheel``
        on_row: Called with each table row as it is produced

    Returns:
        The sweep table and the least-squares fit of H rounds on m/n
    """
    if family not in SWEEP_FAMILIES:
        raise ValueError(f"Unknown graph family: {family}")
    if not sizes:
        raise ValueError("A sweep needs at least one size")
    if not seeds:
        raise ValueError("A sweep needs at least one seed")
    cfg = cfg or StoppingConfig()
    wheel = wheel or WheelDefaults()
    points = ratios if family == "er" else (float("nan"),)

    rows = []
    for n in sizes:
        for ratio in points:
            for seed in seeds:
                g = _sweep_graph(family, n, ratio, seed, field_weight, wheel)
                started = time.perf_counter()
                _, trace = mpa_run(g, cfg=cfg)
                row = {
                    "family": family,
                    "n": g.n,
                    "ratio": ratio,
                    "seed": seed,
                    "m": g.num_edges,
                    "m_over_n": g.num_edges / g.n,
                    "w_rounds": trace.w_round - trace.start_round,
                    "h_rounds": trace.h_round - trace.start_round,
                    "stop_reason": trace.stop_reason,
                    "diameter": nx.diameter(g.to_networkx()),
                    "wall_time": time.perf_counter() - started,
                }
                logger.debug("Sweep point %s", row)
                rows.append(row)
                if on_row is not None:
                    on_row(row)

    table = pd.DataFrame(rows)
    x = table["m_over_n"].to_numpy(dtype=np.float64)
    y = table["h_rounds"].to_numpy(dtype=np.float64)
    if np.ptp(x) > 0:
        fit = stats.linregress(x, y)
        slope, intercept, r_squared = float(fit.slope), float(fit.intercept), float(fit.rvalue**2)
    else:
        slope = intercept = r_squared = float("nan")
    return SweepResult(table, slope, intercept, r_squared)


@dataclass
class StabilityReport:
    """Spectral radii of the linearized W update and of the H propagation."""

    w_radius: float
    h_radius: float
    w_converged: bool
    h_converged: bool
    w_iterations: int
    h_iterations: int
    fd_error: float
    fixed_point_residual: float

    @property
    def spectral_radius(self) -> float:
        return self.w_radius

    @property
    def stable(self) -> bool:
        return self.w_radius < 1.0 and self.h_radius < 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spectral_radius": self.w_radius,
            "h_spectral_radius": self.h_radius,
            "stable": self.stable,
            "w_converged": self.w_converged,
            "h_converged": self.h_converged,
            "w_iterations": self.w_iterations,
            "h_iterations": self.h_iterations,
            "fd_error": self.fd_error,
            "fixed_point_residual": self.fixed_point_residual,
        }


class _Linearization:
    """Matrix-free Jacobian of the W update and H propagation at a fixed point."""

    def __init__(self, g: WeightedFieldGraph, W: np.ndarray) -> None:
        self.size = g.num_nodes
        self.src = g.src
        self.reverse = g.reverse
        self.weights = g.weights
        self.field = g.field_positions
        self.W = W

    def _mask(self, v: np.ndarray) -> np.ndarray:
        # Field-origin messages are frozen, so they carry no perturbation.
        v = v.copy()
        v[self.field] = 0.0
        return v

    def _exclusive_sum(self, incoming: np.ndarray) -> np.ndarray:
        total = np.bincount(self.src, weights=incoming, minlength=self.size)
        return total[self.src] - incoming

    def jacobian_w(self, v: np.ndarray) -> np.ndarray:
        in_v = self._mask(v)[self.reverse]
        out = self._exclusive_sum(self.weights * in_v) / self.weights * self.W**2
        out[self.field] = 0.0
        return out

    def propagate_h(self, u: np.ndarray) -> np.ndarray:
        in_u = (self._mask(u) * self.W)[self.reverse]
        out = self._exclusive_sum(in_u)
        out[self.field] = 0.0
        return out


def _spectral_radius(
    operator: Callable[[np.ndarray], np.ndarray],
    start: np.ndarray,
    tol: float = POWER_TOL,
    max_iter: int = POWER_MAX_ITER,
) -> Tuple[float, bool, int]:
    """Perron root of a non-negative operator by power iteration.

    Iterates on ``operator + I`` so that periodic operators still converge;
    its Perron root is the operator's plus one. A plain iterate runs
    alongside and catches nilpotent operators, whose radius is exactly 0.
    Returns ``(radius, converged, iterations)``.
    """
    x = start / start.sum()
    z = x.copy()
    lam = np.nan
    for iteration in range(1, max_iter + 1):
        z = operator(z)
        z_sum = float(z.sum())
        if z_sum == 0.0:
            return 0.0, True, iteration
        z /= z_sum

        y = operator(x) + x
        lam_new = float(y.sum())  # x sums to 1 and is non-negative
        x = y / lam_new
        if np.isfinite(lam) and abs(lam_new - lam) < tol * lam_new:
            return max(lam_new - 1.0, 0.0), True, iteration
        lam = lam_new
    return max(lam - 1.0, 0.0), False, max_iter


def stability_probe(
    g: WeightedFieldGraph, s_fixed: MessageState, seed: int = 0
) -> StabilityReport:
    """Local stability of a converged MPA state.

    The W-Jacobian has entry (C_ik / C_ij) * W'(i->j)^2 at row i->j and
    column k->i for k a neighbour of i other than j. The H messages follow
    an affine map whose linear part has entry W(k->i) at the same
    positions. Both radii are found by power iteration from a random
    positive start, and a forward finite difference checks the Jacobian.

    Raises:
        KeyMismatchError: If the state is not keyed by g's directed edges
        NotAFixedPointError: If one more round moves W by 1e-9 or more
    """
    _check_keys(g, s_fixed)
    kernel = _RoundKernel(g)
    W_next, _ = kernel.advance(s_fixed.W, s_fixed.H)
    residual = float(np.abs(W_next - s_fixed.W).max())
    if residual >= FIXED_POINT_TOL:
        raise NotAFixedPointError(
            f"State at round {s_fixed.t} is not converged (W residual {residual:.3e})"
        )

    linear = _Linearization(g, W_next)
    rng = np.random.default_rng(seed)
    field = linear.field

    probe = rng.uniform(0.5, 1.0, g.num_messages)
    probe[field] = 0.0
    exact_jv = linear.jacobian_w(probe)
    W_moved, _ = kernel.advance(s_fixed.W + FD_EPSILON * probe, s_fixed.H)
    fd_jv = (W_moved - W_next) / FD_EPSILON
    scale = float(np.abs(exact_jv).max())
    gap = float(np.abs(fd_jv - exact_jv).max())
    fd_error = gap / scale if scale > 0 else gap

    start = rng.uniform(0.5, 1.0, g.num_messages)
    start[field] = 0.0
    w_radius, w_converged, w_iterations = _spectral_radius(linear.jacobian_w, start)
    h_radius, h_converged, h_iterations = _spectral_radius(linear.propagate_h, start)
    if not (w_converged and h_converged):
        logger.warning("Power iteration hit %d iterations without converging", POWER_MAX_ITER)

    return StabilityReport(
        w_radius=w_radius,
        h_radius=h_radius,
        w_converged=w_converged,
        h_converged=h_converged,
        w_iterations=w_iterations,
        h_iterations=h_iterations,
        fd_error=fd_error,
        fixed_point_residual=residual,
    )
