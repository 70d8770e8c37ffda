"""Running the MPA across a change of network topology."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from .config import StoppingConfig
from .errors import GraphError, InvalidNewGraphError, KeyMismatchError
from .exact import InfluenceProfile, exact_influence_all
from .graph import NodeId, WeightedEdge, WeightedFieldGraph, build_graph
from .mpa import (
    ConvergenceTrace,
    MessageState,
    ProgressCallback,
    _check_keys,
    estimate_all,
    mpa_run,
    random_state,
)

logger = logging.getLogger(__name__)

Edge = Tuple[NodeId, NodeId]


@dataclass(frozen=True)
class TopologyChange:
    """A switch from one graph to another at round ``applied_at``.

    Messages on ``retained`` edges keep their values, messages on
    ``dropped`` edges disappear and messages on ``added`` edges start from
    the standard initialization. An edge whose weight changed is retained.
    """

    new_graph: WeightedFieldGraph
    retained: FrozenSet[Edge]
    dropped: FrozenSet[Edge]
    added: FrozenSet[Edge]
    applied_at: Optional[int] = None

    @classmethod
    def between(
        cls,
        old_graph: WeightedFieldGraph,
        new_graph: WeightedFieldGraph,
        applied_at: Optional[int] = None,
    ) -> "TopologyChange":
        """Describe the change from ``old_graph`` to ``new_graph``."""
        old_edges = old_graph.edge_set()
        new_edges = new_graph.edge_set()
        return cls(
            new_graph=new_graph,
            retained=old_edges & new_edges,
            dropped=old_edges - new_edges,
            added=new_edges - old_edges,
            applied_at=applied_at,
        )

    @classmethod
    def from_edges(
        cls,
        old_graph: WeightedFieldGraph,
        n: int,
        weighted_edges: Iterable[WeightedEdge],
        applied_at: Optional[int] = None,
    ) -> "TopologyChange":
        """Describe a change to the graph given by an edge list.

        Raises:
            InvalidNewGraphError: If the new edges do not form a valid connected graph
        """
        try:
            new_graph = build_graph(n, weighted_edges)
        except GraphError as e:
            raise InvalidNewGraphError(f"Graph after the change is invalid: {e}") from e
        return cls.between(old_graph, new_graph, applied_at)


def apply_change(
    old_g: WeightedFieldGraph, s: MessageState, chg: TopologyChange
) -> MessageState:
    """Carry a message state over to the graph after a topology change.

    Args:
        old_g: Graph the state belongs to
        s: Current messages
        chg: The change to apply

    Returns:
        State keyed by the new graph's directed edges, same round counter

    Raises:
        KeyMismatchError: If ``s`` does not belong to ``old_g`` or ``chg`` was built for another graph
    """
    _check_keys(old_g, s)
    if chg.retained | chg.dropped != old_g.edge_set():
        raise KeyMismatchError("Topology change was described against a different graph")

    new_g = chg.new_graph
    base = max(old_g.num_nodes, new_g.num_nodes)
    old_keys = old_g.src * base + old_g.indices
    new_keys = new_g.src * base + new_g.indices

    # Both key arrays are sorted because slots follow CSR order.
    found_at = np.minimum(np.searchsorted(old_keys, new_keys), old_keys.size - 1)
    kept = old_keys[found_at] == new_keys

    W = np.ones(new_g.num_messages)
    H = np.ones(new_g.num_messages)
    W[kept] = s.W[found_at[kept]]
    H[kept] = s.H[found_at[kept]]

    field = new_g.field_positions
    W[field] = 0.0
    H[field] = 0.0

    logger.debug(
        "Topology change at round %d: %d retained, %d dropped, %d added edges",
        s.t,
        len(chg.retained),
        len(chg.dropped),
        len(chg.added),
    )
    return MessageState(W, H, s.t, new_g.src, new_g.indices)


@dataclass
class ChangeReport:
    """Outcome of adapting a converged run to a new topology versus restarting."""

    change_round: int
    post_change_rounds: int
    fresh_rounds: int
    w_gap: float
    h_gap: float
    retained_edges: int
    dropped_edges: int
    added_edges: int
    before_trace: ConvergenceTrace
    after_trace: ConvergenceTrace
    fresh_trace: ConvergenceTrace
    after_estimates: InfluenceProfile
    fresh_estimates: InfluenceProfile
    exact_before: Optional[InfluenceProfile] = None
    exact_after: Optional[InfluenceProfile] = None
    trace_files: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready summary."""
        data: Dict[str, Any] = {
            "change_round": self.change_round,
            "post_change_rounds": self.post_change_rounds,
            "fresh_rounds": self.fresh_rounds,
            "w_gap": self.w_gap,
            "h_gap": self.h_gap,
            "retained_edges": self.retained_edges,
            "dropped_edges": self.dropped_edges,
            "added_edges": self.added_edges,
            "stop_reasons": {
                "before": self.before_trace.stop_reason,
                "after": self.after_trace.stop_reason,
                "fresh": self.fresh_trace.stop_reason,
            },
            "trace_files": dict(self.trace_files),
        }
        if self.exact_before is not None and self.exact_after is not None:
            data["exact_top_before"] = self.exact_before.top_node()
            data["exact_top_after"] = self.exact_after.top_node()
        data["mpa_top_after"] = self.after_estimates.top_node()
        return data


def run_change_experiment(
    g_before: WeightedFieldGraph,
    g_after: WeightedFieldGraph,
    cfg: Optional[StoppingConfig] = None,
    with_exact: bool = True,
    progress: Optional[ProgressCallback] = None,
) -> ChangeReport:
    """Converge on ``g_before``, switch to ``g_after`` and compare with a fresh run.

    Args:
        g_before: Graph the run starts on
        g_after: Graph after the change
        cfg: Stopping configuration for all three runs
        with_exact: Also compute exact influence on both graphs
        progress: Progress callback passed to every run

    Returns:
        Report with round counts, final gaps and all traces
    """
    cfg = cfg or StoppingConfig()

    before_state, before_trace = mpa_run(g_before, cfg=cfg, progress=progress)
    change = TopologyChange.between(g_before, g_after, applied_at=before_state.t)
    switched = apply_change(g_before, before_state, change)
    after_state, after_trace = mpa_run(g_after, switched, cfg, progress=progress)
    fresh_state, fresh_trace = mpa_run(g_after, cfg=cfg, progress=progress)

    after_estimates = estimate_all(g_after, after_state)
    fresh_estimates = estimate_all(g_after, fresh_state)
    w_gap = float(np.abs(after_state.W - fresh_state.W).max())
    h_gap = float(
        (
            np.abs(after_estimates.values - fresh_estimates.values)
            / np.maximum(1.0, np.abs(fresh_estimates.values))
        ).max()
    )
    logger.info(
        "Adapted run: %d rounds after the change, fresh run: %d rounds, W gap %.3e",
        after_trace.rounds,
        fresh_trace.rounds,
        w_gap,
    )

    return ChangeReport(
        change_round=before_state.t,
        post_change_rounds=after_trace.rounds,
        fresh_rounds=fresh_trace.rounds,
        w_gap=w_gap,
        h_gap=h_gap,
        retained_edges=len(change.retained),
        dropped_edges=len(change.dropped),
        added_edges=len(change.added),
        before_trace=before_trace,
        after_trace=after_trace,
        fresh_trace=fresh_trace,
        after_estimates=after_estimates,
        fresh_estimates=fresh_estimates,
        exact_before=exact_influence_all(g_before) if with_exact else None,
        exact_after=exact_influence_all(g_after) if with_exact else None,
    )


@dataclass
class UniquenessReport:
    """Fixed points reached from random initial states, compared to the standard one."""

    gaps: List[float]
    stop_reasons: List[str]
    tolerance: float

    @property
    def max_gap(self) -> float:
        return max(self.gaps) if self.gaps else 0.0

    @property
    def all_agree(self) -> bool:
        return all(gap < self.tolerance for gap in self.gaps) and all(
            reason == "tolerance" for reason in self.stop_reasons
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trials": len(self.gaps),
            "gaps": list(self.gaps),
            "stop_reasons": list(self.stop_reasons),
            "max_gap": self.max_gap,
            "tolerance": self.tolerance,
            "all_agree": self.all_agree,
        }


def probe_uniqueness(
    g: WeightedFieldGraph,
    trials: int = 10,
    cfg: Optional[StoppingConfig] = None,
    seed: int = 0,
    tolerance: float = 1e-7,
) -> UniquenessReport:
    """Run from random initial states and compare the W fixed points.

    Disagreements are findings about the conjectured unique equilibrium,
    so they are reported rather than raised.
    """
    cfg = cfg or StoppingConfig()
    reference, _ = mpa_run(g, cfg=cfg, backfill=False)
    rng = np.random.default_rng(seed)

    gaps: List[float] = []
    reasons: List[str] = []
    for _ in range(trials):
        final, trace = mpa_run(g, random_state(g, rng), cfg, backfill=False)
        gaps.append(float(np.abs(final.W - reference.W).max()))
        reasons.append(trace.stop_reason)

    report = UniquenessReport(gaps, reasons, tolerance)
    if not report.all_agree:
        logger.warning("Random initial states reached a different fixed point (max gap %.3e)", report.max_gap)
    return report
