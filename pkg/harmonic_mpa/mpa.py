"""Synchronous Message Passing Algorithm for harmonic influence."""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import StoppingConfig
from .errors import FieldAsLeaderError, KeyMismatchError
from .exact import InfluenceProfile
from .graph import FIELD, NodeId, WeightedFieldGraph

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, float, float], None]

STOP_TOLERANCE = "tolerance"
STOP_MAX_ROUNDS = "max_rounds"


@dataclass
class MessageState:
    """W and H messages on every directed edge, plus the round counter.

    Slot ``p`` holds the messages of the directed edge ``src[p] -> dst[p]``;
    the slots follow the CSR order of the graph the state belongs to.
    """

    W: np.ndarray
    H: np.ndarray
    t: int
    src: np.ndarray
    dst: np.ndarray

    def matches(self, g: WeightedFieldGraph) -> bool:
        """Whether this state is keyed by the directed edges of ``g``."""
        if self.src is g.src and self.dst is g.indices:
            return True
        return np.array_equal(self.src, g.src) and np.array_equal(self.dst, g.indices)

    def message(self, i: NodeId, j: NodeId) -> Tuple[float, float]:
        """The (W, H) pair sent from ``i`` to ``j``."""
        hits = np.flatnonzero((self.src == i) & (self.dst == j))
        if not hits.size:
            raise KeyError((i, j))
        return float(self.W[hits[0]]), float(self.H[hits[0]])

    def as_dict(self) -> Dict[Tuple[NodeId, NodeId], Tuple[float, float]]:
        """Messages keyed by directed edge."""
        return {
            (int(i), int(j)): (float(w), float(h))
            for i, j, w, h in zip(self.src, self.dst, self.W, self.H)
        }

    def copy(self) -> "MessageState":
        return MessageState(self.W.copy(), self.H.copy(), self.t, self.src, self.dst)


@dataclass
class ConvergenceTrace:
    """Per-round distances to the final messages and estimates.

    ``dW[k]`` and ``dH[k]`` are sup-norm distances at round ``t[k]`` to the
    last round; ``delta_w`` and ``delta_h`` are the successive changes the
    stopping rule looked at (relative for the estimates, NaN at the start).
    """

    t: np.ndarray
    dW: np.ndarray
    dH: np.ndarray
    delta_w: np.ndarray
    delta_h: np.ndarray
    stop_round: int
    stop_reason: str
    w_round: int
    h_round: int

    @property
    def start_round(self) -> int:
        return int(self.t[0])

    @property
    def rounds(self) -> int:
        """Rounds executed between the initial state and the stop."""
        return self.stop_round - self.start_round

    @property
    def converged(self) -> bool:
        return self.stop_reason == STOP_TOLERANCE

    def to_frame(self) -> pd.DataFrame:
        """The ``t,dW,dH`` table."""
        return pd.DataFrame({"t": self.t, "dW": self.dW, "dH": self.dH})

    def summary(self) -> Dict[str, object]:
        return {
            "start_round": self.start_round,
            "stop_round": self.stop_round,
            "rounds": self.rounds,
            "stop_reason": self.stop_reason,
            "w_convergence_round": self.w_round,
            "h_convergence_round": self.h_round,
        }


class _RoundKernel:
    """Precomputed index arrays for the O(m) node-aggregate round."""

    def __init__(self, g: WeightedFieldGraph, skip_into_field: bool = False) -> None:
        self.size = g.num_nodes
        self.src = g.src
        self.reverse = g.reverse
        self.weights = g.weights
        self.field = g.field_positions
        self.into_field = np.flatnonzero(g.indices == FIELD) if skip_into_field else None

    def advance(self, W: np.ndarray, H: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        # Incoming messages: at slot i->j read the j->i message.
        in_w = W[self.reverse]
        in_h = H[self.reverse]

        slack = self.weights * (1.0 - in_w)
        mass = in_w * in_h
        slack_sum = np.bincount(self.src, weights=slack, minlength=self.size)
        mass_sum = np.bincount(self.src, weights=mass, minlength=self.size)

        rest = np.maximum(slack_sum[self.src] - slack, 0.0)
        W_new = 1.0 / (1.0 + rest / self.weights)
        H_new = 1.0 + np.maximum(mass_sum[self.src] - mass, 0.0)

        W_new[self.field] = 0.0
        H_new[self.field] = 0.0
        if self.into_field is not None:
            W_new[self.into_field] = W[self.into_field]
            H_new[self.into_field] = H[self.into_field]
        return W_new, H_new

    def estimates(self, W: np.ndarray, H: np.ndarray) -> np.ndarray:
        mass = (W * H)[self.reverse]
        return 1.0 + np.bincount(self.src, weights=mass, minlength=self.size)[1:]


def _check_keys(g: WeightedFieldGraph, s: MessageState) -> None:
    if not s.matches(g):
        raise KeyMismatchError(
            "Message state does not match the graph's directed edges "
            "(was a topology change applied?)"
        )


def mpa_init(g: WeightedFieldGraph) -> MessageState:
    """Standard initial messages: (1, 1) from every node, (0, 0) from the field."""
    W = np.ones(g.num_messages)
    H = np.ones(g.num_messages)
    field = g.field_positions
    W[field] = 0.0
    H[field] = 0.0
    return MessageState(W, H, 0, g.src, g.indices)


def random_state(g: WeightedFieldGraph, rng: np.random.Generator) -> MessageState:
    """Random initial messages: W uniform in (0, 1], H uniform in [1, n]."""
    W = 1.0 - rng.random(g.num_messages)
    H = rng.uniform(1.0, max(float(g.n), 1.0), g.num_messages)
    field = g.field_positions
    W[field] = 0.0
    H[field] = 0.0
    return MessageState(W, H, 0, g.src, g.indices)


def mpa_step(
    g: WeightedFieldGraph, s: MessageState, skip_into_field: bool = False
) -> MessageState:
    """One synchronous round, computed with per-node aggregates in O(m).

    Raises:
        KeyMismatchError: If the state is not keyed by g's directed edges
    """
    _check_keys(g, s)
    W, H = _RoundKernel(g, skip_into_field).advance(s.W, s.H)
    return MessageState(W, H, s.t + 1, g.src, g.indices)


def naive_step(
    g: WeightedFieldGraph, s: MessageState, order: Optional[Sequence[int]] = None
) -> MessageState:
    """One synchronous round, evaluating every sum directly.

    This is the O(sum of squared degrees) reference for ``mpa_step``.
    ``order`` permutes the slots in which messages are emitted; since every
    read comes from the previous round, the result cannot depend on it.
    """
    _check_keys(g, s)
    W_new = np.empty_like(s.W)
    H_new = np.empty_like(s.H)
    slots = range(g.num_messages) if order is None else order

    for p in slots:
        i, j = int(g.src[p]), int(g.indices[p])
        if i == FIELD:
            W_new[p] = 0.0
            H_new[p] = 0.0
            continue

        c_ij = g.weights[p]
        w_sum = 0.0
        h_sum = 0.0
        for q in range(g.indptr[i], g.indptr[i + 1]):
            k = int(g.indices[q])
            if k == j:
                continue
            incoming = g.reverse[q]
            w_sum += g.weights[q] / c_ij * (1.0 - s.W[incoming])
            h_sum += s.W[incoming] * s.H[incoming]
        W_new[p] = 1.0 / (1.0 + w_sum)
        H_new[p] = 1.0 + h_sum

    return MessageState(W_new, H_new, s.t + 1, g.src, g.indices)


def estimate(g: WeightedFieldGraph, s: MessageState, leader: NodeId) -> float:
    """Influence estimate of one leader from the current messages.

    Raises:
        FieldAsLeaderError: If the leader is the field node
    """
    if leader == FIELD:
        raise FieldAsLeaderError()
    g.check_node(leader)
    _check_keys(g, s)

    start, stop = g.indptr[leader], g.indptr[leader + 1]
    incoming = g.reverse[start:stop]
    return float(1.0 + np.sum(s.W[incoming] * s.H[incoming]))


def estimate_all(g: WeightedFieldGraph, s: MessageState) -> InfluenceProfile:
    """Influence estimates of every leader from the current messages."""
    _check_keys(g, s)
    values = _RoundKernel(g).estimates(s.W, s.H)
    return InfluenceProfile(values, kind="mpa-estimate", round=s.t)


def mpa_run(
    g: WeightedFieldGraph,
    s0: Optional[MessageState] = None,
    cfg: Optional[StoppingConfig] = None,
    progress: Optional[ProgressCallback] = None,
    progress_every: int = 100,
    backfill: bool = True,
) -> Tuple[MessageState, ConvergenceTrace]:
    """Iterate rounds until the stopping rule holds or max_rounds is reached.

    The run stops after the first round in which the largest W change is
    below ``eps_w`` and the largest relative estimate change is below
    ``eps_h``. Distances to the final values are backfilled by replaying
    the (deterministic) run from ``s0``.

    Args:
        g: Connected graph
        s0: Initial state (standard initialization if omitted)
        cfg: Stopping configuration
        progress: Called as ``progress(t, delta_w, delta_h)`` every ``progress_every`` rounds
        progress_every: Callback period in rounds
        backfill: Compute distances to the final values (costs a second pass)

    Returns:
        Final state and convergence trace

    Raises:
        KeyMismatchError: If ``s0`` does not belong to ``g``
    """
    cfg = cfg or StoppingConfig()
    cfg.validate()
    s0 = s0 if s0 is not None else mpa_init(g)
    _check_keys(g, s0)

    kernel = _RoundKernel(g, cfg.skip_into_field)
    W, H = s0.W.copy(), s0.H.copy()
    est = kernel.estimates(W, H)

    delta_w = [np.nan]
    delta_h = [np.nan]
    reason = STOP_MAX_ROUNDS

    for _ in range(cfg.max_rounds):
        W_new, H_new = kernel.advance(W, H)
        est_new = kernel.estimates(W_new, H_new)

        dw = float(np.abs(W_new - W).max())
        dh = float((np.abs(est_new - est) / np.maximum(1.0, np.abs(est_new))).max())
        delta_w.append(dw)
        delta_h.append(dh)
        W, H, est = W_new, H_new, est_new

        rounds = len(delta_w) - 1
        if progress is not None and rounds % progress_every == 0:
            progress(s0.t + rounds, dw, dh)
        if dw < cfg.eps_w and dh < cfg.eps_h:
            reason = STOP_TOLERANCE
            break

    rounds = len(delta_w) - 1
    stop_round = s0.t + rounds
    logger.info("MPA stopped at round %d after %d rounds (%s)", stop_round, rounds, reason)

    t = np.arange(s0.t, stop_round + 1)
    if backfill:
        dW, dH, dH_rel = _backfill(kernel, s0, rounds, W, est)
        w_round = _settled_round(t, dW, cfg.eps_w)
        h_round = _settled_round(t, dH_rel, cfg.eps_h)
    else:
        dW = np.full(t.size, np.nan)
        dH = np.full(t.size, np.nan)
        w_round = _settled_round(t, np.nan_to_num(np.array(delta_w), nan=np.inf), cfg.eps_w)
        h_round = _settled_round(t, np.nan_to_num(np.array(delta_h), nan=np.inf), cfg.eps_h)

    trace = ConvergenceTrace(
        t=t,
        dW=dW,
        dH=dH,
        delta_w=np.array(delta_w),
        delta_h=np.array(delta_h),
        stop_round=stop_round,
        stop_reason=reason,
        w_round=w_round,
        h_round=h_round,
    )
    return MessageState(W, H, stop_round, g.src, g.indices), trace


def _backfill(
    kernel: _RoundKernel,
    s0: MessageState,
    rounds: int,
    W_final: np.ndarray,
    est_final: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    dW = np.empty(rounds + 1)
    dH = np.empty(rounds + 1)
    dH_rel = np.empty(rounds + 1)
    scale = np.maximum(1.0, np.abs(est_final))

    W, H = s0.W.copy(), s0.H.copy()
    for k in range(rounds + 1):
        if k:
            W, H = kernel.advance(W, H)
        gap = np.abs(kernel.estimates(W, H) - est_final)
        dW[k] = np.abs(W - W_final).max()
        dH[k] = gap.max()
        dH_rel[k] = (gap / scale).max()
    return dW, dH, dH_rel


def _settled_round(t: np.ndarray, distance: np.ndarray, eps: float) -> int:
    """First round after which ``distance`` stays below ``eps``."""
    above = np.flatnonzero(distance >= eps)
    if not above.size:
        return int(t[0])
    return int(t[min(above[-1] + 1, t.size - 1)])
