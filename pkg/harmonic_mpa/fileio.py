"""Reading and writing graphs, labels, profiles, traces and reports."""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .errors import (
    EmptyGraphError,
    MissingNodeError,
    ParseError,
    UnknownNodeError,
)
from .exact import InfluenceProfile
from .generators import CommunityLabels, induce_subgraph
from .graph import FIELD, WeightedEdge, WeightedFieldGraph, build_graph
from .mpa import ConvergenceTrace

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.12g"


def load_edge_list(
    path: PathLike, field_weight: float
) -> Tuple[WeightedFieldGraph, Dict[int, int]]:
    """Load a SNAP-style edge list and attach every node to the field.

    Lines hold two whitespace-separated integer ids; ``#`` lines and blank
    lines are skipped; repeated edges (in either orientation) are collapsed.
    Nodes are renumbered 1..n in order of first appearance and all peer
    edges get weight 1.

    Args:
        path: Edge list file
        field_weight: Weight of every field edge

    Returns:
        The graph and the map from original ids to node ids

    Raises:
        ParseError: On a malformed line or a self-loop (line number reported)
        EmptyGraphError: If the file holds no edges
    """
    mapping: Dict[int, int] = {}
    pairs = set()
    ordered: List[Tuple[int, int]] = []

    with open(path, "r") as f:
        for number, line in enumerate(f, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue

            fields = stripped.split()
            if len(fields) != 2:
                raise ParseError(f"expected 2 node ids, found {len(fields)} fields", number)
            try:
                u, v = int(fields[0]), int(fields[1])
            except ValueError:
                raise ParseError(f"node ids must be integers: {stripped!r}", number) from None
            if u == v:
                raise ParseError(f"self-loop on node {u}", number)

            for node in (u, v):
                if node not in mapping:
                    mapping[node] = len(mapping) + 1
            a, b = mapping[u], mapping[v]
            key = (min(a, b), max(a, b))
            if key not in pairs:
                pairs.add(key)
                ordered.append(key)

    if not ordered:
        raise EmptyGraphError(f"No edges found in {path}")

    n = len(mapping)
    edges: List[WeightedEdge] = [(FIELD, i, field_weight) for i in range(1, n + 1)]
    edges.extend((a, b, 1.0) for a, b in ordered)
    return build_graph(n, edges), mapping


def save_edge_list(
    g: WeightedFieldGraph, path: PathLike, mapping: Optional[Dict[int, int]] = None
) -> None:
    """Write the peer edges in SNAP format, optionally under original ids."""
    inverse = {new: old for old, new in mapping.items()} if mapping else None
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for i, j, _ in g.peer_edges():
            if inverse:
                i, j = inverse[i], inverse[j]
            f.write(f"{i} {j}\n")


def save_graph(g: WeightedFieldGraph, path: PathLike, metadata: Optional[Dict[str, Any]] = None) -> None:
    """Write ``n`` on the first line, then one ``i j w`` line per edge (field is 0)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        _write_metadata(f, metadata)
        f.write(f"{g.n}\n")
        for i, j, w in g.edges():
            f.write(f"{i} {j} {w!r}\n")


def load_graph(path: PathLike) -> WeightedFieldGraph:
    """Read a graph written by ``save_graph``.

    Raises:
        ParseError: On a malformed line
        GraphError: If the edges do not form a valid graph
    """
    n: Optional[int] = None
    edges: List[WeightedEdge] = []

    with open(path, "r") as f:
        for number, line in enumerate(f, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split()
            try:
                if n is None:
                    if len(fields) != 1:
                        raise ParseError("first line must hold the node count n", number)
                    n = int(fields[0])
                    continue
                if len(fields) != 3:
                    raise ParseError(f"expected 'i j w', found {len(fields)} fields", number)
                edges.append((int(fields[0]), int(fields[1]), float(fields[2])))
            except ValueError:
                raise ParseError(f"cannot parse {stripped!r}", number) from None

    if n is None:
        raise EmptyGraphError(f"No graph found in {path}")
    return build_graph(n, edges)


def load_communities(
    path: PathLike, n: int, mapping: Optional[Dict[int, int]] = None
) -> CommunityLabels:
    """Read a ``node,community`` CSV.

    Community ids are renumbered 0..k-1 in ascending order of the ids in
    the file. With ``mapping``, node ids are translated from original ids.

    Raises:
        ParseError: On a missing column, a non-integer entry or a repeated node
        UnknownNodeError: If a node is not in 1..n
        MissingNodeError: If some node has no label
    """
    try:
        frame = pd.read_csv(path, comment="#", skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"cannot read {path}: {e}") from e

    if list(frame.columns[:2]) != ["node", "community"]:
        raise ParseError(f"{path} must have header 'node,community'", 1)
    if frame.empty:
        raise MissingNodeError(f"{path} holds no labels")
    for column in ("node", "community"):
        if not pd.api.types.is_integer_dtype(frame[column]):
            raise ParseError(f"column '{column}' must hold integers")

    nodes = frame["node"].to_numpy()
    if mapping is not None:
        try:
            nodes = np.array([mapping[int(node)] for node in nodes])
        except KeyError as e:
            raise UnknownNodeError(f"Node {e.args[0]} does not appear in the edge list") from None

    bad = nodes[(nodes < 1) | (nodes > n)]
    if bad.size:
        raise UnknownNodeError(f"Node {int(bad[0])} is not in 1..{n}")
    unique, counts = np.unique(nodes, return_counts=True)
    if (counts > 1).any():
        raise ParseError(f"node {int(unique[counts > 1][0])} is labelled more than once")
    if unique.size != n:
        missing = np.setdiff1d(np.arange(1, n + 1), unique)
        raise MissingNodeError(f"Node {int(missing[0])} has no community label")

    _, dense = np.unique(frame["community"].to_numpy(), return_inverse=True)
    labels = np.empty(n, dtype=np.int64)
    labels[nodes - 1] = dense
    return CommunityLabels(labels)


def save_communities(labels: CommunityLabels, path: PathLike) -> None:
    frame = pd.DataFrame({"node": np.arange(1, labels.n + 1), "community": labels.labels})
    write_table(frame, path)


def ego_graphs(
    edge_path: PathLike,
    communities_path: PathLike,
    community: int,
    field_weight: float = 0.040,
) -> Tuple[WeightedFieldGraph, WeightedFieldGraph, CommunityLabels]:
    """The full ego graph and the graph induced by one of its communities.

    Returns:
        (full graph, single-community graph, labels of the full graph)
    """
    full, mapping = load_edge_list(edge_path, field_weight)
    labels = load_communities(communities_path, full.n, mapping)
    if not 0 <= community < labels.count:
        raise ValueError(f"Community {community} is not in 0..{labels.count - 1}")
    single, _ = induce_subgraph(full, labels.members(community), field_weight)
    return full, single, labels


def _write_metadata(f: Any, metadata: Optional[Dict[str, Any]]) -> None:
    for key, value in (metadata or {}).items():
        f.write(f"# {key}: {json.dumps(value, sort_keys=True, default=str)}\n")


def _read_metadata(path: PathLike) -> Dict[str, Any]:
    metadata: Dict[str, Any] = {}
    with open(path, "r") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            try:
                metadata[key.strip()] = json.loads(value)
            except json.JSONDecodeError:
                metadata[key.strip()] = value.strip()
    return metadata


def write_table(
    frame: pd.DataFrame, path: PathLike, metadata: Optional[Dict[str, Any]] = None
) -> None:
    """Write a CSV with ``# key: value`` header comments and 12 significant digits."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        _write_metadata(f, metadata)
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def read_table(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def save_profile(
    profile: InfluenceProfile, path: PathLike, metadata: Optional[Dict[str, Any]] = None
) -> None:
    """Write a ``node,influence`` CSV."""
    header: Dict[str, Any] = {"kind": profile.kind}
    if profile.round is not None:
        header["round"] = profile.round
    header.update(metadata or {})
    frame = pd.DataFrame({"node": profile.nodes, "influence": profile.values})
    write_table(frame, path, header)


def load_profile(path: PathLike) -> InfluenceProfile:
    """Read a ``node,influence`` CSV written by ``save_profile``.

    Raises:
        ParseError: If the columns are wrong or the nodes are not exactly 1..n
    """
    try:
        frame = read_table(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    if list(frame.columns[:2]) != ["node", "influence"]:
        raise ParseError(f"{path} must have header 'node,influence'")

    frame = frame.sort_values("node")
    nodes = frame["node"].to_numpy()
    if not np.array_equal(nodes, np.arange(1, nodes.size + 1)):
        raise ParseError(f"{path} must list nodes 1..n exactly once")

    metadata = _read_metadata(path)
    kind = metadata.get("kind", "exact")
    round_ = metadata.get("round")
    try:
        return InfluenceProfile(frame["influence"].to_numpy(dtype=np.float64), kind, round_)
    except ValueError as e:
        raise ParseError(f"{path}: {e}") from e


def save_trace(
    trace: ConvergenceTrace, path: PathLike, metadata: Optional[Dict[str, Any]] = None
) -> None:
    """Write the ``t,dW,dH`` trace."""
    header = dict(trace.summary())
    header.update(metadata or {})
    write_table(trace.to_frame(), path, header)


def write_json(data: Dict[str, Any], path: PathLike) -> None:
    """Write a JSON report with sorted keys."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Cannot serialize {type(value).__name__}")

