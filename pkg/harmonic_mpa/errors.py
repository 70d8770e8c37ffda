"""Exception hierarchy for harmonic-mpa."""

from typing import Optional


class HarmonicError(Exception):
    """Base class for every error raised by harmonic-mpa."""

    pass


class GraphError(HarmonicError):
    """A graph failed validation."""

    pass


class DuplicateEdgeError(GraphError):
    """The same undirected edge was given twice."""

    pass


class NonPositiveWeightError(GraphError):
    """An edge weight is zero, negative or not finite."""

    pass


class SelfLoopError(GraphError):
    """An edge joins a node to itself."""

    pass


class UnknownNodeError(GraphError):
    """A node id is outside the graph."""

    pass


class DisconnectedError(GraphError):
    """Some node cannot be reached from the field node."""

    def __init__(self, node: int, message: Optional[str] = None) -> None:
        self.node = node
        super().__init__(message or f"Graph is disconnected: node {node} is unreachable from the field")


class NonPositiveScaleError(GraphError):
    """Weights can only be scaled by a positive factor."""

    pass


class FieldAsLeaderError(HarmonicError):
    """The field node cannot be a leader."""

    def __init__(self) -> None:
        super().__init__("The field node (0) cannot be used as a leader")


class SolveFailureError(HarmonicError):
    """A linear solve did not reach the residual tolerance."""

    pass


class KeyMismatchError(HarmonicError):
    """A message state is not keyed by the directed edges of the graph it is used with."""

    pass


class InvalidNewGraphError(HarmonicError):
    """The graph after a topology change is not valid."""

    pass


class ParseError(HarmonicError):
    """An input file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyGraphError(HarmonicError):
    """An input file contained no edges."""

    pass


class EmptyKeepSetError(HarmonicError):
    """An induced subgraph was requested on no nodes."""

    pass


class MissingNodeError(HarmonicError):
    """A node has no community label."""

    pass


class NodeSetMismatchError(HarmonicError):
    """Two influence profiles cover different node sets."""

    pass


class LabelMismatchError(HarmonicError):
    """Community labels do not cover the profile's nodes."""

    pass


class NotAFixedPointError(HarmonicError):
    """A message state is not a converged fixed point."""

    pass
