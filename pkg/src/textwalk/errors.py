"""Exception types raised across the toolkit."""


class TextwalkError(Exception):
    """Base class for all toolkit errors."""


class MalformedLine(TextwalkError):
    def __init__(self, path, line_no, reason):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason


class MissingDescriptor(TextwalkError):
    def __init__(self, key):
        super().__init__(f"node {key!r} appears in the edge file but has no descriptor")
        self.key = key


class DescriptorEmpty(TextwalkError):
    def __init__(self, key=None):
        super().__init__(
            "descriptor is empty after tokenization"
            + (f" (node {key!r})" if key is not None else "")
        )
        self.key = key


class SelfLoop(TextwalkError):
    def __init__(self, key):
        super().__init__(f"self-loop on node {key!r}")
        self.key = key


class NotNeighbor(TextwalkError):
    def __init__(self, cur, nxt):
        super().__init__(f"node {nxt} is not a neighbor of node {cur}")
        self.cur = cur
        self.next = nxt


class IsolatedNode(TextwalkError):
    def __init__(self, node):
        super().__init__(f"node {node} has no neighbors")
        self.node = node


class NonFinite(TextwalkError):
    pass


class NonFiniteGradient(TextwalkError):
    pass


class StaleBackward(TextwalkError):
    def __init__(self, node, side):
        super().__init__(f"no cached forward pass for node {node} on side {side!r}")
        self.node = node
        self.side = side


class NotEnoughNodes(TextwalkError):
    pass


class UnsupportedEncoder(TextwalkError):
    def __init__(self, kind, needed):
        super().__init__(f"operation requires a {needed} encoder, got {kind}")
        self.kind = kind


class SplitInfeasible(TextwalkError):
    def __init__(self, achieved, target):
        super().__init__(
            f"only {achieved} of {target} edges are removable without disconnecting the graph"
        )
        self.achieved = achieved
        self.target = target


class NotEnoughNegatives(TextwalkError):
    def __init__(self, found, requested):
        super().__init__(f"found only {found} of {requested} requested negative pairs")
        self.found = found
        self.requested = requested


class EmptyScores(TextwalkError):
    pass


class ZeroVector(TextwalkError):
    pass


class ConfigInvalid(TextwalkError):
    """Raised with every invalid config field listed at once."""

    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = list(problems)
