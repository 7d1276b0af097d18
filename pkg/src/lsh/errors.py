"""Exception and warning types shared across the package."""


class LshError(Exception):
    """Base class for all package errors."""


class ValidationError(LshError):
    """Generic invariant violation on a domain type."""


class SelfLoopError(ValidationError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"event {index} is a self-loop (sender == receiver)")


class NodeOutOfRangeError(ValidationError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"event {index} references a node id outside [0, n_nodes)")


class NegativeTimeError(ValidationError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"event {index} has a negative timestamp")


class EmptyInputError(ValidationError):
    def __init__(self):
        super().__init__("event list is empty")


class SamePairError(ValidationError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"ordered pair requires two distinct nodes, got ({node}, {node})")


class EndBeforeHistoryError(LshError):
    def __init__(self, t_end, t_last):
        self.t_end = t_end
        self.t_last = t_last
        super().__init__(f"integration end {t_end} precedes history time {t_last}")


class NonFiniteLikelihoodError(LshError):
    def __init__(self, pair, index, detail="intensity log-term is non-finite"):
        self.pair = pair
        self.index = index
        super().__init__(f"{detail} at pair {pair}, event index {index}")


class DimensionTooLargeError(LshError):
    def __init__(self, d, n):
        super().__init__(f"latent dimension {d} must be smaller than node count {n}")


class ZeroSlopeError(LshError):
    def __init__(self):
        super().__init__("slope is zero; the latent-position scale cannot be normalized")


class ShapeMismatchError(LshError):
    def __init__(self, a, b):
        super().__init__(f"shape mismatch: {a} vs {b}")


class UnstableProcessError(LshError):
    def __init__(self, pair, count):
        self.pair = pair
        self.count = count
        super().__init__(
            f"pair {pair} exceeded {count} simulated events; "
            "jump sizes likely make the process unstable (alpha1 + alpha2 >= 1)"
        )


class TooFewEventsError(LshError):
    def __init__(self, k, minimum):
        super().__init__(f"need at least {minimum} events to split, got {k}")


class EmptyTestError(LshError):
    def __init__(self):
        super().__init__("test set contains no events")


class WindowTooLargeError(LshError):
    def __init__(self, window, available):
        super().__init__(f"window length {window} does not fit in test period of length {available}")


class SingleClassError(LshError):
    def __init__(self):
        super().__init__("AUC requires both positive and negative labels")


class ParseError(LshError):
    def __init__(self, line, detail):
        self.line = line
        super().__init__(f"line {line}: {detail}")


class DatasetIoError(LshError):
    def __init__(self, path, detail):
        self.path = path
        super().__init__(f"{path}: {detail}")


class SchemaVersionError(LshError):
    def __init__(self, path, detail):
        self.path = path
        super().__init__(f"{detail} (at {path})")


class DegenerateTimesError(LshError):
    def __init__(self):
        super().__init__("all timestamps are equal; rescaling is undefined")


class DimensionNot2Error(LshError):
    def __init__(self, d):
        super().__init__(f"scatter plots need 2-D latent positions, got d={d}; refit with d=2")


class TieBreakWarning(UserWarning):
    """Duplicate in-pair timestamps were perturbed by one ulp at ingestion."""


class StabilityWarning(UserWarning):
    """Jump sizes reached alpha1 + alpha2 >= 1 during optimization."""
