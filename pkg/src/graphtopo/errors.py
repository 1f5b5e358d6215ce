"""Exception hierarchy shared by all estimators."""


class GraphTopoError(Exception):
    """Base class for every error raised by graphtopo."""


class ParamError(GraphTopoError, ValueError):
    pass


class ShapeError(GraphTopoError, ValueError):
    pass


class DirectedGraphError(GraphTopoError, ValueError):
    """An operation that needs an undirected graph received a directed one."""


class InsufficientSamples(GraphTopoError, ValueError):
    pass


class DegenerateVariance(GraphTopoError, ValueError):
    pass


class SaturatedCorrelation(GraphTopoError, ValueError):
    pass


class EmptyInput(GraphTopoError, ValueError):
    pass


class InvalidPrecision(GraphTopoError, ValueError):
    pass


class DomainError(GraphTopoError, ValueError):
    """Argument outside the domain of an acyclicity function."""


class KernelError(GraphTopoError, ValueError):
    pass


class AmbiguityError(GraphTopoError, ValueError):
    pass


class AnchorError(GraphTopoError, ValueError):
    pass


class EmptySlot(GraphTopoError, ValueError):
    pass


class DegenerateInput(GraphTopoError, ValueError):
    pass


class ZeroSignal(GraphTopoError, ValueError):
    pass


class InputFormatError(GraphTopoError, ValueError):
    """Malformed CSV or edge-list input."""


class NonPositiveDefiniteWarning(RuntimeWarning):
    """Partial correlations outside [-1, 1]; the precision input is not PD."""
