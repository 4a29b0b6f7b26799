"""Exception and warning types raised across the package."""


class AsyncAdmmError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(AsyncAdmmError, ValueError):
    """An array does not have the shape implied by the cover or objective."""


class CoverInvalid(AsyncAdmmError, ValueError):
    """A subgraph cover violates one of the cover requirements.

    Attributes
    ----------
    reason : str
        One of ``"subgraph_disconnected"``, ``"cover_incomplete"``,
        ``"union_disconnected"``, ``"graph_disconnected"`` or
        ``"bad_node_set"``.
    """

    def __init__(self, reason, detail=""):
        self.reason = reason
        self.detail = detail
        msg = reason if not detail else f"{reason}: {detail}"
        super().__init__(msg)


class DegenerateRing(AsyncAdmmError, ValueError):
    """A ring cover was requested with fewer than three nodes."""


class EmptyActivation(AsyncAdmmError, ValueError):
    """An iteration was asked to run with no active subgraph or block."""


class WeightTooSmall(AsyncAdmmError, ValueError):
    """A prox weight is too small for the subproblem to be strongly convex."""


class MeritInfinite(AsyncAdmmError, ArithmeticError):
    """The consensus indicator in the merit function is infinite."""


class NoFeasibleBeta(AsyncAdmmError, ValueError):
    """No penalty parameter in the search bracket satisfies the condition."""


class InsufficientSamples(AsyncAdmmError, ValueError):
    """Too few iterations were recorded for a statistical check."""


class ConfigError(AsyncAdmmError, ValueError):
    """A run configuration failed validation.

    Attributes
    ----------
    field : str or None
        Offending key, when known.
    line : int or None
        1-based line number in the config file, when known.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class InnerSolverStalled(RuntimeWarning):
    """An inner prox solver hit its iteration cap before reaching tolerance.

    Issued through :mod:`warnings`; the solver still returns its best iterate.
    Promote to an error with ``warnings.simplefilter("error", InnerSolverStalled)``.
    """
