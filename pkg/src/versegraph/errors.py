"""Exception hierarchy shared by all versegraph modules."""


class VersegraphError(Exception):
    """Base class for all versegraph errors."""


class ValidationError(VersegraphError):
    """Input violated a structural invariant (bad graph, bad config, bad file)."""


class InfeasibleError(VersegraphError):
    """An optimization or assignment problem has no feasible solution."""


class ConvergenceError(VersegraphError):
    """An iterative method failed to converge within its iteration cap."""
