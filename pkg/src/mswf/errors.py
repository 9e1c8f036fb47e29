"""Exception hierarchy shared by every module.

Exit-code mapping used by the command line front end:
2 = guard/precondition violation (caught before heavy compute),
3 = numeric failure during a run, 4 = consistency failure of an experiment.
"""


class MswfError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(MswfError):
    """Malformed arguments: dimension mismatches, bad configs, bad files."""

    exit_code = 2


class GuardError(MswfError):
    """A precondition guard failed; nothing expensive was computed."""

    exit_code = 2


class NyquistError(GuardError):
    """Requested frequency exceeds what the grid can represent."""


class ResolutionError(GuardError):
    """Field or packet is under-resolved on the grid."""


class DomainError(GuardError):
    """Evaluation point too close to (or outside) the domain boundary."""


class UndersampledError(GuardError):
    """Phase-space lattice too coarse for a stable inverse transform."""


class CflError(GuardError):
    """Transport substep would move mass farther than the stencil reach."""


class NumericError(MswfError):
    """Numerical failure while running: non-finite values, blow-up."""

    exit_code = 3


class BoundaryMassError(NumericError):
    """Too much L2 mass reached the edge of the periodic box."""


class StepUnderflowError(NumericError):
    """Adaptive integrator could not meet the tolerance."""


class ConsistencyError(MswfError):
    """An experiment's cross-validation fell below its configured bound."""

    exit_code = 4
