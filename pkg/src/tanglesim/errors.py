"""Exception taxonomy shared across the package."""


class TangleError(Exception):
    """Base class for all tanglesim errors."""


class UnknownParent(TangleError):
    """A referenced parent id is not part of the tangle."""


class UnknownTransaction(TangleError):
    """A transaction id lookup failed."""


class ConflictViolation(TangleError):
    """Attaching would place two members of one conflict set in a past cone."""


class ConflictRetriesExhausted(TangleError):
    """Parent selection could not find a conflict-free pair within its retry budget."""


class NoChildren(TangleError):
    """A walk step was requested from a transaction with no visible approvers."""


class NotEIota(TangleError):
    """Strategy-mixture accounting requested for a run without a strategy mixture."""


class InvalidPower(TangleError):
    """Adversary compute share outside the range the attack is defined for."""


class TargetNotConfirmed(TangleError):
    """Attack precondition failed: the target transaction is not confirmed yet."""


class ConfigInvalid(TangleError):
    """A run configuration failed validation."""


class IoFailure(TangleError):
    """Snapshot or export I/O failed (wraps the underlying OSError/parse error)."""
