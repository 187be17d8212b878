"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its documented exit statuses (1 numeric, 2 invalid input).
"""


class WVAError(Exception):
    exit_code = 2


class InvalidInput(WVAError, ValueError):
    exit_code = 2


class TruncationOverflow(WVAError):
    """The Fock cutoff needed for the requested tolerance exceeds the hard cap."""

    exit_code = 1


class PostSelectionImpossible(WVAError):
    """Success probability is at or below the configured floor."""

    exit_code = 2


class DivergentWeakValue(WVAError):
    """Pre- and post-selected states are numerically orthogonal."""

    exit_code = 2


class IntegrationNotConverged(WVAError):
    exit_code = 1


class ExpansionInvalid(WVAError):
    """Small-coupling expansion denominator is not positive on the support."""

    exit_code = 2


class InsufficientPoints(WVAError, ValueError):
    exit_code = 2


class NoFeasiblePoint(WVAError):
    exit_code = 2


class EmptyRecord(WVAError, ValueError):
    exit_code = 2


class WindowTooNarrow(WVAError):
    """Likelihood maximizer sits on the edge of the search window."""

    exit_code = 1
