"""
Exception hierarchy for the helicity lab
"""


class HelicityLabError(Exception):
    """Base class for every error raised by the computational modules"""


class RejectedInputError(HelicityLabError, ValueError):
    """Parameters or inputs that violate an operation's preconditions"""


class AliasingError(RejectedInputError):
    """Grid too coarse for the stored wave vectors"""

    def __init__(self, message, required_n=None):
        super().__init__(message)
        self.required_n = required_n


class SupportError(RejectedInputError):
    """Compact support outside the inscribed ball, overlapping or missing"""


class CFLError(RejectedInputError):
    """Time step violates the advective stability limit"""


class SnapshotFormatError(HelicityLabError):
    """Unreadable or ill-formed snapshot file"""


class IntegrationError(HelicityLabError):
    """Field-line integration stopped early; carries the partial line"""

    def __init__(self, message, partial_line=None):
        super().__init__(message)
        self.partial_line = partial_line


class ConfigurationError(RejectedInputError):
    """Unknown or ill-typed run configuration key"""
