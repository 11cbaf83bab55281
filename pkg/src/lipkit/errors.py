"""Exception hierarchy shared by every lipkit module."""


class LipkitError(ValueError):
    """Base class for all lipkit failures."""


class DomainError(LipkitError):
    """A point does not belong to the space it was handed to."""


class IsolatedPointError(LipkitError):
    """A ball around a point contains no other point of the space."""


class SamplingError(LipkitError):
    """The sampler exhausted its trial budget."""


class ExprError(LipkitError):
    """Malformed expression text.

    ``offset`` is the byte offset into the UTF-8 encoded source, or None when
    the problem is not tied to a position (e.g. variable index out of range
    discovered after parsing).
    """

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)


class EstimatorError(LipkitError):
    """An estimator could not produce a value."""


class GradientUnavailable(LipkitError):
    pass


class InapplicableError(LipkitError):
    """The preconditions of a structural check are not met."""
