"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`GaitError`,
so batch drivers can catch one type and keep going.
"""


class GaitError(Exception):
    """Base class for all gaitpipe errors."""


class FormatError(GaitError, ValueError):
    """Malformed input file or record."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = []
        if source is not None:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class EmptyInput(FormatError):
    """The input contained no frames."""


class DuplicateTimestamp(FormatError):
    """Two records of one track share a timestamp."""


class CalibrationError(GaitError, ValueError):
    """Invalid camera parameters or depth."""


class InvalidSequence(GaitError, ValueError):
    """A pose sequence violates an ordering or value invariant."""


class LengthMismatch(GaitError, ValueError):
    pass


class KernelTooLarge(GaitError, ValueError):
    pass


class SignalTooShort(GaitError, ValueError):
    pass


class TooFewFrames(GaitError):
    """Not enough frames to run the detector."""


class MissingJoints(GaitError):
    """Foot positions are missing in frames handed to the detector."""


class NoStepsDetected(GaitError):
    """Fewer maxima than ``min_steps`` survived; the clip is probably not walking.

    The partial detection result is attached as ``result`` so callers can still
    report the audit trail.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class TooFewSteps(GaitError):
    pass


class BothZero(GaitError, ValueError):
    pass


class ScenarioInvalid(GaitError, ValueError):
    pass


class EmptyEvaluation(GaitError, ValueError):
    pass


class ConfigError(GaitError, ValueError):
    pass
