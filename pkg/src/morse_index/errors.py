"""Exception hierarchy.

Each exception carries an ``exit_code`` that the command line front end
returns verbatim: 2 for degenerate input, 3 for numerical resolution
failures, 4 for configuration errors.
"""


class MorseIndexError(Exception):
    exit_code = 1

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self), "exit_code": self.exit_code}


class DegenerateError(MorseIndexError):
    exit_code = 2


class Degenerate(DegenerateError):
    """A symmetric matrix has an eigenvalue inside the zero band.

    ``morse_index`` is the count of eigenvalues below the band and
    ``near_zero`` the number inside it, so callers that tolerate a kernel
    can still recover the partial answer.
    """

    def __init__(self, message, morse_index=None, near_zero=None):
        super().__init__(message)
        self.morse_index = morse_index
        self.near_zero = near_zero


class EndpointDegenerate(DegenerateError):
    pass


class DegenerateGeodesic(DegenerateError):
    pass


class MetricDegenerate(DegenerateError):
    pass


class FrameDegenerate(DegenerateError):
    pass


class ResolutionError(MorseIndexError):
    exit_code = 3


class IrregularCrossing(ResolutionError):
    pass


class UnresolvedCluster(ResolutionError):
    pass


class NotAConjugateInstant(ResolutionError):
    pass


class NotACrossing(ResolutionError):
    pass


class ConfigError(MorseIndexError):
    exit_code = 4


class OracleMismatch(ResolutionError):
    pass
