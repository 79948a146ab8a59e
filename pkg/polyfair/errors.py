#
# Exceptions raised by polyfair
#
# Every exception carries enough context to be turned into a
# machine-readable record by the command line front end.
#


class PolyfairError(Exception):
    """
    Base class of all polyfair errors. Keyword arguments given at
    construction are kept as context and end up in record().
    """
    exit_status = 3

    def __init__(self, message, **context):
        Exception.__init__(self, message)
        self.message = message
        self.context = context

    def record(self):
        out = {'error': self.__class__.__name__, 'message': self.message}
        for key in sorted(self.context):
            out[key] = _jsonable(self.context[key])
        return out


def _jsonable(value):
    if isinstance(value, (frozenset, set)):
        return sorted(_jsonable(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, 'item'):
        # numpy scalars
        return value.item()
    return value


class SizeGuardError(PolyfairError, ValueError):
    pass


class PolymatroidError(PolyfairError, ValueError):
    pass


class LaminarityError(PolyfairError, ValueError):
    pass


class NotPolySymmetricError(PolyfairError, ValueError):
    pass


class AmbiguousProfileError(PolyfairError, ValueError):
    pass


class InstabilityError(PolyfairError, ValueError):
    pass


class ConsistencyError(PolyfairError, ValueError):
    pass


class TruncationError(PolyfairError, ValueError):
    pass


class ParameterError(PolyfairError, ValueError):
    """Model parameters outside their range (degrees, server groups)."""


class NumericRangeError(PolyfairError, ArithmeticError):
    exit_status = 4


class ScenarioError(PolyfairError, ValueError):
    """
    Problems with a scenario file. 'line' and 'field' point at the
    offending entry whenever they are known.
    """
    exit_status = 2
