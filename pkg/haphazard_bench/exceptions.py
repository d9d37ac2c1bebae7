"""Errors raised by the streams, learners and bench apps."""


class HaphazardError(Exception):
    """Base class for every error the benchmark raises on purpose."""


class InvalidInputError(HaphazardError, ValueError):
    pass


class OrderingError(HaphazardError):
    """An instance arrived with a time index older than the last absorbed one."""


class ParseError(HaphazardError):
    def __init__(self, message, row=None, column=None):
        location = []
        if row is not None:
            location.append(f'row {row}')
        if column is not None:
            location.append(f'column {column}')
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class FormatError(HaphazardError):
    pass


class EncodingError(HaphazardError):
    pass


class UndefinedMetricError(HaphazardError):
    pass


class CapacityExhaustedError(HaphazardError):
    def __init__(self, feature, capacity):
        super().__init__(f'AuxLayer capacity {capacity} exhausted while adding feature {feature}')
        self.feature = feature
        self.capacity = capacity


class DivergenceError(HaphazardError, ArithmeticError):
    pass


class ProtocolError(HaphazardError):
    """Predict/update were called out of prequential order."""


class SearchError(HaphazardError):
    pass


class ConfigurationError(HaphazardError):
    pass
