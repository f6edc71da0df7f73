"""Exception hierarchy; every library error is a ``ValueError`` subclass."""


class TrendlabError(ValueError):
    """Base class for invalid input, configuration or state."""


class DataError(TrendlabError):
    """Malformed or inconsistent market data."""


class IndicatorError(TrendlabError):
    """Unknown indicator, bad parameter, or series too short."""


class ModelError(TrendlabError):
    """Dimension mismatch or invalid training input for a model."""
