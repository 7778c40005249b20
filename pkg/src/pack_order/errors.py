"""Exception hierarchy shared by all modules.

Each subclass maps to a distinct CLI exit code (see cli.EXIT_CODES).
"""


class PackOrderError(Exception):
    """Base class for all errors raised by this package."""

    category = "error"


class SchemaError(PackOrderError):
    """A file or document violates its expected schema."""

    category = "schema"


class ModelBuildError(PackOrderError):
    """The preference model cannot be built from the given corpus."""

    category = "model-build"


class ScoringError(PackOrderError):
    """A sequence cannot be scored (e.g. unresolvable label)."""

    category = "scoring"


class CapacityError(PackOrderError):
    """An exact planner was asked for more items than it can handle."""

    category = "capacity"


class AggregationError(PackOrderError):
    """An aggregate was requested over an empty collection."""

    category = "aggregation"


class TemplateError(PackOrderError):
    """A prompt template has unbound placeholders or is malformed."""

    category = "template"


class EmptyDetectionError(PackOrderError):
    """Outlier filtering removed every parsed detection fragment."""

    category = "empty-detection"


class ValidationExhaustedError(PackOrderError):
    """Planning validation failed on every allowed attempt."""

    category = "validation-exhausted"

    def __init__(self, message: str, last_response: str = ""):
        super().__init__(message)
        self.last_response = last_response


class ProviderError(PackOrderError):
    """Transport or protocol failure talking to a completion provider."""

    category = "provider"


class AuthenticationError(ProviderError):
    """4xx response from a live provider; never retried."""

    category = "provider-auth"


class FixtureExhaustedError(ProviderError):
    """The mock provider ran out of fixture responses."""

    category = "fixture-exhausted"


class EvaluationError(PackOrderError):
    """Metric computation is impossible on the given inputs."""

    category = "evaluation"
