"""Exception hierarchy shared across the package."""


class ProdEditError(Exception):
    """Base class for all package errors."""


class CatalogError(ProdEditError):
    pass


class DuplicateProductIdError(CatalogError):
    def __init__(self, product_id: str):
        super().__init__(f"duplicate product_id: {product_id!r}")
        self.product_id = product_id


class SampleSizeError(CatalogError):
    pass


class BackendError(ProdEditError):
    """Transport or protocol failure talking to a generation backend."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class CacheMissError(BackendError):
    def __init__(self, request_hash: str):
        super().__init__(f"no transcript entry for request hash {request_hash}")
        self.request_hash = request_hash


class TemplateError(ProdEditError):
    def __init__(self, template_id: str, missing: str):
        super().__init__(
            f"template {template_id!r} is missing binding for placeholder {missing!r}"
        )
        self.template_id = template_id
        self.missing = missing


class ParseError(ProdEditError):
    pass


class VerdictParseError(ParseError):
    pass


class DegenerateCorrectionError(ProdEditError):
    """Corrector echoed the original claim; the sample carries no edit."""


class SchemaVersionError(ProdEditError):
    def __init__(self, found, expected):
        super().__init__(f"benchmark schema version {found} (expected {expected})")
        self.found = found
        self.expected = expected


class ConfigError(ProdEditError):
    pass


class AlignmentError(ProdEditError):
    """Subject span could not be located in the tokenized prompt."""


class ConditioningError(ProdEditError):
    """A covariance system is numerically singular; increase damping."""


class OptimizationError(ProdEditError):
    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


class DeltaStateError(ProdEditError):
    """apply/revert called out of order on a weight delta."""


class MetricError(ProdEditError):
    pass
