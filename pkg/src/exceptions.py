"""
Error hierarchy shared by every module and surfaced by the CLI as one-line codes
"""
from typing import Optional


class OplError(Exception):
    """Base class for all library errors"""

    code = "opl_error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def one_line(self) -> str:
        """Machine-parsable single-line rendering used by the CLI"""
        text = " ".join(self.message.split())
        return f"error: {self.code}: {text}"


class DomainError(OplError):
    """Argument outside the mathematical domain of an operation"""

    code = "domain_error"


class FormatError(OplError):
    """Malformed .opld or checkpoint file"""

    code = "format_error"

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ShapeError(OplError):
    """Array width does not match the model or dataset"""

    code = "shape_error"


class TrainingError(OplError):
    """Training produced a non-finite loss"""

    code = "training_error"


class SchemaError(OplError):
    """Symmetry schema is invalid or does not fit the data"""

    code = "schema_error"


class PreconditionError(OplError):
    """Operation called in a state it does not accept"""

    code = "precondition_error"


class ConfigError(OplError):
    """Configuration file or settings violate the config schema"""

    code = "config_error"


class DimensionMismatchError(OplError):
    """Dimensions disagree across schema, environment, dataset or model"""

    code = "dimension_mismatch"

    def __init__(self, what: str, expected: int, actual: int, context: Optional[str] = None):
        where = f" ({context})" if context else ""
        super().__init__(f"{what} expected {expected}, got {actual}{where}")
        self.expected = expected
        self.actual = actual


class LabelError(OplError):
    """Ground-truth labels are missing where an oracle needs them"""

    code = "label_error"


class UnknownVariantError(OplError):
    """Requested pipeline variant does not exist"""

    code = "unknown_variant"
