"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures to distinct,
documented process exit statuses.
"""


class PipelineError(Exception):
    exit_code = 1


class MissingInputError(PipelineError):
    exit_code = 3


class SchemaError(PipelineError):
    exit_code = 4


class IntegrityError(PipelineError):
    exit_code = 5

    def __init__(self, message, duplicates=None):
        super().__init__(message)
        self.duplicates = duplicates if duplicates is not None else []


class DataQualityError(PipelineError):
    exit_code = 6


class EstimationError(PipelineError):
    exit_code = 7


class AbsorptionError(EstimationError):
    def __init__(self, message, residual_norm):
        super().__init__(message)
        self.residual_norm = residual_norm


class RankDeficiencyError(EstimationError):
    def __init__(self, message, columns):
        super().__init__(message)
        self.columns = list(columns)


class InsufficientDataError(EstimationError):
    pass


class ConfigError(PipelineError):
    exit_code = 8


class DomainError(PipelineError, ValueError):
    exit_code = 9


class EmptyDomainError(DomainError):
    pass


class ConsistencyError(PipelineError):
    exit_code = 10


EXIT_CODES = {
    0: "success",
    1: "unclassified pipeline failure",
    2: "command-line usage error",
    3: "MissingInputError: a required input file or prior-stage output is absent",
    4: "SchemaError: required column missing or malformed input table",
    5: "IntegrityError: duplicate keys in an input table",
    6: "DataQualityError: too many missing hours in a region series",
    7: "EstimationError: absorption/OLS failure (non-convergence, rank deficiency, too few rows)",
    8: "ConfigError: invalid or incomplete configuration",
    9: "DomainError: argument outside its valid domain",
    10: "ConsistencyError: paired inputs do not match",
}
