"""Exception hierarchy shared by every stage of the pipeline."""


class SurveyError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SurveyError, ValueError):
    pass


class ParseError(SurveyError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CatalogValidationError(SurveyError, ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid catalog: " + "; ".join(self.problems))


class RenderingError(SurveyError):
    pass


class BackendError(SurveyError):
    pass


class RatingParseError(SurveyError, ValueError):
    pass


class UnparseableRatingError(RatingParseError):
    pass


class OutOfRangeRatingError(RatingParseError):
    pass


class CollectionError(SurveyError):
    """Too many prompts failed terminally during collection."""

    def __init__(self, message, failures):
        self.failures = failures
        super().__init__(message)


class SingularDesignError(SurveyError, ValueError):
    def __init__(self, dependent_columns):
        self.dependent_columns = list(dependent_columns)
        super().__init__(
            "design matrix is rank deficient; dependent columns: "
            + ", ".join(map(str, self.dependent_columns))
        )


class IntegrityError(SurveyError):
    pass


class StructuralError(SurveyError, ValueError):
    pass
