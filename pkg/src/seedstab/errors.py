"""Exception hierarchy.

Every error raised on bad input derives from :class:`SeedStabError`, so the
CLI can turn any of them into a one-line diagnostic and a nonzero exit code.
Subclasses also inherit from ``ValueError`` where the failure is about a bad
value rather than a missing file.
"""

from __future__ import annotations


class SeedStabError(Exception):
    """Base class for all errors raised by this package."""


# -- structural validation -------------------------------------------------


class ValidationError(SeedStabError, ValueError):
    pass


class EmptyRunSet(ValidationError):
    pass


class MissingId(ValidationError):
    def __init__(self, example_id: str, seed: int | None = None):
        self.example_id = example_id
        self.seed = seed
        where = f" (run seed {seed})" if seed is not None else ""
        super().__init__(f"missing id {example_id!r}{where}")


class ExtraId(ValidationError):
    def __init__(self, example_id: str, seed: int | None = None):
        self.example_id = example_id
        self.seed = seed
        where = f" (run seed {seed})" if seed is not None else ""
        super().__init__(f"id {example_id!r} is not in the gold set{where}")


class DuplicateId(ValidationError):
    def __init__(self, example_id: str, where: str = ""):
        self.example_id = example_id
        suffix = f" in {where}" if where else ""
        super().__init__(f"duplicate id {example_id!r}{suffix}")


class DuplicateSeed(ValidationError):
    def __init__(self, seed: int):
        self.seed = seed
        super().__init__(f"duplicate seed {seed}")


class VariantMismatch(ValidationError):
    pass


class TaskMismatch(ValidationError):
    pass


class NeedAtLeastTwoRuns(ValidationError):
    pass


class MisalignedRuns(ValidationError):
    pass


class MissingGold(ValidationError):
    def __init__(self, example_id: str):
        self.example_id = example_id
        super().__init__(f"no gold output for id {example_id!r}")


class TokenLengthMismatch(ValidationError):
    pass


# -- metric kernels --------------------------------------------------------


class MetricError(SeedStabError, ValueError):
    pass


class LengthMismatch(MetricError):
    pass


class EmptyInput(MetricError):
    pass


class NonBinaryLabels(MetricError):
    pass


class ZeroVariance(MetricError):
    pass


class UnsupportedKindForVariant(MetricError):
    pass


class UnimplementedExtension(MetricError):
    """A scorer/metric name that has a registry slot but no implementation."""


# -- cross-task analysis ---------------------------------------------------


class AnalysisError(SeedStabError, ValueError):
    pass


class MissingSize(AnalysisError):
    def __init__(self, task: str):
        self.task = task
        super().__init__(f"no training size for task {task!r}")


class TooFewTasks(AnalysisError):
    pass


class DuplicateTask(AnalysisError):
    def __init__(self, task: str):
        self.task = task
        super().__init__(f"duplicate task {task!r}")


class RowTooShort(AnalysisError):
    pass


class SeedSetMismatch(AnalysisError):
    pass


class UnsupportedScorerKind(AnalysisError):
    pass


# -- ingestion -------------------------------------------------------------


class IngestError(SeedStabError):
    pass


class ParseError(IngestError, ValueError):
    def __init__(self, message: str, path: str | None = None,
                 line: int | None = None, column: int | None = None):
        self.path = path
        self.line = line
        self.column = column
        loc = path or "<input>"
        if line is not None:
            loc += f":{line}"
            if column is not None:
                loc += f":{column}"
        super().__init__(f"{loc}: {message}")


class SchemaError(IngestError, ValueError):
    def __init__(self, field: str, message: str, path: str | None = None):
        self.field = field
        self.path = path
        prefix = f"{path}: " if path else ""
        super().__init__(f"{prefix}field {field!r}: {message}")


class EmptyFile(IngestError, ValueError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"{path}: file contains no records")


class InputFileNotFound(IngestError, FileNotFoundError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"{path}: no such file")
