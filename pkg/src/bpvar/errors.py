"""Exception hierarchy shared by every engine."""

from __future__ import annotations


class BpvarError(Exception):
    """Base class for all engine errors."""


class CyclicModel(BpvarError):
    pass


class UnstructuredModel(BpvarError):
    """Raised when a split has no unique matching join."""


class AmbiguousLabels(BpvarError):
    pass


# -- provop -----------------------------------------------------------------

class ChangeError(BpvarError):
    pass


class TargetNotFound(ChangeError):
    def __init__(self, label: str, message: str = ""):
        super().__init__(message or f"no node labelled {label!r}")
        self.label = label


class AnchorNotFound(TargetNotFound):
    pass


class IllegalSplice(ChangeError):
    pass


class InvalidResult(ChangeError):
    def __init__(self, message: str, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class OptionFailed(ChangeError):
    """An operation inside an option failed; the option was rolled back."""

    def __init__(self, option: str, index: int, cause: Exception):
        super().__init__(f"option {option!r}, operation {index}: {cause}")
        self.option = option
        self.index = index
        self.cause = cause


class OrderConflict(ChangeError):
    pass


# -- cepc -------------------------------------------------------------------

class UnknownTarget(BpvarError):
    pass


class InvalidConfiguration(BpvarError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


# -- worklet ----------------------------------------------------------------

class RedundantRule(BpvarError):
    pass


class ConditionRejectsCase(BpvarError):
    pass


class CornerstoneConflict(ConditionRejectsCase):
    """The new condition also fires for a stored cornerstone case."""

    def __init__(self, message: str, nodes=()):
        super().__init__(message)
        self.nodes = tuple(nodes)


class UnknownWorklet(BpvarError):
    pass


class MissingTree(BpvarError):
    pass


# -- pesoa ------------------------------------------------------------------

class InvalidSelection(BpvarError):
    def __init__(self, message: str, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class UnboundVariationPoint(BpvarError):
    pass


class ConflictingBindings(BpvarError):
    pass


# -- corpus -----------------------------------------------------------------

class SkippedPair(BpvarError):
    """A (case, approach, variant) combination documented as impossible."""

    def __init__(self, case: str, approach: str, variant: str, note: str):
        super().__init__(f"{case}/{approach}/{variant} skipped: {note}")
        self.case = case
        self.approach = approach
        self.variant = variant
        self.note = note


class FixtureError(BpvarError):
    """Engine failure annotated with fixture coordinates."""

    def __init__(self, where: str, cause: Exception):
        super().__init__(f"{where}: {cause}")
        self.where = where
        self.cause = cause


# -- vardl ------------------------------------------------------------------

class UnresolvedReference(BpvarError):
    def __init__(self, name: str, span=None, what: str = "name"):
        where = f"{span}: " if span is not None else ""
        super().__init__(f"{where}unresolved {what} {name!r}")
        self.name = name
        self.span = span
        self.what = what


class DuplicateName(BpvarError):
    def __init__(self, kind: str, name: str, span=None):
        where = f"{span}: " if span is not None else ""
        super().__init__(f"{where}duplicate {kind} {name!r}")
        self.kind = kind
        self.name = name
        self.span = span


class InvalidDeclaration(BpvarError):
    """A declaration parsed but its content is inconsistent."""

    def __init__(self, message: str, span=None):
        where = f"{span}: " if span is not None else ""
        super().__init__(f"{where}{message}")
        self.span = span
