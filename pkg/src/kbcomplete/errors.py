"""Exception types shared across the package."""


class KbError(Exception):
    """Base class for all kbcomplete errors."""


class FactFileError(KbError):
    """Malformed fact or gold file; carries the offending line number."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


class SubclassCycleError(KbError):
    """The subclass graph contains a cycle; names one member."""

    def __init__(self, member):
        super().__init__(f"subclass hierarchy contains a cycle through {member!r}")
        self.member = member


class UndefinedRelationError(KbError):
    """A relation with no facts was queried where that is undefined."""


class InvalidClassExpressionError(KbError):
    """Negated class expression whose negated class is not a subclass of the base."""


class CoverageError(KbError):
    """Oracle decisions do not cover every labeled pair of a gold standard."""


class RuleFormatError(KbError):
    """A rule line violates the rule-file grammar or a rule invariant."""


class EmptyTrainingError(KbError):
    """Mining was started with no training labels."""


class InsufficientLabelsError(KbError):
    """A gold standard is too small for the requested split or fold count."""

    def __init__(self, relation, message):
        super().__init__(f"{relation}: {message}")
        self.relation = relation


class UnsupportedCategoryError(KbError):
    """Gold auto-generation was asked for a category that needs external labels."""


class SynthSpecError(KbError):
    """Invalid synthetic-KB specification."""
