"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes (see cli.EXIT_CODES), so library code
should raise the most specific class that applies.
"""


class PricegridError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PricegridError):
    """Invalid configuration value or malformed config file."""


class CorpusError(PricegridError):
    """A corpus violates a structural precondition (empty, degenerate...)."""


class CorpusSchemaError(CorpusError):
    """Corpus file header does not match the expected column set."""

    def __init__(self, missing, extra=()):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        super().__init__(f"corpus header missing columns: {', '.join(self.missing)}")


class PrinterLookupError(PricegridError):
    """Printer model not present in the printer table."""

    def __init__(self, model, known_models=()):
        self.model = model
        self.known_models = list(known_models)
        super().__init__(f"unknown printer model: {model!r}")


class InfeasibleClusteringError(PricegridError):
    """Fewer distinct points than requested clusters."""


class DegenerateBinsError(PricegridError):
    """Too few or insufficiently distinct prices to build 7 bins."""


class StratificationError(PricegridError):
    """A class is too small for the requested stratified split or folds."""


class TrainingError(PricegridError):
    """SVM training could not start (single-class input, bad shapes...)."""


class FingerprintMismatchError(PricegridError):
    """Artifacts produced under different schemas/binnings were combined."""

    def __init__(self, kind, expected, actual):
        self.kind = kind
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"{kind} fingerprint mismatch: expected {expected}, got {actual}"
        )
