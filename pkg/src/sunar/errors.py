"""Exception hierarchy shared across the package."""


class SunarError(Exception):
    """Base class for all errors raised by this package."""


class CorpusError(SunarError):
    """Malformed, empty, or inconsistent corpus input."""


class IndexFormatError(SunarError):
    """Unreadable or version-incompatible index file."""


class GraphError(SunarError):
    """Graph construction or lookup failure."""


class GraphFormatError(GraphError):
    """Unreadable or version-incompatible graph file."""


class ClientError(SunarError):
    """A model client (LLM, NLI, scorer, embedder) failed."""


class FixtureMissError(ClientError):
    """A scripted client was asked for a fingerprint it does not know."""


class NarError(SunarError):
    """Budgeted re-ranking aborted."""


class EntailmentJudgmentError(ClientError):
    """Entailment clustering aborted mid-way; carries the offending pair."""


class DecompositionParseError(SunarError):
    """Decomposition model output had no recognizable marker."""


class EvalFormatError(SunarError):
    """Malformed qrels or run file."""


class ConfigError(SunarError):
    """Invalid or incomplete configuration."""
