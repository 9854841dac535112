"""Exception types shared across the toolkit."""


class CorpusForgeError(Exception):
    """Base class for all toolkit errors."""


class ShardError(CorpusForgeError):
    """Base for per-line shard read errors; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class MissingField(ShardError):
    def __init__(self, line_no: int, field: str):
        super().__init__(line_no, f"missing or invalid field {field!r}")
        self.field = field


class InvalidUnicode(ShardError):
    def __init__(self, line_no: int, detail: str = "invalid unicode"):
        super().__init__(line_no, detail)


class MalformedLine(ShardError):
    def __init__(self, line_no: int, detail: str):
        super().__init__(line_no, detail)


class RegexCompileError(CorpusForgeError):
    def __init__(self, pattern: str, detail: str):
        super().__init__(f"cannot compile {pattern!r}: {detail}")
        self.pattern = pattern


class EmptyCorpus(CorpusForgeError):
    pass


class EmptyText(CorpusForgeError):
    pass


class VocabTooSmall(CorpusForgeError):
    pass


class IndexCorrupt(CorpusForgeError):
    pass


class ModelFormatError(CorpusForgeError):
    pass


class InsufficientTokens(CorpusForgeError):
    def __init__(self, source: str, lang: str, needed: int, available: int):
        super().__init__(
            f"need {needed} tokens of ({source}, {lang}), only {available} available"
        )
        self.source = source
        self.lang = lang
        self.needed = needed
        self.available = available


class MixInfeasible(CorpusForgeError):
    pass


class StepOutOfRange(CorpusForgeError):
    pass


class ScorerFailure(CorpusForgeError):
    def __init__(self, item_id: str, detail: str = "scorer failed"):
        super().__init__(f"{detail} for {item_id!r}")
        self.item_id = item_id


class ConfigInvalid(CorpusForgeError):
    def __init__(self, path: str, key: str, detail: str = "unknown or invalid key"):
        super().__init__(f"{path}: {detail}: {key!r}")
        self.path = path
        self.key = key
