"""Exception hierarchy.

Two broad families: DataError for anything wrong with user-supplied files
or benchmark contents (the CLI maps these to exit code 2), and plain
ValueError subclasses for programming-contract violations.
"""

from __future__ import annotations


class DataError(Exception):
    """Base class for errors caused by input data rather than code."""


class MissingFile(DataError):
    def __init__(self, path):
        super().__init__(f"missing file: {path}")
        self.path = str(path)


class MalformedRecord(DataError):
    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: malformed record: {reason}")
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason


class DuplicatePassageId(DataError):
    def __init__(self, passage_id: str):
        super().__init__(f"duplicate passage id: {passage_id!r}")
        self.passage_id = passage_id


class DanglingReference(DataError):
    def __init__(self, query_id: str, corpus_id: str, passage_id: str):
        super().__init__(
            f"query {query_id!r} references {corpus_id!r}/{passage_id!r} which does not exist"
        )
        self.query_id = query_id
        self.corpus_id = corpus_id
        self.passage_id = passage_id


class UnknownMatchedId(DataError):
    def __init__(self, corpus_id: str, passage_id: str):
        super().__init__(f"matched id {passage_id!r} not found in corpus {corpus_id!r}")
        self.corpus_id = corpus_id
        self.passage_id = passage_id


class DuplicateMatch(DataError):
    def __init__(self, passage_id: str):
        super().__init__(f"id {passage_id!r} appears in more than one match")
        self.passage_id = passage_id


class InvalidConfig(DataError):
    pass


class MagicMismatch(DataError):
    def __init__(self, expected: bytes, got: bytes):
        super().__init__(f"bad magic: expected {expected!r}, got {got!r}")
        self.expected = expected
        self.got = got


class VersionUnsupported(DataError):
    def __init__(self, version: int):
        super().__init__(f"unsupported format version: {version}")
        self.version = version


class TruncatedFile(DataError):
    def __init__(self, path, detail: str = ""):
        super().__init__(f"truncated file: {path}" + (f" ({detail})" if detail else ""))
        self.path = str(path)


class DuplicateId(DataError):
    def __init__(self, passage_id: str):
        super().__init__(f"duplicate id in embedding file: {passage_id!r}")
        self.passage_id = passage_id


class DimensionMismatch(ValueError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"dimension mismatch: expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class CorpusTooSmall(DataError):
    pass


class EmptyTrainingSet(DataError):
    pass


class InsufficientCandidates(ValueError):
    def __init__(self, corpus_id: str, have: int, need: int):
        super().__init__(
            f"candidate list for {corpus_id!r} has {have} items, need {need}"
        )
        self.corpus_id = corpus_id
        self.have = have
        self.need = need


class MissingGold(DataError):
    def __init__(self, query_id: str, detail: str = ""):
        super().__init__(f"query {query_id!r} has no usable gold labels"
                         + (f": {detail}" if detail else ""))
        self.query_id = query_id


class EmptyGold(DataError):
    pass


class SeedSetTooLarge(ValueError):
    def __init__(self, size: int, available: int):
        super().__init__(f"seed set size {size} exceeds validation set size {available}")
        self.size = size
        self.available = available
