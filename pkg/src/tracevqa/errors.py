"""Exception hierarchy shared across the pipeline."""


class TraceVQAError(Exception):
    """Base class for all pipeline errors."""


# --- relation-path grammar ---

class PathError(TraceVQAError):
    pass


class EmptyPath(PathError):
    pass


class MalformedHop(PathError):
    pass


class DanglingArrow(PathError):
    pass


# --- corpus ingestion ---

class CorpusError(TraceVQAError):
    pass


class FileMissing(CorpusError):
    pass


class MalformedRecord(CorpusError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateId(CorpusError):
    def __init__(self, sample_id: str, line_no: int | None = None):
        loc = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"duplicate sample id {sample_id!r}{loc}")
        self.sample_id = sample_id


class ImageMissing(CorpusError):
    pass


class UnsupportedMediaType(CorpusError):
    pass


# --- backend client ---

class BackendError(TraceVQAError):
    pass


class AuthMissing(BackendError):
    pass


class Timeout(BackendError):
    pass


class RateLimited(BackendError):
    pass


class ProtocolError(BackendError):
    pass


# --- stage failures ---

class NoPathsFound(TraceVQAError):
    pass


class PlanningFailed(TraceVQAError):
    pass


class ComposeFailed(TraceVQAError):
    pass


class AllFiltered(TraceVQAError):
    pass


class NoVerdictMarker(TraceVQAError):
    pass


class IndexOutOfRange(TraceVQAError):
    pass


# --- evaluation ---

class EvalError(TraceVQAError):
    pass


class MissingPrediction(EvalError):
    def __init__(self, sample_id: str):
        super().__init__(f"no prediction for sample {sample_id!r}")
        self.sample_id = sample_id


class UnknownSample(EvalError):
    def __init__(self, sample_id: str):
        super().__init__(f"prediction for unknown sample {sample_id!r}")
        self.sample_id = sample_id
