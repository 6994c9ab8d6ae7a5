"""Exception hierarchy shared by the pipeline stages."""


class PprFraudError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PprFraudError):
    pass


class StageError(PprFraudError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


class MissingIntermediate(PprFraudError):
    def __init__(self, path, producer: str):
        super().__init__(f"missing intermediate file {path}; run `pprfraud {producer}` first")
        self.path = path
        self.producer = producer
