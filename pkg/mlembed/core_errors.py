from __future__ import annotations

from typing import Optional


class MlembedError(Exception):
    """Base de los errores del paquete."""


class ConfigError(MlembedError, ValueError):
    pass


class InvalidLayerError(MlembedError, IndexError):
    pass


class DeadEndError(MlembedError):
    pass


class EmptyCorpusError(MlembedError, ValueError):
    pass


class EmbeddingMismatchError(MlembedError, ValueError):
    pass


class DegenerateSplitError(MlembedError, ValueError):
    pass


class InsufficientCandidatesError(MlembedError, ValueError):
    pass


class UnknownNodeError(MlembedError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class DatasetParseError(MlembedError, ValueError):
    def __init__(self, path: str, line_no: Optional[int], message: str) -> None:
        self.path = path
        self.line_no = line_no
        location = f"{path}:{line_no}" if line_no is not None else path
        super().__init__(f"{location}: {message}")
