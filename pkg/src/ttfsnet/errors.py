class TTFSError(Exception):
    """Base class for all errors raised by ttfsnet."""


class InvalidInputError(TTFSError, ValueError):
    pass


class ConfigError(TTFSError, ValueError):
    pass


class ShapeError(TTFSError, ValueError):
    pass


class DivergenceError(TTFSError, ArithmeticError):
    pass


class CheckpointError(TTFSError):
    pass


class DataFormatError(TTFSError):
    """Malformed dataset file. ``offset`` is the byte position where parsing failed."""

    def __init__(self, message: str, path=None, offset: int | None = None):
        where = []
        if path is not None:
            where.append(str(path))
        if offset is not None:
            where.append(f"byte offset {offset}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.path = path
        self.offset = offset
