class VertiError(Exception):
    pass


class DimensionError(VertiError, ValueError):
    pass


class RangeError(VertiError, ValueError):
    pass


class ParameterError(VertiError, ValueError):
    pass


class MapFormatError(VertiError, ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class NonFiniteLossError(VertiError, FloatingPointError):
    pass
