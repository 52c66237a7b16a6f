class ConfigError(ValueError):
    """Bad configuration: topology, parameters, policy or scheme mismatch."""


class RoutingError(KeyError):
    """Destination missing from a source's loss table."""


class InputDataError(ValueError):
    """Malformed trace, kernel input or report file."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class TraceError(InputDataError):
    def __init__(self, message, path=None, line=None, seq=None):
        self.seq = seq
        if seq is not None:
            message = f"packet seq {seq}: {message}"
        super().__init__(message, path=path, line=line)
