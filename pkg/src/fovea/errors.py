"""Exception hierarchy shared by every stage."""


class FoveaError(Exception):
    """Base class for all errors raised by this package."""


class ImageNotFound(FoveaError, FileNotFoundError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"no such image file: {self.path}")


class DecodeError(FoveaError):
    def __init__(self, path, reason="unsupported or corrupt image"):
        self.path = str(path)
        super().__init__(f"{self.path}: {reason}")


class WriteError(FoveaError):
    def __init__(self, path, reason="could not write file"):
        self.path = str(path)
        super().__init__(f"{self.path}: {reason}")


class DegenerateMask(FoveaError):
    """The field-of-view estimate came out empty."""


class EmptyRegion(FoveaError):
    """A histogram was requested over zero pixels."""


class TileTooSmall(FoveaError):
    pass


class TruthError(FoveaError):
    pass


class ParseError(TruthError):
    def __init__(self, line, reason):
        self.line = line
        super().__init__(f"line {line}: {reason}")


class SemanticError(TruthError):
    def __init__(self, line, reason):
        self.line = line
        super().__init__(f"line {line}: {reason}")


class MissingTruth(TruthError):
    def __init__(self, source):
        self.source = source
        super().__init__(f"no ground-truth record for {source!r}")


class DuplicateTruth(TruthError):
    def __init__(self, source):
        self.source = source
        super().__init__(f"duplicate ground-truth record for {source!r}")
