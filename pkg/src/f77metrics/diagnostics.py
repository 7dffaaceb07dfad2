"""Error types and the diagnostic sink shared by every analysis stage.

Diagnostics are rendered as ``path:line:col: CODE severity: message`` so that
they can be grepped or parsed by other tools.
"""

from dataclasses import dataclass, field


class AnalysisError(Exception):
    """Base class for errors raised while analysing Fortran source."""

    code = "E000"

    def __init__(self, message, line=None, col=None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col


class LexError(AnalysisError):
    code = "E100"


class StructureError(AnalysisError):
    code = "E200"


class ParseError(AnalysisError):
    code = "E300"


class FlowError(AnalysisError):
    code = "E400"


class DatasetError(Exception):
    """Raised for malformed or inconsistent statistical inputs."""


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: str  # "warning" or "error"
    message: str
    line: int | None = None
    col: int | None = None
    path: str = ""

    def format(self):
        loc = self.path or "<input>"
        if self.line is not None:
            loc += f":{self.line}"
            if self.col is not None:
                loc += f":{self.col}"
        return f"{loc}: {self.code} {self.severity}: {self.message}"


@dataclass
class Diagnostics:
    """Collects warnings and non-fatal errors in emission order."""

    path: str = ""
    items: list = field(default_factory=list)

    def warn(self, code, message, line=None, col=None):
        self.items.append(Diagnostic(code, "warning", message, line, col, self.path))

    def error(self, code, message, line=None, col=None):
        self.items.append(Diagnostic(code, "error", message, line, col, self.path))

    def record(self, exc):
        self.error(exc.code, exc.message, exc.line, exc.col)

    @property
    def warnings(self):
        return [d for d in self.items if d.severity == "warning"]

    @property
    def errors(self):
        return [d for d in self.items if d.severity == "error"]

    def extend(self, other):
        self.items.extend(other.items)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)
