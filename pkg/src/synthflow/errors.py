"""Exception and warning types shared across the package."""


class SynthflowError(Exception):
    """Base class for all errors raised by synthflow."""


class UnknownLabel(SynthflowError, ValueError):
    pass


class InvalidAnnotation(SynthflowError, ValueError):
    """An entity, relation or document violates a structural invariant."""


class MalformedLine(SynthflowError, ValueError):
    def __init__(self, line, lineno=None, reason=""):
        self.line = line
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        msg = f"{where}malformed standoff line {line!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class OffsetMismatch(SynthflowError, ValueError):
    pass


class DanglingReference(SynthflowError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "dangling reference"


class OverlappingEntities(SynthflowError, ValueError):
    pass


class CycleDetected(SynthflowError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("Next edges form a cycle: " + " -> ".join(map(str, self.cycle)))


class DocumentMismatch(SynthflowError, ValueError):
    """Gold and predicted annotations are over different texts."""


# kept as a distinct name for the agreement API
TextMismatch = DocumentMismatch


class NoAnnotations(SynthflowError, ValueError):
    pass


class CorpusError(SynthflowError):
    """Aggregates per-file failures from a corpus load."""

    def __init__(self, failures):
        self.failures = dict(failures)
        lines = [f"{path}: {exc}" for path, exc in self.failures.items()]
        super().__init__(f"{len(lines)} file(s) failed to load:\n" + "\n".join(lines))


class CrossGroupCoreference(UserWarning):
    pass


class MixedLabelCluster(UserWarning):
    pass


class SelfLoopDropped(UserWarning):
    pass


class UnbalancedBrackets(UserWarning):
    pass


class SkippedAnnotationLine(UserWarning):
    pass


class OverlapWarning(UserWarning):
    pass
