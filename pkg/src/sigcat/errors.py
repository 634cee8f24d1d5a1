"""Exception hierarchy.

Everything raised on purpose derives from :class:`SigcatError`. Subclasses of
:class:`DataError` describe bad inputs (files, labels, models) and map to CLI
exit code 2; :class:`UsageError` maps to exit code 1.
"""


class SigcatError(Exception):
    pass


class UsageError(SigcatError):
    pass


class DataError(SigcatError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicatePath(DataError):
    pass


class UnknownLabel(DataError):
    pass


class IngestError(DataError):
    """One or more manifest files could not be read.

    ``failures`` holds ``(path, reason)`` pairs for every file that failed, so a
    single run reports all of them at once.
    """

    def __init__(self, failures):
        self.failures = list(failures)
        lines = "; ".join(f"{path}: {reason}" for path, reason in self.failures)
        super().__init__(f"cannot read {len(self.failures)} file(s): {lines}")


class EmptyFile(DataError):
    pass


class EmptyInput(DataError):
    pass


class TooShort(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyClass(DataError):
    pass


class FormatVersionMismatch(DataError):
    pass


class CorruptModel(DataError):
    pass


class FingerprintMismatch(DataError):
    pass


class TooFewSamples(DataError):
    pass


class InvalidK(DataError):
    pass


class MissingDataset(DataError):
    pass
