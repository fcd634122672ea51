"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class BicvmError(Exception):
    exit_code = 3


class ConfigError(BicvmError, ValueError):
    exit_code = 1


class DataError(BicvmError, ValueError):
    exit_code = 2


class AlignmentError(DataError):
    """Parallel files disagree on line count."""

    def __init__(self, path_a, count_a, path_b, count_b):
        self.count_a = count_a
        self.count_b = count_b
        super().__init__(
            f"line count mismatch: {path_a} has {count_a} lines, "
            f"{path_b} has {count_b} lines ({count_a} != {count_b})"
        )


class SamplingError(DataError):
    pass


class RepresentationError(DataError):
    pass


class LookupFailure(DataError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ShapeError(BicvmError, ValueError):
    pass


class InvariantViolation(BicvmError):
    exit_code = 3
