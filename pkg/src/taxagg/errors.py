"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line can map failures
to stable process exit statuses.
"""


class TaxAggError(Exception):
    exit_code = 1


class EmptyInput(TaxAggError, ValueError):
    exit_code = 3


class ParseError(TaxAggError, ValueError):
    exit_code = 3

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class ValidationError(TaxAggError, ValueError):
    exit_code = 4


class UnknownClass(ValidationError, KeyError):
    exit_code = 4

    def __init__(self, class_id):
        self.class_id = class_id
        super().__init__(f"unknown class {class_id!r}")

    def __str__(self):
        return self.args[0]


class InvalidScore(ValidationError):
    exit_code = 4


class CycleDetected(ValidationError):
    exit_code = 5

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle detected: " + " -> ".join(self.cycle))


class NoCommonAncestor(TaxAggError):
    exit_code = 6


class PathExplosion(TaxAggError):
    exit_code = 6


class ChildFanoutExceeded(TaxAggError):
    exit_code = 7


class TreewidthExceeded(TaxAggError):
    exit_code = 7


class TooLarge(TaxAggError):
    exit_code = 7


class NonFiniteInput(ValidationError):
    exit_code = 4


class NonImprovingLikelihood(TaxAggError):
    exit_code = 8


class KeyMismatch(ValidationError):
    exit_code = 4
