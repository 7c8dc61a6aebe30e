"""Typed diagnostics raised by every compiler stage.

Each error carries enough context to be rendered as a one-line diagnostic by
the command-line front end; the CLI maps families of errors onto exit codes.
"""

from __future__ import annotations


class DispelError(Exception):
    """Base class for all compiler diagnostics."""


# -- input files ---------------------------------------------------------------

class InputFileError(DispelError):
    def __init__(self, path, message):
        self.path = str(path)
        super().__init__(f"{self.path}: {message}")


class MalformedJson(DispelError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        self.message = message
        super().__init__(f"{self.path}:{line}: malformed JSON: {message}")


class ConfigInvariantViolation(DispelError):
    def __init__(self, which, ip=None, detail=""):
        self.which = which
        self.ip = ip
        where = f" (ip {ip})" if ip is not None else ""
        extra = f": {detail}" if detail else ""
        super().__init__(f"SoC config invariant violated: {which}{where}{extra}")


# -- policy front end ----------------------------------------------------------

class PolicyError(DispelError):
    """An error attributable to a single policy.

    ``policy`` is filled in by whichever stage knows the policy name; the
    low-level parsers raise without it.
    """

    def __init__(self, message, policy=None):
        self.message = message
        self.policy = policy
        super().__init__(message)

    def __str__(self):
        if self.policy:
            return f"{self.policy}: {self.message}"
        return self.message


class MissingField(PolicyError):
    def __init__(self, policy, field):
        self.field = field
        super().__init__(f"missing required field {field!r}", policy)


class PolicySyntaxError(PolicyError):
    def __init__(self, position, expected, found="", source=""):
        self.position = position
        self.expected = expected
        self.found = found
        self.source = source
        got = f", found {found!r}" if found else ""
        super().__init__(f"syntax error at column {position}: expected {expected}{got}")


class UnknownFunction(PolicyError):
    def __init__(self, name, position):
        self.name = name
        self.position = position
        super().__init__(f"unknown function {name!r} at column {position}"
                         " (only countones/popcount are supported)")


class AssignmentToInput(PolicyError):
    def __init__(self, signal, reason="signal is not drivable"):
        self.signal = signal
        super().__init__(f"cannot assign {signal!r}: {reason}")


class NoEquivalentSignal(PolicyError):
    def __init__(self, keyword, protocol):
        self.keyword = keyword
        self.protocol = protocol
        super().__init__(f"keyword {keyword!r} has no {protocol} equivalent in the"
                         " supported keyword table")


class UnresolvableTarget(PolicyError):
    pass


class AmbiguousTarget(PolicyError):
    pass


class ThresholdOverflow(PolicyError):
    pass


# -- code generation -----------------------------------------------------------

class MarkerNotFound(DispelError):
    def __init__(self, path, marker):
        self.path = str(path)
        self.marker = marker
        super().__init__(f"{self.path}: insertion marker {marker!r} not found")


# -- simulation ----------------------------------------------------------------

class UnsupportedConstruct(DispelError):
    def __init__(self, line, text):
        self.line = line
        self.text = text
        super().__init__(f"line {line}: construct outside the emitted subset: {text!r}")


class UnknownSignal(DispelError):
    def __init__(self, signal, policy=None, index=None):
        self.signal = signal
        self.policy = policy
        self.index = index
        where = f" in policy {policy}" if policy else ""
        at = f" (transaction {index})" if index is not None else ""
        super().__init__(f"signal {signal!r}{where} is not part of the transaction model{at}")


class TraceError(DispelError):
    def __init__(self, index, message):
        self.index = index
        super().__init__(f"transaction {index}: {message}")


class DivergenceFound(DispelError):
    def __init__(self, transaction, signal, golden, emitted, trial=None):
        self.transaction = transaction
        self.signal = signal
        self.golden = golden
        self.emitted = emitted
        self.trial = trial
        super().__init__(
            f"divergence on {signal}: golden={golden:#x} emitted={emitted:#x}"
            f" (trial {trial})")


# -- scoring / constraint loop -------------------------------------------------

class ConstraintsUnsatisfiable(DispelError):
    def __init__(self, message, log=None):
        self.log = list(log or [])
        super().__init__(message)


class BackendFailure(DispelError):
    pass


class InvalidConstraints(DispelError):
    def __init__(self, message, path=None):
        self.path = str(path) if path is not None else None
        super().__init__(f"{self.path}: {message}" if path is not None else message)
