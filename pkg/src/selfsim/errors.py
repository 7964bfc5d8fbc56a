"""Exception types shared across the package."""


class SelfSimError(Exception):
    """Base class for all errors raised by selfsim."""


class ParseError(SelfSimError):
    pass


class GeometryError(SelfSimError):
    """A rule's children do not tile the scaled parent exactly.

    ``rule`` is the parent index and ``cell`` the first offending lattice
    cell (or interval endpoint in d=1); ``problems`` holds every issue found.
    """

    def __init__(self, rule, cell, problems=None):
        self.rule = rule
        self.cell = cell
        self.problems = list(problems or [])
        super().__init__(f"rule {rule}: geometry defect at {cell} ({len(self.problems)} problem(s))")


class NotPrimitive(SelfSimError):
    pass


class DegenerateSpectrum(SelfSimError):
    pass


class LengthMismatch(SelfSimError):
    pass


class MarginError(SelfSimError):
    pass


class InsufficientData(SelfSimError):
    pass


class HypothesisViolated(SelfSimError):
    pass
