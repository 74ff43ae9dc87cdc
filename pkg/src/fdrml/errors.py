"""Exception hierarchy shared by all fdrml modules.

Everything raised on bad user data derives from :class:`FdrError`, which the
CLI maps to exit code 1. :class:`ConfigError` maps to exit code 2.
"""


class FdrError(Exception):
    """Base class for domain errors."""


class ConfigError(FdrError):
    pass


# -- netlist --------------------------------------------------------------

class NetlistError(FdrError):
    pass


class NetlistSyntaxError(NetlistError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class MultipleDrivers(NetlistError):
    def __init__(self, net: str):
        super().__init__(f"net {net!r} has more than one driver")
        self.net = net


class UndrivenNet(NetlistError):
    def __init__(self, net: str):
        super().__init__(f"net {net!r} has no driver")
        self.net = net


class CombinationalLoop(NetlistError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("combinational loop through " + " -> ".join(self.cycle))


class ArityMismatch(NetlistError):
    def __init__(self, cell: str, expected: int, got: int):
        super().__init__(f"cell {cell!r} expects {expected} inputs, got {got}")
        self.cell = cell


class UnknownFlipFlop(NetlistError):
    def __init__(self, ff: str):
        super().__init__(f"no flip-flop named {ff!r}")
        self.ff = ff


# -- simulation -----------------------------------------------------------

class SimulationError(FdrError):
    pass


class StimulusSyntaxError(SimulationError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"stimulus line {line}: {reason}")
        self.line = line


class StimulusReferencesUnknownNet(SimulationError):
    def __init__(self, net: str):
        super().__init__(f"stimulus assigns {net!r}, which is not a primary input")
        self.net = net


class FaultCycleOutOfRange(SimulationError):
    def __init__(self, cycle: int, total: int):
        super().__init__(f"fault cycle {cycle} outside [0, {total})")
        self.cycle = cycle


class ZeroCycles(SimulationError):
    pass


# -- campaign -------------------------------------------------------------

class CampaignError(FdrError):
    pass


class EmptyActiveWindow(CampaignError):
    pass


class DimensionMismatch(CampaignError):
    pass


class RunFailed(CampaignError):
    """A simulation error raised while executing one scheduled injection."""

    def __init__(self, ff: str, cycle: int, cause: Exception):
        super().__init__(f"injection into {ff} at cycle {cycle} failed: {cause}")
        self.ff = ff
        self.cycle = cycle


# -- features -------------------------------------------------------------

class MissingActivity(FdrError):
    def __init__(self, ff: str):
        super().__init__(f"no activity statistics for flip-flop {ff!r}")
        self.ff = ff


# -- models ---------------------------------------------------------------

class ModelError(FdrError):
    pass


class KTooLarge(ModelError):
    pass


class InvalidHyperparam(ModelError):
    pass


class SingularSystem(ModelError):
    pass


# -- evaluation -----------------------------------------------------------

class EvaluationError(FdrError):
    pass


class LengthMismatch(EvaluationError):
    pass


class DegenerateTargets(EvaluationError):
    pass


class TooFewRows(EvaluationError):
    pass


class TooFewTest(EvaluationError):
    pass
