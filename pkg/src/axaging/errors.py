"""Exception hierarchy for the toolkit.

Three top-level families map onto the CLI exit codes:

* :class:`InputError`   -> exit 2 (bad files, bad netlists, bad arguments)
* :class:`InfeasibleError` -> exit 1 (an optimization honestly found no solution)
* :class:`InternalError`   -> exit 3 (a violated invariant; indicates a bug)
"""

from __future__ import annotations


class AxagingError(Exception):
    """Base class for all toolkit errors."""


class InputError(AxagingError):
    """Invalid user input: files, netlists, configurations."""


class InfeasibleError(AxagingError):
    """An optimization ran to completion without finding a feasible solution."""


class InternalError(AxagingError):
    """A violated internal invariant. Always a bug, never a user error."""


# --- netlist parsing / validation ---------------------------------------

class NetlistSyntaxError(InputError):
    """Source text does not match the supported structural grammar."""

    def __init__(self, line: int, column: int, expected: str, found: str = ""):
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
        msg = f"line {line}, column {column}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)


class UnknownCell(InputError):
    def __init__(self, cell: str, line: int | None = None):
        self.cell = cell
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"unsupported cell type {cell!r}{where}")


class MultipleDrivers(InputError):
    def __init__(self, net: str):
        self.net = net
        super().__init__(f"net {net!r} has more than one driver")


class UndeclaredNet(InputError):
    def __init__(self, name: str, line: int | None = None):
        self.name = name
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"reference to undeclared net {name!r}{where}")


class UndrivenNet(InputError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"net {name!r} is read but never driven")


class UnconnectedPin(InputError):
    def __init__(self, instance: str, pin: str):
        self.instance = instance
        self.pin = pin
        super().__init__(f"instance {instance!r} leaves pin {pin!r} unconnected")


class CombinationalLoop(InputError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("combinational loop through: " + " -> ".join(cycle))


# --- rewiring ------------------------------------------------------------

class UnknownTarget(InputError):
    def __init__(self, net: str):
        self.net = net
        super().__init__(f"rewire plan targets unknown net {net!r}")


class CycleIntroduced(InternalError):
    """Rewiring produced a cyclic graph; the caller violated the arrival-time precondition."""


# --- timing --------------------------------------------------------------

class MissingCellDelay(InputError):
    def __init__(self, kind: str):
        self.kind = kind
        super().__init__(f"timing model has no delay for gate type {kind}")


class InvalidFactor(InputError):
    def __init__(self, factor: float):
        self.factor = factor
        super().__init__(f"aging factor must be >= 1, got {factor}")


class UnknownInstance(InputError):
    def __init__(self, instance: object):
        self.instance = instance
        super().__init__(f"unknown instance {instance!r}")


# --- simulation / traces -------------------------------------------------

class LayoutMismatch(InputError):
    def __init__(self, msg: str):
        super().__init__(msg)


class EmptyTraces(InputError):
    def __init__(self) -> None:
        super().__init__("trace set holds zero vectors")


# --- metrics -------------------------------------------------------------

class LengthMismatch(InputError):
    def __init__(self, golden: int, observed: int):
        super().__init__(f"stream lengths differ: golden {golden}, observed {observed}")


class EmptyStream(InputError):
    def __init__(self) -> None:
        super().__init__("value stream is empty")


class UnknownNet(InputError):
    def __init__(self, net: object):
        self.net = net
        super().__init__(f"decoding references unknown net {net!r}")


# --- optimizers ----------------------------------------------------------

class NoCriticalPathCandidates(InputError):
    def __init__(self) -> None:
        super().__init__("no eligible approximation target lies on the aged critical path")


class GlpStuck(InfeasibleError):
    def __init__(self) -> None:
        super().__init__("gate-level pruning ran out of nets before meeting the delay target")


class ApsInfeasible(InfeasibleError):
    def __init__(self) -> None:
        super().__init__("no input truncation tuple meets the delay target")
