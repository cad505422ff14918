"""The supported cell library: gate kinds, arities, pin names, boolean rules.

The library is intentionally small: a universal set of 1-3 input gates plus
constants, enough for the generated benchmarks and any netlist mapped onto
these primitives. Unknown cells are a hard parse error.

Pin conventions (named connections in the structural format):
  * 1-input gates: ``A -> Y``
  * 2-input gates: ``A, B -> Y``
  * 3-input gates: ``A, B, C -> Y``
  * MUX2: ``A`` (select=0 branch), ``B`` (select=1 branch), ``S`` -> ``Y``,
    i.e. ``Y = B if S else A``.
"""

from __future__ import annotations

from enum import Enum


class GateKind(Enum):
    INPUT = "INPUT"
    OUTPUT = "OUTPUT"
    CONST0 = "CONST0"
    CONST1 = "CONST1"
    BUF = "BUF"
    INV = "INV"
    AND2 = "AND2"
    NAND2 = "NAND2"
    OR2 = "OR2"
    NOR2 = "NOR2"
    XOR2 = "XOR2"
    XNOR2 = "XNOR2"
    AND3 = "AND3"
    NAND3 = "NAND3"
    OR3 = "OR3"
    NOR3 = "NOR3"
    MUX2 = "MUX2"

    def __repr__(self) -> str:  # keeps netlist dumps readable
        return self.value


ARITY: dict[GateKind, int] = {
    GateKind.INPUT: 0,
    GateKind.OUTPUT: 1,
    GateKind.CONST0: 0,
    GateKind.CONST1: 0,
    GateKind.BUF: 1,
    GateKind.INV: 1,
    GateKind.AND2: 2,
    GateKind.NAND2: 2,
    GateKind.OR2: 2,
    GateKind.NOR2: 2,
    GateKind.XOR2: 2,
    GateKind.XNOR2: 2,
    GateKind.AND3: 3,
    GateKind.NAND3: 3,
    GateKind.OR3: 3,
    GateKind.NOR3: 3,
    GateKind.MUX2: 3,
}

PIN_NAMES: dict[GateKind, tuple[str, ...]] = {
    GateKind.BUF: ("A",),
    GateKind.INV: ("A",),
    GateKind.AND2: ("A", "B"),
    GateKind.NAND2: ("A", "B"),
    GateKind.OR2: ("A", "B"),
    GateKind.NOR2: ("A", "B"),
    GateKind.XOR2: ("A", "B"),
    GateKind.XNOR2: ("A", "B"),
    GateKind.AND3: ("A", "B", "C"),
    GateKind.NAND3: ("A", "B", "C"),
    GateKind.OR3: ("A", "B", "C"),
    GateKind.NOR3: ("A", "B", "C"),
    GateKind.MUX2: ("A", "B", "S"),
}

# Boolean rules on 0/1 ints. The same expressions work bitwise on packed
# words except for negation, which the simulator handles with ~ and a tail
# mask; here 1-x keeps plain ints in {0,1}.
EVAL = {
    GateKind.OUTPUT: lambda a: a,
    GateKind.CONST0: lambda: 0,
    GateKind.CONST1: lambda: 1,
    GateKind.BUF: lambda a: a,
    GateKind.INV: lambda a: 1 - a,
    GateKind.AND2: lambda a, b: a & b,
    GateKind.NAND2: lambda a, b: 1 - (a & b),
    GateKind.OR2: lambda a, b: a | b,
    GateKind.NOR2: lambda a, b: 1 - (a | b),
    GateKind.XOR2: lambda a, b: a ^ b,
    GateKind.XNOR2: lambda a, b: 1 - (a ^ b),
    GateKind.AND3: lambda a, b, c: a & b & c,
    GateKind.NAND3: lambda a, b, c: 1 - (a & b & c),
    GateKind.OR3: lambda a, b, c: a | b | c,
    GateKind.NOR3: lambda a, b, c: 1 - (a | b | c),
    GateKind.MUX2: lambda a, b, s: b if s else a,
}

# Cell names the parser accepts as instances. INPUT/OUTPUT/CONST are port
# and assign constructs, never instance lines.
INSTANTIABLE: frozenset[GateKind] = frozenset(k for k, a in ARITY.items() if a > 0 and k is not GateKind.OUTPUT)

LOGIC_KINDS: frozenset[GateKind] = INSTANTIABLE

ZERO_DELAY_KINDS: frozenset[GateKind] = frozenset(
    {GateKind.INPUT, GateKind.OUTPUT, GateKind.CONST0, GateKind.CONST1}
)

CELLS_BY_NAME: dict[str, GateKind] = {k.value: k for k in INSTANTIABLE}


def eval_gate(kind: GateKind, inputs: tuple[int, ...]) -> int:
    """Apply a gate's boolean rule to 0/1 inputs."""
    return EVAL[kind](*inputs)


def forced_output(kind: GateKind, inputs: tuple[int | None, ...]) -> int | None:
    """Output value if it is forced by the known (non-None) inputs, else None.

    Enumerates the free inputs; with arity <= 3 this is at most 8 cases.
    """
    free = [i for i, v in enumerate(inputs) if v is None]
    vals = list(inputs)
    seen: set[int] = set()
    for combo in range(1 << len(free)):
        for bit, pos in enumerate(free):
            vals[pos] = (combo >> bit) & 1
        seen.add(EVAL[kind](*vals))
        if len(seen) > 1:
            return None
    return seen.pop()
