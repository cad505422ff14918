"""Gate-level combinational netlists as annotated DAGs.

A :class:`Netlist` is an immutable-by-convention value: every transformation
(`apply_rewiring`) builds a new object. Construction validates the full set
of structural invariants (single driver per net, pin counts, acyclicity,
driven outputs) and caches the topological order, so downstream passes can
assume a well-formed graph.

The on-disk format is a small structural subset of Verilog: one module,
non-ANSI port declarations, scalar and ``[msb:lsb]`` bus declarations,
named-pin instantiations of the supported cells, and ``assign`` restricted
to net aliases and ``1'b0``/``1'b1`` constants. Net-to-net assigns become
BUF gates; constant assigns become constant drivers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .cells import ARITY, CELLS_BY_NAME, PIN_NAMES, GateKind, forced_output
from .errors import (
    CombinationalLoop,
    CycleIntroduced,
    InternalError,
    MultipleDrivers,
    NetlistSyntaxError,
    UnconnectedPin,
    UndeclaredNet,
    UndrivenNet,
    UnknownCell,
    UnknownTarget,
)

NO_DRIVER = -1


@dataclass(frozen=True)
class Bus:
    """A named group of port bits. ``bits`` lists net ids LSB first.

    ``msb``/``lsb`` record the declared range; both are None for scalar ports.
    """

    name: str
    bits: tuple[int, ...]
    msb: int | None = None
    lsb: int | None = None

    @property
    def width(self) -> int:
        return len(self.bits)


# --- rewire plans ---------------------------------------------------------

CONST0 = "const0"
CONST1 = "const1"


@dataclass(frozen=True)
class Replacement:
    """Target net replacement: a constant or another net's driver output."""

    kind: str  # CONST0 | CONST1 | "net"
    source: int = NO_DRIVER  # net id when kind == "net"

    @staticmethod
    def const0() -> "Replacement":
        return Replacement(CONST0)

    @staticmethod
    def const1() -> "Replacement":
        return Replacement(CONST1)

    @staticmethod
    def net(source: int) -> "Replacement":
        return Replacement("net", source)

    @property
    def is_const(self) -> bool:
        return self.kind in (CONST0, CONST1)

    @property
    def const_value(self) -> int:
        return 1 if self.kind == CONST1 else 0


@dataclass(frozen=True)
class RewirePlan:
    """Simultaneous net replacements; each target appears at most once."""

    assignments: dict[int, Replacement] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.assignments)


# --- the netlist ----------------------------------------------------------

class Netlist:
    """A combinational gate network.

    Gates are stored structure-of-arrays style (kind / input nets / output
    net / instance name) with dense integer ids; nets are dense integer ids
    with a name table. Treat instances as immutable after construction.
    """

    def __init__(
        self,
        name: str,
        gate_kinds: list[GateKind],
        gate_inputs: list[tuple[int, ...]],
        gate_outputs: list[int],
        gate_names: list[str],
        net_names: list[str],
        input_buses: tuple[Bus, ...],
        output_buses: tuple[Bus, ...],
    ):
        self.name = name
        self.gate_kinds = gate_kinds
        self.gate_inputs = gate_inputs
        self.gate_outputs = gate_outputs
        self.gate_names = gate_names
        self.net_names = net_names
        self.input_buses = input_buses
        self.output_buses = output_buses

        self.num_gates = len(gate_kinds)
        self.num_nets = len(net_names)
        self.pi_nets: tuple[int, ...] = tuple(b for bus in input_buses for b in bus.bits)
        self.po_nets: tuple[int, ...] = tuple(b for bus in output_buses for b in bus.bits)

        self._validate_and_index()

    # -- derived structure --

    def _validate_and_index(self) -> None:
        n_nets = self.num_nets
        if len(set(self.net_names)) != n_nets:
            raise InternalError("net names are not unique")
        driver = [NO_DRIVER] * n_nets
        pi_set = set(self.pi_nets)
        if len(pi_set) != len(self.pi_nets):
            raise MultipleDrivers("duplicated primary input bit")
        if len(set(self.po_nets)) != len(self.po_nets):
            raise InternalError("duplicated primary output bit")
        if pi_set & set(self.po_nets):
            raise InternalError("a net cannot be both primary input and output")

        for g, (kind, ins, out) in enumerate(
            zip(self.gate_kinds, self.gate_inputs, self.gate_outputs)
        ):
            if len(ins) != ARITY[kind]:
                raise InternalError(
                    f"instance {self.gate_names[g]!r}: {kind.value} expects "
                    f"{ARITY[kind]} inputs, got {len(ins)}"
                )
            if out in pi_set:
                raise MultipleDrivers(self.net_names[out])
            if driver[out] != NO_DRIVER:
                raise MultipleDrivers(self.net_names[out])
            driver[out] = g

        consumers: list[list[int]] = [[] for _ in range(n_nets)]
        for g, ins in enumerate(self.gate_inputs):
            for net in ins:
                if driver[net] == NO_DRIVER and net not in pi_set:
                    raise UndrivenNet(self.net_names[net])
                consumers[net].append(g)
        for net in self.po_nets:
            if driver[net] == NO_DRIVER and net not in pi_set:
                raise UndrivenNet(self.net_names[net])

        self.driver = driver
        self.consumers = consumers
        self.topo = self._topo_sort()
        rank = [0] * self.num_gates
        for r, g in enumerate(self.topo):
            rank[g] = r
        self.topo_rank = rank

    def _topo_sort(self) -> list[int]:
        """Kahn's algorithm with an id-ordered ready heap: the unique
        lexicographically-smallest topological order."""
        import heapq

        indeg = [0] * self.num_gates
        for g, ins in enumerate(self.gate_inputs):
            indeg[g] = sum(1 for net in ins if self.driver[net] != NO_DRIVER)
        ready = [g for g in range(self.num_gates) if indeg[g] == 0]
        heapq.heapify(ready)
        order: list[int] = []
        while ready:
            g = heapq.heappop(ready)
            order.append(g)
            for consumer in self.consumers[self.gate_outputs[g]]:
                indeg[consumer] -= 1
                if indeg[consumer] == 0:
                    heapq.heappush(ready, consumer)
        if len(order) != self.num_gates:
            stuck = [self.gate_names[g] for g in range(self.num_gates) if indeg[g] > 0]
            raise CombinationalLoop(stuck[:20])
        return order

    # -- views --

    def nodes(self):
        """Iterate (instance-id, kind, input net ids, output net id)."""
        for g in range(self.num_gates):
            yield g, self.gate_kinds[g], self.gate_inputs[g], self.gate_outputs[g]

    def net_id(self, name: str) -> int:
        try:
            return self.net_names.index(name)
        except ValueError:
            raise UndeclaredNet(name) from None

    def bus(self, name: str, direction: str = "output") -> Bus:
        buses = self.output_buses if direction == "output" else self.input_buses
        for b in buses:
            if b.name == name:
                return b
        raise UndeclaredNet(name)

    def const_value(self, net: int) -> int | None:
        """0/1 if the net is driven by a constant gate, else None."""
        g = self.driver[net]
        if g == NO_DRIVER:
            return None
        kind = self.gate_kinds[g]
        if kind is GateKind.CONST0:
            return 0
        if kind is GateKind.CONST1:
            return 1
        return None

    def stats(self) -> dict:
        return {
            "gates": self.num_gates,
            "nets": self.num_nets,
            "inputs": len(self.pi_nets),
            "outputs": len(self.po_nets),
        }


def topological_order(n: Netlist) -> list[int]:
    """Instance ids, every gate after all gates driving its inputs.

    Deterministic: ties break toward the smaller instance id.
    """
    return list(n.topo)


# --- parsing ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<const>1'b[01])
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<punct>[()\[\];,.:=])
    """,
    re.VERBOSE | re.DOTALL,
)

_KEYWORDS = {"module", "endmodule", "input", "output", "wire", "assign"}


@dataclass
class _Token:
    kind: str  # id | num | const | punct | eof
    value: str
    line: int
    col: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise NetlistSyntaxError(line, pos - line_start + 1, "a token", source[pos])
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, text, line, m.start() - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str) -> _Token:
        tok = self.next()
        if tok.value != value:
            raise NetlistSyntaxError(tok.line, tok.col, repr(value), tok.value)
        return tok

    def expect_id(self) -> _Token:
        tok = self.next()
        if tok.kind != "id":
            raise NetlistSyntaxError(tok.line, tok.col, "an identifier", tok.value)
        return tok

    def expect_num(self) -> int:
        tok = self.next()
        if tok.kind != "num":
            raise NetlistSyntaxError(tok.line, tok.col, "a number", tok.value)
        return int(tok.value)


class _Builder:
    """Accumulates declarations and instances, then assembles a Netlist."""

    def __init__(self, module_name: str):
        self.module_name = module_name
        self.net_ids: dict[str, int] = {}
        self.net_names: list[str] = []
        self.declared_dirs: dict[str, str] = {}  # bus/scalar name -> input|output|wire
        self.bus_order: list[str] = []
        self.buses: dict[str, tuple[list[int], int | None, int | None]] = {}
        self.gate_kinds: list[GateKind] = []
        self.gate_inputs: list[tuple[int, ...]] = []
        self.gate_outputs: list[int] = []
        self.gate_names: list[str] = []
        self.inst_names: set[str] = set()
        self.referenced: set[int] = set()
        self._const_nets: dict[int, int] = {}

    def net(self, name: str) -> int:
        if name not in self.net_ids:
            self.net_ids[name] = len(self.net_names)
            self.net_names.append(name)
        return self.net_ids[name]

    def declare(self, direction: str, name: str, rng: tuple[int, int] | None, tok: _Token):
        if name in self.declared_dirs:
            raise NetlistSyntaxError(tok.line, tok.col, f"a fresh name ({name!r} redeclared)")
        self.declared_dirs[name] = direction
        self.bus_order.append(name)
        if rng is None:
            self.buses[name] = ([self.net(name)], None, None)
        else:
            msb, lsb = rng
            lo, hi = min(msb, lsb), max(msb, lsb)
            bits = [self.net(f"{name}[{i}]") for i in range(lo, hi + 1)]
            self.buses[name] = (bits, msb, lsb)

    def resolve(self, name: str, index: int | None, tok: _Token) -> int:
        key = name if index is None else f"{name}[{index}]"
        if name not in self.declared_dirs:
            raise UndeclaredNet(key, tok.line)
        bits, msb, lsb = self.buses[name]
        if index is None:
            if msb is not None:
                raise NetlistSyntaxError(tok.line, tok.col, f"a bit-select on bus {name!r}")
            net = bits[0]
        else:
            if msb is None:
                raise NetlistSyntaxError(tok.line, tok.col, f"a scalar reference ({name!r} has no range)")
            lo = min(msb, lsb)
            if not lo <= index <= max(msb, lsb):
                raise UndeclaredNet(key, tok.line)
            net = bits[index - lo]
        self.referenced.add(net)
        return net

    def const_net(self, value: int) -> int:
        if value not in self._const_nets:
            base = f"const{value}"
            name = base
            k = 1
            while name in self.net_ids:
                k += 1
                name = f"{base}_{k}"
            net = self.net(name)
            self.add_gate(GateKind.CONST1 if value else GateKind.CONST0, (), net, _inst_name(self, f"K_{name}"))
            self._const_nets[value] = net
        return self._const_nets[value]

    def add_gate(self, kind: GateKind, ins: tuple[int, ...], out: int, name: str):
        self.gate_kinds.append(kind)
        self.gate_inputs.append(ins)
        self.gate_outputs.append(out)
        self.gate_names.append(name)
        self.referenced.update(ins)
        self.referenced.add(out)

    def finish(self) -> Netlist:
        input_buses = []
        output_buses = []
        for name in self.bus_order:
            direction = self.declared_dirs[name]
            bits, msb, lsb = self.buses[name]
            if direction == "wire":
                continue
            bus = Bus(name, tuple(bits), msb, lsb)
            (input_buses if direction == "input" else output_buses).append(bus)
            self.referenced.update(bits)

        # Drop declared-but-unused wires so the single-driver invariant
        # holds; keep everything a port, gate, or assign touches.
        keep = sorted(self.referenced)
        remap = {old: new for new, old in enumerate(keep)}
        net_names = [self.net_names[old] for old in keep]
        gate_inputs = [tuple(remap[i] for i in ins) for ins in self.gate_inputs]
        gate_outputs = [remap[o] for o in self.gate_outputs]

        def remap_bus(b: Bus) -> Bus:
            return Bus(b.name, tuple(remap[i] for i in b.bits), b.msb, b.lsb)

        return Netlist(
            self.module_name,
            self.gate_kinds,
            gate_inputs,
            gate_outputs,
            self.gate_names,
            net_names,
            tuple(remap_bus(b) for b in input_buses),
            tuple(remap_bus(b) for b in output_buses),
        )


def parse_netlist(source: str) -> Netlist:
    """Parse a single-module structural netlist in the supported grammar."""
    p = _Parser(source)
    p.expect("module")
    module_name = p.expect_id().value
    b = _Builder(module_name)
    port_names: list[str] = []
    p.expect("(")
    if p.peek().value != ")":
        while True:
            port_names.append(p.expect_id().value)
            if p.peek().value != ",":
                break
            p.next()
    p.expect(")")
    p.expect(";")

    while True:
        tok = p.peek()
        if tok.value == "endmodule":
            p.next()
            break
        if tok.kind == "eof":
            raise NetlistSyntaxError(tok.line, tok.col, "'endmodule'")
        if tok.value in ("input", "output", "wire"):
            _parse_decl(p, b)
        elif tok.value == "assign":
            _parse_assign(p, b)
        elif tok.kind == "id":
            _parse_instance(p, b)
        else:
            raise NetlistSyntaxError(tok.line, tok.col, "a declaration, instance, or assign", tok.value)

    for name in port_names:
        if name not in b.declared_dirs or b.declared_dirs[name] == "wire":
            raise NetlistSyntaxError(1, 1, f"a direction declaration for port {name!r}")
    return b.finish()


def _parse_range(p: _Parser) -> tuple[int, int] | None:
    if p.peek().value != "[":
        return None
    p.next()
    msb = p.expect_num()
    p.expect(":")
    lsb = p.expect_num()
    p.expect("]")
    return msb, lsb


def _parse_decl(p: _Parser, b: _Builder) -> None:
    direction = p.next().value
    rng = _parse_range(p)
    while True:
        tok = p.expect_id()
        b.declare(direction, tok.value, rng, tok)
        if p.peek().value == ",":
            p.next()
            continue
        break
    p.expect(";")


def _parse_netref(p: _Parser, b: _Builder) -> int:
    tok = p.next()
    if tok.kind == "const":
        return b.const_net(int(tok.value[-1]))
    if tok.kind != "id":
        raise NetlistSyntaxError(tok.line, tok.col, "a net reference", tok.value)
    index = None
    if p.peek().value == "[":
        p.next()
        index = p.expect_num()
        p.expect("]")
    return b.resolve(tok.value, index, tok)


def _parse_assign(p: _Parser, b: _Builder) -> None:
    p.expect("assign")
    lhs = _parse_netref(p, b)
    p.expect("=")
    rhs_tok = p.next()
    if rhs_tok.kind == "const":
        value = int(rhs_tok.value[-1])
        kind = GateKind.CONST1 if value else GateKind.CONST0
        b.add_gate(kind, (), lhs, _inst_name(b, f"K_{b.net_names[lhs]}"))
    elif rhs_tok.kind == "id":
        index = None
        if p.peek().value == "[":
            p.next()
            index = p.expect_num()
            p.expect("]")
        rhs = b.resolve(rhs_tok.value, index, rhs_tok)
        b.add_gate(GateKind.BUF, (rhs,), lhs, _inst_name(b, f"B_{b.net_names[lhs]}"))
    else:
        raise NetlistSyntaxError(rhs_tok.line, rhs_tok.col, "a net or 1'b0/1'b1", rhs_tok.value)
    p.expect(";")


def _inst_name(b: _Builder, base: str) -> str:
    name = re.sub(r"[\[\]]", "_", base)
    candidate = name
    k = 1
    while candidate in b.inst_names:
        k += 1
        candidate = f"{name}_{k}"
    b.inst_names.add(candidate)
    return candidate


def _parse_instance(p: _Parser, b: _Builder) -> None:
    cell_tok = p.expect_id()
    if cell_tok.value in _KEYWORDS:
        raise NetlistSyntaxError(cell_tok.line, cell_tok.col, "a cell type", cell_tok.value)
    kind = CELLS_BY_NAME.get(cell_tok.value)
    if kind is None:
        raise UnknownCell(cell_tok.value, cell_tok.line)
    inst_tok = p.expect_id()
    inst = inst_tok.value
    if inst in b.inst_names:
        raise NetlistSyntaxError(inst_tok.line, inst_tok.col, f"a fresh instance name ({inst!r} reused)")
    b.inst_names.add(inst)

    conns: dict[str, int] = {}
    p.expect("(")
    while True:
        p.expect(".")
        pin = p.expect_id().value
        p.expect("(")
        if p.peek().value == ")":
            raise UnconnectedPin(inst, pin)
        conns[pin] = _parse_netref(p, b)
        p.expect(")")
        if p.peek().value == ",":
            p.next()
            continue
        break
    p.expect(")")
    p.expect(";")

    pins = PIN_NAMES[kind]
    ins = []
    for pin in pins:
        if pin not in conns:
            raise UnconnectedPin(inst, pin)
        ins.append(conns[pin])
    if "Y" not in conns:
        raise UnconnectedPin(inst, "Y")
    extra = set(conns) - set(pins) - {"Y"}
    if extra:
        raise NetlistSyntaxError(
            inst_tok.line, inst_tok.col, f"pins {sorted(pins) + ['Y']} on {kind.value}", sorted(extra)[0]
        )
    b.add_gate(kind, tuple(ins), conns["Y"], inst)


# --- emission ---------------------------------------------------------------

def emit_netlist(n: Netlist) -> str:
    """Serialize to the structural format; reparses to a structurally
    identical netlist. Port bits are referenced through their declared bus
    names; instances appear in topological rank order (ties by id), wires
    in net-id order."""
    names = list(n.net_names)
    port_nets = set(n.pi_nets) | set(n.po_nets)
    for bus in (*n.input_buses, *n.output_buses):
        lo = 0 if bus.lsb is None else min(bus.msb, bus.lsb)
        for i, net in enumerate(bus.bits):
            names[net] = bus.name if bus.msb is None else f"{bus.name}[{lo + i}]"
    taken = {names[net] for net in port_nets}
    for net in range(n.num_nets):
        if net in port_nets:
            continue
        base = names[net]
        k = 1
        while names[net] in taken:
            k += 1
            names[net] = f"{base}__{k}"
        taken.add(names[net])

    lines: list[str] = []
    ports = [b.name for b in n.input_buses] + [b.name for b in n.output_buses]
    lines.append(f"module {n.name} ({', '.join(ports)});")

    def decl(b: Bus, direction: str) -> str:
        if b.msb is None:
            return f"  {direction} {b.name};"
        return f"  {direction} [{b.msb}:{b.lsb}] {b.name};"

    for b in n.input_buses:
        lines.append(decl(b, "input"))
    for b in n.output_buses:
        lines.append(decl(b, "output"))

    for net in range(n.num_nets):
        if net not in port_nets:
            lines.append(f"  wire {names[net]};")

    for g in n.topo:
        kind = n.gate_kinds[g]
        out_name = names[n.gate_outputs[g]]
        if kind is GateKind.CONST0:
            lines.append(f"  assign {out_name} = 1'b0;")
        elif kind is GateKind.CONST1:
            lines.append(f"  assign {out_name} = 1'b1;")
        else:
            pins = PIN_NAMES[kind]
            conns = [f".{pin}({names[net]})" for pin, net in zip(pins, n.gate_inputs[g])]
            conns.append(f".Y({out_name})")
            lines.append(f"  {kind.value} {n.gate_names[g]} ({', '.join(conns)});")

    lines.append("endmodule")
    return "\n".join(lines) + "\n"


# --- rewiring ---------------------------------------------------------------

def apply_rewiring(n: Netlist, plan: RewirePlan) -> Netlist:
    """Apply a rewire plan and clean up.

    Each target net's consumers read the replacement instead of the original
    driver; the original driver keeps computing on a detached ``__pre`` net so
    other replacements may still reference its output. Constant propagation
    then runs to fixpoint, seeded at the plan's footprint (gates forced by
    constants become constant drivers), and gates with no path to a primary
    output are dropped.

    Precondition (caller's obligation, from candidate selection): every
    ``net`` replacement source has strictly smaller baseline aged arrival
    time than its target. Acyclicity then follows from the arrival-time
    potential; it is still re-checked and reported as CycleIntroduced.
    """
    for target in plan.assignments:
        if not 0 <= target < n.num_nets:
            raise UnknownTarget(str(target))

    kinds = list(n.gate_kinds)
    gins = list(n.gate_inputs)
    gouts = list(n.gate_outputs)
    gnames = list(n.gate_names)
    net_names = list(n.net_names)
    taken_names = set(net_names)
    inst_names = set(gnames)
    pi_set = set(n.pi_nets)
    po_set = set(n.po_nets)
    driver = list(n.driver)

    def fresh_net(base: str) -> int:
        name, k = base, 1
        while name in taken_names:
            k += 1
            name = f"{base}_{k}"
        taken_names.add(name)
        net_names.append(name)
        return len(net_names) - 1

    def fresh_inst(base: str) -> str:
        base = re.sub(r"[\[\]]", "_", base)
        name, k = base, 1
        while name in inst_names:
            k += 1
            name = f"{base}_{k}"
        inst_names.add(name)
        return name

    def add_gate(kind: GateKind, ins: tuple[int, ...], out: int, name: str) -> int:
        kinds.append(kind)
        gins.append(ins)
        gouts.append(out)
        gnames.append(name)
        return len(kinds) - 1

    # Pass 1: detach the driver of every gate-driven target onto a __pre net.
    pre_net: dict[int, int] = {}
    for target in sorted(plan.assignments):
        g = driver[target]
        if g != NO_DRIVER:
            pre = fresh_net(f"{n.net_names[target]}__pre")
            gouts[g] = pre
            pre_net[target] = pre

    # Pass 2: install replacements.
    sub: dict[int, int] = {}  # consumer-side input substitution
    const_driven: dict[int, int] = {}  # net id -> 0/1 for constant-driver nets
    for target in sorted(plan.assignments):
        rep = plan.assignments[target]
        if rep.is_const:
            kind = GateKind.CONST1 if rep.const_value else GateKind.CONST0
            if target in pi_set:
                # Input ports cannot grow an internal driver; consumers read
                # a tied-off net and the port is left floating.
                tied = fresh_net(f"{n.net_names[target]}__tied")
                add_gate(kind, (), tied, fresh_inst(f"K_{n.net_names[target]}"))
                sub[target] = tied
                const_driven[tied] = rep.const_value
            else:
                add_gate(kind, (), target, fresh_inst(f"K_{n.net_names[target]}"))
                const_driven[target] = rep.const_value
        else:
            source = rep.source
            if not 0 <= source < n.num_nets:
                raise UnknownTarget(str(source))
            src = pre_net.get(source, source)
            if target in po_set:
                # Ports need a physical driver; a BUF carries the source
                # value onto the declared output bit (its delay is real and
                # visible to timing analysis).
                add_gate(GateKind.BUF, (src,), target, fresh_inst(f"B_{n.net_names[target]}"))
            else:
                sub[target] = src

    # Consumer-side substitution applies to the original gates only: gates
    # added by the plan (BUFs onto ports, constants) already read their
    # final sources; in particular a wire-by-wire source that is a tied-off
    # primary input is read live, not through its constant replacement.
    remapped_gates: set[int] = set()
    for g in range(n.num_gates):
        ins = gins[g]
        if any(net in sub for net in ins):
            gins[g] = tuple(sub.get(net, net) for net in ins)
            remapped_gates.add(g)

    # Pass 3: constant propagation to fixpoint, seeded at the plan footprint.
    consumers: list[list[int]] = [[] for _ in range(len(net_names))]
    for g, ins in enumerate(gins):
        for net in ins:
            consumers[net].append(g)

    for g, kind in enumerate(kinds):
        if kind is GateKind.CONST0:
            const_driven.setdefault(gouts[g], 0)
        elif kind is GateKind.CONST1:
            const_driven.setdefault(gouts[g], 1)
    # Constants already present in the baseline stay unpropagated unless the
    # plan's effects reach them: the worklist starts only from gates whose
    # inputs were remapped or that consume a net the plan made constant.
    seeds = set(remapped_gates)
    for target, rep in plan.assignments.items():
        if rep.is_const and target not in pi_set:
            seeds.update(consumers[target])
    worklist = sorted(seeds)
    seen_const_gate: set[int] = set()
    while worklist:
        next_round: set[int] = set()
        for g in worklist:
            kind = kinds[g]
            if kind in (GateKind.CONST0, GateKind.CONST1) or g in seen_const_gate:
                continue
            ins = gins[g]
            known = tuple(const_driven.get(net) for net in ins)
            if all(v is None for v in known):
                continue
            forced = forced_output(kind, known)
            if forced is None:
                continue
            out = gouts[g]
            kinds[g] = GateKind.CONST1 if forced else GateKind.CONST0
            gins[g] = ()
            seen_const_gate.add(g)
            const_driven[out] = forced
            next_round.update(consumers[out])
        worklist = sorted(next_round)

    # Pass 4: drop gates with no path to a primary output.
    live_nets: set[int] = set()
    live_gates: set[int] = set()
    new_driver = [NO_DRIVER] * len(net_names)
    for g, out in enumerate(gouts):
        new_driver[out] = g
    stack = list(po_set)
    while stack:
        net = stack.pop()
        if net in live_nets:
            continue
        live_nets.add(net)
        g = new_driver[net]
        if g != NO_DRIVER and g not in live_gates:
            live_gates.add(g)
            stack.extend(gins[g])
    live_nets.update(pi_set)

    keep_gates = [g for g in range(len(kinds)) if g in live_gates]
    used_nets = sorted(live_nets | {net for g in keep_gates for net in gins[g]})
    remap = {old: new for new, old in enumerate(used_nets)}

    try:
        return Netlist(
            n.name,
            [kinds[g] for g in keep_gates],
            [tuple(remap[net] for net in gins[g]) for g in keep_gates],
            [remap[gouts[g]] for g in keep_gates],
            [gnames[g] for g in keep_gates],
            [net_names[old] for old in used_nets],
            tuple(Bus(b.name, tuple(remap[x] for x in b.bits), b.msb, b.lsb) for b in n.input_buses),
            tuple(Bus(b.name, tuple(remap[x] for x in b.bits), b.msb, b.lsb) for b in n.output_buses),
        )
    except CombinationalLoop as exc:
        raise CycleIntroduced(str(exc)) from exc
