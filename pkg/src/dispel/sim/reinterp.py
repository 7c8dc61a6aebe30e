"""Micro-interpreter for the SystemVerilog subset the central module uses.

It reads the emitted text back and executes it, which makes it an oracle
for the code generator that shares nothing with it but the port naming
convention.  Supported: ANSI port lists, ``logic`` declarations,
``always_comb`` and ``always_ff @(...)`` processes, named ``begin``/``end``
blocks, ``if``/``else``, blocking and non-blocking assignments, and
expressions over identifiers, bit selects, part selects, concatenation,
sized literals, ``'0``, ``$countones``, ``!``, ``^``, ``+``, comparisons,
``&&`` and ``||``.  Anything else raises ``UnsupportedConstruct``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import UnsupportedConstruct
from ..signals import CHANNELS, PROTOCOL_CHANNELS
from ..soc import SocConfig
from .transaction import TX_CHANNELS, Transaction

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>\d+'[hHbBdD][0-9a-fA-F_]+ | '0 | \d+)
  | (?P<id>\$?[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<op><=|>=|==|!=|&&|\|\||[()\[\]{}:;,@!^+<>=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int


def tokenize(text: str) -> list[Tok]:
    toks = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0]
        pos = 0
        while pos < len(line):
            m = _TOKEN.match(line, pos)
            if m is None:
                raise UnsupportedConstruct(lineno, line[pos:].strip())
            if m.lastgroup != "ws":
                toks.append(Tok(m.lastgroup, m.group(), lineno))
            pos = m.end()
    toks.append(Tok("eof", "", len(text.splitlines()) + 1))
    return toks


# -- syntax tree ---------------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    value: int
    width: int | None        # None for '0 and unsized numbers


@dataclass(frozen=True)
class Ref:
    name: str
    msb: int | None = None
    lsb: int | None = None


@dataclass(frozen=True)
class Unary:
    op: str
    arg: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Concat:
    parts: tuple


@dataclass(frozen=True)
class CountOnes:
    arg: object


@dataclass(frozen=True)
class Assign:
    target: str
    expr: object
    blocking: bool


@dataclass(frozen=True)
class If:
    cond: object
    then: tuple
    orelse: tuple


@dataclass
class Process:
    kind: str                # "comb" or "ff"
    body: tuple
    label: str | None = None


@dataclass
class EmittedModel:
    name: str
    widths: dict[str, int] = field(default_factory=dict)
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    regs: list[str] = field(default_factory=list)
    processes: list[Process] = field(default_factory=list)


_BINARY = {"||": 1, "&&": 2, "^": 3, "==": 4, "!=": 4,
           "<": 5, "<=": 5, ">": 5, ">=": 5, "+": 6}


class _Parser:
    def __init__(self, toks: list[Tok]):
        self.toks = toks
        self.i = 0

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def fail(self):
        raise UnsupportedConstruct(self.tok.line, self.tok.text or "<end of file>")

    def take(self, text: str | None = None, kind: str | None = None) -> Tok:
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            self.fail()
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def int_(self) -> int:
        t = self.take(kind="num")
        if not t.text.isdigit():
            self.fail()
        return int(t.text)

    def range_width(self) -> int:
        if not self.accept("["):
            return 1
        msb = self.int_()
        self.take(":")
        lsb = self.int_()
        self.take("]")
        if lsb != 0 or msb < 0:
            self.fail()
        return msb + 1

    # module structure

    def module(self) -> EmittedModel:
        self.take("module")
        mod = EmittedModel(self.take(kind="id").text)
        self.take("(")
        while True:
            direction = self.take(kind="id").text
            if direction not in ("input", "output"):
                self.i -= 1
                self.fail()
            self.take("logic")
            width = self.range_width()
            name = self.take(kind="id").text
            mod.widths[name] = width
            (mod.inputs if direction == "input" else mod.outputs).append(name)
            if not self.accept(","):
                break
        self.take(")")
        self.take(";")
        while not self.at("endmodule"):
            if self.accept("logic"):
                width = self.range_width()
                name = self.take(kind="id").text
                self.take(";")
                mod.widths[name] = width
                mod.regs.append(name)
            elif self.accept("always_comb"):
                mod.processes.append(self.process("comb"))
            elif self.accept("always_ff"):
                self.take("@")
                self.take("(")
                while not self.at(")"):
                    if self.tok.text not in ("posedge", "negedge", "or") and self.tok.kind != "id":
                        self.fail()
                    self.i += 1
                self.take(")")
                mod.processes.append(self.process("ff"))
            else:
                self.fail()
        self.take("endmodule")
        if self.tok.kind != "eof":
            self.fail()
        return mod

    def process(self, kind: str) -> Process:
        label = None
        if self.at("begin") and self.toks[self.i + 1].text == ":":
            label = self.toks[self.i + 2].text
        return Process(kind, self.statement(), label)

    # statements

    def statement(self) -> tuple:
        if self.accept("begin"):
            if self.accept(":"):
                self.take(kind="id")
            body = []
            while not self.accept("end"):
                body += self.statement()
            return tuple(body)
        if self.accept("if"):
            self.take("(")
            cond = self.expr()
            self.take(")")
            then = self.statement()
            orelse = self.statement() if self.accept("else") else ()
            return (If(cond, then, orelse),)
        target = self.take(kind="id").text
        if self.accept("="):
            blocking = True
        elif self.accept("<="):
            blocking = False
        else:
            self.fail()
        expr = self.expr()
        self.take(";")
        return (Assign(target, expr, blocking),)

    # expressions (precedence climbing)

    def expr(self, min_prec: int = 1):
        left = self.unary()
        while self.tok.text in _BINARY and _BINARY[self.tok.text] >= min_prec:
            op = self.take().text
            right = self.expr(_BINARY[op] + 1)
            left = Binary(op, left, right)
        return left

    def unary(self):
        if self.accept("!"):
            return Unary("!", self.unary())
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return _literal(t)
        if self.accept("("):
            e = self.expr()
            self.take(")")
            return e
        if self.accept("{"):
            parts = [self.expr()]
            while self.accept(","):
                parts.append(self.expr())
            self.take("}")
            return Concat(tuple(parts))
        if t.text == "$countones":
            self.i += 1
            self.take("(")
            e = self.expr()
            self.take(")")
            return CountOnes(e)
        if t.kind == "id" and not t.text.startswith("$"):
            self.i += 1
            if self.accept("["):
                msb = self.int_()
                lsb = None
                if self.accept(":"):
                    lsb = self.int_()
                self.take("]")
                return Ref(t.text, msb, lsb)
            return Ref(t.text)
        self.fail()


def _literal(t: Tok) -> Lit:
    text = t.text
    if text == "'0":
        return Lit(0, None)
    if text.isdigit():
        return Lit(int(text), None)
    size, rest = text.split("'")
    base = {"h": 16, "b": 2, "d": 10}[rest[0].lower()]
    width = int(size)
    value = int(rest[1:].replace("_", ""), base)
    return Lit(value & ((1 << width) - 1), width)


def parse_emitted(text: str) -> EmittedModel:
    return _Parser(tokenize(text)).module()


# -- evaluation ----------------------------------------------------------------


class _Eval:
    def __init__(self, model: EmittedModel, env: dict):
        self.model = model
        self.env = env

    def width(self, node) -> int:
        if isinstance(node, Lit):
            return node.width or 32
        if isinstance(node, Ref):
            if node.msb is None:
                return self.model.widths[node.name]
            return 1 if node.lsb is None else node.msb - node.lsb + 1
        if isinstance(node, Concat):
            return sum(self.width(p) for p in node.parts)
        if isinstance(node, CountOnes):
            return 32
        if isinstance(node, Unary) or node.op in ("||", "&&", "==", "!=", "<", "<=", ">", ">="):
            return 1
        return max(self.width(node.left), self.width(node.right))

    def value(self, node) -> int:
        if isinstance(node, Lit):
            return node.value
        if isinstance(node, Ref):
            if node.name not in self.env:
                raise UnsupportedConstruct(0, f"undeclared identifier {node.name}")
            v = self.env[node.name]
            if node.msb is None:
                return v
            lsb = node.msb if node.lsb is None else node.lsb
            return (v >> lsb) & ((1 << (node.msb - lsb + 1)) - 1)
        if isinstance(node, Concat):
            out = 0
            for p in node.parts:
                w = self.width(p)
                out = (out << w) | (self.value(p) & ((1 << w) - 1))
            return out
        if isinstance(node, CountOnes):
            return bin(self.value(node.arg)).count("1")
        if isinstance(node, Unary):
            return int(not self.value(node.arg))
        op = node.op
        if op == "&&":
            return int(bool(self.value(node.left)) and bool(self.value(node.right)))
        if op == "||":
            return int(bool(self.value(node.left)) or bool(self.value(node.right)))
        a, b = self.value(node.left), self.value(node.right)
        if op == "^":
            return a ^ b
        if op == "+":
            return (a + b) & ((1 << self.width(node)) - 1)
        return int({"==": a == b, "!=": a != b, "<": a < b, "<=": a <= b,
                    ">": a > b, ">=": a >= b}[op])

    def run(self, body, nba: dict | None):
        for stmt in body:
            if isinstance(stmt, If):
                self.run(stmt.then if self.value(stmt.cond) else stmt.orelse, nba)
                continue
            mask = (1 << self.model.widths[stmt.target]) - 1
            v = self.value(stmt.expr) & mask
            if stmt.blocking:
                self.env[stmt.target] = v
            else:
                if nba is None:
                    raise UnsupportedConstruct(0, f"non-blocking assignment to {stmt.target} "
                                                  "outside always_ff")
                nba[stmt.target] = v


class EmittedSim:
    """Executes a parsed central module one transaction at a time."""

    def __init__(self, model: EmittedModel, cfg: SocConfig):
        self.model = model
        self.cfg = cfg
        self.channels = [ch for ch in PROTOCOL_CHANNELS[cfg.bus_protocol]]
        self.regs = dict.fromkeys(model.regs, 0)
        self.cycle: int | None = None
        self.mode = 0
        self.reset_idle = 1 if cfg.reset_active_low else 0

    def _env(self, tx: Transaction | None, mode: int) -> dict:
        env = dict.fromkeys(self.model.inputs, 0)
        env.update(self.regs)
        env[self.cfg.reset_name] = self.reset_idle
        env["reg_mode"] = mode
        if tx is None:
            return env
        for ip in self.cfg.ips:
            party = ip.id in (tx.master_id, tx.slave_id)
            env[f"{ip.name}_sel"] = int(party)
            if party:
                for ch in self.channels:
                    if ch in TX_CHANNELS:
                        env[f"{ip.name}_{ch}_in"] = tx.get(ch)
        return env

    def _run(self, kind: str, env: dict, nba: dict | None):
        ev = _Eval(self.model, env)
        for proc in self.model.processes:
            if proc.kind == kind:
                ev.run(proc.body, nba)

    def _edge(self, env: dict):
        nba: dict = {}
        self._run("ff", env, nba)
        self.regs.update(nba)

    def step(self, tx: Transaction) -> Transaction:
        if self.cycle is not None:
            idle = tx.cycle - self.cycle - 1
            for _ in range(max(0, idle)):
                before = dict(self.regs)
                self._edge(self._env(None, self.mode))
                if self.regs == before:
                    break
        env = self._env(tx, tx.mode)
        self._run("comb", env, None)
        master = self.cfg.ip_by_id(tx.master_id).name
        slave = self.cfg.ip_by_id(tx.slave_id).name
        final = {}
        for ch in self.channels:
            if ch not in TX_CHANNELS:
                continue
            orig = tx.get(ch)
            m, s = env[f"{master}_{ch}_out"], env[f"{slave}_{ch}_out"]
            first, second = (s, m) if CHANNELS[ch].forward else (m, s)
            final[ch] = first if first != orig else second
        self._edge(env)
        self.mode = tx.mode
        self.cycle = tx.cycle
        return tx.with_channels(final)


def reinterpret_emitted(artifacts, tx: Transaction, state: EmittedSim | None = None,
                        cfg: SocConfig | None = None) -> Transaction:
    """Run one transaction through the emitted central module.

    Pass the same ``state`` (an ``EmittedSim``) across calls to keep FSM
    registers; without one, a fresh simulator needs ``cfg``.
    """
    if state is None:
        state = EmittedSim(parse_emitted(artifacts.central_module), cfg)
    return state.step(tx)
