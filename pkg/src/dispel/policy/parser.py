"""Recursive-descent parser for policy predicates, timing and actions.

Grammar (keywords are case-insensitive; ``and``/``&&``/``,`` and
``or``/``||`` and ``not``/``!`` are synonyms)::

    sequence   := expr { "then" [ gap ] expr [ gap ] }    (at most one gap per stage)
    gap        := "after" INT ("cycle" | "cycles")
    expr       := or_expr [ "until" or_expr ]
    or_expr    := and_expr { "or" and_expr }
    and_expr   := not_expr { "and" not_expr }
    not_expr   := ("not" | "eventually" | "always") not_expr | atom
    atom       := "(" expr ")" | selector | comparison | "0" | "1" | "true" | "false"
    selector   := ("slave_no" | "master_no") "=" INT { "or" INT }
                | "clock_cycles" (">" | ">=") INT
    comparison := term REL term
    term       := NUMBER | signal_ref | ("countones" | "popcount") "(" xor ")"
    xor        := (NUMBER | signal_ref) { "^" (NUMBER | signal_ref) }
    signal_ref := IDENT [ "[" INT [ ":" INT ] "]" ]

Unprefixed numbers compared against an address signal are read as hex,
matching the way addresses are written in policy files.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import (AssignmentToInput, InputFileError, MalformedJson, MissingField,
                      PolicyError, PolicySyntaxError, UnknownFunction)
from ..signals import ADDRESS_CHANNELS, PHRASES, channel_of, is_mode
from ..soc import read_json
from .ast import (Always, And, Assignments, BoolConst, Compare, Const, CycleBound,
                  ModeEquals, Not, Or, Popcount, Reject, Selector, Sequence, Signal,
                  Temporal, Xor)

log = logging.getLogger(__name__)

MAX_DEPTH = 64
ATTACK_TYPES = ("C", "I", "A")

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>\d*'[hHdDbB][0-9a-fA-F_]+ | 0[xX][0-9a-fA-F_]+ | 0[bB][01_]+ | \d[0-9a-zA-Z_]*)
  | (?P<ident>\$?[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)
  | (?P<op>>=|<=|==|!=|&&|\|\||[=<>!^(),\[\]:])
""", re.VERBOSE)

_WORDS = {"and", "or", "not", "then", "after", "cycle", "cycles", "until", "eventually",
          "always", "true", "false", "slave_no", "master_no", "clock_cycles"}
_FUNCTIONS = {"countones", "$countones", "popcount"}
SELECTORS = ("slave_no", "master_no", "clock_cycles")
TEMPORAL_WORDS = ("eventually", "always", "until")


@dataclass
class Token:
    kind: str       # "num", "ident", "word", "op", "end"
    text: str
    pos: int        # 1-based column


@dataclass(frozen=True)
class RawNumber:
    """A number whose radix depends on what it is compared with."""
    text: str
    pos: int


def tokenize(src: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    while i < len(src):
        m = _TOKEN_RE.match(src, i)
        if m is None:
            raise PolicySyntaxError(i + 1, "a token", src[i], src)
        kind = m.lastgroup
        text = m.group(kind)
        if kind == "ident" and text.lower() in _WORDS:
            kind = "word"
            text = text.lower()
        if kind != "ws":
            tokens.append(Token(kind, text, i + 1))
        i = m.end()
    merged: list[Token] = []
    for tok in tokens:
        prev = merged[-1] if merged else None
        if (prev is not None and prev.kind == "ident" and tok.kind in ("ident", "word")
                and (prev.text.lower(), tok.text.lower()) in PHRASES):
            merged[-1] = Token("ident", f"{prev.text}_{tok.text}", prev.pos)
            continue
        merged.append(tok)
    merged.append(Token("end", "", len(src) + 1))
    return merged


def _number(text: str, pos: int, as_hex: bool = False, src: str = "") -> Const:
    t = text.replace("_", "").lower()
    try:
        if "'" in t:
            _, _, rest = t.partition("'")
            base = {"h": 16, "d": 10, "b": 2}[rest[0]]
            return Const(int(rest[1:], base), hex=base == 16, digits=len(rest) - 1)
        if t.startswith("0x"):
            return Const(int(t[2:], 16), hex=True, digits=len(t) - 2)
        if t.startswith("0b"):
            return Const(int(t[2:], 2))
        if as_hex or re.search(r"[a-f]", t):
            return Const(int(t, 16), hex=True, digits=len(t))
        return Const(int(t, 10))
    except (ValueError, KeyError, IndexError):
        raise PolicySyntaxError(pos, "a number", text, src) from None


def _is_address(term) -> bool:
    return isinstance(term, Signal) and term.msb is None and \
        channel_of(term.base) in ADDRESS_CHANNELS


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = tokenize(src)
        self.i = 0
        self.depth = 0

    # -- token helpers --
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("word", "op") and self.tok.text in texts

    def accept(self, *texts: str) -> bool:
        if self.at(*texts):
            self.i += 1
            return True
        return False

    def fail(self, expected: str):
        tok = self.tok
        raise PolicySyntaxError(tok.pos, expected, tok.text or "end of input", self.src)

    def expect(self, *texts: str) -> Token:
        if not self.at(*texts):
            self.fail(" or ".join(repr(t) for t in texts))
        tok = self.tok
        self.i += 1
        return tok

    def expect_int(self) -> int:
        if self.tok.kind != "num":
            self.fail("an integer")
        tok = self.tok
        self.i += 1
        return _number(tok.text, tok.pos, src=self.src).value

    def finish(self):
        if self.tok.kind != "end":
            self.fail("end of input")

    # -- grammar --
    def sequence(self):
        stages = [self.expr()]
        gaps = []
        while self.accept("then"):
            gap = self.gap()
            stages.append(self.expr())
            if self.at("after"):
                if gap is not None:
                    self.fail("a single 'after <k> cycles' per stage")
                gap = self.gap()
            gaps.append(1 if gap is None else gap)
        if len(stages) == 1:
            return stages[0]
        return Sequence(tuple(stages), tuple(gaps))

    def gap(self):
        if not self.accept("after"):
            return None
        pos = self.tok.pos
        gap = self.expect_int()
        if gap < 1:
            raise PolicySyntaxError(pos, "a gap of at least 1 cycle", str(gap), self.src)
        self.expect("cycles", "cycle")
        return gap

    def expr(self):
        left = self.or_expr()
        if self.accept("until"):
            return Temporal("until", (left, self.or_expr()))
        return left

    def or_expr(self):
        items = [self.and_expr()]
        while self.accept("or", "||"):
            items.append(self.and_expr())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def and_expr(self):
        items = [self.not_expr()]
        while self.accept("and", "&&", ","):
            items.append(self.not_expr())
        return items[0] if len(items) == 1 else And(tuple(items))

    def not_expr(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.fail(f"at most {MAX_DEPTH} levels of nesting")
        try:
            if self.accept("not", "!"):
                return Not(self.not_expr())
            if self.at("eventually", "always"):
                op = self.tok.text
                self.i += 1
                return Temporal(op, (self.not_expr(),))
            return self.atom()
        finally:
            self.depth -= 1

    def atom(self):
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        if self.at(*SELECTORS):
            return self.selector()
        if self.accept("true"):
            return BoolConst(True)
        if self.accept("false"):
            return BoolConst(False)
        left = self.term()
        if self.at(*_REL):
            op = _REL[self.tok.text]
            self.i += 1
            right = self.term()
            return Compare(op, self.resolve(left, right), self.resolve(right, left))
        if isinstance(left, RawNumber):
            value = _number(left.text, left.pos, src=self.src).value
            if value in (0, 1):
                return BoolConst(bool(value))
        self.fail("a relational operator")

    def resolve(self, term, other):
        if isinstance(term, RawNumber):
            return _number(term.text, term.pos, as_hex=_is_address(other), src=self.src)
        if isinstance(term, Xor):
            return Xor(tuple(self.resolve(t, other) for t in term.operands))
        if isinstance(term, Popcount):
            return Popcount(self.resolve(term.arg, term.arg))
        return term

    def selector(self):
        kind = self.tok.text
        self.i += 1
        if kind == "clock_cycles":
            if not self.at(">", ">="):
                self.fail("'>' or '>=' after clock_cycles")
            op = self.tok.text
            self.i += 1
            count_pos = self.tok.pos
            count = self.expect_int()
            if count < 1:
                raise PolicySyntaxError(count_pos, "a cycle count of at least 1", str(count),
                                        self.src)
            return Selector(kind, op, (count,))
        if not self.at("=", "=="):
            self.fail(f"'=' after {kind}")
        self.i += 1
        values = [self.expect_int()]
        # "slave_no = 4 or 5": absorb bare integers that do not start a comparison.
        while (self.at("or", "||") and self.peek().kind == "num"
               and not (self.peek(2).kind == "op" and self.peek(2).text in _REL)):
            self.i += 1
            values.append(self.expect_int())
        return Selector(kind, "==", tuple(values))

    def signal_ref(self):
        tok = self.tok
        if tok.kind != "ident":
            self.fail("a signal name")
        self.i += 1
        if self.accept("["):
            msb = self.expect_int()
            lsb = None
            if self.accept(":"):
                lsb = self.expect_int()
                if lsb > msb:
                    raise PolicySyntaxError(tok.pos, "a [msb:lsb] slice with msb >= lsb",
                                            f"[{msb}:{lsb}]", self.src)
            self.expect("]")
            return Signal(tok.text, msb, lsb)
        return Signal(tok.text)

    def simple_term(self):
        if self.tok.kind == "num":
            tok = self.tok
            self.i += 1
            return RawNumber(tok.text, tok.pos)
        if self.tok.kind == "ident":
            if self.peek().kind == "op" and self.peek().text == "(":
                raise UnknownFunction(self.tok.text, self.tok.pos)
            return self.signal_ref()
        self.fail("a number or signal")

    def term(self):
        tok = self.tok
        if tok.kind == "ident" and self.peek().kind == "op" and self.peek().text == "(":
            if tok.text.lower() not in _FUNCTIONS:
                raise UnknownFunction(tok.text, tok.pos)
            self.i += 2
            items = [self.simple_term()]
            while self.accept("^"):
                items.append(self.simple_term())
            self.expect(")")
            arg = items[0] if len(items) == 1 else Xor(tuple(items))
            return Popcount(arg)
        return self.simple_term()


_REL = {"=": "==", "==": "==", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


def parse_predicate(src: str):
    if not isinstance(src, str) or not src.strip():
        raise PolicySyntaxError(1, "a non-empty predicate", "", src or "")
    p = _Parser(src)
    node = p.sequence()
    p.finish()
    return node


def parse_timing(src: str | None):
    if src is None or not str(src).strip() or str(src).strip().lower() == "always":
        return Always()
    p = _Parser(src)
    tok = p.tok
    if tok.kind == "ident" and is_mode(tok.text):
        p.i += 1
        p.expect("=", "==")
        mode = p.expect_int()
        p.finish()
        return ModeEquals(mode)
    if p.at("clock_cycles"):
        sel = p.selector()
        p.finish()
        return CycleBound(sel.op, sel.values[0])
    p.fail("'mode = <n>' or 'clock_cycles > <n>'")


def parse_action(src: str):
    if not isinstance(src, str) or not src.strip():
        raise PolicySyntaxError(1, "a non-empty action", "", src or "")
    if src.strip().lower() == "reject":
        return Reject()
    p = _Parser(src)
    items = []
    while True:
        if p.tok.kind != "ident":
            p.fail("a signal name or 'reject'")
        target_tok = p.tok
        target = p.signal_ref()
        if target.msb is not None:
            raise PolicySyntaxError(target_tok.pos, "an unsliced signal", target_tok.text, src)
        if is_mode(target.base):
            raise AssignmentToInput(target.name, "the mode register is an input")
        p.expect("=", "==", "<=")
        if p.tok.kind != "num":
            p.fail("a literal value")
        val_tok = p.tok
        p.i += 1
        value = _number(val_tok.text, val_tok.pos, as_hex=_is_address(target), src=src)
        items.append((target, value))
        if not p.accept(",", "and"):
            break
    p.finish()
    return Assignments(tuple(items))


# -- policy files --------------------------------------------------------------


@dataclass(frozen=True)
class Policy:
    name: str
    predicate_src: str
    action_src: str
    timing_src: str | None = None
    bits_protected: int = 1
    attack_types: frozenset = frozenset({"A"})
    level: str | None = None            # "bus", "ip" or None (inferred)
    synthesizable: bool | None = None   # None means "decide from the predicate"
    index: int = 0                      # position in the source file
    line: int = field(default=0, compare=False)


def _attack_types(raw, name) -> frozenset:
    if raw is None:
        return frozenset({"A"})
    items = raw if isinstance(raw, list) else str(raw).replace(" ", "").split(",")
    out = frozenset(str(x).upper() for x in items if str(x))
    if not out or not out <= set(ATTACK_TYPES):
        raise PolicyError(f"attack_types must be a non-empty subset of C,I,A, got {raw!r}",
                          name)
    return out


def policy_from_dict(name: str, body, index: int = 0, line: int = 0) -> Policy:
    if not isinstance(body, dict):
        raise PolicyError("policy body must be an object", name)
    for key in ("predicate", "action"):
        if key not in body or body[key] is None:
            raise MissingField(name, key)
        if not isinstance(body[key], str) or not body[key].strip():
            raise PolicyError(f"field {key!r} must be a non-empty string", name)
    timing = body.get("timing")
    if timing is not None and not isinstance(timing, str):
        raise PolicyError("field 'timing' must be a string", name)
    if timing is None or not timing.strip():
        log.warning("%s: no timing given, defaulting to always", name)
    bits = body.get("bits_protected", 1)
    if isinstance(bits, bool) or not isinstance(bits, int) or bits < 1:
        raise PolicyError("bits_protected must be a positive integer", name)
    level = body.get("level")
    if level is not None and str(level).lower() not in ("bus", "ip"):
        raise PolicyError("level must be 'bus' or 'ip'", name)
    syn = body.get("synthesizable")
    if syn is not None and not isinstance(syn, bool):
        raise PolicyError("synthesizable must be a boolean", name)
    return Policy(
        name=name,
        predicate_src=body["predicate"],
        action_src=body["action"],
        timing_src=timing,
        bits_protected=bits,
        attack_types=_attack_types(body.get("attack_types"), name),
        level=str(level).lower() if level is not None else None,
        synthesizable=syn,
        index=index,
        line=line,
    )


def _key_lines(text: str, names) -> dict[str, int]:
    lines = {}
    for name in names:
        offset = text.find(json.dumps(name))
        lines[name] = text.count("\n", 0, offset) + 1 if offset >= 0 else 0
    return lines


def parse_policies(path) -> list[Policy]:
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise MalformedJson(path, 1, "policy file must be a JSON object keyed by policy name")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:  # pragma: no cover - read_json already succeeded
        raise InputFileError(path, str(exc)) from None
    lines = _key_lines(text, doc)
    return [policy_from_dict(name, body, i, lines[name]) for i, (name, body) in enumerate(doc.items())]


def policies_from_dict(doc: dict) -> list[Policy]:
    return [policy_from_dict(name, body, i) for i, (name, body) in enumerate(doc.items())]
