"""Reader and writer for the OpenQASM 2.0 subset the toolkit exchanges.

Accepted statements: the ``OPENQASM 2.0;`` header, ``include`` lines (ignored),
one ``qreg``, at most one ``creg``, applications of the gates in
:class:`~qmlre.circuit.GateKind`, ``barrier`` and ``measure q[i] -> c[j];``.
Angle arguments are arithmetic over decimal literals and ``pi``; a bare
identifier is read as a symbolic :class:`~qmlre.circuit.Parameter`.

Metadata that QASM 2 cannot express travels in comment lines::

    // global_phase: <angle>
    // region <name> <start> <stop>
    // regions: none

Without region comments the first barrier closes a ``state_prep`` region
(the barrier itself is the last gate of the region).
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterator, NamedTuple

from .circuit import Circuit, CircuitError, Gate, GateKind, Parameter, Region

__all__ = [
    "QasmError",
    "QasmSyntaxError",
    "QasmUnknownGateError",
    "QasmQubitRangeError",
    "parse",
    "emit",
    "format_angle",
    "load",
    "dump",
]


class QasmError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        where = f"line {line}, col {col}: " if line else ""
        super().__init__(where + message)


class QasmSyntaxError(QasmError):
    pass


class QasmUnknownGateError(QasmError):
    pass


class QasmQubitRangeError(QasmError):
    pass


class _Tok(NamedTuple):
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<sym>[()\[\],;+\-*/])
    """,
    re.VERBOSE,
)

_META_PHASE = re.compile(r"//\s*global_phase:\s*(\S+)\s*$")
_META_REGION = re.compile(r"//\s*region\s+(\S+)\s+(\d+)\s+(\d+)\s*$")
_META_NOREGIONS = re.compile(r"//\s*regions:\s*none\s*$")


def _tokenize(text: str) -> tuple[list[_Tok], list[_Tok]]:
    """Split into significant tokens and comment tokens."""
    toks: list[_Tok] = []
    comments: list[_Tok] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QasmSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "comment":
            comments.append(_Tok(kind, m.group(), line, col))
        elif kind != "ws":
            toks.append(_Tok(kind, m.group(), line, col))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks, comments


_GATES = {k.value: k for k in GateKind}


class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.i = 0
        self.qreg: tuple[str, int] | None = None
        self.creg: tuple[str, int] | None = None
        self.gates: list[Gate] = []

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg: str, tok: _Tok | None = None) -> QasmSyntaxError:
        tok = tok or self.peek()
        return QasmSyntaxError(msg, tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text or t.kind in ("string",):
            shown = t.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}", t)
        return t

    def expect_kind(self, kind: str, what: str) -> _Tok:
        t = self.next()
        if t.kind != kind:
            raise self.error(f"expected {what}, found {t.text or 'end of input'!r}", t)
        return t

    def integer(self) -> int:
        t = self.expect_kind("number", "integer")
        if not t.text.isdigit():
            raise self.error(f"expected integer, found {t.text!r}", t)
        return int(t.text)

    # expression grammar: sum := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
    # unary := '-' unary | '+' unary | atom; atom := number | pi | '(' sum ')'
    def expression(self):
        t = self.peek()
        if t.kind == "id" and t.text != "pi" and self.toks[self.i + 1].text == ")":
            self.next()
            return Parameter(t.text)
        return self.sum()

    def sum(self) -> float:
        value = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "sym":
            op = self.next().text
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> float:
        value = self.unary()
        while self.peek().text in ("*", "/") and self.peek().kind == "sym":
            op_tok = self.next()
            rhs = self.unary()
            if op_tok.text == "*":
                value = value * rhs
            else:
                if rhs == 0:
                    raise self.error("division by zero", op_tok)
                value = value / rhs
        return value

    def unary(self) -> float:
        t = self.peek()
        if t.kind == "sym" and t.text in ("-", "+"):
            self.next()
            v = self.unary()
            return -v if t.text == "-" else v
        return self.atom()

    def atom(self) -> float:
        t = self.next()
        if t.kind == "number":
            return float(t.text)
        if t.kind == "id" and t.text == "pi":
            return math.pi
        if t.text == "(" and t.kind == "sym":
            v = self.sum()
            self.expect(")")
            return v
        raise self.error(f"expected angle expression, found {t.text or 'end of input'!r}", t)

    def register_ref(self, reg: tuple[str, int] | None, what: str, allow_whole: bool) -> list[int]:
        name_tok = self.expect_kind("id", f"{what} register")
        if reg is None or name_tok.text != reg[0]:
            raise self.error(f"undeclared {what} register {name_tok.text!r}", name_tok)
        if self.peek().text != "[":
            if not allow_whole:
                raise self.error(f"expected '[' after {name_tok.text}")
            return list(range(reg[1]))
        self.next()
        idx_tok = self.peek()
        idx = self.integer()
        self.expect("]")
        if idx >= reg[1]:
            raise QasmQubitRangeError(
                f"index {idx} out of range for {name_tok.text}[{reg[1]}]", idx_tok.line, idx_tok.col)
        return [idx]

    def declaration(self, kw: _Tok) -> None:
        name = self.expect_kind("id", "register name").text
        self.expect("[")
        size = self.integer()
        self.expect("]")
        self.expect(";")
        if size < 1:
            raise self.error("register size must be positive", kw)
        if kw.text == "qreg":
            if self.qreg is not None:
                raise self.error("only one qreg is supported", kw)
            self.qreg = (name, size)
        else:
            if self.creg is not None:
                raise self.error("only one creg is supported", kw)
            self.creg = (name, size)

    def statement(self) -> None:
        t = self.next()
        if t.kind != "id":
            raise self.error(f"unexpected {t.text!r}", t)
        if t.text == "include":
            self.expect_kind("string", "file name")
            self.expect(";")
            return
        if t.text in ("qreg", "creg"):
            self.declaration(t)
            return
        kind = _GATES.get(t.text)
        if kind is None:
            raise QasmUnknownGateError(f"unknown gate {t.text!r}", t.line, t.col)
        if self.qreg is None:
            raise self.error("gate before qreg declaration", t)
        if kind is GateKind.MEASURE:
            (q,) = self.register_ref(self.qreg, "quantum", False)
            self.expect_kind("arrow", "'->'")
            self.register_ref(self.creg, "classical", False)
            self.expect(";")
            self.gates.append(Gate(kind, (q,)))
            return
        angle = None
        if self.peek().text == "(":
            paren = self.next()
            if not kind.has_angle:
                raise self.error(f"{t.text} takes no angle", paren)
            angle = self.expression()
            self.expect(")")
        elif kind.has_angle:
            raise self.error(f"{t.text} requires an angle", self.peek())
        qubits = self.register_ref(self.qreg, "quantum", kind is GateKind.BARRIER)
        while self.peek().text == ",":
            self.next()
            qubits += self.register_ref(self.qreg, "quantum", kind is GateKind.BARRIER)
        self.expect(";")
        try:
            self.gates.append(Gate(kind, tuple(qubits), angle))
        except CircuitError as exc:
            raise QasmSyntaxError(str(exc), t.line, t.col) from None

    def program(self) -> None:
        head = self.next()
        if head.text != "OPENQASM":
            raise self.error("file must start with 'OPENQASM 2.0;'", head)
        ver = self.expect_kind("number", "version")
        if ver.text not in ("2.0", "2"):
            raise self.error(f"unsupported OpenQASM version {ver.text}", ver)
        self.expect(";")
        while self.peek().kind != "eof":
            self.statement()
        if self.qreg is None:
            raise self.error("missing qreg declaration")


def parse(text: str) -> Circuit:
    toks, comments = _tokenize(text)
    p = _Parser(toks)
    p.program()
    phase = 0.0
    regions: list[Region] = []
    explicit_none = False
    for c in comments:
        if m := _META_PHASE.match(c.text):
            phase = _Parser(_tokenize(m.group(1))[0]).sum()
        elif m := _META_REGION.match(c.text):
            regions.append(Region(m.group(1), int(m.group(2)), int(m.group(3))))
        elif _META_NOREGIONS.match(c.text):
            explicit_none = True
    if not regions and not explicit_none:
        for i, g in enumerate(p.gates):
            if g.kind is GateKind.BARRIER:
                regions.append(Region("state_prep", 0, i + 1))
                break
    try:
        return Circuit(p.qreg[1], tuple(p.gates), phase, tuple(regions))
    except CircuitError as exc:
        raise QasmSyntaxError(str(exc)) from None


_PI_DENOMS = (1, 2, 3, 4, 6, 8, 12, 16)


def _eval_pi_fraction(num: int, den: int) -> float:
    # Mirrors the parser's left-to-right evaluation of "num*pi/den".
    value = math.pi if abs(num) == 1 else abs(num) * math.pi
    if den != 1:
        value = value / den
    return -value if num < 0 else value


def _pi_fraction_text(num: int, den: int) -> str:
    head = "pi" if abs(num) == 1 else f"{abs(num)}*pi"
    text = head if den == 1 else f"{head}/{den}"
    return "-" + text if num < 0 else text


def format_angle(x: float) -> str:
    """Exact ``p*pi/q`` text when it evaluates to ``x`` bit-for-bit, else 17 significant digits."""
    x = float(x)
    if x != 0.0 and abs(x) <= 64 * math.pi:
        frac = Fraction(x / math.pi).limit_denominator(16)
        if frac.denominator in _PI_DENOMS and frac.numerator != 0:
            if _eval_pi_fraction(frac.numerator, frac.denominator) == x:
                return _pi_fraction_text(frac.numerator, frac.denominator)
    return format(x, ".17g")


def _fmt_arg(angle) -> str:
    return angle.name if isinstance(angle, Parameter) else format_angle(angle)


def _lines(c: Circuit) -> Iterator[str]:
    yield "OPENQASM 2.0;"
    yield 'include "qelib1.inc";'
    if c.global_phase != 0.0:
        yield f"// global_phase: {format_angle(c.global_phase)}"
    if c.regions:
        for r in c.regions:
            yield f"// region {r.name} {r.start} {r.stop}"
    elif any(g.kind is GateKind.BARRIER for g in c.gates):
        yield "// regions: none"
    yield f"qreg q[{c.n_qubits}];"
    if any(g.kind is GateKind.MEASURE for g in c.gates):
        yield f"creg c[{c.n_qubits}];"
    for g in c.gates:
        if g.kind is GateKind.MEASURE:
            yield f"measure q[{g.qubits[0]}] -> c[{g.qubits[0]}];"
            continue
        args = ",".join(f"q[{q}]" for q in g.qubits)
        if g.angle is None:
            yield f"{g.kind.value} {args};"
        else:
            yield f"{g.kind.value}({_fmt_arg(g.angle)}) {args};"


def emit(c: Circuit) -> str:
    """Deterministic QASM text; the ``trainable`` flag is not representable and is dropped."""
    return "\n".join(_lines(c)) + "\n"


def load(path) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def dump(c: Circuit, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(emit(c))
