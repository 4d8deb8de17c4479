"""Reader and writer for the line-oriented circuit text format.

Example::

    qubits 3
    h q[0]
    cx q[0], q[1]
    u1(-0.125) q[0]      // angles in radians, ``pi`` allowed
    measure q[0] -> c[0]

The parser collects every diagnostic in a single pass and raises
:class:`ParseError` holding all of them.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .core import MAX_QUBITS, Circuit, GateOp

GATE_IDS = {"h": "H", "x": "X", "y": "Y", "z": "Z", "s": "S", "sdg": "SDG", "u1": "U1", "cx": "CX"}

_TOKEN = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<arrow>->)"
    r"|(?P<sym>[()\[\],+-])"
    r"|(?P<ws>\s+)"
    r"|(?P<bad>.)"
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int


@dataclass(frozen=True)
class ParseDiagnostic:
    span: SourceSpan
    message: str
    kind: str  # "syntax" or "semantic"

    def __str__(self):
        return f"line {self.span.line}, column {self.span.column}: {self.kind} error: {self.message}"


class ParseError(ValueError):
    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


class _SyntaxIssue(Exception):
    def __init__(self, tok: _Tok | None, message: str, col: int):
        self.col = tok.col if tok is not None else col
        self.message = message


class _Line:
    """Token cursor over one source line."""

    def __init__(self, tokens: list[_Tok], end_col: int):
        self.toks = tokens
        self.i = 0
        self.end_col = end_col

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self, what: str) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise _SyntaxIssue(None, f"expected {what} but the line ended", self.end_col)
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next(repr(text))
        if tok.text != text:
            raise _SyntaxIssue(tok, f"expected {text!r}, found {tok.text!r}", tok.col)
        return tok

    def integer(self, what: str) -> tuple[int, _Tok]:
        tok = self.next(what)
        if tok.kind != "num" or not tok.text.isdigit():
            raise _SyntaxIssue(tok, f"expected {what}, found {tok.text!r}", tok.col)
        return int(tok.text), tok

    def done(self) -> bool:
        return self.i >= len(self.toks)


def _tokenize(text: str, col0: int = 1) -> tuple[list[_Tok], list[_Tok]]:
    toks, bad = [], []
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        if kind == "ws":
            continue
        tok = _Tok(kind, m.group(), m.start() + col0)
        (bad if kind == "bad" else toks).append(tok)
    return toks, bad


def _parse_angle(line: _Line) -> float:
    sign = 1.0
    tok = line.next("an angle")
    if tok.text in "+-" and tok.kind == "sym":
        sign = -1.0 if tok.text == "-" else 1.0
        tok = line.next("an angle")
    if tok.kind == "num":
        return sign * float(tok.text)
    if tok.kind == "name" and tok.text == "pi":
        return sign * math.pi
    raise _SyntaxIssue(tok, f"expected a number or 'pi', found {tok.text!r}", tok.col)


def _parse_qref(line: _Line, prefix: str = "q") -> tuple[int, _Tok]:
    tok = line.next(f"{prefix}[...]")
    if tok.text != prefix:
        raise _SyntaxIssue(tok, f"expected {prefix}[...], found {tok.text!r}", tok.col)
    line.expect("[")
    value, _ = line.integer("an index")
    line.expect("]")
    return value, tok


def parse_circuit(source: str) -> Circuit:
    """Parse circuit text; raises :class:`ParseError` listing every problem found."""
    diags: list[ParseDiagnostic] = []
    num_qubits: int | None = None
    qubits_line = 0
    gates: list[tuple[GateOp | None, int, int]] = []
    measures: list[tuple[int, int, int, int]] = []
    measured_at: dict[int, int] = {}
    cbits_seen: dict[int, int] = {}
    saw_gate = False

    def semantic(lineno, col, msg):
        diags.append(ParseDiagnostic(SourceSpan(lineno, col), msg, "semantic"))

    for lineno, raw in enumerate(source.splitlines(), start=1):
        code = raw.split("//", 1)[0]
        toks, bad = _tokenize(code)
        for b in bad:
            diags.append(ParseDiagnostic(SourceSpan(lineno, b.col), f"unexpected character {b.text!r}", "syntax"))
        if bad or not toks:
            continue
        line = _Line(toks, len(code.rstrip()) + 1)
        head = toks[0]
        try:
            line.next("a statement")
            if head.kind != "name":
                raise _SyntaxIssue(head, f"expected a statement, found {head.text!r}", head.col)

            if head.text == "qubits":
                n, ntok = line.integer("a qubit count")
                if not line.done():
                    extra = line.peek()
                    raise _SyntaxIssue(extra, f"unexpected {extra.text!r} after qubit count", extra.col)
                if num_qubits is not None:
                    semantic(lineno, head.col, f"duplicate 'qubits' declaration (first on line {qubits_line})")
                elif saw_gate:
                    semantic(lineno, head.col, "'qubits' must precede all gates")
                elif not 1 <= n <= MAX_QUBITS:
                    semantic(lineno, ntok.col, f"qubit count {n} outside 1..{MAX_QUBITS}")
                    num_qubits, qubits_line = max(1, min(n, MAX_QUBITS)), lineno
                else:
                    num_qubits, qubits_line = n, lineno
                continue

            if head.text == "measure":
                q, qtok = _parse_qref(line)
                line.expect("->")
                c, ctok = _parse_qref(line, "c")
                if not line.done():
                    extra = line.peek()
                    raise _SyntaxIssue(extra, f"unexpected {extra.text!r} after measurement", extra.col)
                if num_qubits is None:
                    semantic(lineno, head.col, "'measure' before the 'qubits' declaration")
                elif q >= num_qubits:
                    semantic(lineno, qtok.col, f"q[{q}] out of range (circuit has {num_qubits} qubits)")
                if c in cbits_seen:
                    semantic(lineno, ctok.col, f"c[{c}] already written on line {cbits_seen[c]}")
                else:
                    cbits_seen[c] = lineno
                measured_at.setdefault(q, lineno)
                measures.append((q, c, lineno, head.col))
                continue

            # gate statement
            saw_gate = True
            kind = GATE_IDS.get(head.text)
            theta = None
            if line.peek() is not None and line.peek().text == "(":
                line.next("(")
                theta = _parse_angle(line)
                line.expect(")")
            refs = [_parse_qref(line)]
            while not line.done():
                line.expect(",")
                refs.append(_parse_qref(line))

            if kind is None:
                semantic(lineno, head.col, f"unknown gate {head.text!r}")
                continue
            ok = True
            if kind == "U1" and theta is None:
                semantic(lineno, head.col, "u1 requires exactly one angle parameter")
                ok = False
            if kind != "U1" and theta is not None:
                semantic(lineno, head.col, f"{head.text!r} takes no parameter")
                ok = False
            want = 2 if kind == "CX" else 1
            if len(refs) != want:
                semantic(lineno, head.col, f"{head.text!r} takes {want} qubit(s), got {len(refs)}")
                ok = False
            if num_qubits is None:
                semantic(lineno, head.col, f"gate {head.text!r} before the 'qubits' declaration")
                ok = False
            else:
                for q, qtok in refs:
                    if q >= num_qubits:
                        semantic(lineno, qtok.col, f"q[{q}] out of range (circuit has {num_qubits} qubits)")
                        ok = False
            if len(refs) == 2 and refs[0][0] == refs[1][0]:
                semantic(lineno, refs[1][1].col, f"{head.text!r} control and target are both q[{refs[0][0]}]")
                ok = False
            for q, qtok in refs:
                if q in measured_at:
                    semantic(lineno, qtok.col,
                             f"gate {head.text!r} on q[{q}] after its measurement on line {measured_at[q]}")
                    ok = False
            gates.append((GateOp(kind, tuple(q for q, _ in refs), theta) if ok else None, lineno, head.col))
        except _SyntaxIssue as issue:
            diags.append(ParseDiagnostic(SourceSpan(lineno, issue.col), issue.message, "syntax"))

    if num_qubits is None and not diags:
        diags.append(ParseDiagnostic(SourceSpan(1, 1), "missing 'qubits' declaration", "semantic"))
    if diags:
        diags.sort(key=lambda d: (d.span.line, d.span.column))
        raise ParseError(diags)

    circuit = Circuit(num_qubits)
    circuit.ops = [op for op, _, _ in gates]
    circuit.measurements = [(q, c) for q, c, _, _ in measures]
    return circuit


def format_angle(theta: float) -> str:
    return format(theta, ".12g")


def serialize_circuit(circuit: Circuit) -> str:
    """Canonical text form; ``parse_circuit(serialize_circuit(c))`` rebuilds ``c``."""
    lines = [f"qubits {circuit.num_qubits}"]
    for op in circuit.ops:
        name = op.kind.lower()
        if op.kind == "U1":
            name += f"({format_angle(op.theta)})"
        lines.append(f"{name} " + ", ".join(f"q[{q}]" for q in op.targets))
    for q, c in circuit.measurements:
        lines.append(f"measure q[{q}] -> c[{c}]")
    return "\n".join(lines) + "\n"


def circuits_equivalent(a: Circuit, b: Circuit, angle_tol: float = 1e-11) -> bool:
    """Structural equality with U1 angles compared to ``angle_tol``.

    Serialized angles carry 12 significant digits, so ``pi`` survives a
    round trip only to about 1e-12.
    """
    if a.num_qubits != b.num_qubits or a.measurements != b.measurements or len(a.ops) != len(b.ops):
        return False
    for x, y in zip(a.ops, b.ops):
        if x.kind != y.kind or x.targets != y.targets:
            return False
        if x.theta is not None and abs(x.theta - y.theta) > angle_tol:
            return False
    return True
