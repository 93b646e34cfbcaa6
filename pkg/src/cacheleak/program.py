"""Mini-program model: a tiny imperative language over secret input bytes.

A program declares one secret input ``k`` of some number of bytes, a static
data layout of byte arrays, and a statement list of register assignments,
loads, stores and conditionals. Bounded ``for`` loops are unrolled while
parsing, so every program denotes a finite set of finite access traces.

Grammar (one construct per line is customary, but whitespace is free)::

    program fig2a;
    width 32;
    input k : 1 bytes;
    array p : 256 @ 0x000;
    array s : 4 @ 0x400 = { 1, 2, 3, 4 };
    reg r1 = k[0];
    load p[r1];
    load r2 = s[r1 & 3];
    store q[255 - r1];
    if (r1 < 128) { ... } else { ... }
    for i in 0..4 { ... }
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterator, Optional, Union

DEFAULT_WIDTH = 32
MAX_UNROLL = 4096

# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class InputRef:
    index: int


@dataclass(frozen=True)
class RegRef:
    name: str


@dataclass(frozen=True)
class AddrOf:
    obj: str


@dataclass(frozen=True)
class BinExpr:
    op: str  # one of + - * << >> & | ^
    lhs: "Expr"
    rhs: "Expr"


Expr = Union[Num, InputRef, RegRef, AddrOf, BinExpr]


@dataclass(frozen=True)
class Compare:
    op: str  # one of == != < <= > >=
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class LogicAnd:
    lhs: "Cond"
    rhs: "Cond"


@dataclass(frozen=True)
class LogicOr:
    lhs: "Cond"
    rhs: "Cond"


@dataclass(frozen=True)
class LogicNot:
    arg: "Cond"


Cond = Union[Compare, LogicAnd, LogicOr, LogicNot]


@dataclass(frozen=True)
class MemRef:
    obj: str
    index: Expr


@dataclass(frozen=True)
class Assign:
    reg: str
    value: Expr


@dataclass(frozen=True)
class Load:
    target: Optional[str]
    ref: MemRef
    sid: int


@dataclass(frozen=True)
class Store:
    ref: MemRef
    value: Optional[Expr]
    sid: int


@dataclass(frozen=True)
class If:
    cond: Cond
    then: tuple["Statement", ...]
    orelse: tuple["Statement", ...] = ()


Statement = Union[Assign, Load, Store, If]


@dataclass(frozen=True)
class DataObject:
    name: str
    base: int
    size: int
    init: tuple[int, ...] = ()

    @property
    def end(self) -> int:
        return self.base + self.size

    def contents(self) -> tuple[int, ...]:
        return self.init + (0,) * (self.size - len(self.init))


@dataclass(frozen=True)
class MiniProgram:
    name: str
    input_name: str
    input_bytes: int
    data_objects: tuple[DataObject, ...]
    statements: tuple[Statement, ...]
    addr_width: int = DEFAULT_WIDTH
    _objects: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_objects", {o.name: o for o in self.data_objects})

    @property
    def input_bits(self) -> int:
        return 8 * self.input_bytes

    def obj(self, name: str) -> DataObject:
        return self._objects[name]

    def memory_statements(self) -> list[Union[Load, Store]]:
        return [s for s in walk(self.statements) if isinstance(s, (Load, Store))]


def walk(stmts: tuple[Statement, ...]) -> Iterator[Statement]:
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from walk(s.then)
            yield from walk(s.orelse)


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class ProgramError(Exception):
    """Raised for malformed program text; carries a 1-based position."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")


class ProgramSyntaxError(ProgramError):
    pass


class ProgramSemanticError(ProgramError):
    pass


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>(\#|//)[^\n]*)
  | (?P<num>0[xX][0-9a-fA-F]+|\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\.\.|<<|>>|==|!=|<=|>=|&&|\|\||[{}()\[\];:,=@&|^+\-*<>!])
    """,
    re.VERBOSE,
)

KEYWORDS = {"program", "width", "input", "bytes", "array", "reg", "load", "store",
            "if", "else", "for", "in", "while", "loop"}


@dataclass(frozen=True)
class Token:
    kind: str  # num | ident | kw | op | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ProgramSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        col = pos - line_start + 1
        if kind == "ident" and tok in KEYWORDS:
            kind = "kw"
        if kind not in ("ws", "comment"):
            out.append(Token(kind, tok, line, col))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_BIN_LEVELS = [("|",), ("^",), ("&",), ("<<", ">>"), ("+", "-"), ("*",)]
_CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.name: Optional[str] = None
        self.width: Optional[int] = None
        self.input: Optional[tuple[str, int, Token]] = None
        self.arrays: list[tuple[DataObject, Token]] = []
        self.sid = 0

    # -- token helpers -----------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[Token] = None) -> ProgramSyntaxError:
        t = tok or self.tok
        return ProgramSyntaxError(msg, t.line, t.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def number(self) -> int:
        if self.tok.kind != "num":
            raise self.error(f"expected number, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return int(t.text, 0)

    # -- top level -----------------------------------------------------------
    def parse(self) -> list:
        stmts: list = []
        while self.tok.kind != "eof":
            if self.at("program"):
                self.i += 1
                self.name = self.ident().text
                self.expect(";")
            elif self.at("width"):
                t = self.tok
                self.i += 1
                w = self.number()
                if not 8 <= w <= 64:
                    raise self.error("address width must be between 8 and 64 bits", t)
                self.width = w
                self.expect(";")
            elif self.at("input"):
                t = self.tok
                if self.input is not None:
                    raise ProgramSemanticError("duplicate input declaration", t.line, t.col)
                self.i += 1
                name = self.ident().text
                self.expect(":")
                n = self.number()
                self.expect("bytes")
                self.expect(";")
                if n < 1:
                    raise ProgramSemanticError("input must have at least one byte", t.line, t.col)
                self.input = (name, n, t)
            elif self.at("array"):
                self.arrays.append(self.array_decl())
            else:
                stmts.extend(self.statement())
        return stmts

    def array_decl(self) -> tuple[DataObject, Token]:
        t = self.expect("array")
        name = self.ident().text
        self.expect(":")
        size = self.number()
        self.expect("@")
        base = self.number()
        init: list[int] = []
        if self.accept("="):
            self.expect("{")
            if not self.at("}"):
                init.append(self.number())
                while self.accept(","):
                    if self.at("}"):
                        break
                    init.append(self.number())
            self.expect("}")
        self.expect(";")
        if size < 1:
            raise ProgramSemanticError(f"array {name} must have positive size", t.line, t.col)
        if len(init) > size:
            raise ProgramSemanticError(f"array {name} has more initializers than elements", t.line, t.col)
        if any(not 0 <= v <= 0xFF for v in init):
            raise ProgramSemanticError(f"array {name} initializers must be bytes", t.line, t.col)
        return DataObject(name, base, size, tuple(init)), t

    # -- statements ----------------------------------------------------------
    def block(self) -> list:
        self.expect("{")
        out: list = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated block")
            out.extend(self.statement())
        self.expect("}")
        return out

    def statement(self) -> list:
        t = self.tok
        if self.accept("reg"):
            return [self.assignment()]
        if t.kind == "ident" and self.toks[self.i + 1].text == "=":
            return [self.assignment()]
        if self.accept("load"):
            target = None
            if self.tok.kind == "ident" and self.toks[self.i + 1].text == "=":
                target = self.ident().text
                self.expect("=")
            ref = self.memref()
            self.expect(";")
            self.sid += 1
            return [("load", target, ref, self.sid, t)]
        if self.accept("store"):
            ref = self.memref()
            value = self.expr() if self.accept("=") else None
            self.expect(";")
            self.sid += 1
            return [("store", ref, value, self.sid, t)]
        if self.accept("if"):
            self.expect("(")
            cond = self.cond()
            self.expect(")")
            then = self.block()
            orelse: list = []
            if self.accept("else"):
                orelse = self.statement() if self.at("if") else self.block()
            return [("if", cond, then, orelse, t)]
        if self.at("while") or self.at("loop"):
            raise ProgramSemanticError(
                "unbounded loop: only 'for i in a..b' loops with literal bounds are allowed",
                t.line, t.col)
        if self.accept("for"):
            var = self.ident()
            self.expect("in")
            lo = self.number()
            self.expect("..")
            if self.tok.kind != "num":
                raise ProgramSemanticError(
                    "unbounded loop: loop bounds must be integer literals", self.tok.line, self.tok.col)
            hi = self.number()
            if hi - lo > MAX_UNROLL:
                raise ProgramSemanticError(f"loop unrolls to more than {MAX_UNROLL} iterations",
                                           t.line, t.col)
            start = self.i
            body: list = []
            for v in range(lo, hi):
                self.i = start
                body.append(("assign", var.text, Num(v), var))
                body.extend(self.block())
            if hi <= lo:
                sid = self.sid
                self.i = start
                self.block()
                self.sid = sid
            return body
        raise self.error(f"unexpected {t.text or 'end of input'!r}")

    def assignment(self) -> tuple:
        t = self.ident()
        self.expect("=")
        value = self.expr()
        self.expect(";")
        return ("assign", t.text, value, t)

    def memref(self) -> tuple[str, Expr, Token]:
        t = self.ident()
        self.expect("[")
        index = self.expr()
        self.expect("]")
        return (t.text, index, t)

    # -- expressions ---------------------------------------------------------
    def expr(self, level: int = 0) -> Expr:
        if level == len(_BIN_LEVELS):
            return self.primary()
        lhs = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in _BIN_LEVELS[level]:
            op = self.tok.text
            self.i += 1
            lhs = BinExpr(op, lhs, self.expr(level + 1))
        return lhs

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            return Num(self.number())
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("-"):
            return BinExpr("-", Num(0), self.primary())
        if self.accept("&"):
            name = self.ident()
            return AddrOf(name.text)
        if t.kind == "ident":
            self.i += 1
            if self.accept("["):
                idx_tok = self.tok
                idx = self.number()
                self.expect("]")
                return ("inref", t.text, idx, idx_tok)  # resolved in _build
            return ("regref", t.text, t)
        raise self.error(f"expected expression, found {t.text or 'end of input'!r}")

    def cond(self) -> Cond:
        lhs = self.cond_and()
        while self.accept("||"):
            lhs = LogicOr(lhs, self.cond_and())
        return lhs

    def cond_and(self) -> Cond:
        lhs = self.cond_atom()
        while self.accept("&&"):
            lhs = LogicAnd(lhs, self.cond_atom())
        return lhs

    def cond_atom(self) -> Cond:
        if self.accept("!"):
            return LogicNot(self.cond_atom())
        if self.at("("):
            save = self.i
            try:
                return self.comparison()
            except ProgramError:
                self.i = save
            self.expect("(")
            c = self.cond()
            self.expect(")")
            return c
        return self.comparison()

    def comparison(self) -> Compare:
        lhs = self.expr()
        if not (self.tok.kind == "op" and self.tok.text in _CMP_OPS):
            raise self.error(f"expected comparison operator, found {self.tok.text or 'end of input'!r}")
        op = self.tok.text
        self.i += 1
        return Compare(op, lhs, self.expr())


class _Builder:
    """Resolves names and checks semantic invariants on the raw parse."""

    def __init__(self, parser: _Parser, default_name: str):
        self.p = parser
        if parser.input is None:
            raise ProgramSemanticError("missing 'input <name> : <n> bytes;' declaration")
        self.input_name, self.input_bytes, _ = parser.input
        self.width = parser.width or DEFAULT_WIDTH
        self.name = parser.name or default_name
        self.objects: dict[str, DataObject] = {}
        for obj, t in parser.arrays:
            if obj.name in self.objects or obj.name == self.input_name:
                raise ProgramSemanticError(f"duplicate declaration of {obj.name}", t.line, t.col)
            if obj.end > (1 << self.width):
                raise ProgramSemanticError(
                    f"array {obj.name} exceeds the {self.width}-bit address space", t.line, t.col)
            for other in self.objects.values():
                if obj.base < other.end and other.base < obj.end:
                    raise ProgramSemanticError(
                        f"array {obj.name} overlaps array {other.name}", t.line, t.col)
            self.objects[obj.name] = obj

    def build(self, raw: list) -> MiniProgram:
        stmts, _ = self.stmts(raw, frozenset())
        objs = tuple(sorted(self.objects.values(), key=lambda o: o.base))
        return MiniProgram(self.name, self.input_name, self.input_bytes, objs,
                           stmts, self.width)

    def stmts(self, raw: list, defined: frozenset[str]) -> tuple[tuple, frozenset[str]]:
        out = []
        for item in raw:
            kind = item[0]
            if kind == "assign":
                _, reg, value, t = item
                if reg in self.objects or reg == self.input_name:
                    raise ProgramSemanticError(f"cannot assign to {reg}", t.line, t.col)
                out.append(Assign(reg, self.expr(value, defined)))
                defined = defined | {reg}
            elif kind == "load":
                _, target, ref, sid, t = item
                out.append(Load(target, self.memref(ref, defined), sid))
                if target is not None:
                    if target in self.objects or target == self.input_name:
                        raise ProgramSemanticError(f"cannot assign to {target}", t.line, t.col)
                    defined = defined | {target}
            elif kind == "store":
                _, ref, value, sid, t = item
                v = self.expr(value, defined) if value is not None else None
                out.append(Store(self.memref(ref, defined), v, sid))
            elif kind == "if":
                _, cond, then, orelse, t = item
                c = self.cond(cond, defined)
                then_s, then_d = self.stmts(then, defined)
                else_s, else_d = self.stmts(orelse, defined)
                out.append(If(c, then_s, else_s))
                defined = then_d & else_d
            else:  # pragma: no cover - parser only produces the kinds above
                raise AssertionError(kind)
        return tuple(out), defined

    def memref(self, ref: tuple, defined: frozenset[str]) -> MemRef:
        name, index, t = ref
        if name not in self.objects:
            raise ProgramSemanticError(f"undeclared array {name}", t.line, t.col)
        return MemRef(name, self.expr(index, defined))

    def expr(self, e, defined: frozenset[str]) -> Expr:
        if isinstance(e, tuple):
            if e[0] == "inref":
                _, name, idx, t = e
                if name != self.input_name:
                    if name in self.objects:
                        raise ProgramSemanticError(
                            f"array {name} can only be read with a load statement", t.line, t.col)
                    raise ProgramSemanticError(f"undeclared input {name}", t.line, t.col)
                if not 0 <= idx < self.input_bytes:
                    raise ProgramSemanticError(
                        f"input index {idx} out of range for {self.input_bytes} bytes", t.line, t.col)
                return InputRef(idx)
            _, name, t = e
            if name not in defined:
                raise ProgramSemanticError(f"undeclared identifier {name}", t.line, t.col)
            return RegRef(name)
        if isinstance(e, AddrOf):
            if e.obj not in self.objects:
                raise ProgramSemanticError(f"undeclared array {e.obj}")
            return e
        if isinstance(e, BinExpr):
            return BinExpr(e.op, self.expr(e.lhs, defined), self.expr(e.rhs, defined))
        return e

    def cond(self, c, defined: frozenset[str]) -> Cond:
        if isinstance(c, Compare):
            return Compare(c.op, self.expr(c.lhs, defined), self.expr(c.rhs, defined))
        if isinstance(c, LogicAnd):
            return LogicAnd(self.cond(c.lhs, defined), self.cond(c.rhs, defined))
        if isinstance(c, LogicOr):
            return LogicOr(self.cond(c.lhs, defined), self.cond(c.rhs, defined))
        return LogicNot(self.cond(c.arg, defined))


def parse_program(text: str, name: str = "main") -> MiniProgram:
    """Parse and validate program text.

    Raises ``ProgramSyntaxError`` or ``ProgramSemanticError`` with a position.
    """
    p = _Parser(text)
    raw = p.parse()
    return _Builder(p, name).build(raw)


def load_program(path) -> MiniProgram:
    from pathlib import Path

    path = Path(path)
    return parse_program(path.read_text(), name=path.stem)


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------

_PREC = {op: i for i, ops in enumerate(_BIN_LEVELS) for op in ops}


def format_expr(e: Expr, input_name: str = "k", top: bool = True) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, InputRef):
        return f"{input_name}[{e.index}]"
    if isinstance(e, RegRef):
        return e.name
    if isinstance(e, AddrOf):
        return f"&{e.obj}"
    s = f"{format_expr(e.lhs, input_name, False)} {e.op} {format_expr(e.rhs, input_name, False)}"
    return s if top else f"({s})"


def format_cond(c: Cond, input_name: str = "k") -> str:
    if isinstance(c, Compare):
        return f"{format_expr(c.lhs, input_name)} {c.op} {format_expr(c.rhs, input_name)}"
    if isinstance(c, LogicAnd):
        return f"({format_cond(c.lhs, input_name)}) && ({format_cond(c.rhs, input_name)})"
    if isinstance(c, LogicOr):
        return f"({format_cond(c.lhs, input_name)}) || ({format_cond(c.rhs, input_name)})"
    return f"!({format_cond(c.arg, input_name)})"


def _format_stmts(stmts: tuple[Statement, ...], k: str, indent: int, out: list[str]) -> None:
    pad = "    " * indent
    for s in stmts:
        if isinstance(s, Assign):
            out.append(f"{pad}reg {s.reg} = {format_expr(s.value, k)};")
        elif isinstance(s, Load):
            target = f"{s.target} = " if s.target else ""
            out.append(f"{pad}load {target}{s.ref.obj}[{format_expr(s.ref.index, k)}];")
        elif isinstance(s, Store):
            value = f" = {format_expr(s.value, k)}" if s.value is not None else ""
            out.append(f"{pad}store {s.ref.obj}[{format_expr(s.ref.index, k)}]{value};")
        else:
            out.append(f"{pad}if ({format_cond(s.cond, k)}) {{")
            _format_stmts(s.then, k, indent + 1, out)
            if s.orelse:
                out.append(f"{pad}}} else {{")
                _format_stmts(s.orelse, k, indent + 1, out)
            out.append(f"{pad}}}")


def format_program(prog: MiniProgram) -> str:
    """Canonical text form; ``parse_program(format_program(p)) == p``."""
    out = [f"program {prog.name};", f"width {prog.addr_width};",
           f"input {prog.input_name} : {prog.input_bytes} bytes;"]
    for o in prog.data_objects:
        init = ""
        if o.init:
            init = " = { " + ", ".join(f"0x{v:02x}" for v in o.init) + " }"
        out.append(f"array {o.name} : {o.size} @ 0x{o.base:03x}{init};")
    _format_stmts(prog.statements, prog.input_name, 0, out)
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Bundled programs
# ---------------------------------------------------------------------------

BUNDLED = ("fig2a", "fig2b", "fig2c", "toysbox")


def bundled_path(name: str):
    stem = name[:-5] if name.endswith(".prog") else name
    if stem not in BUNDLED:
        raise KeyError(f"no bundled program {name!r}")
    return resources.files("cacheleak") / "programs" / f"{stem}.prog"


def bundled(name: str) -> MiniProgram:
    stem = name[:-5] if name.endswith(".prog") else name
    return parse_program(bundled_path(stem).read_text(), name=stem)


def layout_fig2(cache) -> tuple[MiniProgram, MiniProgram, MiniProgram]:
    """The three bundled two-array fragments, checked against their target cache.

    ``p`` sits at 0x000 and ``q`` at 0x101, so with 512 B direct-mapped and
    32-byte lines the only element of ``q`` in set 0 is ``q[255]`` (0x200),
    under a different tag than ``p[0..31]``.
    """
    from .cacheconfig import CacheConfig

    if cache != CacheConfig.from_sizes(512, 32, 1):
        raise ValueError("the two-array layout is defined for the 512 B direct-mapped cache with 32 B lines")
    return bundled("fig2a"), bundled("fig2b"), bundled("fig2c")
