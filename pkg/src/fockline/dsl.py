"""The ``.opt`` circuit format: parsing, validation, binding and printing.

Grammar (one statement per line, ``#`` starts a comment)::

    paths <label>(,<label>)*
    param <name> [= <number>]
    source photon path=<p> h=<expr> v=<expr>
    source coherent path=<p> alpha=<expr> pol=<+45|-45|H|V>
    source vacuum path=<p>
    bs eta=<expr> in=<p>,<p|-> out=<p>,<p>
    pbs in=<p>,<p|-> out=<p>,<p>
    pr theta=<expr> path=<p>
    hwp delta=<expr> path=<p>
    basis <RL|DIAG> path=<p>

``-`` is a vacuum in-port.  Out-port labels that were never declared are
declared by the element that produces them.  Expressions may contain
spaces only inside parentheses.
"""

from __future__ import annotations

import math
import re
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Union

from .elements import BASIS_TARGETS, Element
from .errors import (BindError, CircuitSyntaxError, DomainError, EtaOutOfRange,
                     NormalizationError, UnboundParam)
from .expr import (RESERVED, Expr, _num_text, eval_expr, eval_real, free_names,
                   parse_expr, to_text)

LABEL_RE = re.compile(r"[A-Za-z0-9_]+\Z")
PARAM_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
SIGNED_NUMBER_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z")
POLARIZATIONS = ("+45", "-45", "H", "V")
NORM_TOL = 1e-9
ETA_SLACK = 1e-12

KEYWORDS = frozenset({"paths", "param", "source", "bs", "pbs", "pr", "hwp", "basis"})


@dataclass(frozen=True)
class Param:
    name: str
    default: float | None = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class PhotonSource:
    path: str
    h: Expr
    v: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class CoherentSource:
    path: str
    alpha: Expr
    pol: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class VacuumSource:
    path: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BS:
    eta: Expr
    ins: tuple[str, str | None]
    outs: tuple[str, str]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class PBS:
    ins: tuple[str, str | None]
    outs: tuple[str, str]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class PR:
    theta: Expr
    path: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class HWP:
    delta: Expr
    path: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Basis:
    target: str
    path: str
    line: int = field(default=0, compare=False)


Source = Union[PhotonSource, CoherentSource, VacuumSource]
ElementSpec = Union[BS, PBS, PR, HWP, Basis]


def element_ports(el: ElementSpec) -> tuple[tuple[str | None, ...], tuple[str, ...]]:
    if isinstance(el, (BS, PBS)):
        return el.ins, el.outs
    return (el.path,), (el.path,)


def element_exprs(el: ElementSpec) -> list[tuple[str, Expr]]:
    if isinstance(el, BS):
        return [("eta", el.eta)]
    if isinstance(el, PR):
        return [("theta", el.theta)]
    if isinstance(el, HWP):
        return [("delta", el.delta)]
    return []


def source_exprs(src: Source) -> list[tuple[str, Expr]]:
    if isinstance(src, PhotonSource):
        return [("h", src.h), ("v", src.v)]
    if isinstance(src, CoherentSource):
        return [("alpha", src.alpha)]
    return []


@dataclass(frozen=True)
class Circuit:
    """Parsed circuit; equality is structural (line numbers ignored)."""

    paths: tuple[str, ...] = ()
    params: tuple[Param, ...] = ()
    sources: tuple[Source, ...] = ()
    elements: tuple[ElementSpec, ...] = ()

    def all_paths(self) -> tuple[str, ...]:
        """Declared labels followed by auto-declared out-port labels, in order of appearance."""
        seen = list(self.paths)
        for el in self.elements:
            for q in element_ports(el)[1]:
                if q not in seen:
                    seen.append(q)
        return tuple(seen)

    def defaults(self) -> dict[str, float]:
        return {p.name: p.default for p in self.params if p.default is not None}


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


# parsing

def _words(text: str) -> list[tuple[str, int]]:
    """Split on blanks outside parentheses; returns (word, 1-based column)."""
    words: list[tuple[str, int]] = []
    start, depth = None, 0
    for i, ch in enumerate(text):
        if ch in " \t" and depth <= 0:
            if start is not None:
                words.append((text[start:i], start + 1))
                start, depth = None, 0
            continue
        if start is None:
            start = i
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
    if start is not None:
        words.append((text[start:], start + 1))
    return words


class _LineParser:
    def __init__(self, text: str, lineno: int):
        self.text = text
        self.lineno = lineno
        self.words = _words(text)

    def error(self, message: str, column: int, expected=frozenset()) -> CircuitSyntaxError:
        return CircuitSyntaxError(message, self.lineno, column, expected)

    def end_column(self) -> int:
        return len(self.text.rstrip(" \t")) + 1

    def keyvals(self, words: list[tuple[str, int]], allowed: tuple[str, ...]) -> dict[str, tuple[str, int]]:
        """Parse ``key=value`` words; every allowed key is required exactly once."""
        out: dict[str, tuple[str, int]] = {}
        for word, col in words:
            key, eq, value = word.partition("=")
            if key not in allowed:
                missing = [k for k in allowed if k not in out]
                raise self.error(f"unexpected {word!r}", col, {f"{k}=" for k in missing} or {"<end of line>"})
            if not eq:
                raise self.error(f"expected '=' after {key!r}", col + len(key), {"="})
            if key in out:
                raise self.error(f"duplicate argument {key!r}", col)
            if not value:
                raise self.error(f"empty value for {key!r}", col + len(key) + 1, {"<value>"})
            out[key] = (value, col + len(key) + 1)
        for k in allowed:
            if k not in out:
                raise self.error(f"missing argument {k}=", self.end_column(), {f"{k}="})
        return out

    def label(self, text: str, col: int) -> str:
        if not LABEL_RE.match(text):
            raise self.error(f"invalid path label {text!r}", col, {"<label>"})
        return text

    def expr(self, text: str, col: int) -> Expr:
        return parse_expr(text, self.lineno, col)

    def ports(self, text: str, col: int, vacuum_ok: bool) -> tuple:
        parts = text.split(",")
        if len(parts) != 2:
            raise self.error(f"expected two comma-separated ports, got {text!r}", col, {"<p>,<p>"})
        first, second = parts
        p1 = self.label(first, col)
        if vacuum_ok and second == "-":
            return (p1, None)
        return (p1, self.label(second, col + len(first) + 1))

    def parse(self):
        if not self.words:
            return None
        head, hcol = self.words[0]
        rest = self.words[1:]
        if head == "paths":
            return self.parse_paths(hcol)
        if head == "param":
            return self.parse_param(hcol)
        if head == "source":
            if not rest:
                raise self.error("missing source kind", self.end_column(), {"photon", "coherent", "vacuum"})
            kind, kcol = rest[0]
            args = rest[1:]
            if kind == "photon":
                kv = self.keyvals(args, ("path", "h", "v"))
                return PhotonSource(self.label(*kv["path"]), self.expr(*kv["h"]),
                                    self.expr(*kv["v"]), self.lineno)
            if kind == "coherent":
                kv = self.keyvals(args, ("path", "alpha", "pol"))
                pol, pcol = kv["pol"]
                if pol not in POLARIZATIONS:
                    raise self.error(f"invalid polarization {pol!r}", pcol, set(POLARIZATIONS))
                return CoherentSource(self.label(*kv["path"]), self.expr(*kv["alpha"]), pol, self.lineno)
            if kind == "vacuum":
                kv = self.keyvals(args, ("path",))
                return VacuumSource(self.label(*kv["path"]), self.lineno)
            raise self.error(f"unknown source kind {kind!r}", kcol, {"photon", "coherent", "vacuum"})
        if head == "bs":
            kv = self.keyvals(rest, ("eta", "in", "out"))
            return BS(self.expr(*kv["eta"]), self.ports(*kv["in"], vacuum_ok=True),
                      self.ports(*kv["out"], vacuum_ok=False), self.lineno)
        if head == "pbs":
            kv = self.keyvals(rest, ("in", "out"))
            return PBS(self.ports(*kv["in"], vacuum_ok=True),
                       self.ports(*kv["out"], vacuum_ok=False), self.lineno)
        if head == "pr":
            kv = self.keyvals(rest, ("theta", "path"))
            return PR(self.expr(*kv["theta"]), self.label(*kv["path"]), self.lineno)
        if head == "hwp":
            kv = self.keyvals(rest, ("delta", "path"))
            return HWP(self.expr(*kv["delta"]), self.label(*kv["path"]), self.lineno)
        if head == "basis":
            if not rest:
                raise self.error("missing basis target", self.end_column(), set(BASIS_TARGETS))
            target, tcol = rest[0]
            if target not in BASIS_TARGETS:
                raise self.error(f"unknown basis {target!r}", tcol, set(BASIS_TARGETS))
            kv = self.keyvals(rest[1:], ("path",))
            return Basis(target, self.label(*kv["path"]), self.lineno)
        raise self.error(f"unknown statement {head!r}", hcol, set(KEYWORDS))

    def parse_paths(self, hcol: int) -> tuple[list[str], list[int]]:
        body_start = hcol - 1 + len("paths")
        body = self.text[body_start:]
        if not body.strip(" \t"):
            raise self.error("expected at least one path label", self.end_column(), {"<label>"})
        labels, cols = [], []
        offset = body_start
        for part in body.split(","):
            stripped = part.strip(" \t")
            col = offset + (len(part) - len(part.lstrip(" \t"))) + 1
            if not stripped:
                raise self.error("empty path label", col, {"<label>"})
            labels.append(self.label(stripped, col))
            cols.append(col)
            offset += len(part) + 1
        return labels, cols

    def parse_param(self, hcol: int) -> Param:
        body_start = hcol - 1 + len("param")
        body = self.text[body_start:]
        name_part, eq, value_part = body.partition("=")
        name = name_part.strip(" \t")
        ncol = body_start + len(name_part) - len(name_part.lstrip(" \t")) + 1
        if not name:
            raise self.error("expected parameter name", ncol, {"<name>"})
        if not PARAM_RE.match(name):
            raise self.error(f"invalid parameter name {name!r}", ncol, {"<name>"})
        if name in RESERVED:
            raise self.error(f"{name!r} is reserved", ncol)
        default = None
        if eq:
            value = value_part.strip(" \t")
            vcol = body_start + len(name_part) + 1 + len(value_part) - len(value_part.lstrip(" \t")) + 1
            if not SIGNED_NUMBER_RE.match(value):
                raise self.error(f"expected a number, got {value!r}", vcol, {"<number>"})
            default = float(value)
            if not math.isfinite(default):
                raise self.error("numeric literal out of range", vcol)
        return Param(name, default, self.lineno)


def _decode(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        before = data[:exc.start]
        line = before.count(b"\n") + 1
        column = exc.start - (before.rfind(b"\n") + 1) + 1
        raise CircuitSyntaxError("invalid UTF-8", line, column) from None


def parse(text: str | bytes) -> Circuit:
    """Parse circuit text (UTF-8, LF or CRLF) into a :class:`Circuit`.

    Raises :class:`CircuitSyntaxError` with line and column on any
    malformed input, including duplicate path or parameter declarations.
    """
    if isinstance(text, (bytes, bytearray)):
        text = _decode(bytes(text))
    if text.startswith("\ufeff"):
        text = text[1:]
    paths: list[str] = []
    params: list[Param] = []
    sources: list[Source] = []
    elements: list[ElementSpec] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        if raw.endswith("\r"):
            raw = raw[:-1]
        line = raw.split("#", 1)[0]
        lp = _LineParser(line, lineno)
        stmt = lp.parse()
        if stmt is None:
            continue
        if isinstance(stmt, tuple):
            for label, col in zip(*stmt):
                if label in paths:
                    raise CircuitSyntaxError(f"duplicate path declaration {label!r}", lineno, col)
                paths.append(label)
        elif isinstance(stmt, Param):
            if any(p.name == stmt.name for p in params):
                raise CircuitSyntaxError(f"duplicate parameter declaration {stmt.name!r}", lineno, 1)
            params.append(stmt)
        elif isinstance(stmt, (PhotonSource, CoherentSource, VacuumSource)):
            sources.append(stmt)
        else:
            elements.append(stmt)
    return Circuit(tuple(paths), tuple(params), tuple(sources), tuple(elements))


# printing

def _fmt_number(x: float) -> str:
    return _num_text(x)


def _fmt_ports(ports: tuple) -> str:
    return ",".join("-" if p is None else p for p in ports)


def statement_text(node) -> str:
    """One canonical line for a source or element node."""
    if isinstance(node, PhotonSource):
        return f"source photon path={node.path} h={to_text(node.h)} v={to_text(node.v)}"
    if isinstance(node, CoherentSource):
        return f"source coherent path={node.path} alpha={to_text(node.alpha)} pol={node.pol}"
    if isinstance(node, VacuumSource):
        return f"source vacuum path={node.path}"
    if isinstance(node, BS):
        return f"bs eta={to_text(node.eta)} in={_fmt_ports(node.ins)} out={_fmt_ports(node.outs)}"
    if isinstance(node, PBS):
        return f"pbs in={_fmt_ports(node.ins)} out={_fmt_ports(node.outs)}"
    if isinstance(node, PR):
        return f"pr theta={to_text(node.theta)} path={node.path}"
    if isinstance(node, HWP):
        return f"hwp delta={to_text(node.delta)} path={node.path}"
    if isinstance(node, Basis):
        return f"basis {node.target} path={node.path}"
    raise TypeError(f"not a circuit statement: {node!r}")


def pretty_print(c: Circuit) -> str:
    lines = ["# fockline circuit"]
    if c.paths:
        lines.append("paths " + ",".join(c.paths))
    for p in c.params:
        lines.append(f"param {p.name}" if p.default is None else f"param {p.name} = {_fmt_number(p.default)}")
    lines.extend(statement_text(s) for s in c.sources)
    lines.extend(statement_text(e) for e in c.elements)
    return "\n".join(lines) + "\n"


# validation

def _structural(c: Circuit) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    declared = set(c.paths)
    param_names = {p.name for p in c.params}

    def check_names(e: Expr, line: int, what: str) -> None:
        for name in sorted(free_names(e) - param_names):
            diags.append(Diagnostic(line, 1, f"{what} uses undeclared parameter {name!r}"))

    occupied: set[str] = set()
    source_line: dict[str, int] = {}
    for src in c.sources:
        if src.path not in declared:
            diags.append(Diagnostic(src.line, 1, f"source on undeclared path {src.path!r}"))
        if src.path in source_line:
            diags.append(Diagnostic(src.line, 1, f"second source on path {src.path!r}"))
        else:
            source_line[src.path] = src.line
        if not isinstance(src, VacuumSource):
            occupied.add(src.path)
        for what, e in source_exprs(src):
            check_names(e, src.line, what)

    known = set(declared)
    live = set(declared)
    first_use: dict[str, int] = {}
    for el in c.elements:
        ins, outs = element_ports(el)
        for what, e in element_exprs(el):
            check_names(e, el.line, what)
        real_ins = [p for p in ins if p is not None]
        if len(set(real_ins)) != len(real_ins):
            diags.append(Diagnostic(el.line, 1, f"in-ports must be distinct: {_fmt_ports(ins)}"))
        if len(set(outs)) != len(outs):
            diags.append(Diagnostic(el.line, 1, f"out-ports must be distinct: {_fmt_ports(outs)}"))
        port_error = False
        for p in real_ins:
            first_use.setdefault(p, el.line)
            if p not in known:
                diags.append(Diagnostic(el.line, 1, f"undeclared path {p!r}"))
                port_error = True
            elif p not in live:
                diags.append(Diagnostic(el.line, 1, f"path {p!r} is no longer live"))
                port_error = True
        for q in outs:
            first_use.setdefault(q, el.line)
            # a bad in-port already explains the element; skip the follow-on merge report
            if q in occupied and q not in real_ins and not port_error:
                diags.append(Diagnostic(el.line, 1, f"out-port {q!r} would merge into an occupied path"))
        for p in real_ins:
            live.discard(p)
            occupied.discard(p)
        known.update(outs)
        live.update(outs)
        occupied.update(outs)
    for path, line in source_line.items():
        if path in first_use and first_use[path] < line:
            diags.append(Diagnostic(line, 1, f"source on path {path!r} follows an element using it"))
    return diags


def _bind_checks(c: Circuit, env: Mapping[str, float]) -> list[Diagnostic]:
    """Evaluate every node whose parameters are bound; report bind-time errors."""
    diags = []
    checks = [(s, source_exprs(s), _bind_source) for s in c.sources]
    checks += [(e, element_exprs(e), _bind_element) for e in c.elements]
    for node, exprs, binder in checks:
        if any(free_names(e) - set(env) for _, e in exprs):
            continue
        try:
            binder(node, env)
        except BindError as exc:
            diags.append(Diagnostic(node.line, 1, str(exc)))
    return diags


def validate(c: Circuit, env: Mapping[str, float] | None = None) -> list[Diagnostic]:
    """Diagnostics for ``c``; empty iff the circuit is well formed.

    Besides structural checks, every expression that can be evaluated from
    the parameter defaults (overridden by ``env``) is checked at bind time:
    eta range, real-valued angles, photon normalization.
    """
    diags = _structural(c)
    values = {**c.defaults(), **(env or {})}
    diags += _bind_checks(c, values)
    return sorted(diags, key=lambda d: (d.line, d.column, d.message))


# binding

@dataclass(frozen=True)
class BoundSource:
    kind: str
    path: str
    h: complex = 0j
    v: complex = 0j
    alpha: complex = 0j
    pol: str = "H"


@dataclass(frozen=True)
class BoundCircuit:
    """A circuit with every expression evaluated."""

    circuit: Circuit
    paths: tuple[str, ...]
    env: Mapping[str, float]
    sources: tuple[BoundSource, ...]
    elements: tuple[Element, ...]

    @property
    def photon_count(self) -> int:
        return sum(1 for s in self.sources if s.kind == "photon")

    @property
    def has_coherent(self) -> bool:
        return any(s.kind == "coherent" for s in self.sources)


def _bind_source(src: Source, env: Mapping[str, float]) -> BoundSource:
    if isinstance(src, PhotonSource):
        h, v = eval_expr(src.h, env), eval_expr(src.v, env)
        total = abs(h) ** 2 + abs(v) ** 2
        if abs(total - 1.0) > NORM_TOL:
            raise NormalizationError(
                f"photon on path {src.path!r} is not normalized: |h|^2+|v|^2 = {total:.12g}")
        return BoundSource("photon", src.path, h=h, v=v)
    if isinstance(src, CoherentSource):
        return BoundSource("coherent", src.path, alpha=eval_expr(src.alpha, env), pol=src.pol)
    return BoundSource("vacuum", src.path)


def _bind_element(el: ElementSpec, env: Mapping[str, float], circular: str = "real") -> Element:
    ins, outs = element_ports(el)
    if isinstance(el, BS):
        eta = eval_real(el.eta, env, "eta")
        if -ETA_SLACK <= eta < 0.0:
            eta = 0.0
        elif 1.0 < eta <= 1.0 + ETA_SLACK:
            eta = 1.0
        if not 0.0 <= eta <= 1.0:
            raise EtaOutOfRange(f"eta = {eta!r} is outside [0, 1]")
        return Element("bs", ins, outs, eta=eta)
    if isinstance(el, PBS):
        return Element("pbs", ins, outs)
    if isinstance(el, PR):
        return Element("pr", ins, outs, angle=eval_real(el.theta, env, "theta"))
    if isinstance(el, HWP):
        return Element("hwp", ins, outs, angle=eval_real(el.delta, env, "delta"))
    return Element("basis", ins, outs, target=el.target, circular=circular)


def bind(c: Circuit, env: Mapping[str, float] | None = None, circular: str = "real") -> BoundCircuit:
    """Evaluate all expressions with ``env`` layered over the in-file defaults.

    Raises :class:`UnboundParam` for missing or unknown parameters and the
    other :class:`BindError` subclasses for range/normalization failures.
    """
    env = dict(env or {})
    declared = {p.name for p in c.params}
    unknown = sorted(set(env) - declared)
    if unknown:
        raise UnboundParam(f"unknown parameter(s): {', '.join(unknown)}")
    values = {**c.defaults(), **env}
    missing = sorted(declared - set(values))
    if missing:
        raise UnboundParam(f"no value for parameter(s): {', '.join(missing)}")
    for name, x in values.items():
        if not math.isfinite(x):
            raise DomainError(f"parameter {name!r} is not finite")
    sources = tuple(_bind_source(s, values) for s in c.sources)
    elements = tuple(_bind_element(e, values, circular) for e in c.elements)
    return BoundCircuit(c, c.all_paths(), values, sources, elements)


def parse_assignment(text: str) -> tuple[str, float]:
    """``name=value`` from the command line; value may be a constant expression like ``pi/3``."""
    name, eq, value = text.partition("=")
    name = name.strip()
    if not eq or not PARAM_RE.match(name):
        raise BindError(f"expected name=value, got {text!r}")
    try:
        expr = parse_expr(value.strip())
    except CircuitSyntaxError as exc:
        raise BindError(f"bad value for {name}: {exc}") from None
    if free_names(expr):
        raise BindError(f"value for {name} must be a constant, got {value!r}")
    return name, eval_real(expr, {}, name)


def load(path: str) -> Circuit:
    with open(path, "rb") as fh:
        return parse(fh.read())
