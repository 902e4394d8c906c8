"""Code property graph construction over the subset AST.

The graph has one node per structural event (function signature, call
expression, branch predicate, return, assignment) and two edge families:
control-flow edges chaining consecutive statements plus branch entries and
exits, and def-use edges from an intra-procedural reaching-definitions
fixpoint over that statement CFG.

A JSON interchange path mirrors the builder so externally produced graphs
can stand in for the built-in analysis on files outside the subset.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum

from .chunking import Chunk, chunk_slice
from .errors import SchemaError, TokenRangeError, UnsupportedKindError
from .lexer import Token, TokenKind
from .parsing import (
    Assign,
    Ast,
    ExprStmt,
    For,
    FunctionDef,
    If,
    Return,
    Stmt,
    While,
)


class NodeKind(str, Enum):
    CALL = "call"
    CONTROL = "control"
    RETURN = "return"
    ASSIGN = "assign"
    SIGNATURE = "signature"


class EdgeKind(str, Enum):
    CFG = "cfg"
    PDG = "pdg"


@dataclass(frozen=True)
class CpgNode:
    id: int
    kind: NodeKind
    token_range: tuple[int, int]  # chunk-local, half-open
    line: int
    symbols: frozenset[str]


@dataclass(frozen=True)
class CpgEdge:
    src: int
    dst: int
    kind: EdgeKind


@dataclass(frozen=True)
class Cpg:
    nodes: tuple[CpgNode, ...]
    edges: tuple[CpgEdge, ...]
    chunk_id: int


def build_cpg(ast: Ast, chunk: Chunk, file_tokens: list[Token]) -> Cpg:
    """Build the chunk's property graph from its parsed statement AST."""
    tokens = chunk_slice(file_tokens, chunk)
    builder = _Builder(tokens)
    module = builder.new_scope(entry_defs={})
    builder.walk_block(ast.body, [_ENTRY], module)
    builder.solve_dataflow()
    edges = sorted(
        {CpgEdge(a, b, EdgeKind.CFG) for a, b in builder.cfg_edges}
        | {CpgEdge(a, b, EdgeKind.PDG) for a, b in builder.pdg_edges},
        key=lambda e: (e.src, e.dst, e.kind.value),
    )
    return Cpg(nodes=tuple(builder.nodes), edges=tuple(edges), chunk_id=chunk.id)


# -- token-scan helpers ------------------------------------------------------


def identifiers_in(tokens: list[Token], span: tuple[int, int]) -> frozenset[str]:
    return frozenset(
        tokens[i].text
        for i in range(span[0], min(span[1], len(tokens)))
        if tokens[i].kind is TokenKind.IDENTIFIER
    )


def scan_uses(tokens: list[Token], span: tuple[int, int]) -> set[str]:
    """Identifier uses in a span: skips attribute names and keyword-argument
    names, which do not reference local definitions."""
    sig = [
        i
        for i in range(span[0], min(span[1], len(tokens)))
        if tokens[i].kind not in (TokenKind.COMMENT, TokenKind.NEWLINE)
    ]
    uses: set[str] = set()
    depth = 0
    for pos, i in enumerate(sig):
        t = tokens[i]
        if t.kind is TokenKind.PUNCTUATION:
            if t.text in "([{":
                depth += 1
            elif t.text in ")]}":
                depth -= 1
            continue
        if t.kind is not TokenKind.IDENTIFIER:
            continue
        prev = tokens[sig[pos - 1]] if pos > 0 else None
        if prev is not None and prev.kind is TokenKind.PUNCTUATION and prev.text == ".":
            continue
        nxt = tokens[sig[pos + 1]] if pos + 1 < len(sig) else None
        if (
            depth > 0
            and nxt is not None
            and nxt.kind is TokenKind.OPERATOR
            and nxt.text == "="
        ):
            continue  # keyword-argument name
        uses.add(t.text)
    return uses


def scan_calls(tokens: list[Token], span: tuple[int, int]) -> list[tuple[int, int]]:
    """Call-expression ranges in a span: dotted-name head through the
    matching close paren, in source order."""
    lo, hi = span[0], min(span[1], len(tokens))
    sig = [
        i
        for i in range(lo, hi)
        if tokens[i].kind not in (TokenKind.COMMENT, TokenKind.NEWLINE)
    ]
    calls: list[tuple[int, int]] = []
    for pos, i in enumerate(sig):
        if tokens[i].kind is not TokenKind.IDENTIFIER:
            continue
        if pos + 1 >= len(sig):
            continue
        opener = sig[pos + 1]
        if not (tokens[opener].kind is TokenKind.PUNCTUATION and tokens[opener].text == "("):
            continue
        head = pos
        while (
            head >= 2
            and tokens[sig[head - 1]].kind is TokenKind.PUNCTUATION
            and tokens[sig[head - 1]].text == "."
            and tokens[sig[head - 2]].kind is TokenKind.IDENTIFIER
        ):
            head -= 2
        depth = 0
        end = hi
        for j in range(opener, hi):
            t = tokens[j]
            if t.kind is TokenKind.PUNCTUATION:
                if t.text == "(":
                    depth += 1
                elif t.text == ")":
                    depth -= 1
                    if depth == 0:
                        end = j + 1
                        break
        calls.append((sig[head], end))
    return sorted(calls)


# -- CFG walk and reaching definitions ---------------------------------------

_ENTRY = -1


class _Scope:
    def __init__(self, entry_defs: dict[str, int]):
        self.entry_defs = entry_defs  # symbol -> defining node id (outside scope)
        self.order: list[int] = []
        self.defs: dict[int, set[str]] = {}
        self.uses: dict[int, set[str]] = {}
        self.edges: list[tuple[int, int]] = []
        self.entry_nodes: set[int] = set()


class _Builder:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.nodes: list[CpgNode] = []
        self.cfg_edges: set[tuple[int, int]] = set()
        self.pdg_edges: set[tuple[int, int]] = set()
        self.scopes: list[_Scope] = []

    def new_scope(self, entry_defs: dict[str, int]) -> _Scope:
        scope = _Scope(entry_defs)
        self.scopes.append(scope)
        return scope

    def new_node(self, kind: NodeKind, span: tuple[int, int]) -> int:
        span = self._trim(span)
        node_id = len(self.nodes)
        self.nodes.append(
            CpgNode(
                id=node_id,
                kind=kind,
                token_range=span,
                line=self.tokens[span[0]].line,
                symbols=identifiers_in(self.tokens, span),
            )
        )
        return node_id

    def _trim(self, span: tuple[int, int]) -> tuple[int, int]:
        start, end = span
        end = min(end, len(self.tokens))
        while end - 1 > start and self.tokens[end - 1].kind in (
            TokenKind.NEWLINE,
            TokenKind.COMMENT,
        ):
            end -= 1
        return (start, end)

    def register(self, scope: _Scope, node_id: int, defs: set[str], uses: set[str]) -> None:
        scope.order.append(node_id)
        scope.defs[node_id] = defs
        scope.uses[node_id] = uses

    def connect(self, pending: list[int], node_id: int, scope: _Scope) -> list[int]:
        for p in pending:
            if p == _ENTRY:
                scope.entry_nodes.add(node_id)
            elif p != node_id:
                self.cfg_edges.add((p, node_id))
                scope.edges.append((p, node_id))
        return [node_id]

    def emit_calls(self, span: tuple[int, int], skip_head: int | None = None) -> list[int]:
        ids = []
        for call_span in scan_calls(self.tokens, self._trim(span)):
            if skip_head is not None and call_span[0] == skip_head:
                continue
            ids.append(self.new_node(NodeKind.CALL, call_span))
        return ids

    def walk_block(self, stmts: list[Stmt], pending: list[int], scope: _Scope) -> list[int]:
        for stmt in stmts:
            pending = self.walk_stmt(stmt, pending, scope)
        return pending

    def walk_stmt(self, stmt: Stmt, pending: list[int], scope: _Scope) -> list[int]:
        if isinstance(stmt, FunctionDef):
            sig_id = self.new_node(NodeKind.SIGNATURE, stmt.header_span)
            name_idx = stmt.header_span[0] + 1
            self.emit_calls(stmt.header_span, skip_head=name_idx)
            header_uses = (
                scan_uses(self.tokens, stmt.header_span) - set(stmt.params) - {stmt.name}
            )
            self.register(scope, sig_id, defs={stmt.name}, uses=header_uses)
            pending = self.connect(pending, sig_id, scope)
            inner = self.new_scope({p: sig_id for p in stmt.params})
            self.walk_block(stmt.body, [_ENTRY], inner)
            return pending

        if isinstance(stmt, If):
            ctrl = self.new_node(NodeKind.CONTROL, stmt.header_span)
            self.emit_calls(stmt.header_span)
            self.register(scope, ctrl, defs=set(), uses=scan_uses(self.tokens, stmt.test_span))
            self.connect(pending, ctrl, scope)
            body_exits = self.walk_block(stmt.body, [ctrl], scope)
            if stmt.orelse:
                else_exits = self.walk_block(stmt.orelse, [ctrl], scope)
            else:
                else_exits = [ctrl]
            merged = list(dict.fromkeys(body_exits + else_exits))
            return merged

        if isinstance(stmt, (While, For)):
            ctrl = self.new_node(NodeKind.CONTROL, stmt.header_span)
            self.emit_calls(stmt.header_span)
            if isinstance(stmt, For):
                defs = set(stmt.targets)
                uses = scan_uses(self.tokens, stmt.iter_span)
            else:
                defs = set()
                uses = scan_uses(self.tokens, stmt.test_span)
            self.register(scope, ctrl, defs=defs, uses=uses)
            self.connect(pending, ctrl, scope)
            body_exits = self.walk_block(stmt.body, [ctrl], scope)
            for e in body_exits:
                if e not in (_ENTRY, ctrl):
                    self.cfg_edges.add((e, ctrl))
                    scope.edges.append((e, ctrl))
            return [ctrl]

        if isinstance(stmt, Return):
            ret = self.new_node(NodeKind.RETURN, stmt.span)
            self.emit_calls(stmt.span)
            self.register(scope, ret, defs=set(), uses=scan_uses(self.tokens, stmt.value_span))
            self.connect(pending, ret, scope)
            return []  # no fallthrough

        if isinstance(stmt, Assign):
            node = self.new_node(NodeKind.ASSIGN, stmt.span)
            self.emit_calls(stmt.span)
            target_uses = scan_uses(self.tokens, stmt.target_span)
            if not stmt.augmented:
                target_uses -= set(stmt.targets)
            uses = scan_uses(self.tokens, stmt.value_span) | target_uses
            self.register(scope, node, defs=set(stmt.targets), uses=uses)
            return self.connect(pending, node, scope)

        if isinstance(stmt, ExprStmt):
            calls = self.emit_calls(stmt.span)
            if not calls:
                return pending  # transparent: flow passes through
            primary = calls[0]
            self.register(scope, primary, defs=set(), uses=scan_uses(self.tokens, stmt.span))
            return self.connect(pending, primary, scope)

        return pending  # opaque statements are transparent

    def solve_dataflow(self) -> None:
        for scope in self.scopes:
            self._solve_scope(scope)

    def _solve_scope(self, scope: _Scope) -> None:
        preds: dict[int, list[int]] = defaultdict(list)
        for a, b in scope.edges:
            if a not in preds[b]:
                preds[b].append(a)
        entry_facts = {(nid, sym) for sym, nid in scope.entry_defs.items()}
        gen = {n: {(n, s) for s in scope.defs[n]} for n in scope.order}
        out: dict[int, set[tuple[int, str]]] = {n: set(gen[n]) for n in scope.order}
        in_: dict[int, set[tuple[int, str]]] = {n: set() for n in scope.order}
        changed = True
        while changed:
            changed = False
            for n in scope.order:
                new_in: set[tuple[int, str]] = set()
                if n in scope.entry_nodes:
                    new_in |= entry_facts
                for p in preds[n]:
                    new_in |= out[p]
                killed = scope.defs[n]
                new_out = gen[n] | {f for f in new_in if f[1] not in killed}
                if new_in != in_[n] or new_out != out[n]:
                    in_[n] = new_in
                    out[n] = new_out
                    changed = True
        for n in scope.order:
            for src, sym in in_[n]:
                if sym in scope.uses[n] and src != n:
                    self.pdg_edges.add((src, n))


# -- JSON interchange ---------------------------------------------------------

_NODE_KINDS = {k.value for k in NodeKind}
_EDGE_KINDS = {k.value for k in EdgeKind}


def export_cpg_json(cpg: Cpg) -> str:
    """Canonical serialization: nodes by id, edges by (src, dst, kind)."""
    doc = {
        "chunk_id": cpg.chunk_id,
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind.value,
                "token_range": [n.token_range[0], n.token_range[1]],
                "line": n.line,
                "symbols": sorted(n.symbols),
            }
            for n in sorted(cpg.nodes, key=lambda n: n.id)
        ],
        "edges": [
            {"src": e.src, "dst": e.dst, "kind": e.kind.value}
            for e in sorted(cpg.edges, key=lambda e: (e.src, e.dst, e.kind.value))
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def import_cpg_json(document: bytes | str, chunk: Chunk) -> Cpg:
    """Parse and validate an interchange document against its chunk."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError(f"document is not UTF-8: {exc}") from exc
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("top-level value must be an object")
    for key in ("chunk_id", "nodes", "edges"):
        if key not in doc:
            raise SchemaError(f"missing required key {key!r}")
    if not isinstance(doc["chunk_id"], int) or doc["chunk_id"] != chunk.id:
        raise SchemaError(
            f"chunk_id {doc['chunk_id']!r} does not match target chunk {chunk.id}"
        )
    if not isinstance(doc["nodes"], list) or not isinstance(doc["edges"], list):
        raise SchemaError("'nodes' and 'edges' must be arrays")

    nodes = []
    for item in doc["nodes"]:
        nodes.append(_parse_node(item, chunk))
    ids = sorted(n.id for n in nodes)
    if ids != list(range(len(nodes))):
        raise SchemaError("node ids must be dense and unique")
    id_set = set(ids)

    edges = []
    for item in doc["edges"]:
        edges.append(_parse_edge(item, id_set))

    return Cpg(
        nodes=tuple(sorted(nodes, key=lambda n: n.id)),
        edges=tuple(sorted(edges, key=lambda e: (e.src, e.dst, e.kind.value))),
        chunk_id=chunk.id,
    )


def _parse_node(item: object, chunk: Chunk) -> CpgNode:
    if not isinstance(item, dict):
        raise SchemaError("node entries must be objects")
    try:
        nid = item["id"]
        kind = item["kind"]
        rng = item["token_range"]
        line = item["line"]
        symbols = item["symbols"]
    except KeyError as exc:
        raise SchemaError(f"node missing key {exc.args[0]!r}") from exc
    if not isinstance(nid, int) or not isinstance(line, int):
        raise SchemaError("node id and line must be integers")
    if not isinstance(kind, str) or kind not in _NODE_KINDS:
        raise UnsupportedKindError(f"unsupported node kind {kind!r}")
    if (
        not isinstance(rng, list)
        or len(rng) != 2
        or not all(isinstance(v, int) for v in rng)
    ):
        raise SchemaError("token_range must be a [start, end) integer pair")
    start, end = rng
    if not (0 <= start < end <= chunk.length):
        raise TokenRangeError(
            f"token_range [{start},{end}) outside chunk of {chunk.length} tokens"
        )
    if not isinstance(symbols, list) or not all(isinstance(s, str) for s in symbols):
        raise SchemaError("symbols must be an array of strings")
    return CpgNode(nid, NodeKind(kind), (start, end), line, frozenset(symbols))


def _parse_edge(item: object, ids: set[int]) -> CpgEdge:
    if not isinstance(item, dict):
        raise SchemaError("edge entries must be objects")
    try:
        src = item["src"]
        dst = item["dst"]
        kind = item["kind"]
    except KeyError as exc:
        raise SchemaError(f"edge missing key {exc.args[0]!r}") from exc
    if not isinstance(src, int) or not isinstance(dst, int):
        raise SchemaError("edge endpoints must be integers")
    if not isinstance(kind, str) or kind not in _EDGE_KINDS:
        raise UnsupportedKindError(f"unsupported edge kind {kind!r}")
    if src not in ids or dst not in ids:
        raise SchemaError(f"edge references unknown node ({src}, {dst})")
    if kind == EdgeKind.PDG.value and src == dst:
        raise SchemaError("pdg edges must connect distinct nodes")
    return CpgEdge(src, dst, EdgeKind(kind))
