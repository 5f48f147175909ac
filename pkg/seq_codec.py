"""
Códec de secuencias: árbol DFS ↔ cadena con paréntesis ↔ ids del modelo
=======================================================================
Un recorrido DFS se escribe como el pre-orden de su árbol, abriendo un
paréntesis por cada rama que NO es la última. El último hijo de cada nodo
va sin paréntesis, así que el recorrido A,B,E,F,C,D del grafo de ejemplo
(A con hijos B, C, D; B con hijo E; E con hijo F) queda

    A(BEF)(C)D

y a la inversa, la cadena basta para reconstruir el árbol y el orden.

SÍMBOLOS
--------
  - Con etiquetas (átomos, por ejemplo) se usa la etiqueta del nodo.
  - Sin etiquetas, el símbolo de identidad: nodo 0 → 'A', 1 → 'B', …,
    26 → 'a', …, 52 → '0'. Alcanza para 62 nodos; los archivos de
    trayectorias siempre usan estos símbolos.
  - La forma de cadena canónica junta los tokens sin separador si todos
    miden un carácter; si alguno es más largo, los separa con '|'.

VOCABULARIO
-----------
`anonymized` colapsa todos los nodos en un solo token '*'; `labeled` tiene
un token por símbolo del alfabeto. Ambos llevan <bos>, <eos>, '(' y ')'.
"""
from __future__ import annotations

import logging
import string
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from dfs_orders import Ordering
from graph_core import Graph

logger = logging.getLogger("seq_codec")

OPEN, CLOSE = "(", ")"
BOS, EOS = "<bos>", "<eos>"
NODE_TOKEN = "*"
SEPARATOR = "|"
IDENTITY_ALPHABET = string.ascii_uppercase + string.ascii_lowercase + string.digits
_RESERVED = {OPEN, CLOSE, BOS, EOS, SEPARATOR}


class CodecError(ValueError):
    pass


class ParseError(CodecError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at token {position}")
        self.position = position


def identity_symbol(v: int) -> str:
    if not (0 <= v < len(IDENTITY_ALPHABET)):
        raise CodecError(f"node {v} has no identity symbol (limit {len(IDENTITY_ALPHABET)} nodes)")
    return IDENTITY_ALPHABET[v]


def identity_index(symbol: str) -> int:
    idx = IDENTITY_ALPHABET.find(symbol)
    if len(symbol) != 1 or idx < 0:
        raise CodecError(f"{symbol!r} is not an identity symbol")
    return idx


# ═══════════════════════════════════════════════════════════════════════════
# SECUENCIAS
# ═══════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]

    def node_symbols(self) -> list[str]:
        return [t for t in self.tokens if t not in (OPEN, CLOSE)]

    def to_string(self) -> str:
        if all(len(t) == 1 for t in self.tokens):
            return "".join(self.tokens)
        return SEPARATOR.join(self.tokens)

    @classmethod
    def from_string(cls, text: str, known_symbols: Optional[Iterable[str]] = None) -> "TokenSequence":
        if not text:
            raise CodecError("empty sequence string")
        if SEPARATOR in text:
            tokens = text.split(SEPARATOR)
            if any(not t for t in tokens):
                raise CodecError(f"empty token in {text!r}")
            return cls(tuple(tokens))
        if known_symbols is not None and text in set(known_symbols):
            return cls((text,))
        return cls(tuple(text))

    def __str__(self) -> str:
        return self.to_string()


@dataclass(frozen=True)
class DecodedTree:
    """Árbol reconstruido: nodos numerados por posición en el pre-orden."""
    tree: Graph
    ordering: Ordering

    @property
    def symbols(self) -> tuple[str, ...]:
        return self.tree.node_labels or ()


def _symbols_for(ordering: Ordering, symbols: Optional[Sequence[str]]) -> dict[int, str]:
    out = {}
    for v in ordering.visit_sequence:
        sym = symbols[v] if symbols is not None else identity_symbol(v)
        if not sym or sym in _RESERVED or any(ch in "()|" or ch.isspace() for ch in sym):
            raise CodecError(f"invalid node symbol {sym!r} for node {v}")
        out[v] = sym
    return out


def encode(ordering: Ordering, symbols: Optional[Sequence[str]] = None) -> TokenSequence:
    """Serializa el árbol DFS en pre-orden; la última rama de cada nodo va sin paréntesis."""
    seq = ordering.visit_sequence
    if not seq:
        raise CodecError("cannot encode an empty ordering")
    if set(ordering.parent_of) != set(seq[1:]):
        raise CodecError("parent_of does not cover exactly the non-root nodes")
    children = ordering.children()
    names = _symbols_for(ordering, symbols)

    tokens: list[str] = []
    preorder: list[int] = []
    # Pila de acciones: un nodo a emitir o un token literal.
    todo: list[tuple[str, object]] = [("node", seq[0])]
    while todo:
        kind, item = todo.pop()
        if kind == "tok":
            tokens.append(item)
            continue
        v = item
        tokens.append(names[v])
        preorder.append(v)
        kids = children[v]
        actions: list[tuple[str, object]] = []
        for c in kids[:-1]:
            actions += [("tok", OPEN), ("node", c), ("tok", CLOSE)]
        if kids:
            actions.append(("node", kids[-1]))
        todo.extend(reversed(actions))
    if tuple(preorder) != seq:
        raise CodecError("visit order is not the pre-order of the DFS tree in parent_of")
    return TokenSequence(tuple(tokens))


def decode(ts: TokenSequence, known_symbols: Optional[Iterable[str]] = None) -> DecodedTree:
    """Reconstruye árbol y orden. Errores de sintaxis → ParseError con posición."""
    allowed = set(known_symbols) if known_symbols is not None else None
    labels: list[str] = []
    parent: dict[int, int] = {}
    anchors: list[Optional[int]] = []
    prev: Optional[int] = None
    last = None  # token anterior
    for i, tok in enumerate(ts.tokens):
        if tok == OPEN:
            if prev is None:
                raise ParseError("'(' before any node", i)
            if last == OPEN:
                raise ParseError("expected a node after '('", i)
            anchors.append(prev)
        elif tok == CLOSE:
            if not anchors:
                raise ParseError("unbalanced ')'", i)
            if last == OPEN:
                raise ParseError("empty group '()'", i)
            if last == CLOSE:
                raise ParseError("unexpected trailing group", i)
            prev = anchors.pop()
        elif tok in (BOS, EOS):
            raise ParseError(f"control token {tok} inside sequence", i)
        else:
            if allowed is not None and tok not in allowed:
                raise ParseError(f"unknown symbol {tok!r}", i)
            node = len(labels)
            labels.append(tok)
            if prev is not None:
                parent[node] = prev
            prev = node
        last = tok
    if not labels:
        raise ParseError("empty sequence", 0)
    if anchors:
        raise ParseError("unbalanced '('", len(ts.tokens))
    if last == CLOSE:
        raise ParseError("unexpected trailing group", len(ts.tokens))
    n = len(labels)
    tree = Graph.from_edges(n, [(c, p) for c, p in parent.items()], labels)
    return DecodedTree(tree, Ordering(tuple(range(n)), parent))


# ═══════════════════════════════════════════════════════════════════════════
# VOCABULARIO
# ═══════════════════════════════════════════════════════════════════════════

_SPECIALS = (BOS, EOS, OPEN, CLOSE)


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    anonymized: bool

    @classmethod
    def anonymized_vocab(cls) -> "Vocabulary":
        return cls(_SPECIALS + (NODE_TOKEN,), True)

    @classmethod
    def labeled(cls, alphabet: Iterable[str]) -> "Vocabulary":
        symbols = sorted(set(alphabet))
        for s in symbols:
            if s in _RESERVED or s == NODE_TOKEN:
                raise CodecError(f"symbol {s!r} is reserved")
        return cls(_SPECIALS + tuple(symbols), False)

    @classmethod
    def from_tokens(cls, tokens: Sequence[str], anonymized: bool) -> "Vocabulary":
        if tuple(tokens[:4]) != _SPECIALS:
            raise CodecError("vocabulary must start with <bos>, <eos>, '(' and ')'")
        return cls(tuple(tokens), anonymized)

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        try:
            return self.tokens.index(token)
        except ValueError:
            raise CodecError(f"token {token!r} not in vocabulary") from None

    @property
    def bos(self) -> int:
        return 0

    @property
    def eos(self) -> int:
        return 1

    def node_symbols(self) -> tuple[str, ...]:
        return self.tokens[4:]

    def normalize(self, ts: TokenSequence) -> TokenSequence:
        """Proyecta una secuencia al espacio del vocabulario ('*' para todo nodo si es anónimo)."""
        if not self.anonymized:
            return ts
        return TokenSequence(tuple(t if t in (OPEN, CLOSE) else NODE_TOKEN for t in ts.tokens))


def tokenize(ts: TokenSequence, vocab: Vocabulary) -> list[int]:
    ids = [vocab.bos]
    for tok in vocab.normalize(ts).tokens:
        ids.append(vocab.id_of(tok))
    ids.append(vocab.eos)
    return ids


def decode_ids(ids: Sequence[int], vocab: Vocabulary) -> TokenSequence:
    """Inverso de `tokenize`: quita <bos> inicial y corta en el primer <eos>."""
    tokens = []
    for k, i in enumerate(ids):
        if not (0 <= i < len(vocab)):
            raise CodecError(f"id {i} out of vocabulary range")
        if i == vocab.bos:
            if k == 0:
                continue
            raise CodecError("<bos> in the middle of a sequence")
        if i == vocab.eos:
            break
        tokens.append(vocab.tokens[i])
    return TokenSequence(tuple(tokens))


def node_symbols(g: Graph, vocab: Vocabulary) -> list[str]:
    """Símbolo de cada nodo de `g` bajo `vocab`."""
    if vocab.anonymized:
        return [NODE_TOKEN] * g.node_count
    if g.node_labels is None:
        raise CodecError("labeled vocabulary needs node labels on the graph")
    known = set(vocab.node_symbols())
    for lab in g.node_labels:
        if lab not in known:
            raise CodecError(f"label {lab!r} not in vocabulary")
    return list(g.node_labels)


def tree_shape_key(tree: Graph, root: int) -> str:
    """Forma canónica de un árbol con raíz (AHU): mismos árboles, misma clave."""
    order: list[int] = []
    parent = {root: -1}
    stack = [root]
    while stack:
        u = stack.pop()
        order.append(u)
        for w in tree.adjacency[u]:
            if w not in parent:
                parent[w] = u
                stack.append(w)
    if len(order) != tree.node_count:
        raise CodecError("tree_shape_key needs a connected tree")
    keys: dict[int, str] = {}
    for u in reversed(order):
        kids = sorted(keys[w] for w in tree.adjacency[u] if parent.get(w) == u)
        keys[u] = "(" + "".join(kids) + ")"
    return keys[root]
