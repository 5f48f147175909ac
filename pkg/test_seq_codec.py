import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import BRANCHY_SYMBOLS, trees
from dfs_orders import Ordering, enumerate_orderings, ordering_from_sequence, sample_ordering
from graph_core import Graph, canonical_edge
from seq_codec import (
    CodecError,
    ParseError,
    TokenSequence,
    Vocabulary,
    decode,
    decode_ids,
    encode,
    identity_symbol,
    node_symbols,
    tokenize,
    tree_shape_key,
)

A, B, C, D, E, F = range(6)


def ts(text: str) -> TokenSequence:
    return TokenSequence.from_string(text)


# ── encode ──

def test_encode_example_traversals(branchy):
    left = ordering_from_sequence(branchy, [A, B, E, F, C, D])
    right = ordering_from_sequence(branchy, [A, C, B, F, E, D])
    assert encode(left, BRANCHY_SYMBOLS).tokens == ("A", "(", "B", "E", "F", ")", "(", "C", ")", "D")
    assert encode(right, BRANCHY_SYMBOLS).to_string() == "A(C)(BFE)D"


def test_encode_single_node():
    assert encode(Ordering((0,), {}), ["X"]).tokens == ("X",)


def test_encode_defaults_to_identity_symbols(branchy):
    assert encode(ordering_from_sequence(branchy, [A, B, E, F, C, D])).to_string() == "A(BEF)(C)D"


def test_encode_rejects_inconsistent_trees():
    with pytest.raises(CodecError):
        encode(Ordering((0, 1, 2), {1: 0}))
    with pytest.raises(CodecError, match="pre-order"):
        encode(Ordering((0, 2, 1), {1: 0, 2: 1}))
    with pytest.raises(CodecError, match="invalid node symbol"):
        encode(Ordering((0, 1), {1: 0}), ["C", "("])


# ── decode ──

def test_decode_rebuilds_tree_and_order():
    decoded = decode(ts("BA(CF)D"))
    assert decoded.symbols == ("B", "A", "C", "F", "D")
    assert decoded.ordering.visit_sequence == (0, 1, 2, 3, 4)
    assert decoded.tree.edges() == [(0, 1), (1, 2), (1, 4), (2, 3)]


@pytest.mark.parametrize("text, message", [
    ("A(B)", "unexpected trailing group"),
    ("A(B)(C)", "unexpected trailing group"),
    ("(A)B", "'(' before any node"),
    ("A()B", "empty group"),
    ("A((B)C)D", "expected a node after"),
    ("A(BC", "unbalanced '\\('"),
    ("AB)C", "unbalanced '\\)'"),
])
def test_decode_errors(text, message):
    with pytest.raises(ParseError, match=message):
        decode(ts(text))


def test_decode_reports_position():
    with pytest.raises(ParseError) as info:
        decode(ts("AB)C"))
    assert info.value.position == 2


def test_decode_unknown_symbol():
    with pytest.raises(ParseError, match="unknown symbol 'Q'"):
        decode(ts("CQ"), known_symbols="CNO")


def test_decode_rejects_control_tokens():
    with pytest.raises(ParseError):
        decode(TokenSequence(("A", "<eos>")))


@settings(max_examples=300, deadline=None)
@given(trees(max_nodes=15), st.integers(0, 2**31))
def test_round_trip_on_random_trees(tree, seed):
    o = sample_ordering(tree, rng_seed=seed)
    decoded = decode(encode(o))
    seq = o.visit_sequence
    assert decoded.symbols == tuple(identity_symbol(v) for v in seq)
    assert sorted(canonical_edge(seq[c], seq[p]) for c, p in decoded.ordering.parent_of.items()) == o.tree_edges()
    assert encode(decoded.ordering, decoded.symbols) == encode(o)


@settings(max_examples=60, deadline=None)
@given(trees(max_nodes=7))
def test_encode_is_injective_over_orderings(tree):
    strings = [encode(ordering_from_sequence(tree, s)).to_string() for s in enumerate_orderings(tree)]
    assert len(set(strings)) == len(strings)


@settings(max_examples=150, deadline=None)
@given(trees(max_nodes=15), st.integers(0, 2**31))
def test_anonymized_encoding_determines_the_shape(tree, seed):
    o = sample_ordering(tree, rng_seed=seed)
    vocab = Vocabulary.anonymized_vocab()
    anonymous = vocab.normalize(encode(o))
    decoded = decode(anonymous)
    assert tree_shape_key(decoded.tree, 0) == tree_shape_key(tree, o.root)


def test_shape_key_distinguishes_root_choice():
    path = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert tree_shape_key(path, 0) != tree_shape_key(path, 1)
    assert tree_shape_key(path, 0) == tree_shape_key(path, 2)


# ── cadenas ──

def test_multi_character_symbols_use_the_separator():
    seq = TokenSequence(("C", "(", "Cl", ")", "O"))
    assert seq.to_string() == "C|(|Cl|)|O"
    assert TokenSequence.from_string(seq.to_string()) == seq
    assert TokenSequence.from_string("Cl", known_symbols=["Cl"]).tokens == ("Cl",)
    with pytest.raises(CodecError):
        TokenSequence.from_string("C||O")
    with pytest.raises(CodecError):
        TokenSequence.from_string("")


def test_identity_symbols():
    assert [identity_symbol(v) for v in (0, 25, 26, 52, 61)] == ["A", "Z", "a", "0", "9"]
    with pytest.raises(CodecError):
        identity_symbol(62)


# ── vocabulario ──

def test_tokenize_anonymized():
    vocab = Vocabulary.anonymized_vocab()
    ids = tokenize(ts("A(B)C"), vocab)
    node, open_, close = vocab.id_of("*"), vocab.id_of("("), vocab.id_of(")")
    assert ids == [vocab.bos, node, open_, node, close, node, vocab.eos]
    assert tokenize(TokenSequence(()), vocab) == [vocab.bos, vocab.eos]


def test_tokenize_labeled():
    vocab = Vocabulary.labeled("ONC")
    assert vocab.node_symbols() == ("C", "N", "O")
    assert decode_ids(tokenize(ts("C(N)O"), vocab), vocab) == ts("C(N)O")
    with pytest.raises(CodecError, match="'Q'"):
        tokenize(ts("CQ"), vocab)


def test_labeled_vocab_rejects_reserved_symbols():
    with pytest.raises(CodecError):
        Vocabulary.labeled(["C", "("])
    with pytest.raises(CodecError):
        Vocabulary.from_tokens(["(", ")", "<bos>", "<eos>"], True)


def test_decode_ids_stops_at_eos():
    vocab = Vocabulary.anonymized_vocab()
    node = vocab.id_of("*")
    assert decode_ids([vocab.bos, node, vocab.eos, node], vocab).tokens == ("*",)
    with pytest.raises(CodecError):
        decode_ids([vocab.bos, node, vocab.bos], vocab)
    with pytest.raises(CodecError):
        decode_ids([vocab.bos, 99], vocab)


def test_node_symbols_for_a_graph(branchy):
    assert node_symbols(branchy, Vocabulary.anonymized_vocab()) == ["*"] * 6
    with pytest.raises(CodecError):
        node_symbols(branchy, Vocabulary.labeled("CNO"))
    labeled = branchy.with_labels(list("CCNOCC"))
    assert node_symbols(labeled, Vocabulary.labeled("CNO")) == list("CCNOCC")
