import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genehist.counting import count
from genehist.grammar import compile_grammar
from genehist.history import Event, History, parse_history
from genehist.sampling import Sampler
from genehist.species_tree import caterpillar, random_tree


def test_annotation_format():
    h = History(Event.S, 0, [History(Event.EXTANT, 1), History(Event.L, 2)])
    assert h.to_newick(["R", "A", "B"]) == "([E:A],[L:B])[S:R];"
    assert h.to_newick() == "([E:1],[L:2])[S:0];"
    assert h.size == 1


def test_equality_and_hash():
    a = History(Event.D, 0, [History(Event.EXTANT, 0), History(Event.EXTANT, 0)])
    b = parse_history("([E:0],[E:0])[D:0];")
    assert a == b and hash(a) == hash(b)
    assert a != History(Event.T, 0, a.children)


def test_parse_with_labels():
    labels = ["R", "A", "B"]
    h = parse_history("(([E:A],[E:A])[D:A],[L:B])[S:R];", labels)
    assert h.size == 2
    assert [x.event for x in h.nodes()] == [Event.S, Event.D, Event.EXTANT, Event.EXTANT, Event.L]


@pytest.mark.parametrize("text", ["([E:0],[E:0])", "([E:0],[E:0];", "[X:0];", "([E:0])[S:0]; junk"])
def test_parse_errors(text):
    with pytest.raises(ValueError):
        parse_history(text)


def test_unknown_species_label():
    with pytest.raises(ValueError, match="unknown species"):
        parse_history("[E:Q];", ["A"])


@given(st.integers(1, 5), st.integers(1, 12), st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_roundtrip_sampled(k, n, seed):
    t = random_tree(k, seed)
    g = compile_grammar(t, "udlt")
    h = Sampler(g, count(g, n), seed).sample(n)
    assert parse_history(h.to_newick(t.labels), t.labels) == h
    assert parse_history(h.to_newick()) == h


def test_deep_history_without_recursion():
    # a 5000-deep duplication comb stays within the stack
    h = History(Event.EXTANT, 0)
    for _ in range(5000):
        h = History(Event.D, 0, [h, History(Event.EXTANT, 0)])
    assert h.size == 5001
    text = h.to_newick()
    assert parse_history(text) == h
    assert h.map_species(lambda u: u) == h


def test_walk_paths():
    h = parse_history("(([E:0],[E:0])[D:0],[E:0])[D:0];")
    paths = [p for p, _ in h.walk()]
    assert paths == [(), (0,), (0, 0), (0, 1), (1,)]
