import io
import random
import xml.etree.ElementTree as ET

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtpolar.graph import (
    RetweetGraph,
    build_retweet_graph,
    edge_list_csv,
    node_activity,
    read_edge_list_csv,
    reciprocal_subgraph,
    to_gexf,
    undirected_projection,
)
from rtpolar.ingest import TweetRecord
from rtpolar.synthgen import PlantedSpec, generate

from conftest import dgraph


def rt(i, author, retweeted=None, window="a"):
    return TweetRecord(f"t{i}", 100 + i, author, retweeted, frozenset({"x"}), window)


def test_retweets_collapse_to_weighted_edge():
    g = build_retweet_graph([rt(0, "u2", "u1"), rt(1, "u2", "u1")])
    assert g.edges == {("u1", "u2"): 2}
    assert (g.N, g.L) == (2, 1)
    assert g.weight("u1", "u2") == 2 and g.weight("u2", "u1") == 0


def test_self_retweet_leaves_isolate():
    g = build_retweet_graph([rt(0, "u1", "u1")])
    assert g.nodes == frozenset({"u1"}) and g.L == 0


def test_plain_tweet_author_is_isolate():
    g = build_retweet_graph([rt(0, "u3"), rt(1, "u2", "u1")])
    assert g.nodes == frozenset({"u1", "u2", "u3"})


def test_window_restriction():
    g = build_retweet_graph([rt(0, "u2", "u1", "a"), rt(1, "u3", "u1", "b")], window="b")
    assert g.edges == {("u1", "u3"): 1}


def test_empty_input_is_empty_graph():
    g = build_retweet_graph([])
    assert g.N == 0 and g.L == 0


def test_graph_rejects_self_loops_and_bad_weights():
    with pytest.raises(ValueError):
        RetweetGraph(frozenset({"a"}), {("a", "a"): 1})
    with pytest.raises(ValueError):
        RetweetGraph(frozenset({"a", "b"}), {("a", "b"): 0})


def test_build_matches_generator_edge_list():
    spec = PlantedSpec([(30, "A"), (30, "B")], p_in=0.2, p_out=0.02, heavy_hitters={"A": 2}, windows=2)
    corpus = generate(spec, seed=3)
    from rtpolar.ingest import parse_corpus, schedule_from_config

    recs, _ = parse_corpus(corpus.corpus_text().splitlines(), schedule_from_config(corpus.config()))
    for w, edges in corpus.truth["edges"].items():
        g = build_retweet_graph(recs, w)
        assert sorted([s, t, c] for (s, t), c in g.edges.items()) == edges
        act = node_activity(g, recs, w)
        assert {u: a.accumulated_retweets for u, a in act.items()} == corpus.truth["accumulated_retweets"][w]


def test_reciprocal_definition():
    g = dgraph([("u1", "u2"), ("u2", "u1"), ("u1", "u3")])
    r = reciprocal_subgraph(g)
    assert set(r.edges) == {("u1", "u2"), ("u2", "u1")}
    assert r.nodes == frozenset({"u1", "u2"})


def test_reciprocal_of_one_way_graph_is_empty():
    r = reciprocal_subgraph(dgraph([("a", "b"), ("b", "c"), ("c", "a")]))
    assert r.N == 0 and r.L == 0


def test_reciprocal_recovers_planted_pairs():
    rng = random.Random(8)
    nodes = [f"n{i:02d}" for i in range(40)]
    planted = set()
    edges = set()
    for _ in range(15):
        a, b = rng.sample(nodes, 2)
        planted |= {(a, b), (b, a)}
    for _ in range(120):
        a, b = rng.sample(nodes, 2)
        if (b, a) not in planted and (b, a) not in edges:
            edges.add((a, b))
    edges = {e for e in edges if (e[1], e[0]) not in edges}
    edges |= planted
    r = reciprocal_subgraph(dgraph(sorted(edges)))
    assert set(r.edges) == planted


digraphs = st.lists(
    st.tuples(st.sampled_from("abcdefg"), st.sampled_from("abcdefg")).filter(lambda e: e[0] != e[1]),
    max_size=30,
)


@settings(max_examples=80)
@given(digraphs)
def test_reciprocal_properties(edges):
    g = dgraph(edges)
    r = reciprocal_subgraph(g)
    assert set(r.edges) <= set(g.edges)
    assert reciprocal_subgraph(r).edges == r.edges
    for u in r.nodes:
        outs = {v for (a, v) in r.edges if a == u}
        ins = {a for (a, v) in r.edges if v == u}
        assert outs == ins


@settings(max_examples=80)
@given(digraphs)
def test_projection_preserves_weight_and_handshake(edges):
    g = dgraph(edges)
    ug = undirected_projection(g)
    assert ug.total_weight == g.total_weight
    assert sum(ug.degree().values()) == 2 * ug.L


def test_projection_sums_both_directions():
    g = RetweetGraph(frozenset({"u1", "u2"}), {("u1", "u2"): 2, ("u2", "u1"): 1})
    assert undirected_projection(g).edges == {("u1", "u2"): 3}
    single = RetweetGraph(frozenset({"u1", "u2"}), {("u2", "u1"): 4})
    ug = undirected_projection(single)
    assert ug.edges == {("u1", "u2"): 4} and ug.L == 1


@settings(max_examples=40)
@given(st.lists(st.tuples(st.sampled_from("abcde"), st.one_of(st.none(), st.sampled_from("abcde"))), max_size=25), st.randoms())
def test_build_is_order_independent(pairs, rnd):
    recs = [rt(i, a, b) for i, (a, b) in enumerate(pairs)]
    shuffled = recs[:]
    rnd.shuffle(shuffled)
    assert build_retweet_graph(recs) == build_retweet_graph(shuffled)


def test_node_activity_counts():
    recs = [rt(0, "u2", "u1"), rt(1, "u2", "u1"), rt(2, "u3")]
    g = build_retweet_graph(recs)
    act = node_activity(g, recs)
    assert act["u1"].accumulated_retweets == 2
    assert act["u2"].accumulated_retweets == 0
    assert act["u3"].accumulated_retweets == 0
    assert act["u2"].out_tweets == 2 and act["u1"].out_tweets == 0


def test_edge_list_round_trip():
    g = dgraph([("a", "b"), ("a", "b"), ("c", "a")])
    text = edge_list_csv(g)
    assert text.splitlines()[0] == "source,target,weight"
    assert read_edge_list_csv(text).edges == g.edges


def test_gexf_is_readable_and_carries_attributes():
    recs = [rt(0, "u2", "u1"), rt(1, "u2", "u1"), rt(2, "u3", "u2")]
    g = build_retweet_graph(recs)
    text = to_gexf(g, {"u1": 0, "u2": 0, "u3": 1}, node_activity(g, recs))
    root = ET.fromstring(text)
    assert root.attrib["version"] == "1.2"
    # read back with an independent GEXF parser
    back = nx.read_gexf(io.BytesIO(text.encode()))
    assert back.is_directed()
    assert set(back.nodes) == {"u1", "u2", "u3"}
    assert back.edges["u1", "u2"]["weight"] == 2.0
    assert back.nodes["u1"]["community"] == 0
    assert back.nodes["u3"]["community"] == 1
    assert back.nodes["u1"]["accumulated_retweets"] == 2
