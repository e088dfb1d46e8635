import json
import math
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtpolar.botlab import (
    BotScoreRecord,
    CsvScoreProvider,
    HttpScoreProvider,
    ProviderResponseError,
    UnresolvedUser,
    classification_csv,
    classify,
    cochran_sample_size,
    distribution,
    label_accuracy,
    provider_from_config,
    read_annotations,
    score_users,
    surface_top10,
)
from rtpolar.community import Partition
from rtpolar.graph import NodeActivity, build_retweet_graph, node_activity
from rtpolar.ingest import parse_corpus, schedule_from_config
from rtpolar.synthgen import PlantedSpec, bot_scores_csv, generate


@pytest.mark.parametrize(
    "cap,label",
    [(0.005, "genuine"), (0.8, "automated"), (0.5, "uncertain"), (0.01, "uncertain"), (0.75, "uncertain"), (0.0, "genuine"), (1.0, "automated")],
)
def test_threshold_table(cap, label):
    assert classify(cap) == label
    assert BotScoreRecord("u", cap, 1.0).classification == label


@given(st.floats(0, 1))
def test_classification_is_total(cap):
    assert classify(cap) in {"genuine", "uncertain", "automated"}
    assert (classify(cap) == "genuine") == (cap < 0.01)
    assert (classify(cap) == "automated") == (cap > 0.75)


def test_cochran_examples():
    assert cochran_sample_size() == 385
    assert cochran_sample_size(5000) == 357
    assert cochran_sample_size(margin=0.5) <= 4
    assert cochran_sample_size(1) == 1


@pytest.mark.parametrize("kw", [{"proportion": 0}, {"proportion": 1}, {"margin": 0}, {"population": 0}, {"confidence_z": -1}])
def test_cochran_rejects_nonsense(kw):
    with pytest.raises(ValueError):
        cochran_sample_size(**kw)


@settings(max_examples=150)
@given(st.integers(1, 10**6), st.integers(1, 10**6), st.floats(0.01, 0.5), st.floats(0.01, 0.5))
def test_cochran_monotone(n1, n2, e1, e2):
    lo_n, hi_n = sorted((n1, n2))
    lo_e, hi_e = sorted((e1, e2))
    assert cochran_sample_size(lo_n) <= cochran_sample_size(hi_n)
    assert cochran_sample_size(lo_n, margin=hi_e) <= cochran_sample_size(lo_n, margin=lo_e)
    assert cochran_sample_size(lo_n) <= lo_n


def recs(values, field="cap"):
    if field == "cap":
        return [BotScoreRecord(f"u{i}", v, 0.0) for i, v in enumerate(values)]
    return [BotScoreRecord(f"u{i}", 0.0, v) for i, v in enumerate(values)]


def test_distribution_single_value():
    d = distribution(recs([0.5]))
    assert d.min == d.q1 == d.median == d.q3 == d.max == d.mean == 0.5


def test_distribution_two_values():
    d = distribution(recs([0.0, 1.0]))
    assert d.median == 0.5 and d.mean == 0.5


def test_distribution_errors():
    with pytest.raises(ValueError):
        distribution([])
    with pytest.raises(ValueError):
        distribution(recs([0.1]), field="other")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=60), st.sampled_from(["cap", "fake_follower"]))
def test_density_integrates_to_one(values, field):
    if field == "fake_follower":
        values = [5 * v for v in values]
    d = distribution(recs(values, field), field)
    assert len(d.grid) == 64
    assert float(np.trapezoid(d.density, d.grid)) == pytest.approx(1.0, abs=1e-3)
    assert d.min <= d.q1 <= d.median <= d.q3 <= d.max
    assert d.min <= d.mean <= d.max


@pytest.mark.parametrize("values", [[0.4700420123439407] * 3, [0.5, 0.5 + 1e-12], [0.0, 0.0, 1e-300]])
def test_density_near_constant_samples(values):
    d = distribution(recs(values))
    assert d.bandwidth >= 1 / 63
    assert float(np.trapezoid(d.density, d.grid)) == pytest.approx(1.0, abs=1e-3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=30), st.randoms())
def test_distribution_permutation_invariant(values, rnd):
    shuffled = values[:]
    rnd.shuffle(shuffled)
    assert distribution(recs(values)).to_dict() == distribution(recs(shuffled)).to_dict()


def test_mixture_mean_within_three_standard_errors():
    rng = np.random.default_rng(42)
    w, a, b = 0.7, (8, 2), (1, 12)
    bot = rng.random(1000) < w
    vals = np.where(bot, rng.beta(*a, 1000), rng.beta(*b, 1000))
    true_mean = w * a[0] / sum(a) + (1 - w) * b[0] / sum(b)
    d = distribution(recs(vals.tolist()))
    se = float(np.std(vals, ddof=1)) / math.sqrt(1000)
    assert abs(d.mean - true_mean) < 3 * se


def test_generated_fixture_scores_match_their_mixture():
    users = [f"u{i:04d}" for i in range(1000)]
    provider = CsvScoreProvider.from_text(bot_scores_csv(users, seed=3, automated_share=0.7))
    res = score_users(users, provider, max_workers=1)
    caps = np.array([r.cap for r in res.records])
    true_mean = 0.7 * 0.8 + 0.3 * (1 / 13)
    assert abs(caps.mean() - true_mean) < 3 * caps.std(ddof=1) / math.sqrt(len(caps))


def test_csv_provider_and_partial_results():
    provider = CsvScoreProvider.from_text("user_id,cap,fake_follower_score\nu1,0.9,2.0\nu2,0.001,0.5\n")
    res = score_users(["u2", "u1", "u3", "u1"], provider)
    assert [(r.user_id, r.classification) for r in res.records] == [("u1", "automated"), ("u2", "genuine")]
    assert res.unresolved == ["u3"]
    assert res.errors == {}


@pytest.mark.parametrize("row", ["u1,abc,1.0", "u1,1.5,1.0", "u1,0.5,7", "u1,nan,1"])
def test_csv_provider_rejects_malformed_rows(row):
    provider = CsvScoreProvider.from_text("user_id,cap,fake_follower_score\n" + row + "\n")
    with pytest.raises(ProviderResponseError, match="u1"):
        score_users(["u1"], provider)


def test_provider_from_config(tmp_path):
    (tmp_path / "s.csv").write_text("user_id,cap,fake_follower_score\nu1,0.2,0.3\n")
    p = provider_from_config({"kind": "csv", "path": "s.csv"}, base=tmp_path)
    assert p.lookup("u1") == (0.2, 0.3)
    assert isinstance(provider_from_config({"kind": "http", "url": "http://x"}), HttpScoreProvider)
    with pytest.raises(ValueError):
        provider_from_config({"kind": "carrier-pigeon"})


class _Handler(BaseHTTPRequestHandler):
    calls = {}

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        uid = body["user_id"]
        self.calls[uid] = self.calls.get(uid, 0) + 1
        if uid == "gone":
            self.send_response(404)
            self.end_headers()
            return
        if uid == "flaky" and self.calls[uid] == 1:
            self.send_response(503)
            self.end_headers()
            return
        if uid == "broken":
            payload = b"<html>"
        else:
            payload = json.dumps({"cap": 0.8, "fake_followers": 1.5}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    srv = HTTPServer(("127.0.0.1", 0), _Handler)
    _Handler.calls = {}
    t = threading.Thread(target=srv.serve_forever, daemon=True)
    t.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}/score"
    srv.shutdown()
    srv.server_close()


def test_http_provider_wire_format(server):
    p = HttpScoreProvider(server, timeout=5, retries=1)
    assert p.lookup("u1") == (0.8, 1.5)
    with pytest.raises(UnresolvedUser):
        p.lookup("gone")
    assert p.lookup("flaky") == (0.8, 1.5)
    assert _Handler.calls["flaky"] == 2
    with pytest.raises(ProviderResponseError, match="broken"):
        p.lookup("broken")


def test_http_provider_unreachable_is_partial():
    p = HttpScoreProvider("http://127.0.0.1:9/score", timeout=0.5, retries=0)
    res = score_users(["a", "b"], p)
    assert res.records == [] and sorted(res.errors) == ["a", "b"]


def big_partition():
    members = {f"u{i:04d}": 0 for i in range(600)}
    members.update({f"v{i:04d}": 1 for i in range(40)})
    return Partition(members)


def test_label_accuracy_all_and_none():
    p = big_partition()
    everyone_pro = {u: "pro" for u in p.assignment}
    rep = label_accuracy(p, everyone_pro, {0: "pro", 1: "pro"})
    assert [s.accuracy for s in rep.samples] == [1.0, 1.0]
    assert rep.macro_average == 1.0
    assert len(rep.samples[0].sample) == cochran_sample_size(600)
    assert len(rep.samples[1].sample) == cochran_sample_size(40) <= 40
    rep = label_accuracy(p, everyone_pro, {0: "anti"})
    assert [s.accuracy for s in rep.samples] == [0.0]
    assert rep.worklist == []


def test_label_accuracy_sample_is_without_replacement_and_reproducible():
    p = big_partition()
    a = label_accuracy(p, {}, {0: "x", 1: "y"}, seed=9)
    b = label_accuracy(p, {}, {0: "x", 1: "y"}, seed=9)
    assert a.samples == b.samples and a.worklist == b.worklist
    for s in a.samples:
        assert len(set(s.sample)) == len(s.sample)
        assert s.accuracy is None
    assert len(a.worklist) == sum(len(s.sample) for s in a.samples)
    assert a.macro_average is None
    assert label_accuracy(p, {}, {0: "x"}, seed=10).samples != a.samples[:1]


def test_label_accuracy_on_planted_ninety_percent_fixture():
    n = 5000
    p = Partition({f"u{i:04d}": 0 for i in range(n)})
    rng = np.random.default_rng(0)
    agree = rng.random(n) < 0.9
    ann = {u: ("pro" if ok else "anti") for u, ok in zip(sorted(p.assignment), agree)}
    inside = 0
    for seed in range(20):
        acc = label_accuracy(p, ann, {0: "pro"}, seed=seed).samples[0].accuracy
        k = cochran_sample_size(n)
        half = 1.96 * math.sqrt(0.9 * 0.1 / k)
        inside += 0.9 - half <= acc <= 0.9 + half
    assert inside >= 17


def test_annotations_csv():
    assert read_annotations("user_id,label\nu1,pro\nu2,anti\n") == {"u1": "pro", "u2": "anti"}


def test_surface_top10_cases():
    small = Partition({f"u{i}": 0 for i in range(4)})
    assert surface_top10(small, {}) == {0: ["u0", "u1", "u2", "u3"]}
    p = Partition({f"u{i:02d}": 0 for i in range(30)})
    act = {u: NodeActivity(u, 1, 0) for u in p.assignment}
    act["u29"] = NodeActivity("u29", 5, 0)
    top = surface_top10(p, act)[0]
    assert top[0] == "u29" and top[1:] == [f"u{i:02d}" for i in range(9)]


def test_surface_top10_finds_planted_heavy_hitters():
    spec = PlantedSpec([(60, "A"), (60, "B")], p_in=0.1, p_out=0.005, heavy_hitters={"A": 10, "B": 10}, heavy_multiplier=15)
    corpus = generate(spec, seed=8)
    records, _ = parse_corpus(corpus.corpus_text().splitlines(), schedule_from_config(corpus.config()))
    g = build_retweet_graph(records, "a")
    groups = corpus.truth["communities"]["a"]
    p = Partition.from_groups({u: groups[u] for u in g.nodes})
    top = surface_top10(p, node_activity(g, records, "a"))
    planted = corpus.truth["heavy_hitters"]["a"]
    for c, members in top.items():
        label = groups[members[0]]
        assert set(members) == set(planted[label])


def test_classification_csv():
    text = classification_csv([BotScoreRecord("b", 0.9, 1.0), BotScoreRecord("a", 0.001, 0.0)])
    assert text.splitlines() == [
        "user_id,cap,fake_follower_score,classification",
        "a,0.001,0.0,genuine",
        "b,0.9,1.0,automated",
    ]
