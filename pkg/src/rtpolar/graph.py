"""Retweet graph construction, reciprocal subgraphs and graph export."""

from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from rtpolar.ingest import TweetRecord


@dataclass(frozen=True)
class RetweetGraph:
    """Simple weighted graph keyed by user id.

    Directed edges point from the retweeted author to the retweeter.
    Undirected graphs store each pair once as ``(min, max)``.
    """

    nodes: frozenset[str]
    edges: Mapping[tuple[str, str], int | float]
    directed: bool = True
    _adj: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        for (u, v), w in self.edges.items():
            if u == v:
                raise ValueError(f"self-loop on {u!r}")
            if w <= 0:
                raise ValueError(f"non-positive weight on edge {u!r}->{v!r}")
            if u not in self.nodes or v not in self.nodes:
                raise ValueError(f"edge {u!r}->{v!r} references unknown node")
            if not self.directed and u > v:
                raise ValueError("undirected edges must be stored as (min, max)")

    @property
    def N(self) -> int:
        return len(self.nodes)

    @property
    def L(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self):
        return sum(self.edges.values())

    def weight(self, u: str, v: str):
        """The adjacency entry A_uv (0 when absent)."""
        if not self.directed and u > v:
            u, v = v, u
        return self.edges.get((u, v), 0)

    def neighbors(self) -> dict[str, dict[str, int | float]]:
        """Undirected weighted neighbour map (directed edges are summed both ways)."""
        if self._adj is None:
            adj: dict[str, dict[str, int | float]] = {n: {} for n in sorted(self.nodes)}
            for (u, v), w in self.edges.items():
                adj[u][v] = adj[u].get(v, 0) + w
                adj[v][u] = adj[v].get(u, 0) + w
            object.__setattr__(self, "_adj", adj)
        return self._adj

    def degree(self) -> dict[str, int]:
        return {n: len(nb) for n, nb in self.neighbors().items()}

    def subgraph(self, keep: Iterable[str]) -> "RetweetGraph":
        keep = frozenset(keep) & self.nodes
        edges = {e: w for e, w in self.edges.items() if e[0] in keep and e[1] in keep}
        return RetweetGraph(keep, edges, self.directed)


def empty_graph(directed: bool = True) -> RetweetGraph:
    return RetweetGraph(frozenset(), {}, directed)


def build_retweet_graph(records: Iterable[TweetRecord], window: str | None = None) -> RetweetGraph:
    """One node per user seen in the (windowed) records; edge B->A when A retweets B."""
    nodes: set[str] = set()
    weights: Counter = Counter()
    for r in records:
        if window is not None and r.window_label != window:
            continue
        nodes.add(r.author_id)
        if r.retweeted_author_id is None:
            continue
        nodes.add(r.retweeted_author_id)
        if r.retweeted_author_id != r.author_id:
            weights[(r.retweeted_author_id, r.author_id)] += 1
    return RetweetGraph(frozenset(nodes), dict(sorted(weights.items())), True)


def reciprocal_subgraph(g: RetweetGraph) -> RetweetGraph:
    if not g.directed:
        raise ValueError("reciprocal subgraph needs a directed graph")
    edges = {(u, v): w for (u, v), w in g.edges.items() if (v, u) in g.edges}
    nodes = frozenset(n for e in edges for n in e)
    return RetweetGraph(nodes, edges, True)


def undirected_projection(g: RetweetGraph) -> RetweetGraph:
    if not g.directed:
        return g
    acc: dict[tuple[str, str], int | float] = defaultdict(int)
    for (u, v), w in g.edges.items():
        acc[(u, v) if u < v else (v, u)] += w
    return RetweetGraph(g.nodes, dict(sorted(acc.items())), False)


@dataclass(frozen=True)
class NodeActivity:
    user_id: str
    accumulated_retweets: int
    out_tweets: int


def node_activity(
    g: RetweetGraph, records: Iterable[TweetRecord], window: str | None = None
) -> dict[str, NodeActivity]:
    """Times each user was retweeted (weighted out-edge sum) and their record count."""
    retweeted: Counter = Counter()
    for (src, _), w in g.edges.items():
        retweeted[src] += w
    tweets: Counter = Counter()
    for r in records:
        if window is not None and r.window_label != window:
            continue
        tweets[r.author_id] += 1
    return {
        u: NodeActivity(u, int(retweeted.get(u, 0)), int(tweets.get(u, 0))) for u in sorted(g.nodes)
    }


def edge_list_csv(g: RetweetGraph) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["source", "target", "weight"])
    for (u, v), wt in sorted(g.edges.items()):
        w.writerow([u, v, wt])
    return buf.getvalue()


def read_edge_list_csv(text: str, directed: bool = True) -> RetweetGraph:
    rows = list(csv.DictReader(io.StringIO(text)))
    edges = {(r["source"], r["target"]): int(r["weight"]) for r in rows}
    nodes = frozenset(n for e in edges for n in e)
    return RetweetGraph(nodes, edges, directed)


def to_gexf(
    g: RetweetGraph,
    community: Mapping[str, int] | None = None,
    activity: Mapping[str, NodeActivity] | None = None,
) -> str:
    """Serialize as GEXF 1.2 with ``community``/``accumulated_retweets`` node attributes."""
    ns = "http://www.gexf.net/1.2draft"
    root = ET.Element("gexf", {"xmlns": ns, "version": "1.2"})
    graph = ET.SubElement(
        root, "graph", {"defaultedgetype": "directed" if g.directed else "undirected", "mode": "static"}
    )
    attrs = ET.SubElement(graph, "attributes", {"class": "node", "mode": "static"})
    ET.SubElement(attrs, "attribute", {"id": "0", "title": "community", "type": "integer"})
    ET.SubElement(attrs, "attribute", {"id": "1", "title": "accumulated_retweets", "type": "integer"})
    nodes_el = ET.SubElement(graph, "nodes")
    for n in sorted(g.nodes):
        node = ET.SubElement(nodes_el, "node", {"id": n, "label": n})
        vals = ET.SubElement(node, "attvalues")
        cid = community.get(n, -1) if community is not None else -1
        ET.SubElement(vals, "attvalue", {"for": "0", "value": str(cid)})
        acc = activity[n].accumulated_retweets if activity is not None and n in activity else 0
        ET.SubElement(vals, "attvalue", {"for": "1", "value": str(acc)})
    edges_el = ET.SubElement(graph, "edges")
    for i, ((u, v), w) in enumerate(sorted(g.edges.items())):
        ET.SubElement(edges_el, "edge", {"id": str(i), "source": u, "target": v, "weight": str(w)})
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"
