"""Modularity quality terms and multilevel (Louvain-style) community detection.

The user-facing ``resolution`` follows the convention where larger values give
fewer, larger communities: the null-model term is scaled by
``gamma = 1 / resolution``. At resolution 1 everything reduces to ordinary
weighted Newman-Girvan modularity.
"""

from __future__ import annotations

import csv
import io
import json
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping

from rtpolar.graph import RetweetGraph, undirected_projection

_EPS = 1e-9


class QualityError(ValueError):
    """Modularity is undefined (graph without edges)."""


@dataclass(frozen=True)
class Partition:
    assignment: Mapping[str, int]
    resolution: float = 1.0

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        used = set(self.assignment.values())
        if used != set(range(len(used))):
            raise ValueError(f"community ids must be dense 0..n_c-1, got {sorted(used)}")

    @property
    def n_c(self) -> int:
        return len(set(self.assignment.values()))

    @property
    def gamma(self) -> float:
        return 1.0 / self.resolution

    def communities(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = defaultdict(list)
        for node in sorted(self.assignment):
            out[self.assignment[node]].append(node)
        return dict(sorted(out.items()))

    def sizes(self) -> dict[int, int]:
        return {c: len(m) for c, m in self.communities().items()}

    @classmethod
    def from_groups(cls, groups: Mapping[str, object], resolution: float = 1.0) -> "Partition":
        """Densify arbitrary group labels (ids ordered by first sorted member)."""
        ids: dict[object, int] = {}
        assignment = {}
        for node in sorted(groups):
            label = groups[node]
            if label not in ids:
                ids[label] = len(ids)
            assignment[node] = ids[label]
        return cls(assignment, resolution)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["user_id", "community_id"])
        for node in sorted(self.assignment):
            w.writerow([node, self.assignment[node]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, resolution: float = 1.0) -> "Partition":
        rows = csv.DictReader(io.StringIO(text))
        return cls({r["user_id"]: int(r["community_id"]) for r in rows}, resolution)


@dataclass(frozen=True)
class CommunityQuality:
    community: int
    L_c: float
    k_c: float
    null_term: float
    M_c: float


@dataclass(frozen=True)
class QualityBreakdown:
    L: float
    gamma: float
    per_community: tuple[CommunityQuality, ...]

    @property
    def M(self) -> float:
        return sum(q.M_c for q in self.per_community)

    def to_json(self) -> str:
        body = {
            "L": self.L,
            "gamma": self.gamma,
            "M": self.M,
            "communities": [
                {"community": q.community, "L_c": q.L_c, "k_c": q.k_c, "null_term": q.null_term, "M_c": q.M_c}
                for q in self.per_community
            ],
        }
        return json.dumps(body, indent=2, sort_keys=True) + "\n"


def modularity(g: RetweetGraph, p: Partition, gamma: float | None = None) -> QualityBreakdown:
    """Per-community terms ``L_c/L - gamma*(k_c/2L)^2`` on the weighted undirected view.

    ``gamma`` defaults to ``1/p.resolution``. Directed graphs are projected first.
    """
    ug = undirected_projection(g)
    if gamma is None:
        gamma = p.gamma
    L = ug.total_weight
    if L <= 0:
        raise QualityError("modularity is undefined on a graph without edges")
    missing = ug.nodes - p.assignment.keys()
    if missing:
        raise ValueError(f"partition does not cover {len(missing)} node(s), e.g. {sorted(missing)[0]!r}")
    internal: dict[int, float] = defaultdict(float)
    degree: dict[int, float] = defaultdict(float)
    for (u, v), w in ug.edges.items():
        cu, cv = p.assignment[u], p.assignment[v]
        degree[cu] += w
        degree[cv] += w
        if cu == cv:
            internal[cu] += w
    terms = []
    for c in sorted(set(p.assignment[n] for n in ug.nodes)):
        null = (degree[c] / (2 * L)) ** 2
        terms.append(CommunityQuality(c, internal[c], degree[c], null, internal[c] / L - gamma * null))
    return QualityBreakdown(L, gamma, tuple(terms))


# -- Louvain ---------------------------------------------------------------


def _aggregate(base_nbrs, base_loops, membership, n_comm):
    nbrs: list[dict[int, float]] = [dict() for _ in range(n_comm)]
    loops = [0.0] * n_comm
    for i, row in enumerate(base_nbrs):
        ci = membership[i]
        loops[ci] += base_loops[i]
        for j, w in row.items():
            cj = membership[j]
            if ci == cj:
                if i < j:
                    loops[ci] += w
            else:
                nbrs[ci][cj] = nbrs[ci].get(cj, 0.0) + w
    return nbrs, loops


def _dense(membership):
    remap: dict[int, int] = {}
    out = []
    for c in membership:
        if c not in remap:
            remap[c] = len(remap)
        out.append(remap[c])
    return out, len(remap)


def _local_moves(nbrs, strength, comm, order, gamma, two_m) -> bool:
    """Greedy single-node moves until no move gains; mutates ``comm``."""
    n = len(nbrs)
    tot = [0.0] * n
    size = [0] * n
    for i, c in enumerate(comm):
        tot[c] += strength[i]
        size[c] += 1
    empty = sorted(c for c in range(n) if size[c] == 0)
    moved_any = False
    while True:
        moves = 0
        for i in order:
            ci = comm[i]
            ki = strength[i]
            links: dict[int, float] = {}
            for j, w in nbrs[i].items():
                cj = comm[j]
                links[cj] = links.get(cj, 0.0) + w
            tot[ci] -= ki
            size[ci] -= 1
            scale = gamma * ki / two_m
            stay = links.get(ci, 0.0) - scale * tot[ci]
            cands = {c: lw - scale * tot[c] for c, lw in links.items() if c != ci}
            if size[ci] > 0 and empty:
                cands.setdefault(empty[0], 0.0)
            target = ci
            if cands:
                best = max(cands.values())
                if best > stay + _EPS:
                    target = min(c for c, gval in cands.items() if gval >= best - _EPS)
            if target != ci:
                if size[ci] == 0:
                    empty.append(ci)
                    empty.sort()
                if size[target] == 0:
                    empty.remove(target)
                comm[i] = target
                moves += 1
            tot[target] += ki
            size[target] += 1
        if moves == 0:
            return moved_any
        moved_any = True


def _strengths(nbrs, loops):
    return [sum(row.values()) + 2 * loops[i] for i, row in enumerate(nbrs)]


def _multilevel(base_nbrs, base_loops, membership, gamma, two_m, rng):
    while True:
        membership, n_comm = _dense(membership)
        nbrs, loops = _aggregate(base_nbrs, base_loops, membership, n_comm)
        comm = list(range(n_comm))
        order = list(range(n_comm))
        rng.shuffle(order)
        if not _local_moves(nbrs, _strengths(nbrs, loops), comm, order, gamma, two_m):
            return membership
        membership = [comm[c] for c in membership]


def detect_communities(g: RetweetGraph, resolution: float = 1.0, seed: int = 0) -> Partition:
    """Maximize ``M(1/resolution)`` by multilevel greedy optimization.

    Nodes are visited in a seeded shuffle of id order; equal-gain moves go to the
    lowest community id and a node only leaves its community for a strict gain.
    After the multilevel pass, single-node moves are re-tried on the original
    graph and the hierarchy is rebuilt until neither changes anything, so the
    result is a local optimum under both node moves and community merges.
    Community ids are ordered by size (desc) and then smallest member id.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    ug = undirected_projection(g)
    nodes = sorted(ug.nodes)
    if not nodes:
        return Partition({}, resolution)
    idx = {n: i for i, n in enumerate(nodes)}
    base_nbrs: list[dict[int, float]] = [dict() for _ in nodes]
    for (u, v), w in ug.edges.items():
        base_nbrs[idx[u]][idx[v]] = float(w)
        base_nbrs[idx[v]][idx[u]] = float(w)
    base_loops = [0.0] * len(nodes)
    two_m = 2.0 * ug.total_weight
    gamma = 1.0 / resolution
    membership = list(range(len(nodes)))
    if two_m > 0:
        rng = random.Random(seed)
        strength = _strengths(base_nbrs, base_loops)
        order = list(range(len(nodes)))
        while True:
            membership = _multilevel(base_nbrs, base_loops, membership, gamma, two_m, rng)
            rng.shuffle(order)
            if not _local_moves(base_nbrs, strength, membership, order, gamma, two_m):
                break
    groups: dict[int, list[str]] = defaultdict(list)
    for n, c in zip(nodes, membership):
        groups[c].append(n)
    ranked = sorted(groups.values(), key=lambda members: (-len(members), members[0]))
    assignment = {n: cid for cid, members in enumerate(ranked) for n in members}
    return Partition(dict(sorted(assignment.items())), resolution)


def top_k_communities(p: Partition, g: RetweetGraph | None = None, k: int = 7) -> list[int]:
    """Ids of the k largest communities by node count; ties go to the smaller id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    nodes = g.nodes if g is not None else p.assignment.keys()
    sizes: dict[int, int] = defaultdict(int)
    for n in nodes:
        if n in p.assignment:
            sizes[p.assignment[n]] += 1
    return [c for c, _ in sorted(sizes.items(), key=lambda kv: (-kv[1], kv[0]))[:k]]
