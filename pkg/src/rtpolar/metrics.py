"""Structural metrics: clustering, assortativity, path statistics, E-I index, G(n, m) baselines."""

from __future__ import annotations

import csv
import io
import json
import math
import random
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from rtpolar.community import Partition, QualityError, detect_communities, modularity
from rtpolar.graph import RetweetGraph, undirected_projection


@dataclass(frozen=True)
class ClusteringStats:
    c: dict[str, float]
    L_i: dict[str, int]
    k: dict[str, int]
    average: float


def clustering(g: RetweetGraph, exclude_low_degree: bool = False) -> ClusteringStats:
    """Unweighted local clustering ``2 L_i / (k_i (k_i - 1))`` and its mean.

    Nodes with fewer than two neighbours count as 0 in the average unless
    ``exclude_low_degree`` is set, in which case they are left out of it.
    """
    adj = {n: set(nb) for n, nb in undirected_projection(g).neighbors().items()}
    c, links, deg = {}, {}, {}
    for n, nb in adj.items():
        k = len(nb)
        li = sum(len(nb & adj[m]) for m in nb) // 2
        deg[n], links[n] = k, li
        c[n] = 2 * li / (k * (k - 1)) if k >= 2 else 0.0
    pool = [c[n] for n in adj if not exclude_low_degree or deg[n] >= 2]
    average = math.fsum(pool) / len(pool) if pool else 0.0
    return ClusteringStats(c, links, deg, average)


@dataclass(frozen=True)
class AssortativityStats:
    r: float | None
    e_jk: dict[tuple[int, int], float]
    q_k: dict[int, float]
    sigma_q2: float

    @property
    def defined(self) -> bool:
        return self.r is not None


def assortativity(g: RetweetGraph) -> AssortativityStats:
    """Degree assortativity over remaining degrees (degree - 1) at both edge ends.

    Sums are accumulated in integers so a zero variance is detected exactly;
    ``r`` is ``None`` in that case.
    """
    ug = undirected_projection(g)
    if ug.L == 0:
        raise ValueError("assortativity needs at least one edge")
    deg = ug.degree()
    pairs: Counter = Counter()
    for u, v in ug.edges:
        a, b = deg[u] - 1, deg[v] - 1
        pairs[(a, b)] += 1
        pairs[(b, a)] += 1
    ends = 2 * ug.L
    ends_k: Counter = Counter()
    for (j, _), cnt in pairs.items():
        ends_k[j] += cnt
    s1 = sum(k * n for k, n in ends_k.items())
    s2 = sum(k * k * n for k, n in ends_k.items())
    sjk = sum(j * k * n for (j, k), n in pairs.items())
    var_num = ends * s2 - s1 * s1
    e_jk = {jk: n / ends for jk, n in sorted(pairs.items())}
    q_k = {k: n / ends for k, n in sorted(ends_k.items())}
    sigma_q2 = var_num / (ends * ends)
    r = (ends * sjk - s1 * s1) / var_num if var_num != 0 else None
    return AssortativityStats(r, e_jk, q_k, sigma_q2)


@dataclass(frozen=True)
class PathStats:
    diameter: int
    average_path_length: float
    component_size: int
    degenerate: bool = False


def largest_component(g: RetweetGraph) -> list[str]:
    ug = undirected_projection(g)
    nodes = sorted(ug.nodes)
    if not nodes:
        return []
    idx = {n: i for i, n in enumerate(nodes)}
    mat = _csr(ug, idx)
    _, labels = connected_components(mat, directed=False)
    counts = Counter(labels.tolist())
    # ties: component containing the smallest id
    best = max(counts, key=lambda lab: (counts[lab], -int(np.argmax(labels == lab))))
    return [n for n, lab in zip(nodes, labels) if lab == best]


def _csr(ug: RetweetGraph, idx: Mapping[str, int]) -> csr_matrix:
    n = len(idx)
    rows = [idx[u] for u, v in ug.edges] + [idx[v] for u, v in ug.edges]
    cols = [idx[v] for u, v in ug.edges] + [idx[u] for u, v in ug.edges]
    return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))


def path_stats(g: RetweetGraph, chunk: int = 512) -> PathStats:
    """Exact BFS diameter and mean distance over ordered pairs of the largest component."""
    ug = undirected_projection(g)
    if ug.L == 0:
        return PathStats(0, 0.0, min(ug.N, 1), degenerate=True)
    comp = largest_component(ug)
    sub = ug.subgraph(comp)
    idx = {n: i for i, n in enumerate(comp)}
    mat = _csr(sub, idx)
    n = len(comp)
    diameter = 0
    total = 0
    for lo in range(0, n, chunk):
        dist = shortest_path(mat, method="D", unweighted=True, indices=np.arange(lo, min(n, lo + chunk)))
        diameter = max(diameter, int(dist.max()))
        total += int(dist.sum())
    return PathStats(diameter, total / (n * (n - 1)), n)


@dataclass(frozen=True)
class EIIndex:
    internal: int
    external: int

    @property
    def ties(self) -> int:
        return self.internal + self.external

    @property
    def value(self) -> float | None:
        if self.ties == 0:
            return None
        return (self.external - self.internal) / self.ties

    @property
    def magnitude(self) -> float | None:
        v = self.value
        return None if v is None else abs(v)


def ei_index(g: RetweetGraph, groups: Partition | Mapping[str, object]) -> EIIndex:
    """Count external vs internal ties on the unweighted undirected view."""
    label = groups.assignment if isinstance(groups, Partition) else groups
    internal = external = 0
    for u, v in undirected_projection(g).edges:
        try:
            same = label[u] == label[v]
        except KeyError as exc:
            raise ValueError(f"node {exc.args[0]!r} has ties but no group") from None
        if same:
            internal += 1
        else:
            external += 1
    return EIIndex(internal, external)


def _pair_from_index(k: int, n: int) -> tuple[int, int]:
    total = n * (n - 1) // 2
    r = total - 1 - k
    t = (math.isqrt(8 * r + 1) - 1) // 2
    i = n - 2 - t
    j = n - 1 - (r - t * (t + 1) // 2)
    return i, j


def random_baseline(n: int, m: int, seed: int = 0) -> RetweetGraph:
    """Uniform simple undirected G(n, m); node ids are zero-padded integers."""
    max_m = n * (n - 1) // 2
    if n < 0 or not 0 <= m <= max_m:
        raise ValueError(f"m={m} outside [0, {max_m}] for n={n}")
    width = len(str(max(n - 1, 0)))
    names = [f"{i:0{width}d}" for i in range(n)]
    rng = random.Random(seed)
    edges = {}
    for k in sorted(rng.sample(range(max_m), m)):
        i, j = _pair_from_index(k, n)
        edges[(names[i], names[j])] = 1
    return RetweetGraph(frozenset(names), edges, False)


@dataclass(frozen=True)
class StructureReport:
    N: int
    L: int
    diameter: int
    average_path_length: float
    average_clustering: float
    modularity: float | None
    assortativity: float | None
    ei_index: float | None
    n_communities: int
    resolution: float

    RADAR_METRICS = (
        "N",
        "L",
        "diameter",
        "average_path_length",
        "modularity",
        "assortativity",
        "average_clustering",
    )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ei_index_magnitude"] = None if self.ei_index is None else abs(self.ei_index)
        return d


def structure_report(g: RetweetGraph, p: Partition) -> StructureReport:
    ug = undirected_projection(g)
    ps = path_stats(ug)
    try:
        mod = modularity(ug, p).M
    except QualityError:
        mod = None
    r = assortativity(ug).r if ug.L else None
    return StructureReport(
        N=ug.N,
        L=ug.L,
        diameter=ps.diameter,
        average_path_length=ps.average_path_length,
        average_clustering=clustering(ug).average,
        modularity=mod,
        assortativity=r,
        ei_index=ei_index(ug, p).value,
        n_communities=len({p.assignment[n] for n in ug.nodes}),
        resolution=p.resolution,
    )


def radar_report(g: RetweetGraph, p: Partition, seed: int = 0) -> tuple[StructureReport, StructureReport]:
    """Report for ``g`` next to one for G(N, L) partitioned at the same resolution."""
    ug = undirected_projection(g)
    if ug.N == 0:
        raise ValueError("radar report needs a non-empty graph")
    observed = structure_report(ug, p)
    base = random_baseline(ug.N, ug.L, seed)
    base_p = detect_communities(base, p.resolution, seed)
    return observed, structure_report(base, base_p)


def reports_json(**reports: StructureReport) -> str:
    return json.dumps({k: v.to_dict() for k, v in reports.items()}, indent=2, sort_keys=True) + "\n"


def radar_csv(observed: StructureReport, baseline: StructureReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "observed", "baseline"])
    for name in StructureReport.RADAR_METRICS:
        w.writerow([name, _fmt(getattr(observed, name)), _fmt(getattr(baseline, name))])
    return buf.getvalue()


def _fmt(x) -> str:
    if x is None:
        return "undefined"
    if isinstance(x, float):
        return repr(round(x, 12))
    return str(x)
