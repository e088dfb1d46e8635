"""Cross-window community flows, community tracking and influencer extraction."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

from rtpolar.community import Partition
from rtpolar.graph import NodeActivity

NEW = "NEW"
EXITED = "EXITED"


@dataclass(frozen=True)
class FlowMatrix:
    from_window: str
    to_window: str
    flows: Mapping[tuple[object, object], int]

    def inflow(self, target) -> int:
        return sum(n for (_, t), n in self.flows.items() if t == target)

    def outflow(self, source) -> int:
        return sum(n for (s, _), n in self.flows.items() if s == source)

    def get(self, source, target) -> int:
        return self.flows.get((source, target), 0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["from_window", "to_window", "source", "target", "count"])
        for (s, t), n in self.flows.items():
            w.writerow([self.from_window, self.to_window, s, t, n])
        return buf.getvalue()


def _flow_key(x):
    # NEW/EXITED sort after community ids
    return (1, str(x)) if isinstance(x, str) and x in (NEW, EXITED) else (0, x)


def flow_matrix(
    prev: Partition | Mapping[str, object],
    nxt: Partition | Mapping[str, object],
    from_window: str = "",
    to_window: str = "",
) -> FlowMatrix:
    """Count users per (previous community, next community) pair.

    Users missing from ``prev`` enter as NEW; users missing from ``nxt`` leave
    to EXITED. Either side may be a partition or any node -> label mapping.
    """
    a = prev.assignment if isinstance(prev, Partition) else prev
    b = nxt.assignment if isinstance(nxt, Partition) else nxt
    counts: Counter = Counter()
    for u in a.keys() | b.keys():
        counts[(a.get(u, NEW), b.get(u, EXITED))] += 1
    flows = dict(sorted(counts.items(), key=lambda kv: (_flow_key(kv[0][0]), _flow_key(kv[0][1]))))
    return FlowMatrix(from_window, to_window, flows)


@dataclass(frozen=True)
class TrackStep:
    prev_community: int
    next_community: int
    overlap: float


def match_communities(prev: Partition, nxt: Partition, threshold: float = 0.1) -> list[TrackStep]:
    """Greedy one-to-one matching by descending Jaccard overlap of member sets."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    pc = {c: set(m) for c, m in prev.communities().items()}
    nc = {c: set(m) for c, m in nxt.communities().items()}
    shared: Counter = Counter()
    for u, c in prev.assignment.items():
        d = nxt.assignment.get(u)
        if d is not None:
            shared[(c, d)] += 1
    scored = []
    for (c, d), inter in shared.items():
        jac = inter / (len(pc[c]) + len(nc[d]) - inter)
        if jac >= threshold:
            scored.append((-jac, c, d))
    scored.sort()
    used_p, used_n, steps = set(), set(), []
    for neg, c, d in scored:
        if c in used_p or d in used_n:
            continue
        used_p.add(c)
        used_n.add(d)
        steps.append(TrackStep(c, d, -neg))
    return sorted(steps, key=lambda s: s.prev_community)


@dataclass(frozen=True)
class CommunityTrack:
    track_id: str
    steps: tuple[tuple[str, int], ...]  # (window, community)
    overlaps: tuple[float, ...]  # Jaccard between consecutive steps


def build_tracks(partitions: Mapping[str, Partition], threshold: float = 0.1) -> list[CommunityTrack]:
    """Chain matches over consecutive windows into tracks named T0, T1, ..."""
    windows = list(partitions)
    open_tracks: dict[int, int] = {}  # community in previous window -> track index
    tracks: list[tuple[list, list]] = []
    for i, w in enumerate(windows):
        p = partitions[w]
        links: dict[int, tuple[int, float]] = {}
        if i > 0:
            for s in match_communities(partitions[windows[i - 1]], p, threshold):
                if s.prev_community in open_tracks:
                    links[s.next_community] = (open_tracks[s.prev_community], s.overlap)
        current: dict[int, int] = {}
        for c in sorted(p.communities()):
            if c in links:
                t, ov = links[c]
                tracks[t][0].append((w, c))
                tracks[t][1].append(ov)
            else:
                t = len(tracks)
                tracks.append(([(w, c)], []))
            current[c] = t
        open_tracks = current
    return [CommunityTrack(f"T{i}", tuple(s), tuple(o)) for i, (s, o) in enumerate(tracks)]


def community_size_series(
    partitions: Mapping[str, Partition],
    labels: Mapping[str, Mapping[int, str]] | None = None,
    threshold: float = 0.1,
) -> list[tuple[str, str, int]]:
    """Rows ``(window, community label, users)``.

    With ``labels`` (window -> community -> label) clusters sharing a label are
    summed; otherwise communities are named by their track id.
    """
    names: dict[tuple[str, int], str] = {}
    if labels is None:
        for tr in build_tracks(partitions, threshold):
            for step in tr.steps:
                names[step] = tr.track_id
    rows = []
    for w, p in partitions.items():
        sizes: dict[str, int] = defaultdict(int)
        for c, n in p.sizes().items():
            name = labels.get(w, {}).get(c, "unknown") if labels is not None else names[(w, c)]
            sizes[name] += n
        rows.extend((w, name, n) for name, n in sorted(sizes.items()))
    return rows


@dataclass(frozen=True)
class InfluencerSet:
    window: str
    community: int
    members: tuple[tuple[str, int], ...]


def influencer_count(size: int, fraction: float = 0.01) -> int:
    # round first so 0.01 * 300 is 3, not 4
    return max(1, math.ceil(round(fraction * size, 9)))


def _ranked(members: Sequence[str], activity: Mapping[str, NodeActivity]):
    def score(u):
        a = activity.get(u)
        return a.accumulated_retweets if a is not None else 0

    return sorted(((u, score(u)) for u in members), key=lambda t: (-t[1], t[0]))


def influencers(
    p: Partition,
    activity: Mapping[str, NodeActivity],
    window: str = "",
    fraction: float = 0.01,
    communities: Sequence[int] | None = None,
) -> list[InfluencerSet]:
    """Top ``fraction`` (at least one) most-retweeted members of each community."""
    out = []
    for c, members in p.communities().items():
        if communities is not None and c not in communities:
            continue
        ranked = _ranked(members, activity)
        out.append(InfluencerSet(window, c, tuple(ranked[: influencer_count(len(members), fraction)])))
    return out


def influencers_csv(sets: Sequence[InfluencerSet]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["window", "community", "user_id", "retweets"])
    for s in sets:
        for u, n in s.members:
            w.writerow([s.window, s.community, u, n])
    return buf.getvalue()


def read_influencers_csv(text: str) -> list[InfluencerSet]:
    grouped: dict[tuple[str, int], list] = defaultdict(list)
    for r in csv.DictReader(io.StringIO(text)):
        grouped[(r["window"], int(r["community"]))].append((r["user_id"], int(r["retweets"])))
    return [InfluencerSet(w, c, tuple(m)) for (w, c), m in grouped.items()]
