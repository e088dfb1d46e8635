"""Human community labels as a view over detected partitions."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

from rtpolar.community import Partition

UNKNOWN = "unknown"


@dataclass(frozen=True)
class CommunityLabelAssignment:
    window: str
    community: int
    label: str
    source: str = ""


@dataclass(frozen=True)
class LabeledPartition:
    partition: Partition
    window: str
    community_labels: Mapping[int, str]

    def label_of_community(self, c: int) -> str:
        return self.community_labels.get(c, UNKNOWN)

    def label_of(self, node: str) -> str:
        return self.label_of_community(self.partition.assignment[node])

    def node_labels(self) -> dict[str, str]:
        return {n: self.label_of_community(c) for n, c in self.partition.assignment.items()}

    def label_sizes(self) -> dict[str, int]:
        sizes: dict[str, int] = defaultdict(int)
        for c, n in self.partition.sizes().items():
            sizes[self.label_of_community(c)] += n
        return dict(sorted(sizes.items()))


def apply_labels(
    p: Partition, assignments: Iterable[CommunityLabelAssignment], window: str = ""
) -> LabeledPartition:
    """Attach labels for ``window``; several clusters may share one label."""
    known = set(p.assignment.values())
    labels: dict[int, str] = {}
    for a in assignments:
        if a.window != window:
            continue
        if a.community not in known:
            raise ValueError(f"window {window!r}: no community {a.community} to label {a.label!r}")
        if a.community in labels and labels[a.community] != a.label:
            raise ValueError(f"window {window!r}: community {a.community} labelled twice")
        labels[a.community] = a.label
    return LabeledPartition(p, window, dict(sorted(labels.items())))


def read_assignments(text: str, source: str = "") -> list[CommunityLabelAssignment]:
    return [
        CommunityLabelAssignment(r["window"], int(r["community_id"]), r["label"], source)
        for r in csv.DictReader(io.StringIO(text))
    ]


def assignments_csv(assignments: Iterable[CommunityLabelAssignment]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["window", "community_id", "label"])
    for a in assignments:
        w.writerow([a.window, a.community, a.label])
    return buf.getvalue()
