"""Planted-structure corpus generator used as ground truth for the pipeline."""

from __future__ import annotations

import json
import string
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import yaml

from rtpolar.ingest import format_timestamp
from rtpolar.temporal import flow_matrix

# 2021-04-29T00:00:00Z
DEFAULT_START = 1619654400
WEEK = 7 * 86400


@dataclass
class PlantedSpec:
    """Communities, retweet probabilities and scripted migrations.

    ``p_pole`` is the probability between distinct communities of the same
    pole and defaults to ``p_out``. ``migration_script`` entries are
    ``(window index, from label, to label, fraction)``; moves take effect at
    that window and persist afterwards.
    """

    communities: list[tuple[int, str]]
    p_in: float
    p_out: float
    p_pole: float | None = None
    pole_map: dict[str, int] = field(default_factory=dict)
    heavy_hitters: dict[str, int] = field(default_factory=dict)
    heavy_multiplier: int = 10
    windows: int = 1
    migration_script: list[tuple[int, str, str, float]] = field(default_factory=list)
    p_active: float = 1.0
    hashtags: list[str] = field(default_factory=lambda: ["election1400"])
    noise_records: int = 0
    start: int = DEFAULT_START
    window_seconds: int = WEEK

    def __post_init__(self):
        self.communities = [(int(s), str(lab)) for s, lab in self.communities]
        self.migration_script = [(int(w), str(a), str(b), float(f)) for w, a, b, f in self.migration_script]
        labels = [lab for _, lab in self.communities]
        if not labels or len(set(labels)) != len(labels):
            raise ValueError("community labels must be unique and nonempty")
        if any(s < 1 for s, _ in self.communities):
            raise ValueError("community sizes must be >= 1")
        p_pole = self.p_out if self.p_pole is None else self.p_pole
        if not 0 <= self.p_out <= p_pole <= self.p_in <= 1:
            raise ValueError("need 0 <= p_out <= p_pole <= p_in <= 1")
        if not 0 < self.p_active <= 1:
            raise ValueError("p_active must lie in (0, 1]")
        if not 1 <= self.windows <= len(string.ascii_lowercase):
            raise ValueError("windows must be between 1 and 26")
        for w, a, b, f in self.migration_script:
            if a not in labels or b not in labels:
                raise ValueError(f"migration {a!r}->{b!r} references an unknown community")
            if not 0 <= w < self.windows:
                raise ValueError(f"migration window {w} outside 0..{self.windows - 1}")
            if not 0 <= f <= 1:
                raise ValueError("migration fraction must lie in [0, 1]")
        for lab in self.heavy_hitters:
            if lab not in labels:
                raise ValueError(f"heavy hitters for unknown community {lab!r}")

    @property
    def window_labels(self) -> list[str]:
        return list(string.ascii_lowercase[: self.windows])

    def pole(self, label: str) -> int:
        # communities without an explicit pole form their own
        return self.pole_map.get(label, -1 - [lab for _, lab in self.communities].index(label))

    @classmethod
    def from_mapping(cls, cfg: Mapping) -> "PlantedSpec":
        cfg = dict(cfg)
        cfg["communities"] = [
            (c["size"], c["label"]) if isinstance(c, Mapping) else tuple(c) for c in cfg["communities"]
        ]
        cfg["migration_script"] = [
            (m["window"], m["source"], m["target"], m["fraction"]) if isinstance(m, Mapping) else tuple(m)
            for m in cfg.get("migration_script", [])
        ]
        return cls(**cfg)


@dataclass
class SynthCorpus:
    records: list[dict]
    truth: dict

    def corpus_text(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def truth_text(self) -> str:
        return json.dumps(self.truth, indent=1, sort_keys=True) + "\n"

    def config(self, **extra) -> dict:
        cfg = {
            "hashtags": list(self.truth["hashtags"]),
            "windows": [dict(w) for w in self.truth["windows"]],
        }
        cfg.update(extra)
        return cfg


def generate(spec: PlantedSpec, seed: int = 0) -> SynthCorpus:
    """Sample a windowed retweet corpus plus the ground truth that produced it."""
    labels = [lab for _, lab in spec.communities]
    users: list[str] = []
    member: dict[str, str] = {}
    heavy: set[str] = set()
    total = sum(s for s, _ in spec.communities)
    width = len(str(total))
    for size, lab in spec.communities:
        ids = [f"u{len(users) + i:0{width}d}" for i in range(size)]
        users.extend(ids)
        member.update((u, lab) for u in ids)
        heavy.update(ids[: spec.heavy_hitters.get(lab, 0)])
    n = len(users)
    p_pole = spec.p_out if spec.p_pole is None else spec.p_pole
    mig_rng = np.random.default_rng([seed, 1_000_003])

    truth: dict = {
        "seed": seed,
        "hashtags": list(spec.hashtags),
        "windows": [],
        "poles": {lab: spec.pole(lab) for lab in labels},
        "heavy_hitters_all": sorted(heavy),
        "communities": {},
        "heavy_hitters": {},
        "tallies": {},
        "edges": {},
        "accumulated_retweets": {},
        "flows": [],
        "noise_records": 0,
    }
    records: list[dict] = []
    prev_groups = None
    mult = np.where(np.array([u in heavy for u in users]), spec.heavy_multiplier, 1)
    for wi, wlab in enumerate(spec.window_labels):
        for w, src, dst, frac in spec.migration_script:
            if w != wi:
                continue
            pool = sorted(u for u in users if member[u] == src)
            k = int(round(frac * len(pool)))
            for i in sorted(mig_rng.choice(len(pool), size=k, replace=False)):
                member[pool[i]] = dst
        rng = np.random.default_rng([seed, wi])
        start = spec.start + wi * spec.window_seconds
        end = start + spec.window_seconds
        truth["windows"].append({"label": wlab, "start": format_timestamp(start), "end": format_timestamp(end)})

        active = rng.random(n) < spec.p_active
        comm = np.array([labels.index(member[u]) for u in users])
        pole = np.array([spec.pole(member[u]) for u in users])
        same_c = comm[:, None] == comm[None, :]
        same_p = pole[:, None] == pole[None, :]
        prob = np.where(same_c, spec.p_in, np.where(same_p, p_pole, spec.p_out))
        prob = prob * (active[:, None] & active[None, :])
        np.fill_diagonal(prob, 0.0)
        hits = rng.random((n, n)) < prob  # hits[a, b]: a retweets b

        seq = 0
        wrecs = []

        def emit(author, rt=None, tags=None):
            nonlocal seq
            rec = {
                "id": f"{wlab}{seq:07d}",
                "created_at": int(rng.integers(start, end)),
                "author_id": author,
                "hashtags": tags if tags is not None else [spec.hashtags[int(rng.integers(len(spec.hashtags)))]],
            }
            if rt is not None:
                rec["retweeted_author_id"] = rt
            seq += 1
            wrecs.append(rec)

        for i in np.flatnonzero(active):
            emit(users[i])
        edges: Counter = Counter()
        for a, b in zip(*np.nonzero(hits)):
            for _ in range(int(mult[b])):
                emit(users[a], users[b])
            edges[(users[b], users[a])] += int(mult[b])
        in_filter = len(wrecs)
        act_idx = np.flatnonzero(active)
        for _ in range(spec.noise_records if len(act_idx) else 0):
            emit(users[int(act_idx[rng.integers(len(act_idx))])], tags=["offtopic_noise"])
        truth["noise_records"] += len(wrecs) - in_filter
        records.extend(wrecs)

        groups = {users[i]: member[users[i]] for i in act_idx}
        truth["communities"][wlab] = groups
        hh: dict[str, list[str]] = defaultdict(list)
        for u in sorted(heavy):
            if u in groups:
                hh[groups[u]].append(u)
        truth["heavy_hitters"][wlab] = dict(hh)
        truth["tallies"][wlab] = {"tweets": in_filter, "users": len(groups)}
        truth["edges"][wlab] = [[s, t, c] for (s, t), c in sorted(edges.items())]
        acc: Counter = Counter()
        for (s, _), c in edges.items():
            acc[s] += c
        truth["accumulated_retweets"][wlab] = {u: acc.get(u, 0) for u in sorted(groups)}
        if prev_groups is not None:
            fm = flow_matrix(prev_groups, groups, spec.window_labels[wi - 1], wlab)
            truth["flows"].extend(
                {"from": fm.from_window, "to": wlab, "source": s, "target": t, "count": c}
                for (s, t), c in fm.flows.items()
            )
        prev_groups = groups
    records.sort(key=lambda r: (r["created_at"], r["id"]))
    return SynthCorpus(records, truth)


def bot_scores_csv(users, seed: int = 0, automated_share: float = 0.7) -> str:
    """Fixture scores: a share of users draw CAP from Beta(8, 2), the rest from Beta(1, 12)."""
    rng = np.random.default_rng([seed, 7_919])
    lines = ["user_id,cap,fake_follower_score"]
    for u in sorted(users):
        bot = rng.random() < automated_share
        cap = rng.beta(8, 2) if bot else rng.beta(1, 12)
        fake = 5 * rng.beta(4, 2) if bot else 5 * rng.beta(1.5, 4)
        lines.append(f"{u},{cap:.4f},{fake:.4f}")
    return "\n".join(lines) + "\n"


def load_spec(text: str) -> PlantedSpec:
    return PlantedSpec.from_mapping(yaml.safe_load(text))


def two_pole_spec(
    poles: int = 2,
    per_pole: int = 5,
    size: int = 50,
    p_in: float = 0.3,
    p_pole: float = 0.015,
    p_out: float = 0.0002,
    **kw,
) -> PlantedSpec:
    """Communities ``P{pole}C{i}`` arranged in ``poles`` poles of ``per_pole`` each."""
    comms, pole_map = [], {}
    for p in range(poles):
        for i in range(per_pole):
            lab = f"P{p}C{i}"
            comms.append((size, lab))
            pole_map[lab] = p
    return PlantedSpec(comms, p_in=p_in, p_out=p_out, p_pole=p_pole, pole_map=pole_map, **kw)
