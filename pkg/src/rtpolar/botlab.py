"""Bot-likelihood scoring, score distributions and label-accuracy sampling."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from rtpolar.community import Partition
from rtpolar.graph import NodeActivity
from rtpolar.temporal import _ranked

LOGGER = logging.getLogger(__name__)

GENUINE_BELOW = 0.01
AUTOMATED_ABOVE = 0.75
FIELD_RANGES = {"cap": (0.0, 1.0), "fake_follower": (0.0, 5.0)}


def classify(cap: float) -> str:
    if cap < GENUINE_BELOW:
        return "genuine"
    if cap > AUTOMATED_ABOVE:
        return "automated"
    return "uncertain"


@dataclass(frozen=True)
class BotScoreRecord:
    user_id: str
    cap: float
    fake_follower_score: float

    @property
    def classification(self) -> str:
        return classify(self.cap)


class UnresolvedUser(LookupError):
    """The provider has no score for this user (suspended, deleted, unknown)."""


class ProviderResponseError(ValueError):
    """The provider answered, but with something that is not a valid score."""


class ScoreProvider(Protocol):
    def lookup(self, user_id: str) -> tuple[float, float]: ...


def _validated(user_id: str, cap, fake) -> tuple[float, float]:
    try:
        cap, fake = float(cap), float(fake)
    except (TypeError, ValueError):
        raise ProviderResponseError(f"user {user_id}: non-numeric score ({cap!r}, {fake!r})") from None
    if not 0.0 <= cap <= 1.0 or not 0.0 <= fake <= 5.0 or math.isnan(cap) or math.isnan(fake):
        raise ProviderResponseError(f"user {user_id}: score out of range (cap={cap}, fake={fake})")
    return cap, fake


class CsvScoreProvider:
    """Offline provider backed by ``user_id,cap,fake_follower_score`` rows."""

    def __init__(self, rows: Mapping[str, tuple[str, str]]):
        self._rows = dict(rows)

    @classmethod
    def from_path(cls, path: str | Path) -> "CsvScoreProvider":
        with open(path, newline="", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    @classmethod
    def from_text(cls, text: str) -> "CsvScoreProvider":
        rows = {}
        for r in csv.DictReader(io.StringIO(text)):
            rows[r["user_id"]] = (r["cap"], r["fake_follower_score"])
        return cls(rows)

    def lookup(self, user_id: str) -> tuple[float, float]:
        if user_id not in self._rows:
            raise UnresolvedUser(user_id)
        return _validated(user_id, *self._rows[user_id])


class HttpScoreProvider:
    """POSTs ``{"user_id": ...}`` and expects ``{"cap": x, "fake_followers": y}``.

    A 404 marks the user unresolved; other failures are retried ``retries`` times.
    """

    def __init__(self, url: str, timeout: float = 10.0, retries: int = 2):
        self.url = url
        self.timeout = timeout
        self.retries = retries

    def lookup(self, user_id: str) -> tuple[float, float]:
        body = json.dumps({"user_id": user_id}).encode()
        last: Exception | None = None
        for _ in range(self.retries + 1):
            req = urllib.request.Request(self.url, data=body, headers={"Content-Type": "application/json"})
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    payload = resp.read()
            except urllib.error.HTTPError as exc:
                if exc.code == 404:
                    raise UnresolvedUser(user_id) from None
                last = exc
                continue
            except (urllib.error.URLError, TimeoutError, OSError) as exc:
                last = exc
                continue
            try:
                obj = json.loads(payload)
                return _validated(user_id, obj["cap"], obj["fake_followers"])
            except (ValueError, KeyError, TypeError) as exc:
                if isinstance(exc, ProviderResponseError):
                    raise
                raise ProviderResponseError(f"user {user_id}: malformed response {payload[:80]!r}") from None
        raise ConnectionError(f"user {user_id}: provider unreachable after {self.retries + 1} attempts: {last}")


def provider_from_config(cfg: Mapping, base: Path | None = None) -> ScoreProvider:
    kind = cfg.get("kind", "csv")
    if kind == "csv":
        path = Path(cfg["path"])
        if base is not None and not path.is_absolute():
            path = base / path
        return CsvScoreProvider.from_path(path)
    if kind == "http":
        return HttpScoreProvider(cfg["url"], float(cfg.get("timeout", 10.0)), int(cfg.get("retries", 2)))
    raise ValueError(f"unknown provider kind {kind!r}")


@dataclass
class ScoringResult:
    records: list[BotScoreRecord]
    unresolved: list[str] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)


def score_users(users: Iterable[str], provider: ScoreProvider, max_workers: int = 4) -> ScoringResult:
    """Look up every user once; results are merged in user-id order.

    Unresolvable users and provider failures are collected rather than raised;
    a malformed response raises :class:`ProviderResponseError` naming the user.
    """
    ids = sorted(set(users))

    def one(uid):
        try:
            return uid, provider.lookup(uid), None
        except UnresolvedUser:
            return uid, None, "unresolved"
        except ProviderResponseError:
            raise
        except (ConnectionError, OSError) as exc:
            return uid, None, str(exc)

    if max_workers > 1 and len(ids) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(one, ids))
    else:
        results = [one(u) for u in ids]
    out = ScoringResult([])
    for uid, score, err in results:
        if score is not None:
            out.records.append(BotScoreRecord(uid, *score))
        elif err == "unresolved":
            out.unresolved.append(uid)
        else:
            out.errors[uid] = err
    return out


@dataclass(frozen=True)
class ScoreDistribution:
    field: str
    values: tuple[float, ...]
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    grid: tuple[float, ...]
    density: tuple[float, ...]
    bandwidth: float
    community: int | None = None
    window: str | None = None

    def to_dict(self) -> dict:
        return {
            "field": self.field,
            "community": self.community,
            "window": self.window,
            "n": len(self.values),
            "summary": {
                k: round(getattr(self, k), 12) for k in ("min", "q1", "median", "q3", "max", "mean")
            },
            "bandwidth": round(self.bandwidth, 12),
            "grid": [round(x, 12) for x in self.grid],
            "density": [round(x, 12) for x in self.density],
        }


def silverman_bandwidth(values: np.ndarray, span: float, floor: float = 0.0) -> float:
    n = len(values)
    if n < 2 or values.min() == values.max():
        # degenerate samples (one value, all equal) get a fixed narrow kernel;
        # np.std of equal floats can be a rounding residue rather than 0
        return span / 20.0
    std = float(np.std(values, ddof=1))
    iqr = float(np.subtract(*np.percentile(values, [75, 25])))
    spread = min(std, iqr / 1.34) if iqr > 0 else std
    h = 0.9 * spread * n ** (-0.2)
    # a kernel narrower than the grid step could fall between grid points
    return max(h, floor)


def distribution(
    records: Sequence[BotScoreRecord],
    field: str = "cap",
    grid_points: int = 64,
    community: int | None = None,
    window: str | None = None,
) -> ScoreDistribution:
    """Quartile summary plus a Gaussian KDE on a fixed grid over the field's range.

    The density is renormalized to unit trapezoid area on the grid so mass
    that the kernels place outside the range is folded back in.
    """
    if not records:
        raise ValueError("distribution of an empty record set")
    if field not in FIELD_RANGES:
        raise ValueError(f"unknown field {field!r}")
    attr = "cap" if field == "cap" else "fake_follower_score"
    vals = np.sort(np.array([getattr(r, attr) for r in records], dtype=float))
    lo, hi = FIELD_RANGES[field]
    grid = np.linspace(lo, hi, grid_points)
    h = silverman_bandwidth(vals, hi - lo, (hi - lo) / (grid_points - 1))
    z = (grid[:, None] - vals[None, :]) / h
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (len(vals) * h * math.sqrt(2 * math.pi))
    area = np.trapezoid(dens, grid)
    if area > 0:
        dens = dens / area
    q1, med, q3 = np.percentile(vals, [25, 50, 75])
    return ScoreDistribution(
        field,
        tuple(float(v) for v in vals),
        float(vals[0]),
        float(q1),
        float(med),
        float(q3),
        float(vals[-1]),
        min(max(math.fsum(vals) / len(vals), float(vals[0])), float(vals[-1])),  # division can round past the extremes
        tuple(float(x) for x in grid),
        tuple(float(x) for x in dens),
        float(h),
        community,
        window,
    )


def cochran_sample_size(
    population: int | None = None, confidence_z: float = 1.96, proportion: float = 0.5, margin: float = 0.05
) -> int:
    """``n0 = z^2 p (1-p) / e^2`` with finite-population correction when ``population`` is given."""
    if not 0 < proportion < 1:
        raise ValueError("proportion must lie in (0, 1)")
    if margin <= 0 or confidence_z <= 0:
        raise ValueError("margin and z must be positive")
    if population is not None and population < 1:
        raise ValueError("population must be >= 1")
    n = confidence_z**2 * proportion * (1 - proportion) / margin**2
    if population is not None:
        n = n / (1 + (n - 1) / population)
    return max(1, math.ceil(round(n, 9)))


@dataclass(frozen=True)
class LabelSample:
    community: int
    label: str
    sample: tuple[str, ...]
    labels: Mapping[str, str]
    accuracy: float | None  # over annotated sample members; None if none annotated


@dataclass
class AccuracyReport:
    samples: list[LabelSample]
    worklist: list[tuple[int, str]]  # (community, user) still to annotate

    @property
    def macro_average(self) -> float | None:
        accs = [s.accuracy for s in self.samples if s.accuracy is not None]
        return math.fsum(accs) / len(accs) if accs else None


def label_accuracy(
    p: Partition,
    annotations: Mapping[str, str],
    community_labels: Mapping[int, str],
    seed: int = 0,
    confidence_z: float = 1.96,
    proportion: float = 0.5,
    margin: float = 0.05,
) -> AccuracyReport:
    """Sample each labelled community (Cochran size, seeded, without replacement).

    Accuracy is the share of annotated sampled users whose annotation equals
    the community's label; unannotated sampled users go to the worklist.
    """
    samples, worklist = [], []
    for c, members in p.communities().items():
        if c not in community_labels:
            continue
        size = min(len(members), cochran_sample_size(len(members), confidence_z, proportion, margin))
        rng = np.random.default_rng([seed, c])
        picked = sorted(members[i] for i in rng.choice(len(members), size=size, replace=False))
        got = {u: annotations[u] for u in picked if u in annotations}
        worklist.extend((c, u) for u in picked if u not in annotations)
        label = community_labels[c]
        acc = sum(v == label for v in got.values()) / len(got) if got else None
        samples.append(LabelSample(c, label, tuple(picked), got, acc))
    return AccuracyReport(samples, worklist)


def surface_top10(p: Partition, activity: Mapping[str, NodeActivity], n: int = 10) -> dict[int, list[str]]:
    return {c: [u for u, _ in _ranked(m, activity)[:n]] for c, m in p.communities().items()}


def read_annotations(text: str) -> dict[str, str]:
    return {r["user_id"]: r["label"] for r in csv.DictReader(io.StringIO(text))}


def classification_csv(records: Sequence[BotScoreRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["user_id", "cap", "fake_follower_score", "classification"])
    for r in sorted(records, key=lambda r: r.user_id):
        w.writerow([r.user_id, r.cap, r.fake_follower_score, r.classification])
    return buf.getvalue()
