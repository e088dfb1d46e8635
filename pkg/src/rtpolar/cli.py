"""Command-line pipeline: synth -> ingest -> analyze -> flows -> influencers -> botscan -> report."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml
from filelock import FileLock

from rtpolar import __version__
from rtpolar import botlab, community, graph, ingest, labels, metrics, synthgen, temporal

LOGGER = logging.getLogger("rtpolar")


class CliError(Exception):
    """Reported on stderr with a nonzero exit code."""


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


@dataclass
class Run:
    args: argparse.Namespace
    command: str
    workdir: Path
    config_path: Path | None
    config: dict
    seed: int
    resolution: float
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)

    @property
    def schedule(self) -> ingest.WindowSchedule:
        if not self.config.get("windows"):
            raise CliError(f"config {self.config_path} defines no windows")
        return ingest.schedule_from_config(self.config)

    def rel(self, path: Path) -> str:
        try:
            return path.resolve().relative_to(self.workdir.resolve()).as_posix()
        except ValueError:
            return str(path)

    def read(self, path: Path) -> str:
        try:
            data = path.read_bytes()
            text = data.decode("utf-8")
        except OSError as exc:
            raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None
        except UnicodeDecodeError:
            raise CliError(f"{path} is not valid UTF-8") from None
        self.inputs[self.rel(path)] = _digest(data)
        return text

    def write(self, rel: str, text: str) -> Path:
        path = self.workdir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        data = text.encode("utf-8")
        path.write_bytes(data)
        self.outputs[rel] = _digest(data)
        return path

    def record_output(self, path: Path) -> None:
        self.outputs[self.rel(path)] = _digest(path.read_bytes())

    def finish(self, name: str | None = None) -> None:
        cfg_bytes = self.config_path.read_bytes() if self.config_path and self.config_path.exists() else b""
        manifest = {
            "command": self.command,
            "options": {
                k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "workdir", "config")
                and isinstance(v, (str, int, float, bool, type(None)))
            },
            "seed": self.seed,
            "config_hash": _digest(cfg_bytes),
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": dict(sorted(self.outputs.items())),
            "tool_version": __version__,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        path = self.workdir / "manifests" / f"{name or self.command}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")


def _find_config(args) -> Path | None:
    if args.config:
        return Path(args.config)
    for cand in (Path(args.workdir) / "config.yaml", Path(args.workdir) / "synth" / "config.yaml"):
        if cand.exists():
            return cand
    return None


def _make_run(args, command: str, need_config: bool = True) -> Run:
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    cfg_path = _find_config(args)
    cfg: dict = {}
    if cfg_path is not None:
        try:
            cfg = ingest.load_config(cfg_path)
        except ingest.IngestError as exc:
            raise CliError(str(exc)) from None
    elif need_config:
        raise CliError(f"no config given and none found in {workdir}")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    res = args.resolution if args.resolution is not None else float(cfg.get("resolution", 1.0))
    return Run(args, command, workdir, cfg_path, cfg, seed, res)


# -- synth ------------------------------------------------------------------


def default_spec() -> synthgen.PlantedSpec:
    """Eight weekly windows, two poles, a Jalili->Raisi style merge before window f."""
    comms = [
        (60, "anti_main"),
        (30, "anti_tail"),
        (60, "raisi"),
        (40, "jalili"),
        (25, "mohammad"),
        (20, "rezaii"),
        (25, "hemmati"),
        (40, "pro"),
    ]
    poles = {"anti_main": 0, "anti_tail": 0}
    poles.update({lab: 1 for _, lab in comms[2:]})
    return synthgen.PlantedSpec(
        comms,
        p_in=0.065,
        p_out=0.0005,
        p_pole=0.006,
        pole_map=poles,
        heavy_hitters={lab: 1 for _, lab in comms},
        heavy_multiplier=5,
        windows=8,
        migration_script=[(4, "mohammad", "raisi", 1.0), (5, "jalili", "raisi", 1.0)],
        p_active=0.85,
        hashtags=["election1400", "vote1400", "boycott1400"],
        noise_records=20,
    )


def cmd_synth(args) -> int:
    run = _make_run(args, "synth", need_config=False)
    if args.spec:
        spec = synthgen.load_spec(run.read(Path(args.spec)))
    else:
        spec = default_spec()
    corpus = synthgen.generate(spec, run.seed)
    out = args.out or "synth"
    run.write(f"{out}/corpus.jsonl", corpus.corpus_text())
    run.write(f"{out}/truth.json", corpus.truth_text())
    users = sorted({r["author_id"] for r in corpus.records})
    run.write(f"{out}/botscores.csv", synthgen.bot_scores_csv(users, run.seed))
    cfg = corpus.config(
        seed=run.seed,
        resolution=run.resolution,
        top_k=7,
        provider={"kind": "csv", "path": "botscores.csv"},
    )
    run.write(f"{out}/config.yaml", yaml.safe_dump(cfg, sort_keys=True))
    print(f"wrote {len(corpus.records)} records for {len(users)} users to {run.workdir / out}")
    run.finish()
    return 0


# -- ingest -----------------------------------------------------------------


def cmd_ingest(args) -> int:
    run = _make_run(args, "ingest")
    corpus_path = Path(args.corpus) if args.corpus else run.workdir / "synth" / "corpus.jsonl"
    schedule = run.schedule
    text = run.read(corpus_path)
    records, diags = ingest.parse_corpus(text.splitlines(), schedule)
    existing = ingest.load_users(run.workdir / "corpus" / "users.jsonl")
    users = ingest.upsert_users(records, existing)
    summary = ingest.corpus_summary(records, schedule)
    run.write("corpus/corpus.jsonl", ingest.dump_records(records))
    run.write("corpus/users.jsonl", ingest.dump_users(users))
    run.write(
        "corpus/summary.csv",
        _csv(list(summary.rows(schedule)), ["label", "start", "end", "users", "tweets"]),
    )
    run.write(
        "corpus/diagnostics.csv",
        _csv([(d.line, d.kind, d.tweet_id or "", d.message) for d in diags], ["line", "kind", "tweet_id", "message"]),
    )
    lines = sum(1 for line in text.splitlines() if line.strip())
    counts = {
        "lines": lines,
        "accepted": len(records),
        "outside_windows": summary.outside_tweets,
        "rejected": len(diags),
        "users": len(users),
    }
    run.write("corpus/ingest.json", json.dumps(counts, indent=1, sort_keys=True) + "\n")
    print(f"{'label':<6}{'window':<44}{'users':>8}{'tweets':>8}")
    for label, start, end, nu, nt in summary.rows(schedule):
        print(f"{label:<6}{start + ' .. ' + end:<44}{nu:>8}{nt:>8}")
    print(f"accepted {len(records)}, outside windows {summary.outside_tweets}, rejected {len(diags)}")
    run.finish()
    return 0


def _load_corpus(run: Run) -> list[ingest.TweetRecord]:
    path = run.workdir / "corpus" / "corpus.jsonl"
    if not path.exists():
        raise CliError(f"no ingested corpus at {path}; run `ingest` first")
    run.read(path)
    return ingest.load_records(path)


# -- analyze ----------------------------------------------------------------


def _activity_csv(act) -> str:
    return _csv(
        [(a.user_id, a.accumulated_retweets, a.out_tweets) for a in act.values()],
        ["user_id", "accumulated_retweets", "out_tweets"],
    )


def _analyze_one(run: Run, records, label: str, window: str | None, reciprocal: bool, top_k: int) -> dict:
    base = f"analysis/{label}"
    g = graph.build_retweet_graph(records, window)
    ug = graph.undirected_projection(g)
    part = community.detect_communities(ug, run.resolution, run.seed)
    act = graph.node_activity(g, records, window)
    run.write(f"{base}/graph.gexf", graph.to_gexf(g, part.assignment, act))
    run.write(f"{base}/edges.csv", graph.edge_list_csv(g))
    run.write(f"{base}/partition.csv", part.to_csv())
    run.write(f"{base}/activity.csv", _activity_csv(act))
    if ug.L:
        run.write(f"{base}/quality.json", community.modularity(ug, part).to_json())
        observed, baseline = metrics.radar_report(ug, part, run.seed)
        run.write(f"{base}/metrics.json", metrics.reports_json(observed=observed, baseline=baseline))
        run.write(f"{base}/radar.csv", metrics.radar_csv(observed, baseline))
    else:
        run.write(f"{base}/metrics.json", json.dumps({"degenerate": True, "N": ug.N, "L": 0}, indent=2) + "\n")
    top = community.top_k_communities(part, ug, top_k)
    sets = temporal.influencers(part, act, label, communities=top)
    run.write(f"{base}/influencers.csv", temporal.influencers_csv(sets))
    top10 = botlab.surface_top10(part, act)
    run.write(
        f"{base}/top10_worklist.csv",
        _csv([(label, c, u) for c in top for u in top10[c]], ["window", "community_id", "user_id"]),
    )
    summary = {"label": label, "N": ug.N, "L": ug.L, "n_c": part.n_c, "resolution": run.resolution, "top": top}
    if reciprocal:
        rg = graph.reciprocal_subgraph(g)
        rug = graph.undirected_projection(rg)
        rpart = community.detect_communities(rug, run.resolution, run.seed)
        run.write(f"{base}/reciprocal/edges.csv", graph.edge_list_csv(rg))
        run.write(f"{base}/reciprocal/partition.csv", rpart.to_csv())
        if rug.L:
            robs, rbase = metrics.radar_report(rug, rpart, run.seed)
            run.write(f"{base}/reciprocal/metrics.json", metrics.reports_json(observed=robs, baseline=rbase))
            run.write(f"{base}/reciprocal/radar.csv", metrics.radar_csv(robs, rbase))
        # homophily comparison uses the full graph's communities as groups
        full_ei = metrics.ei_index(ug, part)
        rec_ei = metrics.ei_index(rug, part)
        cmp = {
            "groups": "full-graph communities",
            "full": {"internal": full_ei.internal, "external": full_ei.external, "value": full_ei.value},
            "reciprocal": {"internal": rec_ei.internal, "external": rec_ei.external, "value": rec_ei.value},
        }
        run.write(f"{base}/reciprocal/ei_comparison.json", json.dumps(cmp, indent=2, sort_keys=True) + "\n")
        summary["reciprocal_L"] = rug.L
    run.write(f"{base}/summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def cmd_analyze(args) -> int:
    run = _make_run(args, "analyze")
    schedule = run.schedule
    records = _load_corpus(run)
    top_k = int(args.top_k or run.config.get("top_k", 7))
    target = args.window or "all"
    if target == "all":
        jobs = [(w, w) for w in schedule.labels] + [("all", None)]
    elif target in schedule.labels:
        jobs = [(target, target)]
    else:
        raise CliError(f"unknown window label {target!r} (known: {', '.join(schedule.labels)}, all)")
    for label, window in jobs:
        s = _analyze_one(run, records, label, window, bool(args.reciprocal), top_k)
        print(f"{label}: N={s['N']} L={s['L']} communities={s['n_c']} (resolution {run.resolution})")
    run.finish(f"analyze-{target}")
    return 0


def _load_partition(run: Run, label: str) -> community.Partition:
    path = run.workdir / "analysis" / label / "partition.csv"
    if not path.exists():
        raise CliError(f"missing partition for window {label!r} ({path}); run `analyze` first")
    return community.Partition.from_csv(run.read(path), run.resolution)


# -- flows ------------------------------------------------------------------


def cmd_flows(args) -> int:
    run = _make_run(args, "flows")
    schedule = run.schedule
    parts = {w: _load_partition(run, w) for w in schedule.labels}
    threshold = float(run.config.get("match_threshold", 0.1))
    windows = list(parts)
    all_rows = []
    for a, b in zip(windows, windows[1:]):
        fm = temporal.flow_matrix(parts[a], parts[b], a, b)
        run.write(f"flows/flow_{a}_{b}.csv", fm.to_csv())
        all_rows.extend((a, b, s, t, n) for (s, t), n in fm.flows.items())
    run.write("flows/flows.csv", _csv(all_rows, ["from_window", "to_window", "source", "target", "count"]))
    label_map = None
    if args.labels:
        assigns = labels.read_assignments(run.read(Path(args.labels)))
        label_map = {w: dict(labels.apply_labels(p, assigns, w).community_labels) for w, p in parts.items()}
    rows = temporal.community_size_series(parts, label_map, threshold)
    run.write("flows/sizes.csv", _csv(rows, ["window", "community", "users"]))
    tracks = temporal.build_tracks(parts, threshold)
    track_rows = []
    for tr in tracks:
        for i, (w, c) in enumerate(tr.steps):
            track_rows.append((tr.track_id, w, c, "" if i == 0 else round(tr.overlaps[i - 1], 12)))
    run.write("flows/tracks.csv", _csv(track_rows, ["track", "window", "community_id", "jaccard_with_previous"]))
    print(f"{max(0, len(windows) - 1)} flow matrices, {len(tracks)} community tracks")
    run.finish()
    return 0


# -- influencers / botscan ----------------------------------------------------


def _collect_influencers(run: Run) -> list[temporal.InfluencerSet]:
    sets = []
    for w in run.schedule.labels:
        path = run.workdir / "analysis" / w / "influencers.csv"
        if path.exists():
            sets.extend(temporal.read_influencers_csv(run.read(path)))
    return sets


def cmd_influencers(args) -> int:
    run = _make_run(args, "influencers")
    sets = _collect_influencers(run)
    if not sets:
        raise CliError("no influencer sets found; run `analyze` first")
    run.write("influencers.csv", temporal.influencers_csv(sets))
    print(f"{sum(len(s.members) for s in sets)} influencers across {len(sets)} window/community pairs")
    run.finish()
    return 0


def cmd_botscan(args) -> int:
    run = _make_run(args, "botscan")
    sets = _collect_influencers(run)
    if not sets:
        raise CliError("no influencers computed; run `analyze` first")
    if args.provider:
        path = Path(args.provider)
        run.read(path)
        provider = botlab.CsvScoreProvider.from_path(path)
    else:
        pcfg = run.config.get("provider")
        if not pcfg:
            raise CliError("no bot-score provider configured (use --provider or a `provider` config entry)")
        base = run.config_path.parent if run.config_path else None
        try:
            provider = botlab.provider_from_config(pcfg, base)
        except OSError as exc:
            raise CliError(f"cannot open provider: {exc}") from None
    users = sorted({u for s in sets for u, _ in s.members})
    try:
        result = botlab.score_users(users, provider)
    except botlab.ProviderResponseError as exc:
        raise CliError(str(exc)) from None
    by_user = {r.user_id: r for r in result.records}
    rows, groups = [], {}
    for s in sets:
        recs = [by_user[u] for u, _ in s.members if u in by_user]
        for r in recs:
            rows.append((s.window, s.community, r.user_id, r.cap, r.fake_follower_score, r.classification))
        groups[(s.window, s.community)] = recs
    run.write(
        "botscan/classifications.csv",
        _csv(rows, ["window", "community", "user_id", "cap", "fake_follower_score", "classification"]),
    )
    dists = []
    for (w, c), recs in groups.items():
        if recs:
            for fld in ("cap", "fake_follower"):
                dists.append(botlab.distribution(recs, fld, community=c, window=w).to_dict())
    run.write("botscan/distributions.json", json.dumps(dists, indent=1, sort_keys=True) + "\n")
    missing = result.unresolved + sorted(result.errors)
    run.write("botscan/unresolved.csv", _csv([(u, result.errors.get(u, "unresolved")) for u in missing], ["user_id", "reason"]))
    classes = {k: 0 for k in ("genuine", "uncertain", "automated")}
    for r in result.records:
        classes[r.classification] += 1
    per_comm = {
        f"{w}/{c}": round(sum(r.cap for r in recs) / len(recs), 12) for (w, c), recs in groups.items() if recs
    }
    summary = {
        "users_scored": len(result.records),
        "unresolved": len(missing),
        "classes": classes,
        "mean_cap_all_influencers": round(sum(r.cap for r in result.records) / len(result.records), 12)
        if result.records
        else None,
        "mean_cap_per_community": per_comm,
        "mean_cap_macro_over_communities": round(sum(per_comm.values()) / len(per_comm), 12) if per_comm else None,
    }
    run.write("botscan/summary.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    print(f"scored {len(result.records)} influencers: {classes}")
    if missing:
        LOGGER.warning("%d influencer(s) could not be scored; see botscan/unresolved.csv", len(missing))
    run.finish()
    return 0


# -- accuracy -----------------------------------------------------------------


def cmd_accuracy(args) -> int:
    run = _make_run(args, "accuracy")
    window = args.window
    if not window:
        raise CliError("accuracy needs --window naming an analyzed window")
    part = _load_partition(run, window)
    if not args.labels:
        raise CliError("accuracy needs --labels (CSV window,community_id,label)")
    assigns = labels.read_assignments(run.read(Path(args.labels)))
    try:
        lp = labels.apply_labels(part, assigns, window)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    ann = {}
    if args.annotations and Path(args.annotations).exists():
        ann = botlab.read_annotations(run.read(Path(args.annotations)))
    rep = botlab.label_accuracy(part, ann, lp.community_labels, run.seed)
    body = {
        "window": window,
        "macro_average": rep.macro_average,
        "communities": [
            {"community": s.community, "label": s.label, "sample_size": len(s.sample), "annotated": len(s.labels), "accuracy": s.accuracy}
            for s in rep.samples
        ],
    }
    run.write(f"accuracy/{window}/accuracy.json", json.dumps(body, indent=1, sort_keys=True) + "\n")
    run.write(f"accuracy/{window}/worklist.csv", _csv([(window, c, u) for c, u in rep.worklist], ["window", "community_id", "user_id"]))
    avg = "n/a" if rep.macro_average is None else f"{rep.macro_average:.3f}"
    print(f"window {window}: macro accuracy {avg}, {len(rep.worklist)} users still to annotate")
    run.finish(f"accuracy-{window}")
    return 0


# -- report -------------------------------------------------------------------


def _read_report(path: Path) -> tuple[metrics.StructureReport, metrics.StructureReport] | None:
    if not path.exists():
        return None
    obj = json.loads(path.read_text(encoding="utf-8"))
    if "observed" not in obj:
        return None
    names = metrics.StructureReport.__dataclass_fields__
    mk = lambda d: metrics.StructureReport(**{k: d[k] for k in names})  # noqa: E731
    return mk(obj["observed"]), mk(obj["baseline"])


def cmd_report(args) -> int:
    from rtpolar import plotting

    run = _make_run(args, "report")
    fmt = args.format
    figures = []
    analysis = run.workdir / "analysis"
    labels_seen = sorted(p.name for p in analysis.iterdir()) if analysis.exists() else []
    radar_rows = []
    for label in labels_seen:
        rep = _read_report(analysis / label / "metrics.json")
        if rep is None:
            continue
        run.inputs[run.rel(analysis / label / "metrics.json")] = _digest((analysis / label / "metrics.json").read_bytes())
        obs, base = rep
        for name in metrics.StructureReport.RADAR_METRICS:
            radar_rows.append((label, name, metrics._fmt(getattr(obs, name)), metrics._fmt(getattr(base, name))))
        for ext in fmt:
            p = plotting.save(plotting.radar_figure(obs, base, f"window {label}"), _figpath(run, f"radar_{label}.{ext}"))
            run.record_output(p)
            figures.append((p.name, f"analysis/{label}/metrics.json"))
    if radar_rows:
        run.write("report/radar.csv", _csv(radar_rows, ["window", "metric", "observed", "baseline"]))
    sizes = run.workdir / "flows" / "sizes.csv"
    if sizes.exists():
        rows = [(r["window"], r["community"], int(r["users"])) for r in csv.DictReader(io.StringIO(run.read(sizes)))]
        for ext in fmt:
            p = plotting.save(plotting.size_series_figure(rows), _figpath(run, f"community_sizes.{ext}"))
            run.record_output(p)
            figures.append((p.name, "flows/sizes.csv"))
    for fpath in sorted((run.workdir / "flows").glob("flow_*_*.csv")):
        grouped: dict[tuple, int] = {}
        a = b = ""
        for r in csv.DictReader(io.StringIO(run.read(fpath))):
            a, b = r["from_window"], r["to_window"]
            grouped[(r["source"], r["target"])] = int(r["count"])
        fm = temporal.FlowMatrix(a, b, grouped)
        for ext in fmt:
            p = plotting.save(plotting.flow_figure(fm), _figpath(run, f"{fpath.stem}.{ext}"))
            run.record_output(p)
            figures.append((p.name, run.rel(fpath)))
    cls = run.workdir / "botscan" / "classifications.csv"
    if cls.exists():
        caps: dict[str, list[float]] = {}
        fakes: dict[str, list[float]] = {}
        for r in csv.DictReader(io.StringIO(run.read(cls))):
            key = f"{r['window']}/{r['community']}"
            caps.setdefault(key, []).append(float(r["cap"]))
            fakes.setdefault(key, []).append(float(r["fake_follower_score"]))
        for ext in fmt:
            p = plotting.save(plotting.violin_figure(caps, "CAP", (0, 1), "influencer CAP"), _figpath(run, f"cap_violin.{ext}"))
            run.record_output(p)
            figures.append((p.name, "botscan/classifications.csv"))
            p = plotting.save(
                plotting.violin_figure(fakes, "fake follower score", (0, 5), "influencer fake followers"),
                _figpath(run, f"fake_follower_violin.{ext}"),
            )
            run.record_output(p)
            figures.append((p.name, "botscan/classifications.csv"))
    run.write("report/figures.csv", _csv(figures, ["figure", "source_table"]))
    print(f"rendered {len(figures)} figure(s) into {run.workdir / 'report'}")
    run.finish()
    return 0


def _figpath(run: Run, name: str) -> Path:
    path = run.workdir / "report" / name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# -- parser -------------------------------------------------------------------


def _add_globals(p: argparse.ArgumentParser, defaults: bool) -> None:
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p.add_argument("--config", default=d(None), help="YAML config (windows, hashtags, provider, ...)")
    p.add_argument("--seed", type=int, default=d(None), help="single source of randomness")
    p.add_argument("--workdir", default=d("."), help="working directory holding all intermediate files")
    p.add_argument("--resolution", type=float, default=d(None), help="community resolution (larger = fewer communities)")
    p.add_argument("--window", default=d(None), help="window label, or 'all'")
    p.add_argument("--reciprocal", action="store_true", default=d(False), help="also analyze the reciprocal subgraph")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtpolar", description=__doc__)
    _add_globals(parser, True)
    common = argparse.ArgumentParser(add_help=False)
    _add_globals(common, False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a planted synthetic corpus")
    p.add_argument("--spec", help="YAML planted spec (default: built-in election-like spec)")
    p.add_argument("--out", help="output directory relative to workdir (default: synth)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", parents=[common], help="parse, filter and window a record file")
    p.add_argument("corpus", nargs="?", help="newline-delimited JSON records (default: synth/corpus.jsonl)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", parents=[common], help="graphs, communities and metrics per window")
    p.add_argument("--top-k", type=int, default=None, help="communities kept for influencers (default 7)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("flows", parents=[common], help="community flows between consecutive windows")
    p.add_argument("--labels", help="CSV window,community_id,label to name communities")
    p.set_defaults(func=cmd_flows)

    p = sub.add_parser("influencers", parents=[common], help="collect top-1%% influencer sets")
    p.set_defaults(func=cmd_influencers)

    p = sub.add_parser("botscan", parents=[common], help="score and classify influencers")
    p.add_argument("--provider", help="CSV user_id,cap,fake_follower_score (overrides config)")
    p.set_defaults(func=cmd_botscan)

    p = sub.add_parser("accuracy", parents=[common], help="Cochran-sampled community label accuracy")
    p.add_argument("--labels", help="CSV window,community_id,label")
    p.add_argument("--annotations", help="CSV user_id,label")
    p.set_defaults(func=cmd_accuracy)

    p = sub.add_parser("report", parents=[common], help="render figures from the delimited outputs")
    p.add_argument("--format", nargs="+", default=["svg", "png"], choices=["svg", "png", "pdf"])
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s: %(message)s")
    workdir = Path(args.workdir)
    try:
        workdir.mkdir(parents=True, exist_ok=True)
        with FileLock(str(workdir / ".rtpolar.lock")):
            return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ingest.IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
