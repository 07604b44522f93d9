"""Stage-per-command pipeline driver.

Each command reads its config plus persisted upstream artifacts from the output
directory and writes its own artifacts there. Exit codes: 0 success,
1 pipeline or data error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Sequence

import numpy as np
from filelock import FileLock, Timeout

from .. import cohort as cohort_mod
from ..errors import ConfigError, EmptyWindow, MissingArtifact, WikichurnError
from ..explain import (
    explain_instances,
    gini_importance,
    permutation_importance,
    project_2d,
    surrogate_importance,
    top_k_frequency,
    write_local_ndjson,
    write_projection_csv,
    write_ranking_csv,
)
from ..features import FileEncoder, HashingEncoder, LexiconPack, SuffixTagger
from ..features.matrix import (
    NON_LINGUISTIC,
    FeatureVector,
    design_matrix,
    featurize_record,
    read_features,
    write_feature_csv,
    write_features,
)
from ..ingest import FixtureBundle, FixtureSource, LiveConfig, LiveSource, RecordingSource, load_missing_list
from ..ingest.fixture import copy_bundle, dumps
from ..model import (
    Hyperparams,
    SplitSpec,
    evaluate,
    fit_model,
    flag,
    load_model,
    model_matrix,
    prepare_split,
    run_ablation,
    save_model,
    score_editors,
    write_ablation_csv,
)
from ..stats import correlation_matrix, describe, write_correlation_csv
from .config import RunConfig, parse_value
from .report import risk_report

log = logging.getLogger("wikichurn")

COMMANDS = ("ingest", "curate", "featurize", "train", "evaluate", "ablate", "explain", "score")

# artifact name -> producing command
ARTIFACTS = {
    "bundle": "ingest",
    "cohort": "curate",
    "pool.ndjson": "curate",
    "features.ndjson": "featurize",
    "pool_features.ndjson": "featurize",
    "model.json": "train",
}


def _preamble(header: dict[str, Any]) -> str:
    return f"# config_hash={header['config_hash']} seed={header['seed']} command={header['command']}\n"


def _write_json(path: Path, obj: Any, header: dict[str, Any]) -> None:
    path.write_text(dumps({"_meta": header, **obj}) + "\n", encoding="utf-8")


def _need(out: Path, name: str) -> Path:
    path = out / name
    if not path.exists():
        raise MissingArtifact(str(path), ARTIFACTS[name])
    return path


@contextmanager
def _locked(out: Path) -> Iterator[None]:
    out.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(out / ".wikichurn.lock"))
    try:
        lock.acquire(timeout=0)
    except Timeout:
        raise WikichurnError(f"output directory {out} is in use by another command") from None
    try:
        yield
    finally:
        lock.release()


def _split_spec(cfg: RunConfig) -> SplitSpec:
    s = cfg["split"]
    return SplitSpec(train_fraction=float(s["train_fraction"]), seed=cfg.seed, stratified=bool(s["stratified"]))


# ---------------------------------------------------------------- commands

def cmd_ingest(cfg: RunConfig) -> dict[str, Any]:
    src = cfg["source"]
    out = cfg.out
    header = cfg.header("ingest")
    dest = out / "bundle"
    if src["kind"] == "fixture":
        path = cfg.path(src["fixture"])
        if not path.is_dir():
            raise ConfigError(f"fixture bundle not found: {path}")
        try:
            bundle = FixtureBundle.load(path)
        except FileNotFoundError:
            raise ConfigError(f"not a fixture bundle (no meta file): {path}") from None
        copy_bundle(path, dest)
        report = {"source": "fixture", "counts": bundle.counts(), "skipped": []}
    else:
        ml_path = cfg.path(src["missing_list"])
        if not ml_path.is_file():
            raise ConfigError(f"missing-list snapshot not found: {ml_path}")
        listed = load_missing_list(ml_path)
        live = LiveSource(LiveConfig.from_dict(src["live"]))
        recorder = RecordingSource(live, listed)
        h = cfg["harvest"]
        _, cur = cohort_mod.curate(
            recorder, cfg["cutoff_year"], cfg["window"], h["pages_per_ns"], h["revisions"], h["top_k"],
            workers=int(cfg["workers"]), created_at=int(cfg["as_of"]),
        )
        pool = list(src["pool"])
        cohort_mod.pool_records(recorder, pool, cfg["window"], int(cfg["workers"]))
        recorder.add_pool(pool)
        bundle = recorder.bundle(snapshot_at=int(cfg["as_of"]))
        bundle.write(dest)
        report = {
            "source": "live",
            "counts": bundle.counts(),
            "skipped": sorted(set(cur.skipped_harvest) | set(cur.dropped)),
        }
    _write_json(out / "ingest_report.json", report, header)
    c = report["counts"]
    print(
        f"ingest: editors={c['editors']} pages={c['pages']} missing_list={c['missing_list']} "
        f"pool={c['pool']} skipped={len(report['skipped'])}"
    )
    return report


def cmd_curate(cfg: RunConfig) -> dict[str, Any]:
    out = cfg.out
    header = cfg.header("curate")
    source = FixtureSource.from_dir(_need(out, "bundle"))
    h = cfg["harvest"]
    workers = int(cfg["workers"])
    cohort, report = cohort_mod.curate(
        source,
        cutoff_year=int(cfg["cutoff_year"]),
        window=int(cfg["window"]),
        pages_per_ns=int(h["pages_per_ns"]),
        revisions=int(h["revisions"]),
        top_k=int(h["top_k"]),
        workers=workers,
        created_at=int(cfg["as_of"]),
    )
    cohort_mod.write_cohort(cohort, out / "cohort", header)
    pool = cohort_mod.pool_records(source, source.pool(), int(cfg["window"]), workers)
    cohort_mod.write_records(out / "pool.ndjson", pool, header)
    rep = report.to_dict()
    _write_json(out / "curation_report.json", rep, header)
    for w in report.warnings:
        print(f"warning: {w}")
    print(
        f"curate: listed={report.listed} filtered={report.filtered} pages={report.pages} "
        f"candidates={report.candidates} matched={report.matched} "
        f"m={report.matching_mean:.6g} sigma={report.matching_sigma:.6g} p={report.mwu_p:.6g}"
    )
    return rep


def _encoder(cfg: RunConfig):
    enc = cfg["features"]["encoder"]
    if enc == "none":
        return None
    if enc == "hashing":
        return HashingEncoder()
    return FileEncoder(cfg.path(enc))


def _featurize(records, cfg: RunConfig, tagger, lexicons, encoder) -> tuple[list[FeatureVector], list[str]]:
    use_dict = bool(cfg["features"]["use_dictionary"])

    def one(rec):
        try:
            return featurize_record(rec, tagger, lexicons, encoder, use_dict)
        except EmptyWindow:
            log.warning("editor %r has no edits in the window; skipped", rec.id)
            return None

    results = cohort_mod.parallel_map(one, records, int(cfg["workers"]))
    kept = [v for v in results if v is not None]
    skipped = [r.id for r, v in zip(records, results) if v is None]
    return kept, skipped


def cmd_featurize(cfg: RunConfig) -> dict[str, Any]:
    out = cfg.out
    header = cfg.header("featurize")
    pre = _preamble(header)
    cohort = cohort_mod.read_cohort(_need(out, "cohort"))
    pool = cohort_mod.read_records(_need(out, "pool.ndjson"))
    lex_dir = cfg["features"]["lexicon_dir"]
    lexicons = LexiconPack.load(cfg.path(lex_dir) if lex_dir else None)
    tagger = SuffixTagger()
    encoder = _encoder(cfg)
    vectors, skipped = _featurize(cohort.records, cfg, tagger, lexicons, encoder)
    pool_vectors, pool_skipped = _featurize(pool, cfg, tagger, lexicons, encoder)
    write_features(out / "features.ndjson", vectors, header)
    write_features(out / "pool_features.ndjson", pool_vectors, header)
    write_feature_csv(out / "features.csv", vectors, pre)

    X, _, names = design_matrix(vectors, NON_LINGUISTIC)
    if X.shape[0] >= 2:
        write_correlation_csv(out / "correlation.csv", correlation_matrix(X), names, pre)

    # per-class summary of the quality features
    rows = []
    for label in ("missing", "active"):
        group = [v for v in vectors if v.label == label]
        for feat, values in (
            ("revert_rate", [v.revert_rate for v in group]),
            ("admin_score", [v.admin_score for v in group]),
        ):
            if values:
                st = describe(values)
                rows.append(f"{label},{feat},{st.mean!r},{st.std!r},{st.n}")
    (out / "quality_summary.csv").write_text(pre + "label,feature,mean,std,n\n" + "".join(r + "\n" for r in rows))

    projected = False
    with_vec = [v for v in vectors if v.sentence_vec is not None]
    if len(with_vec) >= 3:
        try:
            pts = project_2d(np.vstack([v.sentence_vec for v in with_vec]), [v.label for v in with_vec])
            write_projection_csv(out / "projection.csv", [v.editor for v in with_vec], pts, pre)
            projected = True
        except WikichurnError as exc:
            log.warning("projection skipped: %s", exc)
    rep = {
        "vectors": len(vectors),
        "pool_vectors": len(pool_vectors),
        "skipped": skipped + pool_skipped,
        "projection": projected,
    }
    _write_json(out / "featurize_report.json", rep, header)
    print(f"featurize: cohort={len(vectors)} pool={len(pool_vectors)} skipped={len(rep['skipped'])}")
    return rep


def cmd_train(cfg: RunConfig) -> dict[str, Any]:
    out = cfg.out
    header = cfg.header("train")
    vectors = read_features(_need(out, "features.ndjson"))
    model, report = fit_model(
        vectors, cfg["groups"], cfg["classifier"], _split_spec(cfg),
        Hyperparams.from_dict(cfg["hyperparams"]), int(cfg["workers"]),
    )
    save_model(out / "model.json", model, header)
    _write_json(out / "metrics.json", report.to_dict(), header)
    print(
        f"train: {model.kind} groups={'+'.join(model.groups)} accuracy={report.accuracy:.4f} "
        f"f1={report.weighted_f1:.4f}"
    )
    return report.to_dict()


def cmd_evaluate(cfg: RunConfig) -> dict[str, Any]:
    out = cfg.out
    header = cfg.header("evaluate")
    model, _ = load_model(_need(out, "model.json"))
    vectors = read_features(_need(out, "features.ndjson"))
    spec = SplitSpec(float(cfg["split"]["train_fraction"]), model.seed, bool(cfg["split"]["stratified"]))
    prep = prepare_split(vectors, model.groups, spec)
    report = evaluate(model, model_matrix(model, _subset(vectors, prep.test_editors)), prep.y_test)
    _write_json(out / "evaluation.json", report.to_dict(), header)
    c = report.confusion
    print(
        f"evaluate: accuracy={report.accuracy:.4f} precision={report.weighted_precision:.4f} "
        f"recall={report.weighted_recall:.4f} f1={report.weighted_f1:.4f} "
        f"confusion=[[{c[0][0]},{c[0][1]}],[{c[1][0]},{c[1][1]}]]"
    )
    return report.to_dict()


def _subset(vectors: Sequence[FeatureVector], editors: Sequence[str]) -> list[FeatureVector]:
    by_id = {v.editor: v for v in vectors}
    return [by_id[e] for e in editors]


def cmd_ablate(cfg: RunConfig) -> dict[str, Any]:
    out = cfg.out
    header = cfg.header("ablate")
    vectors = read_features(_need(out, "features.ndjson"))
    combos = cfg["ablation"].get("combos")
    kwargs = {"combos": combos} if combos else {}
    rows = run_ablation(
        vectors, kinds=cfg["ablation"]["kinds"], spec=_split_spec(cfg),
        hyperparams=Hyperparams.from_dict(cfg["hyperparams"]), workers=int(cfg["workers"]), **kwargs,
    )
    write_ablation_csv(out / "ablation.csv", rows, _preamble(header))
    for r in rows:
        if r.report is None:
            print(f"ablate: {r.features:<14} skipped ({r.skipped})")
        else:
            print(f"ablate: {r.features:<14} {r.kind:<9} accuracy={r.report.accuracy:.4f} f1={r.report.weighted_f1:.4f}")
    return {"rows": len(rows)}


def cmd_explain(cfg: RunConfig) -> dict[str, Any]:
    out = cfg.out
    header = cfg.header("explain")
    model, _ = load_model(_need(out, "model.json"))
    vectors = read_features(_need(out, "features.ndjson"))
    e = cfg["explain"]
    spec = SplitSpec(float(cfg["split"]["train_fraction"]), model.seed, bool(cfg["split"]["stratified"]))
    prep = prepare_split(vectors, model.groups, spec)
    names = model.feature_names
    rankings = [
        gini_importance(model, names),
        permutation_importance(model, prep.X_test, prep.y_test, int(e["repeats"]), cfg.seed, names),
    ]
    local = explain_instances(
        model, prep.X_test, prep.test_editors, prep.X_train,
        int(e["n_samples"]), float(e["kernel_width"]), int(e["k"]), float(e["ridge"]), cfg.seed, names,
    )
    rankings.append(surrogate_importance(local, names))
    write_ranking_csv(out / "importance.csv", rankings, _preamble(header))
    write_local_ndjson(out / "local_explanations.ndjson", local, header)
    freq = top_k_frequency(local)
    (out / "surrogate_frequency.csv").write_text(
        _preamble(header) + "feature,count\n" + "".join(f"{n},{c}\n" for n, c in freq), encoding="utf-8"
    )
    for r in rankings:
        print(f"explain: {r.method.value:<16} top: {', '.join(r.top(6))}")
    return {"instances": len(local)}


def cmd_score(cfg: RunConfig) -> dict[str, Any]:
    out = cfg.out
    header = cfg.header("score")
    model, _ = load_model(_need(out, "model.json"))
    vectors = read_features(_need(out, "features.ndjson"))
    pool = read_features(_need(out, "pool_features.ndjson"))
    threshold = float(cfg["min_confidence"])
    X = model_matrix(model, pool)
    scores = score_editors(model, X, [v.editor for v in pool])
    flagged = flag(scores, threshold)
    e = cfg["explain"]
    rows = {v.editor: i for i, v in enumerate(pool)}
    local = []
    if flagged:
        background = model_matrix(model, [v for v in vectors if v.label_code >= 0])
        sel = [rows[s.editor] for s in flagged]
        local = explain_instances(
            model, X[sel], [s.editor for s in flagged], background,
            int(e["n_samples"]), float(e["kernel_width"]), int(e["k"]), float(e["ridge"]), cfg.seed,
            model.feature_names,
        )
    pre = _preamble(header)
    (out / "scores.csv").write_text(
        pre + "editor,probability,flagged\n"
        + "".join(f"{s.editor},{s.probability!r},{int(s.probability > threshold)}\n" for s in scores),
        encoding="utf-8",
    )
    (out / "risk_report.md").write_text(risk_report(scores, flagged, local, threshold, model, header), encoding="utf-8")
    print(f"score: pool={len(scores)} flagged={len(flagged)} (probability > {threshold})")
    for s in flagged:
        print(f"  {s.editor}\t{s.probability:.4f}")
    return {"scored": len(scores), "flagged": [s.editor for s in flagged]}


HELP = {
    "ingest": "copy a fixture bundle or record a live snapshot into the output directory",
    "curate": "build the matched missing/active cohort and the monitoring pool",
    "featurize": "compute feature groups G1-G5, correlations and projections",
    "train": "fit one classifier on the configured feature groups",
    "evaluate": "re-score the trained model on its held-out split",
    "ablate": "train every classifier on every feature-group combination",
    "explain": "global importance rankings and per-editor local explanations",
    "score": "rank pool editors by risk and write the Markdown risk report",
}

HANDLERS = {
    "ingest": cmd_ingest,
    "curate": cmd_curate,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "explain": cmd_explain,
    "score": cmd_score,
}


# ---------------------------------------------------------------- argument handling

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--groups", help="feature groups, e.g. g1,g3,g4")
    common.add_argument("--classifier", choices=["tree", "forest", "adaboost", "gboost"])
    common.add_argument("--min-confidence", type=float, dest="min_confidence")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="wikichurn",
        description="Churn-risk pipeline for prolific wiki editors.",
        epilog="Any config field can also be set with --<dotted.name> VALUE, e.g. --harvest.top_k 5.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    mk = sub.add_parser("make-fixture", help="write a synthetic fixture bundle")
    mk.add_argument("kind", choices=["pipeline", "paper-scale"])
    mk.add_argument("directory")
    mk.add_argument("--seed", type=int)
    return parser


def _dotted_overrides(extra: list[str]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) <= 2:
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, raw = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"option {tok} needs a value")
            raw = extra[i + 1]
            i += 2
        out[key.replace("-", "_")] = parse_value(raw)
    return out


def _make_fixture(args: argparse.Namespace) -> int:
    from ..synthetic import paper_scale_bundle, pipeline_bundle

    if args.kind == "pipeline":
        bundle, planted = pipeline_bundle(**({"seed": args.seed} if args.seed is not None else {}))
        bundle.write(args.directory)
        print(f"make-fixture: pipeline bundle with {len(bundle.editors)} editors; planted: {', '.join(planted)}")
    else:
        bundle = paper_scale_bundle(**({"seed": args.seed} if args.seed is not None else {}))
        bundle.write(args.directory)
        print(f"make-fixture: paper-scale bundle with {len(bundle.editors)} editors")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "make-fixture":
            if extra:
                raise ConfigError(f"unexpected arguments {extra}")
            return _make_fixture(args)
        overrides = _dotted_overrides(extra)
        for key in ("seed", "groups", "classifier", "min_confidence", "out", "workers"):
            value = getattr(args, key)
            if value is not None:
                overrides[key] = value
        cfg = RunConfig.build(args.config, overrides)
        with _locked(cfg.out):
            HANDLERS[args.command](cfg)
        return 0
    except ConfigError as exc:
        print(f"wikichurn: error: {exc}", file=sys.stderr)
        return 2
    except (WikichurnError, OSError, ValueError) as exc:
        stage = args.command
        print(f"wikichurn {stage}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
