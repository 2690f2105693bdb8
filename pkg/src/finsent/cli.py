"""Batch command line for the headline sentiment pipeline.

Every stage reads the previous stage's artifact from the output directory,
writes one fixed-name artifact and a ``<stage>.manifest.json`` run record.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import logging
import sys
from dataclasses import asdict, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

from . import annotations as ann
from . import boost, chart, evaluation, lexicon, market, topics
from .corpus import DocumentSet, load_documents, normalize_headline, write_documents
from .labels import Label, POLAR
from .pipeline import ARTIFACTS, Manifest, MissingInputError, PipelineConfig
from .vectorizer import TfidfModel, fit_tfidf, transform

log = logging.getLogger("finsent")

EXIT_OK, EXIT_VALIDATION, EXIT_MISSING, EXIT_INTERNAL = 0, 1, 2, 3
STAGES = ("ingest", "topics", "filter", "annotate", "lexicon", "train", "predict", "evaluate", "correlate")


def sample_config_path() -> Path:
    return Path(str(resources.files("finsent.data") / "sample" / "pipeline.ini"))


def _dump(payload, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _out(cfg: PipelineConfig, stage: str) -> Path:
    return Path(cfg.output) / ARTIFACTS[stage]


def _artifact(cfg: PipelineConfig, stage: str, manifest: Manifest) -> Path:
    """Register an upstream artifact as an input, failing if it is absent."""
    path = _out(cfg, stage)
    if not path.exists():
        raise MissingInputError(f"{manifest.stage}: missing {path.name}; run the '{stage.split('-')[0]}' stage first")
    return manifest.add_input(path.stem, path)


def _finish(cfg: PipelineConfig, manifest: Manifest, *outputs: Path) -> None:
    for p in outputs:
        manifest.add_output(p)
    manifest.write(Path(cfg.output))
    log.info("%s: wrote %s", manifest.stage, ", ".join(p.name for p in outputs))


def _topic_tokens(docs: DocumentSet) -> list[list[str]]:
    return [normalize_headline(f"{d.headline} {d.body}") for d in docs]


def _load_truth(path: Path) -> ann.GroundTruth:
    return ann.GroundTruth.from_json(json.loads(path.read_text(encoding="utf-8"))["labels"])


def _read_predictions(path: Path) -> dict[str, Label]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["id"]: Label(row["label"]) for row in csv.DictReader(fh)}


# -- stages -------------------------------------------------------------------


def cmd_ingest(cfg: PipelineConfig) -> None:
    m = Manifest("ingest", {"format": cfg.corpus_format})
    src = m.add_input("corpus", cfg.require("corpus"))
    docs = load_documents(src, cfg.corpus_format)
    out = _out(cfg, "ingest")
    write_documents(docs, out)
    m.params["skipped"] = docs.skipped
    log.info("ingest: %d documents (%d skipped)", len(docs), docs.skipped)
    _finish(cfg, m, out)


def cmd_topics(cfg: PipelineConfig) -> None:
    seed = cfg.stage_seed("topics")
    m = Manifest("topics", {"k": cfg.k, "max_iters": cfg.nmf_iters, "rel_tol": cfg.nmf_tol, "min_df": cfg.topic_min_df}, seed)
    docs = load_documents(_artifact(cfg, "ingest", m))
    tfidf = fit_tfidf(_topic_tokens(docs), min_df=cfg.topic_min_df)
    vectors = [transform(t, tfidf) for t in _topic_tokens(docs)]
    model = topics.fit_nmf(vectors, k=cfg.k, seed=seed, max_iters=cfg.nmf_iters, rel_tol=cfg.nmf_tol, terms=tfidf.vocabulary.terms)
    report = topics.topic_report(model)
    out = _out(cfg, "topics")
    _dump({"model": model.to_json(), "report": report}, out)
    print(topics.format_topic_report(report))
    _finish(cfg, m, out)


def cmd_filter(cfg: PipelineConfig) -> None:
    m = Manifest("filter", {"keep": list(cfg.keep)})
    if not cfg.keep:
        raise ValueError("filter: no topics selected; pass --keep (see the topics report)")
    docs = load_documents(_artifact(cfg, "ingest", m))
    data = json.loads(_artifact(cfg, "topics", m).read_text(encoding="utf-8"))
    model = topics.TopicModel.from_json(data["model"])
    kept = topics.filter_by_topics(docs, model, cfg.keep)
    out = _out(cfg, "filter")
    write_documents(kept, out)
    log.info("filter: kept %d of %d documents", len(kept), len(docs))
    _finish(cfg, m, out)


def cmd_annotate(cfg: PipelineConfig) -> None:
    m = Manifest("annotate", {})
    corpus = load_documents(_artifact(cfg, "ingest", m))
    kept = load_documents(_artifact(cfg, "filter", m))
    votes = ann.load_annotations(m.add_input("annotations", cfg.require("annotations")), known_ids=corpus.ids)
    keep_ids = set(kept.ids)
    votes = ann.AnnotationSet({d: v for d, v in votes.labels.items() if d in keep_ids})
    truth = ann.ground_truth(votes)
    annotators = votes.annotators()
    complete = ann.AnnotationSet({d: v for d, v in votes.labels.items() if len(v) == len(annotators)})
    kappa = None
    if len(complete) >= 2 and len(annotators) >= 2:
        kappa = ann.fleiss_kappa(ann.vote_matrix(complete)[1])
    out = _out(cfg, "annotate")
    ann.write_ground_truth(
        truth,
        out,
        {
            "annotated": len(votes),
            "unresolved": len(votes) - len(truth),
            "unannotated": len(keep_ids) - len(votes),
            "annotators": annotators,
            "fleiss_kappa": kappa,
            "distribution": truth.distribution(),
        },
    )
    log.info("annotate: %d labelled documents, kappa=%s", len(truth), kappa)
    _finish(cfg, m, out)


def cmd_lexicon(cfg: PipelineConfig) -> None:
    m = Manifest("lexicon", {"experiment": cfg.experiment})
    base = lexicon.load_lexicon(m.add_input("lexicon", cfg.require("lexicon")), version="base")
    synmap, bigrams, removals = {}, None, []
    if cfg.experiment >= 2:
        synmap = lexicon.load_synonyms(m.add_input("synonyms", cfg.require("synonyms")))
        bigrams = lexicon.load_lexicon(m.add_input("bigrams", cfg.require("bigrams")), version="bigrams")
    if cfg.experiment == 3:
        text = m.add_input("removals", cfg.require("removals")).read_text(encoding="utf-8")
        removals = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    lex = lexicon.build_experiment(cfg.experiment, base, synmap, bigrams, removals)
    out = _out(cfg, "lexicon")
    lexicon.save_lexicon(lex, out)
    m.params["counts"] = lex.counts()
    _finish(cfg, m, out)


def _polar_training_set(docs: DocumentSet, truth: ann.GroundTruth):
    ids = [d.id for d in docs if truth.labels.get(d.id) in POLAR]
    by_id = docs.by_id()
    tokens = [normalize_headline(by_id[i].headline) for i in ids]
    y = [1 if truth[i] is Label.POSITIVE else 0 for i in ids]
    return ids, tokens, y


def cmd_train(cfg: PipelineConfig) -> None:
    seed = cfg.stage_seed("train")
    params = replace(cfg.boost, seed=seed)
    m = Manifest(
        "train",
        {"boost": asdict(params), "test_fraction": cfg.test_fraction, "cv_splits": cfg.cv_splits, "min_df": cfg.headline_min_df},
        seed,
    )
    docs = load_documents(_artifact(cfg, "filter", m))
    truth = _load_truth(_artifact(cfg, "annotate", m))
    ids, tokens, y = _polar_training_set(docs, truth)
    if len(set(y)) < 2:
        raise ValueError("train: ground truth has a single polar class; need both Positive and Negative")
    tfidf = fit_tfidf(tokens, min_df=cfg.headline_min_df)
    X = [transform(t, tfidf) for t in tokens]
    tr, te = boost.split_train_test(len(ids), cfg.test_fraction, y, seed)
    model = boost.train([X[i] for i in tr], [y[i] for i in tr], params)
    held_out = sum((boost.predict_label(X[i], model) is Label.POSITIVE) == (y[i] == 1) for i in te) / len(te)
    cv = boost.cross_validate(X, y, params, n_splits=cfg.cv_splits, test_fraction=cfg.test_fraction, seed=seed)
    out = _out(cfg, "train")
    _dump(
        {
            "tfidf": tfidf.to_json(),
            "ensemble": model.to_json(),
            "split": {"train": [ids[i] for i in tr], "test": [ids[i] for i in te]},
            "held_out_accuracy": held_out,
            "cross_validation": cv,
            "feature_importance": boost.feature_importance(model, 20, tfidf.vocabulary.terms),
        },
        out,
    )
    log.info("train: held-out accuracy %.3f, cv mean %.3f", held_out, cv["mean"])
    _finish(cfg, m, out)


def cmd_predict(cfg: PipelineConfig, method: str) -> None:
    stage = f"predict-{method}"
    m = Manifest(stage, {"method": method})
    docs = load_documents(_artifact(cfg, "filter", m))
    out = _out(cfg, stage)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if method == "boost":
            data = json.loads(_artifact(cfg, "train", m).read_text(encoding="utf-8"))
            tfidf = TfidfModel.from_json(data["tfidf"])
            model = boost.Ensemble.from_json(data["ensemble"])
            writer.writerow(["id", "margin", "probability", "label"])
            for d in docs:
                x = transform(normalize_headline(d.headline), tfidf)
                margin = boost.predict_margin(x, model)
                writer.writerow([d.id, repr(margin), repr(boost.sigmoid(margin)), boost.predict_label(x, model).value])
        elif method == "lexicon":
            lex = lexicon.load_lexicon(_artifact(cfg, "lexicon", m))
            writer.writerow(["id", "label", "category", "trigger"])
            for d in docs:
                p = lexicon.predict_lexicon(d.headline, lex)
                writer.writerow([d.id, p.label.value, p.category.value if p.category else "", p.trigger or ""])
        else:
            raise ValueError(f"unknown prediction method {method!r}")
    _finish(cfg, m, out)


def cmd_evaluate(cfg: PipelineConfig) -> None:
    m = Manifest("evaluate", {"band": cfg.band, "classes": [c.value for c in POLAR]})
    truth = _load_truth(_artifact(cfg, "annotate", m))
    methods: dict[str, dict[str, Label]] = {}
    for method in ("lexicon", "boost"):
        path = _out(cfg, f"predict-{method}")
        if path.exists():
            methods[method] = _read_predictions(m.add_input(path.stem, path))
    for name in sorted(cfg.scores):
        path = m.add_input(f"scores-{name}", cfg.scores[name])
        methods[name] = evaluation.scores_to_labels(evaluation.load_scores(path), cfg.band)
    if not methods:
        raise MissingInputError("evaluate: no predictions found; run 'predict' first")
    polar = [d for d, lab in truth.items() if lab in POLAR]
    overall = evaluation.compare_methods(truth, methods)
    payload: dict = {"truth": truth.distribution(), "n_polar": len(polar), "all": overall.to_json()}
    text = ["all polar truth documents", overall.to_text()]
    if "boost" in methods:
        model = json.loads(_artifact(cfg, "train", m).read_text(encoding="utf-8"))
        test_ids = model["split"]["test"]
        held = evaluation.compare_methods(truth, methods, ids=test_ids)
        payload["held_out"] = held.to_json()
        text += ["", f"held-out split ({len(test_ids)} documents)", held.to_text()]
    payload["distribution"] = {k: evaluation.label_distribution(v) for k, v in methods.items()}
    if "lexicon" in methods and "boost" in methods:
        payload["agreement_lexicon_boost"] = evaluation.agreement_rate(methods["lexicon"], methods["boost"])
    out = _out(cfg, "evaluate")
    _dump(payload, out)
    print("\n".join(text))
    _finish(cfg, m, out)


def _date(text: str | None) -> dt.date | None:
    return dt.date.fromisoformat(text) if text else None


def cmd_correlate(cfg: PipelineConfig) -> None:
    method = cfg.correlate_method
    params = {
        "method": method,
        "from": cfg.window_from,
        "to": cfg.window_to,
        "horizon": cfg.horizon,
        "carry_forward": cfg.carry_forward,
    }
    m = Manifest("correlate", params)
    docs = load_documents(_artifact(cfg, "filter", m))
    preds = _read_predictions(_artifact(cfg, f"predict-{method}", m))
    prices = market.load_prices(m.add_input("prices", cfg.require("prices")))
    daily = market.daily_sentiment(preds, docs)
    table = market.align(daily, prices, _date(cfg.window_from), _date(cfg.window_to), cfg.carry_forward)
    report = market.directional_report(table, cfg.horizon)
    report["dropped_non_trading_days"] = table.dropped
    out = _out(cfg, "correlate")
    svg, twin = chart.emit_chart(table, out.with_name("chart.svg"))
    _dump(report, out)
    frac = report["match_fraction"]
    print(f"directional match: {report['matches']}/{report['evaluated']}" + (f" = {frac:.3f}" if frac is not None else ""))
    _finish(cfg, m, out, svg, twin)


def cmd_run(cfg: PipelineConfig) -> None:
    cmd_ingest(cfg)
    cmd_topics(cfg)
    cmd_filter(cfg)
    cmd_annotate(cfg)
    cmd_lexicon(cfg)
    cmd_train(cfg)
    cmd_predict(cfg, "lexicon")
    cmd_predict(cfg, "boost")
    cmd_evaluate(cfg)
    cmd_correlate(cfg)


# -- argument handling ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI config file")
    common.add_argument("--sample", action="store_true", help="use the bundled sample config")
    common.add_argument("--out", dest="output", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="root seed")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="finsent", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add("ingest", "load and validate the raw corpus")
    p.add_argument("--corpus", type=Path)
    p.add_argument("--format", dest="corpus_format", choices=("jsonl", "csv"))

    def topic_flags(p):
        p.add_argument("--k", type=int)
        p.add_argument("--iters", dest="nmf_iters", type=int)
        p.add_argument("--tol", dest="nmf_tol", type=float)
        p.add_argument("--min-df", dest="topic_min_df", type=int)

    def keep_flag(p):
        p.add_argument("--keep", help="comma-separated topic indices to keep")

    def lexicon_flags(p):
        p.add_argument("--lexicon", type=Path)
        p.add_argument("--synonyms", type=Path)
        p.add_argument("--bigrams", type=Path)
        p.add_argument("--removals", type=Path)
        p.add_argument("--experiment", type=int, choices=(1, 2, 3))

    def train_flags(p):
        for name, typ in (
            ("n_rounds", int),
            ("max_depth", int),
            ("learning_rate", float),
            ("l2_lambda", float),
            ("gamma_min_gain", float),
            ("min_child_weight", float),
            ("base_score", float),
        ):
            p.add_argument("--" + name.replace("_", "-"), dest="boost_" + name, type=typ)
        p.add_argument("--test-fraction", dest="test_fraction", type=float)
        p.add_argument("--cv-splits", dest="cv_splits", type=int)

    def eval_flags(p):
        p.add_argument("--band", type=float)
        p.add_argument("--scores", action="append", metavar="NAME=PATH", help="external analyzer scores (repeatable)")

    def market_flags(p):
        p.add_argument("--prices", type=Path)
        p.add_argument("--from", dest="window_from")
        p.add_argument("--to", dest="window_to")
        p.add_argument("--horizon", type=int)
        p.add_argument("--carry-forward", dest="carry_forward", action="store_true", default=None)
        p.add_argument("--correlate-method", dest="correlate_method", choices=("boost", "lexicon"))

    topic_flags(add("topics", "fit the NMF topic model and print top terms"))
    keep_flag(add("filter", "keep documents of the selected topics"))
    add("annotate", "majority-vote ground truth and Fleiss' kappa").add_argument("--annotations", type=Path)
    lexicon_flags(add("lexicon", "build the experiment lexicon"))
    train_flags(add("train", "train the boosted-tree classifier"))
    add("predict", "predict sentiment for the filtered documents").add_argument(
        "--method", choices=("boost", "lexicon"), required=True
    )
    eval_flags(add("evaluate", "score predictions against ground truth"))
    market_flags(add("correlate", "align sentiment with prices and chart it"))

    p = add("run", "run every stage in order")
    p.add_argument("--corpus", type=Path)
    p.add_argument("--annotations", type=Path)
    topic_flags(p)
    keep_flag(p)
    lexicon_flags(p)
    train_flags(p)
    eval_flags(p)
    market_flags(p)
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    if args.config is not None:
        cfg = PipelineConfig.from_ini(args.config)
    elif args.sample:
        cfg = PipelineConfig.from_ini(sample_config_path())
    else:
        cfg = PipelineConfig()
    skip = {"command", "config", "sample", "verbose", "method"}
    flags = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    boost_flags = {k[len("boost_"):]: flags.pop(k) for k in list(flags) if k.startswith("boost_")}
    if "scores" in flags:
        pairs = dict(cfg.scores)
        for item in flags.pop("scores"):
            name, sep, path = item.partition("=")
            if not sep or not name:
                raise ValueError(f"--scores expects NAME=PATH, got {item!r}")
            pairs[name] = Path(path)
        flags["scores"] = pairs
    cfg = cfg.updated(flags)
    if boost_flags:
        cfg = cfg.updated({"boost": boost_flags})
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = config_from_args(args)
        Path(cfg.output).mkdir(parents=True, exist_ok=True)
        command: Callable[[PipelineConfig], None]
        if args.command == "predict":
            cmd_predict(cfg, args.method)
        else:
            command = {
                "ingest": cmd_ingest,
                "topics": cmd_topics,
                "filter": cmd_filter,
                "annotate": cmd_annotate,
                "lexicon": cmd_lexicon,
                "train": cmd_train,
                "evaluate": cmd_evaluate,
                "correlate": cmd_correlate,
                "run": cmd_run,
            }[args.command]
            command(cfg)
    except (MissingInputError, FileNotFoundError) as exc:
        print(f"finsent: missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ValueError as exc:
        print(f"finsent: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.info("internal error", exc_info=True)
        print(f"finsent: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
