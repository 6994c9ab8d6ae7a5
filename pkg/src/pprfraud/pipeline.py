"""Pipeline stages over plain CSV/JSON intermediates in the output directory.

Every stage reads its inputs from disk and writes its outputs back, so the
end-to-end run and a sequence of single-stage invocations execute the same
code on the same bytes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import warnings
from pathlib import Path
from typing import Callable

from . import BASELINE_FEATURES, ALL_FEATURES
from .config import PipelineConfig
from .errors import MissingIntermediate, PprFraudError, StageError
from .evaluation import DegenerateFeature, evaluate, psi, write_curve, write_psi
from .exposure import NotConverged, build_personalization, compute_ppr, read_scores, write_scores
from .features import ChannelEncoder, assemble_features, read_features, write_features
from .graph import build_graph, graph_stats, write_edges
from .ingest import SplitDataset, chronological_split, filter_status, read_ledger, write_ledger
from .model import feature_importance, fit, model_from_dict, model_to_dict, predict_proba
from .svg import bar_chart, line_chart
from .synth import synthesize, write_rings

log = logging.getLogger(__name__)

LEDGER = "ledger.csv"
RINGS = "rings.csv"
EDGES = "edges.csv"
SCORES = "ppr_scores.csv"
FEATURES_TRAIN = "features_train.csv"
FEATURES_TEST = "features_test.csv"
MODEL = "model.json"
METRICS = "metrics.json"
ROC = "roc.csv"
PR = "pr.csv"
PSI = "psi.csv"
IMPORTANCE = "importance.csv"
ROC_SVG = "roc.svg"
PR_SVG = "pr.svg"
IMPORTANCE_SVG = "importance.svg"
REPORT_MD = "report.md"
MANIFEST = "manifest.json"

# intermediate -> subcommand that writes it
PRODUCERS = {
    LEDGER: "synth",
    SCORES: "ppr",
    FEATURES_TRAIN: "features",
    FEATURES_TEST: "features",
    MODEL: "train",
    METRICS: "evaluate",
    PSI: "psi",
}

MODEL_COLUMNS = {"LR_base": BASELINE_FEATURES, "LR_ppr": ALL_FEATURES}


def _out(cfg: PipelineConfig, name: str) -> Path:
    return cfg.out_dir / name


def _need(cfg: PipelineConfig, name: str) -> Path:
    path = _out(cfg, name)
    if not path.is_file():
        raise MissingIntermediate(path, PRODUCERS[name])
    return path


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _write_csv(path: Path, writer: Callable, *args) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer(*args, fh)


def _write_json(path: Path, doc) -> None:
    _write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_manifest(cfg: PipelineConfig) -> dict:
    """Hash every file in the output directory except the manifest itself."""
    entries = {}
    for path in sorted(cfg.out_dir.iterdir()):
        if path.is_file() and path.name != MANIFEST:
            entries[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
    doc = {"files": entries}
    _write_json(_out(cfg, MANIFEST), doc)
    return doc


def ledger_path(cfg: PipelineConfig) -> Path:
    if cfg.ledger is not None:
        if not cfg.ledger.is_file():
            raise FileNotFoundError(f"input ledger not found: {cfg.ledger}")
        return cfg.ledger
    return _need(cfg, LEDGER)


def load_split(cfg: PipelineConfig) -> SplitDataset:
    txns = filter_status(read_ledger(ledger_path(cfg)), cfg.status)
    return chronological_split(txns, cfg.history_days, cfg.train_fraction)


def stage_synth(cfg: PipelineConfig) -> dict:
    ledger = synthesize(cfg.synth)
    _write_csv(_out(cfg, LEDGER), write_ledger, ledger.transactions)
    _write_csv(_out(cfg, RINGS), write_rings, ledger.rings)
    return {"n_transactions": len(ledger.transactions), "n_fraud": sum(t.label for t in ledger.transactions), "n_mules": len(ledger.rings)}


def stage_graph_stats(cfg: PipelineConfig) -> dict:
    split = load_split(cfg)
    graph = build_graph(split.past)
    _write_csv(_out(cfg, EDGES), write_edges, graph)
    return graph_stats(graph)


def stage_ppr(cfg: PipelineConfig) -> dict:
    split = load_split(cfg)
    graph = build_graph(split.past)
    p = build_personalization(split.past, graph)
    try:
        scores = compute_ppr(graph, p, cfg.ppr)
    except NotConverged as exc:
        log.warning("%s; continuing with the last iterate", exc)
        scores = exc.scores
    _write_csv(_out(cfg, EDGES), write_edges, graph)
    _write_csv(_out(cfg, SCORES), write_scores, graph, scores)
    return {"n_nodes": graph.n_nodes, "iterations": scores.iterations_used, "converged": scores.converged, "residual": scores.residual}


def stage_features(cfg: PipelineConfig) -> dict:
    split = load_split(cfg)
    lookup = None
    if cfg.include_ppr:
        with open(_need(cfg, SCORES)) as fh:
            lookup = read_scores(fh)
    encoder = ChannelEncoder.fit(t.channel for t in split.train)
    train, test = assemble_features(
        split,
        lookup,
        None,
        encoder,
        window_days=cfg.window_days,
        include_ppr=cfg.include_ppr,
        time_of_day_mode=cfg.time_of_day_mode,
        exposure_mode=cfg.exposure_mode,
    )
    _write_csv(_out(cfg, FEATURES_TRAIN), write_features, train)
    _write_csv(_out(cfg, FEATURES_TEST), write_features, test)
    return {"history": len(split.history), "train": len(train), "test": len(test), "train_fraud": int(train.y.sum()), "test_fraud": int(test.y.sum())}


def _read_fm(cfg: PipelineConfig, name: str):
    with open(_need(cfg, name)) as fh:
        return read_features(fh)


def stage_train(cfg: PipelineConfig) -> dict:
    train = _read_fm(cfg, FEATURES_TRAIN)
    models = {}
    for name in cfg.models:
        cols = MODEL_COLUMNS[name]
        missing = [c for c in cols if c not in train.columns]
        if missing:
            raise PprFraudError(f"{FEATURES_TRAIN} lacks columns {missing}; rerun `features` with mode {cfg.mode}")
        model = fit(train.select(cols).X, train.y, cfg.train, cols)
        models[name] = model_to_dict(model)
        log.info("%s: %d epochs, loss %.6g", name, model.epochs, model.final_loss)
    _write_json(_out(cfg, MODEL), {"models": models})
    return {name: {"epochs": m["training"]["epochs"], "final_loss": m["training"]["final_loss"]} for name, m in models.items()}


def _load_models(cfg: PipelineConfig) -> dict:
    with open(_need(cfg, MODEL)) as fh:
        doc = json.load(fh)
    return {name: model_from_dict(d) for name, d in doc["models"].items()}


def stage_evaluate(cfg: PipelineConfig) -> dict:
    test = _read_fm(cfg, FEATURES_TEST)
    models = _load_models(cfg)
    reports = {}
    for name, model in models.items():
        probs = predict_proba(model, test.select(model.feature_names).X)
        reports[name] = evaluate(probs, test.y, cfg.threshold)
    doc = {
        "n_test": len(test),
        "n_test_fraud": int(test.y.sum()),
        "models": {name: r.as_dict() for name, r in reports.items()},
    }
    if "LR_base" in reports and "LR_ppr" in reports:
        doc["comparison"] = {
            "auc_base": reports["LR_base"].auc,
            "auc_ppr": reports["LR_ppr"].auc,
            "delta_auc": reports["LR_ppr"].auc - reports["LR_base"].auc,
        }
    _write_json(_out(cfg, METRICS), doc)
    _write_csv(_out(cfg, ROC), write_curve, {n: r.roc_points for n, r in reports.items()}, "fpr", "tpr")
    _write_csv(_out(cfg, PR), write_curve, {n: r.pr_points for n, r in reports.items()}, "recall", "precision")
    summary = {name: {"auc": r.auc} for name, r in reports.items()}
    if "comparison" in doc:
        summary["delta_auc"] = doc["comparison"]["delta_auc"]
    return summary


def stage_psi(cfg: PipelineConfig) -> dict:
    train = _read_fm(cfg, FEATURES_TRAIN)
    test = _read_fm(cfg, FEATURES_TEST)
    entries = [psi(train.column(c), test.column(c), cfg.psi_bins, feature=c) for c in train.columns]
    for e in entries:
        if e.degenerate:
            warnings.warn(DegenerateFeature(f"{e.feature} is constant on the training set"), stacklevel=2)
    _write_csv(_out(cfg, PSI), write_psi, entries)
    return {e.feature: e.psi for e in entries}


def stage_report(cfg: PipelineConfig) -> dict:
    models = _load_models(cfg)
    with open(_need(cfg, METRICS)) as fh:
        metrics = json.load(fh)
    with open(_need(cfg, PSI)) as fh:
        psi_rows = fh.read().splitlines()[1:]

    lines = ["model,rank,feature,importance"]
    ranking = {}
    for name, model in models.items():
        ranking[name] = feature_importance(model)
        for rank, (feat, imp) in enumerate(ranking[name], start=1):
            lines.append(f"{name},{rank},{feat},{imp!r}")
    _write_text(_out(cfg, IMPORTANCE), "\n".join(lines) + "\n")

    # graph feature highlighted against the baseline ones
    show = "LR_ppr" if "LR_ppr" in ranking else next(iter(ranking))
    bars = [(f, v, 1 if f == "ppr" else 0) for f, v in ranking[show]]
    _write_text(_out(cfg, IMPORTANCE_SVG), bar_chart(bars, f"Feature importance ({show})"))
    roc = {n: [tuple(p) for p in m["roc_points"]] for n, m in metrics["models"].items()}
    pr = {n: [tuple(p) for p in m["pr_points"]] for n, m in metrics["models"].items()}
    _write_text(_out(cfg, ROC_SVG), line_chart(roc, "ROC curve", "False positive rate", "True positive rate", diagonal=True))
    _write_text(_out(cfg, PR_SVG), line_chart(pr, "Precision-Recall curve", "Recall", "Precision"))

    md = ["# Fraud exposure report", "", "## Model performance", ""]
    md.append("| model | features | AUC | AP | accuracy | precision | recall | weighted precision | weighted recall |")
    md.append("|---|---|---|---|---|---|---|---|---|")
    for name, m in metrics["models"].items():
        md.append(
            f"| {name} | {len(models[name].feature_names)} | {m['auc']:.4f} | {m['average_precision']:.4f} | {m['accuracy']:.4f} "
            f"| {m['precision']:.4f} | {m['recall']:.4f} | {m['weighted_precision']:.4f} | {m['weighted_recall']:.4f} |"
        )
    if "comparison" in metrics:
        md += ["", f"AUC delta (LR_ppr - LR_base): {metrics['comparison']['delta_auc']:+.4f}"]
    for name, ranked in ranking.items():
        md += ["", f"## Feature importance: {name}", "", "| rank | feature | abs coefficient |", "|---|---|---|"]
        md += [f"| {r} | {f} | {v:.4f} |" for r, (f, v) in enumerate(ranked, start=1)]
    md += ["", "## Feature stability (PSI, train vs test)", "", "| feature | PSI | flag |", "|---|---|---|"]
    for row in psi_rows:
        feat, value, flag = row.split(",")
        md.append(f"| {feat} | {float(value):.3g} | {flag} |")
    _write_text(_out(cfg, REPORT_MD), "\n".join(md) + "\n")
    return {name: [f for f, _ in r] for name, r in ranking.items()}


STAGES: dict[str, Callable[[PipelineConfig], dict]] = {
    "synth": stage_synth,
    "graph-stats": stage_graph_stats,
    "ppr": stage_ppr,
    "features": stage_features,
    "train": stage_train,
    "evaluate": stage_evaluate,
    "psi": stage_psi,
    "report": stage_report,
}


def run_stage(cfg: PipelineConfig, name: str) -> dict:
    """Run one stage, refresh the manifest, and tag any failure with the stage name."""
    log.info("stage %s", name)
    try:
        result = STAGES[name](cfg)
    except MissingIntermediate:
        raise
    except (PprFraudError, OSError, ValueError) as exc:
        raise StageError(name, exc) from exc
    write_manifest(cfg)
    return result


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Execute every stage in order; synthesizes a ledger when none is configured."""
    names = list(STAGES)
    if cfg.ledger is not None:
        names.remove("synth")
        if not cfg.ledger.is_file():
            raise StageError("ingest", FileNotFoundError(f"input ledger not found: {cfg.ledger}"))
    names.remove("graph-stats")
    names.insert(names.index("ppr") if cfg.include_ppr else names.index("features"), "graph-stats")
    if not cfg.include_ppr:
        names.remove("ppr")
    return {name: run_stage(cfg, name) for name in names}
