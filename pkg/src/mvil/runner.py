"""Experiment orchestration: repeats, ablation matrix, single-view baselines."""

import os
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_hash, hyperparams_from_config
from .datasets import draw_split, pad_views, read_labels, read_matrix, read_split, write_matrix
from .errors import InputError
from .graph import prepare_view
from .metrics import LabelSet, accumulation_curve
from .report import ReportDoc, fmt, pct, render_report, write_report
from .training import train_stream

__all__ = ["RunResult", "ABLATION_VARIANTS", "run_experiment"]

METRIC_FIELDS = ("acc", "precision_macro", "recall_macro", "maf1")

# Component switches per ablation variant: partition mask, retention loss,
# Hebbian reconstruction. The full model is the last row.
ABLATION_VARIANTS = (
    ("C1", True, False, False),
    ("C2", False, True, False),
    ("C1+C2", True, True, False),
    ("C1+C2+C3", True, True, True),
)


@dataclass
class RunResult:
    report: ReportDoc
    report_text: str
    report_path: str
    summary: dict


def _variant_hyperparams(config: ExperimentConfig, c1: bool, c2: bool, c3: bool):
    return hyperparams_from_config(
        config.model_copy(update={"c1_mask": c1, "c2_retention": c2, "c3_hebbian": c3})
    )


def _metric_rows(streams: list, view: int) -> dict:
    """Mean and std of each metric at one view position, over repeats."""
    out = {}
    for name in METRIC_FIELDS:
        values = [getattr(s.metric_reports[view], name) for s in streams]
        out[f"{name}_mean"] = float(np.mean(values))
        out[f"{name}_std"] = float(np.std(values))
    return out


def _build_doc(config: ExperimentConfig, *, partial: bool, n: int, classes: int,
               label_names: list, streams: list, singles: list, ablations: dict,
               wall_time: float, embedding_files: list) -> ReportDoc:
    doc = ReportDoc()
    pre = doc.add_section(None)
    pre.append(("format", "mvil-report/1"))
    pre.append(("tool_version", __version__))
    pre.append(("config_hash", config_hash(config)))
    pre.append(("partial", "true" if partial else "false"))
    pre.append(("deterministic", "true" if config.deterministic else "false"))
    pre.append(("seed", str(config.seed)))
    pre.append(("repeats", str(len(streams))))
    pre.append(("samples", str(n)))
    pre.append(("views", str(len(config.views))))
    pre.append(("classes", str(classes)))
    pre.append(("label_map", " ".join(f"{tok}:{i}" for i, tok in enumerate(label_names))))
    if not config.deterministic:
        pre.append(("wall_time_s", fmt(wall_time)))

    sec = doc.add_section("config")
    for key, value in config.model_dump().items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        elif value is None:
            value = "none"
        elif isinstance(value, bool):
            value = "true" if value else "false"
        sec.append((key, str(value)))

    for r, stream in enumerate(streams):
        doc.put(f"run {r}", "seed", stream.seed)
        for v, (train_rep, metric) in enumerate(
            zip(stream.train_reports, stream.metric_reports)
        ):
            sec = doc.add_section(f"run {r} view {v + 1}")
            for name in METRIC_FIELDS:
                sec.append((name, fmt(getattr(metric, name))))
            sec.append(("loss_total", ",".join(fmt(x) for x in train_rep.loss_total)))
            sec.append(("loss_ce", ",".join(fmt(x) for x in train_rep.loss_ce)))
            sec.append(("loss_re", ",".join(fmt(x) for x in train_rep.loss_re)))

    views_done = min((len(s.metric_reports) for s in streams), default=0)
    for v in range(views_done):
        sec = doc.add_section(f"aggregate view {v + 1}")
        for key, value in _metric_rows(streams, v).items():
            sec.append((key, fmt(value)))

    if singles:
        # Baselines exist only for repeats whose main stream completed.
        paired = streams[: len(singles)]
        sec = doc.add_section("accumulation")
        for v in range(len(config.views)):
            streaming = float(np.mean([s.metric_reports[v].acc for s in paired]))
            alone = float(np.mean([run[v].metric_reports[0].acc for run in singles]))
            sec.append((f"view_{v + 1}", f"streaming {fmt(streaming)} single {fmt(alone)}"))

    for name, variant_streams in ablations.items():
        sec = doc.add_section(f"ablation {name}")
        last = len(variant_streams[0].metric_reports) - 1
        for key, value in _metric_rows(variant_streams, last).items():
            sec.append((key, fmt(value)))

    if embedding_files:
        sec = doc.add_section("files")
        for i, name in enumerate(embedding_files):
            sec.append((f"embedding_{i + 1}", name))

    sec = doc.add_section("summary")
    for v in range(views_done):
        rows = _metric_rows(streams, v)
        sec.append((
            f"view_{v + 1}",
            f"ACC {pct(rows['acc_mean'])} ({pct(rows['acc_std'])}) | "
            f"P {pct(rows['precision_macro_mean'])} ({pct(rows['precision_macro_std'])}) | "
            f"R {pct(rows['recall_macro_mean'])} ({pct(rows['recall_macro_std'])}) | "
            f"MAF1 {pct(rows['maf1_mean'])} ({pct(rows['maf1_std'])})",
        ))
    return doc


def run_experiment(config: ExperimentConfig, repeats: int = 1, ablation: bool = False,
                   single_view_baselines: bool = False,
                   dump_embeddings: bool = False) -> RunResult:
    """Run the configured stream, optional baselines and ablations, write reports.

    Repeat r uses seed ``config.seed + r`` for both the split and the
    run. A partial report is flushed after every completed view of the
    main runs.
    """
    if repeats < 1:
        raise InputError(f"repeats must be >= 1, got {repeats}")
    start = time.perf_counter()

    base = config.dataset
    raw = [read_matrix(os.path.join(base, name)) for name in config.views]
    counts = {name: m.shape[0] for name, m in zip(config.views, raw)}
    if len(set(counts.values())) > 1:
        detail = ", ".join(f"{k}={v}" for k, v in counts.items())
        raise InputError(f"view files disagree on row count: {detail}")
    label_idx, label_names = read_labels(os.path.join(base, config.label_file))
    n = raw[0].shape[0]
    if label_idx.shape[0] != n:
        raise InputError(f"label file has {label_idx.shape[0]} entries but views have {n} rows")
    classes = len(label_names)
    padded = pad_views(raw)
    prepared = [prepare_view(x, config.k, i) for i, x in enumerate(padded)]

    os.makedirs(config.output, exist_ok=True)
    report_path = os.path.join(config.output, "report.txt")
    hp_main = hyperparams_from_config(config)

    streams: list = []
    singles: list = []
    ablations: dict = {}
    embedding_files: list = []

    def labels_for(seed: int) -> LabelSet:
        if config.split_file:
            train, test = read_split(os.path.join(base, config.split_file), n)
            return LabelSet(labels=label_idx, train_idx=train, test_idx=test, c=classes)
        return draw_split(label_idx, classes, config.label_fraction, seed)

    def flush(partial: bool):
        doc = _build_doc(
            config, partial=partial, n=n, classes=classes, label_names=label_names,
            streams=streams, singles=singles, ablations=ablations,
            wall_time=time.perf_counter() - start, embedding_files=embedding_files,
        )
        write_report(doc, report_path)
        return doc

    for r in range(repeats):
        seed_r = config.seed + r
        labels_r = labels_for(seed_r)
        registered = []

        def on_view_end(position, stream_report, _registered=registered):
            if not _registered:
                _registered.append(stream_report)
                streams.append(stream_report)
            flush(partial=True)

        stream = train_stream(prepared, labels_r, hp_main, seed_r,
                              on_view_end=on_view_end)
        if not registered:
            streams.append(stream)

        if single_view_baselines:
            singles.append([
                train_stream([prepared[v]], labels_r, hp_main, seed_r)
                for v in range(len(prepared))
            ])
        if ablation:
            for name, c1, c2, c3 in ABLATION_VARIANTS:
                hp = _variant_hyperparams(config, c1, c2, c3)
                ablations.setdefault(name, []).append(
                    train_stream(prepared, labels_r, hp, seed_r)
                )

    if dump_embeddings:
        for v, h_star in enumerate(streams[0].embeddings):
            name = f"embeddings_view{v + 1}.txt"
            write_matrix(os.path.join(config.output, name), h_star)
            embedding_files.append(name)

    doc = flush(partial=False)
    text = render_report(doc)

    summary = {
        "report_path": report_path,
        "views": len(config.views),
        "repeats": repeats,
        "per_view": [
            {"view": v + 1, **_metric_rows(streams, v)}
            for v in range(len(config.views))
        ],
    }
    if single_view_baselines:
        summary["accumulation"] = [
            accumulation_curve(
                streams[r].metric_reports,
                [singles[r][v].metric_reports[0] for v in range(len(prepared))],
            )
            for r in range(repeats)
        ]
    if ablation:
        summary["ablation"] = {
            name: _metric_rows(runs, len(runs[0].metric_reports) - 1)
            for name, runs in ablations.items()
        }
    return RunResult(report=doc, report_text=text, report_path=report_path,
                     summary=summary)
