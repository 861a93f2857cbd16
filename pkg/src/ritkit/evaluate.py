"""Ground truth, experiment protocols and metric computation.

Metrics are computed exactly (fractions) and rounded half-up to two decimal
places only for display. Overall accuracy is micro accuracy (total correct
over total samples), never an average of per-class recalls.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable

from .detector import FineCategory, aggregate
from .mutate import MutantManifest
from .prompts import COARSE_LABELS, FINE_LABELS, ParseFailure

Prediction = tuple[str, ...] | ParseFailure


@dataclass(frozen=True)
class GroundTruthEntry:
    instance_id: str
    source: str
    rule_a: str
    rule_b: str
    fine: str
    coarse: str = ""

    def __post_init__(self) -> None:
        expected = aggregate(FineCategory(self.fine)).value
        if not self.coarse:
            object.__setattr__(self, "coarse", expected)
        elif self.coarse != expected:
            raise ValueError(f"coarse label {self.coarse!r} does not aggregate from {self.fine!r}")

    def label(self, taxonomy: str) -> str:
        return self.fine if taxonomy == "six" else self.coarse

    def to_json(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "source": self.source,
            "rule_a": self.rule_a,
            "rule_b": self.rule_b,
            "fine": self.fine,
            "coarse": self.coarse,
        }

    @staticmethod
    def from_json(obj: dict) -> "GroundTruthEntry":
        return GroundTruthEntry(
            instance_id=obj["instance_id"],
            source=obj["source"],
            rule_a=obj["rule_a"],
            rule_b=obj["rule_b"],
            fine=obj["fine"],
            coarse=obj.get("coarse", ""),
        )


def _check_unique_ids(entries: list[GroundTruthEntry]) -> list[GroundTruthEntry]:
    seen: set[str] = set()
    for entry in entries:
        if entry.instance_id in seen:
            raise ValueError(f"duplicate instance id: {entry.instance_id}")
        seen.add(entry.instance_id)
    return entries


def ground_truth_from_manifest(manifest: MutantManifest) -> list[GroundTruthEntry]:
    return _check_unique_ids(
        [
            GroundTruthEntry(
                instance_id=rec.mutant_id,
                source=rec.output_path,
                rule_a=rec.rule_a,
                rule_b=rec.rule_b,
                fine=rec.operator,
            )
            for rec in manifest.records
        ]
    )


def save_ground_truth(entries: Iterable[GroundTruthEntry], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry.to_json(), sort_keys=True) + "\n")


def load_ground_truth(path: str | Path) -> list[GroundTruthEntry]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                entries.append(GroundTruthEntry.from_json(json.loads(line)))
    return _check_unique_ids(entries)


@dataclass(frozen=True)
class ExperimentConfig:
    taxonomy: str = "six"  # "six" | "three"
    multi_response: bool = True
    shots: int = 0

    def __post_init__(self) -> None:
        if self.taxonomy not in ("six", "three"):
            raise ValueError("taxonomy must be 'six' or 'three'")
        if self.shots not in (0, 1, 2):
            raise ValueError("shots must be 0, 1 or 2")

    @property
    def labels(self) -> tuple[str, ...]:
        return FINE_LABELS if self.taxonomy == "six" else COARSE_LABELS


# The four evaluation cells; mutation runs reuse them as dataset choices.
EXPERIMENT_CELLS = {
    "A": ExperimentConfig(taxonomy="six", multi_response=True),
    "B": ExperimentConfig(taxonomy="six", multi_response=False),
    "C": ExperimentConfig(taxonomy="three", multi_response=True),
    "D": ExperimentConfig(taxonomy="three", multi_response=False),
}


def score_prediction(pred: Prediction, truth: str, config: ExperimentConfig) -> bool:
    """Multi mode: correct if truth is among predictions; single: exact match."""
    if isinstance(pred, ParseFailure):
        return False
    if config.multi_response:
        return truth in pred
    return len(pred) == 1 and pred[0] == truth


@dataclass
class ConfusionTally:
    per_class: dict[str, list[int]] = field(default_factory=dict)  # label -> [correct, total]
    parse_failures: int = 0
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def add(self, truth: str, correct: bool, failed: bool = False) -> None:
        cell = self.per_class.setdefault(truth, [0, 0])
        cell[1] += 1
        if correct:
            cell[0] += 1
        if failed:
            self.parse_failures += 1

    def merge(self, other: "ConfusionTally") -> "ConfusionTally":
        out = ConfusionTally(
            per_class={k: list(v) for k, v in self.per_class.items()},
            parse_failures=self.parse_failures + other.parse_failures,
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
        )
        for label, (correct, total) in other.per_class.items():
            cell = out.per_class.setdefault(label, [0, 0])
            cell[0] += correct
            cell[1] += total
        return out

    @property
    def total(self) -> int:
        return sum(total for _, total in self.per_class.values())

    @property
    def correct(self) -> int:
        return sum(correct for correct, _ in self.per_class.values())


def per_class_recall(tally: ConfusionTally) -> dict[str, Fraction]:
    """correct/total per class; classes with zero total are omitted."""
    return {
        label: Fraction(correct, total)
        for label, (correct, total) in tally.per_class.items()
        if total > 0
    }


def micro_accuracy(tally: ConfusionTally) -> Fraction:
    """Total correct over total samples (not an average of recalls)."""
    if tally.total == 0:
        raise ValueError("micro accuracy is undefined on an empty dataset")
    return Fraction(tally.correct, tally.total)


def recall(tp: int, fn: int) -> Fraction | None:
    """TP / (TP + FN); None when the denominator is zero."""
    if tp + fn == 0:
        return None
    return Fraction(tp, tp + fn)


def precision(tp: int, fp: int) -> Fraction | None:
    if tp + fp == 0:
        return None
    return Fraction(tp, tp + fp)


def format_percent(value: Fraction | None) -> str:
    """Two decimal places, half-up, e.g. Fraction(2188, 2495) -> '87.70%'."""
    if value is None:
        return "n/a"
    dec = Decimal(value.numerator) / Decimal(value.denominator) * 100
    return f"{dec.quantize(Decimal('0.01'), rounding=ROUND_HALF_UP)}%"


@dataclass(frozen=True)
class MetricsRow:
    per_class: dict[str, Fraction]
    overall: Fraction
    parse_failures: int
    total: int
    precision: Fraction | None = None  # only meaningful for TP/FP-style runs
    recall: Fraction | None = None

    def rendered(self, labels: tuple[str, ...]) -> dict[str, str]:
        out = {label: format_percent(self.per_class.get(label)) for label in labels}
        out["Total"] = format_percent(self.overall)
        return out


@dataclass(frozen=True)
class InstanceLog:
    instance_id: str
    truth: str
    labels: tuple[str, ...] | None
    failure: str | None
    correct: bool

    def to_json(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "truth": self.truth,
            "labels": list(self.labels) if self.labels is not None else None,
            "failure": self.failure,
            "correct": self.correct,
        }

    @staticmethod
    def from_json(obj: dict) -> "InstanceLog":
        labels = obj.get("labels")
        return InstanceLog(
            instance_id=obj["instance_id"],
            truth=obj["truth"],
            labels=tuple(labels) if labels is not None else None,
            failure=obj.get("failure"),
            correct=obj["correct"],
        )


Predictor = Callable[[GroundTruthEntry], Prediction]


def echo_predictor(dataset: list[GroundTruthEntry], taxonomy: str = "six") -> Predictor:
    """Ground-truth echo: answers every instance with its manifest label."""
    labels = {entry.instance_id: entry.label(taxonomy) for entry in dataset}
    return lambda entry: (labels[entry.instance_id],)


def constant_predictor(label: str) -> Predictor:
    return lambda entry: (label,)


def detector_predictor(taxonomy: str = "six", strict: bool = True) -> Predictor:
    """Classify an instance file with the static detector itself."""
    from .detector import DetectorConfig, detect_file
    from .parser import parse_ruleset
    from .source import SourceFile

    config = DetectorConfig(strict_event_matching=strict)

    def predict(entry: GroundTruthEntry) -> Prediction:
        report = detect_file(parse_ruleset(SourceFile.from_path(entry.source)), config)
        raw = [f.category.value if taxonomy == "six" else f.coarse.value for f in report.findings]
        ordered = tuple(dict.fromkeys(raw))
        if not ordered:
            return ParseFailure("no-valid-label", "detector found no threats")
        return ordered

    return predict


def backend_predictor(template, backend, multi_allowed: bool | None = None) -> Predictor:
    """Blind classification through a text backend (hybrid recovery mode)."""
    from pathlib import Path as _Path

    from .hybrid import recover_negatives

    def predict(entry: GroundTruthEntry) -> Prediction:
        text = _Path(entry.source).read_text(encoding="utf-8")
        return recover_negatives(text, template, backend, multi_allowed)

    return predict


def run_experiment(
    config: ExperimentConfig,
    dataset: list[GroundTruthEntry],
    predictor: Predictor,
) -> tuple[MetricsRow, list[InstanceLog]]:
    """Score every instance; the log is sufficient to recompute all metrics."""
    tally = ConfusionTally()
    logs: list[InstanceLog] = []
    for entry in dataset:
        truth = entry.label(config.taxonomy)
        try:
            pred = predictor(entry)
        except Exception as exc:  # unreadable instance scores incorrect
            pred = ParseFailure("no-valid-label", f"predictor error: {exc}")
        correct = score_prediction(pred, truth, config)
        failed = isinstance(pred, ParseFailure)
        tally.add(truth, correct, failed)
        logs.append(
            InstanceLog(
                instance_id=entry.instance_id,
                truth=truth,
                labels=None if failed else tuple(pred),
                failure=pred.kind if failed else None,
                correct=correct,
            )
        )
    row = MetricsRow(
        per_class=per_class_recall(tally),
        overall=micro_accuracy(tally),
        parse_failures=tally.parse_failures,
        total=tally.total,
    )
    return row, logs


def metrics_from_logs(logs: Iterable[InstanceLog]) -> MetricsRow:
    """Recompute a MetricsRow from a per-instance log (replay)."""
    tally = ConfusionTally()
    for log in logs:
        tally.add(log.truth, log.correct, log.failure is not None)
    return MetricsRow(
        per_class=per_class_recall(tally),
        overall=micro_accuracy(tally),
        parse_failures=tally.parse_failures,
        total=tally.total,
    )


def save_logs(logs: Iterable[InstanceLog], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for log in logs:
            fh.write(json.dumps(log.to_json(), sort_keys=True) + "\n")


def load_logs(path: str | Path) -> list[InstanceLog]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(InstanceLog.from_json(json.loads(line)))
    return out


def render_metrics_table(row: MetricsRow, labels: tuple[str, ...], name: str = "run") -> str:
    """Aligned text table with per-class recall columns plus Total."""
    rendered = row.rendered(labels)
    headers = list(labels) + ["Total"]
    cells = [rendered[h] for h in headers]
    name_width = max(len(name), len("run"))
    widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
    head = " | ".join([" " * name_width] + [h.rjust(w) for h, w in zip(headers, widths)])
    line = "-+-".join(["-" * name_width] + ["-" * w for w in widths])
    body = " | ".join([name.ljust(name_width)] + [c.rjust(w) for c, w in zip(cells, widths)])
    footer = f"samples: {row.total}, parse failures: {row.parse_failures}"
    return "\n".join([head, line, body, footer])


# ---------------------------------------------------------------------------
# Hybrid precision accounting (before vs. after reconciliation)


@dataclass(frozen=True)
class PrecisionTable:
    before: dict[str, Fraction | None]
    after: dict[str, Fraction | None]
    before_total: Fraction | None
    after_total: Fraction | None


def hybrid_precision(
    findings: list,
    kept_refs: set[str],
    truth: dict[str, bool],
) -> PrecisionTable:
    """Per-category precision before and after reconciliation.

    `findings` are detector findings, `truth` maps finding keys to TP/FP
    labels, `kept_refs` are the keys surviving reconciliation.
    """
    from .detector import finding_key

    def tally(keys: Iterable[str], categories: dict[str, str]) -> tuple[dict[str, Fraction | None], Fraction | None]:
        per_cat: dict[str, list[int]] = {}
        tp_total = fp_total = 0
        for key in keys:
            cat = categories[key]
            cell = per_cat.setdefault(cat, [0, 0])
            if truth[key]:
                cell[0] += 1
                tp_total += 1
            else:
                fp_total += 1
            cell[1] += 1
        table = {cat: precision(tp, total - tp) for cat, (tp, total) in per_cat.items()}
        return table, precision(tp_total, fp_total)

    categories = {finding_key(f): f.category.value for f in findings}
    all_keys = list(categories)
    before, before_total = tally(all_keys, categories)
    after, after_total = tally([k for k in all_keys if k in kept_refs], categories)
    return PrecisionTable(before, after, before_total, after_total)


def render_precision_table(table: PrecisionTable, labels: tuple[str, ...] = FINE_LABELS) -> str:
    headers = list(labels) + ["Total"]
    rows = [
        ("before", [table.before.get(c) for c in labels] + [table.before_total]),
        ("after", [table.after.get(c) for c in labels] + [table.after_total]),
    ]
    widths = [max(len(h), 7) for h in headers]
    head = " | ".join(["stage ".ljust(6)] + [h.rjust(w) for h, w in zip(headers, widths)])
    line = "-+-".join(["-" * 6] + ["-" * w for w in widths])
    out = [head, line]
    for name, values in rows:
        out.append(" | ".join([name.ljust(6)] + [format_percent(v).rjust(w) for v, w in zip(values, widths)]))
    return "\n".join(out)
