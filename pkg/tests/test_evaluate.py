from __future__ import annotations

import random
from collections import Counter
from fractions import Fraction

import pytest

from ritkit.client import StubBackend
from ritkit.detector import FineCategory, finding_key
from ritkit.evaluate import (
    EXPERIMENT_CELLS,
    ConfusionTally,
    ExperimentConfig,
    GroundTruthEntry,
    backend_predictor,
    constant_predictor,
    detector_predictor,
    echo_predictor,
    format_percent,
    ground_truth_from_manifest,
    hybrid_precision,
    load_logs,
    metrics_from_logs,
    micro_accuracy,
    per_class_recall,
    precision,
    recall,
    render_metrics_table,
    render_precision_table,
    run_experiment,
    save_logs,
    score_prediction,
)
from ritkit.mutate import MutantManifest, MutantRecord
from ritkit.prompts import FINE_LABELS, ParseFailure, PromptTemplate

MULTI = ExperimentConfig("six", True)
SINGLE = ExperimentConfig("six", False)


def entry(i: int, fine: str) -> GroundTruthEntry:
    return GroundTruthEntry(f"i{i}", f"file{i}.rules", "r1", "r2", fine)


class TestScorePrediction:
    def test_multi_accepts_any_match(self):
        assert score_prediction(("WAC", "STC"), "WAC", MULTI)

    def test_single_requires_exact_match(self):
        assert not score_prediction(("WAC", "STC"), "WAC", SINGLE)
        assert score_prediction(("SAC",), "SAC", SINGLE)

    def test_parse_failure_scores_incorrect(self):
        failure = ParseFailure("blank", "")
        assert not score_prediction(failure, "WAC", MULTI)
        assert not score_prediction(failure, "WAC", SINGLE)


class TestMetrics:
    def test_per_class_recall_edges(self):
        tally = ConfusionTally()
        for _ in range(4):
            tally.add("AC", False)
        for _ in range(3):
            tally.add("TC", True)
        recalls = per_class_recall(tally)
        assert recalls["AC"] == 0
        assert recalls["TC"] == 1
        assert "CC" not in recalls  # zero-total class omitted

    def test_micro_accuracy_is_not_recall_average(self):
        tally = ConfusionTally()
        for _ in range(99):
            tally.add("AC", True)
        tally.add("TC", False)
        assert micro_accuracy(tally) == Fraction(99, 100)
        mean_of_recalls = (Fraction(1) + Fraction(0)) / 2
        assert micro_accuracy(tally) != mean_of_recalls

    def test_headline_accuracy_value(self):
        tally = ConfusionTally()
        for i in range(2495):
            tally.add("CC", i < 2188)
        assert format_percent(micro_accuracy(tally)) == "87.70%"

    def test_empty_dataset_is_an_error(self):
        with pytest.raises(ValueError):
            micro_accuracy(ConfusionTally())

    def test_recall_and_precision_ratios(self):
        assert format_percent(recall(61, 53)) == "53.51%"
        assert recall(0, 5) == 0
        assert precision(3, 1) == Fraction(3, 4)
        assert recall(0, 0) is None and precision(0, 0) is None
        assert format_percent(None) == "n/a"

    def test_rounding_is_half_up(self):
        assert format_percent(Fraction(1, 8)) == "12.50%"
        assert format_percent(Fraction(625, 100000)) == "0.63%"

    def test_three_class_split_reproduces_headline_row(self):
        # With the 677/472/1346 class sizes, per-class corrects of
        # 403/445/1340 give the 59.53/94.28/99.55 recalls and 2188 total.
        tally = ConfusionTally()
        for label, correct, total in (("AC", 403, 677), ("TC", 445, 472), ("CC", 1340, 1346)):
            for i in range(total):
                tally.add(label, i < correct)
        recalls = per_class_recall(tally)
        assert format_percent(recalls["AC"]) == "59.53%"
        assert format_percent(recalls["TC"]) == "94.28%"
        assert format_percent(recalls["CC"]) == "99.55%"
        assert tally.correct == 2188 and tally.total == 2495
        assert format_percent(micro_accuracy(tally)) == "87.70%"

    def test_false_negative_recovery_split(self):
        # Blind-recovery profile over the 114 statically missed mutants.
        splits = (("WAC", 2, 2), ("STC", 2, 16), ("WTC", 18, 35), ("SCC", 33, 33), ("WCC", 6, 28))
        tally = ConfusionTally()
        for label, correct, total in splits:
            for i in range(total):
                tally.add(label, i < correct)
        recalls = per_class_recall(tally)
        assert format_percent(recalls["WAC"]) == "100.00%"
        assert format_percent(recalls["STC"]) == "12.50%"
        assert format_percent(recalls["WTC"]) == "51.43%"
        assert format_percent(recalls["SCC"]) == "100.00%"
        assert format_percent(recalls["WCC"]) == "21.43%"
        assert tally.correct == 61 and tally.total == 114
        assert format_percent(micro_accuracy(tally)) == "53.51%"


class TestRunExperiment:
    def _dataset(self):
        labels = ["WAC"] * 4 + ["SAC"] * 3 + ["SCC"] * 3
        return [entry(i, fine) for i, fine in enumerate(labels)]

    def test_echo_predictor_has_perfect_recall(self):
        dataset = self._dataset()
        row, logs = run_experiment(MULTI, dataset, lambda e: (e.fine,))
        assert all(value == 1 for value in row.per_class.values())
        assert row.overall == 1
        assert len(logs) == len(dataset)

    def test_constant_predictor_accuracy_equals_prevalence(self):
        dataset = self._dataset()
        row, _ = run_experiment(MULTI, dataset, lambda e: ("WAC",))
        prevalence = Counter(e.fine for e in dataset)["WAC"]
        assert row.overall == Fraction(prevalence, len(dataset))

    def test_replay_matches_live_run(self, tmp_path):
        dataset = self._dataset()
        rng = random.Random(3)
        predictor = lambda e: (rng.choice(FINE_LABELS),)  # noqa: E731
        row, logs = run_experiment(SINGLE, dataset, predictor)
        path = tmp_path / "log.jsonl"
        save_logs(logs, path)
        assert metrics_from_logs(load_logs(path)) == row

    def test_predictor_exception_scores_incorrect(self):
        def broken(entry):
            raise OSError("unreadable instance")

        row, logs = run_experiment(MULTI, self._dataset(), broken)
        assert row.overall == 0
        assert row.parse_failures == len(logs)

    def test_experiment_cells(self):
        assert EXPERIMENT_CELLS["A"].taxonomy == "six" and EXPERIMENT_CELLS["A"].multi_response
        assert EXPERIMENT_CELLS["B"].taxonomy == "six" and not EXPERIMENT_CELLS["B"].multi_response
        assert EXPERIMENT_CELLS["C"].taxonomy == "three" and EXPERIMENT_CELLS["C"].multi_response
        assert EXPERIMENT_CELLS["D"].taxonomy == "three" and not EXPERIMENT_CELLS["D"].multi_response

    def test_table_rendering_includes_all_labels(self):
        row, _ = run_experiment(MULTI, self._dataset(), lambda e: (e.fine,))
        table = render_metrics_table(row, FINE_LABELS, name="echo")
        for label in FINE_LABELS:
            assert label in table
        assert "100.00%" in table

    def test_predictor_factories(self, tmp_path):
        dataset = self._dataset()
        echo = echo_predictor(dataset, "three")
        assert echo(dataset[0]) == ("AC",)
        assert constant_predictor("WTC")(dataset[0]) == ("WTC",)

        rules = tmp_path / "wired.rules"
        rules.write_text(
            'rule "a"\nwhen\n    Time cron "0 00 08 * * ?"\nthen\n    sendCommand(X, ON)\nend\n'
            'rule "b"\nwhen\n    System started\nthen\n    sendCommand(X, OFF)\nend\n',
            encoding="utf-8",
        )
        instance = GroundTruthEntry("w1", str(rules), "r1", "r2", "SAC")
        assert detector_predictor("six")(instance) == ("SAC",)
        assert detector_predictor("three")(instance) == ("AC",)

        blind = backend_predictor(PromptTemplate(0, "six", True), StubBackend(constant="SAC"))
        assert blind(instance) == ("SAC",)


class TestScoringProperties:
    def test_monotonicity_and_accounting(self):
        rng = random.Random(2026)
        tally_multi = ConfusionTally()
        for _ in range(2000):
            truth = rng.choice(FINE_LABELS)
            if rng.random() < 0.08:
                pred: tuple | ParseFailure = ParseFailure("blank", "")
            else:
                k = rng.randint(1, 3)
                pred = tuple(dict.fromkeys(rng.choice(FINE_LABELS) for _ in range(k)))
            single = score_prediction(pred, truth, SINGLE)
            multi = score_prediction(pred, truth, MULTI)
            assert multi or not single  # single correct implies multi correct
            tally_multi.add(truth, multi, isinstance(pred, ParseFailure))
        recalls = per_class_recall(tally_multi)
        weighted = sum(
            recalls[label] * total for label, (_, total) in tally_multi.per_class.items()
        )
        assert micro_accuracy(tally_multi) == Fraction(weighted, tally_multi.total)

    def test_aggregation_consistency(self):
        rng = random.Random(7)
        coarse_of = {"WAC": "AC", "SAC": "AC", "WTC": "TC", "STC": "TC", "WCC": "CC", "SCC": "CC"}
        three = ExperimentConfig("three", True)
        for _ in range(500):
            truth = rng.choice(FINE_LABELS)
            pred = tuple(dict.fromkeys(rng.choice(FINE_LABELS) for _ in range(rng.randint(1, 2))))
            mapped = tuple(dict.fromkeys(coarse_of[p] for p in pred))
            assert score_prediction(mapped, coarse_of[truth], three) == (coarse_of[truth] in mapped)


class TestGroundTruth:
    def test_manifest_conversion(self):
        records = [
            MutantRecord("m1", "seed.rules", "SCC", "r1", "r2", {}, "out/m1.rules"),
            MutantRecord("m2", "seed.rules", "WAC", "r2", "r3", {}, "out/m2.rules"),
        ]
        entries = ground_truth_from_manifest(MutantManifest(records))
        assert [(e.instance_id, e.fine, e.coarse) for e in entries] == [
            ("m1", "SCC", "CC"),
            ("m2", "WAC", "AC"),
        ]

    def test_coarse_must_aggregate_from_fine(self):
        with pytest.raises(ValueError):
            GroundTruthEntry("x", "f", "r1", "r2", "WAC", coarse="TC")


class _StubFinding:
    """Minimal stand-in carrying just what hybrid_precision reads."""

    def __init__(self, key: str, category: FineCategory):
        self._key = key
        self.category = category
        self.rule_a = type("R", (), {"id": key})
        self.rule_b = type("R", (), {"id": "x"})
        self.threat_pair = (key, key)


def _precision_fixture():
    # Shaped like the static baseline: most false positives sit in WAC/WTC.
    spec = {
        FineCategory.WAC: (68, 32),
        FineCategory.SAC: (35, 5),
        FineCategory.WTC: (4, 12),
        FineCategory.STC: (11, 1),
        FineCategory.WCC: (7, 0),
        FineCategory.SCC: (7, 0),
    }
    findings, truth = [], {}
    n = 0
    for category, (tps, fps) in spec.items():
        for is_tp in [True] * tps + [False] * fps:
            finding = _StubFinding(f"f{n}", category)
            findings.append(finding)
            truth[finding_key(finding)] = is_tp
            n += 1
    return findings, truth


class TestHybridPrecision:
    def test_accept_all_keeps_baseline(self):
        findings, truth = _precision_fixture()
        kept = {finding_key(f) for f in findings}
        table = hybrid_precision(findings, kept, truth)
        assert table.after == table.before
        assert format_percent(table.before_total) == "72.53%"

    def test_discarding_labeled_fps_raises_total_precision(self):
        findings, truth = _precision_fixture()
        kept = {
            finding_key(f)
            for f in findings
            if truth[finding_key(f)] or f.category not in (FineCategory.WAC, FineCategory.WTC)
        }
        table = hybrid_precision(findings, kept, truth)
        assert table.before_total < table.after_total
        assert table.after_total >= Fraction(9, 10)
        assert table.after[FineCategory.WAC.value] == 1
        rendered = render_precision_table(table)
        assert "72.53%" in rendered
