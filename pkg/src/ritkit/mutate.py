"""Grammar-aware mutation operators that inject one threat per mutant.

Each operator rewrites one eligible rule pair of a benign seed ruleset so the
detector finds exactly the targeted category on that pair. Rewrites happen on
the IR, are rendered back to source, and spliced into the seed text so the
mutant differs from the seed only within the selected pair.

Every emitted mutant is validated: it must re-parse cleanly, all new findings
must sit on the mutated pair, and the detector must recover the target
category. postUpdate cascade variants are expected to be missed under strict
event matching; such misses carry the `strict-event-matching` cause tag.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

from .detector import DetectorConfig, FineCategory, detect_file
from .ir import (
    Action,
    ActionKind,
    Condition,
    ConditionKind,
    GuardedAction,
    Rule,
    RuleSet,
    Trigger,
    TriggerKind,
    Value,
    ValueKind,
    make_value,
    number_value,
    rule_source,
)
from .parser import parse_ruleset
from .semantics import triggers_overlap, value_conflicts
from .source import SourceFile

OPERATOR_ORDER = (
    FineCategory.SAC,
    FineCategory.WAC,
    FineCategory.STC,
    FineCategory.WTC,
    FineCategory.SCC,
    FineCategory.WCC,
)

_AC_OPERATORS = {FineCategory.SAC, FineCategory.WAC}

DEFAULT_WINDOW = (8 * 60, 20 * 60)

MISS_STRICT_MATCHING = "strict-event-matching"
MISS_UNSUPPORTED = "unsupported-construct"


class MutationError(Exception):
    pass


@dataclass(frozen=True)
class Seed:
    path: str
    text: str
    ruleset: RuleSet

    @staticmethod
    def load(path: str | Path) -> "Seed":
        source = SourceFile.from_path(path)
        ruleset = parse_ruleset(source)
        if ruleset.errors():
            raise MutationError(f"seed {path} does not parse cleanly: {ruleset.errors()[0].message}")
        return Seed(str(path), source.content, ruleset)

    @staticmethod
    def from_text(text: str, path: str = "<seed>") -> "Seed":
        ruleset = parse_ruleset(SourceFile.from_text(text, path))
        if ruleset.errors():
            raise MutationError(f"seed {path} does not parse cleanly")
        return Seed(path, text, ruleset)


@dataclass(frozen=True)
class MutantRecord:
    mutant_id: str
    seed_file: str
    operator: str
    rule_a: str
    rule_b: str
    injected: dict[str, str]
    output_path: str
    miss_cause: str | None = None

    def to_json(self) -> dict:
        return {
            "mutant_id": self.mutant_id,
            "seed_file": self.seed_file,
            "operator": self.operator,
            "rule_a": self.rule_a,
            "rule_b": self.rule_b,
            "injected": self.injected,
            "output_path": self.output_path,
            "miss_cause": self.miss_cause,
        }

    @staticmethod
    def from_json(obj: dict) -> "MutantRecord":
        return MutantRecord(
            mutant_id=obj["mutant_id"],
            seed_file=obj["seed_file"],
            operator=obj["operator"],
            rule_a=obj["rule_a"],
            rule_b=obj["rule_b"],
            injected=dict(obj["injected"]),
            output_path=obj["output_path"],
            miss_cause=obj.get("miss_cause"),
        )


@dataclass
class MutantManifest:
    records: list[MutantRecord] = field(default_factory=list)

    def totals(self) -> dict[str, int]:
        out = {cat.value: 0 for cat in OPERATOR_ORDER}
        for rec in self.records:
            out[rec.operator] += 1
        return out

    def seed_inventory(self) -> list[str]:
        seen: dict[str, None] = {}
        for rec in self.records:
            seen.setdefault(rec.seed_file)
        return list(seen)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")

    @staticmethod
    def load(path: str | Path) -> "MutantManifest":
        records = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    records.append(MutantRecord.from_json(json.loads(line)))
        return MutantManifest(records)


# ---------------------------------------------------------------------------
# Vocabulary and value synthesis


def _pair_vocabulary(a: Rule, b: Rule) -> tuple[list[str], list[Value]]:
    items: dict[str, None] = {}
    values: dict[str, Value] = {}
    for rule in (a, b):
        for t in rule.triggers:
            if t.item:
                items.setdefault(t.item)
            for v in (t.from_value, t.to_value, t.command_value, t.value):
                if v is not None:
                    values.setdefault(f"{v.kind.value}:{v.text}", v)
        for c in rule.all_conditions():
            if c.item:
                items.setdefault(c.item)
            if c.value is not None:
                values.setdefault(f"{c.value.kind.value}:{c.value.text}", c.value)
        for ga in rule.guarded_actions:
            items.setdefault(ga.action.item)
            v = ga.action.value
            values.setdefault(f"{v.kind.value}:{v.text}", v)
    return list(items), list(values.values())


def conflicting_value(value: Value, vocabulary: Iterable[Value] = ()) -> Value:
    """A value that conflicts with `value`, preferring the pair's own terms."""
    if value.kind is ValueKind.SWITCH:
        return make_value("OFF" if value.text == "ON" else "ON")
    if value.kind is ValueKind.OPEN_CLOSED:
        return make_value("CLOSED" if value.text == "OPEN" else "OPEN")
    if value.kind is ValueKind.UP_DOWN:
        return make_value("DOWN" if value.text == "UP" else "UP")
    for cand in vocabulary:
        if cand.kind is value.kind and value_conflicts(cand, value):
            return cand
    if value.kind is ValueKind.NUMBER:
        return number_value(value.number + 1)
    return make_value(f"{value.text}_alt")


def _enabler_value(cond: Condition, vocabulary: Iterable[Value]) -> Value | None:
    """A value that satisfies `item op value` by substitution, or None."""
    op, val = cond.op, cond.value
    if op in ("==", ">=", "<="):
        return val
    if op == "!=":
        return conflicting_value(val, vocabulary)
    if val.kind is not ValueKind.NUMBER:
        return None
    if op == ">":
        return number_value(val.number + 1)
    if op == "<":
        return number_value(val.number - 1)
    return None


def _fresh_item(base: str, taken: set[str]) -> str:
    name = base
    n = 1
    while name in taken:
        n += 1
        name = f"{base}_{n}"
    return name


def _all_item_names(rs: RuleSet) -> set[str]:
    names: set[str] = set()
    for rule in rs.rules:
        for t in rule.triggers:
            if t.item:
                names.add(t.item)
        for c in rule.all_conditions():
            if c.item:
                names.add(c.item)
        for ga in rule.guarded_actions:
            names.add(ga.action.item)
    return names


# ---------------------------------------------------------------------------
# Transforms. Each returns (new_a, new_b, injected-evidence) or raises.


def _strip_conditions(rule: Rule) -> Rule:
    return replace(
        rule,
        conditions=(),
        guarded_actions=tuple(GuardedAction(ga.action, ()) for ga in rule.guarded_actions),
    )


def _any_trigger_overlap(a: Rule, b: Rule) -> bool:
    return any(triggers_overlap(ta, tb).overlap for ta in a.triggers for tb in b.triggers)


def _align_triggers(a: Rule, b: Rule) -> Rule:
    """Give b a trigger provably overlapping a's when none overlaps."""
    if _any_trigger_overlap(a, b):
        return b
    return replace(b, triggers=(a.triggers[0],))


def _set_first_action(rule: Rule, action: Action, guards: tuple[Condition, ...]) -> Rule:
    gas = list(rule.guarded_actions)
    target = GuardedAction(action, guards)
    if gas:
        gas[0] = target
    else:
        gas.append(target)
    return replace(rule, guarded_actions=tuple(gas))


def _new_condition(item: str, op: str, value: Value) -> Condition:
    return Condition("c0", ConditionKind.ITEM_COMPARISON, item=item, op=op, value=value)


def _new_action(kind: ActionKind, item: str, value: Value) -> Action:
    return Action("a0", kind, item, value)


@dataclass(frozen=True)
class TransformContext:
    ruleset: RuleSet
    fresh: bool

    def guard_item(self, a: Rule, b: Rule, avoid: set[str]) -> str:
        """An item to hang an injected guard on."""
        if not self.fresh:
            items, _ = _pair_vocabulary(a, b)
            for item in items:
                if item not in avoid:
                    return item
        return _fresh_item("mut_guard_proxy", _all_item_names(self.ruleset) | avoid)

    def cascade_item(self, current: str) -> str:
        if not self.fresh:
            return current
        return _fresh_item(f"{current}_mut", _all_item_names(self.ruleset))


def transform_sac(ctx: TransformContext, a: Rule, b: Rule) -> tuple[Rule, Rule, dict]:
    x = a.guarded_actions[0].action
    item = ctx.cascade_item(x.item)
    _, vocab = _pair_vocabulary(a, b)
    counter = conflicting_value(x.value, vocab)
    new_a = _strip_conditions(a)
    if item != x.item:
        new_a = _set_first_action(new_a, _new_action(x.kind, item, x.value), ())
    new_b = _strip_conditions(b)
    new_b = _set_first_action(new_b, _new_action(ActionKind.SEND_COMMAND, item, counter), ())
    new_b = _align_triggers(new_a, new_b)
    injected = {"item": item, "value_a": x.value.text, "value_b": counter.text}
    return new_a, new_b, injected


def transform_wac(ctx: TransformContext, a: Rule, b: Rule) -> tuple[Rule, Rule, dict]:
    x = a.guarded_actions[0].action
    item = ctx.cascade_item(x.item)
    _, vocab = _pair_vocabulary(a, b)
    counter = conflicting_value(x.value, vocab)
    guard_items = {c.item for ga in a.guarded_actions for c in ga.guards if c.item}
    guard_items |= {c.item for c in a.conditions if c.item}
    guard = _new_condition(ctx.guard_item(a, b, avoid={item} | guard_items), "==", make_value("ON"))
    new_a = a
    if item != x.item:
        new_a = _set_first_action(a, _new_action(x.kind, item, x.value), a.guarded_actions[0].guards)
    new_b = _set_first_action(b, _new_action(ActionKind.SEND_COMMAND, item, counter), (guard,))
    new_b = _align_triggers(new_a, new_b)
    injected = {
        "item": item,
        "value_a": x.value.text,
        "value_b": counter.text,
        "condition_added": f"{guard.item} == ON",
    }
    return new_a, new_b, injected


def _cascade_pieces(
    ctx: TransformContext, a: Rule, post_update: bool
) -> tuple[Rule, Action, Trigger]:
    x = a.guarded_actions[0].action
    item = ctx.cascade_item(x.item)
    kind = ActionKind.POST_UPDATE if post_update else ActionKind.SEND_COMMAND
    action = _new_action(kind, item, x.value)
    if post_update:
        # The command-channel trigger is what strict matching rejects.
        trigger = Trigger("t0", TriggerKind.ITEM_COMMAND, item=item, command_value=x.value)
    else:
        trigger = Trigger("t0", TriggerKind.ITEM_CHANGED, item=item, to_value=x.value)
    return replace(a), action, trigger


def transform_stc(ctx: TransformContext, a: Rule, b: Rule, post_update: bool = False) -> tuple[Rule, Rule, dict]:
    new_a, action, trigger = _cascade_pieces(ctx, a, post_update)
    if not post_update:
        trigger = Trigger("t0", TriggerKind.ITEM_COMMAND, item=action.item, command_value=action.value)
    new_a = _strip_conditions(_set_first_action(new_a, action, ()))
    new_b = _strip_conditions(replace(b, triggers=(trigger,)))
    injected = {
        "item": action.item,
        "value": action.value.text,
        "cascade": "postUpdate" if post_update else "sendCommand",
    }
    return new_a, new_b, injected


def transform_wtc(ctx: TransformContext, a: Rule, b: Rule, post_update: bool = False) -> tuple[Rule, Rule, dict]:
    new_a, action, trigger = _cascade_pieces(ctx, a, post_update)
    guards_x = new_a.conditions + new_a.guarded_actions[0].guards
    window = next((c.window for c in guards_x if c.kind is ConditionKind.TIME_WINDOW), DEFAULT_WINDOW)
    tw = Condition("c0", ConditionKind.TIME_WINDOW, window=window)
    new_a = _set_first_action(new_a, action, new_a.guarded_actions[0].guards)
    new_b = replace(b, triggers=(trigger,))
    if new_b.guarded_actions:
        new_b = replace(
            new_b,
            guarded_actions=tuple(GuardedAction(ga.action, ga.guards + (tw,)) for ga in new_b.guarded_actions),
        )
    else:
        new_b = replace(new_b, conditions=new_b.conditions + (tw,))
    injected = {
        "item": action.item,
        "value": action.value.text,
        "cascade": "postUpdate" if post_update else "sendCommand",
        "condition_added": f"time window {window[0] // 60:02d}:{window[0] % 60:02d}-{window[1] // 60:02d}:{window[1] % 60:02d}",
    }
    return new_a, new_b, injected


def _pick_enablable_guard(ctx: TransformContext, a: Rule, b: Rule, y: GuardedAction) -> tuple[Condition, Value]:
    _, vocab = _pair_vocabulary(a, b)
    for cond in y.guards:
        if cond.kind is ConditionKind.ITEM_COMPARISON:
            item = ctx.cascade_item(cond.item)
            cond = replace(cond, item=item) if item != cond.item else cond
            value = _enabler_value(cond, vocab)
            if value is not None:
                return cond, value
            return replace(cond, op="=="), cond.value
    item = ctx.guard_item(a, b, avoid=set())
    cond = _new_condition(item, "==", make_value("ON"))
    return cond, cond.value


def _ensure_rule_a_condition(ctx: TransformContext, a: Rule, enabler: GuardedAction, avoid: set[str]) -> GuardedAction:
    """CC requires a condition on rule A; guard the injected enabler if needed."""
    if a.all_conditions():
        return enabler
    item = ctx.guard_item(a, a, avoid=avoid)
    return GuardedAction(enabler.action, (_new_condition(item, "==", make_value("ON")),))


def _first_guarded_index(rule: Rule) -> int:
    for i, ga in enumerate(rule.guarded_actions):
        if ga.guards:
            return i
    raise MutationError("no guarded action on rule B")


def transform_scc(ctx: TransformContext, a: Rule, b: Rule) -> tuple[Rule, Rule, dict]:
    yi = _first_guarded_index(b)
    y = b.guarded_actions[yi]
    cond, value = _pick_enablable_guard(ctx, a, b, y)
    gas = list(b.guarded_actions)
    gas[yi] = GuardedAction(y.action, (cond,))
    new_b = replace(b, conditions=(), guarded_actions=tuple(gas))
    enabler = GuardedAction(_new_action(ActionKind.SEND_COMMAND, cond.item, value), ())
    enabler = _ensure_rule_a_condition(ctx, a, enabler, avoid={cond.item})
    new_a = replace(a, guarded_actions=a.guarded_actions + (enabler,))
    new_b = _align_triggers(new_a, new_b)
    injected = {
        "item": cond.item,
        "value": value.text,
        "condition": f"{cond.item} {cond.op} {cond.value.text}",
    }
    return new_a, new_b, injected


def transform_wcc(ctx: TransformContext, a: Rule, b: Rule) -> tuple[Rule, Rule, dict]:
    yi = _first_guarded_index(b)
    y = b.guarded_actions[yi]
    cond, value = _pick_enablable_guard(ctx, a, b, y)
    blocker = Condition("c0", ConditionKind.TIME_WINDOW, window=DEFAULT_WINDOW)
    gas = list(b.guarded_actions)
    gas[yi] = GuardedAction(y.action, (cond, blocker))
    new_b = replace(b, guarded_actions=tuple(gas))
    enabler = GuardedAction(_new_action(ActionKind.SEND_COMMAND, cond.item, value), ())
    enabler = _ensure_rule_a_condition(ctx, a, enabler, avoid={cond.item})
    new_a = replace(a, guarded_actions=a.guarded_actions + (enabler,))
    new_b = _align_triggers(new_a, new_b)
    injected = {
        "item": cond.item,
        "value": value.text,
        "condition": f"{cond.item} {cond.op} {cond.value.text}",
        "blocker": "time window",
    }
    return new_a, new_b, injected


# ---------------------------------------------------------------------------
# Operators


@dataclass(frozen=True)
class MutationOperator:
    target: FineCategory
    ordered_pairs: bool
    precondition: Callable[[Rule, Rule], bool]
    transform: Callable[[TransformContext, Rule, Rule], tuple[Rule, Rule, dict]]


def _has_action(rule: Rule) -> bool:
    return bool(rule.guarded_actions)


def _has_guarded_action(rule: Rule) -> bool:
    return any(ga.guards for ga in rule.guarded_actions)


OPERATORS: dict[FineCategory, MutationOperator] = {
    FineCategory.SAC: MutationOperator(
        FineCategory.SAC, False, lambda a, b: _has_action(a) and _has_action(b), transform_sac
    ),
    FineCategory.WAC: MutationOperator(
        FineCategory.WAC, False, lambda a, b: _has_action(a) and _has_action(b), transform_wac
    ),
    FineCategory.STC: MutationOperator(
        FineCategory.STC, True, lambda a, b: _has_action(a), transform_stc
    ),
    FineCategory.WTC: MutationOperator(
        FineCategory.WTC, True, lambda a, b: _has_action(a), transform_wtc
    ),
    FineCategory.SCC: MutationOperator(
        FineCategory.SCC, True, lambda a, b: _has_guarded_action(b), transform_scc
    ),
    FineCategory.WCC: MutationOperator(
        FineCategory.WCC, True, lambda a, b: _has_guarded_action(b), transform_wcc
    ),
}


def enumerate_eligible_pairs(ruleset: RuleSet, operator: MutationOperator) -> list[tuple[str, str]]:
    """Rule-id pairs the operator can rewrite, in deterministic order."""
    rules = ruleset.rules
    pairs: list[tuple[str, str]] = []
    for i, a in enumerate(rules):
        for j, b in enumerate(rules):
            if i == j or (not operator.ordered_pairs and i > j):
                continue
            if operator.precondition(a, b):
                pairs.append((a.id, b.id))
    return pairs


# ---------------------------------------------------------------------------
# Application and validation


def _char_offset(source: SourceFile, line: int, col: int) -> int:
    return source.line_offsets[line - 1] + col - 1


def _splice(seed: Seed, replacements: dict[str, Rule]) -> str:
    source = SourceFile.from_text(seed.text, seed.path)
    spans = []
    for rule in seed.ruleset.rules:
        if rule.id in replacements:
            start = _char_offset(source, rule.loc.start_line, rule.loc.start_col)
            end = _char_offset(source, rule.loc.end_line, rule.loc.end_col)
            spans.append((start, end, rule_source(replacements[rule.id])))
    text = seed.text
    for start, end, rendered in sorted(spans, reverse=True):
        text = text[:start] + rendered + text[end:]
    return text


def _pair_findings(report, rule_a: str, rule_b: str):
    wanted = {rule_a, rule_b}
    return [f for f in report.findings if {f.rule_a.id, f.rule_b.id} == wanted]


def _validate(
    seed: Seed,
    mutant_text: str,
    pair: tuple[str, str],
    target: FineCategory,
    expect_strict_miss: bool,
) -> str | None:
    """Returns the miss cause tag (or None); raises MutationError when invalid."""
    mutant_rs = parse_ruleset(SourceFile.from_text(mutant_text, seed.path))
    if mutant_rs.errors():
        raise MutationError(f"mutant does not parse: {mutant_rs.errors()[0].message}")
    if len(mutant_rs.rules) != len(seed.ruleset.rules):
        raise MutationError("mutant changed the number of rules")

    seed_keys = {_finding_identity(f) for f in detect_file(seed.ruleset).findings}
    strict_report = detect_file(mutant_rs, DetectorConfig(strict_event_matching=True))
    for f in strict_report.findings:
        if _finding_identity(f) not in seed_keys and {f.rule_a.id, f.rule_b.id} != set(pair):
            raise MutationError(
                f"injection leaked outside the pair: {f.category.value} on ({f.rule_a.id}, {f.rule_b.id})"
            )

    strict_cats = {f.category for f in _pair_findings(strict_report, *pair)}
    if target in strict_cats:
        if expect_strict_miss:
            raise MutationError("postUpdate variant was unexpectedly recovered under strict matching")
        return None
    lenient_report = detect_file(mutant_rs, DetectorConfig(strict_event_matching=False))
    lenient_cats = {f.category for f in _pair_findings(lenient_report, *pair)}
    if target in lenient_cats:
        return MISS_STRICT_MATCHING
    raise MutationError(f"detector does not recover {target.value} on the mutated pair")


def _finding_identity(f) -> tuple:
    return (f.category.value, f.rule_a.id, f.rule_b.id, f.threat_pair)


def apply_operator(
    seed: Seed,
    pair: tuple[str, str],
    operator: MutationOperator,
    post_update_variant: bool = False,
    mutant_id: str | None = None,
    output_path: str = "",
) -> tuple[str, MutantRecord]:
    """Rewrite one pair; returns mutant source text plus its record."""
    if pair not in enumerate_eligible_pairs(seed.ruleset, operator):
        raise MutationError(f"pair {pair} is not eligible for {operator.target.value}")
    by_id = {r.id: r for r in seed.ruleset.rules}
    a, b = by_id[pair[0]], by_id[pair[1]]
    post_update = post_update_variant and operator.target in (FineCategory.STC, FineCategory.WTC)

    last_error: MutationError | None = None
    for fresh in (False, True):
        ctx = TransformContext(seed.ruleset, fresh)
        try:
            if operator.target in (FineCategory.STC, FineCategory.WTC):
                new_a, new_b, injected = operator.transform(ctx, a, b, post_update)
            else:
                new_a, new_b, injected = operator.transform(ctx, a, b)
            mutant_text = _splice(seed, {a.id: new_a, b.id: new_b})
            miss = _validate(seed, mutant_text, pair, operator.target, expect_strict_miss=post_update)
        except MutationError as exc:
            last_error = exc
            continue
        record = MutantRecord(
            mutant_id=mutant_id or f"{Path(seed.path).stem}__{operator.target.value}__{pair[0]}-{pair[1]}",
            seed_file=seed.path,
            operator=operator.target.value,
            rule_a=pair[0],
            rule_b=pair[1],
            injected={k: str(v) for k, v in injected.items()},
            output_path=output_path,
            miss_cause=miss,
        )
        return mutant_text, record
    raise MutationError(f"transform inapplicable for {operator.target.value} on {pair}: {last_error}")


# ---------------------------------------------------------------------------
# Corpus generation


@dataclass(frozen=True)
class Exhaustive:
    pass


@dataclass(frozen=True)
class Sample:
    n: int
    rng_seed: int


def _enumerate_jobs(
    seeds: list[Seed], operators: Iterable[FineCategory]
) -> list[tuple[Seed, MutationOperator, tuple[str, str]]]:
    jobs = []
    for seed in seeds:
        for cat in operators:
            op = OPERATORS[cat]
            for pair in enumerate_eligible_pairs(seed.ruleset, op):
                jobs.append((seed, op, pair))
    return jobs


def generate_corpus(
    seeds: list[Seed],
    strategy: Exhaustive | Sample,
    out_dir: str | Path,
    operators: Iterable[FineCategory] = OPERATOR_ORDER,
    post_update_cascades: bool = False,
) -> MutantManifest:
    """Write mutant files plus a line-delimited manifest; returns the manifest."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise MutationError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise MutationError(f"output directory is not writable: {out}")

    jobs = _enumerate_jobs(seeds, operators)
    if isinstance(strategy, Sample):
        if strategy.n > len(jobs):
            raise MutationError(f"sample size {strategy.n} exceeds {len(jobs)} eligible combinations")
        rng = random.Random(strategy.rng_seed)
        jobs = rng.sample(jobs, strategy.n)

    manifest = MutantManifest()
    for k, (seed, op, pair) in enumerate(jobs, start=1):
        suffix = "__pu" if post_update_cascades and op.target in (FineCategory.STC, FineCategory.WTC) else ""
        mutant_id = f"m{k:04d}__{Path(seed.path).stem}__{op.target.value}__{pair[0]}-{pair[1]}{suffix}"
        path = out / f"{mutant_id}.rules"
        text, record = apply_operator(
            seed,
            pair,
            op,
            post_update_variant=post_update_cascades,
            mutant_id=mutant_id,
            output_path=str(path),
        )
        path.write_text(text, encoding="utf-8")
        manifest.records.append(record)
    manifest.save(out / "manifest.jsonl")
    return manifest


def bundled_seed_paths() -> list[Path]:
    """The benign seed rulesets shipped with the package."""
    seeds_dir = Path(__file__).parent / "seeds"
    return sorted(seeds_dir.glob("*.rules"))
