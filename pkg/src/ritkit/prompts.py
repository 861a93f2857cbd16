"""Prompt assembly and model-response label extraction.

Prompts are built byte-deterministically from versioned text assets: a fixed
preamble, per-category definition blocks with zero, one or two embedded
examples, an output-format section and the ruleset under analysis.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

FINE_LABELS = ("WAC", "SAC", "WTC", "STC", "WCC", "SCC")
COARSE_LABELS = ("AC", "TC", "CC")

_SIX_FAMILIES = ("AC", "TC", "CC")
_FAMILY_MEMBERS = {"AC": ("WAC", "SAC"), "TC": ("WTC", "STC"), "CC": ("WCC", "SCC")}

# Three-class example slots borrow the weak then strong member example.
_THREE_EXAMPLES = {
    "AC": ("WAC_1", "SAC_1"),
    "TC": ("WTC_1", "STC_1"),
    "CC": ("SCC_1", "WCC_1"),
}

PROMPT_TAIL = (
    "Think about your answer before responding. Find the best analysis of the rules. "
    "The order of the rules does not matter.\n"
    "The rules that you must analyze are:\n"
)


@lru_cache(maxsize=None)
def _asset(*parts: str) -> str:
    root = resources.files("ritkit") / "prompt_assets"
    for part in parts:
        root = root / part
    return root.read_text(encoding="utf-8").rstrip("\n")


def prompt_asset_version() -> str:
    return _asset("VERSION")


@dataclass(frozen=True)
class PromptTemplate:
    shots: int = 0
    taxonomy: str = "six"  # "six" | "three"
    multi_response: bool = True

    def __post_init__(self) -> None:
        if self.shots not in (0, 1, 2):
            raise ValueError("shots must be 0, 1 or 2")
        if self.taxonomy not in ("six", "three"):
            raise ValueError("taxonomy must be 'six' or 'three'")

    @property
    def labels(self) -> tuple[str, ...]:
        return FINE_LABELS if self.taxonomy == "six" else COARSE_LABELS


def _example_block(names: tuple[str, ...], shots: int) -> str:
    parts = []
    for k in range(shots):
        title = "Example:" if k == 0 else f"Example {k + 1}:"
        parts.append(f"\n\n{title}\n{_asset('examples', f'{names[k]}.txt')}")
    return "".join(parts)


def _definitions(template: PromptTemplate) -> str:
    blocks = []
    for family in _SIX_FAMILIES:
        if template.taxonomy == "six":
            text = _asset("defs", f"six_{family}.txt")
            for member in _FAMILY_MEMBERS[family]:
                slot = f"[[{member}_EXAMPLES]]"
                text = text.replace(slot, _example_block((f"{member}_1", f"{member}_2"), template.shots))
        else:
            text = _asset("defs", f"three_{family}.txt")
            text = text.replace(f"[[{family}_EXAMPLES]]", _example_block(_THREE_EXAMPLES[family], template.shots))
        blocks.append(text)
    return "\n\n".join(blocks)


def _output_format(template: PromptTemplate) -> str:
    letters = "3" if template.taxonomy == "six" else "2"
    if template.multi_response:
        example = "WAC,STC" if template.taxonomy == "six" else "AC,TC"
        head = (
            f"Return only the {letters}-letter acronyms of detected threats, separated by commas "
            "if multiple exist. Do not give me an explanation or any reasoning."
        )
    else:
        example = "WAC" if template.taxonomy == "six" else "AC"
        head = (
            f"Return only the single {letters}-letter acronym of the most likely threat. "
            "Do not give me an explanation or any reasoning."
        )
    return (
        "OUTPUT FORMAT\n"
        f"{head}\n"
        f"Do not give me any other output besides the {letters} letter acronym.\n"
        f"Example: {example}"
    )


def build_prompt(template: PromptTemplate, ruleset_text: str) -> str:
    """Assemble the full classification prompt for one ruleset."""
    if not ruleset_text.strip():
        raise ValueError("ruleset text must be nonempty")
    return (
        f"{_asset('preamble.txt')}\n\n"
        "THREAT TYPES AND PATTERNS\n"
        f"{_definitions(template)}\n\n"
        f"{_output_format(template)}\n\n"
        f"{PROMPT_TAIL}"
        f"{ruleset_text}"
    )


# ---------------------------------------------------------------------------
# Response parsing

PARSE_FAILURE_BLANK = "blank"
PARSE_FAILURE_NO_LABEL = "no-valid-label"
PARSE_FAILURE_AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class ParseFailure:
    kind: str
    raw: str


_ACRONYM_RE = re.compile(r"[A-Za-z]{2,3}")


def parse_model_response(
    text: str, taxonomy: str = "six", multi_allowed: bool = True
) -> tuple[str, ...] | ParseFailure:
    """Extract RIT acronyms from a model response.

    Scans lines from the end so reasoning preambles are skipped; the last
    line containing any valid acronym wins. Case-insensitive; duplicates
    collapse while first-seen order is kept.
    """
    if not text.strip():
        return ParseFailure(PARSE_FAILURE_BLANK, text)
    valid = FINE_LABELS if taxonomy == "six" else COARSE_LABELS
    for line in reversed(text.splitlines()):
        labels: list[str] = []
        for token in _ACRONYM_RE.findall(line):
            upper = token.upper()
            if upper in valid and upper not in labels:
                labels.append(upper)
        if labels:
            if not multi_allowed and len(labels) > 1:
                return ParseFailure(PARSE_FAILURE_AMBIGUOUS, text)
            return tuple(labels)
    return ParseFailure(PARSE_FAILURE_NO_LABEL, text)
