"""ritkit: rule interaction threat analysis for trigger-action-condition rules.

A static analyzer, mutation-corpus generator, hybrid adjudication pipeline
and evaluation harness for openHAB-style .rules automation files.
"""

from .detector import (
    CoarseCategory,
    DetectorConfig,
    FineCategory,
    Finding,
    FindingReport,
    aggregate,
    detect_file,
    detect_pair,
)
from .ir import Rule, RuleSet
from .parser import parse_ruleset
from .report import parse_structured, render_structured, render_text
from .source import SourceFile

__version__ = "0.1.0"

__all__ = [
    "CoarseCategory",
    "DetectorConfig",
    "FineCategory",
    "Finding",
    "FindingReport",
    "Rule",
    "RuleSet",
    "SourceFile",
    "aggregate",
    "detect_file",
    "detect_pair",
    "parse_ruleset",
    "parse_structured",
    "render_structured",
    "render_text",
    "__version__",
]
