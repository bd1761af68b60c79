"""Comparisons and failure analysis over scored records.

Competing-pair effect sizes, per-model winner distributions, winner flip
rates across models, popularity concordance, IQR low-quality selection,
and failure-pattern flagging (static P1/P7 plus judge-assisted P1-P8
classification).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import stats
from .catalog import CompetingPair
from .gateway import Gateway, judge_labels
from .metrics import StaticMetrics
from .scoring import ProficiencyScore, ScoredRecord

TIE = "tie"

FAILURE_PATTERNS = {
    "P1": "syntax error",
    "P2": "incorrect library usage",
    "P3": "incorrect functionality",
    "P4": "missing edge handling",
    "P5": "inefficient implementation",
    "P6": "missing comments",
    "P7": "import issues",
    "P8": "others",
}


class AnalysisError(Exception):
    pass


@dataclass(frozen=True)
class FailureFlag:
    label: str
    source: str  # static | judged
    evidence: str = ""

    def __post_init__(self) -> None:
        if self.label not in FAILURE_PATTERNS:
            raise AnalysisError(f"unknown failure label {self.label!r}")
        if self.source not in ("static", "judged"):
            raise AnalysisError(f"unknown flag source {self.source!r}")


@dataclass
class PairComparison:
    scenario_id: str
    lib_a: str
    lib_b: str
    model: str
    mean_a: float
    mean_b: float
    d: float
    significant: bool
    degenerate: bool
    winner: str  # library id or "tie"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class WinnerDistribution:
    counts: dict[str, int] = field(default_factory=dict)
    tie_libraries: list[str] = field(default_factory=list)
    libraries: int = 0


@dataclass
class FlipRate:
    pairs_total: int
    pairs_considered: int
    flipped: int
    rate: float
    excluded: int


@dataclass
class PairPopularity:
    """One competing pair with its popularity and proficiency signals."""

    scenario_id: str
    lib_a: str
    lib_b: str
    stars_a: int | None
    stars_b: int | None
    prof_a: float
    prof_b: float


@dataclass
class ConcordanceResult:
    eligible: int
    concordant: int
    rate: float
    p_value: float
    excluded_missing_stars: int
    excluded_equal_stars: int


def compare_pair(
    scores_a: Sequence[float],
    scores_b: Sequence[float],
    pair: CompetingPair,
    model: str,
) -> PairComparison:
    """Cohen's d verdict between the two sides of a competing pair.

    The winner follows the higher mean regardless of significance.
    Samples too small for a pooled variance come back degenerate.
    """
    if not scores_a or not scores_b:
        raise AnalysisError("compare_pair needs scores on both sides")

    mean_a = sum(scores_a) / len(scores_a)
    mean_b = sum(scores_b) / len(scores_b)

    if len(scores_a) >= 2 and len(scores_b) >= 2:
        effect = stats.cohens_d(scores_a, scores_b)
        d, significant, degenerate = effect.d, effect.significant, effect.degenerate
    else:
        d, significant, degenerate = 0.0, False, True

    if mean_a > mean_b:
        winner = pair.lib_a
    elif mean_b > mean_a:
        winner = pair.lib_b
    else:
        winner = TIE

    return PairComparison(
        scenario_id=pair.scenario_id,
        lib_a=pair.lib_a,
        lib_b=pair.lib_b,
        model=model,
        mean_a=mean_a,
        mean_b=mean_b,
        d=d,
        significant=significant and not degenerate,
        degenerate=degenerate,
        winner=winner,
    )


def _pooled_by_library(proficiencies: Sequence[ProficiencyScore]) -> dict[str, dict[str, float]]:
    """library -> model -> n-weighted mean across its scenarios."""
    sums: dict[str, dict[str, list[float]]] = {}
    for p in proficiencies:
        per_model = sums.setdefault(p.library_id, {})
        acc = per_model.setdefault(p.model, [0.0, 0.0])
        acc[0] += p.mean * p.n
        acc[1] += p.n
    return {
        lib: {model: total / n for model, (total, n) in per_model.items()}
        for lib, per_model in sums.items()
    }


def winner_distribution(proficiencies: Sequence[ProficiencyScore]) -> WinnerDistribution:
    """Per model, how many libraries score their best proficiency on it.

    Exact ties credit every tied model and the library is reported in
    tie_libraries, so counts sum to the library count only when no
    library ties.
    """
    if not proficiencies:
        raise AnalysisError("winner_distribution needs proficiency scores")

    by_library = _pooled_by_library(proficiencies)
    dist = WinnerDistribution(libraries=len(by_library))
    for library in sorted(by_library):
        per_model = by_library[library]
        best = max(per_model.values())
        winners = sorted(m for m, v in per_model.items() if v == best)
        for model in winners:
            dist.counts[model] = dist.counts.get(model, 0) + 1
        if len(winners) > 1:
            dist.tie_libraries.append(library)
    return dist


def winner_flip_rate(comparisons: Sequence[PairComparison]) -> FlipRate:
    """Fraction of pairs whose definite winner changes across models.

    Tie verdicts never determine a flip; a pair with fewer than two
    definite winner verdicts drops out of the denominator.
    """
    groups: dict[tuple[str, str, str], list[str]] = {}
    for comp in comparisons:
        key = (comp.scenario_id, comp.lib_a, comp.lib_b)
        groups.setdefault(key, [])
        if comp.winner != TIE:
            groups[key].append(comp.winner)

    total = len(groups)
    considered = {key: winners for key, winners in groups.items() if len(winners) >= 2}
    flipped = sum(1 for winners in considered.values() if len(set(winners)) > 1)
    rate = flipped / len(considered) if considered else 0.0
    return FlipRate(
        pairs_total=total,
        pairs_considered=len(considered),
        flipped=flipped,
        rate=rate,
        excluded=total - len(considered),
    )


def concordance_with_popularity(entries: Sequence[PairPopularity]) -> ConcordanceResult:
    """How often the more-starred library is also the proficiency leader.

    Pairs with a missing or equal star count are excluded; an exact
    proficiency tie counts as discordant. Significance comes from the
    exact two-sided binomial test against p0 = 0.5.
    """
    missing = sum(1 for e in entries if e.stars_a is None or e.stars_b is None)
    equal = sum(
        1
        for e in entries
        if e.stars_a is not None and e.stars_b is not None and e.stars_a == e.stars_b
    )
    eligible = [
        e
        for e in entries
        if e.stars_a is not None and e.stars_b is not None and e.stars_a != e.stars_b
    ]
    if not eligible:
        raise AnalysisError("no pairs with usable star counts")

    concordant = 0
    for e in eligible:
        star_leader = e.lib_a if e.stars_a > e.stars_b else e.lib_b
        if e.prof_a > e.prof_b:
            prof_leader = e.lib_a
        elif e.prof_b > e.prof_a:
            prof_leader = e.lib_b
        else:
            prof_leader = None
        if prof_leader == star_leader:
            concordant += 1

    return ConcordanceResult(
        eligible=len(eligible),
        concordant=concordant,
        rate=concordant / len(eligible),
        p_value=stats.binomial_exact_two_sided(concordant, len(eligible)),
        excluded_missing_stars=missing,
        excluded_equal_stars=equal,
    )


@dataclass
class LowQualityResult:
    partition: stats.OutlierPartition
    flagged: list[ScoredRecord]


def low_quality_set(records: Sequence[ScoredRecord]) -> LowQualityResult:
    """Records whose overall score falls below Q1 - 1.5 * IQR."""
    usable = [r for r in records if r.selected and not r.judge_failed and r.overall is not None]
    if len(usable) < 4:
        raise AnalysisError("low_quality_set needs at least four scored records")
    partition = stats.iqr_low_outliers([r.overall for r in usable])
    flagged = [usable[i] for i in partition.flagged]
    return LowQualityResult(partition=partition, flagged=flagged)


def flag_static_failures(static: StaticMetrics) -> set[FailureFlag]:
    """P1 for broken syntax, P7 for unused or missing imports.

    Depends only on the snippet text, never on judge output.
    """
    flags: set[FailureFlag] = set()
    if not static.syntax_ok:
        message = static.syntax_issue.message if static.syntax_issue else "syntax error"
        line = static.syntax_issue.line if static.syntax_issue else 0
        flags.add(FailureFlag(label="P1", source="static", evidence=f"line {line}: {message}"))
    issues = []
    if static.unused_imports:
        issues.append("unused imports: " + ", ".join(sorted(static.unused_imports)))
    if static.missing_imports:
        issues.append("missing imports: " + ", ".join(sorted(static.missing_imports)))
    if issues:
        flags.add(FailureFlag(label="P7", source="static", evidence="; ".join(issues)))
    return flags


def classify_failures_judged(
    gw: Gateway,
    snippet: str,
    task_text: str,
    static_flags: set[FailureFlag] | None = None,
) -> set[FailureFlag]:
    """Judge-assisted multi-label P1..P8 classification.

    Static flags are merged in and win on label conflicts (a judged P1
    never replaces a static P1).
    """
    static_flags = static_flags or set()
    static_labels = {f.label for f in static_flags}
    labels, rationale = judge_labels(gw, snippet, task_text)
    merged = set(static_flags)
    for label in labels:
        if label not in static_labels:
            merged.add(FailureFlag(label=label, source="judged", evidence=rationale))
    return merged


def count_flags_by_model(
    flags_by_record: Mapping[str, set[FailureFlag]],
    model_by_record: Mapping[str, str],
) -> dict[str, dict[str, int]]:
    """model -> label -> count, each label counted once per record."""
    counts: dict[str, dict[str, int]] = {}
    for record_key, flags in flags_by_record.items():
        model = model_by_record[record_key]
        per_model = counts.setdefault(model, {})
        for label in {f.label for f in flags}:
            per_model[label] = per_model.get(label, 0) + 1
    return counts
