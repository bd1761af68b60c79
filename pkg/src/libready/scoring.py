"""Dimension scores, overall score, and proficiency aggregation.

A snippet's five dimension scores combine judge verdicts (functional,
performance, reliability) with static metrics (maintainability from MI,
usability from the readability model). The overall score is their plain
arithmetic mean. Proficiency for a (library, scenario, model) cell pools
every selected, successfully judged snippet across prompts and
repetitions and reports the mean with a seeded percentile-bootstrap CI.

Judge-failed and generation-error records are excluded from pooling, not
zeroed: an infrastructure failure says nothing about code quality. The
exclusion counts surface in stage summaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .gateway import GenerationRecord
from .metrics import StaticMetrics
from .stats import bootstrap_ci

DIMENSIONS = ("functional", "performance", "maintainability", "usability", "reliability")


class ScoringError(Exception):
    pass


@dataclass
class QualityVector:
    functional: float
    performance: float
    maintainability: float
    usability: float
    reliability: float

    def __post_init__(self) -> None:
        for name in DIMENSIONS:
            value = getattr(self, name)
            if not 0.0 <= value <= 100.0:
                raise ScoringError(f"{name} score {value} outside [0, 100]")

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in DIMENSIONS}


@dataclass
class ScoredRecord:
    cache_key: str
    prompt_id: str
    library_id: str
    scenario_id: str
    task_id: str
    model: str
    rep_index: int
    strategy: str
    quality: QualityVector | None
    overall: float | None
    judge_failed: bool = False
    selected: bool = True

    def to_dict(self) -> dict:
        return {
            "cache_key": self.cache_key,
            "prompt_id": self.prompt_id,
            "library_id": self.library_id,
            "scenario_id": self.scenario_id,
            "task_id": self.task_id,
            "model": self.model,
            "rep_index": self.rep_index,
            "strategy": self.strategy,
            "quality": self.quality.as_dict() if self.quality else None,
            "overall": self.overall,
            "judge_failed": self.judge_failed,
            "selected": self.selected,
        }

    @staticmethod
    def from_dict(obj: dict) -> "ScoredRecord":
        quality = QualityVector(**obj["quality"]) if obj.get("quality") else None
        return ScoredRecord(
            cache_key=obj["cache_key"],
            prompt_id=obj["prompt_id"],
            library_id=obj["library_id"],
            scenario_id=obj["scenario_id"],
            task_id=obj["task_id"],
            model=obj["model"],
            rep_index=obj["rep_index"],
            strategy=obj["strategy"],
            quality=quality,
            overall=obj.get("overall"),
            judge_failed=bool(obj.get("judge_failed", False)),
            selected=bool(obj.get("selected", True)),
        )


@dataclass
class ProficiencyScore:
    library_id: str
    scenario_id: str
    model: str
    n: int
    mean: float
    ci_low: float
    ci_high: float


def dimension_scores(
    record: GenerationRecord,
    verdict_scores: dict[str, int] | None,
    static: StaticMetrics,
) -> QualityVector:
    """Five dimension scores for one generation record.

    `verdict_scores` holds the judge integers keyed by functional,
    time_complexity, space_complexity, reliability. An empty snippet
    scores zero on every dimension by decision.
    """
    if not record.extracted_code.strip():
        return QualityVector(0.0, 0.0, 0.0, 0.0, 0.0)
    if verdict_scores is None:
        raise ScoringError(
            f"record {record.cache_key} has no verdicts; judge-failed records "
            "must be excluded, not scored"
        )
    performance = (
        verdict_scores["time_complexity"] + verdict_scores["space_complexity"]
    ) / 2.0
    return QualityVector(
        functional=float(verdict_scores["functional"]),
        performance=performance,
        maintainability=static.mi,
        usability=static.readability,
        reliability=float(verdict_scores["reliability"]),
    )


def overall(quality: QualityVector, weights: dict[str, float] | None = None) -> float:
    """Arithmetic mean of the five dimension scores.

    Equal weights are the normative default; the optional mapping exists
    as a configuration hook for sensitivity studies only.
    """
    if weights is None:
        return sum(getattr(quality, name) for name in DIMENSIONS) / len(DIMENSIONS)
    if set(weights) != set(DIMENSIONS):
        raise ScoringError("weights must cover exactly the five dimensions")
    total = sum(weights.values())
    if total <= 0:
        raise ScoringError("weights must sum to a positive value")
    return sum(getattr(quality, name) * w for name, w in weights.items()) / total


def proficiency(
    records: Sequence[ScoredRecord],
    resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> ProficiencyScore:
    """Pooled proficiency for one (library, scenario, model) cell.

    The mean is the plain average of the pooled overall scores; the
    bootstrap only produces the CI.
    """
    usable = [r for r in records if r.selected and not r.judge_failed and r.overall is not None]
    if not usable:
        raise ScoringError("proficiency needs at least one scored record")

    cells = {(r.library_id, r.scenario_id, r.model) for r in usable}
    if len(cells) != 1:
        raise ScoringError(f"records span multiple cells: {sorted(cells)}")
    library_id, scenario_id, model = next(iter(cells))

    overalls = [r.overall for r in usable]
    boot = bootstrap_ci(overalls, resamples=resamples, level=level, seed=seed)
    return ProficiencyScore(
        library_id=library_id,
        scenario_id=scenario_id,
        model=model,
        n=len(overalls),
        mean=boot.mean,
        ci_low=boot.ci_low,
        ci_high=boot.ci_high,
    )


def regeneration_select(candidates: Sequence[ScoredRecord]) -> ScoredRecord:
    """Candidate with the highest overall; ties go to the lowest rep_index."""
    if not candidates:
        raise ScoringError("regeneration_select needs at least one candidate")
    best = candidates[0]
    for candidate in candidates[1:]:
        b = best.overall if best.overall is not None else float("-inf")
        c = candidate.overall if candidate.overall is not None else float("-inf")
        if c > b or (c == b and candidate.rep_index < best.rep_index):
            best = candidate
    return best


def select_regeneration_winners(scored: Sequence[ScoredRecord], k: int) -> None:
    """Mark regen winners in place.

    Candidates are grouped per prompt into consecutive blocks of k
    repetitions (rep_index // k); within each block only the best record
    keeps selected=True. Judge-failed candidates never win.
    """
    if k < 2:
        raise ScoringError("regeneration needs k >= 2")
    groups: dict[tuple[str, int], list[ScoredRecord]] = {}
    for record in scored:
        groups.setdefault((record.prompt_id, record.rep_index // k), []).append(record)
    for members in groups.values():
        for record in members:
            record.selected = False
        viable = [r for r in members if not r.judge_failed and r.overall is not None]
        if viable:
            regeneration_select(viable).selected = True
