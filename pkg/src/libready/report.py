"""Report emission: proficiency tables, radar data, pair and failure reports.

Every emitter is a deterministic function of its inputs, so rerunning a
seeded pipeline reproduces each artifact byte for byte. Markdown output
is always generated from the structured file's data, never computed
independently, and percentages render with two decimals, round half up.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Mapping, Sequence

from .analysis import FAILURE_PATTERNS, FlipRate, PairComparison
from .config import SCHEMA_VERSION
from .scoring import DIMENSIONS, ProficiencyScore


class ReportError(Exception):
    pass


def percent(numerator: float, denominator: float) -> str:
    """Percentage with two decimals, round half up ("11.17" for 21/188)."""
    if denominator == 0:
        return "0.00"
    value = Decimal(numerator) / Decimal(denominator) * Decimal(100)
    return str(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def write_json(path: str | Path, payload: dict) -> Path:
    """Canonical JSON emission: sorted keys, two-space indent, LF."""
    return _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


@dataclass
class RunManifest:
    run_id: str
    catalog_version: str
    config_hash: str
    models: list[str]
    judge_model: str | None
    rubric_version: str
    seed: int
    created_at: str
    schema: int = SCHEMA_VERSION
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "run_id": self.run_id,
            "catalog_version": self.catalog_version,
            "config_hash": self.config_hash,
            "models": list(self.models),
            "judge_model": self.judge_model,
            "rubric_version": self.rubric_version,
            "seed": self.seed,
            "created_at": self.created_at,
            "extra": self.extra,
        }


def write_manifest(manifest: RunManifest, path: str | Path) -> Path:
    return write_json(path, manifest.to_dict())


def emit_proficiency_table(
    proficiencies: Sequence[ProficiencyScore], path: str | Path, fmt: str = "csv"
) -> Path:
    """Proficiency rows sorted by (library, scenario, model).

    csv gives a plain UTF-8 comma-separated table with a header row and
    LF endings; structured gives the same rows as JSON.
    """
    if not proficiencies:
        raise ReportError("no proficiency scores to emit")

    rows = sorted(proficiencies, key=lambda p: (p.library_id, p.scenario_id, p.model))
    if fmt == "csv":
        lines = ["library,scenario,model,n,mean,ci_low,ci_high"]
        for p in rows:
            lines.append(
                f"{p.library_id},{p.scenario_id},{p.model},{p.n},"
                f"{p.mean:.6f},{p.ci_low:.6f},{p.ci_high:.6f}"
            )
        return _write_text(path, "\n".join(lines) + "\n")
    if fmt == "structured":
        payload = {
            "schema": SCHEMA_VERSION,
            "rows": [
                {
                    "library": p.library_id,
                    "scenario": p.scenario_id,
                    "model": p.model,
                    "n": p.n,
                    "mean": p.mean,
                    "ci_low": p.ci_low,
                    "ci_high": p.ci_high,
                }
                for p in rows
            ],
        }
        return write_json(path, payload)
    raise ReportError(f"unknown format {fmt!r}")


def emit_radar_data(
    dimension_means: Mapping[str, Mapping[str, float]], path: str | Path
) -> Path:
    """Per-model five-axis records, model-id sorted, plot-ready."""
    records = []
    for model in sorted(dimension_means):
        means = dimension_means[model]
        missing = [d for d in DIMENSIONS if d not in means]
        if missing:
            raise ReportError(f"model {model!r} is missing dimensions: {missing}")
        records.append({"model": model, "axes": {d: means[d] for d in DIMENSIONS}})
    return write_json(path, {"schema": SCHEMA_VERSION, "dimensions": list(DIMENSIONS), "models": records})


def _pair_report_payload(
    comparisons: Sequence[PairComparison], flip: FlipRate
) -> dict:
    per_model: dict[str, dict] = {}
    for comp in comparisons:
        bucket = per_model.setdefault(
            comp.model, {"pairs": 0, "significant": 0, "degenerate": 0}
        )
        bucket["pairs"] += 1
        if comp.significant:
            bucket["significant"] += 1
        if comp.degenerate:
            bucket["degenerate"] += 1
    for bucket in per_model.values():
        bucket["significant_ratio_pct"] = percent(bucket["significant"], bucket["pairs"])

    total_pairs = len(comparisons)
    total_significant = sum(1 for c in comparisons if c.significant)
    return {
        "schema": SCHEMA_VERSION,
        "per_model": {m: per_model[m] for m in sorted(per_model)},
        "total": {
            "pairs": total_pairs,
            "significant": total_significant,
            "significant_ratio_pct": percent(total_significant, total_pairs),
        },
        "flip_rate": {
            "pairs_total": flip.pairs_total,
            "pairs_considered": flip.pairs_considered,
            "flipped": flip.flipped,
            "rate": flip.rate,
            "excluded": flip.excluded,
        },
        "comparisons": [c.to_dict() for c in comparisons],
    }


def _pair_report_markdown(payload: dict) -> str:
    lines = [
        "# Competing-pair comparisons",
        "",
        "| Model | Pairs | Significant | Ratio (%) |",
        "| --- | ---: | ---: | ---: |",
    ]
    for model, bucket in payload["per_model"].items():
        lines.append(
            f"| {model} | {bucket['pairs']} | {bucket['significant']} | "
            f"{bucket['significant_ratio_pct']} |"
        )
    total = payload["total"]
    lines.append(
        f"| Total | {total['pairs']} | {total['significant']} | "
        f"{total['significant_ratio_pct']} |"
    )
    flip = payload["flip_rate"]
    lines += [
        "",
        (
            f"Winner flips: {flip['flipped']} of {flip['pairs_considered']} pairs "
            f"with definite winners on at least two models "
            f"(rate {flip['rate']:.4f}; {flip['excluded']} pairs excluded)."
        ),
        "",
    ]
    return "\n".join(lines)


def emit_pair_report(
    comparisons: Sequence[PairComparison],
    flip: FlipRate,
    json_path: str | Path,
    md_path: str | Path,
) -> tuple[Path, Path]:
    """Structured pair report plus a markdown summary derived from it."""
    if not comparisons:
        raise ReportError("no pair comparisons to emit")
    payload = _pair_report_payload(comparisons, flip)
    out_json = write_json(json_path, payload)
    out_md = _write_text(md_path, _pair_report_markdown(payload))
    return out_json, out_md


def emit_failure_distribution(
    flag_counts: Mapping[str, Mapping[str, int]],
    record_totals: Mapping[str, int],
    path: str | Path,
) -> Path:
    """Model x P1..P8 counts with totals and per-record rates.

    A record with several labels increments each label cell once; the
    rate of a cell is its count over the model's record total ("5.88"
    for 250 P1 flags among 4250 records).
    """
    labels = list(FAILURE_PATTERNS)
    models = sorted(set(flag_counts) | set(record_totals))
    matrix = {}
    for model in models:
        counts = {label: int(flag_counts.get(model, {}).get(label, 0)) for label in labels}
        total_records = int(record_totals.get(model, 0))
        matrix[model] = {
            "counts": counts,
            "total_flags": sum(counts.values()),
            "total_records": total_records,
            "rate_pct": {
                label: percent(counts[label], total_records) if total_records else "0.00"
                for label in labels
            },
        }
    label_totals = {
        label: sum(matrix[m]["counts"][label] for m in models) for label in labels
    }
    return write_json(
        path,
        {
            "schema": SCHEMA_VERSION,
            "labels": labels,
            "label_names": dict(FAILURE_PATTERNS),
            "models": matrix,
            "label_totals": label_totals,
        },
    )
