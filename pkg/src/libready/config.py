"""Run configuration, prompt/rubric texts, and seed fan-out.

Everything that shapes a benchmark run but is not code lives here: the
prompt templates used for task generation and validation, the judge
rubrics (versioned so results can declare which rubric produced them),
the readability model coefficients, and the deterministic seed
derivation that fans one run-level seed out to every component.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

SCHEMA_VERSION = 1

# Version stamp for the judge rubric texts below. Bump whenever a rubric
# string changes so archived verdicts stay attributable.
RUBRIC_VERSION = "1"

# Coefficients of the logistic code-readability model (intercept,
# volume, lines, entropy). Swapping them is a config change, not a code
# change.
DEFAULT_READABILITY_COEFFS = (8.87, -0.033, 0.40, -1.5)

# Prompting strategy names accepted throughout the pipeline.
STRATEGIES = ("plain", "cot", "fewshot", "regen")

# System instruction prepended by the chain-of-thought strategy.
COT_SYSTEM_MESSAGE = "Let's think step by step"

# Few-shot exemplars must score strictly above this to be eligible.
FEWSHOT_MIN_SCORE = 80.0

# User-facing prompt template. LIBRARY and DESCRIPTION are wrapped in
# backticks; the trailing period is part of the template.
PROMPT_TEMPLATE = (
    "Write a Python script that uses `{library}` to complete the "
    "following coding task: `{task}`."
)

TASK_GENERATION_PROMPT = (
    "You are building a benchmark of coding tasks.\n"
    "Scenario: {scenario_name}. {scenario_description}\n"
    "Write {count} distinct task descriptions for this scenario. Each task "
    "must be achievable with any mainstream library for the scenario and "
    "must not mention any library by name.\n"
    "Reply with a numbered list, one task per line."
)

TASK_VALIDATION_PROMPT = (
    "Scenario: {scenario_name}. {scenario_description}\n"
    "Competing libraries: {libraries}.\n"
    "Task description: {task}\n"
    "Can this task be accomplished with each of the competing libraries on "
    "its own? Answer with exactly one word: yes or no."
)

# Judge rubrics. Each demands a single JSON object so verdict parsing is
# deterministic; the mock provider recognizes the "Respond with only a
# JSON object" sentinel.
JUDGE_RUBRICS = {
    "functional": (
        "You are a strict code reviewer. Given a coding task and a Python "
        "snippet, score the snippet's functional correctness against the "
        "task on a 0-100 integer scale.\n"
        "Respond with only a JSON object: "
        '{"functional": <int 0-100>, "rationale": "<short reason>"}'
    ),
    "performance": (
        "You are a strict code reviewer. Estimate the time complexity and "
        "space complexity of the given Python snippet and convert each to a "
        "0-100 integer score (100 = optimal for the task).\n"
        "Respond with only a JSON object: "
        '{"time": <int 0-100>, "space": <int 0-100>, "rationale": "<short reason>"}'
    ),
    "reliability": (
        "You are a strict code reviewer. Assess the reliability of the given "
        "Python snippet: input validation, exception handling, and edge-case "
        "coverage. Score 0-100.\n"
        "Respond with only a JSON object: "
        '{"reliability": <int 0-100>, "rationale": "<short reason>"}'
    ),
    "failure_labels": (
        "You are a strict code reviewer classifying why a low-quality Python "
        "snippet scored poorly. Choose every label that applies from: "
        "P1 syntax error, P2 incorrect library usage, P3 incorrect "
        "functionality, P4 missing edge handling, P5 inefficient "
        "implementation, P6 missing comments, P7 import issues, P8 other.\n"
        "Respond with only a JSON object: "
        '{"labels": ["P3", ...], "rationale": "<short reason>"}'
    ),
}

JUDGE_PARSE_RETRY_NOTE = (
    "Your previous reply could not be parsed. Respond with only the JSON "
    "object in the requested schema, no prose, no code fences."
)


def derive_seed(master_seed: int, *parts: object) -> int:
    """Derive a stable component seed from the run seed and a label path.

    Same master seed and parts always give the same value, across
    platforms and processes.
    """
    text = str(master_seed) + "\x1f" + "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class RunConfig:
    """All knobs for one benchmark run."""

    catalog_path: str = "catalog.yaml"
    tasks_path: str = "tasks.yaml"
    models: list[str] = field(default_factory=list)
    # Placeholder by design: the judge model is an explicit user choice
    # (mock runs fall back to the mock judge).
    judge_model: str | None = None
    repetitions: int = 5
    bootstrap_resamples: int = 1000
    ci_level: float = 0.95
    seed: int = 0
    strategy: str = "plain"
    regen_k: int = 3
    concurrency: int = 4
    out_dir: str = "runs"
    mock: bool = False
    mock_fixtures: str | None = None
    provider_endpoints: dict[str, str] = field(default_factory=dict)
    run_id: str | None = None

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.bootstrap_resamples < 1:
            raise ValueError("bootstrap resamples must be >= 1")
        if not 0 < self.ci_level < 1:
            raise ValueError("CI level must be in (0, 1)")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "regen" and self.regen_k < 2:
            raise ValueError("regen strategy needs regen_k >= 2")

    def config_hash(self) -> str:
        """Hash of every result-shaping field, for report provenance."""
        payload = asdict(self)
        payload.pop("out_dir")
        payload.pop("concurrency")
        payload.pop("run_id")
        payload["rubric_version"] = RUBRIC_VERSION
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def generation_id(self) -> str:
        """Run id shared by every stage of one generation batch.

        Depends only on what defines the generation archive (catalog,
        tasks, models, reps, strategy, seed), never on the judge model,
        so judging can be redone against the same archive.
        """
        if self.run_id:
            return self.run_id
        parts = [
            self.catalog_path,
            self.tasks_path,
            ",".join(sorted(self.models)),
            str(self.repetitions),
            self.strategy,
            str(self.regen_k),
            str(self.seed),
        ]
        blob = "\x1f".join(parts).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]

    def run_dir(self) -> Path:
        return Path(self.out_dir) / self.generation_id()
