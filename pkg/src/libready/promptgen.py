"""Task descriptions, prompt rendering, and prompting strategies.

Tasks are library-neutral natural-language descriptions tied to a
scenario. Rendering is byte-stable: one fixed template, the library
display name and the task text each wrapped in backticks. Strategies
layer on top of the plain rendering: cot prepends a fixed system
instruction, fewshot prepends one exemplar exchange for the same
library, regen changes nothing here (candidate selection happens at
scoring time).
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import yaml

from .catalog import Catalog, LibraryEntry, Scenario
from .config import (
    COT_SYSTEM_MESSAGE,
    FEWSHOT_MIN_SCORE,
    PROMPT_TEMPLATE,
    TASK_GENERATION_PROMPT,
    TASK_VALIDATION_PROMPT,
)

# One validation attempt plus up to three regenerations.
VALIDATION_RETRIES = 3


class PromptGenError(Exception):
    pass


class ChatHandle(Protocol):
    """The slice of the gateway promptgen needs: messages in, text out."""

    def chat(self, messages: Sequence[dict], nonce: object = None) -> str: ...


@dataclass
class TaskDescription:
    id: str
    scenario_id: str
    text: str
    validated: bool = False
    provenance: str = "manual"
    attempts: int = 0

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise PromptGenError("task text must be non-empty")


@dataclass
class FewShotExample:
    id: str
    library_id: str
    task_text: str
    snippet: str
    score: float


@dataclass
class PromptSpec:
    id: str
    library_id: str
    scenario_id: str
    task_id: str
    strategy: str = "plain"
    regen_k: int | None = None
    example_id: str | None = None

    def __post_init__(self) -> None:
        if self.strategy == "regen" and (self.regen_k is None or self.regen_k < 2):
            raise PromptGenError("regen strategy needs k >= 2")


@dataclass
class TaskStore:
    tasks: list[TaskDescription] = field(default_factory=list)
    examples: list[FewShotExample] = field(default_factory=list)


def render_prompt(library: LibraryEntry, task: TaskDescription) -> list[dict]:
    """The plain one-message prompt for (library, task)."""
    return [{"role": "user", "content": _render_text(library, task.text)}]


def _render_text(library: LibraryEntry, task_text: str) -> str:
    return PROMPT_TEMPLATE.format(library=library.display_name, task=task_text)


def is_library_neutral(text: str, libraries: Sequence[LibraryEntry]) -> bool:
    """True when the text names none of the scenario's libraries."""
    lowered = text.lower()
    for lib in libraries:
        name = lib.display_name.lower()
        if re.search(r"(?<!\w)" + re.escape(name) + r"(?!\w)", lowered):
            return False
    return True


def _task_id(scenario_id: str, text: str) -> str:
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()[:8]
    return f"{scenario_id}-{digest}"


def _parse_listed_lines(reply: str) -> list[str]:
    """Pull task texts out of a numbered or bulleted list reply."""
    items = []
    for line in reply.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        stripped = re.sub(r"^(\d+[.)]\s*|[-*]\s+)", "", stripped).strip()
        if stripped:
            items.append(stripped)
    return items


def generate_task_descriptions(
    gw: ChatHandle,
    scenario: Scenario,
    count: int = 5,
    provenance: str = "generated",
    nonce: object = None,
) -> list[TaskDescription]:
    """Ask the model for `count` unvalidated candidate tasks.

    `nonce` distinguishes otherwise-identical requests (retry rounds) so
    the gateway cache cannot replay a previous batch.
    """
    if count < 1:
        raise PromptGenError("count must be >= 1")

    candidates: list[TaskDescription] = []
    calls = 0
    while len(candidates) < count and calls < 4:
        prompt = TASK_GENERATION_PROMPT.format(
            scenario_name=scenario.name,
            scenario_description=scenario.description,
            count=count - len(candidates),
        )
        reply = gw.chat([{"role": "user", "content": prompt}], nonce=(nonce, calls))
        calls += 1
        for text in _parse_listed_lines(reply):
            if len(candidates) >= count:
                break
            candidates.append(
                TaskDescription(
                    id=_task_id(scenario.id, text),
                    scenario_id=scenario.id,
                    text=text,
                    validated=False,
                    provenance=provenance,
                )
            )
    if len(candidates) < count:
        raise PromptGenError(
            f"model produced {len(candidates)} of {count} candidates for "
            f"scenario {scenario.id!r}"
        )
    return candidates


def _validation_verdict(gw: ChatHandle, scenario: Scenario, text: str, libraries) -> bool | None:
    """Strict yes/no from the judge; None for anything unparseable."""
    prompt = TASK_VALIDATION_PROMPT.format(
        scenario_name=scenario.name,
        scenario_description=scenario.description,
        libraries=", ".join(sorted(lib.display_name for lib in libraries)),
        task=text,
    )
    reply = gw.chat([{"role": "user", "content": prompt}])
    token = reply.strip().lower().rstrip(".")
    if token == "yes":
        return True
    if token == "no":
        return False
    return None


def validate_task_description(
    gw: ChatHandle,
    scenario: Scenario,
    candidate: TaskDescription,
    libraries: Sequence[LibraryEntry],
) -> TaskDescription:
    """Validate a candidate, regenerating up to three times on rejection.

    An attempt fails when the judge says no, replies with anything but a
    strict yes/no token, or when the text names a member library. The
    returned description records how many attempts were consumed.
    """
    text = candidate.text
    provenance = candidate.provenance
    attempts = 0
    while attempts <= VALIDATION_RETRIES:
        attempts += 1
        ok = is_library_neutral(text, libraries) and _validation_verdict(
            gw, scenario, text, libraries
        )
        if ok:
            return TaskDescription(
                id=_task_id(scenario.id, text),
                scenario_id=scenario.id,
                text=text,
                validated=True,
                provenance=provenance,
                attempts=attempts,
            )
        if attempts <= VALIDATION_RETRIES:
            regenerated = generate_task_descriptions(
                gw, scenario, count=1, provenance=provenance, nonce=("regen", attempts)
            )
            text = regenerated[0].text
    return TaskDescription(
        id=_task_id(scenario.id, candidate.text),
        scenario_id=scenario.id,
        text=candidate.text,
        validated=False,
        provenance=provenance,
        attempts=attempts,
    )


def eligible_example(example: FewShotExample, spec: PromptSpec, task: TaskDescription) -> bool:
    return (
        example.library_id == spec.library_id
        and example.score > FEWSHOT_MIN_SCORE
        and example.task_text.strip() != task.text.strip()
    )


def select_fewshot_example(
    examples: Sequence[FewShotExample], spec: PromptSpec, task: TaskDescription
) -> FewShotExample | None:
    """Best eligible exemplar: highest score, ties broken by id order."""
    eligible = [ex for ex in examples if eligible_example(ex, spec, task)]
    if not eligible:
        return None
    return sorted(eligible, key=lambda ex: (-ex.score, ex.id))[0]


def apply_strategy(
    spec: PromptSpec,
    library: LibraryEntry,
    task: TaskDescription,
    example: FewShotExample | None = None,
) -> list[dict]:
    """Messages for a prompt spec under its strategy."""
    base = render_prompt(library, task)
    if spec.strategy in ("plain", "regen"):
        return base
    if spec.strategy == "cot":
        return [{"role": "system", "content": COT_SYSTEM_MESSAGE}] + base
    if spec.strategy == "fewshot":
        if example is None:
            raise PromptGenError(f"fewshot prompt {spec.id!r} has no exemplar")
        if not eligible_example(example, spec, task):
            raise PromptGenError(
                f"exemplar {example.id!r} is not eligible for {spec.id!r}: needs "
                f"score > {FEWSHOT_MIN_SCORE:g} for the same library and a "
                "different task"
            )
        return [
            {"role": "user", "content": _render_text(library, example.task_text)},
            {"role": "assistant", "content": f"```python\n{example.snippet}\n```"},
            base[0],
        ]
    raise PromptGenError(f"unknown strategy {spec.strategy!r}")


def build_prompt_specs(
    catalog: Catalog,
    tasks: Sequence[TaskDescription],
    strategy: str = "plain",
    regen_k: int | None = None,
) -> list[PromptSpec]:
    """One spec per (library, validated task of its scenario)."""
    specs = []
    for library in catalog.libraries:
        for task in tasks:
            if not task.validated or task.scenario_id not in library.scenario_ids:
                continue
            specs.append(
                PromptSpec(
                    id=f"{library.id}:{task.id}:{strategy}",
                    library_id=library.id,
                    scenario_id=task.scenario_id,
                    task_id=task.id,
                    strategy=strategy,
                    regen_k=regen_k if strategy == "regen" else None,
                )
            )
    return specs


def load_task_store(path: str | Path) -> TaskStore:
    """Read the tasks/examples store (same YAML family as the catalog)."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise PromptGenError(f"cannot read task store {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise PromptGenError(f"task store {path} is not valid YAML: {exc}") from exc
    if doc is None:
        return TaskStore()
    if not isinstance(doc, dict):
        raise PromptGenError(f"task store {path} must be a mapping at top level")

    tasks = [
        TaskDescription(
            id=str(raw["id"]),
            scenario_id=str(raw["scenario_id"]),
            text=str(raw["text"]),
            validated=bool(raw.get("validated", False)),
            provenance=str(raw.get("provenance", "manual")),
            attempts=int(raw.get("attempts", 0)),
        )
        for raw in doc.get("tasks") or []
    ]
    examples = [
        FewShotExample(
            id=str(raw["id"]),
            library_id=str(raw["library_id"]),
            task_text=str(raw["task_text"]),
            snippet=str(raw["snippet"]),
            score=float(raw["score"]),
        )
        for raw in doc.get("examples") or []
    ]
    return TaskStore(tasks=tasks, examples=examples)


def save_task_store(path: str | Path, store: TaskStore) -> None:
    doc = {
        "version": "1",
        "tasks": [
            {
                "id": t.id,
                "scenario_id": t.scenario_id,
                "text": t.text,
                "validated": t.validated,
                "provenance": t.provenance,
                "attempts": t.attempts,
            }
            for t in store.tasks
        ],
        "examples": [
            {
                "id": ex.id,
                "library_id": ex.library_id,
                "task_text": ex.task_text,
                "snippet": ex.snippet,
                "score": ex.score,
            }
            for ex in store.examples
        ],
    }
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")
