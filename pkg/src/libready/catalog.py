"""Scenario / library / competing-pair catalog.

The catalog is one human-editable YAML file (see docs/catalog_format.md
and the commented sample shipped in libready/data/). It defines what gets
benchmarked: task scenarios, the libraries competing in each scenario,
and the expert-declared competing pairs. Catalogs are immutable after
load and safe to share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

FORMAT_VERSION = "1"

_ID_RE = re.compile(r"^[a-z0-9_.-]+$")


class CatalogError(Exception):
    """Base for catalog loading problems."""


class CatalogParseError(CatalogError):
    """File missing, unreadable, or structurally malformed."""


class CatalogReferenceError(CatalogError):
    """An id points at something that does not exist."""


@dataclass(frozen=True)
class Scenario:
    id: str
    name: str
    description: str = ""


@dataclass(frozen=True)
class LibraryEntry:
    id: str
    display_name: str
    import_names: frozenset[str]
    scenario_ids: frozenset[str]
    github_stars: int | None = None
    notes: str = ""


@dataclass(frozen=True, order=True)
class CompetingPair:
    scenario_id: str
    lib_a: str
    lib_b: str

    @staticmethod
    def canonical(scenario_id: str, lib_a: str, lib_b: str) -> "CompetingPair":
        """Pairs are unordered; store members sorted by id."""
        a, b = sorted((lib_a, lib_b))
        return CompetingPair(scenario_id=scenario_id, lib_a=a, lib_b=b)


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    message: str


@dataclass(frozen=True)
class Catalog:
    version: str
    scenarios: tuple[Scenario, ...]
    libraries: tuple[LibraryEntry, ...]
    pairs: tuple[CompetingPair, ...]

    def scenario(self, scenario_id: str) -> Scenario:
        for s in self.scenarios:
            if s.id == scenario_id:
                return s
        raise KeyError(f"unknown scenario {scenario_id!r}")

    def library(self, library_id: str) -> LibraryEntry:
        for lib in self.libraries:
            if lib.id == library_id:
                return lib
        raise KeyError(f"unknown library {library_id!r}")

    def scenario_libraries(self, scenario_id: str) -> list[LibraryEntry]:
        self.scenario(scenario_id)
        return [lib for lib in self.libraries if scenario_id in lib.scenario_ids]


def _require_id(value: object, what: str) -> str:
    if not isinstance(value, str) or not _ID_RE.match(value):
        raise CatalogParseError(
            f"{what} id {value!r} must be a lowercase token matching [a-z0-9_.-]+"
        )
    return value


def _as_list(doc: dict, key: str) -> list:
    value = doc.get(key, [])
    if value is None:
        return []
    if not isinstance(value, list):
        raise CatalogParseError(f"top-level {key!r} must be a list")
    return value


def load_catalog(path: str | Path) -> Catalog:
    """Load and fully resolve a catalog file.

    Raises CatalogParseError for malformed files and
    CatalogReferenceError for dangling ids. Entries come back sorted by
    id so downstream output is deterministic.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CatalogParseError(f"cannot read catalog {path}: {exc}") from exc

    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise CatalogParseError(f"catalog {path} is not valid YAML: {exc}") from exc
    if doc is None:
        raise CatalogParseError(f"catalog {path} is empty")
    if not isinstance(doc, dict):
        raise CatalogParseError(f"catalog {path} must be a mapping at top level")

    version = str(doc.get("version", FORMAT_VERSION))

    scenarios = []
    for raw in _as_list(doc, "scenarios"):
        if not isinstance(raw, dict):
            raise CatalogParseError("each scenario must be a mapping")
        sid = _require_id(raw.get("id"), "scenario")
        name = str(raw.get("name", "")).strip()
        if not name:
            raise CatalogParseError(f"scenario {sid!r} needs a non-empty name")
        scenarios.append(
            Scenario(id=sid, name=name, description=str(raw.get("description", "")))
        )
    scenario_ids = {s.id for s in scenarios}
    if len(scenario_ids) != len(scenarios):
        raise CatalogParseError("duplicate scenario ids")

    libraries = []
    for raw in _as_list(doc, "libraries"):
        if not isinstance(raw, dict):
            raise CatalogParseError("each library must be a mapping")
        lid = _require_id(raw.get("id"), "library")
        imports = raw.get("import_names") or []
        if not imports:
            raise CatalogParseError(f"library {lid!r} needs at least one import name")
        lib_scenarios = raw.get("scenario_ids") or []
        for sid in lib_scenarios:
            if sid not in scenario_ids:
                raise CatalogReferenceError(
                    f"library {lid!r} references unknown scenario {sid!r}"
                )
        stars = raw.get("github_stars")
        if stars is not None:
            stars = int(stars)
            if stars < 0:
                raise CatalogParseError(f"library {lid!r} has negative github_stars")
        libraries.append(
            LibraryEntry(
                id=lid,
                display_name=str(raw.get("display_name", lid)),
                import_names=frozenset(str(n) for n in imports),
                scenario_ids=frozenset(str(s) for s in lib_scenarios),
                github_stars=stars,
                notes=str(raw.get("notes", "")),
            )
        )
    library_ids = {lib.id for lib in libraries}
    if len(library_ids) != len(libraries):
        raise CatalogParseError("duplicate library ids")

    pairs = []
    for raw in _as_list(doc, "pairs"):
        if not isinstance(raw, dict):
            raise CatalogParseError("each pair must be a mapping")
        sid = raw.get("scenario_id")
        lib_a, lib_b = raw.get("lib_a"), raw.get("lib_b")
        if sid not in scenario_ids:
            raise CatalogReferenceError(f"pair references unknown scenario {sid!r}")
        for lid in (lib_a, lib_b):
            if lid not in library_ids:
                raise CatalogReferenceError(f"pair references unknown library {lid!r}")
        if lib_a == lib_b:
            raise CatalogParseError(f"pair in {sid!r} names the same library twice")
        pairs.append(CompetingPair.canonical(sid, lib_a, lib_b))

    return Catalog(
        version=version,
        scenarios=tuple(sorted(scenarios, key=lambda s: s.id)),
        libraries=tuple(sorted(libraries, key=lambda l: l.id)),
        pairs=tuple(sorted(set(pairs))),
    )


def serialize_catalog(catalog: Catalog) -> str:
    """Canonical YAML form; load(serialize(load(x))) is identity."""
    doc = {
        "version": catalog.version,
        "scenarios": [
            {"id": s.id, "name": s.name, "description": s.description}
            for s in catalog.scenarios
        ],
        "libraries": [
            {
                "id": lib.id,
                "display_name": lib.display_name,
                "import_names": sorted(lib.import_names),
                "scenario_ids": sorted(lib.scenario_ids),
                "github_stars": lib.github_stars,
                "notes": lib.notes,
            }
            for lib in catalog.libraries
        ],
        "pairs": [
            {"scenario_id": p.scenario_id, "lib_a": p.lib_a, "lib_b": p.lib_b}
            for p in catalog.pairs
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False)


def validate_catalog(catalog: Catalog) -> list[Violation]:
    """Benchmark-readiness check; an empty list means ready.

    Scenarios need at least two member libraries, and every declared pair
    must name libraries that both claim the pair's scenario.
    """
    violations = []
    for scenario in catalog.scenarios:
        members = catalog.scenario_libraries(scenario.id)
        if len(members) < 2:
            violations.append(
                Violation(
                    kind="too_few_competitors",
                    subject=scenario.id,
                    message=(
                        f"scenario {scenario.id!r} has {len(members)} member "
                        "libraries; at least two competitors are required"
                    ),
                )
            )
    for pair in catalog.pairs:
        for lid in (pair.lib_a, pair.lib_b):
            lib = catalog.library(lid)
            if pair.scenario_id not in lib.scenario_ids:
                violations.append(
                    Violation(
                        kind="pair_membership",
                        subject=f"{pair.scenario_id}:{pair.lib_a}+{pair.lib_b}",
                        message=(
                            f"pair member {lid!r} does not claim scenario "
                            f"{pair.scenario_id!r}"
                        ),
                    )
                )
    return violations


def competing_pairs(catalog: Catalog, scenario_id: str) -> list[CompetingPair]:
    """Declared pairs for a scenario, canonical, deduplicated, sorted."""
    catalog.scenario(scenario_id)  # raises KeyError for unknown ids
    return sorted({p for p in catalog.pairs if p.scenario_id == scenario_id})
