"""Command-line pipeline: tasks -> run -> judge -> score -> analyze -> report.

The stage split exists because judging is the expensive step and must be
re-runnable against the same generation archive (including with a
different judge model). Every stage is resumable: archived cells are
never re-queried. All randomness flows from the single --seed, fanned
out deterministically, so a seeded --mock pipeline is byte-reproducible
and needs no network.

Stages locate their run directory from the generation-defining flags
(catalog, tasks, models, reps, strategy, seed) or an explicit --run-id,
so later stages must repeat those flags.

Exit codes: 0 ok, 1 catalog violations, 2 bad input/config, 3 task
generation exhausted, 4 missing upstream artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import analysis, metrics, promptgen, report, scoring
from .archive import Archive, append_jsonl, read_jsonl, write_jsonl
from .catalog import Catalog, CatalogError, load_catalog, validate_catalog
from .config import RUBRIC_VERSION, RunConfig, derive_seed
from .gateway import (
    Gateway,
    GenerationRecord,
    HttpProvider,
    JudgeFailure,
    MockProvider,
    ModelId,
    RenderedPrompt,
    judge,
    run_generation,
)
from .promptgen import PromptGenError, PromptSpec
from .report import ReportError

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_BAD_INPUT = 2
EXIT_TASKS_EXHAUSTED = 3
EXIT_MISSING_UPSTREAM = 4

DEFAULT_ENDPOINTS = {"openai": "https://api.openai.com/v1"}


def _err(message: str) -> None:
    print(message, file=sys.stderr)


def _model_filename(model: str) -> str:
    return model.replace(":", "_").replace("/", "_")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        catalog_path=args.catalog,
        tasks_path=args.tasks,
        models=[m for m in (args.models or "").split(",") if m],
        judge_model=getattr(args, "judge_model", None),
        repetitions=args.reps,
        bootstrap_resamples=getattr(args, "resamples", 1000),
        ci_level=getattr(args, "ci_level", 0.95),
        seed=args.seed,
        strategy=args.strategy,
        regen_k=args.regen_k,
        concurrency=args.concurrency,
        out_dir=args.out,
        mock=args.mock,
        mock_fixtures=getattr(args, "mock_fixtures", None),
        run_id=getattr(args, "run_id", None),
    )


def _make_provider(config: RunConfig, model: ModelId):
    if config.mock or model.provider == "mock":
        return MockProvider(
            seed=derive_seed(config.seed, "mock-provider"),
            fixtures_dir=config.mock_fixtures,
        )
    endpoint = (
        config.provider_endpoints.get(model.provider)
        or os.environ.get(f"LIBREADY_{model.provider.upper()}_ENDPOINT")
        or DEFAULT_ENDPOINTS.get(model.provider)
    )
    if endpoint is None:
        raise ValueError(
            f"no endpoint configured for provider {model.provider!r}; set "
            f"LIBREADY_{model.provider.upper()}_ENDPOINT or use a known "
            "provider: " + ", ".join(sorted(DEFAULT_ENDPOINTS))
        )
    return HttpProvider(provider_key=model.provider, base_url=endpoint)


def _make_gateway(config: RunConfig, model_text: str) -> Gateway:
    model = ModelId.parse(model_text)
    return Gateway(_make_provider(config, model), model)


def _judge_model(config: RunConfig) -> str | None:
    if config.judge_model:
        return config.judge_model
    if config.mock:
        return "mock:judge"
    return None


def _load_ready_catalog(config: RunConfig) -> Catalog:
    catalog = load_catalog(config.catalog_path)
    violations = validate_catalog(catalog)
    if violations:
        for v in violations:
            _err(f"{v.kind}: {v.message}")
        raise CatalogError("catalog is not benchmark-ready")
    return catalog


# ---------------------------------------------------------------------------
# catalog-validate
# ---------------------------------------------------------------------------


def cmd_catalog_validate(args: argparse.Namespace) -> int:
    try:
        catalog = load_catalog(args.catalog)
    except CatalogError as exc:
        _err(f"error: {exc}")
        return EXIT_BAD_INPUT
    violations = validate_catalog(catalog)
    for v in violations:
        print(f"{v.kind}: {v.message}")
    if violations:
        return EXIT_VIOLATIONS
    print(
        f"catalog ok: {len(catalog.scenarios)} scenarios, "
        f"{len(catalog.libraries)} libraries, {len(catalog.pairs)} pairs"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# tasks
# ---------------------------------------------------------------------------


def cmd_tasks(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    try:
        catalog = _load_ready_catalog(config)
    except CatalogError as exc:
        _err(f"error: {exc}")
        return EXIT_BAD_INPUT

    model_text = args.taskgen_model or ("mock:taskgen" if config.mock else None)
    if model_text is None:
        _err("error: choose --taskgen-model (or pass --mock)")
        return EXIT_BAD_INPUT
    gw = _make_gateway(config, model_text)

    store_path = Path(config.tasks_path)
    store = (
        promptgen.load_task_store(store_path)
        if store_path.exists()
        else promptgen.TaskStore()
    )
    existing_by_scenario: dict[str, int] = {}
    for task in store.tasks:
        if task.validated:
            existing_by_scenario[task.scenario_id] = (
                existing_by_scenario.get(task.scenario_id, 0) + 1
            )

    exhausted = []
    for scenario in catalog.scenarios:
        have = existing_by_scenario.get(scenario.id, 0)
        if have >= args.count:
            print(f"{scenario.id}: {have} validated tasks (skipped, already complete)")
            continue
        members = catalog.scenario_libraries(scenario.id)
        try:
            candidates = promptgen.generate_task_descriptions(
                gw, scenario, count=args.count - have, provenance=model_text
            )
        except PromptGenError as exc:
            _err(f"error: {exc}")
            return EXIT_BAD_INPUT
        accepted = 0
        seen_ids = {t.id for t in store.tasks}
        for candidate in candidates:
            result = promptgen.validate_task_description(gw, scenario, candidate, members)
            if result.id not in seen_ids:
                store.tasks.append(result)
                seen_ids.add(result.id)
            if result.validated:
                accepted += 1
        total = have + accepted
        print(f"{scenario.id}: {total} validated tasks ({accepted} new)")
        if total == 0:
            exhausted.append(scenario.id)

    promptgen.save_task_store(store_path, store)
    if exhausted:
        _err(
            "error: validation retry budget exhausted for all candidates of: "
            + ", ".join(exhausted)
        )
        return EXIT_TASKS_EXHAUSTED
    return EXIT_OK


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _render_specs(
    catalog: Catalog, store: promptgen.TaskStore, config: RunConfig
) -> list[tuple[PromptSpec, list[dict], str]]:
    """(spec, messages, task_text) triples, sorted by spec id."""
    tasks_by_id = {t.id: t for t in store.tasks if t.validated}
    specs = promptgen.build_prompt_specs(
        catalog, list(tasks_by_id.values()), config.strategy, config.regen_k
    )
    rendered = []
    for spec in sorted(specs, key=lambda s: s.id):
        library = catalog.library(spec.library_id)
        task = tasks_by_id[spec.task_id]
        example = None
        if config.strategy == "fewshot":
            example = promptgen.select_fewshot_example(store.examples, spec, task)
            if example is None:
                raise PromptGenError(
                    f"no eligible few-shot exemplar for library {spec.library_id!r} "
                    "(need recorded score > 80 and a different task)"
                )
            spec.example_id = example.id
        messages = promptgen.apply_strategy(spec, library, task, example)
        rendered.append((spec, messages, task.text))
    return rendered


def cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    if not config.models:
        _err("error: pass --models as a comma-separated list of provider:name ids")
        return EXIT_BAD_INPUT
    try:
        catalog = _load_ready_catalog(config)
        store = promptgen.load_task_store(config.tasks_path)
    except (CatalogError, PromptGenError) as exc:
        _err(f"error: {exc}")
        return EXIT_BAD_INPUT

    if not any(t.validated for t in store.tasks):
        _err("error: no validated tasks; run `libready tasks` first")
        return EXIT_MISSING_UPSTREAM

    try:
        rendered = _render_specs(catalog, store, config)
    except PromptGenError as exc:
        _err(f"error: {exc}")
        return EXIT_BAD_INPUT

    run_dir = config.run_dir()
    run_dir.mkdir(parents=True, exist_ok=True)
    write_jsonl(
        run_dir / "prompts.jsonl",
        [
            {
                "spec": spec.__dict__,
                "messages": messages,
                "task_text": task_text,
            }
            for spec, messages, task_text in rendered
        ],
    )
    manifest = report.RunManifest(
        run_id=config.generation_id(),
        catalog_version=catalog.version,
        config_hash=config.config_hash(),
        models=config.models,
        judge_model=_judge_model(config),
        rubric_version=RUBRIC_VERSION,
        seed=config.seed,
        created_at=datetime.now(timezone.utc).isoformat(),
        extra={"strategy": config.strategy, "repetitions": config.repetitions},
    )
    report.write_manifest(manifest, run_dir / "manifest.json")

    effective_reps = config.repetitions * (
        config.regen_k if config.strategy == "regen" else 1
    )
    prompts = [RenderedPrompt(spec=s, messages=m) for s, m, _ in rendered]
    for model_text in config.models:
        try:
            gw = _make_gateway(config, model_text)
        except ValueError as exc:
            _err(f"error: {exc}")
            return EXIT_BAD_INPUT
        archive = Archive(run_dir / "generations" / f"{_model_filename(model_text)}.jsonl")
        before = len(archive)
        records = run_generation(
            gw, prompts, effective_reps, archive, concurrency=config.concurrency
        )
        errors = sum(1 for r in records if r.status == "error")
        print(
            f"{model_text}: {len(records)} records "
            f"({before} cached, {len(archive) - before} new, {errors} errors)"
        )
    print(f"run dir: {run_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# judge
# ---------------------------------------------------------------------------


def _generation_paths(config: RunConfig) -> list[tuple[str, Path]]:
    run_dir = config.run_dir()
    return [
        (m, run_dir / "generations" / f"{_model_filename(m)}.jsonl")
        for m in config.models
    ]


def _task_texts(run_dir: Path) -> dict[str, str]:
    return {
        line["spec"]["id"]: line["task_text"]
        for line in read_jsonl(run_dir / "prompts.jsonl")
    }


def cmd_judge(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    run_dir = config.run_dir()
    if not (run_dir / "prompts.jsonl").exists():
        _err(f"error: missing generations in {run_dir}; run `libready run` first")
        return EXIT_MISSING_UPSTREAM

    judge_model = _judge_model(config)
    if judge_model is None:
        _err("error: the judge model is an explicit choice; pass --judge-model")
        return EXIT_BAD_INPUT
    gw = _make_gateway(config, judge_model)
    task_texts = _task_texts(run_dir)

    for model_text, gen_path in _generation_paths(config):
        if not gen_path.exists():
            _err(f"error: missing generations for {model_text}; run `libready run`")
            return EXIT_MISSING_UPSTREAM
        verdict_path = run_dir / "verdicts" / f"{_model_filename(model_text)}.jsonl"
        done = set()
        if verdict_path.exists():
            for line in read_jsonl(verdict_path):
                if line.get("judge_model") == judge_model:
                    done.add(line["cache_key"])

        records = [GenerationRecord.from_dict(obj) for obj in read_jsonl(gen_path)]
        todo = [r for r in records if r.status == "ok" and r.cache_key not in done]

        def judge_one(record: GenerationRecord) -> dict:
            task_text = task_texts.get(record.prompt_id, "")
            line = {
                "cache_key": record.cache_key,
                "prompt_id": record.prompt_id,
                "rep_index": record.rep_index,
                "model": record.model,
                "judge_model": judge_model,
                "rubric_version": RUBRIC_VERSION,
                "scores": {},
                "rationales": {},
                "parse_attempts": {},
                "status": "ok",
            }
            try:
                for rubric in ("functional", "performance", "reliability"):
                    verdict = judge(gw, record.extracted_code, task_text, rubric)
                    line["scores"].update(verdict.scores)
                    line["rationales"][rubric] = verdict.rationale
                    line["parse_attempts"][rubric] = verdict.parse_attempts
            except JudgeFailure as exc:
                line["status"] = "judge_failed"
                line["error"] = str(exc)
            return line

        if todo:
            with ThreadPoolExecutor(max_workers=max(1, config.concurrency)) as pool:
                lines = list(pool.map(judge_one, todo))
            for line in lines:
                append_jsonl(verdict_path, line)
        failed = sum(
            1
            for line in read_jsonl(verdict_path)
            if line["judge_model"] == judge_model and line["status"] == "judge_failed"
        ) if verdict_path.exists() else 0
        print(
            f"{model_text}: judged {len(todo)} new records "
            f"({len(done)} cached, {failed} judge failures)"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# score
# ---------------------------------------------------------------------------


def cmd_score(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    run_dir = config.run_dir()
    try:
        catalog = load_catalog(config.catalog_path)
    except CatalogError as exc:
        _err(f"error: {exc}")
        return EXIT_BAD_INPUT

    judge_model = _judge_model(config)
    for model_text, gen_path in _generation_paths(config):
        if not gen_path.exists():
            _err(f"error: missing generations for {model_text}")
            return EXIT_MISSING_UPSTREAM
        verdict_path = run_dir / "verdicts" / f"{_model_filename(model_text)}.jsonl"
        if not verdict_path.exists():
            _err(f"error: missing verdicts for {model_text}; run `libready judge` first")
            return EXIT_MISSING_UPSTREAM
        verdicts = {
            line["cache_key"]: line
            for line in read_jsonl(verdict_path)
            if judge_model is None or line["judge_model"] == judge_model
        }

        scored: list[scoring.ScoredRecord] = []
        extras: dict[str, dict] = {}
        generation_errors = 0
        for obj in read_jsonl(gen_path):
            record = GenerationRecord.from_dict(obj)
            if record.status != "ok":
                generation_errors += 1
                continue
            verdict = verdicts.get(record.cache_key)
            if verdict is None and record.extracted_code.strip():
                _err(
                    f"error: missing verdicts for record {record.cache_key[:12]} "
                    f"of {model_text}; rerun `libready judge`"
                )
                return EXIT_MISSING_UPSTREAM

            library = catalog.library(record.library_id)
            static = metrics.analyze(
                record.extracted_code, expected_imports=set(library.import_names)
            )
            flags = analysis.flag_static_failures(static)
            base = dict(
                cache_key=record.cache_key,
                prompt_id=record.prompt_id,
                library_id=record.library_id,
                scenario_id=record.scenario_id,
                task_id=record.task_id,
                model=record.model,
                rep_index=record.rep_index,
                strategy=record.strategy,
            )
            if verdict is not None and verdict["status"] == "judge_failed":
                rec = scoring.ScoredRecord(
                    **base, quality=None, overall=None, judge_failed=True
                )
            else:
                scores = verdict["scores"] if verdict else None
                quality = scoring.dimension_scores(record, scores, static)
                rec = scoring.ScoredRecord(
                    **base, quality=quality, overall=scoring.overall(quality)
                )
            scored.append(rec)
            extras[rec.cache_key] = {
                "static": static.to_dict(),
                "static_flags": [
                    {"label": f.label, "source": f.source, "evidence": f.evidence}
                    for f in sorted(flags, key=lambda f: f.label)
                ],
            }

        if config.strategy == "regen":
            scoring.select_regeneration_winners(scored, config.regen_k)

        write_jsonl(
            run_dir / "scores" / f"{_model_filename(model_text)}.jsonl",
            [dict(r.to_dict(), **extras[r.cache_key]) for r in scored],
        )
        failed = sum(1 for r in scored if r.judge_failed)
        selected = sum(1 for r in scored if r.selected and not r.judge_failed)
        print(
            f"{model_text}: scored {len(scored)} records "
            f"({selected} selected, {failed} judge-failed excluded, "
            f"{generation_errors} generation errors skipped)"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def _load_scored(config: RunConfig) -> tuple[list[scoring.ScoredRecord], dict[str, dict]]:
    run_dir = config.run_dir()
    records: list[scoring.ScoredRecord] = []
    extras: dict[str, dict] = {}
    for model_text in config.models:
        path = run_dir / "scores" / f"{_model_filename(model_text)}.jsonl"
        if not path.exists():
            raise FileNotFoundError(
                f"missing scores for {model_text}; run `libready score` first"
            )
        for obj in read_jsonl(path):
            records.append(scoring.ScoredRecord.from_dict(obj))
            extras[obj["cache_key"]] = {
                "static_flags": obj.get("static_flags", []),
                "static": obj.get("static", {}),
            }
    return records, extras


def cmd_analyze(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    run_dir = config.run_dir()
    try:
        catalog = load_catalog(config.catalog_path)
        scored, extras = _load_scored(config)
    except CatalogError as exc:
        _err(f"error: {exc}")
        return EXIT_BAD_INPUT
    except FileNotFoundError as exc:
        _err(f"error: {exc}")
        return EXIT_MISSING_UPSTREAM

    usable = [r for r in scored if r.selected and not r.judge_failed and r.overall is not None]
    if not usable:
        _err("error: no scored records to analyze")
        return EXIT_MISSING_UPSTREAM
    out_dir = run_dir / "analysis"

    # Proficiency per (library, scenario, model) cell.
    cells: dict[tuple[str, str, str], list[scoring.ScoredRecord]] = {}
    for r in usable:
        cells.setdefault((r.library_id, r.scenario_id, r.model), []).append(r)
    proficiencies = []
    for (lib, scen, model), members in sorted(cells.items()):
        proficiencies.append(
            scoring.proficiency(
                members,
                resamples=config.bootstrap_resamples,
                level=config.ci_level,
                seed=derive_seed(config.seed, "bootstrap", lib, scen, model),
            )
        )
    report.write_json(
        out_dir / "proficiency.json",
        {
            "method": "percentile bootstrap over pooled per-snippet overall scores",
            "resamples": config.bootstrap_resamples,
            "level": config.ci_level,
            "config_hash": config.config_hash(),
            "rows": [p.__dict__ for p in proficiencies],
        },
    )

    # Competing-pair comparisons per model, on pooled per-snippet overalls.
    overalls: dict[tuple[str, str, str], list[float]] = {}
    for r in usable:
        overalls.setdefault((r.library_id, r.scenario_id, r.model), []).append(r.overall)
    comparisons = []
    for pair in catalog.pairs:
        for model_text in config.models:
            a = overalls.get((pair.lib_a, pair.scenario_id, model_text))
            b = overalls.get((pair.lib_b, pair.scenario_id, model_text))
            if not a or not b:
                continue
            comparisons.append(analysis.compare_pair(a, b, pair, model_text))
    flip = analysis.winner_flip_rate(comparisons)
    report.write_json(
        out_dir / "pairs.json",
        {
            "comparisons": [c.to_dict() for c in comparisons],
            "flip_rate": flip.__dict__,
            "config_hash": config.config_hash(),
        },
    )

    winners = analysis.winner_distribution(proficiencies)
    report.write_json(
        out_dir / "winners.json",
        {
            "counts": winners.counts,
            "tie_libraries": winners.tie_libraries,
            "libraries": winners.libraries,
        },
    )

    # IQR low-quality selection over every usable record, all models pooled.
    low = analysis.low_quality_set(usable)
    low_keys = {r.cache_key for r in low.flagged}

    # Failure flags: static P1/P7 everywhere; judge-assisted labels for
    # the low-quality set, static winning on conflicts.
    judge_model = _judge_model(config)
    gw = _make_gateway(config, judge_model) if judge_model else None
    task_texts = _task_texts(run_dir)
    snippets: dict[str, str] = {}
    for model_text, gen_path in _generation_paths(config):
        for obj in read_jsonl(gen_path):
            snippets[obj["cache_key"]] = obj["extracted_code"]

    flags_by_record: dict[str, set[analysis.FailureFlag]] = {}
    model_by_record: dict[str, str] = {}
    judge_failures = 0
    for record in sorted(low.flagged, key=lambda r: (r.model, r.cache_key)):
        static_flags = {
            analysis.FailureFlag(f["label"], f["source"], f.get("evidence", ""))
            for f in extras[record.cache_key]["static_flags"]
        }
        merged = static_flags
        if gw is not None:
            try:
                merged = analysis.classify_failures_judged(
                    gw,
                    snippets.get(record.cache_key, ""),
                    task_texts.get(record.prompt_id, ""),
                    static_flags,
                )
            except JudgeFailure:
                judge_failures += 1
        flags_by_record[record.cache_key] = merged
        model_by_record[record.cache_key] = record.model

    low_counts = analysis.count_flags_by_model(flags_by_record, model_by_record)
    static_counts: dict[str, dict[str, int]] = {}
    for r in scored:
        per_model = static_counts.setdefault(r.model, {})
        for f in extras[r.cache_key]["static_flags"]:
            per_model[f["label"]] = per_model.get(f["label"], 0) + 1
    record_totals: dict[str, int] = {}
    for r in scored:
        record_totals[r.model] = record_totals.get(r.model, 0) + 1

    report.write_json(
        out_dir / "low_quality.json",
        {
            "q1": low.partition.q1,
            "q3": low.partition.q3,
            "iqr": low.partition.iqr,
            "low_threshold": low.partition.low_threshold,
            "count": len(low.flagged),
            "records": [
                {
                    "cache_key": r.cache_key,
                    "model": r.model,
                    "library": r.library_id,
                    "overall": r.overall,
                    "labels": sorted({f.label for f in flags_by_record.get(r.cache_key, set())}),
                    "flags": [
                        {"label": f.label, "source": f.source, "evidence": f.evidence}
                        for f in sorted(
                            flags_by_record.get(r.cache_key, set()),
                            key=lambda f: (f.label, f.source),
                        )
                    ],
                }
                for r in sorted(low.flagged, key=lambda r: (r.model, r.cache_key))
            ],
            "classifier": judge_model,
            "rubric_version": RUBRIC_VERSION,
            "judge_failures": judge_failures,
        },
    )
    report.write_json(
        out_dir / "failures.json",
        {
            "low_quality_counts": low_counts,
            "static_counts": static_counts,
            "record_totals": record_totals,
        },
    )

    # Popularity concordance on pair-level pooled proficiency.
    lib_scen_pool: dict[tuple[str, str], list[float]] = {}
    for r in usable:
        lib_scen_pool.setdefault((r.library_id, r.scenario_id), []).append(r.overall)
    entries = []
    for pair in catalog.pairs:
        a = lib_scen_pool.get((pair.lib_a, pair.scenario_id))
        b = lib_scen_pool.get((pair.lib_b, pair.scenario_id))
        if not a or not b:
            continue
        entries.append(
            analysis.PairPopularity(
                scenario_id=pair.scenario_id,
                lib_a=pair.lib_a,
                lib_b=pair.lib_b,
                stars_a=catalog.library(pair.lib_a).github_stars,
                stars_b=catalog.library(pair.lib_b).github_stars,
                prof_a=sum(a) / len(a),
                prof_b=sum(b) / len(b),
            )
        )
    try:
        concordance = analysis.concordance_with_popularity(entries)
        concordance_payload = concordance.__dict__
    except analysis.AnalysisError as exc:
        concordance_payload = {"skipped": str(exc)}
    report.write_json(out_dir / "concordance.json", concordance_payload)

    excluded = sum(1 for r in scored if r.judge_failed)
    report.write_json(
        out_dir / "summary.json",
        {
            "config_hash": config.config_hash(),
            "archives": sorted(
                str(p.relative_to(run_dir)) for _, p in _generation_paths(config)
            ),
            "scored_records": len(scored),
            "usable_records": len(usable),
            "judge_failed_excluded": excluded,
            "low_quality": len(low.flagged),
            "pair_comparisons": len(comparisons),
        },
    )
    print(
        f"analyzed {len(usable)} records: {len(comparisons)} pair comparisons, "
        f"{len(low.flagged)} low-quality, {excluded} judge-failed excluded"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def cmd_report(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    run_dir = config.run_dir()
    analysis_dir = run_dir / "analysis"
    needed = ["proficiency.json", "pairs.json", "failures.json"]
    for name in needed:
        if not (analysis_dir / name).exists():
            _err(f"error: missing {analysis_dir / name}; run `libready analyze` first")
            return EXIT_MISSING_UPSTREAM

    prof_doc = json.loads((analysis_dir / "proficiency.json").read_text())
    proficiencies = [scoring.ProficiencyScore(**row) for row in prof_doc["rows"]]
    try:
        report.emit_proficiency_table(proficiencies, run_dir / "proficiency.csv")

        scored, _ = _load_scored(config)
        usable = [
            r for r in scored if r.selected and not r.judge_failed and r.quality is not None
        ]
        means: dict[str, dict[str, float]] = {}
        for model_text in sorted({r.model for r in usable}):
            members = [r for r in usable if r.model == model_text]
            means[model_text] = {
                dim: sum(getattr(r.quality, dim) for r in members) / len(members)
                for dim in scoring.DIMENSIONS
            }
        report.emit_radar_data(means, run_dir / "radar.json")

        pairs_doc = json.loads((analysis_dir / "pairs.json").read_text())
        comparisons = [
            analysis.PairComparison(**obj) for obj in pairs_doc["comparisons"]
        ]
        flip = analysis.FlipRate(**pairs_doc["flip_rate"])
        report.emit_pair_report(
            comparisons, flip, run_dir / "pairs.json", run_dir / "pairs.md"
        )

        failures_doc = json.loads((analysis_dir / "failures.json").read_text())
        report.emit_failure_distribution(
            failures_doc["low_quality_counts"],
            failures_doc["record_totals"],
            run_dir / "failures.json",
        )
    except (ReportError, FileNotFoundError) as exc:
        _err(f"error: {exc}")
        return EXIT_MISSING_UPSTREAM

    print(f"reports written under {run_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--catalog", default="catalog.yaml", help="catalog YAML path")
    parser.add_argument("--tasks", default="tasks.yaml", help="task store YAML path")
    parser.add_argument("--models", default="", help="comma-separated provider:name ids")
    parser.add_argument("--judge-model", default=None, help="judge model (provider:name)")
    parser.add_argument("--reps", type=int, default=5, help="repetitions per prompt")
    parser.add_argument("--strategy", choices=["plain", "cot", "fewshot", "regen"], default="plain")
    parser.add_argument("--regen-k", type=int, default=3, help="candidates per repetition under regen")
    parser.add_argument("--seed", type=int, default=0, help="run-level seed")
    parser.add_argument("--mock", action="store_true", help="route every model to the offline mock provider")
    parser.add_argument("--mock-fixtures", default=None, help="directory of request-hash fixture replies")
    parser.add_argument("--out", default="runs", help="base output directory")
    parser.add_argument("--concurrency", type=int, default=4, help="max in-flight provider calls")
    parser.add_argument("--resamples", type=int, default=1000, help="bootstrap resamples")
    parser.add_argument("--ci-level", type=float, default=0.95, help="bootstrap CI level")
    parser.add_argument("--run-id", default=None, help="override the derived run id")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="libready",
        description="Benchmark how proficiently LLMs use third-party libraries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog-validate", help="check a catalog for benchmark readiness")
    p.add_argument("--catalog", default="catalog.yaml")
    p.set_defaults(func=cmd_catalog_validate)

    p = sub.add_parser("tasks", help="generate and validate task descriptions")
    _add_common(p)
    p.add_argument("--count", type=int, default=5, help="validated tasks per scenario")
    p.add_argument("--taskgen-model", default=None, help="model used to draft/validate tasks")
    p.set_defaults(func=cmd_tasks)

    for name, func, help_text in (
        ("run", cmd_run, "collect model responses for every prompt"),
        ("judge", cmd_judge, "judge archived responses with the judge model"),
        ("score", cmd_score, "combine judge + static metrics into scored records"),
        ("analyze", cmd_analyze, "pair comparisons, winners, outliers, concordance"),
        ("report", cmd_report, "emit proficiency/radar/pair/failure reports"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(func=func)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        _err(f"error: {exc}")
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
