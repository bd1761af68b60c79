"""CLI stage tests: wiring, resumability, strategies, and error exits."""

import json
import shutil
from pathlib import Path

import pytest

from libready import cli
from libready.archive import read_jsonl

DATA = Path(__file__).parent.parent / "src" / "libready" / "data"


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    shutil.copy(DATA / "sample_catalog.yaml", tmp_path / "catalog.yaml")
    shutil.copy(DATA / "sample_tasks.yaml", tmp_path / "tasks.yaml")
    monkeypatch.chdir(tmp_path)
    return tmp_path


def common_args(models="mock:coder-a", reps=2, seed=11, out="runs", **extra):
    args = [
        "--catalog", "catalog.yaml",
        "--tasks", "tasks.yaml",
        "--models", models,
        "--reps", str(reps),
        "--seed", str(seed),
        "--mock",
        "--out", out,
    ]
    for key, value in extra.items():
        args += [f"--{key.replace('_', '-')}", str(value)]
    return args


def run_stages(stages, **kwargs):
    for stage in stages:
        code = cli.main([stage] + common_args(**kwargs))
        assert code == 0, f"stage {stage} failed"


def only_run_dir(base="runs"):
    dirs = list(Path(base).iterdir())
    assert len(dirs) == 1
    return dirs[0]


class TestCatalogValidate:
    def test_valid_catalog_exit_0(self, workdir):
        assert cli.main(["catalog-validate", "--catalog", "catalog.yaml"]) == 0

    def test_violations_exit_1(self, workdir, capsys):
        (workdir / "bad.yaml").write_text(
            "version: '1'\n"
            "scenarios:\n  - {id: solo, name: Solo}\n"
            "libraries:\n"
            "  - {id: only, display_name: O, import_names: [o], scenario_ids: [solo]}\n"
            "pairs: []\n"
        )
        assert cli.main(["catalog-validate", "--catalog", "bad.yaml"]) == 1
        assert "too_few_competitors" in capsys.readouterr().out

    def test_missing_file_exit_2(self, workdir):
        assert cli.main(["catalog-validate", "--catalog", "missing.yaml"]) == 2


class TestTasks:
    def test_mock_generation_populates_store(self, workdir):
        code = cli.main(
            ["tasks"] + common_args() + ["--count", "3", "--tasks", "fresh.yaml"]
        )
        assert code == 0
        from libready.promptgen import load_task_store

        store = load_task_store("fresh.yaml")
        validated = [t for t in store.tasks if t.validated]
        assert len(validated) == 6  # 3 per scenario

    def test_resume_skips_complete_scenarios(self, workdir, capsys):
        args = ["tasks"] + common_args() + ["--count", "2", "--tasks", "fresh.yaml"]
        assert cli.main(args) == 0
        capsys.readouterr()
        assert cli.main(args) == 0
        out = capsys.readouterr().out
        assert out.count("already complete") == 2

    def test_all_candidates_rejected_exits_3(self, workdir, monkeypatch):
        def always_rejected(gw, scenario, candidate, libraries):
            return promptgen_mod.TaskDescription(
                id=candidate.id,
                scenario_id=candidate.scenario_id,
                text=candidate.text,
                validated=False,
                provenance=candidate.provenance,
                attempts=4,
            )

        from libready import promptgen as promptgen_mod

        monkeypatch.setattr(
            promptgen_mod, "validate_task_description", always_rejected
        )
        code = cli.main(
            ["tasks"] + common_args() + ["--count", "2", "--tasks", "fresh.yaml"]
        )
        assert code == cli.EXIT_TASKS_EXHAUSTED


class TestRunStage:
    def test_record_count(self, workdir):
        run_stages(["run"])
        run_dir = only_run_dir()
        records = list(read_jsonl(next((run_dir / "generations").iterdir())))
        assert len(records) == 16  # 8 prompts x 2 reps

    def test_rerun_uses_cache(self, workdir, capsys):
        run_stages(["run"])
        capsys.readouterr()
        run_stages(["run"])
        assert "(16 cached, 0 new, 0 errors)" in capsys.readouterr().out

    def test_manifest_and_prompts_written(self, workdir):
        run_stages(["run"])
        run_dir = only_run_dir()
        manifest = json.loads((run_dir / "manifest.json").read_text())
        assert manifest["models"] == ["mock:coder-a"]
        assert (run_dir / "prompts.jsonl").exists()

    def test_missing_tasks_store_exit(self, workdir):
        code = cli.main(["run"] + common_args(tasks="absent.yaml"))
        assert code == cli.EXIT_BAD_INPUT

    def test_requires_models(self, workdir):
        assert cli.main(["run"] + common_args(models="")) == cli.EXIT_BAD_INPUT


class TestJudgeStage:
    def test_judge_before_run_exits_4(self, workdir):
        assert cli.main(["judge"] + common_args()) == cli.EXIT_MISSING_UPSTREAM

    def test_verdicts_written_for_all_ok_records(self, workdir):
        run_stages(["run", "judge"])
        run_dir = only_run_dir()
        verdicts = list(read_jsonl(next((run_dir / "verdicts").iterdir())))
        assert len(verdicts) == 16
        assert all(set(v["scores"]) == {
            "functional", "time_complexity", "space_complexity", "reliability"
        } for v in verdicts)

    def test_rejudge_skips_cached(self, workdir, capsys):
        run_stages(["run", "judge"])
        capsys.readouterr()
        run_stages(["judge"])
        assert "judged 0 new records (16 cached" in capsys.readouterr().out

    def test_judge_model_is_an_explicit_choice_without_mock(self, workdir, capsys):
        run_stages(["run"])
        args = [a for a in common_args() if a != "--mock"]
        assert cli.main(["judge"] + args) == cli.EXIT_BAD_INPUT
        assert "judge model" in capsys.readouterr().err


class TestScoreStage:
    def test_score_before_judge_reports_missing_verdicts(self, workdir, capsys):
        run_stages(["run"])
        code = cli.main(["score"] + common_args())
        assert code == cli.EXIT_MISSING_UPSTREAM
        assert "missing verdicts" in capsys.readouterr().err

    def test_scored_records_have_quality(self, workdir):
        run_stages(["run", "judge", "score"])
        run_dir = only_run_dir()
        scored = list(read_jsonl(next((run_dir / "scores").iterdir())))
        assert len(scored) == 16
        with_quality = [s for s in scored if s["quality"] is not None]
        assert with_quality, "at least some records must be scoreable"
        for s in with_quality:
            assert set(s["quality"]) == set(
                ("functional", "performance", "maintainability", "usability", "reliability")
            )
            assert s["overall"] == pytest.approx(
                sum(s["quality"].values()) / 5, abs=1e-9
            )

    def test_rescoring_is_idempotent(self, workdir):
        run_stages(["run", "judge", "score"])
        run_dir = only_run_dir()
        scores_path = next((run_dir / "scores").iterdir())
        first = scores_path.read_bytes()
        run_stages(["score"])
        assert scores_path.read_bytes() == first

    def test_regen_selects_one_per_group(self, workdir):
        kwargs = dict(reps=1, strategy="regen", regen_k="3")
        run_stages(["run", "judge", "score"], **kwargs)
        run_dir = only_run_dir()
        scored = list(read_jsonl(next((run_dir / "scores").iterdir())))
        assert len(scored) == 24  # 8 prompts x 1 rep x 3 candidates
        selected = [s for s in scored if s["selected"]]
        assert len(selected) == 8
        by_prompt = {}
        for s in scored:
            by_prompt.setdefault(s["prompt_id"], []).append(s)
        for members in by_prompt.values():
            winner = next(s for s in members if s["selected"])
            best = max(
                (s["overall"] for s in members if s["overall"] is not None)
            )
            assert winner["overall"] == best


class TestAnalyzeAndReport:
    def test_full_pipeline_artifacts(self, workdir):
        run_stages(
            ["run", "judge", "score", "analyze", "report"],
            models="mock:coder-a,mock:coder-b",
            reps=3,
        )
        run_dir = only_run_dir()
        for name in (
            "proficiency.csv",
            "radar.json",
            "pairs.json",
            "pairs.md",
            "failures.json",
            "analysis/summary.json",
            "analysis/concordance.json",
            "analysis/winners.json",
            "analysis/low_quality.json",
        ):
            assert (run_dir / name).exists(), name

    def test_analyze_before_score_exits_4(self, workdir):
        run_stages(["run"])
        assert cli.main(["analyze"] + common_args()) == cli.EXIT_MISSING_UPSTREAM

    def test_report_before_analyze_exits_4(self, workdir):
        run_stages(["run", "judge", "score"])
        assert cli.main(["report"] + common_args()) == cli.EXIT_MISSING_UPSTREAM

    def test_proficiency_rows_cover_all_cells(self, workdir):
        run_stages(
            ["run", "judge", "score", "analyze", "report"],
            models="mock:coder-a,mock:coder-b",
            reps=3,
        )
        run_dir = only_run_dir()
        lines = (run_dir / "proficiency.csv").read_text().splitlines()[1:]
        cells = {tuple(l.split(",")[:3]) for l in lines}
        assert len(cells) == 8  # 4 libraries x 2 models

    def test_radar_has_five_axes_per_model(self, workdir):
        run_stages(
            ["run", "judge", "score", "analyze", "report"],
            models="mock:coder-a,mock:coder-b",
            reps=3,
        )
        doc = json.loads((only_run_dir() / "radar.json").read_text())
        assert len(doc["models"]) == 2
        for record in doc["models"]:
            assert len(record["axes"]) == 5
