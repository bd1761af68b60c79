"""Catalog loading, validation, and pair queries."""

from pathlib import Path

import pytest

from libready import catalog as cat

SAMPLE = Path(__file__).parent.parent / "src" / "libready" / "data" / "sample_catalog.yaml"


def write_catalog(tmp_path, text):
    path = tmp_path / "catalog.yaml"
    path.write_text(text)
    return path


MINIMAL = """
version: "1"
scenarios:
  - id: viz
    name: Visualization
libraries:
  - id: alpha
    display_name: Alpha
    import_names: [alpha]
    scenario_ids: [viz]
  - id: beta
    display_name: Beta
    import_names: [beta]
    scenario_ids: [viz]
pairs:
  - {scenario_id: viz, lib_a: alpha, lib_b: beta}
"""


class TestLoad:
    def test_sample_catalog_loads(self):
        loaded = cat.load_catalog(SAMPLE)
        assert len(loaded.scenarios) == 2
        assert len(loaded.libraries) == 4
        assert len(loaded.pairs) == 2

    def test_minimal_roundtrip_identity(self, tmp_path):
        loaded = cat.load_catalog(write_catalog(tmp_path, MINIMAL))
        text = cat.serialize_catalog(loaded)
        reloaded = cat.load_catalog(write_catalog(tmp_path, text))
        assert reloaded == loaded

    def test_unknown_scenario_reference(self, tmp_path):
        bad = MINIMAL.replace("scenario_ids: [viz]", "scenario_ids: [viz9]", 1)
        with pytest.raises(cat.CatalogReferenceError):
            cat.load_catalog(write_catalog(tmp_path, bad))

    def test_empty_file_is_parse_error(self, tmp_path):
        with pytest.raises(cat.CatalogParseError):
            cat.load_catalog(write_catalog(tmp_path, ""))

    def test_missing_file_is_parse_error(self, tmp_path):
        with pytest.raises(cat.CatalogParseError):
            cat.load_catalog(tmp_path / "nope.yaml")

    def test_uppercase_id_rejected(self, tmp_path):
        bad = MINIMAL.replace("id: alpha", "id: Alpha")
        with pytest.raises(cat.CatalogParseError):
            cat.load_catalog(write_catalog(tmp_path, bad))

    def test_pair_with_unknown_library(self, tmp_path):
        bad = MINIMAL.replace("lib_b: beta", "lib_b: gamma")
        with pytest.raises(cat.CatalogReferenceError):
            cat.load_catalog(write_catalog(tmp_path, bad))

    def test_entries_sorted_by_id(self, tmp_path):
        loaded = cat.load_catalog(write_catalog(tmp_path, MINIMAL))
        assert [l.id for l in loaded.libraries] == sorted(l.id for l in loaded.libraries)


class TestValidate:
    def test_ready_catalog_is_clean(self, tmp_path):
        loaded = cat.load_catalog(write_catalog(tmp_path, MINIMAL))
        assert cat.validate_catalog(loaded) == []

    def test_single_library_scenario_flagged(self, tmp_path):
        text = """
version: "1"
scenarios:
  - {id: solo, name: Solo}
libraries:
  - {id: only, display_name: Only, import_names: [only], scenario_ids: [solo]}
pairs: []
"""
        loaded = cat.load_catalog(write_catalog(tmp_path, text))
        violations = cat.validate_catalog(loaded)
        assert [v.kind for v in violations] == ["too_few_competitors"]

    def test_pair_membership_violation(self, tmp_path):
        text = """
version: "1"
scenarios:
  - {id: viz, name: Viz}
  - {id: web, name: Web}
libraries:
  - {id: alpha, display_name: Alpha, import_names: [alpha], scenario_ids: [viz]}
  - {id: beta, display_name: Beta, import_names: [beta], scenario_ids: [viz]}
  - {id: gamma, display_name: Gamma, import_names: [gamma], scenario_ids: [web]}
  - {id: delta, display_name: Delta, import_names: [delta], scenario_ids: [web]}
pairs:
  - {scenario_id: viz, lib_a: alpha, lib_b: gamma}
"""
        loaded = cat.load_catalog(write_catalog(tmp_path, text))
        kinds = [v.kind for v in cat.validate_catalog(loaded)]
        assert "pair_membership" in kinds

    def test_validation_is_pure(self, tmp_path):
        loaded = cat.load_catalog(write_catalog(tmp_path, MINIMAL))
        assert cat.validate_catalog(loaded) == cat.validate_catalog(loaded)


class TestCompetingPairs:
    def test_reversed_duplicate_canonicalized(self, tmp_path):
        text = MINIMAL + "  - {scenario_id: viz, lib_a: beta, lib_b: alpha}\n"
        loaded = cat.load_catalog(write_catalog(tmp_path, text))
        pairs = cat.competing_pairs(loaded, "viz")
        assert pairs == [cat.CompetingPair("viz", "alpha", "beta")]

    def test_multiple_pairs_sorted(self, tmp_path):
        text = """
version: "1"
scenarios:
  - {id: viz, name: Viz}
libraries:
  - {id: alpha, display_name: Alpha, import_names: [alpha], scenario_ids: [viz]}
  - {id: beta, display_name: Beta, import_names: [beta], scenario_ids: [viz]}
  - {id: gamma, display_name: Gamma, import_names: [gamma], scenario_ids: [viz]}
pairs:
  - {scenario_id: viz, lib_a: gamma, lib_b: alpha}
  - {scenario_id: viz, lib_a: alpha, lib_b: beta}
"""
        loaded = cat.load_catalog(write_catalog(tmp_path, text))
        pairs = cat.competing_pairs(loaded, "viz")
        assert [(p.lib_a, p.lib_b) for p in pairs] == [("alpha", "beta"), ("alpha", "gamma")]

    def test_unknown_scenario_raises(self, tmp_path):
        loaded = cat.load_catalog(write_catalog(tmp_path, MINIMAL))
        with pytest.raises(KeyError):
            cat.competing_pairs(loaded, "nope")

    def test_members_claim_scenario(self):
        loaded = cat.load_catalog(SAMPLE)
        for scenario in loaded.scenarios:
            for pair in cat.competing_pairs(loaded, scenario.id):
                for lid in (pair.lib_a, pair.lib_b):
                    assert scenario.id in loaded.library(lid).scenario_ids
