import json
from collections import Counter

import pytest

from silicon_survey.countries import COUNTRY_LANGUAGE, LANGUAGES
from silicon_survey.errors import ConfigurationError
from silicon_survey.experiments import (
    LanguagePlan,
    derive_seed,
    reference_params,
    resolve_language,
    resolve_languages,
    run_experiment1,
    run_experiment2,
    run_experiment3,
    run_pipeline,
    shuffle_country_languages,
    shuffle_full,
)
from silicon_survey.gateway import SyntheticBackend, SyntheticRespondentParams
from silicon_survey.personas import Persona, desk_scale_spec, synthesize_population
from silicon_survey.prompts import bundled_catalogs
from silicon_survey.stats import RepetitionSummary

CATALOGS = bundled_catalogs()


@pytest.fixture(scope="module")
def people():
    return synthesize_population(desk_scale_spec(0.05, seed=21))


def backend(**kw):
    return SyntheticBackend(reference_params(noise_sd=1.0, seed=2, **kw), CATALOGS)


def one(country):
    return Persona(f"{country}-1", country, 30, "male", 3, (3, 3, 3))


def test_monolingual_greek_gets_english():
    assert resolve_language(one("gr"), LanguagePlan("monolingual", "EN")) == "EN"


@pytest.mark.parametrize("country, code", [("il", "IW"), ("ch", "DE"), ("uk", "EN"), ("po", "PL")])
def test_native(country, code):
    assert resolve_language(one(country), LanguagePlan("native", None)) == code


def test_native_unmapped_country():
    plan = LanguagePlan("native", None, country_language_map={"at": "DE"})
    with pytest.raises(ConfigurationError):
        resolve_language(one("nl"), plan)


def test_plan_validation():
    with pytest.raises(ConfigurationError):
        LanguagePlan("monolingual", "XX")
    with pytest.raises(ConfigurationError):
        LanguagePlan("country_shuffled", None)
    with pytest.raises(ConfigurationError):
        LanguagePlan("sideways", "EN")


def test_full_shuffle_needs_population():
    with pytest.raises(ConfigurationError):
        resolve_language(one("nl"), LanguagePlan("full_shuffled", None, seed=1))


@pytest.mark.parametrize("seed", range(25))
def test_country_shuffle_multiplicities(seed):
    shuffled = shuffle_country_languages(COUNTRY_LANGUAGE, seed)
    counts = Counter(shuffled.values())
    assert sorted(shuffled) == sorted(COUNTRY_LANGUAGE)
    assert sum(v == 3 for v in counts.values()) == 1 and sum(v == 2 for v in counts.values()) == 1
    assert set(counts) == set(LANGUAGES)


def test_country_shuffle_seeds_differ():
    assert shuffle_country_languages(COUNTRY_LANGUAGE, 1) != shuffle_country_languages(COUNTRY_LANGUAGE, 2)


def test_full_shuffle_single_language_is_identity(people):
    native = {p.id: "EN" for p in people}
    assert shuffle_full(people, native, 5) == native


def test_full_shuffle_preserves_distribution(people):
    native = resolve_languages(people, LanguagePlan("native", None))
    shuffled = resolve_languages(people, LanguagePlan("full_shuffled", None, seed=3))
    assert Counter(shuffled.values()) == Counter(native.values())
    assert shuffled != native


def test_derive_seed_independent():
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    assert len({derive_seed(0, 1, r) for r in range(100)}) == 100


class WatchingBackend(SyntheticBackend):
    def __init__(self, params, catalogs, manifest):
        super().__init__(params, catalogs)
        self.manifest = manifest
        self.seen_manifest = None
        self.calls = 0

    def generate(self, prompt):
        if self.seen_manifest is None:
            self.seen_manifest = self.manifest.exists()
        self.calls += 1
        return super().generate(prompt)


def test_manifest_written_before_traffic(tmp_path, people):
    b = WatchingBackend(reference_params(seed=1), CATALOGS, tmp_path / "manifest.json")
    result = run_pipeline(people, CATALOGS, b, LanguagePlan(), out_dir=tmp_path, n_perm=99)
    assert b.seen_manifest is True
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["finished"] is not None
    assert manifest["population_digest"] == result.manifest.population_digest
    assert manifest["backend"] == b.fingerprint
    assert {p.name for p in tmp_path.iterdir()} == {
        "manifest.json", "responses.jsonl", "scores.csv", "coefficients.json", "report.json"}


def test_experiment1_reports(tmp_path, people):
    reports = run_experiment1(people, CATALOGS, backend(), out_dir=tmp_path, n_perm=99)
    assert set(reports) == {"masked", "unmasked"}
    assert reports["unmasked"].pooled["country"] > reports["masked"].pooled["country"]
    assert reports["masked"].meta["masked"] is True
    again = run_experiment1(people, CATALOGS, backend(), n_perm=99)
    assert {k: r.dumps() for k, r in again.items()} == {k: r.dumps() for k, r in reports.items()}


def test_experiment2_languages(tmp_path, people):
    reports = run_experiment2(people, CATALOGS, backend(), out_dir=tmp_path, n_perm=99)
    assert list(reports) == list(LANGUAGES)
    for code, r in reports.items():
        assert r.meta["plan"]["code"] == code
        assert set(r.p_values) == set(r.pooled)
    chart = json.loads((tmp_path / "chart_exp2.json").read_text())
    assert len(chart["bars"]) == 24


def test_experiment2_checks_catalogs_before_traffic(people):
    b = WatchingBackend(reference_params(seed=1), CATALOGS, None)
    partial = {k: v for k, v in CATALOGS.items() if k != "SV"}
    with pytest.raises(ConfigurationError, match="SV"):
        run_experiment2(people, partial, b, n_perm=99)
    assert b.calls == 0


def test_language_effects_track_injected_bias(people):
    # French prompts flip every framing/deprivation effect; Dutch ones leave them intact.
    b = backend(language_effect_scale={"FR": -1.0, "NL": 1.0})
    reports = run_experiment2(people, CATALOGS, b, n_perm=0, languages=("NL", "FR"))
    assert reports["FR"].pooled["framing"] < 0.5 < reports["NL"].pooled["framing"]
    assert reports["FR"].pooled["country"] == pytest.approx(reports["NL"].pooled["country"], abs=0.05)


def test_experiment3(tmp_path, people):
    mono = run_experiment1(people, CATALOGS, backend(), n_perm=0)["unmasked"]
    result = run_experiment3(people, CATALOGS, backend(), reps=3, out_dir=tmp_path, n_perm=99, monolingual=mono)
    assert result.country_shuffled.reps == 3 and result.full_shuffled.reps == 3
    native = result.language_counts["native"][0]
    assert all(c == native for c in result.language_counts["full_shuffled"])
    assert len(json.loads((tmp_path / "chart_exp3.json").read_text())["bars"]) == 8
    saved = RepetitionSummary.from_json(json.loads((tmp_path / "full_shuffled_summary.json").read_text()))
    assert saved.values == result.full_shuffled.values


def test_experiment3_single_rep_is_degenerate(people):
    result = run_experiment3(people, CATALOGS, backend(), reps=1, n_perm=0)
    assert result.country_shuffled.degenerate
    assert result.country_shuffled.sd["country"] == 0.0


def test_experiment3_rejects_zero_reps(people):
    with pytest.raises(ConfigurationError):
        run_experiment3(people, CATALOGS, backend(), reps=0)


def test_reference_params_sum_to_zero():
    params = reference_params()
    for o in "PM":
        assert abs(sum(params.country[o].values())) < 1e-12


def test_null_respondent_pipeline(people):
    b = SyntheticBackend(SyntheticRespondentParams(noise_sd=1.0, seed=4), CATALOGS)
    result = run_pipeline(people, CATALOGS, b, LanguagePlan("monolingual", "IT"), n_perm=99, seed=1)
    assert 0.3 < result.report.pooled["all"] < 0.7
    assert result.language_counts == {"IT": len(people)}
