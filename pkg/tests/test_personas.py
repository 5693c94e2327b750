import json
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from silicon_survey.countries import COUNTRIES
from silicon_survey.errors import ConfigurationError, ParseError
from silicon_survey.personas import (
    FramingCondition,
    Persona,
    PopulationSpec,
    assign_framing,
    desk_scale_spec,
    dumps_population,
    load_population,
    persona_to_json,
    save_population,
    synthesize_population,
)


@pytest.fixture(scope="module")
def full_population():
    return synthesize_population(PopulationSpec(seed=11))


def test_default_population_matches_appendix_counts(full_population):
    counts = Counter(p.country for p in full_population)
    assert len(full_population) == 7286
    assert counts["at"] == 529
    assert counts["ro"] == 659
    assert set(counts) == set(COUNTRIES)


def test_framing_balanced_overall(full_population):
    counts = Counter(p.framing for p in full_population)
    assert sorted(counts.values()) == [1821, 1821, 1822, 1822]


def test_framing_balanced_within_austria(full_population):
    counts = Counter(p.framing for p in full_population if p.country == "at")
    assert set(counts.values()) <= {132, 133}
    assert sum(counts.values()) == 529


def test_four_personas_get_each_condition_once():
    people = synthesize_population(PopulationSpec(per_country_counts={"nl": 4}, seed=3))
    assert Counter(p.framing for p in people) == Counter(FramingCondition.all())


def test_single_persona_is_deterministic():
    spec = PopulationSpec(per_country_counts={"at": 1}, seed=99)
    assert synthesize_population(spec) == synthesize_population(spec)


def test_different_seeds_differ():
    a = synthesize_population(desk_scale_spec(0.05, seed=1))
    b = synthesize_population(desk_scale_spec(0.05, seed=2))
    assert a != b


@pytest.mark.parametrize(
    "counts, items",
    [({}, 3), ({"at": 0}, 3), ({"xx": 5}, 3), ({"at": 5}, 0)],
)
def test_invalid_spec(counts, items):
    with pytest.raises(ConfigurationError):
        synthesize_population(PopulationSpec(per_country_counts=counts, deprivation_item_count=items))


def test_deprivation_is_mean_of_ratings():
    p = Persona("x", "nl", 40, "female", 3, (2, 3, 7))
    assert p.deprivation == 4.0


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.sampled_from(COUNTRIES), st.integers(1, 40), min_size=1), st.integers(0, 2**32))
def test_assignment_stratified(counts, seed):
    people = synthesize_population(PopulationSpec(per_country_counts=counts, seed=seed))
    overall = Counter(p.framing for p in people)
    assert max(overall.values()) - min(overall.get(c, 0) for c in FramingCondition.all()) <= 1
    for country in counts:
        local = Counter(p.framing for p in people if p.country == country)
        values = [local.get(c, 0) for c in FramingCondition.all()]
        assert max(values) - min(values) <= 1


def test_assign_framing_rejects_empty():
    with pytest.raises(ValueError):
        assign_framing([], seed=0)


def test_round_trip(tmp_path, full_population):
    path = tmp_path / "pop.jsonl"
    save_population(full_population, path)
    assert load_population(path) == full_population


def _write(tmp_path, objs):
    path = tmp_path / "bad.jsonl"
    path.write_text("".join(json.dumps(o) + "\n" for o in objs))
    return path


def test_rating_out_of_range_is_parse_error(tmp_path):
    good = persona_to_json(Persona("a", "nl", 40, "male", 3, (2, 3, 4)))
    bad = dict(good, id="b", deprivation_ratings=[8, 3, 4])
    with pytest.raises(ParseError, match="line 2"):
        load_population(_write(tmp_path, [good, bad]))


def test_unknown_country_is_parse_error(tmp_path):
    bad = dict(persona_to_json(Persona("a", "nl", 40, "male", 3, (2, 3, 4))), country="zz")
    with pytest.raises(ParseError, match="line 1"):
        load_population(_write(tmp_path, [bad]))


def test_duplicate_id_is_parse_error(tmp_path):
    good = persona_to_json(Persona("a", "nl", 40, "male", 3, (2, 3, 4)))
    with pytest.raises(ParseError, match="duplicate"):
        load_population(_write(tmp_path, [good, good]))


def test_serialisation_is_stable():
    people = synthesize_population(desk_scale_spec(0.02, seed=5))
    assert dumps_population(people) == dumps_population(list(people))
