import json
import threading

import httpx
import pytest

from silicon_survey.errors import (
    BackendError,
    CollectionError,
    ConfigurationError,
    OutOfRangeRatingError,
    ParseError,
    UnparseableRatingError,
)
from silicon_survey.gateway import (
    BackendConfig,
    RemoteBackend,
    ResponseCache,
    SyntheticBackend,
    SyntheticRespondentParams,
    TokenBucket,
    collect_responses,
    complete,
    dumps_records,
    load_records,
    make_backend,
    parse_rating,
    round_half_up,
    save_records,
    synthetic_respond,
)
from silicon_survey.personas import FramingCondition, Persona, desk_scale_spec, synthesize_population
from silicon_survey.prompts import ProbeKind, bundled_catalogs, render_prompt

CATALOGS = bundled_catalogs(["EN", "DE"])


def persona(framing=FramingCondition(True, False), country="at", pid="at-1"):
    return Persona(pid, country, 50, "female", 5, (4, 4, 4), framing)


def prompt(p=None, masked=False, probe=ProbeKind.Persuasion1):
    return render_prompt(p or persona(), CATALOGS["EN"], probe, mask_nationality=masked)


@pytest.mark.parametrize("text, value", [("5", 5), (" 7.\n", 7), ("Answer: 3 out of 7", 3), ("+2", 2)])
def test_parse_rating(text, value):
    assert parse_rating(text) == value


def test_parse_rating_unparseable():
    with pytest.raises(UnparseableRatingError):
        parse_rating("I cannot answer")


@pytest.mark.parametrize("text", ["0", "8", "-3", "12"])
def test_parse_rating_out_of_range(text):
    with pytest.raises(OutOfRangeRatingError):
        parse_rating(text)


@pytest.mark.parametrize("x, r", [(4.5, 5), (3.5, 4), (4.4999, 4), (-0.5, 0), (2.5, 3)])
def test_round_half_up(x, r):
    assert round_half_up(x) == r


def test_flat_respondent_answers_intercept():
    params = SyntheticRespondentParams()
    for probe in ProbeKind:
        assert synthetic_respond(persona(), probe, "EN", params) == 4


def test_half_point_rounds_up():
    params = SyntheticRespondentParams(lambdas={"P": {"E": 0.5}, "M": {}})
    assert synthetic_respond(persona(), ProbeKind.Persuasion1, "EN", params) == 5
    assert synthetic_respond(persona(), ProbeKind.Mobilization1, "EN", params) == 4


def test_clamped():
    params = SyntheticRespondentParams(intercept={"P": 9.0, "M": -3.0})
    assert synthetic_respond(persona(), ProbeKind.Persuasion1, "EN", params) == 7
    assert synthetic_respond(persona(), ProbeKind.Mobilization1, "EN", params) == 1


def test_country_effects_must_sum_to_zero():
    with pytest.raises(ConfigurationError):
        SyntheticRespondentParams(country={"P": {"at": 1.0}, "M": {}})


def test_backend_reads_country_from_prompt():
    params = SyntheticRespondentParams(country={"P": {"at": 2.0, "nl": -2.0}, "M": {}})
    backend = SyntheticBackend(params, CATALOGS)
    assert backend.generate(prompt()) == "6"
    assert backend.generate(prompt(masked=True)) == "4"


def test_backend_reads_deprivation_from_prompt():
    params = SyntheticRespondentParams(intercept={"P": 1.0, "M": 1.0}, lambdas={"P": {"D": 0.5}, "M": {}})
    p = Persona("nl-1", "nl", 30, "male", 3, (6, 6, 6))
    backend = SyntheticBackend(params, CATALOGS)
    assert backend.generate(render_prompt(p, CATALOGS["DE"], ProbeKind.Persuasion2)) == "4"


def test_synthetic_deterministic_across_instances():
    params = SyntheticRespondentParams(noise_sd=1.0, seed=3)
    a = [SyntheticBackend(params, CATALOGS).generate(prompt(probe=k)) for k in ProbeKind]
    b = [SyntheticBackend(params, CATALOGS).generate(prompt(probe=k)) for k in ProbeKind]
    assert a == b


def test_language_effect_scale_inverts_framing():
    params = SyntheticRespondentParams(lambdas={"P": {"E": 1.0}, "M": {}}, language_effect_scale={"DE": -1.0})
    en = render_prompt(persona(), CATALOGS["EN"], ProbeKind.Persuasion1)
    de = render_prompt(persona(), CATALOGS["DE"], ProbeKind.Persuasion1)
    backend = SyntheticBackend(params, CATALOGS)
    assert (backend.generate(en), backend.generate(de)) == ("5", "3")


class FakeClock:
    def __init__(self):
        self.now = 0.0
        self.sleeps = []

    def __call__(self):
        return self.now

    def sleep(self, dt):
        self.sleeps.append(dt)
        self.now += dt


def remote(handler, monkeypatch, **cfg):
    monkeypatch.setenv("TEST_KEY", "sk-test")
    clock = FakeClock()
    config = BackendConfig(kind="remote", api_key_env="TEST_KEY", rate_limit=1000.0, **cfg)
    backend = RemoteBackend(config, transport=httpx.MockTransport(handler), sleep=clock.sleep)
    return backend, clock


def completion(text, status=200):
    return httpx.Response(status, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


def test_remote_request_body(monkeypatch):
    seen = []

    def handler(request):
        seen.append((request.headers["authorization"], json.loads(request.content)))
        return completion("6")

    backend, _ = remote(handler, monkeypatch, system_prompt="Answer with a number.")
    assert backend.generate(prompt()) == "6"
    auth, body = seen[0]
    assert auth == "Bearer sk-test"
    assert body["model"] == "gpt-3.5-turbo-1106"
    assert body["messages"][0] == {"role": "system", "content": "Answer with a number."}
    assert body["messages"][1]["content"] == prompt().text


def test_remote_retries_with_backoff(monkeypatch):
    statuses = iter([429, 503, 200])

    def handler(request):
        status = next(statuses)
        return completion("2") if status == 200 else httpx.Response(status)

    backend, clock = remote(handler, monkeypatch, backoff=0.5)
    assert backend.generate(prompt()) == "2"
    assert backend.calls == 3
    assert clock.sleeps == [0.5, 1.0]


def test_remote_unreachable(monkeypatch):
    def handler(request):
        raise httpx.ConnectError("refused", request=request)

    backend, clock = remote(handler, monkeypatch, max_attempts=4)
    with pytest.raises(BackendError, match="4 attempts"):
        backend.generate(prompt())
    assert backend.calls == 4
    assert clock.sleeps == [1.0, 2.0, 4.0]


def test_remote_client_error_not_retried(monkeypatch):
    backend, _ = remote(lambda r: httpx.Response(401, text="bad key"), monkeypatch)
    with pytest.raises(BackendError, match="401"):
        backend.generate(prompt())
    assert backend.calls == 1


def test_remote_needs_credential(monkeypatch):
    monkeypatch.delenv("MISSING_KEY", raising=False)
    with pytest.raises(ConfigurationError, match="MISSING_KEY"):
        make_backend(BackendConfig(kind="remote", api_key_env="MISSING_KEY"))


def test_token_bucket_waits():
    clock = FakeClock()
    bucket = TokenBucket(2.0, capacity=1.0, clock=clock, sleep=clock.sleep)
    for _ in range(3):
        bucket.acquire()
    assert clock.now == pytest.approx(1.0)


def test_cache_hit_skips_backend(tmp_path, monkeypatch):
    calls = []

    def handler(request):
        calls.append(1)
        return completion("5")

    backend, _ = remote(handler, monkeypatch)
    cache = ResponseCache(tmp_path)
    assert complete(prompt(), backend, cache) == "5"
    assert complete(prompt(), backend, cache) == "5"
    assert len(calls) == 1


def test_cache_keyed_by_fingerprint(tmp_path):
    assert ResponseCache.key("x", "a") != ResponseCache.key("x", "b")


def test_cache_concurrent_writes(tmp_path):
    cache = ResponseCache(tmp_path)
    key = ResponseCache.key("p", "f")
    threads = [threading.Thread(target=cache.put, args=(key, "3")) for _ in range(16)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert cache.get(key) == "3"
    assert not list(tmp_path.rglob("*.tmp"))


def test_collect_ten_personas():
    people = synthesize_population(desk_scale_spec(0.01, seed=1))[:10]
    backend = SyntheticBackend(SyntheticRespondentParams(noise_sd=1.0), CATALOGS)
    result = collect_responses(people, CATALOGS, "EN", False, backend)
    assert len(result.records) == 50 and not result.failures


@pytest.mark.slow
def test_collect_default_population_record_count():
    from silicon_survey.personas import PopulationSpec

    people = synthesize_population(PopulationSpec(seed=0))
    backend = SyntheticBackend(SyntheticRespondentParams(), CATALOGS)
    assert len(collect_responses(people, CATALOGS, "EN", False, backend).records) == 36430


class PickyBackend(SyntheticBackend):
    def generate(self, prompt):
        if prompt.persona_id == "at-2" and prompt.probe is ProbeKind.Mobilization2:
            return "I would rather not say"
        return super().generate(prompt)


def test_terminal_failure_recorded():
    people = [persona(pid="at-1"), persona(pid="at-2")]
    backend = PickyBackend(SyntheticRespondentParams(), CATALOGS)
    result = collect_responses(people, CATALOGS, "EN", False, backend, failure_threshold=0.5)
    mine = [r for r in result.records if r.persona_id == "at-2"]
    assert len(mine) == 4
    assert [(f.persona_id, f.probe) for f in result.failures] == [("at-2", ProbeKind.Mobilization2)]


def test_failure_threshold():
    backend = PickyBackend(SyntheticRespondentParams(), CATALOGS)
    with pytest.raises(CollectionError) as err:
        collect_responses([persona(pid="at-2")], CATALOGS, "EN", False, backend)
    assert len(err.value.failures) == 1


def test_concurrency_does_not_change_output():
    people = synthesize_population(desk_scale_spec(0.02, seed=4))
    backend = SyntheticBackend(SyntheticRespondentParams(noise_sd=1.0, seed=8), CATALOGS)
    serial = collect_responses(people, CATALOGS, "EN", True, backend)
    parallel = collect_responses(people, CATALOGS, "EN", True, backend, concurrency=8)
    assert dumps_records(serial.records) == dumps_records(parallel.records)


def test_records_round_trip(tmp_path):
    people = synthesize_population(desk_scale_spec(0.01, seed=2))
    backend = SyntheticBackend(SyntheticRespondentParams(noise_sd=1.0), CATALOGS)
    records = collect_responses(people, CATALOGS, "DE", False, backend).records
    save_records(records, tmp_path / "r.jsonl")
    assert load_records(tmp_path / "r.jsonl") == records


def test_records_parse_error_line(tmp_path):
    path = tmp_path / "r.jsonl"
    path.write_text('{"persona_id": "a"}\n')
    with pytest.raises(ParseError, match="line 1"):
        load_records(path)


def test_missing_catalog_for_language():
    with pytest.raises(ConfigurationError):
        collect_responses([persona()], CATALOGS, "FR", False, SyntheticBackend(SyntheticRespondentParams()))


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigurationError):
        BackendConfig.from_dict({"kind": "synthetic", "temprature": 0.5})
