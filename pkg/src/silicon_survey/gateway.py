"""Respondent backends: a remote chat-completion service and a synthetic oracle.

Both backends turn a :class:`RenderedPrompt` into raw text; :func:`parse_rating`
turns that text into a 1..7 integer. Responses are cached on disk keyed by a
digest of the prompt text and the backend fingerprint, so interrupted runs
resume without re-querying.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import NormalDist
from typing import Iterable, Mapping, Sequence

import httpx

from .countries import COUNTRIES
from .errors import (
    BackendError,
    CollectionError,
    ConfigurationError,
    OutOfRangeRatingError,
    ParseError,
    RatingParseError,
    UnparseableRatingError,
)
from .personas import Persona
from .prompts import (
    LanguageCatalog,
    ProbeKind,
    RenderedPrompt,
    bundled_catalog,
    read_deprivation_ratings,
    read_visible_country,
    render_all_probes,
)

logger = logging.getLogger(__name__)

TERMS = ("D", "E", "I", "EI", "DE", "DI", "DEI")
OUTCOMES = ("P", "M")
DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
DEFAULT_MODEL = "gpt-3.5-turbo-1106"


@dataclass
class BackendConfig:
    kind: str = "synthetic"
    endpoint: str = DEFAULT_ENDPOINT
    model: str = DEFAULT_MODEL
    # Sampling settings of the original runs are unknown; temperature 1.0 is the API default.
    temperature: float = 1.0
    max_tokens: int = 4
    system_prompt: str | None = None
    max_attempts: int = 5
    backoff: float = 1.0
    rate_limit: float = 3.0
    timeout: float = 30.0
    concurrency: int = 1
    cache_dir: str | None = None
    api_key_env: str = "OPENAI_API_KEY"
    failure_threshold: float = 0.05

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.kind not in ("remote", "synthetic"):
            raise ConfigurationError(f"unknown backend kind {self.kind!r}")
        if self.temperature < 0:
            raise ConfigurationError("temperature must be >= 0")
        if self.max_attempts < 1:
            raise ConfigurationError("max_attempts must be >= 1")
        if self.rate_limit <= 0:
            raise ConfigurationError("rate_limit must be positive")
        if self.concurrency < 1:
            raise ConfigurationError("concurrency must be >= 1")

    @classmethod
    def from_dict(cls, data: Mapping) -> "BackendConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown backend config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class SyntheticRespondentParams:
    """Ground-truth coefficients for a respondent that follows the linear model exactly.

    ``country`` maps outcome -> {country: effect}; effects must sum to zero per
    outcome. ``lambdas`` maps outcome -> {term: coefficient} over ``TERMS``.
    ``language_bias`` adds a constant per prompt language. ``language_effect_scale``
    multiplies every framing/deprivation term for prompts in that language
    (1.0 when absent), which lets a language degrade or invert those effects.
    """

    intercept: Mapping[str, float] = field(default_factory=lambda: {"P": 4.0, "M": 4.0})
    country: Mapping[str, Mapping[str, float]] = field(default_factory=lambda: {"P": {}, "M": {}})
    lambdas: Mapping[str, Mapping[str, float]] = field(default_factory=lambda: {"P": {}, "M": {}})
    language_bias: Mapping[str, float] = field(default_factory=dict)
    language_effect_scale: Mapping[str, float] = field(default_factory=dict)
    noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.noise_sd < 0:
            raise ConfigurationError("noise_sd must be >= 0")
        for outcome in OUTCOMES:
            effects = self.country.get(outcome, {})
            unknown = set(effects) - set(COUNTRIES)
            if unknown:
                raise ConfigurationError(f"unknown countries in {outcome} effects: {sorted(unknown)}")
            if effects and abs(sum(effects.values())) > 1e-9:
                raise ConfigurationError(
                    f"{outcome} country effects must sum to zero (got {sum(effects.values()):.3g})"
                )
            bad = set(self.lambdas.get(outcome, {})) - set(TERMS)
            if bad:
                raise ConfigurationError(f"unknown terms {sorted(bad)}")

    def lam(self, outcome: str, term: str) -> float:
        return float(self.lambdas.get(outcome, {}).get(term, 0.0))

    def to_json(self) -> dict:
        return json.loads(json.dumps(asdict(self), sort_keys=True))

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return "synthetic:" + hashlib.sha256(blob.encode()).hexdigest()[:16]


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def synthetic_mean(
    params: SyntheticRespondentParams,
    outcome: str,
    D: float,
    E: int,
    I: int,  # noqa: E741
    country: str | None,
    language_code: str | None = None,
) -> float:
    """Pre-noise mean rating; ``country=None`` means the respondent cannot see it."""
    features = {"D": D, "E": E, "I": I, "EI": E * I, "DE": D * E, "DI": D * I, "DEI": D * E * I}
    scale = params.language_effect_scale.get(language_code, 1.0) if language_code else 1.0
    mu = float(params.intercept.get(outcome, 0.0))
    if country is not None:
        mu += float(params.country.get(outcome, {}).get(country, 0.0))
    mu += scale * sum(params.lam(outcome, t) * features[t] for t in TERMS)
    if language_code:
        mu += float(params.language_bias.get(language_code, 0.0))
    return mu


_STD_NORMAL = NormalDist()


def seeded_normal(seed: int, persona_id: str, probe: ProbeKind) -> float:
    """Standard normal draw that depends only on (seed, persona, probe)."""
    digest = hashlib.blake2b(f"{seed}|{persona_id}|{probe.value}".encode(), digest_size=8).digest()
    u = (int.from_bytes(digest, "big") + 0.5) / 2.0**64
    return _STD_NORMAL.inv_cdf(u)


def _respond(params, persona_id, probe, D, E, I, country, language_code) -> int:  # noqa: E741
    mu = synthetic_mean(params, probe.outcome, D, E, I, country, language_code)
    if params.noise_sd > 0:
        mu += params.noise_sd * seeded_normal(params.seed, persona_id, probe)
    return min(7, max(1, round_half_up(mu)))


def synthetic_respond(
    persona: Persona,
    probe: ProbeKind,
    language_code: str | None,
    params: SyntheticRespondentParams,
    country_visible: bool = True,
) -> int:
    return _respond(
        params,
        persona.id,
        ProbeKind(probe),
        persona.deprivation,
        persona.framing.E,
        persona.framing.I,
        persona.country if country_visible else None,
        language_code,
    )


_INT_RE = re.compile(r"[-+]?\d+")


def parse_rating(text: str) -> int:
    m = _INT_RE.search(text or "")
    if m is None:
        raise UnparseableRatingError(f"no integer in response {text!r}")
    value = int(m.group())
    if not 1 <= value <= 7:
        raise OutOfRangeRatingError(f"rating {value} outside 1..7 in response {text!r}")
    return value


def format_rating(rating: int) -> str:
    return str(int(rating))


class SyntheticBackend:
    """Deterministic respondent that reads the rendered questionnaire text.

    The country effect applies only when the country-of-residence line is
    present in the prompt, and D is recomputed from the ratings printed in the
    deprivation block, so masking affects this backend exactly as it would a
    language model.
    """

    def __init__(self, params: SyntheticRespondentParams, catalogs: Mapping[str, LanguageCatalog] | None = None):
        self.params = params
        self.catalogs = dict(catalogs or {})
        self.fingerprint = params.fingerprint()

    def _catalog(self, code: str) -> LanguageCatalog:
        if code not in self.catalogs:
            self.catalogs[code] = bundled_catalog(code)
        return self.catalogs[code]

    def generate(self, prompt: RenderedPrompt) -> str:
        catalog = self._catalog(prompt.language_code)
        ratings = read_deprivation_ratings(prompt.text, catalog)
        if not ratings:
            raise BackendError(f"no deprivation ratings found in prompt for {prompt.persona_id}")
        country = read_visible_country(prompt.text, catalog)
        rating = _respond(
            self.params,
            prompt.persona_id,
            prompt.probe,
            sum(ratings) / len(ratings),
            prompt.framing.E,
            prompt.framing.I,
            country,
            prompt.language_code,
        )
        return format_rating(rating)


class TokenBucket:
    def __init__(self, rate: float, capacity: float | None = None, clock=time.monotonic, sleep=time.sleep):
        self.rate = float(rate)
        self.capacity = float(capacity if capacity is not None else max(1.0, rate))
        self._tokens = self.capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


class RemoteBackend:
    """Chat-completion client with retries, exponential backoff and rate limiting."""

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None, sleep=time.sleep):
        self.config = config
        self.api_key = os.environ.get(config.api_key_env)
        if not self.api_key:
            raise ConfigurationError(f"environment variable {config.api_key_env} is not set")
        self._sleep = sleep
        self._client = httpx.Client(transport=transport, timeout=config.timeout)
        self._bucket = TokenBucket(config.rate_limit, sleep=sleep)
        self.fingerprint = (
            f"remote:{config.model}:temperature={config.temperature:g}:max_tokens={config.max_tokens}"
        )
        self.calls = 0

    def request_body(self, prompt: RenderedPrompt) -> dict:
        messages = []
        if self.config.system_prompt:
            messages.append({"role": "system", "content": self.config.system_prompt})
        messages.append({"role": "user", "content": prompt.text})
        return {
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }

    def generate(self, prompt: RenderedPrompt) -> str:
        body = self.request_body(prompt)
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last = None
        for attempt in range(self.config.max_attempts):
            if attempt:
                self._sleep(self.config.backoff * 2 ** (attempt - 1))
            self._bucket.acquire()
            self.calls += 1
            try:
                resp = self._client.post(self.config.endpoint, json=body, headers=headers)
            except httpx.TransportError as exc:
                last = f"transport error: {exc!r}"
                logger.warning("attempt %d for %s failed: %s", attempt + 1, prompt.persona_id, last)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                logger.warning("attempt %d for %s failed: %s", attempt + 1, prompt.persona_id, last)
                continue
            if resp.status_code >= 400:
                raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"malformed completion body: {exc!r}") from exc
        raise BackendError(f"giving up after {self.config.max_attempts} attempts ({last})")

    def close(self) -> None:
        self._client.close()


def make_backend(config: BackendConfig, params: SyntheticRespondentParams | None = None, catalogs=None, **kwargs):
    if config.kind == "remote":
        return RemoteBackend(config, **kwargs)
    if params is None:
        raise ConfigurationError("synthetic backend requires SyntheticRespondentParams")
    return SyntheticBackend(params, catalogs)


class ResponseCache:
    """Content-addressed response store; one JSON file per key, written atomically."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    @staticmethod
    def key(prompt_text: str, fingerprint: str) -> str:
        blob = json.dumps([prompt_text, fingerprint], ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.directory / key[:2] / f"{key}.json"

    def get(self, key: str) -> str | None:
        path = self._path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))["text"]

    def put(self, key: str, text: str) -> None:
        with self._guard:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            path = self._path(key)
            path.parent.mkdir(exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump({"text": text}, fh, ensure_ascii=False)
            os.replace(tmp, path)


def complete(prompt: RenderedPrompt, backend, cache: ResponseCache | None = None) -> str:
    if cache is not None:
        key = ResponseCache.key(prompt.text, backend.fingerprint)
        hit = cache.get(key)
        if hit is not None:
            return hit
    text = backend.generate(prompt)
    if cache is not None:
        cache.put(key, text)
    return text


@dataclass(frozen=True)
class ResponseRecord:
    persona_id: str
    probe: ProbeKind
    rating: int
    language_code: str
    masked: bool
    backend: str
    raw_text: str

    def __post_init__(self):
        if not 1 <= self.rating <= 7:
            raise ValueError(f"rating {self.rating} outside 1..7")

    def to_json(self) -> dict:
        return {
            "persona_id": self.persona_id,
            "probe": self.probe.value,
            "rating": self.rating,
            "language_code": self.language_code,
            "masked": self.masked,
            "backend": self.backend,
            "raw_text": self.raw_text,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ResponseRecord":
        return cls(
            persona_id=obj["persona_id"],
            probe=ProbeKind(obj["probe"]),
            rating=int(obj["rating"]),
            language_code=obj["language_code"],
            masked=bool(obj["masked"]),
            backend=obj["backend"],
            raw_text=obj["raw_text"],
        )


@dataclass(frozen=True)
class ProbeFailure:
    persona_id: str
    probe: ProbeKind
    reason: str


@dataclass
class CollectionResult:
    records: list[ResponseRecord]
    failures: list[ProbeFailure]


def dumps_records(records: Iterable[ResponseRecord]) -> str:
    return "".join(
        json.dumps(r.to_json(), ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n"
        for r in records
    )


def save_records(records, path) -> None:
    Path(path).write_text(dumps_records(records), encoding="utf-8")


def load_records(path) -> list[ResponseRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(ResponseRecord.from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(str(exc), line=lineno) from exc
    return out


def collect_responses(
    personas: Sequence[Persona],
    catalogs: Mapping[str, LanguageCatalog],
    languages: Mapping[str, str] | str,
    masked: bool,
    backend,
    cache: ResponseCache | None = None,
    concurrency: int = 1,
    failure_threshold: float = 0.05,
) -> CollectionResult:
    """Render and answer all five probes for every persona.

    ``languages`` is either one language code for everybody or a mapping
    persona id -> code. Records come back ordered by persona id then probe,
    independent of completion order.
    """
    prompts: list[RenderedPrompt] = []
    for persona in sorted(personas, key=lambda p: p.id):
        code = languages if isinstance(languages, str) else languages[persona.id]
        if code not in catalogs:
            raise ConfigurationError(f"no catalog loaded for language {code!r}")
        prompts.extend(render_all_probes(persona, catalogs[code], masked))

    def ask(prompt: RenderedPrompt):
        try:
            raw = complete(prompt, backend, cache)
            return ResponseRecord(
                persona_id=prompt.persona_id,
                probe=prompt.probe,
                rating=parse_rating(raw),
                language_code=prompt.language_code,
                masked=prompt.masked,
                backend=backend.fingerprint,
                raw_text=raw,
            )
        except (BackendError, RatingParseError) as exc:
            logger.warning("probe %s for %s failed: %s", prompt.probe.value, prompt.persona_id, exc)
            return ProbeFailure(prompt.persona_id, prompt.probe, str(exc))

    if concurrency > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            outcomes = list(pool.map(ask, prompts))
    else:
        outcomes = [ask(p) for p in prompts]

    records = [o for o in outcomes if isinstance(o, ResponseRecord)]
    failures = [o for o in outcomes if isinstance(o, ProbeFailure)]
    if prompts and len(failures) / len(prompts) > failure_threshold:
        raise CollectionError(
            f"{len(failures)} of {len(prompts)} prompts failed (threshold {failure_threshold:.1%})",
            failures,
        )
    return CollectionResult(records, failures)

