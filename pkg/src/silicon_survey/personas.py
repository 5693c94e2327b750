"""Synthetic participant population: sampling, framing assignment and JSON-lines I/O.

The original study's participant-level data is not public, so demographics
and deprivation ratings are drawn from configurable distributions while the
per-country composition matches the study exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .countries import COUNTRIES, DEFAULT_COUNTS
from .errors import ConfigurationError, ParseError

SCHEMA_VERSION = 1
GENDERS = ("female", "male", "other")


@dataclass(frozen=True, order=True)
class FramingCondition:
    anti_elite: bool = False
    anti_immigrant: bool = False

    @classmethod
    def all(cls) -> tuple["FramingCondition", ...]:
        return (cls(False, False), cls(True, False), cls(False, True), cls(True, True))

    @property
    def E(self) -> int:
        return int(self.anti_elite)

    @property
    def I(self) -> int:  # noqa: E743
        return int(self.anti_immigrant)

    def to_json(self) -> dict:
        return {"E": self.anti_elite, "I": self.anti_immigrant}


FACTUAL = FramingCondition(False, False)


@dataclass(frozen=True)
class Persona:
    id: str
    country: str
    age: int
    gender: str
    education: int
    deprivation_ratings: tuple[int, ...]
    framing: FramingCondition = FACTUAL

    def __post_init__(self):
        if self.country not in COUNTRIES:
            raise ValueError(f"unknown country code {self.country!r}")
        if not self.deprivation_ratings:
            raise ValueError("deprivation_ratings must be non-empty")
        for r in self.deprivation_ratings:
            if isinstance(r, bool) or not isinstance(r, (int, np.integer)) or not 1 <= r <= 7:
                raise ValueError(f"deprivation rating {r!r} outside 1..7")
        if not 18 <= self.age <= 90:
            raise ValueError(f"age {self.age} outside 18..90")
        if self.gender not in GENDERS:
            raise ValueError(f"unknown gender {self.gender!r}")
        if not 1 <= self.education <= 7:
            raise ValueError(f"education {self.education} outside 1..7")

    @property
    def deprivation(self) -> float:
        """Mean relative deprivation rating (the covariate D)."""
        return sum(self.deprivation_ratings) / len(self.deprivation_ratings)


@dataclass
class DemographicDistributions:
    age_range: tuple[int, int] = (18, 75)
    gender_probs: tuple[float, float, float] = (0.49, 0.49, 0.02)
    education_range: tuple[int, int] = (1, 7)
    # Items are a rounded, clipped normal on the 1..7 scale.
    deprivation_mean: float = 4.0
    deprivation_sd: float = 1.5


@dataclass
class PopulationSpec:
    per_country_counts: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_COUNTS))
    deprivation_item_count: int = 3
    demographics: DemographicDistributions = field(default_factory=DemographicDistributions)
    seed: int = 0

    def validate(self) -> None:
        if not self.per_country_counts:
            raise ConfigurationError("per_country_counts is empty")
        for country, n in self.per_country_counts.items():
            if country not in COUNTRIES:
                raise ConfigurationError(f"unknown country {country!r}")
            if int(n) < 1:
                raise ConfigurationError(f"count for {country} must be positive, got {n}")
        if self.deprivation_item_count < 1:
            raise ConfigurationError("deprivation_item_count must be >= 1")
        d = self.demographics
        lo, hi = d.age_range
        if not 18 <= lo <= hi <= 90:
            raise ConfigurationError(f"age range {d.age_range} outside 18..90")
        if len(d.gender_probs) != 3 or abs(sum(d.gender_probs) - 1) > 1e-9:
            raise ConfigurationError("gender_probs must be three probabilities summing to 1")
        if d.deprivation_sd < 0:
            raise ConfigurationError("deprivation_sd must be non-negative")

    @property
    def total(self) -> int:
        return sum(int(n) for n in self.per_country_counts.values())


def desk_scale_spec(fraction: float = 0.1, seed: int = 0, **kwargs) -> PopulationSpec:
    """Population scaled down per country (at least one persona each)."""
    counts = {c: max(1, round(n * fraction)) for c, n in DEFAULT_COUNTS.items()}
    return PopulationSpec(per_country_counts=counts, seed=seed, **kwargs)


def synthesize_population(spec: PopulationSpec | None = None) -> list[Persona]:
    spec = spec or PopulationSpec()
    spec.validate()
    d = spec.demographics
    rng = np.random.default_rng(spec.seed)
    personas = []
    countries = [c for c in COUNTRIES if c in spec.per_country_counts]
    for country in countries:
        n = int(spec.per_country_counts[country])
        ages = rng.integers(d.age_range[0], d.age_range[1] + 1, size=n)
        genders = rng.choice(len(GENDERS), size=n, p=d.gender_probs)
        education = rng.integers(d.education_range[0], d.education_range[1] + 1, size=n)
        raw = rng.normal(d.deprivation_mean, d.deprivation_sd, size=(n, spec.deprivation_item_count))
        items = np.clip(np.floor(raw + 0.5), 1, 7).astype(int)
        for k in range(n):
            personas.append(
                Persona(
                    id=f"{country}-{k:05d}",
                    country=country,
                    age=int(ages[k]),
                    gender=GENDERS[genders[k]],
                    education=int(education[k]),
                    deprivation_ratings=tuple(int(x) for x in items[k]),
                )
            )
    return assign_framing(personas, seed=spec.seed)


def assign_framing(personas: Sequence[Persona], seed: int) -> list[Persona]:
    """Assign the four framing conditions, balanced within each country and overall.

    Each country receives ``n // 4`` of every condition; its ``n % 4`` leftover
    slots take the next conditions in a single cyclic sequence shared by all
    countries, so global counts also differ by at most one.
    """
    if not personas:
        raise ValueError("cannot assign framing to an empty population")
    rng = np.random.default_rng([seed, 0x6672616D])
    conditions = FramingCondition.all()
    cycle = [conditions[i] for i in rng.permutation(4)]
    cursor = int(rng.integers(4))

    by_country: dict[str, list[int]] = {}
    for idx, p in enumerate(personas):
        by_country.setdefault(p.country, []).append(idx)

    out = list(personas)
    for country in sorted(by_country, key=_country_sort_key):
        members = by_country[country]
        n = len(members)
        labels = [c for c in conditions for _ in range(n // 4)]
        for _ in range(n % 4):
            labels.append(cycle[cursor % 4])
            cursor += 1
        order = rng.permutation(n)
        for slot, member in zip(order, members):
            out[member] = replace(out[member], framing=labels[slot])
    return out


def _country_sort_key(code: str) -> int:
    return COUNTRIES.index(code)


def persona_to_json(p: Persona) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "id": p.id,
        "country": p.country,
        "age": p.age,
        "gender": p.gender,
        "education": p.education,
        "deprivation_ratings": list(p.deprivation_ratings),
        "framing": p.framing.to_json(),
    }


def persona_from_json(obj: dict) -> Persona:
    if obj.get("v") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {obj.get('v')!r}")
    framing = obj["framing"]
    if not isinstance(framing.get("E"), bool) or not isinstance(framing.get("I"), bool):
        raise ValueError("framing must be {'E': bool, 'I': bool}")
    ratings = obj["deprivation_ratings"]
    if not isinstance(ratings, list):
        raise ValueError("deprivation_ratings must be a list")
    for key in ("age", "education"):
        if isinstance(obj[key], bool) or not isinstance(obj[key], int):
            raise ValueError(f"{key} must be an integer")
    return Persona(
        id=str(obj["id"]),
        country=obj["country"],
        age=obj["age"],
        gender=obj["gender"],
        education=obj["education"],
        deprivation_ratings=tuple(ratings),
        framing=FramingCondition(framing["E"], framing["I"]),
    )


def dumps_population(personas: Iterable[Persona]) -> str:
    return "".join(
        json.dumps(persona_to_json(p), ensure_ascii=False, separators=(",", ":")) + "\n"
        for p in personas
    )


def save_population(personas: Iterable[Persona], path) -> None:
    Path(path).write_text(dumps_population(personas), encoding="utf-8")


def load_population(path) -> list[Persona]:
    personas = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                persona = persona_from_json(json.loads(line))
            except (ValueError, KeyError, TypeError, AttributeError) as exc:
                raise ParseError(str(exc) or type(exc).__name__, line=lineno) from exc
            if persona.id in seen:
                raise ParseError(f"duplicate persona id {persona.id!r}", line=lineno)
            seen.add(persona.id)
            personas.append(persona)
    return personas
