"""Questionnaire prompt rendering from language catalogs.

A rendered prompt has four sections: demographics, deprivation ratings, the
news article for the persona's framing condition, and a final instruction
with one probe statement left unanswered for the respondent to complete.

Article templates mark nationality-bearing clauses with optional spans
``⟦...⟧``. Unmasked rendering substitutes ``[nationals]`` and ``[country]``
and drops the delimiters; masked rendering removes each span entirely.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from .countries import COUNTRIES, LANGUAGES
from .errors import CatalogValidationError, ConfigurationError, RenderingError
from .personas import FramingCondition, Persona

SPAN_OPEN = "⟦"
SPAN_CLOSE = "⟧"
NATIONALS = "[nationals]"
COUNTRY = "[country]"
_SPAN_RE = re.compile(f"{SPAN_OPEN}([^{SPAN_OPEN}{SPAN_CLOSE}]*){SPAN_CLOSE}")


class ProbeKind(enum.Enum):
    Persuasion1 = "Persuasion1"
    Persuasion2 = "Persuasion2"
    Mobilization1 = "Mobilization1"
    Mobilization2 = "Mobilization2"
    Mobilization3 = "Mobilization3"

    @property
    def is_persuasion(self) -> bool:
        return self in (ProbeKind.Persuasion1, ProbeKind.Persuasion2)

    @property
    def outcome(self) -> str:
        return "P" if self.is_persuasion else "M"


PROBES = tuple(ProbeKind)

ARTICLE_KEYS = {
    FramingCondition(False, False): "factual",
    FramingCondition(True, False): "anti_elite",
    FramingCondition(False, True): "anti_immigrant",
    FramingCondition(True, True): "combined",
}

REQUIRED_STRINGS = (
    "demographics.header",
    "demographics.country",
    "demographics.age",
    "demographics.gender",
    "demographics.education",
    "gender.female",
    "gender.male",
    "gender.other",
    "deprivation.header",
    "deprivation.item",
    "article.header",
    "article.photo",
    "instruction",
    "probe.item",
) + tuple(f"country.{c}" for c in COUNTRIES) + tuple(f"nationals.{c}" for c in COUNTRIES)

TOP_LEVEL_KEYS = (
    "language_code",
    "strings",
    "article_templates",
    "probe_statements",
    "deprivation_statements",
    "photo_alt_text",
)


@dataclass(frozen=True, eq=False)
class LanguageCatalog:
    language_code: str
    strings: Mapping[str, str]
    article_templates: Mapping[str, str]
    probe_statements: Mapping[str, str]
    deprivation_statements: tuple[str, ...]
    photo_alt_text: str

    def country_name(self, country: str) -> str:
        return self.strings[f"country.{country}"]

    def nationals(self, country: str) -> str:
        return self.strings[f"nationals.{country}"]

    def lexicon(self) -> dict[str, str]:
        """Every country name and demonym mapped back to its country code."""
        out = {}
        for c in COUNTRIES:
            out[self.country_name(c)] = c
            out[self.nationals(c)] = c
        return out


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    persona_id: str
    probe: ProbeKind
    language_code: str
    masked: bool
    framing: FramingCondition


def select_article(framing: FramingCondition) -> str:
    return ARTICLE_KEYS[framing]


def _validate(data: dict) -> LanguageCatalog:
    problems = []
    for key in TOP_LEVEL_KEYS:
        if key not in data:
            problems.append(f"missing top-level key {key!r}")
    if problems:
        raise CatalogValidationError(problems)

    code = data["language_code"]
    if code not in LANGUAGES:
        problems.append(f"unknown language_code {code!r}")
    strings = data["strings"]
    for key in REQUIRED_STRINGS:
        if not isinstance(strings.get(key), str) or not strings.get(key):
            problems.append(f"missing string {key!r}")

    templates = data["article_templates"]
    for framing, key in ARTICLE_KEYS.items():
        text = templates.get(key)
        if not isinstance(text, str) or not text:
            problems.append(f"missing article template {key!r}")
            continue
        if key == "factual":
            for ph in (NATIONALS, COUNTRY):
                if ph in text:
                    problems.append(f"factual template must not contain {ph}")
        else:
            for ph in (NATIONALS, COUNTRY):
                if ph not in text:
                    problems.append(f"article template {key!r} lacks placeholder {ph}")
        if text.count(SPAN_OPEN) != text.count(SPAN_CLOSE):
            problems.append(f"article template {key!r} has unbalanced optional spans")
        elif NATIONALS in _SPAN_RE.sub("", text) or COUNTRY in _SPAN_RE.sub("", text):
            problems.append(f"article template {key!r} has a placeholder outside an optional span")

    probes = data["probe_statements"]
    for kind in ProbeKind:
        if not isinstance(probes.get(kind.value), str) or not probes.get(kind.value):
            problems.append(f"missing probe statement {kind.value!r}")

    deprivation = data["deprivation_statements"]
    if not isinstance(deprivation, list) or not deprivation:
        problems.append("deprivation_statements must be a non-empty list")
    if not isinstance(data["photo_alt_text"], str) or not data["photo_alt_text"]:
        problems.append("photo_alt_text is empty")
    if problems:
        raise CatalogValidationError(problems)

    return LanguageCatalog(
        language_code=code,
        strings=MappingProxyType(dict(strings)),
        article_templates=MappingProxyType(dict(templates)),
        probe_statements=MappingProxyType({k.value: probes[k.value] for k in ProbeKind}),
        deprivation_statements=tuple(deprivation),
        photo_alt_text=data["photo_alt_text"],
    )


def catalog_from_dict(data: dict) -> LanguageCatalog:
    return _validate(data)


def load_catalog(path) -> LanguageCatalog:
    with open(path, encoding="utf-8") as fh:
        return _validate(json.load(fh))


@lru_cache(maxsize=None)
def bundled_catalog(language_code: str) -> LanguageCatalog:
    name = f"{language_code.lower()}.json"
    ref = resources.files("silicon_survey") / "data" / "catalogs" / name
    if not ref.is_file():
        raise ConfigurationError(f"no bundled catalog for language {language_code!r}")
    with resources.as_file(ref) as path:
        return load_catalog(path)


def bundled_catalogs(languages=LANGUAGES) -> dict[str, LanguageCatalog]:
    return {code: bundled_catalog(code) for code in languages}


def load_catalog_dir(directory) -> dict[str, LanguageCatalog]:
    out = {}
    for path in sorted(Path(directory).glob("*.json")):
        cat = load_catalog(path)
        out[cat.language_code] = cat
    return out


def fill_article(template: str, nationals: str | None, country: str | None) -> str:
    """Substitute placeholders, or drop optional spans when both are None."""
    if nationals is None:
        return _SPAN_RE.sub("", template)

    def keep(m):
        return m.group(1).replace(NATIONALS, nationals).replace(COUNTRY, country)

    return _SPAN_RE.sub(keep, template)


def _prefix(persona: Persona, catalog: LanguageCatalog, masked: bool) -> str:
    s = catalog.strings
    if len(persona.deprivation_ratings) > len(catalog.deprivation_statements):
        raise RenderingError(
            f"persona {persona.id} has {len(persona.deprivation_ratings)} deprivation ratings "
            f"but catalog {catalog.language_code} has {len(catalog.deprivation_statements)} statements"
        )
    country_key = f"country.{persona.country}"
    if not masked and country_key not in s:
        raise RenderingError(f"country {persona.country!r} missing from the {catalog.language_code} lexicon")

    lines = [s["demographics.header"]]
    if not masked:
        lines.append(s["demographics.country"].format(country=s[country_key]))
    lines.append(s["demographics.age"].format(age=persona.age))
    lines.append(s["demographics.gender"].format(gender=s[f"gender.{persona.gender}"]))
    lines.append(s["demographics.education"].format(education=persona.education))
    lines.append("")
    lines.append(s["deprivation.header"])
    for statement, rating in zip(catalog.deprivation_statements, persona.deprivation_ratings):
        lines.append(s["deprivation.item"].format(statement=statement, rating=rating))
    lines.append("")
    lines.append(s["article.header"])
    template = catalog.article_templates[select_article(persona.framing)]
    if masked:
        article = fill_article(template, None, None)
    else:
        article = fill_article(template, catalog.nationals(persona.country), s[country_key])
    lines.append(article)
    lines.append(s["article.photo"].format(alt=catalog.photo_alt_text))
    lines.append("")
    lines.append(s["instruction"])
    return "\n".join(lines) + "\n"


def render_prompt(
    persona: Persona, catalog: LanguageCatalog, probe: ProbeKind, mask_nationality: bool = False
) -> RenderedPrompt:
    probe = ProbeKind(probe)
    text = _prefix(persona, catalog, mask_nationality) + catalog.strings["probe.item"].format(
        statement=catalog.probe_statements[probe.value]
    )
    return RenderedPrompt(
        text=text,
        persona_id=persona.id,
        probe=probe,
        language_code=catalog.language_code,
        masked=bool(mask_nationality),
        framing=persona.framing,
    )


def render_all_probes(persona: Persona, catalog: LanguageCatalog, mask_nationality: bool = False):
    prefix = _prefix(persona, catalog, mask_nationality)
    item = catalog.strings["probe.item"]
    return [
        RenderedPrompt(
            text=prefix + item.format(statement=catalog.probe_statements[probe.value]),
            persona_id=persona.id,
            probe=probe,
            language_code=catalog.language_code,
            masked=bool(mask_nationality),
            framing=persona.framing,
        )
        for probe in PROBES
    ]


def _template_regex(template: str, field: str, group: str) -> re.Pattern:
    before, _, after = template.partition("{" + field + "}")
    return re.compile("^" + re.escape(before) + group + re.escape(after) + "$", re.MULTILINE)


@lru_cache(maxsize=64)
def _readers(catalog: LanguageCatalog):
    s = catalog.strings
    country_re = _template_regex(s["demographics.country"], "country", "(.+)")
    item = s["deprivation.item"]
    before, _, after = item.partition("{statement}")
    rating_re = re.compile(
        "^" + re.escape(before) + ".*?" + re.escape(after).replace(re.escape("{rating}"), "([1-7])") + "$",
        re.MULTILINE,
    )
    names = {catalog.country_name(c): c for c in COUNTRIES}
    return country_re, rating_re, names


def read_visible_country(text: str, catalog: LanguageCatalog) -> str | None:
    """Country code stated on the rendered country-of-residence line, if any."""
    country_re, _, names = _readers(catalog)
    m = country_re.search(text)
    if m is None:
        return None
    return names.get(m.group(1).strip())


def read_deprivation_ratings(text: str, catalog: LanguageCatalog) -> list[int]:
    _, rating_re, _ = _readers(catalog)
    return [int(x) for x in rating_re.findall(text)]


def contains_lexicon_token(text: str, catalog: LanguageCatalog) -> list[str]:
    """Country names or demonyms from the catalog that appear as whole words in ``text``."""
    hits = []
    for token in catalog.lexicon():
        if re.search(r"(?<!\w)" + re.escape(token) + r"(?!\w)", text):
            hits.append(token)
    return hits
