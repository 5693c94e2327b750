"""End-to-end runs: language planning, collection, analysis and repetition.

Each run writes ``manifest.json`` before any prompt is dispatched, then
``responses.jsonl``, ``scores.csv``, ``coefficients.json`` and ``report.json``.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .countries import COUNTRIES, COUNTRY_LANGUAGE, LANGUAGES
from .errors import ConfigurationError
from .gateway import (
    OUTCOMES,
    TERMS,
    ResponseCache,
    ResponseRecord,
    SyntheticRespondentParams,
    collect_responses,
    dumps_records,
)
from .personas import Persona, dumps_population
from .prompts import LanguageCatalog
from .report import emit_chart_data, load_human_reference
from .stats import (
    CoefficientTable,
    RepetitionSummary,
    ScoreRecord,
    SignAgreementReport,
    analyze,
    compute_scores,
    country_label,
    dumps_scores,
    lambda_label,
)

logger = logging.getLogger(__name__)

MODES = ("monolingual", "native", "country_shuffled", "full_shuffled")


def derive_seed(root: int, *keys: int) -> int:
    """Independent, replayable child seed for (root, keys...)."""
    return int(np.random.SeedSequence(root, spawn_key=tuple(keys)).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class LanguagePlan:
    mode: str = "monolingual"
    code: str | None = "EN"
    seed: int | None = None
    country_language_map: Mapping[str, str] = field(default_factory=lambda: dict(COUNTRY_LANGUAGE))

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown language mode {self.mode!r}")
        if self.mode == "monolingual" and self.code not in LANGUAGES:
            raise ConfigurationError(f"monolingual plan needs a language in {LANGUAGES}, got {self.code!r}")
        if self.mode in ("country_shuffled", "full_shuffled") and self.seed is None:
            raise ConfigurationError(f"{self.mode} plan needs a seed")

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "code": self.code if self.mode == "monolingual" else None,
            "seed": self.seed,
            "country_language_map": dict(self.country_language_map),
        }


def shuffle_country_languages(mapping: Mapping[str, str], seed: int) -> dict[str, str]:
    """Permute languages across countries, keeping how many countries use each."""
    countries = [c for c in COUNTRIES if c in mapping] + sorted(c for c in mapping if c not in COUNTRIES)
    langs = [mapping[c] for c in countries]
    order = np.random.default_rng(seed).permutation(len(langs))
    return {c: langs[i] for c, i in zip(countries, order)}


def shuffle_full(personas: Sequence[Persona], native: Mapping[str, str], seed: int) -> dict[str, str]:
    """Permute the native-language assignment across individual participants."""
    ids = [p.id for p in personas]
    langs = [native[i] for i in ids]
    order = np.random.default_rng(seed).permutation(len(langs))
    return {pid: langs[j] for pid, j in zip(ids, order)}


def _native(persona: Persona, mapping: Mapping[str, str]) -> str:
    try:
        return mapping[persona.country]
    except KeyError:
        raise ConfigurationError(f"country {persona.country!r} has no language in the plan") from None


def resolve_languages(personas: Sequence[Persona], plan: LanguagePlan) -> dict[str, str]:
    if plan.mode == "monolingual":
        return {p.id: plan.code for p in personas}
    if plan.mode == "native":
        return {p.id: _native(p, plan.country_language_map) for p in personas}
    if plan.mode == "country_shuffled":
        shuffled = shuffle_country_languages(plan.country_language_map, plan.seed)
        return {p.id: _native(p, shuffled) for p in personas}
    native = {p.id: _native(p, plan.country_language_map) for p in personas}
    return shuffle_full(personas, native, plan.seed)


def resolve_language(persona: Persona, plan: LanguagePlan, population: Sequence[Persona] | None = None) -> str:
    """Prompt language for one persona; full shuffling needs the whole population."""
    if plan.mode == "full_shuffled":
        if population is None:
            raise ConfigurationError("full_shuffled plans are resolved over a whole population")
        return resolve_languages(population, plan)[persona.id]
    return resolve_languages([persona], plan)[persona.id]


def population_digest(personas: Sequence[Persona]) -> str:
    return hashlib.sha256(dumps_population(personas).encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    experiment: str
    population_digest: str
    plan: dict
    masked: bool
    backend: str
    seeds: dict
    started: str
    finished: str | None = None
    outputs: dict = field(default_factory=dict)
    population_size: int = 0
    excluded: int = 0

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass
class RunResult:
    manifest: RunManifest
    records: list[ResponseRecord]
    scores: list[ScoreRecord]
    table: CoefficientTable
    report: SignAgreementReport
    language_counts: dict[str, int]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_pipeline(
    personas: Sequence[Persona],
    catalogs: Mapping[str, LanguageCatalog],
    backend,
    plan: LanguagePlan,
    masked: bool = False,
    reference: CoefficientTable | None = None,
    out_dir=None,
    n_perm: int = 999,
    seed: int = 0,
    cache: ResponseCache | None = None,
    concurrency: int = 1,
    failure_threshold: float = 0.05,
    experiment: str = "run",
) -> RunResult:
    """Collect responses under one plan, score them and compare with ``reference``."""
    reference = reference if reference is not None else load_human_reference()
    languages = resolve_languages(personas, plan)
    missing = sorted(set(languages.values()) - set(catalogs))
    if missing:
        raise ConfigurationError(f"missing catalogs for {missing}")

    out = Path(out_dir) if out_dir is not None else None
    names = {k: f"{k}.{ext}" for k, ext in
             (("responses", "jsonl"), ("scores", "csv"), ("coefficients", "json"), ("report", "json"))}
    manifest = RunManifest(
        experiment=experiment,
        population_digest=population_digest(personas),
        plan=plan.to_json(),
        masked=masked,
        backend=backend.fingerprint,
        seeds={"plan": plan.seed, "permutation": seed},
        started=_now(),
        outputs=names if out else {},
        population_size=len(personas),
    )
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        manifest.write(out / "manifest.json")

    collected = collect_responses(
        personas, catalogs, languages, masked, backend,
        cache=cache, concurrency=concurrency, failure_threshold=failure_threshold,
    )
    scored = compute_scores(collected.records, personas)
    meta = {
        "experiment": experiment,
        "plan": plan.to_json(),
        "masked": masked,
        "backend": backend.fingerprint,
        "population_digest": manifest.population_digest,
        "n_scored": len(scored.scores),
        "n_excluded": len(scored.excluded),
    }
    table, report = analyze(scored.scores, reference, n_perm=n_perm, seed=seed, meta=meta)

    manifest.finished = _now()
    manifest.excluded = len(scored.excluded)
    if out is not None:
        (out / names["responses"]).write_text(dumps_records(collected.records), encoding="utf-8")
        (out / names["scores"]).write_text(dumps_scores(scored.scores), encoding="utf-8")
        table.save(out / names["coefficients"])
        (out / names["report"]).write_text(report.dumps(), encoding="utf-8")
        manifest.write(out / "manifest.json")
    counts = dict(sorted(Counter(languages[s.persona_id] for s in scored.scores).items()))
    return RunResult(manifest, collected.records, scored.scores, table, report, counts)


def _sub(out_dir, name):
    return None if out_dir is None else Path(out_dir) / name


def run_experiment1(
    population: Sequence[Persona],
    catalogs: Mapping[str, LanguageCatalog],
    backend,
    reference: CoefficientTable | None = None,
    out_dir=None,
    n_perm: int = 999,
    seed: int = 0,
    **kwargs,
) -> dict[str, SignAgreementReport]:
    """English prompts with nationality masked and unmasked."""
    if "EN" not in catalogs:
        raise ConfigurationError("experiment 1 needs the EN catalog")
    plan = LanguagePlan("monolingual", "EN")
    reports = {}
    for i, (name, masked) in enumerate((("masked", True), ("unmasked", False))):
        result = run_pipeline(
            population, catalogs, backend, plan, masked, reference, _sub(out_dir, name),
            n_perm=n_perm, seed=derive_seed(seed, 1, i), experiment=f"exp1-{name}", **kwargs,
        )
        reports[name] = result.report
    return reports


def run_experiment2(
    population: Sequence[Persona],
    catalogs: Mapping[str, LanguageCatalog],
    backend,
    reference: CoefficientTable | None = None,
    out_dir=None,
    n_perm: int = 999,
    seed: int = 0,
    languages: Sequence[str] = LANGUAGES,
    **kwargs,
) -> dict[str, SignAgreementReport]:
    """One monolingual, unmasked run per language."""
    missing = [code for code in languages if code not in catalogs]
    if missing:
        raise ConfigurationError(f"missing catalogs for {missing}")
    reports = {}
    for i, code in enumerate(languages):
        result = run_pipeline(
            population, catalogs, backend, LanguagePlan("monolingual", code), False, reference,
            _sub(out_dir, code.lower()), n_perm=n_perm, seed=derive_seed(seed, 2, i),
            experiment=f"exp2-{code}", **kwargs,
        )
        reports[code] = result.report
    if out_dir is not None:
        data, svg = emit_chart_data(reports, "exp2")
        Path(out_dir, "chart_exp2.json").write_text(data, encoding="utf-8")
        Path(out_dir, "chart_exp2.svg").write_text(svg, encoding="utf-8")
    return reports


@dataclass
class Experiment3Result:
    native: SignAgreementReport
    country_shuffled: RepetitionSummary
    full_shuffled: RepetitionSummary
    language_counts: dict[str, list[dict[str, int]]]

    def chart_items(self, monolingual: SignAgreementReport) -> dict:
        return {
            "monolingual": monolingual,
            "native": self.native,
            "country_shuffled": self.country_shuffled,
            "full_shuffled": self.full_shuffled,
        }


def run_experiment3(
    population: Sequence[Persona],
    catalogs: Mapping[str, LanguageCatalog],
    backend,
    reps: int = 100,
    reference: CoefficientTable | None = None,
    out_dir=None,
    n_perm: int = 999,
    seed: int = 0,
    monolingual: SignAgreementReport | None = None,
    **kwargs,
) -> Experiment3Result:
    """Native-language prompting once, then each shuffled control ``reps`` times."""
    if reps < 1:
        raise ConfigurationError("reps must be >= 1")
    needed = sorted(set(COUNTRY_LANGUAGE.values()))
    missing = [c for c in needed if c not in catalogs]
    if missing:
        raise ConfigurationError(f"missing catalogs for {missing}")

    native = run_pipeline(
        population, catalogs, backend, LanguagePlan("native", None), False, reference,
        _sub(out_dir, "native"), n_perm=n_perm, seed=derive_seed(seed, 3, 0),
        experiment="exp3-native", **kwargs,
    )
    summaries = {}
    counts: dict[str, list[dict[str, int]]] = {"native": [native.language_counts]}
    for m, mode in enumerate(("country_shuffled", "full_shuffled"), start=1):
        reports, mode_counts = [], []
        for r in range(reps):
            plan = LanguagePlan(mode, None, seed=derive_seed(seed, 3, m, r, 0))
            result = run_pipeline(
                population, catalogs, backend, plan, False, reference,
                _sub(out_dir, f"{mode}/rep{r:03d}"), n_perm=n_perm, seed=derive_seed(seed, 3, m, r, 1),
                experiment=f"exp3-{mode}-{r}", **kwargs,
            )
            reports.append(result.report)
            mode_counts.append(result.language_counts)
        summaries[mode] = RepetitionSummary.from_reports(reports, meta={"mode": mode, "root_seed": seed})
        counts[mode] = mode_counts
    result = Experiment3Result(native.report, summaries["country_shuffled"], summaries["full_shuffled"], counts)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        for mode in ("country_shuffled", "full_shuffled"):
            Path(out_dir, f"{mode}_summary.json").write_text(
                json.dumps(summaries[mode].to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
        if monolingual is not None:
            data, svg = emit_chart_data(result.chart_items(monolingual), "exp3")
            Path(out_dir, "chart_exp3.json").write_text(data, encoding="utf-8")
            Path(out_dir, "chart_exp3.svg").write_text(svg, encoding="utf-8")
    return result


def reference_params(
    reference: CoefficientTable | None = None,
    noise_sd: float = 1.0,
    seed: int = 0,
    **kwargs,
) -> SyntheticRespondentParams:
    """Synthetic respondent whose true coefficients are a reference table's values.

    Country effects are recentred so they sum to exactly zero per outcome;
    countries missing from the table get effect 0 before recentring.
    """
    reference = reference if reference is not None else load_human_reference()
    country, lambdas, intercept = {}, {}, {}
    for o in OUTCOMES:
        effects = {c: reference.terms[country_label(c, o)].value
                   for c in COUNTRIES if country_label(c, o) in reference.terms}
        shift = sum(effects.values()) / len(effects) if effects else 0.0
        country[o] = {c: v - shift for c, v in effects.items()}
        lambdas[o] = {t: reference.terms[lambda_label(t, o)].value
                      for t in TERMS if lambda_label(t, o) in reference.terms}
        intercept[o] = float(reference.intercepts.get(o, 4.0))
    return SyntheticRespondentParams(
        intercept=intercept, country=country, lambdas=lambdas, noise_sd=noise_sd, seed=seed, **kwargs
    )
