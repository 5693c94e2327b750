"""Simulated survey respondents for a populism-framing experiment.

Synthesises personas, renders localised questionnaire prompts, collects
ratings from a chat-completion model or a synthetic respondent, fits the
nested fixed-effects regressions and measures sign agreement with the human
reference coefficients.
"""

from .errors import (
    CatalogValidationError,
    ConfigurationError,
    IntegrityError,
    ParseError,
    SingularDesignError,
    StructuralError,
    SurveyError,
)
from .experiments import (
    LanguagePlan,
    run_experiment1,
    run_experiment2,
    run_experiment3,
    run_pipeline,
    shuffle_country_languages,
    shuffle_full,
)
from .gateway import BackendConfig, SyntheticBackend, SyntheticRespondentParams, collect_responses
from .personas import FramingCondition, Persona, PopulationSpec, desk_scale_spec, synthesize_population
from .prompts import LanguageCatalog, ProbeKind, bundled_catalog, bundled_catalogs, render_prompt
from .report import load_human_reference, render_comparison_table
from .stats import (
    CoefficientTable,
    Estimate,
    SignAgreementReport,
    analyze,
    fit_ols,
    pool_agreements,
    sign_agreement,
)

__version__ = "0.1.0"

__all__ = [
    "CatalogValidationError",
    "ConfigurationError",
    "IntegrityError",
    "ParseError",
    "SingularDesignError",
    "StructuralError",
    "SurveyError",
    "LanguagePlan",
    "run_experiment1",
    "run_experiment2",
    "run_experiment3",
    "run_pipeline",
    "shuffle_country_languages",
    "shuffle_full",
    "BackendConfig",
    "SyntheticBackend",
    "SyntheticRespondentParams",
    "collect_responses",
    "FramingCondition",
    "Persona",
    "PopulationSpec",
    "desk_scale_spec",
    "synthesize_population",
    "LanguageCatalog",
    "ProbeKind",
    "bundled_catalog",
    "bundled_catalogs",
    "render_prompt",
    "load_human_reference",
    "render_comparison_table",
    "CoefficientTable",
    "Estimate",
    "SignAgreementReport",
    "analyze",
    "fit_ols",
    "pool_agreements",
    "sign_agreement",
]
