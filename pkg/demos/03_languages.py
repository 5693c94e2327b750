"""
Prompt language and shuffled controls
=====================================

Give French prompts an inverted framing response and watch the per-language
agreement move, then run the native-language condition with its two
shuffled controls.
"""

from collections import Counter

from silicon_survey.countries import COUNTRY_LANGUAGE
from silicon_survey.experiments import (
    reference_params,
    run_experiment1,
    run_experiment2,
    run_experiment3,
    shuffle_country_languages,
)
from silicon_survey.gateway import SyntheticBackend
from silicon_survey.personas import desk_scale_spec, synthesize_population
from silicon_survey.prompts import bundled_catalogs
from silicon_survey.report import emit_chart_data

people = synthesize_population(desk_scale_spec(0.1, seed=2))
catalogs = bundled_catalogs()
params = reference_params(noise_sd=1.0, seed=5, language_effect_scale={"FR": -1.0, "IT": 0.3})
backend = SyntheticBackend(params, catalogs)

reports = run_experiment2(people, catalogs, backend, n_perm=199)
for code, r in reports.items():
    print(f"{code}  country {r.pooled['country']:.2f}  framing {r.pooled['framing']:.2f}")

# Country shuffling keeps three German-speaking and two English-speaking countries.
print(Counter(shuffle_country_languages(COUNTRY_LANGUAGE, seed=0).values()))

mono = run_experiment1(people, catalogs, backend, n_perm=199)["unmasked"]
result = run_experiment3(people, catalogs, backend, reps=5, n_perm=199, monolingual=mono)
for mode in ("country_shuffled", "full_shuffled"):
    s = getattr(result, mode)
    print(mode, {k: round(v, 3) for k, v in s.mean.items() if k in ("country", "framing")})

data, svg = emit_chart_data(result.chart_items(mono), "exp3")
print(svg[:200], "...")
