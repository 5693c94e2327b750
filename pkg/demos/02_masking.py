"""
Masking nationality with a synthetic respondent
===============================================

The synthetic respondent answers from declared coefficients and only applies
its country effect when the rendered questionnaire states a country of
residence. Masking the prompt should therefore wash out country agreement.
"""

from silicon_survey.experiments import reference_params, run_experiment1
from silicon_survey.gateway import SyntheticBackend
from silicon_survey.personas import desk_scale_spec, synthesize_population
from silicon_survey.prompts import ProbeKind, bundled_catalog, bundled_catalogs, render_prompt
from silicon_survey.report import table2_summary

people = synthesize_population(desk_scale_spec(0.1, seed=1))
print(len(people), "personas")

# One prompt, unmasked and masked.
en = bundled_catalog("EN")
for masked in (False, True):
    print(render_prompt(people[0], en, ProbeKind.Persuasion1, mask_nationality=masked).text)
    print("-" * 60)

catalogs = bundled_catalogs(["EN"])
backend = SyntheticBackend(reference_params(noise_sd=1.0, seed=7), catalogs)
reports = run_experiment1(people, catalogs, backend, n_perm=199, seed=3)
print(table2_summary(reports["masked"], reports["unmasked"]))
