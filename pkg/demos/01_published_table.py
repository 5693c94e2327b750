"""
Sign agreement from published coefficients
==========================================

Recompute every agreement cell of the human versus GPT-3.5 comparison table
from the two coefficient columns alone.
"""

from silicon_survey.report import load_gpt35_reference, load_human_reference, render_comparison_table
from silicon_survey.stats import agreement_bounds, sign_agreement

human = load_human_reference()
gpt = load_gpt35_reference()

text, _ = render_comparison_table(human, gpt)
print(text)

# Each agreement is P(both positive) + P(both negative) under normal posteriors.
a, b = human["C_at_M"], gpt["C_at_M"]
print("at, mobilization:", round(100 * sign_agreement(a, b), 2), "%")

# The bundled values carry three decimals, so a cell is only pinned down to a range.
lo, hi = agreement_bounds(a, b)
print(f"range under input rounding: {100 * lo:.2f}% .. {100 * hi:.2f}%")

# The D persuasion row is the most rounding-sensitive: the GPT estimate is +0.004 (0.004).
lo, hi = agreement_bounds(human["lambda_D_P"], gpt["lambda_D_P"])
print(f"D persuasion: {100 * sign_agreement(human['lambda_D_P'], gpt['lambda_D_P']):.1f}% "
      f"(range {100 * lo:.0f}%..{100 * hi:.0f}%)")
