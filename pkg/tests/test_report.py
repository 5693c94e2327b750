import json
import math

import pytest

from silicon_survey import report as report_mod
from silicon_survey.errors import IntegrityError, StructuralError
from silicon_survey.report import (
    chart_data,
    emit_chart_data,
    format_percent,
    load_gpt35_reference,
    load_human_reference,
    parse_comparison_csv,
    render_comparison_table,
    table2_summary,
)
from silicon_survey.stats import (
    CoefficientTable,
    RepetitionSummary,
    SignAgreementReport,
    agreement_report,
    country_label,
)
from silicon_survey.countries import COUNTRIES, LANGUAGES


def test_reference_values():
    human = load_human_reference()
    assert len(human.terms) == 44
    assert (human["lambda_EI_P"].value, human["lambda_EI_P"].se) == (-0.120, 0.056)
    assert (human["C_se_M"].value, human["C_se_M"].se) == (-1.115, 0.085)
    assert (human["lambda_D_P"].value, human["lambda_D_P"].se) == (0.277, 0.009)
    assert human.rounded_source


def test_reference_country_terms_sum_near_zero():
    # 15 values each rounded to 3 decimals: the sum is off by at most 15 * 0.0005.
    for table in (load_human_reference(), load_gpt35_reference()):
        for o in "PM":
            assert abs(sum(table[country_label(c, o)].value for c in COUNTRIES)) <= 15 * 0.0005


def test_checksum_mismatch(monkeypatch):
    monkeypatch.setitem(report_mod._CHECKSUMS, "human_reference.json", "0" * 64)
    with pytest.raises(IntegrityError):
        load_human_reference()


@pytest.mark.parametrize("p, text", [(0.016, "1.6%"), (0.0534, "5.3%"), (0.76, "76%"), (1.0, "100%"),
                                     (0.0996, "10%"), (0.5, "50%")])
def test_format_percent(p, text):
    assert format_percent(p) == text


def test_comparison_table_text():
    text, _ = render_comparison_table(load_human_reference(), load_gpt35_reference())
    lines = text.splitlines()
    assert lines[2].startswith("D ")
    assert any(line.startswith("E×I") and "1.6%" in line for line in lines)
    framing = next(line for line in lines if line.startswith("framing"))
    assert framing.split()[1:] == ["59%", "70%", "64%"]
    assert next(line for line in lines if line.startswith("all")).split()[1:] == ["71%", "66%", "68%"]
    order = [line.split()[0] for line in lines if line.split() and line.split()[0] in COUNTRIES]
    assert order == list(COUNTRIES)


def test_significance_marks():
    human, gpt = load_human_reference(), load_gpt35_reference()
    rep = agreement_report(gpt, human, p_values={"country_P": 0.01, "all": 0.2}, n_perm=999)
    text, csv_text = render_comparison_table(human, gpt, rep)
    country = next(line for line in text.splitlines() if line.startswith("country"))
    assert "76%*" in country and "64%*" not in country
    rows = {r["row"]: r for r in parse_comparison_csv(csv_text)}
    assert rows["country"]["sig_P"] is True and rows["all"]["sig_PM"] is False


def test_csv_round_trip():
    human, gpt = load_human_reference(), load_gpt35_reference()
    rep = agreement_report(gpt, human)
    _, csv_text = render_comparison_table(human, gpt, rep)
    rows = {r["row"]: r for r in parse_comparison_csv(csv_text)}
    assert rows["E×I"]["human_P"] == human["lambda_EI_P"].value
    assert rows["uk"]["model_M_se"] == gpt["C_uk_M"].se
    assert rows["at"]["agree_M"] == rep.agreements["C_at_M"]
    assert rows["all"]["agree_PM"] == rep.pooled["all"]


def test_mismatched_terms():
    human = load_human_reference()
    short = CoefficientTable({k: v for k, v in human.terms.items() if k != "C_it_P"})
    with pytest.raises(StructuralError, match="C_it_P"):
        render_comparison_table(human, short)


def _report(shift=0.0, p=0.01):
    pooled = {k: 0.6 + shift for k in ("framing", "country", "all", "framing_P", "framing_M",
                                       "country_P", "country_M", "all_P", "all_M")}
    return SignAgreementReport({}, pooled, {k: p for k in pooled}, 999, {})


def test_exp2_chart_has_24_bars():
    data = chart_data({code: _report() for code in LANGUAGES}, "exp2")
    assert len(data["bars"]) == 24
    assert {b["group"] for b in data["bars"]} == set(LANGUAGES)


def test_exp3_chart_whiskers():
    summary = RepetitionSummary.from_reports([_report(0.0), _report(0.1, 0.3)])
    data = chart_data({"monolingual": _report(), "native": _report(),
                       "country_shuffled": summary, "full_shuffled": summary}, "exp3")
    assert len(data["bars"]) == 8
    whiskers = {b["group"] for b in data["bars"] if b["sd"] is not None}
    assert whiskers == {"country_shuffled", "full_shuffled"}
    bar = next(b for b in data["bars"] if b["group"] == "full_shuffled")
    assert bar["sd"] == pytest.approx(math.sqrt(0.005))


def test_exp3_missing_mode():
    with pytest.raises(StructuralError, match="native"):
        chart_data({"monolingual": _report()}, "exp3")


def test_empty_chart():
    with pytest.raises(StructuralError):
        emit_chart_data({}, "exp2")


def test_chart_json_lossless_and_svg_static():
    rep = _report(0.0123456789)
    data, svg = emit_chart_data({"EN": rep}, "exp2")
    assert json.loads(data)["bars"][0]["value"] == rep.pooled["country"]
    assert svg.startswith("<svg") and "<script" not in svg


def test_significance_shading_follows_p():
    data = chart_data({"EN": _report(p=0.05), "FR": _report(p=0.049)}, "exp2")
    flags = {b["group"]: b["significant"] for b in data["bars"]}
    assert flags == {"EN": False, "FR": True}


def test_table2_rows():
    text = table2_summary(_report(-0.09, 0.3), _report(0.1))
    lines = text.splitlines()
    assert len(lines) == 3
    assert lines[1].startswith("Country-specific") and lines[1].split()[-2:] == ["51%", "70%*"]
