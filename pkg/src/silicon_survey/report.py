"""Comparison tables, chart data and the bundled human reference coefficients."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import statistics
from importlib import resources
from typing import Mapping
from xml.sax.saxutils import escape

from .countries import COUNTRIES
from .errors import IntegrityError, StructuralError
from .gateway import OUTCOMES, TERMS
from .stats import (
    CoefficientTable,
    RepetitionSummary,
    SignAgreementReport,
    agreement_report,
    check_same_terms,
    country_label,
    lambda_label,
)

# sha256 of the bundled files; values are the published 3-decimal figures.
_CHECKSUMS = {
    "human_reference.json": "cdab1bc7c139b1b14ce784be5abb58ba7dfde2d09b3677685ce52716edf24c64",
    "gpt35_reference.json": "0d6ae1795e99aa71c65c7ba94ecee086c0b689a6351ddaec7c04f9a2ba647b52",
}

TERM_DISPLAY = {"D": "D", "E": "E", "I": "I", "EI": "E×I", "DE": "D×E", "DI": "D×I", "DEI": "D×E×I"}
ALPHA = 0.05


def _load_bundled(name: str) -> CoefficientTable:
    raw = (resources.files("silicon_survey") / "data" / name).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != _CHECKSUMS[name]:
        raise IntegrityError(f"{name} checksum mismatch: {digest}")
    return CoefficientTable.from_json(json.loads(raw.decode("utf-8")))


def load_human_reference() -> CoefficientTable:
    """Human-participant coefficients (44 terms) from the original study."""
    return _load_bundled("human_reference.json")


def load_gpt35_reference() -> CoefficientTable:
    """GPT-3.5 coefficients from the English, unmasked run of the comparison table."""
    return _load_bundled("gpt35_reference.json")


def format_percent(p: float) -> str:
    """One decimal below 10%, whole percent otherwise."""
    pct = 100.0 * p
    if round(pct, 1) < 10:
        return f"{pct:.1f}%"
    return f"{pct:.0f}%"


def _fmt_estimate(value: float, se: float) -> str:
    return f"{value:+.3f} ({se:.3f})"


def _rows(human: CoefficientTable):
    rows = []
    for t in TERMS:
        rows.append(("term", TERM_DISPLAY[t], {o: lambda_label(t, o) for o in OUTCOMES}))
    rows.append(("subtotal", "framing", None))
    for c in COUNTRIES:
        if country_label(c, "P") in human.terms:
            rows.append(("term", c, {o: country_label(c, o) for o in OUTCOMES}))
    rows.append(("subtotal", "country", None))
    rows.append(("subtotal", "all", None))
    return rows


CSV_FIELDS = (
    "row", "kind",
    "human_P", "human_P_se", "model_P", "model_P_se", "agree_P",
    "human_M", "human_M_se", "model_M", "model_M_se", "agree_M",
    "agree_PM", "sig_P", "sig_M", "sig_PM",
)


def render_comparison_table(
    human: CoefficientTable,
    model: CoefficientTable,
    agreements: SignAgreementReport | None = None,
    significance: Mapping[str, bool] | None = None,
) -> tuple[str, str]:
    """Side-by-side table of coefficients and sign agreements as (text, csv).

    Pooled rates flagged significant are marked with ``*``. ``significance``
    defaults to ``p < 0.05`` on the report's permutation p-values.
    """
    check_same_terms(human, model)
    if agreements is None:
        agreements = agreement_report(model, human)
    if significance is None:
        significance = {k: agreements.significant(k, ALPHA) for k in agreements.pooled}

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    header = f"{'':<8}{'human P':>17}{'model P':>17}{'agree':>8}{'human M':>17}{'model M':>17}{'agree':>8}{'p&m':>8}"
    lines = [header, "-" * len(header)]
    for kind, name, labels in _rows(human):
        if kind == "term":
            a = {o: agreements.agreements[labels[o]] for o in OUTCOMES}
            both = (a["P"] + a["M"]) / 2
            hp, mp = human[labels["P"]], model[labels["P"]]
            hm, mm = human[labels["M"]], model[labels["M"]]
            lines.append(
                f"{name:<8}{_fmt_estimate(hp.value, hp.se):>17}{_fmt_estimate(mp.value, mp.se):>17}"
                f"{format_percent(a['P']):>8}{_fmt_estimate(hm.value, hm.se):>17}"
                f"{_fmt_estimate(mm.value, mm.se):>17}{format_percent(a['M']):>8}{format_percent(both):>8}"
            )
            w.writerow([
                name, kind, repr(hp.value), repr(hp.se), repr(mp.value), repr(mp.se), repr(a["P"]),
                repr(hm.value), repr(hm.se), repr(mm.value), repr(mm.se), repr(a["M"]), repr(both),
                "", "", "",
            ])
        else:
            keys = {"P": f"{name}_P", "M": f"{name}_M", "PM": name}
            vals = {k: agreements.pooled[v] for k, v in keys.items()}
            sig = {k: bool(significance.get(v, False)) for k, v in keys.items()}

            def cell(k):
                return format_percent(vals[k]) + ("*" if sig[k] else "")

            if lines[-1] != "-" * len(header):
                lines.append("-" * len(header))
            lines.append(
                f"{name:<8}{'':>34}{cell('P'):>8}{'':>34}{cell('M'):>8}{cell('PM'):>8}"
            )
            lines.append("-" * len(header))
            w.writerow([
                name, kind, "", "", "", "", repr(vals["P"]), "", "", "", "", repr(vals["M"]), repr(vals["PM"]),
                int(sig["P"]), int(sig["M"]), int(sig["PM"]),
            ])
    lines.append("* agreement significantly above chance (p < 0.05)")
    return "\n".join(lines) + "\n", buf.getvalue()


def parse_comparison_csv(text: str) -> list[dict]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        parsed = {"row": row["row"], "kind": row["kind"]}
        for k in CSV_FIELDS[2:]:
            v = row[k]
            if v == "":
                parsed[k] = None
            elif k.startswith("sig_"):
                parsed[k] = bool(int(v))
            else:
                parsed[k] = float(v)
        out.append(parsed)
    return out


# -- charts ---------------------------------------------------------------------------

CHART_METRICS = ("country", "framing")
EXP3_MODES = ("monolingual", "native", "country_shuffled", "full_shuffled")


def chart_data(items: Mapping[str, SignAgreementReport | RepetitionSummary], kind: str) -> dict:
    if not items:
        raise StructuralError("no reports supplied for chart")
    bars = []
    if kind == "exp2":
        for lang, report in items.items():
            if not isinstance(report, SignAgreementReport):
                raise StructuralError(f"exp2 expects one report per language, got {type(report).__name__}")
            for metric in CHART_METRICS:
                bars.append({
                    "group": lang,
                    "metric": metric,
                    "value": report.pooled[metric],
                    "sd": None,
                    "p_value": report.p_values.get(metric),
                    "significant": report.significant(metric, ALPHA),
                })
    elif kind == "exp3":
        missing = [m for m in EXP3_MODES if m not in items]
        if missing:
            raise StructuralError("exp3 chart lacks modes: " + ", ".join(missing))
        for mode in EXP3_MODES:
            item = items[mode]
            for metric in CHART_METRICS:
                if isinstance(item, RepetitionSummary):
                    p = item.p_values.get(metric)
                    bars.append({
                        "group": mode,
                        "metric": metric,
                        "value": item.mean[metric],
                        "sd": item.sd[metric],
                        "p_value": float(statistics.median(p)) if p else None,
                        "significant": item.significant(metric, ALPHA),
                    })
                else:
                    bars.append({
                        "group": mode,
                        "metric": metric,
                        "value": item.pooled[metric],
                        "sd": None,
                        "p_value": item.p_values.get(metric),
                        "significant": item.significant(metric, ALPHA),
                    })
    else:
        raise ValueError(f"unknown chart kind {kind!r}")
    return {"schema": "chart/1", "kind": kind, "bars": bars}


def render_svg(data: Mapping) -> str:
    """Static grouped bar chart; paler bars are not significant."""
    bars = data["bars"]
    groups = list(dict.fromkeys(b["group"] for b in bars))
    bar_w, gap, height, top, left = 14, 12, 200, 20, 40
    width = left + len(groups) * (len(CHART_METRICS) * bar_w + gap) + 20
    colours = {"country": ("#1f3b73", "#a9b8d6"), "framing": ("#7a2e1f", "#d9b0a6")}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height + top + 60}" '
        f'viewBox="0 0 {width} {height + top + 60}">',
        f'<line x1="{left}" y1="{top + height}" x2="{width - 10}" y2="{top + height}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + height}" stroke="black"/>',
    ]
    for tick in (0, 0.25, 0.5, 0.75, 1.0):
        y = top + height * (1 - tick)
        parts.append(f'<text x="{left - 4}" y="{y + 4:.1f}" font-size="9" text-anchor="end">{tick:.0%}</text>')
    y_half = top + height * 0.5
    parts.append(
        f'<line x1="{left}" y1="{y_half}" x2="{width - 10}" y2="{y_half}" stroke="grey" stroke-dasharray="3,3"/>'
    )
    for gi, group in enumerate(groups):
        x0 = left + 6 + gi * (len(CHART_METRICS) * bar_w + gap)
        for mi, metric in enumerate(CHART_METRICS):
            bar = next(b for b in bars if b["group"] == group and b["metric"] == metric)
            x = x0 + mi * bar_w
            h = height * bar["value"]
            fill = colours[metric][0 if bar["significant"] else 1]
            parts.append(
                f'<rect x="{x}" y="{top + height - h:.2f}" width="{bar_w - 2}" height="{h:.2f}" fill="{fill}">'
                f"<title>{escape(group)} {metric}: {bar['value']:.4f}</title></rect>"
            )
            if bar["sd"] is not None:
                lo = top + height * (1 - (bar["value"] - bar["sd"]))
                hi = top + height * (1 - (bar["value"] + bar["sd"]))
                cx = x + (bar_w - 2) / 2
                parts.append(f'<line x1="{cx}" y1="{lo:.2f}" x2="{cx}" y2="{hi:.2f}" stroke="black"/>')
        parts.append(
            f'<text x="{x0 + bar_w}" y="{top + height + 14}" font-size="9" text-anchor="middle">{escape(group)}</text>'
        )
    legend_y = top + height + 34
    for mi, metric in enumerate(CHART_METRICS):
        lx = left + mi * 150
        parts.append(f'<rect x="{lx}" y="{legend_y}" width="10" height="10" fill="{colours[metric][0]}"/>')
        label = "country-specific terms" if metric == "country" else "framing and deprivation"
        parts.append(f'<text x="{lx + 14}" y="{legend_y + 9}" font-size="9">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_chart_data(items: Mapping[str, SignAgreementReport | RepetitionSummary], kind: str) -> tuple[str, str]:
    """Chart bars as (JSON, SVG). JSON carries exact values; SVG is for viewing."""
    data = chart_data(items, kind)
    return json.dumps(data, indent=2, sort_keys=True) + "\n", render_svg(data)


def table2_summary(masked: SignAgreementReport, unmasked: SignAgreementReport) -> str:
    rows = [("Country-specific bias terms", "country"), ("Framing and relative deprivation coefficients", "framing")]
    lines = [f"{'Coefficients':<48}{'Masked':>10}{'Unmasked':>10}"]
    for title, metric in rows:
        cells = []
        for r in (masked, unmasked):
            cells.append(format_percent(r.pooled[metric]) + ("*" if r.significant(metric, ALPHA) else ""))
        lines.append(f"{title:<48}{cells[0]:>10}{cells[1]:>10}")
    return "\n".join(lines) + "\n"
