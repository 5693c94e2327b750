"""Scores, fixed-effects regressions and sign-agreement statistics.

Persuasion (P) and mobilization (M) are regressed on country effects plus
deprivation/framing terms under three nested models:

    A: intercept + countries + D + E + I
    B: A + EI + DE + DI
    C: B + DEI

Country effects use sum-to-zero coding, so the intercept is the unweighted
mean over countries and the omitted level is minus the sum of the others.
Every coefficient is reported from the earliest model that contains it.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtr

from .countries import COUNTRIES
from .errors import SingularDesignError, StructuralError
from .gateway import OUTCOMES, TERMS, ResponseRecord
from .personas import Persona
from .prompts import ProbeKind

logger = logging.getLogger(__name__)

MODEL_TERMS = {
    "A": ("D", "E", "I"),
    "B": ("D", "E", "I", "EI", "DE", "DI"),
    "C": ("D", "E", "I", "EI", "DE", "DI", "DEI"),
}
EARLIEST_MODEL = {"D": "A", "E": "A", "I": "A", "EI": "B", "DE": "B", "DI": "B", "DEI": "C"}
MODELS = ("A", "B", "C")
POOLS = (
    "framing", "country", "all",
    "framing_P", "framing_M", "country_P", "country_M", "all_P", "all_M",
)


def lambda_label(term: str, outcome: str) -> str:
    return f"lambda_{term}_{outcome}"


def country_label(country: str, outcome: str) -> str:
    return f"C_{country}_{outcome}"


def table_labels(countries: Sequence[str] = COUNTRIES, outcomes=OUTCOMES) -> list[str]:
    """Canonical term order: per outcome, framing/deprivation terms then countries."""
    out = []
    for o in outcomes:
        out += [lambda_label(t, o) for t in TERMS]
        out += [country_label(c, o) for c in countries]
    return out


# -- scores ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreRecord:
    persona_id: str
    country: str
    D: float
    E: int
    I: int  # noqa: E741
    P: float
    M: float
    language_code: str
    masked: bool


@dataclass
class ScoreResult:
    scores: list[ScoreRecord]
    excluded: dict[str, str] = field(default_factory=dict)


def compute_scores(records: Iterable[ResponseRecord], personas: Iterable[Persona]) -> ScoreResult:
    by_persona: dict[str, dict[ProbeKind, ResponseRecord]] = defaultdict(dict)
    for r in records:
        by_persona[r.persona_id][r.probe] = r
    scores, excluded = [], {}
    for p in sorted(personas, key=lambda p: p.id):
        got = by_persona.get(p.id, {})
        missing = [k.value for k in ProbeKind if k not in got]
        if missing:
            excluded[p.id] = "missing probes: " + ", ".join(missing)
            continue
        first = got[ProbeKind.Persuasion1]
        scores.append(
            ScoreRecord(
                persona_id=p.id,
                country=p.country,
                D=p.deprivation,
                E=p.framing.E,
                I=p.framing.I,
                P=(got[ProbeKind.Persuasion1].rating + got[ProbeKind.Persuasion2].rating) / 2,
                M=(
                    got[ProbeKind.Mobilization1].rating
                    + got[ProbeKind.Mobilization2].rating
                    + got[ProbeKind.Mobilization3].rating
                ) / 3,
                language_code=first.language_code,
                masked=first.masked,
            )
        )
    if excluded:
        logger.info("excluded %d personas with incomplete responses", len(excluded))
    return ScoreResult(scores, excluded)


SCORE_FIELDS = ("persona_id", "country", "D", "E", "I", "P", "M", "language_code", "masked")


def dumps_scores(scores: Iterable[ScoreRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCORE_FIELDS)
    for s in scores:
        w.writerow([s.persona_id, s.country, repr(s.D), s.E, s.I, repr(s.P), repr(s.M), s.language_code, int(s.masked)])
    return buf.getvalue()


def loads_scores(text: str) -> list[ScoreRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append(
            ScoreRecord(
                persona_id=row["persona_id"],
                country=row["country"],
                D=float(row["D"]),
                E=int(row["E"]),
                I=int(row["I"]),
                P=float(row["P"]),
                M=float(row["M"]),
                language_code=row["language_code"],
                masked=bool(int(row["masked"])),
            )
        )
    return out


# -- least squares --------------------------------------------------------------------


@dataclass
class OLSResult:
    coef: np.ndarray
    se: np.ndarray
    sigma2: np.ndarray | float
    unscaled_cov: np.ndarray
    dof: int

    @property
    def cov(self) -> np.ndarray:
        return self.sigma2 * self.unscaled_cov


class LeastSquares:
    """Householder-QR least squares for a fixed design, reusable across responses."""

    rank_tol = 1e-10

    def __init__(self, X, labels: Sequence[str] | None = None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("design matrix must be 2-D")
        n, p = X.shape
        if n <= p:
            raise ValueError(f"need more rows than columns (got {n}x{p})")
        self.X = X
        self.labels = list(labels) if labels is not None else [str(j) for j in range(p)]
        self.Q, R = np.linalg.qr(X)
        diag = np.abs(np.diag(R))
        scale = max(diag.max(), np.finfo(float).tiny)
        dependent = [self.labels[j] for j in range(p) if diag[j] <= self.rank_tol * scale]
        if dependent:
            raise SingularDesignError(dependent)
        self.R = R
        self.Rinv = solve_triangular(R, np.eye(p))
        self.unscaled_cov = self.Rinv @ self.Rinv.T
        self.dof = n - p

    def solve(self, y) -> OLSResult:
        y = np.asarray(y, dtype=float)
        coef = self.Rinv @ (self.Q.T @ y)
        resid = y - self.X @ coef
        sigma2 = np.sum(resid**2, axis=0) / self.dof
        var = np.diag(self.unscaled_cov)
        se = np.sqrt(np.multiply.outer(var, sigma2)) if y.ndim == 2 else np.sqrt(var * sigma2)
        return OLSResult(coef, se, sigma2, self.unscaled_cov, self.dof)


def fit_ols(X, y) -> OLSResult:
    """Ordinary least squares with classical (homoskedastic) standard errors."""
    return LeastSquares(X).solve(y)


# -- design ---------------------------------------------------------------------------


def country_levels(countries: Iterable[str]) -> list[str]:
    present = set(countries)
    return [c for c in COUNTRIES if c in present]


def _features(scores: Sequence[ScoreRecord]):
    D = np.array([s.D for s in scores], dtype=float)
    E = np.array([s.E for s in scores], dtype=float)
    I = np.array([s.I for s in scores], dtype=float)  # noqa: E741
    return D, E, I


def design_from_features(D, E, I, countries: Sequence[str], model: str, levels=None):  # noqa: E741
    if model not in MODEL_TERMS:
        raise ValueError(f"unknown model {model!r}")
    levels = country_levels(countries) if levels is None else list(levels)
    if len(levels) < 2:
        raise ValueError("at least two countries are required")
    n = len(countries)
    index = {c: k for k, c in enumerate(levels)}
    codes = np.array([index[c] for c in countries])
    # Sum-to-zero contrasts: one column per non-final level, final level coded -1.
    contrast = np.zeros((n, len(levels) - 1))
    for k in range(len(levels) - 1):
        contrast[:, k] = (codes == k).astype(float) - (codes == len(levels) - 1)
    columns = {"D": D, "E": E, "I": I, "EI": E * I, "DE": D * E, "DI": D * I, "DEI": D * E * I}
    terms = MODEL_TERMS[model]
    X = np.column_stack([np.ones(n), contrast] + [columns[t] for t in terms])
    labels = ["intercept"] + [f"C_{c}" for c in levels[:-1]] + list(terms)
    return X, labels, levels


def build_design_matrix(scores: Sequence[ScoreRecord], model: str, outcome: str):
    """Return ``(X, labels, y)`` for one model and outcome."""
    if outcome not in OUTCOMES:
        raise ValueError(f"unknown outcome {outcome!r}")
    D, E, I = _features(scores)  # noqa: E741
    X, labels, _ = design_from_features(D, E, I, [s.country for s in scores], model)
    y = np.array([getattr(s, outcome) for s in scores], dtype=float)
    return X, labels, y


# -- coefficient tables ---------------------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float

    def __post_init__(self):
        if not np.isfinite(self.se) or self.se < 0:
            raise ValueError(f"standard error must be finite and >= 0, got {self.se}")


@dataclass
class CoefficientTable:
    terms: dict[str, Estimate]
    intercepts: dict[str, Estimate] = field(default_factory=dict)
    rounded_source: bool = False

    def labels(self) -> list[str]:
        return list(self.terms)

    def countries(self) -> list[str]:
        found = {lbl.split("_")[1] for lbl in self.terms if lbl.startswith("C_")}
        return [c for c in COUNTRIES if c in found]

    def __getitem__(self, label: str) -> Estimate:
        return self.terms[label]

    def arrays(self, labels: Sequence[str]):
        values = np.array([self.terms[lbl].value for lbl in labels])
        ses = np.array([self.terms[lbl].se for lbl in labels])
        return values, ses

    def to_json(self) -> dict:
        return {
            "schema": "coefficient-table/1",
            "rounded_source": self.rounded_source,
            "intercepts": {k: {"value": e.value, "se": e.se} for k, e in self.intercepts.items()},
            "terms": {k: {"value": e.value, "se": e.se} for k, e in self.terms.items()},
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "CoefficientTable":
        if obj.get("schema") != "coefficient-table/1":
            raise StructuralError(f"unsupported coefficient table schema {obj.get('schema')!r}")
        return cls(
            terms={k: Estimate(float(v["value"]), float(v["se"])) for k, v in obj["terms"].items()},
            intercepts={k: Estimate(float(v["value"]), float(v["se"])) for k, v in obj.get("intercepts", {}).items()},
            rounded_source=bool(obj.get("rounded_source", False)),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CoefficientTable":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class ModelFit:
    model: str
    outcome: str
    labels: list[str]
    levels: list[str]
    result: OLSResult


def _extract_arrays(fits: Mapping[str, ModelFit]):
    """Earliest-model extraction; works column-wise when fits hold several responses.

    Returns (names, values, ses, intercept_value, intercept_se) where names are
    outcome-free term names (``"D"``, ``"C_at"``...).
    """
    a = fits["A"]
    levels = a.levels
    names, values, ses = [], [], []
    for term in TERMS:
        fit = fits[EARLIEST_MODEL[term]]
        j = fit.labels.index(term)
        names.append(term)
        values.append(fit.result.coef[j])
        ses.append(fit.result.se[j])
    k = len(levels) - 1
    block = slice(1, 1 + k)
    coef_c = a.result.coef[block]
    for i, c in enumerate(levels[:-1]):
        names.append(f"C_{c}")
        values.append(coef_c[i])
        ses.append(a.result.se[1 + i])
    names.append(f"C_{levels[-1]}")
    values.append(-coef_c.sum(axis=0))
    w = a.result.unscaled_cov[block, block].sum()
    ses.append(np.sqrt(w * a.result.sigma2))
    return names, np.array(values), np.array(ses), a.result.coef[0], a.result.se[0]


def extract_coefficients(fits: Iterable[ModelFit], outcome: str) -> CoefficientTable:
    """Half of a coefficient table (one outcome) from the three model fits."""
    by_model = {f.model: f for f in fits if f.outcome == outcome}
    missing = set(MODELS) - set(by_model)
    if missing:
        raise ValueError(f"missing fits for models {sorted(missing)} ({outcome})")
    names, values, ses, b0, se0 = _extract_arrays(by_model)
    terms = {}
    for name, v, s in zip(names, values, ses):
        label = lambda_label(name, outcome) if name in TERMS else f"{name}_{outcome}"
        terms[label] = Estimate(float(v), float(s))
    return CoefficientTable(terms, {outcome: Estimate(float(b0), float(se0))})


class FixedEffectsModels:
    """The three nested designs for one set of participant features.

    Features never change under response shuffling, so each design is
    factorised once and reused for every response vector.
    """

    def __init__(self, scores: Sequence[ScoreRecord]):
        if not scores:
            raise ValueError("no scores to fit")
        D, E, I = _features(scores)  # noqa: E741
        countries = [s.country for s in scores]
        self.n = len(scores)
        self.levels = country_levels(countries)
        self.solvers = {}
        self.labels = {}
        for m in MODELS:
            X, labels, _ = design_from_features(D, E, I, countries, m, self.levels)
            self.solvers[m] = LeastSquares(X, labels)
            self.labels[m] = labels
        self.Y = np.column_stack([[s.P for s in scores], [s.M for s in scores]])

    def fits(self, y, outcome: str) -> list[ModelFit]:
        return [ModelFit(m, outcome, self.labels[m], self.levels, self.solvers[m].solve(y)) for m in MODELS]

    def table(self, Y=None) -> CoefficientTable:
        Y = self.Y if Y is None else Y
        out = CoefficientTable({}, {})
        for col, outcome in enumerate(OUTCOMES):
            half = extract_coefficients(self.fits(Y[:, col], outcome), outcome)
            out.terms.update(half.terms)
            out.intercepts.update(half.intercepts)
        return out

    def table_arrays(self, Y):
        """Values and ses in ``table_labels(self.levels)`` order, one column per response pair.

        ``Y`` has shape (n, 2k) with P and M columns interleaved.
        """
        parts_v, parts_s = [], []
        for col, outcome in enumerate(OUTCOMES):
            sub = Y[:, col::2]
            fits = {m: f for m, f in zip(MODELS, self.fits(sub, outcome))}
            _, v, s, _, _ = _extract_arrays(fits)
            parts_v.append(v)
            parts_s.append(s)
        return np.vstack(parts_v), np.vstack(parts_s)


def fit_coefficient_table(scores: Sequence[ScoreRecord]) -> CoefficientTable:
    return FixedEffectsModels(scores).table()


# -- sign agreement -------------------------------------------------------------------


def _upper_lower(value, se):
    """P(coefficient > 0) and P(coefficient < 0) under a normal posterior."""
    value = np.asarray(value, dtype=float)
    se = np.asarray(se, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, value / np.where(se > 0, se, 1.0), np.sign(value) * np.inf)
    up = ndtr(z)
    down = ndtr(-z)
    # A zero-width posterior at exactly zero has no sign; split evenly.
    degenerate = (se == 0) & (value == 0)
    up = np.where(degenerate, 0.5, up)
    down = np.where(degenerate, 0.5, down)
    return up, down


def sign_agreements(value_a, se_a, value_b, se_b) -> np.ndarray:
    ua, da = _upper_lower(value_a, se_a)
    ub, db = _upper_lower(value_b, se_b)
    return ua * ub + da * db


def sign_agreement(a: Estimate, b: Estimate) -> float:
    """Probability that two normally-distributed estimates share a sign."""
    return float(sign_agreements(a.value, a.se, b.value, b.se))


def agreement_bounds(a: Estimate, b: Estimate, half_width: float = 0.0005) -> tuple[float, float]:
    """Range of sign agreement when every printed number may be off by ``half_width``.

    Agreement is monotone in each z-score and each z-score is monotone in its
    value and se, so the extremes sit on corners of the rounding box.
    """
    corners = []
    for dva in (-half_width, half_width):
        for dsa in (-half_width, half_width):
            for dvb in (-half_width, half_width):
                for dsb in (-half_width, half_width):
                    corners.append((a.value + dva, max(a.se + dsa, 0.0), b.value + dvb, max(b.se + dsb, 0.0)))
    va, sa, vb, sb = (np.array(c) for c in zip(*corners))
    vals = sign_agreements(va, sa, vb, sb)
    return float(vals.min()), float(vals.max())


def pool_agreements(probabilities) -> float:
    probabilities = list(probabilities)
    if not probabilities:
        raise ValueError("cannot pool an empty set of agreements")
    return float(np.mean(probabilities))


def pool_members(labels: Sequence[str]) -> dict[str, list[int]]:
    """Indices of ``labels`` belonging to each pooled subset."""
    out = {name: [] for name in POOLS}
    for i, lbl in enumerate(labels):
        outcome = lbl.rsplit("_", 1)[1]
        group = "framing" if lbl.startswith("lambda_") else "country"
        for name in (group, "all", f"{group}_{outcome}", f"all_{outcome}"):
            out[name].append(i)
    return out


@dataclass
class SignAgreementReport:
    agreements: dict[str, float]
    pooled: dict[str, float]
    p_values: dict[str, float] = field(default_factory=dict)
    n_perm: int = 0
    meta: dict = field(default_factory=dict)

    def significant(self, metric: str, alpha: float = 0.05) -> bool:
        p = self.p_values.get(metric)
        return p is not None and p < alpha

    def to_json(self) -> dict:
        return {
            "schema": "sign-agreement-report/1",
            "meta": self.meta,
            "agreements": self.agreements,
            "pooled": self.pooled,
            "p_values": self.p_values,
            "n_perm": self.n_perm,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "SignAgreementReport":
        if obj.get("schema") != "sign-agreement-report/1":
            raise StructuralError(f"unsupported report schema {obj.get('schema')!r}")
        return cls(
            agreements=dict(obj["agreements"]),
            pooled=dict(obj["pooled"]),
            p_values=dict(obj.get("p_values", {})),
            n_perm=int(obj.get("n_perm", 0)),
            meta=dict(obj.get("meta", {})),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def check_same_terms(a: CoefficientTable, b: CoefficientTable) -> None:
    diff = set(a.terms) ^ set(b.terms)
    if diff:
        raise StructuralError("coefficient tables cover different terms: " + ", ".join(sorted(diff)))


def agreement_vector(model: CoefficientTable, reference: CoefficientTable, labels: Sequence[str]):
    mv, ms = model.arrays(labels)
    rv, rs = reference.arrays(labels)
    return sign_agreements(mv, ms, rv, rs)


def pooled_rates(agreements: np.ndarray, labels: Sequence[str]) -> dict[str, float]:
    """Pool along the first axis of ``agreements``; empty subsets are skipped."""
    return {
        name: np.mean(agreements[idx], axis=0)
        for name, idx in pool_members(labels).items()
        if idx
    }


def agreement_report(
    model: CoefficientTable,
    reference: CoefficientTable,
    p_values: Mapping[str, float] | None = None,
    n_perm: int = 0,
    meta: Mapping | None = None,
) -> SignAgreementReport:
    check_same_terms(model, reference)
    labels = [lbl for lbl in table_labels(model.countries()) if lbl in model.terms]
    agree = agreement_vector(model, reference, labels)
    return SignAgreementReport(
        agreements={lbl: float(a) for lbl, a in zip(labels, agree)},
        pooled={k: float(v) for k, v in pooled_rates(agree, labels).items()},
        p_values=dict(p_values or {}),
        n_perm=n_perm,
        meta=dict(meta or {}),
    )


# -- permutation significance ---------------------------------------------------------


def permutation_pvalues(
    scores: Sequence[ScoreRecord],
    reference: CoefficientTable,
    n_perm: int = 999,
    seed: int = 0,
    chunk: int = 50,
    return_null: bool = False,
):
    """Add-one permutation p-values for every pooled agreement rate.

    Each replicate shuffles the (P, M) pairs across participants while the
    features stay in place, refits all models and recomputes agreement.
    Because the design depends only on the features, it is never singular
    under shuffling and each design is factorised once.
    """
    if n_perm < 99:
        raise ValueError(f"n_perm must be >= 99, got {n_perm}")
    fe = FixedEffectsModels(scores)
    labels = table_labels(fe.levels)
    missing = [lbl for lbl in labels if lbl not in reference.terms]
    if missing:
        raise StructuralError("reference lacks terms: " + ", ".join(missing))
    ref_v, ref_s = reference.arrays(labels)

    def rates(Y):
        v, s = fe.table_arrays(Y)
        agree = sign_agreements(v, s, ref_v[:, None], ref_s[:, None])
        return pooled_rates(agree, labels)

    observed = {k: float(v[0]) for k, v in rates(fe.Y).items()}
    rng = np.random.default_rng(seed)
    null = {k: [] for k in observed}
    done = 0
    while done < n_perm:
        size = min(chunk, n_perm - done)
        cols = []
        for _ in range(size):
            idx = rng.permutation(fe.n)
            cols.append(fe.Y[idx])
        Y = np.concatenate(cols, axis=1)
        for k, v in rates(Y).items():
            null[k].extend(v.tolist())
        done += size
    pvals = {}
    for k, obs in observed.items():
        arr = np.asarray(null[k])
        pvals[k] = float((1 + np.count_nonzero(arr >= obs - 1e-12)) / (1 + n_perm))
    if return_null:
        return pvals, observed, {k: np.asarray(v) for k, v in null.items()}
    return pvals


def permutation_significance(
    scores: Sequence[ScoreRecord],
    reference: CoefficientTable,
    metric: str = "all",
    n_perm: int = 999,
    seed: int = 0,
) -> float:
    if metric not in POOLS:
        raise ValueError(f"unknown pooled metric {metric!r}; choose from {POOLS}")
    return permutation_pvalues(scores, reference, n_perm, seed)[metric]


def analyze(
    scores: Sequence[ScoreRecord],
    reference: CoefficientTable,
    n_perm: int = 999,
    seed: int = 0,
    meta: Mapping | None = None,
) -> tuple[CoefficientTable, SignAgreementReport]:
    """Fit all models, compare with ``reference`` and attach permutation p-values."""
    table = fit_coefficient_table(scores)
    ref = restrict_reference(reference, table)
    pvals = permutation_pvalues(scores, ref, n_perm, seed) if n_perm else {}
    return table, agreement_report(table, ref, pvals, n_perm, meta)


def restrict_reference(reference: CoefficientTable, table: CoefficientTable) -> CoefficientTable:
    """Drop reference countries absent from ``table`` (small populations)."""
    missing = set(table.terms) - set(reference.terms)
    if missing:
        raise StructuralError("reference lacks terms: " + ", ".join(sorted(missing)))
    return CoefficientTable(
        {k: v for k, v in reference.terms.items() if k in table.terms},
        dict(reference.intercepts),
        reference.rounded_source,
    )


@dataclass
class RepetitionSummary:
    """Mean and spread of pooled rates over repeated runs."""

    values: dict[str, list[float]]
    p_values: dict[str, list[float]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def reps(self) -> int:
        return len(next(iter(self.values.values()))) if self.values else 0

    @property
    def degenerate(self) -> bool:
        return self.reps < 2

    @property
    def mean(self) -> dict[str, float]:
        return {k: float(np.mean(v)) for k, v in self.values.items()}

    @property
    def sd(self) -> dict[str, float]:
        # One repetition has no spread; report 0 and flag it as degenerate.
        if self.degenerate:
            return {k: 0.0 for k in self.values}
        return {k: float(np.std(v, ddof=1)) for k, v in self.values.items()}

    def significant(self, metric: str, alpha: float = 0.05) -> bool:
        """Median per-repetition p-value below ``alpha``."""
        ps = self.p_values.get(metric)
        return bool(ps) and float(np.median(ps)) < alpha

    @classmethod
    def from_reports(cls, reports: Sequence[SignAgreementReport], meta=None) -> "RepetitionSummary":
        if not reports:
            raise ValueError("no reports to summarise")
        metrics = list(reports[0].pooled)
        values = {m: [r.pooled[m] for r in reports] for m in metrics}
        p_values = {m: [r.p_values[m] for r in reports] for m in metrics if all(m in r.p_values for r in reports)}
        return cls(values, p_values, dict(meta or {}))

    def to_json(self) -> dict:
        return {
            "schema": "repetition-summary/1",
            "reps": self.reps,
            "degenerate": self.degenerate,
            "mean": self.mean,
            "sd": self.sd,
            "values": self.values,
            "p_values": self.p_values,
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "RepetitionSummary":
        return cls(
            {k: list(v) for k, v in obj["values"].items()},
            {k: list(v) for k, v in obj.get("p_values", {}).items()},
            dict(obj.get("meta", {})),
        )
