"""Command-line entry point: ``silicon-survey <subcommand>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigurationError, SurveyError
from .experiments import (
    reference_params,
    run_experiment1,
    run_experiment2,
    run_experiment3,
)
from .gateway import BackendConfig, ResponseCache, SyntheticRespondentParams, load_records, make_backend
from .personas import PopulationSpec, desk_scale_spec, load_population, save_population, synthesize_population
from .prompts import bundled_catalogs, load_catalog_dir
from .report import emit_chart_data, load_human_reference, render_comparison_table, table2_summary
from .stats import (
    CoefficientTable,
    RepetitionSummary,
    SignAgreementReport,
    agreement_report,
    analyze,
    compute_scores,
    dumps_scores,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("silicon_survey")

DESK_FRACTION = 0.1
DESK_REPS = 10
FULL_REPS = 100


def load_config(path) -> dict:
    """Read a TOML or JSON config with optional ``backend``, ``synthetic`` and ``run`` tables."""
    if path is None:
        return {}
    p = Path(path)
    raw = p.read_bytes()
    try:
        cfg = tomllib.loads(raw.decode("utf-8")) if p.suffix == ".toml" else json.loads(raw)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigurationError(f"cannot parse config {p}: {exc}") from exc
    unknown = set(cfg) - {"backend", "synthetic", "run", "population"}
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
    return cfg


def _backend_config(args, cfg) -> BackendConfig:
    data = dict(cfg.get("backend", {}))
    for key in ("kind", "concurrency", "rate_limit", "cache_dir"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    return BackendConfig.from_dict(data)


def _synthetic_params(cfg) -> SyntheticRespondentParams:
    data = dict(cfg.get("synthetic", {}))
    if data.pop("from_reference", not data):
        return reference_params(noise_sd=data.pop("noise_sd", 1.0), seed=data.pop("seed", 0), **data)
    return SyntheticRespondentParams(**data)


def _population(args, cfg):
    if args.population:
        return load_population(args.population)
    pcfg = dict(cfg.get("population", {}))
    seed = args.seed if args.seed is not None else pcfg.get("seed", 0)
    if args.full_scale:
        return synthesize_population(PopulationSpec(seed=seed))
    return synthesize_population(desk_scale_spec(pcfg.get("fraction", DESK_FRACTION), seed=seed))


def _catalogs(args):
    return load_catalog_dir(args.catalogs) if args.catalogs else bundled_catalogs()


def _setting(args, cfg, name, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return cfg.get("run", {}).get(name, default)


def _run_kwargs(args, cfg, catalogs):
    bcfg = _backend_config(args, cfg)
    params = _synthetic_params(cfg) if bcfg.kind == "synthetic" else None
    backend = make_backend(bcfg, params=params, catalogs=catalogs)
    return backend, {
        "out_dir": Path(args.out),
        "n_perm": _setting(args, cfg, "n_perm", 999),
        "seed": _setting(args, cfg, "seed", 0),
        "cache": ResponseCache(bcfg.cache_dir) if bcfg.cache_dir else None,
        "concurrency": bcfg.concurrency,
        "failure_threshold": bcfg.failure_threshold,
    }


def _emit(text: str, out: Path | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8")
        print(out / name)


def cmd_synth_population(args, cfg) -> int:
    people = _population(args, cfg)
    save_population(people, args.output)
    print(f"wrote {len(people)} personas to {args.output}")
    return 0


def cmd_run_exp1(args, cfg) -> int:
    catalogs = _catalogs(args)
    backend, kw = _run_kwargs(args, cfg, catalogs)
    reports = run_experiment1(_population(args, cfg), catalogs, backend, **kw)
    summary = table2_summary(reports["masked"], reports["unmasked"])
    (kw["out_dir"] / "table2.txt").write_text(summary, encoding="utf-8")
    sys.stdout.write(summary)
    return 0


def cmd_run_exp2(args, cfg) -> int:
    catalogs = _catalogs(args)
    backend, kw = _run_kwargs(args, cfg, catalogs)
    languages = args.languages.split(",") if args.languages else None
    extra = {"languages": languages} if languages else {}
    reports = run_experiment2(_population(args, cfg), catalogs, backend, **kw, **extra)
    for code, r in reports.items():
        print(f"{code}: country {r.pooled['country']:.3f}  framing {r.pooled['framing']:.3f}")
    return 0


def cmd_run_exp3(args, cfg) -> int:
    catalogs = _catalogs(args)
    backend, kw = _run_kwargs(args, cfg, catalogs)
    reps = _setting(args, cfg, "reps", FULL_REPS if args.full_scale else DESK_REPS)
    mono = SignAgreementReport.from_json(json.loads(Path(args.monolingual).read_text())) if args.monolingual else None
    result = run_experiment3(_population(args, cfg), catalogs, backend, reps=reps, monolingual=mono, **kw)
    print(f"native: country {result.native.pooled['country']:.3f}  framing {result.native.pooled['framing']:.3f}")
    for mode in ("country_shuffled", "full_shuffled"):
        s = getattr(result, mode)
        print(f"{mode}: country {s.mean['country']:.3f} ± {s.sd['country']:.3f}  "
              f"framing {s.mean['framing']:.3f} ± {s.sd['framing']:.3f}  ({s.reps} reps)")
    return 0


def cmd_analyze(args, cfg) -> int:
    people = load_population(args.population)
    records = load_records(args.responses)
    scored = compute_scores(records, people)
    reference = CoefficientTable.load(args.reference) if args.reference else load_human_reference()
    n_perm = _setting(args, cfg, "n_perm", 999)
    seed = _setting(args, cfg, "seed", 0)
    table, report = analyze(scored.scores, reference, n_perm=n_perm, seed=seed,
                            meta={"responses": str(args.responses), "n_excluded": len(scored.excluded)})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scores.csv").write_text(dumps_scores(scored.scores), encoding="utf-8")
    table.save(out / "coefficients.json")
    (out / "report.json").write_text(report.dumps(), encoding="utf-8")
    print(f"scored {len(scored.scores)} participants, excluded {len(scored.excluded)}; wrote {out}")
    return 0


def _load_chart_items(kind: str, run_dir: Path, monolingual):
    def report(path):
        return SignAgreementReport.from_json(json.loads(path.read_text(encoding="utf-8")))

    if kind == "exp2":
        return {p.parent.name.upper(): report(p) for p in sorted(run_dir.glob("*/report.json"))}
    items = {"native": report(run_dir / "native" / "report.json")}
    for mode in ("country_shuffled", "full_shuffled"):
        path = run_dir / f"{mode}_summary.json"
        if path.exists():
            items[mode] = RepetitionSummary.from_json(json.loads(path.read_text(encoding="utf-8")))
    if monolingual:
        items["monolingual"] = report(Path(monolingual))
    return items


def cmd_report(args, cfg) -> int:
    out = Path(args.out) if args.out else None
    if args.chart:
        if args.format not in ("json", "svg"):
            raise ConfigurationError("charts are emitted as json or svg")
        data, svg = emit_chart_data(_load_chart_items(args.chart, Path(args.run_dir), args.monolingual), args.chart)
        _emit(data if args.format == "json" else svg, out, f"chart_{args.chart}.{args.format}")
        return 0
    if not args.coefficients:
        raise ConfigurationError("report needs --coefficients or --chart")
    human = CoefficientTable.load(args.reference) if args.reference else load_human_reference()
    model = CoefficientTable.load(args.coefficients)
    agreements = None
    if args.agreements:
        agreements = SignAgreementReport.from_json(json.loads(Path(args.agreements).read_text(encoding="utf-8")))
    text, csv_text = render_comparison_table(human, model, agreements)
    if args.format == "text":
        _emit(text, out, "comparison.txt")
    elif args.format == "csv":
        _emit(csv_text, out, "comparison.csv")
    elif args.format == "json":
        rep = agreements or agreement_report(model, human)
        _emit(rep.dumps(), out, "comparison.json")
    else:
        raise ConfigurationError("the comparison table is emitted as text, csv or json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="silicon-survey", description="Simulated populism-framing survey runs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def population_flags(p):
        p.add_argument("--config", help="TOML or JSON config file")
        p.add_argument("--population", help="persona JSONL to use instead of synthesising one")
        p.add_argument("--seed", type=int)
        p.add_argument("--full-scale", action="store_true", help="use the full 7,286-persona population")

    p = sub.add_parser("synth-population", help="write a synthetic persona population as JSONL")
    population_flags(p)
    p.add_argument("output")
    p.set_defaults(func=cmd_synth_population)

    for name, func, doc in (
        ("run-exp1", cmd_run_exp1, "English prompts, masked and unmasked"),
        ("run-exp2", cmd_run_exp2, "monolingual prompts in each language"),
        ("run-exp3", cmd_run_exp3, "native-language prompts and shuffled controls"),
    ):
        p = sub.add_parser(name, help=doc)
        population_flags(p)
        p.add_argument("--out", required=True, help="run directory")
        p.add_argument("--kind", choices=("synthetic", "remote"), help="backend kind")
        p.add_argument("--concurrency", type=int)
        p.add_argument("--rate-limit", type=float, dest="rate_limit", help="requests per second")
        p.add_argument("--cache-dir", dest="cache_dir")
        p.add_argument("--catalogs", help="directory of catalog JSON files (default: bundled)")
        p.add_argument("--n-perm", type=int, dest="n_perm")
        if name == "run-exp2":
            p.add_argument("--languages", help="comma-separated language codes (default: all 12)")
        if name == "run-exp3":
            p.add_argument("--reps", type=int)
            p.add_argument("--monolingual", help="report.json of a monolingual run, for the chart")
        p.set_defaults(func=func)

    p = sub.add_parser("analyze", help="score responses and fit coefficients")
    p.add_argument("--config")
    p.add_argument("--responses", required=True)
    p.add_argument("--population", required=True)
    p.add_argument("--reference", help="coefficient table to compare against (default: human reference)")
    p.add_argument("--n-perm", type=int, dest="n_perm")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="render comparison tables and chart data")
    p.add_argument("--config")
    p.add_argument("--coefficients", help="model coefficients.json")
    p.add_argument("--agreements", help="report.json with agreements and p-values")
    p.add_argument("--reference", help="coefficient table for the human side (default: bundled)")
    p.add_argument("--chart", choices=("exp2", "exp3"))
    p.add_argument("--run-dir", default=".", help="experiment directory holding per-run report.json files")
    p.add_argument("--monolingual", help="report.json of a monolingual run (exp3 chart)")
    p.add_argument("--format", choices=("text", "csv", "json", "svg"), default="text")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args, load_config(getattr(args, "config", None)))
    except SurveyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
