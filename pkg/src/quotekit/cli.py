"""quotekit command line: data generation, evaluation reports, serving, and the
proposal pipeline, all reproducible from flags and seeds.

Report commands print aligned text tables (or JSON with --json); commands that
write a delimited output file also render a matplotlib figure next to it
unless --no-fig is given.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import figures
from .agents import (
    ScriptedMock,
    default_registry,
    default_template,
    http_pricing_tool,
    load_mock_fixtures,
    local_pricing_tool,
    run_pipeline,
)
from .dataset import (
    GeneratorSpec,
    GroupStructure,
    Moments,
    encode_matrix,
    generate_synthetic,
    load_dataset,
    save_dataset,
    summarize,
)
from .defaults import (
    DEFAULT_FOLDS,
    DEFAULT_TEST_FRACTION,
    default_generator_spec,
    default_hyperparameters,
)
from .evaluation import (
    RidgeSpec,
    ablation,
    compare_models,
    compute_metrics,
    cross_validate,
    fit_ridge,
    overfit_ratio,
    train_test_metrics,
)
from .gbdt import Hyperparameters, fit, load_model, predict_batch, save_model
from .sensitivity import BaselineScenario, monotonicity_check, sweep_ratio, univariate_sweep
from .schemas import draft_schema_text, research_schema_text
from .splits import SplitPlan, group_kfold, group_shuffle_split, load_plan, verify_no_leakage


def _money(value: float) -> str:
    return f"${value:,.0f}"


def _print_table(headers: list[str], rows: list[list[str]]) -> None:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    line = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    print(line)
    print("-" * len(line))
    for row in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))


def _fig_target(out: str | None, explicit: str | None, no_fig: bool) -> Path | None:
    if no_fig:
        return None
    if explicit:
        return Path(explicit)
    if out:
        return Path(out).with_suffix(".png")
    return None


def _load_spec(path: str | None, seed: int) -> GeneratorSpec:
    spec = default_generator_spec(seed)
    if path is None:
        return spec
    overrides = json.loads(Path(path).read_text(encoding="utf-8"))
    fields: dict = {"seed": seed}
    for name in ("revenue", "duration", "pain", "complexity", "phase", "price"):
        if name in overrides:
            fields[name] = Moments(**overrides[name])
    if "tech_probs" in overrides:
        fields["tech_probs"] = overrides["tech_probs"]
    if "noise_std" in overrides:
        fields["noise_std"] = overrides["noise_std"]
    if "groups" in overrides:
        fields["groups"] = GroupStructure(**overrides["groups"])
    return dataclasses.replace(spec, **fields)


def _load_hp(path: str | None, seed: int) -> Hyperparameters:
    hp = default_hyperparameters(seed)
    if path is None:
        return hp
    overrides = json.loads(Path(path).read_text(encoding="utf-8"))
    return dataclasses.replace(hp, **overrides)


def _metrics_line(label: str, report) -> str:
    r2 = "undefined" if report.r2 is None else f"{report.r2:.3f}"
    return (
        f"{label}: R2 {r2}  MAE {_money(report.mae)}  RMSE {_money(report.rmse)}  "
        f"relative MAE {report.relative_mae * 100:.1f}%  (n={report.n})"
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen_data(args) -> int:
    spec = _load_spec(args.spec, args.seed)
    records = generate_synthetic(spec, args.n)
    save_dataset(records, args.out)
    print(f"wrote {args.n} records to {args.out}")
    target = _fig_target(args.out, args.fig, args.no_fig)
    if target:
        print(f"figure: {figures.price_distribution(records, target)}")
    return 0


def cmd_summarize(args) -> int:
    records = load_dataset(args.data)
    summary = summarize(records)
    if args.json:
        payload = {
            "n": summary.n,
            "provenance_counts": summary.provenance_counts,
            "columns": {
                name: dataclasses.asdict(stats) for name, stats in summary.columns.items()
            },
        }
        print(json.dumps(payload, indent=2))
    else:
        rows = [
            [name, f"{s.mean:,.1f}", f"{s.std:,.1f}", f"{s.min:,.1f}", f"{s.max:,.1f}"]
            for name, s in summary.columns.items()
        ]
        _print_table(["Feature", "Mean", "Std", "Min", "Max"], rows)
        counts = ", ".join(f"{k}: {v}" for k, v in summary.provenance_counts.items())
        print(f"records: {summary.n} ({counts})")
    if args.fig:
        print(f"figure: {figures.price_distribution(records, args.fig)}")
    return 0


def cmd_split(args) -> int:
    records = load_dataset(args.data)
    plan = group_shuffle_split(records, args.test_fraction, args.seed)
    Path(args.out).write_text(plan.to_json(), encoding="utf-8")
    report = verify_no_leakage(plan, records)
    print(
        f"train {len(plan.train_indices)} / test {len(plan.test_indices)} -> {args.out}; "
        f"leakage check: {'ok' if report.ok else 'LEAK ' + ','.join(report.offending_groups)}"
    )
    return 0 if report.ok else 1


def cmd_kfold(args) -> int:
    records = load_dataset(args.data)
    plan = group_kfold(records, args.k)
    Path(args.out).write_text(plan.to_json(), encoding="utf-8")
    report = verify_no_leakage(plan, records)
    sizes = ", ".join(str(len(f)) for f in plan.folds)
    print(
        f"{plan.k} folds (sizes {sizes}) -> {args.out}; "
        f"leakage check: {'ok' if report.ok else 'LEAK ' + ','.join(report.offending_groups)}"
    )
    return 0 if report.ok else 1


def cmd_train(args) -> int:
    records = load_dataset(args.data)
    rows, targets, names = encode_matrix(records)
    split = load_plan(args.split) if args.split else None
    if split is not None and not isinstance(split, SplitPlan):
        raise ValueError("--split must point at a split plan, not a fold plan")
    if args.model == "ridge":
        linear = fit_ridge(rows, targets, alpha=args.alpha, feature_names=names)
        linear.save(args.out_model)
        reference = sum(targets) / len(targets)
        print(_metrics_line("train", compute_metrics(targets, linear.predict(rows), reference)))
        print(f"ridge model -> {args.out_model}")
        return 0
    hp = _load_hp(args.hp_overrides, args.seed)
    if split is None:
        model = fit(rows, targets, hp, feature_names=names)
        save_model(model, args.out_model)
        reference = sum(targets) / len(targets)
        print(_metrics_line("train", compute_metrics(targets, predict_batch(model, rows), reference)))
        if args.out_predictions:
            Path(args.out_predictions).write_text(
                json.dumps({"predictions": predict_batch(model, rows)}), encoding="utf-8"
            )
            print(f"predictions -> {args.out_predictions}")
    else:
        train_report, test_report = train_test_metrics(records, hp, split)
        X_train = [rows[i] for i in split.train_indices]
        y_train = [targets[i] for i in split.train_indices]
        model = fit(X_train, y_train, hp, feature_names=names)
        save_model(model, args.out_model)
        print(_metrics_line("train", train_report))
        print(_metrics_line("test", test_report))
        ratio = overfit_ratio(train_report, test_report)
        print(f"train/test RMSE ratio: {'undefined' if ratio is None else f'{ratio:.3f}'}")
        target = _fig_target(args.out_model, args.fig, args.no_fig)
        if target:
            X_test = [rows[i] for i in split.test_indices]
            y_test = [targets[i] for i in split.test_indices]
            path = figures.predicted_vs_actual(
                y_train, predict_batch(model, X_train),
                y_test, predict_batch(model, X_test), target,
            )
            print(f"figure: {path}")
    print(f"model -> {args.out_model}")
    return 0


def _spec_from_args(args):
    if args.model == "ridge":
        return RidgeSpec(args.alpha)
    return _load_hp(args.hp_overrides, args.seed)


def _print_cv_report(report) -> None:
    rows = []
    for i, (metrics, stats) in enumerate(zip(report.folds, report.fold_stats), start=1):
        r2 = "undefined" if metrics.r2 is None else f"{metrics.r2:.3f}"
        rows.append(
            [
                f"Fold {i}",
                str(stats.n),
                f"{_money(stats.price_min)} - {_money(stats.price_max)}",
                _money(stats.price_mean),
                r2,
                _money(metrics.mae),
            ]
        )
    _print_table(["Fold", "Samples", "Price Range", "Mean Price", "R2", "MAE"], rows)
    if report.r2_mean is not None:
        print(f"CV R2: {report.r2_mean:.3f} ± {report.r2_std:.3f}", end="   ")
    print(f"CV MAE: {_money(report.mae_mean)} ± {_money(report.mae_std)}")


def cmd_cv(args) -> int:
    records = load_dataset(args.data)
    plan = group_kfold(records, args.folds)
    report = cross_validate(records, _spec_from_args(args), plan)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        _print_cv_report(report)
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
        target = _fig_target(args.out, args.fig, args.no_fig)
        if target:
            print(f"figure: {figures.cv_bars(report, target)}")
    return 0


def cmd_compare(args) -> int:
    records = load_dataset(args.data)
    plan = group_kfold(records, args.folds)
    split = group_shuffle_split(records, args.test_fraction, args.seed)
    specs = [_load_hp(args.hp_overrides, args.seed), RidgeSpec(args.alpha)]
    report = compare_models(records, plan, specs, split)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        rows = []
        for row in report.rows:
            test_r2 = "-" if row.test is None or row.test.r2 is None else f"{row.test.r2:.3f}"
            rows.append(
                [
                    row.label,
                    f"{row.cv.r2_mean:.3f} ± {row.cv.r2_std:.3f}",
                    f"{_money(row.cv.mae_mean)} ± {_money(row.cv.mae_std)}",
                    test_r2,
                ]
            )
        _print_table(["Model", "CV R2", "CV MAE", "Test R2"], rows)
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
        target = _fig_target(args.out, args.fig, args.no_fig)
        if target:
            print(f"figure: {figures.comparison_bars(report, target)}")
    return 0


def cmd_ablate(args) -> int:
    records = load_dataset(args.data)
    plan = group_kfold(records, args.folds)
    full, ablated = ablation(records, plan, args.drop, _load_hp(args.hp_overrides, args.seed))
    if args.json:
        print(json.dumps({"full": full.to_dict(), "ablated": ablated.to_dict()}, indent=2))
    else:
        rows = [
            [full.label, f"{full.r2_mean:.3f} ± {full.r2_std:.3f}",
             f"{_money(full.mae_mean)} ± {_money(full.mae_std)}"],
            [ablated.label, f"{ablated.r2_mean:.3f} ± {ablated.r2_std:.3f}",
             f"{_money(ablated.mae_mean)} ± {_money(ablated.mae_std)}"],
        ]
        _print_table(["Model", "CV R2", "CV MAE"], rows)
        print(f"CV R2 change from dropping {args.drop}: "
              f"{ablated.r2_mean - full.r2_mean:+.3f}")
    return 0


def cmd_sensitivity(args) -> int:
    model = load_model(args.model)
    overrides = json.loads(Path(args.baseline).read_text()) if args.baseline else {}
    baseline = BaselineScenario(**overrides)
    values = None
    if args.values:
        raw = args.values.split(",")
        values = raw if args.feature == "tech_stack" else [float(v) for v in raw]
    curve = univariate_sweep(model, baseline, args.feature, values)
    if args.json:
        print(json.dumps(curve.to_dict(), indent=2))
    else:
        rows = [[str(v), _money(p)] for v, p in curve.points]
        _print_table([args.feature, "Predicted Price"], rows)
        check = monotonicity_check(curve, "non_decreasing")
        print(f"monotone non-decreasing: {'yes' if check.ok else 'no'};"
              f" last/first ratio: {sweep_ratio(curve):.2f}")
    if args.out:
        Path(args.out).write_text(curve.to_csv(), encoding="utf-8")
        print(f"curve -> {args.out}")
        target = _fig_target(args.out, args.fig, args.no_fig)
        if target:
            print(f"figure: {figures.sensitivity_plot(curve, target)}")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.model, args.bind)
    return 0


def cmd_pipeline(args) -> int:
    fixtures = load_mock_fixtures(args.mock_fixtures)
    if args.pricing_url:
        pricing = http_pricing_tool(args.pricing_url)
    elif args.model:
        pricing = local_pricing_tool(load_model(args.model))
    else:
        raise ValueError("pipeline needs either --model or --pricing-url")
    registry = default_registry(pricing, fixtures)
    llm = ScriptedMock(fixtures["llm"])
    transcript = Path(args.transcript).read_text(encoding="utf-8") if args.transcript else None
    template = Path(args.template).read_text(encoding="utf-8") if args.template else default_template()
    if transcript is None:
        from .agents import default_transcript

        transcript = default_transcript()
    result = run_pipeline(transcript, llm, registry, template)
    Path(args.out).write_text(result.document, encoding="utf-8")
    print(f"document -> {args.out}")
    if args.trace_out:
        Path(args.trace_out).write_text(result.trace.to_jsonl(), encoding="utf-8")
        print(f"trace -> {args.trace_out}")
    decision = result.decision
    print(
        f"model price {_money(decision.model_price)} -> positioned "
        f"{_money(decision.adjusted_price)} ({decision.research_confidence} confidence)"
    )
    return 0


def cmd_schema(args) -> int:
    if args.which == "research":
        sys.stdout.write(research_schema_text())
    else:
        sys.stdout.write(draft_schema_text())
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quotekit", description=__doc__)
    parser.add_argument("--config", help="JSON file with default flag values")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        return p

    p = add("gen-data", cmd_gen_data, help="generate a synthetic deal CSV")
    p.add_argument("--spec", help="JSON generator-spec overrides")
    p.add_argument("--n", type=int, default=70)
    p.add_argument("--seed", type=int, default=17)
    p.add_argument("--out", required=True)
    p.add_argument("--fig", help="explicit figure path")
    p.add_argument("--no-fig", action="store_true")

    p = add("summarize", cmd_summarize, help="dataset summary statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--fig")

    p = add("split", cmd_split, help="group-aware train/test split plan")
    p.add_argument("--data", required=True)
    p.add_argument("--test-fraction", type=float, default=DEFAULT_TEST_FRACTION)
    p.add_argument("--seed", type=int, default=19)
    p.add_argument("--out", required=True)

    p = add("kfold", cmd_kfold, help="group-aware k-fold plan")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, default=DEFAULT_FOLDS)
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, help="train a model and print metrics")
    p.add_argument("--data", required=True)
    p.add_argument("--split", help="split plan JSON from `split`")
    p.add_argument("--hp-overrides", help="JSON hyperparameter overrides")
    p.add_argument("--model", choices=["gbdt", "ridge"], default="gbdt")
    p.add_argument("--alpha", type=float, default=1.0, help="ridge penalty")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-predictions", help="write full-data in-sample predictions JSON")
    p.add_argument("--fig")
    p.add_argument("--no-fig", action="store_true")

    p = add("cv", cmd_cv, help="group-aware cross-validation report")
    p.add_argument("--data", required=True)
    p.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    p.add_argument("--model", choices=["gbdt", "ridge"], default="gbdt")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--hp-overrides")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--fig")
    p.add_argument("--no-fig", action="store_true")

    p = add("compare", cmd_compare, help="tree model vs ridge comparison")
    p.add_argument("--data", required=True)
    p.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    p.add_argument("--test-fraction", type=float, default=DEFAULT_TEST_FRACTION)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--hp-overrides")
    p.add_argument("--seed", type=int, default=19)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.add_argument("--fig")
    p.add_argument("--no-fig", action="store_true")

    p = add("ablate", cmd_ablate, help="retrain with one feature dropped")
    p.add_argument("--data", required=True)
    p.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    p.add_argument("--drop", required=True)
    p.add_argument("--hp-overrides")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")

    p = add("sensitivity", cmd_sensitivity, help="univariate sweep around a baseline")
    p.add_argument("--model", required=True, help="model artifact JSON")
    p.add_argument("--feature", required=True)
    p.add_argument("--baseline", help="JSON file overriding the baseline scenario")
    p.add_argument("--values", help="comma-separated sweep values")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", help="write the curve CSV here")
    p.add_argument("--fig")
    p.add_argument("--no-fig", action="store_true")

    p = add("serve", cmd_serve, help="run the pricing service")
    p.add_argument("--model", required=True)
    p.add_argument("--bind", default="127.0.0.1:8321")

    p = add("pipeline", cmd_pipeline, help="end-to-end proposal run with mocks")
    p.add_argument("--transcript", help="transcript text file (default: shipped fixture)")
    p.add_argument("--mock-fixtures", help="mock fixture JSON (default: shipped fixture)")
    p.add_argument("--model", help="model artifact for a local pricing tool")
    p.add_argument("--pricing-url", help="base URL of a running pricing service")
    p.add_argument("--template", help="proposal template (default: shipped fixture)")
    p.add_argument("--out", required=True)
    p.add_argument("--trace-out")

    p = add("schema", cmd_schema, help="print a canonical contract schema")
    p.add_argument("dump", choices=["dump"])
    p.add_argument("which", choices=["research", "draft"])

    return parser


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) in (None, False):
            setattr(args, attr, value)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.fn(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
