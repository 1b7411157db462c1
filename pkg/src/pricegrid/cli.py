"""Command-line pipeline: gen/stats -> featurize -> split -> train or
gridsearch -> eval/roc/curve -> predict.

Commands exchange artifacts through a working directory (--dir) using
fixed file names; every produced artifact gets a sibling
<name>.manifest.json with content hashes. All randomness flows from
explicit --seed flags and internal parallelism (--jobs, or the
PRICEGRID_JOBS environment variable) never changes results.

Exit codes: 0 success, 1 I/O, 2 config, 3 fingerprint mismatch,
4 domain lookup failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import features as feat
from . import ingest, labeling, modelsel
from . import svm as svm_mod
from .errors import (
    ConfigError,
    FingerprintMismatchError,
    PricegridError,
    PrinterLookupError,
)
from .manifest import write_manifest

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_FINGERPRINT = 3
EXIT_LOOKUP = 4

FILES = {
    "corpus": "corpus.csv",
    "stats": "stats.json",
    "geo": "geo.json",
    "schema": "schema.json",
    "corr": "corr.json",
    "features_npy": "features.npy",
    "features_meta": "features.json",
    "binning": "binning.json",
    "split": "split.json",
    "model": "model.json",
    "grid_coarse": "grid_coarse.json",
    "grid_coarse_csv": "grid_coarse.csv",
    "grid_fine": "grid_fine.json",
    "grid_fine_csv": "grid_fine.csv",
    "best_config": "best_config.json",
    "eval": "eval.json",
    "confusion_csv": "confusion.csv",
    "roc": "roc.json",
    "roc_csv": "roc.csv",
    "curve": "curve.json",
    "curve_csv": "curve.csv",
    "prediction": "prediction.json",
}


def _path(args, key, flag_value=None):
    if flag_value:
        return Path(flag_value)
    return Path(args.dir) / FILES[key]


def _read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc


def _write_json(path, obj, indent=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=indent, separators=None if indent else (",", ":"))
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _load_tables(args):
    material = feat.load_material_table(getattr(args, "material_table", None))
    printer = feat.load_printer_table(getattr(args, "printer_table", None))
    keywords = feat.load_keywords(getattr(args, "keywords", None))
    return material, printer, keywords


def _default_jobs():
    env = os.environ.get("PRICEGRID_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"PRICEGRID_JOBS must be an integer, got {env!r}")
    return 1


# ---------------------------------------------------------------------------
# gen / stats
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    obj = {}
    if args.config:
        obj = _read_json(args.config)
    if args.n is not None:
        obj["n_listings"] = args.n
    if args.region is not None:
        obj["region"] = args.region
    if args.seed is not None:
        obj["seed"] = args.seed
    if "n_listings" not in obj:
        raise ConfigError("n_listings required (config file or --n)")
    cfg = ingest.SynthConfig.from_json(obj)
    listings = ingest.generate_synthetic(cfg)
    out = _path(args, "corpus", args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    ingest.write_corpus(out, listings)
    write_manifest(
        out, "gen", params=cfg.to_json(), seeds={"corpus": cfg.seed},
        inputs={}, outputs={"corpus": out},
    )
    print(f"gen: wrote {len(listings)} listings ({cfg.region}) to {out}")
    return EXIT_OK


def cmd_stats(args) -> int:
    corpus_path = _path(args, "corpus", args.corpus)
    result = ingest.read_corpus(corpus_path)
    if not result.listings:
        raise ConfigError("corpus has no valid rows")
    material, printer, _ = _load_tables(args)
    stats = ingest.corpus_stats(
        result.listings,
        material_category=lambda m: feat.categorize_material(m, material),
        printer_process=lambda m: feat.lookup_printer(m, printer).process,
    )
    stats["parse_diagnostics"] = len(result.diagnostics)
    out = _path(args, "stats", args.out)
    _write_json(out, stats, indent=2)
    write_manifest(
        out, "stats", params={}, seeds={},
        inputs={"corpus": corpus_path}, outputs={"stats": out},
    )
    print(f"stats: {stats['n']} listings summarized to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# featurize
# ---------------------------------------------------------------------------

_CORR_PRED_FIELDS = (
    "avg_rating",
    "print_quality_rating",
    "speed_rating",
    "service_rating",
    "communication_rating",
    "num_reviews",
    "avg_response_time",
    "days_since_activation",
    "order_completion_days",
    "resolution",
    "num_machines",
    "num_sample_images",
)


def _correlation_artifact(listings, printer_table, method, threshold):
    """Correlation of the numeric listing attributes plus printer cost and
    price, on the rows where every rating is present; then the redundancy
    prune that keeps avg_rating ahead of the four sub-ratings."""
    rated = [
        l for l in listings
        if l.avg_rating is not None
        and None not in (
            l.print_quality_rating, l.speed_rating, l.service_rating,
            l.communication_rating,
        )
    ]
    if len(rated) < 2:
        return None, []
    columns = {
        name: np.array([getattr(l, name) for l in rated], dtype=np.float64)
        for name in _CORR_PRED_FIELDS
    }
    columns["printer_cost"] = np.array(
        [feat.lookup_printer(l.printer_model, printer_table).cost for l in rated]
    )
    columns["price"] = np.array([l.price for l in rated])
    report = feat.correlation_matrix(columns, method=method)
    predictor_names = [n for n in report.names if n != "price"]
    pred_report = feat.CorrelationReport(
        method=report.method,
        names=predictor_names,
        matrix=report.matrix[
            np.ix_(
                [report.names.index(n) for n in predictor_names],
                [report.names.index(n) for n in predictor_names],
            )
        ],
        excluded_constant=report.excluded_constant,
    )
    retained = feat.prune_correlated(
        pred_report, threshold, keep_priority=("avg_rating",)
    )
    report.dropped = sorted(set(predictor_names) - set(retained))
    report.threshold = threshold
    return report, retained


def cmd_featurize(args) -> int:
    corpus_path = _path(args, "corpus", args.corpus)
    result = ingest.read_corpus(corpus_path)
    listings = result.listings
    if not listings:
        raise ConfigError("corpus has no valid rows")
    regions = {l.region for l in listings}
    if len(regions) != 1:
        raise ConfigError(f"corpus mixes regions {sorted(regions)}; featurize one region at a time")
    region = regions.pop()
    material, printer, keywords = _load_tables(args)

    k = args.geo_k or feat.DEFAULT_K[region]
    points = np.array([(l.latitude, l.longitude) for l in listings])
    geo = feat.kmeans_fit(
        points, k, seed=args.seed, restarts=args.restarts, region=region
    )

    diagnostics = []
    schema = feat.fit_schema(
        listings, geo, printer, material, keywords, diagnostics=diagnostics
    )
    X, ids = feat.encode_corpus(
        listings, schema, geo, printer, material, keywords,
        diagnostics=diagnostics,
    )

    corr_report, retained = _correlation_artifact(
        listings, printer, args.corr_method, args.corr_threshold
    )

    out_dir = Path(args.dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    geo_path = out_dir / FILES["geo"]
    feat.save_geo(geo_path, geo)
    schema_path = out_dir / FILES["schema"]
    feat.save_schema(schema_path, schema)
    npy_path = out_dir / FILES["features_npy"]
    np.save(npy_path, X)
    meta_path = out_dir / FILES["features_meta"]
    meta = {
        "ids": ids,
        "prices": [l.price for l in listings],
        "region": region,
        "n": len(ids),
        "arity": schema.arity,
        "feature_names": schema.feature_names(),
        "schema_fingerprint": schema.fingerprint(),
        "diagnostics": diagnostics,
        "parse_diagnostics": len(result.diagnostics),
    }
    _write_json(meta_path, meta)
    outputs = {
        "geo": geo_path,
        "schema": schema_path,
        "features_npy": npy_path,
        "features_meta": meta_path,
    }
    if corr_report is not None:
        corr_path = out_dir / FILES["corr"]
        doc = corr_report.to_json()
        doc["retained"] = retained
        _write_json(corr_path, doc, indent=2)
        outputs["corr"] = corr_path
    write_manifest(
        meta_path, "featurize",
        params={
            "geo_k": k, "restarts": args.restarts,
            "corr_method": args.corr_method,
            "corr_threshold": args.corr_threshold, "region": region,
            "schema_fingerprint": meta["schema_fingerprint"],
        },
        seeds={"kmeans": args.seed},
        inputs={"corpus": corpus_path}, outputs=outputs,
    )
    print(
        f"featurize: {len(ids)} listings -> {schema.arity} features "
        f"({len(diagnostics)} diagnostics), k={k} clusters"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# split
# ---------------------------------------------------------------------------


def cmd_split(args) -> int:
    meta_path = _path(args, "features_meta", None)
    npy_path = _path(args, "features_npy", None)
    meta = _read_json(meta_path)
    X = np.load(npy_path)
    prices = np.asarray(meta["prices"], dtype=np.float64)
    region = meta["region"]
    if args.bins == "paper":
        bins = labeling.paper_binning(region)
    else:
        bins = labeling.fit_bins(prices, region=region)
    diagnostics = []
    labels = labeling.assign_classes(prices, bins, diagnostics)
    split = labeling.stratified_split(labels, args.train_fraction, seed=args.seed)
    split = labeling.dedup_test(split, X, labels)

    out_dir = Path(args.dir)
    binning_path = out_dir / FILES["binning"]
    labeling.save_binning(binning_path, bins)
    split_path = out_dir / FILES["split"]
    doc = split.to_json()
    doc["labels"] = labels.tolist()
    doc["schema_fingerprint"] = meta["schema_fingerprint"]
    doc["binning_fingerprint"] = bins.fingerprint()
    doc["clamp_diagnostics"] = diagnostics
    _write_json(split_path, doc)
    write_manifest(
        split_path, "split",
        params={
            "train_fraction": args.train_fraction, "bins": args.bins,
            "binning_fingerprint": bins.fingerprint(),
            "dedup_removed": split.dedup_removed,
        },
        seeds={"split": args.seed},
        inputs={"features_meta": meta_path, "features_npy": npy_path},
        outputs={"binning": binning_path, "split": split_path},
    )
    counts = np.bincount(labels, minlength=labeling.N_CLASSES)
    print(
        f"split: {split.train_idx.size} train / {split.test_idx.size} test "
        f"(dedup removed {split.dedup_removed}); class counts {counts.tolist()}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# train / gridsearch
# ---------------------------------------------------------------------------


def _load_features_split(args):
    meta = _read_json(_path(args, "features_meta", None))
    X = np.load(_path(args, "features_npy", None))
    split_doc = _read_json(_path(args, "split", None))
    if split_doc["schema_fingerprint"] != meta["schema_fingerprint"]:
        raise FingerprintMismatchError(
            "schema", meta["schema_fingerprint"], split_doc["schema_fingerprint"]
        )
    labels = np.asarray(split_doc["labels"], dtype=np.int64)
    split = labeling.DatasetSplit.from_json(split_doc)
    return meta, X, labels, split, split_doc


def _config_from_args(args) -> svm_mod.TrainConfig:
    if args.config:
        cfg = svm_mod.TrainConfig.from_json(_read_json(args.config))
    else:
        cfg = None
    kind = args.kernel or (cfg.kernel.kind if cfg else "rbf")
    gamma = args.gamma if args.gamma is not None else (
        cfg.kernel.gamma if cfg and cfg.kernel.kind == kind else None
    )
    if kind != "linear" and gamma is None:
        gamma = 0.01
    kernel = svm_mod.KernelSpec(
        kind,
        gamma=None if kind == "linear" else gamma,
        degree=args.degree if args.degree is not None else (cfg.kernel.degree if cfg else 3),
        coef0=args.coef0 if args.coef0 is not None else (cfg.kernel.coef0 if cfg else 0.0),
    )
    return svm_mod.TrainConfig(
        C=args.c if args.c is not None else (cfg.C if cfg else 1.0),
        kernel=kernel,
        class_weights=svm_mod.BALANCED,
        tol=args.tol if args.tol is not None else (cfg.tol if cfg else 1e-3),
        max_iter=args.max_iter if args.max_iter is not None else (cfg.max_iter if cfg else 10_000_000),
        cache_mb=args.cache_mb if args.cache_mb is not None else (cfg.cache_mb if cfg else 1024),
    )


def cmd_train(args) -> int:
    meta, X, labels, split, split_doc = _load_features_split(args)
    config = _config_from_args(args)
    pool = svm_mod.GramPool(X)
    model = svm_mod.train_multiclass(
        X, labels, config, pool=pool, row_idx=split.train_idx, jobs=args.jobs
    )
    model.schema_fingerprint = meta["schema_fingerprint"]
    model.binning_fingerprint = split_doc["binning_fingerprint"]
    ovr = None
    if not args.no_ovr:
        ovr = svm_mod.train_ovr(
            X, labels, config, pool=pool, row_idx=split.train_idx, jobs=args.jobs
        )
    out = _path(args, "model", args.out)
    svm_mod.save_model(out, model, ovr)
    unconverged = [
        (m.pos_label, m.neg_label)
        for m in model.pair_models
        if m.diag is not None and not m.diag.converged
    ]
    write_manifest(
        out, "train", params={"config": config.to_json(), "ovr": not args.no_ovr},
        seeds={},
        inputs={
            "features_meta": _path(args, "features_meta", None),
            "features_npy": _path(args, "features_npy", None),
            "split": _path(args, "split", None),
        },
        outputs={"model": out},
    )
    msg = f"train: {len(model.pair_models)} pair models"
    if ovr:
        msg += f" + {len(ovr.models)} one-vs-rest models"
    if unconverged:
        msg += f"; {len(unconverged)} pairs hit the iteration budget"
    print(msg + f" -> {out}")
    return EXIT_OK


def cmd_gridsearch(args) -> int:
    meta, X, labels, split, split_doc = _load_features_split(args)
    kernels = [k.strip() for k in args.kernels.split(",") if k.strip()]
    for k in kernels:
        if k not in svm_mod.KERNEL_KINDS:
            raise ConfigError(f"unknown kernel {k!r}")
    train_labels = labels[split.train_idx]
    plan = modelsel.stratified_kfold(train_labels, args.folds, seed=args.seed)
    pool = svm_mod.GramPool(X)
    fine_center = modelsel.PAPER_FINE_CENTER if args.fine_preset == "paper" else None
    coarse, fine, best = modelsel.grid_search(
        X, labels, kernels,
        _shift_plan(plan, split.train_idx),
        pool=pool,
        cell_max_iter=args.cell_max_iter,
        fine_center=fine_center,
        jobs=args.jobs,
    )
    out_dir = Path(args.dir)
    paths = {}
    for name, report in (("grid_coarse", coarse), ("grid_fine", fine)):
        jpath = out_dir / FILES[name]
        _write_json(jpath, report.to_json(), indent=2)
        cpath = out_dir / FILES[name + "_csv"]
        rows = [list(c.as_row().values()) for c in report.cells]
        _write_csv(
            cpath,
            ["kernel", "C", "gamma", "mean_cv_accuracy", "cv_variance",
             "n_unconverged", "error"],
            rows,
        )
        paths[name] = jpath
        paths[name + "_csv"] = cpath
    best_path = out_dir / FILES["best_config"]
    _write_json(best_path, best.to_json(), indent=2)
    paths["best_config"] = best_path
    write_manifest(
        best_path, "gridsearch",
        params={
            "kernels": kernels, "folds": args.folds,
            "cell_max_iter": args.cell_max_iter,
            "fine_preset": args.fine_preset,
        },
        seeds={"folds": args.seed},
        inputs={
            "features_npy": _path(args, "features_npy", None),
            "split": _path(args, "split", None),
        },
        outputs=paths,
    )
    b = coarse.best
    print(
        f"gridsearch: coarse best {b.kernel_kind} C={b.C} gamma={b.gamma} "
        f"acc={b.mean_accuracy:.4f}"
    )
    f = fine.best
    print(
        f"gridsearch: fine best {f.kernel_kind} C={f.C} gamma={f.gamma} "
        f"acc={f.mean_accuracy:.4f}"
    )
    print(f"gridsearch: best config -> {best_path}")
    return EXIT_OK


def _shift_plan(plan: modelsel.FoldPlan, train_idx) -> modelsel.FoldPlan:
    """Lift a plan over train positions to a plan over global row indices."""
    n_all = int(train_idx.max()) + 1 if len(train_idx) else 0
    assignment = np.full(n_all, -1, dtype=np.int64)
    assignment[train_idx] = plan.assignment
    return modelsel.FoldPlan(k=plan.k, assignment=assignment, seed=plan.seed)


# ---------------------------------------------------------------------------
# eval / roc / curve
# ---------------------------------------------------------------------------


def _load_model_checked(args, meta, split_doc):
    model_path = _path(args, "model", args.model)
    model, ovr = svm_mod.load_model(
        model_path, expect_schema_fingerprint=meta["schema_fingerprint"]
    )
    if model.binning_fingerprint != split_doc["binning_fingerprint"]:
        raise FingerprintMismatchError(
            "binning", split_doc["binning_fingerprint"], model.binning_fingerprint
        )
    return model_path, model, ovr


def cmd_eval(args) -> int:
    meta, X, labels, split, split_doc = _load_features_split(args)
    model_path, model, _ = _load_model_checked(args, meta, split_doc)
    report = modelsel.evaluate(model, X[split.test_idx], labels[split.test_idx])
    out = _path(args, "eval", args.out)
    _write_json(out, report.to_json(), indent=2)
    conf_path = _path(args, "confusion_csv", None)
    _write_csv(
        conf_path,
        ["true\\pred"] + [str(c) for c in report.classes],
        [[str(c)] + row.tolist() for c, row in zip(report.classes, report.confusion)],
    )
    write_manifest(
        out, "eval", params={}, seeds={},
        inputs={
            "features_npy": _path(args, "features_npy", None),
            "split": _path(args, "split", None),
            "model": model_path,
        },
        outputs={"eval": out, "confusion_csv": conf_path},
    )
    print(
        f"eval: accuracy {report.micro['accuracy']:.4f} "
        f"(baseline {report.baseline:.4f}) on {split.test_idx.size} test rows"
    )
    for pc in report.per_class:
        print(
            f"  class {pc['class']}: P={pc['precision']:.2f} "
            f"R={pc['recall']:.2f} F1={pc['f1']:.2f} (n={pc['support']})"
        )
    return EXIT_OK


def cmd_roc(args) -> int:
    meta, X, labels, split, split_doc = _load_features_split(args)
    model_path, model, ovr = _load_model_checked(args, meta, split_doc)
    if ovr is None:
        raise ConfigError(
            "model file has no one-vs-rest ensemble; retrain without --no-ovr"
        )
    scores = ovr.class_scores(X[split.test_idx])
    result = modelsel.roc_curves(scores, labels[split.test_idx], ovr.classes)
    out = _path(args, "roc", args.out)
    _write_json(out, result.to_json())
    rows = []
    for curve in result.per_class + [result.micro]:
        for fpr, tpr in zip(curve.fpr, curve.tpr):
            rows.append([curve.label, repr(float(fpr)), repr(float(tpr)), curve.auc])
    csv_path = _path(args, "roc_csv", None)
    _write_csv(csv_path, ["curve", "fpr", "tpr", "auc"], rows)
    write_manifest(
        out, "roc", params={}, seeds={},
        inputs={
            "features_npy": _path(args, "features_npy", None),
            "split": _path(args, "split", None),
            "model": model_path,
        },
        outputs={"roc": out, "roc_csv": csv_path},
    )
    aucs = {c.label: round(c.auc, 4) for c in result.per_class}
    print(f"roc: micro AUC {result.micro.auc:.4f}; per-class {aucs}")
    return EXIT_OK


def cmd_curve(args) -> int:
    meta, X, labels, split, split_doc = _load_features_split(args)
    if args.config:
        config = svm_mod.TrainConfig.from_json(_read_json(args.config))
    else:
        best_path = Path(args.dir) / FILES["best_config"]
        if not best_path.exists():
            raise ConfigError(
                "no --config given and best_config.json not found; "
                "run gridsearch or pass --config"
            )
        config = svm_mod.TrainConfig.from_json(_read_json(best_path))
    fractions = [float(f) for f in args.fractions.split(",")]
    if args.cell_max_iter:
        config = svm_mod.TrainConfig(
            C=config.C, kernel=config.kernel, class_weights=config.class_weights,
            tol=config.tol, max_iter=args.cell_max_iter, cache_mb=config.cache_mb,
        )
    X_train = X[split.train_idx]
    curve = modelsel.learning_curve(
        X_train, labels[split.train_idx], config, fractions=fractions,
        k=args.folds, seed=args.seed, pool=svm_mod.GramPool(X_train),
        jobs=args.jobs,
    )
    out = _path(args, "curve", args.out)
    _write_json(out, curve.to_json(), indent=2)
    csv_path = _path(args, "curve_csv", None)
    _write_csv(
        csv_path,
        ["fraction", "subset_size", "train_accuracy", "cv_accuracy", "cv_variance"],
        list(zip(curve.fractions, curve.subset_sizes, curve.train_accuracy,
                 curve.cv_accuracy, curve.cv_variance)),
    )
    write_manifest(
        out, "curve",
        params={"config": config.to_json(), "fractions": fractions,
                "folds": args.folds},
        seeds={"subsample": args.seed},
        inputs={
            "features_npy": _path(args, "features_npy", None),
            "split": _path(args, "split", None),
        },
        outputs={"curve": out, "curve_csv": csv_path},
    )
    gaps = [
        round(t - c, 4)
        for t, c in zip(curve.train_accuracy, curve.cv_accuracy)
    ]
    print(f"curve: train-cv gaps per fraction {gaps} -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------

_PREDICT_FLAG_FIELDS = (
    "printer_model", "material_name", "resolution", "latitude", "longitude",
    "region", "avg_rating", "num_reviews", "avg_response_time",
    "days_since_activation", "num_machines", "registered_business",
    "description_text", "num_sample_images", "order_completion_days",
)


def _listing_from_predict_input(record: dict) -> ingest.RawListing:
    record = dict(record)
    record.setdefault("listing_id", "query")
    record.setdefault("price", 1.0)  # unused by encoding; satisfies invariants
    record.setdefault("description_text", "")
    record.setdefault("num_sample_images", 0)
    record.setdefault("num_reviews", 0)
    if "avg_rating" not in record:
        record["avg_rating"] = None
    diagnostics = []
    lst = ingest._listing_from_record(
        {k: v for k, v in record.items() if k in ingest.COLUMNS},
        0, diagnostics,
    )
    if lst is None:
        msgs = "; ".join(f"{d.field}: {d.message}" for d in diagnostics)
        raise ConfigError(f"invalid listing input: {msgs}")
    return lst


def cmd_predict(args) -> int:
    model_path = _path(args, "model", args.model)
    schema = feat.load_schema(_path(args, "schema", None))
    model, ovr = svm_mod.load_model(
        model_path, expect_schema_fingerprint=schema.fingerprint()
    )
    bins = labeling.load_binning(_path(args, "binning", None))
    if model.binning_fingerprint != bins.fingerprint():
        raise FingerprintMismatchError(
            "binning", bins.fingerprint(), model.binning_fingerprint
        )
    geo = feat.load_geo(_path(args, "geo", None))
    material, printer, keywords = _load_tables(args)

    record = {}
    if args.listing:
        record.update(_read_json(args.listing))
    for name in _PREDICT_FLAG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            record[name] = value
    listing = _listing_from_predict_input(record)
    diagnostics = []
    x = feat.encode(
        listing, schema, geo, printer, material, keywords,
        diagnostics=diagnostics,
    )
    pred = int(model.predict(x[None, :])[0])
    low, high = bins.class_range(pred)
    margins = None
    if ovr is not None:
        margins = {
            str(c): float(s)
            for c, s in zip(ovr.classes, ovr.class_scores(x[None, :])[0])
        }
    result = {
        "price_class": pred,
        "price_range_usd": [low, high],
        "ovr_margins": margins,
        "diagnostics": diagnostics,
    }
    if args.json:
        print(json.dumps(result, sort_keys=True))
    else:
        closing = "]" if pred == labeling.N_CLASSES - 1 else ")"
        print(f"price class: {pred}")
        print(f"price range: [{low} - {high}{closing} USD")
        if margins is not None:
            pretty = ", ".join(f"{c}: {v:+.3f}" for c, v in margins.items())
            print(f"ovr margins: {pretty}")
        for d in diagnostics:
            print(f"note: {d}")
    if args.out:
        _write_json(args.out, result, indent=2)
        write_manifest(
            Path(args.out), "predict", params={}, seeds={},
            inputs={"model": model_path}, outputs={"prediction": Path(args.out)},
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--dir", default=".", help="artifact working directory")


def _add_jobs(p):
    p.add_argument(
        "--jobs", type=int, default=None,
        help="worker threads (default: PRICEGRID_JOBS env var, else 1)",
    )


def _add_table_flags(p):
    p.add_argument("--material-table", help="material table JSON (default: built-in)")
    p.add_argument("--printer-table", help="printer table JSON (default: built-in)")
    p.add_argument("--keywords", help="keyword dictionary JSON (default: built-in)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pricegrid",
        description="Price-band prediction pipeline for 3D-printing service listings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    _add_common(p)
    p.add_argument("--config", help="SynthConfig JSON file")
    p.add_argument("--n", type=int, help="number of listings")
    p.add_argument("--region", choices=ingest.REGIONS)
    p.add_argument("--seed", type=int, help="corpus seed")
    p.add_argument("--out", help="output corpus path (csv or jsonl)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("stats", help="summarize a corpus")
    _add_common(p)
    _add_table_flags(p)
    p.add_argument("--corpus", help="corpus file")
    p.add_argument("--out", help="stats JSON path")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("featurize", help="fit geo clusters + schema, encode corpus")
    _add_common(p)
    _add_table_flags(p)
    p.add_argument("--corpus", help="corpus file")
    p.add_argument("--seed", type=int, default=0, help="k-means seed")
    p.add_argument("--geo-k", type=int, help="cluster count (default 6 US / 9 EU)")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--corr-method", choices=feat.correlation.METHODS, default="spearman")
    p.add_argument("--corr-threshold", type=float, default=0.9)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("split", help="fit price bins, stratified 80:20 split, dedup")
    _add_common(p)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", choices=("fitted", "paper"), default="fitted")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the one-vs-one SVM (plus OvR for ROC)")
    _add_common(p)
    _add_jobs(p)
    p.add_argument("--config", help="TrainConfig JSON (e.g. best_config.json)")
    p.add_argument("--c", type=float, help="regularization parameter C")
    p.add_argument("--kernel", choices=svm_mod.KERNEL_KINDS)
    p.add_argument("--gamma", type=float)
    p.add_argument("--degree", type=int)
    p.add_argument("--coef0", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--cache-mb", type=int)
    p.add_argument("--no-ovr", action="store_true", help="skip the OvR ensemble")
    p.add_argument("--out", help="model output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("gridsearch", help="two-stage (coarse+fine) hyperparameter search")
    _add_common(p)
    _add_jobs(p)
    p.add_argument("--kernels", default="rbf", help="comma list: rbf,linear,poly,sigmoid")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cell-max-iter", type=int, default=modelsel.DEFAULT_CELL_MAX_ITER)
    p.add_argument(
        "--fine-preset", choices=("default", "paper"), default="default",
        help="paper: refine around C=6500, gamma=0.01",
    )
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("eval", help="evaluate a model on the held-out test set")
    _add_common(p)
    p.add_argument("--model", help="model JSON path")
    p.add_argument("--out", help="eval report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("roc", help="one-vs-rest ROC curves and AUC on the test set")
    _add_common(p)
    p.add_argument("--model", help="model JSON path")
    p.add_argument("--out", help="roc JSON path")
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("curve", help="learning curve (train/CV accuracy vs size)")
    _add_common(p)
    _add_jobs(p)
    p.add_argument("--config", help="TrainConfig JSON (default: best_config.json)")
    p.add_argument("--fractions", default=",".join(str(f) for f in modelsel.DEFAULT_FRACTIONS))
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cell-max-iter", type=int, help="iteration budget per training")
    p.add_argument("--out", help="curve JSON path")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("predict", help="predict the price class of one listing")
    _add_common(p)
    _add_table_flags(p)
    p.add_argument("--model", help="model JSON path")
    p.add_argument("--listing", help="listing JSON file")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--out", help="also write the prediction JSON here")
    p.add_argument("--printer-model")
    p.add_argument("--material-name")
    p.add_argument("--resolution", type=float)
    p.add_argument("--latitude", type=float)
    p.add_argument("--longitude", type=float)
    p.add_argument("--region", choices=ingest.REGIONS)
    p.add_argument("--avg-rating", type=float)
    p.add_argument("--num-reviews", type=int)
    p.add_argument("--avg-response-time", type=float)
    p.add_argument("--days-since-activation", type=int)
    p.add_argument("--num-machines", type=int)
    p.add_argument("--registered-business", choices=("true", "false"))
    p.add_argument("--description-text")
    p.add_argument("--num-sample-images", type=int)
    p.add_argument("--order-completion-days", type=float)
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", None) is None and hasattr(args, "jobs"):
        args.jobs = _default_jobs()
    try:
        return args.func(args)
    except FingerprintMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FINGERPRINT
    except PrinterLookupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        known = exc.known_models[:30]
        if known:
            print("known models: " + ", ".join(known), file=sys.stderr)
            if len(exc.known_models) > 30:
                print(f"... and {len(exc.known_models) - 30} more", file=sys.stderr)
        return EXIT_LOOKUP
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PricegridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
