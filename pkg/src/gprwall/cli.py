"""Command-line pipeline driver.

One binary, seven subcommands:

    synth     render the benchmark preset or a config-file wall into CSV+JSON
    label     calibrate the SVD threshold and write derived stud labels
    train     fit one model on selected scans and save model + metrics
    select    feature reduction (agglomerate / pfi / rfecv) to CSV tables
    explain   Shapley attributions + depth intervals for a saved model
    run       full experiment from a JSON config to a deterministic report
    plot      render CSV outputs to SVG

Exit codes: 0 success, 1 invalid arguments or config (ValueError family),
2 runtime failure.  All outputs are deterministic for fixed inputs and seeds:
no timestamps, sorted JSON keys, repr-exact floats.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import presets, svgplot
from .baselines import (
    Dataset,
    DecisionTree,
    RandomForest,
    accuracy,
    knn_predict,
)
from .explain import (
    Bound,
    exact_shapley,
    feature_depth_report,
    restricted_model,
    sampled_shapley,
    stack_time_ns,
)
from .feature_select import agglomerate, make_folds, pfi, rfecv
from .preprocess import GainConfig, exponential_gain, per_trace_normalize
from .radargram import (
    BScan,
    LabelSource,
    MaterialLayer,
    StudLabels,
    TimeAxis,
    WallClass,
    WallSpec,
    load_bscan,
    save_bscan,
)
from .sparsenn import SparseNN, TrainConfig
from .svd_labeler import calibrate_threshold, detect_studs, first_component
from .synth import SynthConfig, render_bscan
from .svgplot import bands_svg, bars_svg, beeswarm_svg, curve_svg, heatmap_svg


# --- shared helpers ---------------------------------------------------------


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_scans(scan_dir: Path, ids: list[str]):
    """Load (scan, stud, wall, spec) tuples; axes must agree across scans."""
    loaded = []
    for sid in ids:
        scan, stud, wall, spec = load_bscan(scan_dir / f"{sid}.csv")
        loaded.append((scan, stud, wall, spec))
    axes = {(s.axis.n_samples, s.axis.duration_ns) for s, *_ in loaded}
    if len(axes) > 1:
        raise ValueError(f"shape mismatch: scans have differing time axes {sorted(axes)}")
    return loaded


def _scan_ids_in(scan_dir: Path) -> list[str]:
    return sorted(p.stem for p in scan_dir.glob("*.csv"))


def assemble_dataset(
    loaded,
    task: str,
    gamma: float = 0.8,
    stud_indicator: bool = False,
) -> Dataset:
    """Traces -> rows.  Each trace is normalized, gained, and labelled by the
    requested task; ``stud_indicator`` appends the stud label as an extra
    feature column (with NaN time) for the wall task."""
    if task not in ("stud", "wall"):
        raise ValueError(f"unknown task {task!r}")
    rows, ys, groups, indicator = [], [], [], []
    for scan, stud, wall, _spec in loaded:
        conditioned = exponential_gain(per_trace_normalize(scan), GainConfig(gamma))
        rows.append(conditioned.amplitudes.T)
        if task == "stud":
            if stud is None:
                raise ValueError(f"scan {scan.scan_id!r} has no stud labels")
            ys.append(stud.per_trace.astype(np.int64))
        else:
            if wall is None:
                raise ValueError(f"scan {scan.scan_id!r} has no wall labels")
            ys.append(wall.per_trace.astype(np.int64))
        if stud_indicator:
            if stud is None:
                raise ValueError(f"scan {scan.scan_id!r} has no stud labels for the indicator")
            indicator.append(stud.per_trace.astype(np.float64))
        groups.extend([scan.scan_id] * scan.n_traces)

    X = np.vstack(rows)
    times = loaded[0][0].axis.times()
    if stud_indicator:
        X = np.hstack([X, np.concatenate(indicator)[:, np.newaxis]])
        times = np.append(times, np.nan)
    return Dataset(X=X, y=np.concatenate(ys), feature_times_ns=times, groups=np.asarray(groups))


# --- model registry ----------------------------------------------------------


class KnnModel:
    """Thin fitted wrapper so KNN matches the fit/predict registry shape."""

    kind = "knn"

    def __init__(self, k: int = 3):
        self.k = k

    def fit(self, X, y):
        self.X_ = np.asarray(X, dtype=np.float64)
        self.y_ = np.asarray(y, dtype=np.int64)
        return self

    def predict(self, X):
        return knn_predict(self.X_, self.y_, X, k=self.k)


def _fit_model(kind: str, params: dict, X, y, seed: int):
    if kind == "knn":
        return KnnModel(k=int(params.get("k", 3))).fit(X, y)
    if kind == "tree":
        return DecisionTree(max_depth=params.get("max_depth"), seed=seed).fit(X, y)
    if kind == "forest":
        return RandomForest(
            n_trees=int(params.get("n_trees", 100)),
            max_depth=params.get("max_depth"),
            seed=seed,
        ).fit(X, y)
    if kind == "sparsenn":
        gate_lr = params.get("gate_learning_rate")
        config = TrainConfig(
            lambda_reg=float(params.get("lambda_reg", 1e-5)),
            epochs=int(params.get("epochs", 500)),
            learning_rate=float(params.get("learning_rate", 1e-3)),
            gate_learning_rate=None if gate_lr is None else float(gate_lr),
            batch_size=int(params.get("batch_size", 64)),
            seed=seed,
        )
        return SparseNN(hidden=tuple(params.get("hidden", (8,)))).fit(X, y, config)
    raise ValueError(f"unknown model kind {kind!r}")


def _tree_blob(tree: DecisionTree) -> dict:
    return {
        "feature": tree.feature_.tolist(),
        "threshold": tree.threshold_.tolist(),
        "left": tree.left_.tolist(),
        "right": tree.right_.tolist(),
        "counts": tree.counts_.tolist(),
        "raw_importance": tree.raw_importance_.tolist(),
        "n_classes": tree.n_classes_,
        "n_features": tree.n_features_,
    }


def _tree_from_blob(blob: dict) -> DecisionTree:
    tree = DecisionTree()
    tree.feature_ = np.asarray(blob["feature"], dtype=np.intp)
    tree.threshold_ = np.asarray(blob["threshold"], dtype=np.float64)
    tree.left_ = np.asarray(blob["left"], dtype=np.intp)
    tree.right_ = np.asarray(blob["right"], dtype=np.intp)
    tree.counts_ = np.asarray(blob["counts"], dtype=np.int64)
    tree.raw_importance_ = np.asarray(blob["raw_importance"], dtype=np.float64)
    tree.n_classes_ = int(blob["n_classes"])
    tree.n_features_ = int(blob["n_features"])
    return tree


def save_model(model, path: Path) -> Path:
    if isinstance(model, SparseNN):
        return model.save(path)
    if isinstance(model, RandomForest):
        blob = {
            "kind": "forest",
            "n_trees": model.n_trees,
            "n_classes": model.n_classes_,
            "trees": [_tree_blob(t) for t in model.trees_],
        }
    elif isinstance(model, DecisionTree):
        blob = {"kind": "tree", "tree": _tree_blob(model)}
    elif isinstance(model, KnnModel):
        blob = {"kind": "knn", "k": model.k, "X": model.X_.tolist(), "y": model.y_.tolist()}
    else:
        raise ValueError(f"cannot serialize model of type {type(model).__name__}")
    _write_json(path, blob)
    return path


def load_model(path: Path):
    blob = json.loads(Path(path).read_text())
    kind = blob.get("kind")
    if kind == "sparsenn":
        return SparseNN.load(path)
    if kind == "forest":
        model = RandomForest(n_trees=blob["n_trees"])
        model.n_classes_ = int(blob["n_classes"])
        model.trees_ = [_tree_from_blob(b) for b in blob["trees"]]
        model.n_features_ = model.trees_[0].n_features_ if model.trees_ else 0
        return model
    if kind == "tree":
        return _tree_from_blob(blob["tree"])
    if kind == "knn":
        model = KnnModel(k=int(blob["k"]))
        model.X_ = np.asarray(blob["X"], dtype=np.float64)
        model.y_ = np.asarray(blob["y"], dtype=np.int64)
        return model
    raise ValueError(f"unknown model kind {kind!r} in {path}")


# --- synth -------------------------------------------------------------------


def _wall_spec_from_config(obj: dict) -> WallSpec:
    return WallSpec(
        WallClass(obj["wall_class"]),
        tuple(
            MaterialLayer(d["name"], float(d["thickness_m"]), float(d["eps_min"]), float(d["eps_max"]))
            for d in obj["layers"]
        ),
    )


def cmd_synth(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    if args.config:
        blob = json.loads(Path(args.config).read_text())
        entries = blob["scans"] if "scans" in blob else [blob]
        for entry in entries:
            spec = _wall_spec_from_config(entry["wall_spec"])
            synth_kwargs = dict(entry.get("synth", {}))
            if "stud_positions_m" in synth_kwargs:
                synth_kwargs["stud_positions_m"] = tuple(synth_kwargs["stud_positions_m"])
            if "stud_eps" in synth_kwargs:
                synth_kwargs["stud_eps"] = tuple(synth_kwargs["stud_eps"])
            config = SynthConfig(**synth_kwargs)
            jobs.append((entry.get("scan_id", "scan"), spec, config))
    else:
        suite = presets.benchmark_suite(
            seed=args.seed, noise_sigma=args.noise_sigma, n_traces=args.n_traces
        )
        jobs = [(s.scan_id, s.spec, s.config) for s in suite]

    manifest = []
    for scan_id, spec, config in jobs:
        scan, stud, wall = render_bscan(spec, config, scan_id=scan_id)
        csv_path = save_bscan(scan, out_dir / scan_id, stud, wall, spec)
        sidecar = csv_path.with_suffix(".json")
        manifest.append(
            {
                "scan_id": scan_id,
                "wall_class": spec.wall_class.value,
                "noise_sigma": config.noise_sigma,
                "csv": csv_path.name,
                "sidecar": sidecar.name,
                "sha256_csv": _sha256(csv_path),
                "sha256_sidecar": _sha256(sidecar),
            }
        )
    _write_json(out_dir / "manifest.json", {"seed": args.seed, "scans": manifest})
    print(f"wrote {len(manifest)} scan(s) to {out_dir}")
    return 0


# --- label -------------------------------------------------------------------


def cmd_label(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scan_dir = Path(args.scan_dir)
    ids = args.scans or _scan_ids_in(scan_dir)
    if not ids:
        raise ValueError(f"no scans found in {scan_dir}")
    loaded = _load_scans(scan_dir, ids)

    components = [first_component(scan) for scan, *_ in loaded]
    spacing = loaded[0][0].trace_spacing_m
    min_sep = max(1, round(args.target_width / (2.0 * spacing)))
    if args.fraction is not None:
        fraction = args.fraction
        table = []
    else:
        calib = calibrate_threshold(components, spacing, target_width_m=args.target_width)
        fraction = calib.fraction
        table = calib.table
        _write_json(
            out_dir / "calibration.json",
            {
                "fraction": calib.fraction,
                "modal_width_m": calib.modal_width_m,
                "mean_width_m": calib.mean_width_m,
                "n_studs": calib.n_studs,
                "target_width_m": args.target_width,
            },
        )
        _write_csv(
            out_dir / "width_table.csv",
            ["fraction", "modal_width_m", "mean_width_m", "n_studs"],
            table,
        )

    comp_rows = []
    for (scan, _stud, wall, spec), comp in zip(loaded, components):
        derived = detect_studs(comp, fraction, min_sep)
        save_bscan(scan, out_dir / scan.scan_id, derived, wall, spec)
        comp_rows.extend((scan.scan_id, j, float(comp[j])) for j in range(comp.size))
    _write_csv(out_dir / "components.csv", ["scan_id", "trace", "component"], comp_rows)
    print(f"labelled {len(loaded)} scan(s) at fraction {fraction:g}")
    return 0


# --- train -------------------------------------------------------------------


def _model_params_from_args(args) -> dict:
    params = {
        "k": args.k,
        "n_trees": args.n_trees,
        "max_depth": args.max_depth,
        "lambda_reg": args.lambda_reg,
        "epochs": args.epochs,
        "learning_rate": args.learning_rate,
        "gate_learning_rate": args.gate_learning_rate,
        "batch_size": args.batch_size,
        "hidden": tuple(int(h) for h in args.hidden.split(",")) if args.hidden else (8,),
    }
    return params


def cmd_train(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scan_dir = Path(args.scan_dir)
    train_ids = args.train
    test_ids = args.test or [s for s in _scan_ids_in(scan_dir) if s not in set(train_ids)]
    if set(train_ids) & set(test_ids):
        raise ValueError(f"train and test scans overlap: {sorted(set(train_ids) & set(test_ids))}")

    train_ds = assemble_dataset(
        _load_scans(scan_dir, train_ids), args.task, args.gamma, args.stud_indicator
    )
    test_ds = assemble_dataset(
        _load_scans(scan_dir, test_ids), args.task, args.gamma, args.stud_indicator
    )

    model = _fit_model(args.model, _model_params_from_args(args), train_ds.X, train_ds.y, args.seed)
    model_path = save_model(model, out_dir / "model.json")

    metrics = {
        "model": args.model,
        "task": args.task,
        "seed": args.seed,
        "train_scans": list(train_ids),
        "test_scans": list(test_ids),
        "train_accuracy": accuracy(train_ds.y, model.predict(train_ds.X)),
        "test_accuracy": accuracy(test_ds.y, model.predict(test_ds.X)),
    }
    if isinstance(model, SparseNN):
        active = model.active_features()
        metrics["n_active_features"] = int(active.size)
        metrics["active_features"] = active.tolist()
        metrics["active_times_ns"] = [
            None if np.isnan(t) else float(t) for t in train_ds.feature_times_ns[active]
        ]
        _write_csv(
            out_dir / "history.csv",
            ["epoch", "loss", "train_accuracy", "n_active"],
            [
                (e, float(l), float(a), int(n))
                for e, (l, a, n) in enumerate(
                    zip(
                        model.history_["loss"],
                        model.history_["train_accuracy"],
                        model.history_["n_active"],
                    )
                )
            ],
        )
    _write_json(out_dir / "metrics.json", metrics)
    print(
        f"{args.model} on {args.task}: train {metrics['train_accuracy']:.3f}, "
        f"test {metrics['test_accuracy']:.3f} -> {model_path}"
    )
    return 0


# --- select ------------------------------------------------------------------


def cmd_select(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scan_dir = Path(args.scan_dir)
    train_ids = args.train
    loaded = _load_scans(scan_dir, train_ids)
    ds = assemble_dataset(loaded, args.task, args.gamma)

    if args.method == "agglomerate":
        ks = range(1, min(args.max_clusters, ds.n_features) + 1)
        rows = []
        for k in ks:
            _cmap, Xt = agglomerate(ds.X, k, metric=args.metric, mode=args.mode)
            scores = []
            for rep in range(args.n_repeats):
                folds = make_folds(ds.y, n_folds=args.n_folds, seed=args.seed + rep)
                fold_scores = []
                for tr, va in folds.split():
                    model = RandomForest(n_trees=args.n_trees, seed=args.seed + rep).fit(
                        Xt[tr], ds.y[tr]
                    )
                    fold_scores.append(accuracy(ds.y[va], model.predict(Xt[va])))
                scores.append(np.mean(fold_scores))
            rows.append((int(k), float(np.mean(scores)), float(np.std(scores))))
        _write_csv(out_dir / "agglomeration_curve.csv", ["n_clusters", "mean_accuracy", "std_accuracy"], rows)

    elif args.method == "pfi":
        test_ids = args.test or [s for s in _scan_ids_in(scan_dir) if s not in set(train_ids)]
        test_ds = assemble_dataset(_load_scans(scan_dir, test_ids), args.task, args.gamma)
        model = RandomForest(n_trees=args.n_trees, seed=args.seed).fit(ds.X, ds.y)
        importances = pfi(model, test_ds.X, test_ds.y, n_repeats=args.n_repeats, seed=args.seed)
        _write_csv(
            out_dir / "pfi.csv",
            ["feature", "time_ns", "importance"],
            [
                (j, float(ds.feature_times_ns[j]), float(v))
                for j, v in enumerate(importances)
            ],
        )

    elif args.method == "rfecv":
        validation_groups = None
        if args.validation_groups:
            validation_groups = [part.split(",") for part in args.validation_groups.split(";")]
            n_folds = len(validation_groups)
        else:
            n_folds = args.n_folds
        folds = make_folds(
            ds.y,
            n_folds=n_folds,
            kind=args.fold_kind,
            groups=ds.groups if args.fold_kind == "stratified_group" else None,
            seed=args.seed,
            validation_groups=validation_groups,
        )
        test_ids = args.test or [s for s in _scan_ids_in(scan_dir) if s not in set(train_ids)]
        test_ds = assemble_dataset(_load_scans(scan_dir, test_ids), args.task, args.gamma)
        result = rfecv(
            ds.X,
            ds.y,
            folds,
            step=args.step,
            estimator=lambda s: RandomForest(n_trees=args.n_trees, seed=s),
            seed=args.seed,
            X_test=test_ds.X,
            y_test=test_ds.y,
        )
        _write_csv(
            out_dir / "rfecv_curve.csv",
            ["n_features", "mean_accuracy", "std_accuracy"],
            [(int(n), float(m), float(s)) for n, m, s in result.curve],
        )
        _write_csv(
            out_dir / "rfecv_selected.csv",
            ["feature", "time_ns"],
            [(int(j), float(ds.feature_times_ns[j])) for j in result.selected],
        )
        _write_json(
            out_dir / "rfecv.json",
            {
                "n_selected": int(result.selected.size),
                "test_accuracy_mean": result.test_accuracy_mean,
                "test_accuracy_std": result.test_accuracy_std,
            },
        )
    else:
        raise ValueError(f"unknown selection method {args.method!r}")
    print(f"{args.method} results written to {out_dir}")
    return 0


# --- explain -------------------------------------------------------------------


def _predict_proba_fn(model):
    if hasattr(model, "predict_proba"):
        proba = model.predict_proba

        def f(X):
            p = np.asarray(proba(X), dtype=np.float64)
            return p[:, 1] if p.ndim == 2 else p

        return f
    return lambda X: model.predict(X).astype(np.float64)


def _explain_rows(model, ds: Dataset, eval_rows, background, n_permutations, seed):
    """Shapley attribution per evaluation row over the model's active features
    (gated networks) or all features (small feature sets)."""
    if isinstance(model, SparseNN):
        active = model.active_features()
    else:
        active = np.arange(ds.n_features)
    if active.size == 0:
        raise ValueError("model has no active features to explain")
    proba = _predict_proba_fn(model)
    template = background.mean(axis=0)
    fn = restricted_model(proba, template, active)
    bg_active = background[:, active]

    results = []
    for i in eval_rows:
        x = ds.X[i, active]
        if active.size <= 20 and n_permutations == 0:
            res = exact_shapley(fn, x, bg_active)
        else:
            res = sampled_shapley(fn, x, bg_active, n_permutations=max(n_permutations, 50), seed=seed)
        results.append((i, res))
    return active, results


def cmd_explain(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scan_dir = Path(args.scan_dir)
    model = load_model(Path(args.model))

    bg_loaded = _load_scans(scan_dir, args.background_scans)
    ev_loaded = _load_scans(scan_dir, args.eval_scans)
    bg_ds = assemble_dataset(bg_loaded, args.task, args.gamma, args.stud_indicator)
    ev_ds = assemble_dataset(ev_loaded, args.task, args.gamma, args.stud_indicator)

    rng = np.random.default_rng(args.seed)
    bg_rows = rng.choice(bg_ds.n_rows, size=min(args.background_size, bg_ds.n_rows), replace=False)
    ev_rows = rng.choice(ev_ds.n_rows, size=min(args.n_eval, ev_ds.n_rows), replace=False)
    ev_rows.sort()

    active, results = _explain_rows(
        model, ev_ds, ev_rows, bg_ds.X[bg_rows], args.n_permutations, args.seed
    )

    rows = []
    for i, res in results:
        for a, j in enumerate(active):
            rows.append(
                (
                    int(i),
                    str(ev_ds.groups[i]),
                    int(j),
                    float(ev_ds.feature_times_ns[j]),
                    float(ev_ds.X[i, j]),
                    float(res.phi[a]),
                    float(res.base_value),
                    float(res.std_err[a]) if res.std_err is not None else 0.0,
                )
            )
    _write_csv(
        out_dir / "shap_summary.csv",
        ["row", "scan_id", "feature", "time_ns", "value", "phi", "base_value", "std_err"],
        rows,
    )

    depth_rows = []
    seen_classes = set()
    for _scan, _stud, _wall, spec in bg_loaded + ev_loaded:
        if spec is None or spec.wall_class in seen_classes:
            continue
        seen_classes.add(spec.wall_class)
        # times past the back face (multiples, behind-wall returns) have no
        # depth interval inside this stack
        limit = stack_time_ns(spec, Bound.USE_EPS_MIN)
        times = [
            float(ev_ds.feature_times_ns[j])
            for j in active
            if not np.isnan(ev_ds.feature_times_ns[j]) and ev_ds.feature_times_ns[j] <= limit
        ]
        for fd in feature_depth_report(times, spec):
            depth_rows.append(
                (
                    spec.wall_class.value,
                    float(fd.time_ns),
                    float(fd.depth_min_m),
                    float(fd.depth_max_m),
                    int(fd.layer_shallow),
                    int(fd.layer_deep),
                )
            )
    _write_csv(
        out_dir / "depth_intervals.csv",
        ["wall_class", "time_ns", "depth_min_m", "depth_max_m", "layer_shallow", "layer_deep"],
        depth_rows,
    )
    print(f"explained {len(results)} row(s) over {active.size} feature(s)")
    return 0


# --- run -----------------------------------------------------------------------


def _run_one_seed(payload: dict) -> dict:
    """Worker for one seeded training run (top level so it pickles)."""
    model = _fit_model(
        payload["model_kind"],
        payload["model_params"],
        payload["X_train"],
        payload["y_train"],
        payload["seed"],
    )
    out = {
        "seed": payload["seed"],
        "train_accuracy": accuracy(payload["y_train"], model.predict(payload["X_train"])),
        "test_accuracy": accuracy(payload["y_test"], model.predict(payload["X_test"])),
    }
    if isinstance(model, SparseNN):
        out["active_features"] = model.active_features().tolist()
        out["n_active"] = len(out["active_features"])
    return out


def cmd_run(args) -> int:
    config = json.loads(Path(args.config).read_text())
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scan_dir = Path(config["scan_dir"])
    task = config["task"]
    gamma = float(config.get("gamma", 0.8))
    stud_indicator = bool(config.get("stud_indicator", False))

    all_ids = _scan_ids_in(scan_dir)
    if config.get("preset") == "minimal":
        train_ids = [s for s in presets.MINIMAL_TRAIN]
        test_ids = [s for s in all_ids if s not in set(train_ids)]
    else:
        train_ids = list(config["train_scans"])
        test_ids = config.get("test_scans", "rest")
        if test_ids == "rest":
            test_ids = [s for s in all_ids if s not in set(train_ids)]
    missing = [s for s in train_ids + test_ids if s not in set(all_ids)]
    if missing:
        raise ValueError(f"scan(s) {missing} not present in {scan_dir}")
    if set(train_ids) & set(test_ids):
        raise ValueError("train and test scans overlap")

    train_loaded = _load_scans(scan_dir, train_ids)
    test_loaded = _load_scans(scan_dir, test_ids)
    train_ds = assemble_dataset(train_loaded, task, gamma, stud_indicator)
    test_ds = assemble_dataset(test_loaded, task, gamma, stud_indicator)

    model_cfg = dict(config.get("model", {"kind": "forest"}))
    kind = model_cfg.pop("kind")
    if "hidden" in model_cfg:
        model_cfg["hidden"] = tuple(model_cfg["hidden"])
    seeds = [int(s) for s in config.get("seeds", [0])]

    payloads = [
        {
            "model_kind": kind,
            "model_params": model_cfg,
            "X_train": train_ds.X,
            "y_train": train_ds.y,
            "X_test": test_ds.X,
            "y_test": test_ds.y,
            "seed": seed,
        }
        for seed in seeds
    ]
    if args.jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            per_seed = list(pool.map(_run_one_seed, payloads))
    else:
        per_seed = [_run_one_seed(p) for p in payloads]

    test_acc = np.array([r["test_accuracy"] for r in per_seed])
    report = {
        "config": config,
        "train_scans": train_ids,
        "test_scans": test_ids,
        "per_seed": per_seed,
        "aggregate": {
            "test_accuracy_mean": float(test_acc.mean()),
            "test_accuracy_std": float(test_acc.std()),
        },
    }

    # Stable feature set and its physical depth brackets (gated models only).
    if kind == "sparsenn":
        sets = [set(r["active_features"]) for r in per_seed]
        stable = sorted(set.intersection(*sets)) if sets else []
        report["stable_features"] = stable
        stable_times = [
            float(train_ds.feature_times_ns[j])
            for j in stable
            if not np.isnan(train_ds.feature_times_ns[j])
        ]
        report["stable_times_ns"] = stable_times
        depth = {}
        beyond = {}
        seen = set()
        for _scan, _stud, _wall, spec in train_loaded:
            if spec is None or spec.wall_class in seen:
                continue
            seen.add(spec.wall_class)
            limit = stack_time_ns(spec, Bound.USE_EPS_MIN)
            inside = [t for t in stable_times if t <= limit]
            beyond[spec.wall_class.value] = [t for t in stable_times if t > limit]
            depth[spec.wall_class.value] = [
                {
                    "time_ns": fd.time_ns,
                    "depth_min_m": fd.depth_min_m,
                    "depth_max_m": fd.depth_max_m,
                    "layer_shallow": fd.layer_shallow,
                    "layer_deep": fd.layer_deep,
                }
                for fd in feature_depth_report(inside, spec)
            ]
        report["depth_report"] = depth
        report["beyond_wall_times_ns"] = beyond

    # First-seed model drives the per-trace prediction export.
    model = _fit_model(kind, model_cfg, train_ds.X, train_ds.y, seeds[0])
    save_model(model, out_dir / "model.json")
    proba = _predict_proba_fn(model)(test_ds.X)
    preds = model.predict(test_ds.X)
    _write_csv(
        out_dir / "predictions.csv",
        ["scan_id", "row", "proba", "pred", "truth"],
        [
            (str(test_ds.groups[i]), int(i), float(proba[i]), int(preds[i]), int(test_ds.y[i]))
            for i in range(test_ds.n_rows)
        ],
    )

    first_test = test_loaded[0][0]
    n0 = first_test.n_traces
    (out_dir / "bands.svg").write_text(
        bands_svg(proba[:n0], preds[:n0], title=f"{first_test.scan_id} {task} predictions")
    )
    feature_times = report.get("stable_times_ns", []) if kind == "sparsenn" else []
    (out_dir / "heatmap.svg").write_text(
        heatmap_svg(
            first_test.amplitudes,
            first_test.axis.duration_ns,
            feature_times_ns=feature_times,
            title=f"{first_test.scan_id}",
        )
    )
    _write_json(out_dir / "report.json", report)
    print(
        f"{kind} on {task}: test accuracy {report['aggregate']['test_accuracy_mean']:.3f} "
        f"+/- {report['aggregate']['test_accuracy_std']:.3f} over {len(seeds)} seed(s)"
    )
    return 0


# --- plot ----------------------------------------------------------------------


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def cmd_plot(args) -> int:
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "heatmap":
        scan, *_ = load_bscan(Path(args.scan))
        times = [float(t) for t in args.feature_times.split(",")] if args.feature_times else []
        out.write_text(
            heatmap_svg(scan.amplitudes, scan.axis.duration_ns, times, title=scan.scan_id)
        )
    elif args.kind == "curve":
        header, rows = _read_csv(Path(args.input))
        xs = [float(r[0]) for r in rows]
        means = [float(r[1]) for r in rows]
        stds = [float(r[2]) for r in rows] if len(header) > 2 else None
        out.write_text(
            curve_svg(xs, means, stds, title=Path(args.input).stem, xlabel=header[0], ylabel=header[1])
        )
    elif args.kind == "bars":
        header, rows = _read_csv(Path(args.input))
        values = [float(r[-1]) for r in rows]
        labels = [r[0] for r in rows]
        out.write_text(bars_svg(values, labels, title=Path(args.input).stem, ylabel=header[-1]))
    elif args.kind == "shap":
        header, rows = _read_csv(Path(args.input))
        col = {name: i for i, name in enumerate(header)}
        groups: dict[str, tuple[list[float], list[float]]] = {}
        for r in rows:
            label = r[col["time_ns"]]
            groups.setdefault(label, ([], []))
            groups[label][0].append(float(r[col["value"]]))
            groups[label][1].append(float(r[col["phi"]]))
        feature_rows = [(label, vals, phis) for label, (vals, phis) in sorted(groups.items())]
        out.write_text(beeswarm_svg(feature_rows))
    elif args.kind == "bands":
        header, rows = _read_csv(Path(args.input))
        col = {name: i for i, name in enumerate(header)}
        if args.scan_id:
            rows = [r for r in rows if r[col["scan_id"]] == args.scan_id]
        if not rows:
            raise ValueError("no prediction rows matched")
        proba = [float(r[col["proba"]]) for r in rows]
        preds = [int(r[col["pred"]]) for r in rows]
        out.write_text(bands_svg(proba, preds, title=args.scan_id or "predictions"))
    else:
        raise ValueError(f"unknown plot kind {args.kind!r}")
    print(f"wrote {out}")
    return 0


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gprwall", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=7, help="master seed")
    parser.add_argument("--out-dir", default=".", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers for seed sweeps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render synthetic scans")
    p.add_argument("--preset", choices=["benchmark"], default="benchmark")
    p.add_argument("--config", help="JSON wall/synth config instead of the preset")
    p.add_argument("--noise-sigma", type=float, default=None, help="fix one noise level for all scans")
    p.add_argument("--n-traces", type=int, default=160)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("label", help="SVD stud labeling with width calibration")
    p.add_argument("--scan-dir", required=True)
    p.add_argument("--scans", nargs="*", default=None, help="scan ids (default: all)")
    p.add_argument("--target-width", type=float, default=0.0381)
    p.add_argument("--fraction", type=float, default=None, help="skip calibration, use this fraction")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="fit one model and save metrics")
    p.add_argument("--scan-dir", required=True)
    p.add_argument("--task", choices=["stud", "wall"], required=True)
    p.add_argument("--model", choices=["knn", "tree", "forest", "sparsenn"], required=True)
    p.add_argument("--train", nargs="+", required=True, help="training scan ids")
    p.add_argument("--test", nargs="*", default=None, help="test scan ids (default: the rest)")
    p.add_argument("--gamma", type=float, default=0.8)
    p.add_argument("--stud-indicator", action="store_true")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--hidden", default=None, help="comma widths, e.g. 8,8,8")
    p.add_argument("--lambda-reg", type=float, default=1e-5)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--gate-learning-rate", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=64)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("select", help="feature reduction tables")
    p.add_argument("--scan-dir", required=True)
    p.add_argument("--task", choices=["stud", "wall"], required=True)
    p.add_argument("--method", choices=["agglomerate", "pfi", "rfecv"], required=True)
    p.add_argument("--train", nargs="+", required=True)
    p.add_argument("--test", nargs="*", default=None)
    p.add_argument("--gamma", type=float, default=0.8)
    p.add_argument("--metric", choices=["euclidean", "cosine"], default="euclidean")
    p.add_argument("--mode", choices=["pooled", "exemplar"], default="pooled")
    p.add_argument("--max-clusters", type=int, default=50)
    p.add_argument("--n-repeats", type=int, default=10)
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--n-folds", type=int, default=5)
    p.add_argument("--fold-kind", choices=["stratified", "stratified_group"], default="stratified")
    p.add_argument(
        "--validation-groups",
        default=None,
        help="explicit grouped folds: semicolon-separated folds of comma-separated scan ids",
    )
    p.add_argument("--step", type=int, default=5)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("explain", help="Shapley attribution + depth intervals")
    p.add_argument("--scan-dir", required=True)
    p.add_argument("--model", required=True, help="model.json from train/run")
    p.add_argument("--task", choices=["stud", "wall"], required=True)
    p.add_argument("--background-scans", nargs="+", required=True)
    p.add_argument("--eval-scans", nargs="+", required=True)
    p.add_argument("--gamma", type=float, default=0.8)
    p.add_argument("--stud-indicator", action="store_true")
    p.add_argument("--background-size", type=int, default=100)
    p.add_argument("--n-eval", type=int, default=200)
    p.add_argument("--n-permutations", type=int, default=0, help="0 = exact when feasible")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("run", help="full experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="render CSV outputs to SVG")
    p.add_argument("--kind", choices=["heatmap", "curve", "bars", "shap", "bands"], required=True)
    p.add_argument("--input", help="input CSV (curve/bars/shap/bands)")
    p.add_argument("--scan", help="scan CSV (heatmap)")
    p.add_argument("--scan-id", default=None, help="filter predictions to one scan (bands)")
    p.add_argument("--feature-times", default=None, help="comma list of ns overlays (heatmap)")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; remap to 1
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - boundary: report and signal failure
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
