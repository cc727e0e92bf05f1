"""Command-line entry point wiring the library into batch workflows.

Subcommands: parse, fp, split, train, eval, embed, nn, transfer, report.
Every artifact-producing command writes a manifest (resolved options,
seed, versions) next to its outputs, and identical manifests reproduce
identical artifact bytes. All randomness flows from --seed.

Exit codes: 0 success, 2 input or schema error, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import traceback
from dataclasses import asdict

import numpy as np

from . import __version__, analysis, baselines, dataset, datasplit, gnn, metrics, plots
from .fingerprints import (BIT_PATH_DEFAULT, COUNT_MORGAN_DEFAULT,
                           FingerprintConfig, fingerprint_matrix)
from .molgraph import SmilesParseError, graph_summary, parse_smiles


class InputError(ValueError):
    """User-facing problem with arguments or input files (exit code 2)."""


# ---------------------------------------------------------------------------
# Shared IO helpers
# ---------------------------------------------------------------------------

def _write_manifest(args, out_path):
    options = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = {
        "command": args.command,
        "options": options,
        "seed": getattr(args, "seed", None),
        "versions": {
            "odorkit": __version__,
            "python": ".".join(map(str, sys.version_info[:3])),
            "numpy": np.__version__,
        },
    }
    path = str(out_path) + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def _load_dataset(args) -> dataset.LabeledDataset:
    """Load one or more CSVs, merge on canonical form, filter labels."""
    synonyms = None
    if getattr(args, "synonyms", None):
        synonyms = dataset.load_synonym_map(args.synonyms)
    all_records = None
    for path in args.input:
        if not os.path.exists(path):
            raise InputError(f"input file not found: {path}")
        records, sidecar = dataset.load_csv(path, synonyms=synonyms)
        if sidecar:
            print(f"{path}: {len(sidecar)} rows failed to parse", file=sys.stderr)
            sidecar_path = path + ".errors.json"
            with open(sidecar_path, "w") as fh:
                json.dump(sidecar, fh, indent=2)
        if all_records is None:
            ds = dataset.LabeledDataset(records=records)
        else:
            ds, stats = dataset.merge_sources(all_records, records)
            print(f"merged: {stats.overlap} overlapping molecules, "
                  f"{stats.only_a}+{stats.only_b} exclusive", file=sys.stderr)
        all_records = ds.records
    if getattr(args, "min_count", 1) > 1:
        ds = dataset.filter_labels(ds, args.min_count,
                                   keep_unlabeled=getattr(args, "keep_unlabeled", False))
    return ds


def _load_split(path, ds: dataset.LabeledDataset) -> dict:
    if not os.path.exists(path):
        raise InputError(f"split file not found: {path}")
    membership = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames \
                or "split" not in reader.fieldnames:
            raise InputError(f"{path}: split file needs id,split columns")
        for row in reader:
            membership[row["id"]] = row["split"]
    splits: dict[str, list[int]] = {}
    for i, rec in enumerate(ds.records):
        name = membership.get(rec.id)
        if name is None:
            raise InputError(f"molecule {rec.id} missing from split file")
        splits.setdefault(name, []).append(i)
    return {k: np.array(v, dtype=np.intp) for k, v in splits.items()}


def _fingerprint_config(args) -> FingerprintConfig:
    return FingerprintConfig(
        kind=args.fp_kind,
        radius_or_max_path=args.fp_radius,
        n_bits=args.fp_bits,
        counted=args.fp_counted,
    )


def _add_fingerprint_flags(parser, kind="path", radius=6, bits=4096, counted=False):
    parser.add_argument("--fp-kind", choices=["morgan", "path"], default=kind)
    parser.add_argument("--fp-radius", type=int, default=radius,
                        help="max radius (morgan) or path length (path)")
    parser.add_argument("--fp-bits", type=int, default=bits)
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--fp-counted", dest="fp_counted", action="store_true",
                       default=counted)
    group.add_argument("--fp-bit", dest="fp_counted", action="store_false")


def _add_data_flags(parser):
    parser.add_argument("--input", action="append", required=True,
                        help="dataset CSV; repeat to merge sources")
    parser.add_argument("--min-count", type=int, default=1,
                        help="drop descriptors with fewer positives")
    parser.add_argument("--keep-unlabeled", action="store_true",
                        help="keep molecules whose labels were all filtered out")
    parser.add_argument("--synonyms", default=None,
                        help="CSV mapping raw_label,canonical_label")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _load_vector_csv(path):
    """id + numeric columns, as written by fp/embed."""
    if not os.path.exists(path):
        raise InputError(f"file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "id":
            raise InputError(f"{path}: expected an id column first")
        skip = 2 if len(header) > 1 and header[1] == "canonical_smiles" else 1
        ids, rows = [], []
        for row in reader:
            ids.append(row[0])
            rows.append([float(v) for v in row[skip:]])
    return ids, np.array(rows)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_parse(args):
    try:
        g = parse_smiles(args.smiles)
    except SmilesParseError as exc:
        raise InputError(f"parse error: {exc}") from exc
    text = json.dumps(graph_summary(g), indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        _write_manifest(args, args.out)
    else:
        print(text)
    return 0


def cmd_fp(args):
    ds = _load_dataset(args)
    cfg = _fingerprint_config(args)
    matrix = fingerprint_matrix(ds.graphs, cfg)
    if args.format == "csv":
        header = ["id"] + [f"bit_{j}" for j in range(cfg.n_bits)]
        rows = ([rec.id] + m.tolist() for rec, m in zip(ds.records, matrix))
        _write_csv(args.out, header, rows)
    else:
        triplets = [
            [i, int(j), int(matrix[i, j])]
            for i in range(len(matrix))
            for j in np.flatnonzero(matrix[i])
        ]
        blob = {"ids": ds.ids, "n_bits": cfg.n_bits,
                "config": asdict(cfg), "triplets": triplets}
        with open(args.out, "w") as fh:
            json.dump(blob, fh, sort_keys=True)
    _write_manifest(args, args.out)
    return 0


def cmd_split(args):
    ds = _load_dataset(args)
    ratios = [float(x) for x in args.ratios.split(",")]
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InputError("ratios must sum to 1")
    assignment = datasplit.iterative_stratify(
        ds.label_matrix(), ratios, order=args.order, seed=args.seed)
    names = assignment.names_per_example()
    _write_csv(args.out, ["id", "split"],
               ((rec.id, names[i]) for i, rec in enumerate(ds.records)))
    _write_manifest(args, args.out)
    return 0


def _gnn_config_from_args(args, n_tasks: int) -> gnn.GnnConfig:
    make = gnn.GnnConfig.gcn if args.model == "gcn" else gnn.GnnConfig.mpnn
    overrides = dict(seed=args.seed, epochs=args.epochs, batch_size=args.batch_size)
    if args.lr is not None:
        overrides["base_lr"] = args.lr
    return make(n_tasks=n_tasks, **overrides)


def cmd_train(args):
    ds = _load_dataset(args)
    splits = _load_split(args.splits, ds)
    if "train" not in splits:
        raise InputError("split file has no 'train' rows")
    labels = ds.label_matrix().astype(np.float64)

    if args.model in ("gcn", "mpnn"):
        cfg = _gnn_config_from_args(args, len(ds.vocabulary))
        model = gnn.GnnModel(cfg)
        history = gnn.train(model, ds.graphs, labels,
                            {"train": splits["train"], "val": splits.get("val", [])})
        gnn.save_checkpoint(model, args.out, extra={"vocabulary": ds.vocabulary})
        if args.history:
            _write_csv(args.history,
                       ["epoch", "lr", "train_loss", "val_loss", "val_mean_auroc"],
                       ((h.epoch, repr(h.lr), repr(h.train_loss), repr(h.val_loss),
                         repr(h.val_mean_auroc)) for h in history))
    elif args.model == "rf":
        fp_cfg = _fingerprint_config(args)
        features = fingerprint_matrix(ds.graphs, fp_cfg).astype(np.float64)
        rf_cfg = baselines.ForestConfig(n_trees=args.n_trees, seed=args.seed)
        forest = baselines.fit_random_forest(
            features[splits["train"]], labels[splits["train"]], rf_cfg)
        blob = {
            "format_version": 1, "model": "rf_pipeline",
            "fingerprint": asdict(fp_cfg), "vocabulary": ds.vocabulary,
            "forest": {
                "config": asdict(forest.config),
                "n_features": forest.n_features,
                "n_labels": forest.n_labels,
                "trees": [[asdict(t) for t in ens] for ens in forest.trees],
            },
        }
        with open(args.out, "w") as fh:
            json.dump(blob, fh)
    elif args.model == "knn":
        fp_cfg = _fingerprint_config(args)
        features = fingerprint_matrix(ds.graphs, fp_cfg)
        tr = splits["train"]
        blob = {
            "format_version": 1, "model": "knn_pipeline",
            "fingerprint": asdict(fp_cfg), "vocabulary": ds.vocabulary,
            "k": args.k, "metric": args.metric,
            "train_features": features[tr].tolist(),
            "train_labels": labels[tr].astype(int).tolist(),
        }
        with open(args.out, "w") as fh:
            json.dump(blob, fh)
    _write_manifest(args, args.out)
    return 0


def _model_scores(path, ds: dataset.LabeledDataset, rows: np.ndarray):
    """Scores [len(rows), n_labels] from any trained model file."""
    if not os.path.exists(path):
        raise InputError(f"model file not found: {path}")
    with open(path) as fh:
        blob = json.load(fh)
    kind = blob.get("model")
    vocabulary = blob.get("extra", {}).get("vocabulary") or blob.get("vocabulary")
    if vocabulary != ds.vocabulary:
        raise InputError("model vocabulary does not match the dataset "
                         "(check --min-count and inputs)")
    graphs = [ds.graphs[i] for i in rows]
    if kind == "gnn":
        model = gnn.load_checkpoint(path)
        probs, _ = model.predict(graphs)
        return probs
    if kind == "rf_pipeline":
        fp_cfg = FingerprintConfig(**blob["fingerprint"])
        features = fingerprint_matrix(graphs, fp_cfg).astype(np.float64)
        forest = baselines.Forest(
            config=baselines.ForestConfig(**blob["forest"]["config"]),
            n_features=blob["forest"]["n_features"],
            n_labels=blob["forest"]["n_labels"],
        )
        forest.trees = [[baselines._Tree(**t) for t in ens]
                        for ens in blob["forest"]["trees"]]
        return baselines.rf_predict(forest, features)
    if kind == "knn_pipeline":
        fp_cfg = FingerprintConfig(**blob["fingerprint"])
        features = fingerprint_matrix(graphs, fp_cfg).astype(np.float64)
        return baselines.knn_predict(
            np.array(blob["train_features"], dtype=np.float64),
            np.array(blob["train_labels"], dtype=np.float64),
            features, k=blob["k"], metric=blob["metric"])
    raise InputError(f"unrecognized model file {path}")


def cmd_eval(args):
    ds = _load_dataset(args)
    splits = _load_split(args.splits, ds)
    if args.on not in splits:
        raise InputError(f"split file has no '{args.on}' rows")
    rows = splits[args.on]
    labels = ds.label_matrix().astype(np.float64)
    scores = _model_scores(args.model, ds, rows)

    thresholds = None
    if "val" in splits and args.on != "val":
        val_scores = _model_scores(args.model, ds, splits["val"])
        thresholds = metrics.optimize_thresholds(val_scores, labels[splits["val"]])
    report = metrics.evaluate_multilabel(
        scores, labels[rows], ds.vocabulary, thresholds=thresholds,
        n_resamples=args.resamples, seed=args.seed)
    with open(args.out, "w") as fh:
        fh.write(report.to_json() + "\n")

    if args.per_label:
        base_auroc = [""] * len(ds.vocabulary)
        base_auprc = [""] * len(ds.vocabulary)
        if args.baseline:
            base_scores = _model_scores(args.baseline, ds, rows)
            base_report = metrics.evaluate_multilabel(
                base_scores, labels[rows], ds.vocabulary, ci=False)
            base_auroc = base_report.per_label["auroc"]
            base_auprc = base_report.per_label["auprc"]
        _write_csv(
            args.per_label,
            ["label", "auroc_model", "auroc_baseline", "auprc_model", "auprc_baseline"],
            ((name,
              _fmt(report.per_label["auroc"][j]), _fmt(base_auroc[j]),
              _fmt(report.per_label["auprc"][j]), _fmt(base_auprc[j]))
             for j, name in enumerate(ds.vocabulary)),
        )
    _write_manifest(args, args.out)
    return 0


def _fmt(value):
    if value is None or value == "":
        return ""
    return repr(float(value))


def cmd_embed(args):
    ds = _load_dataset(args)
    with open(args.model) as fh:
        blob = json.load(fh)
    if blob.get("model") != "gnn":
        raise InputError("embed needs a gnn checkpoint")
    model = gnn.load_checkpoint(args.model)
    _, embeddings = model.predict(ds.graphs)
    dim = embeddings.shape[1]
    header = ["id", "canonical_smiles"] + [f"e_{j}" for j in range(dim)]
    _write_csv(args.out, header,
               (([rec.id, rec.canonical] + [repr(float(v)) for v in embeddings[i]])
                for i, rec in enumerate(ds.records)))
    _write_manifest(args, args.out)
    return 0


def cmd_nn(args):
    ids, vectors = _load_vector_csv(args.embeddings)
    table = analysis.EmbeddingTable(ids=ids, vectors=vectors, source="file")
    queries = args.query
    results = {}
    for q in queries:
        if q not in ids:
            raise InputError(f"query id {q!r} not in embeddings file")
        results[q] = [
            {"id": mol_id, "distance": dist}
            for mol_id, dist in analysis.nearest_neighbors(table, q, args.k, args.metric)
        ]
    text = json.dumps(results, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        _write_manifest(args, args.out)
    else:
        print(text)
    return 0


def cmd_transfer(args):
    ds = _load_dataset(args)
    splits = _load_split(args.splits, ds)
    for required in ("train", "test"):
        if required not in splits:
            raise InputError(f"split file has no '{required}' rows")
    gnn_cfg = _gnn_config_from_args(args, len(ds.vocabulary))
    rf_cfg = baselines.ForestConfig(n_trees=args.n_trees, seed=args.seed)
    labels = args.label or ds.vocabulary
    results = []
    for name in labels:
        result = analysis.transfer_ablation(
            ds, name, gnn_cfg, rf_cfg, splits,
            n_resamples=args.resamples, seed=args.seed)
        results.append(result.as_dict())
    with open(args.out, "w") as fh:
        json.dump({"results": results}, fh, indent=2, sort_keys=True)
    if args.figures:
        plots.transfer_bars(results, _sibling(args.out, "transfer.png"))
    _write_manifest(args, args.out)
    return 0


def _sibling(out_path, name):
    directory = os.path.dirname(os.path.abspath(out_path))
    return os.path.join(directory, name)


def cmd_report(args):
    os.makedirs(args.out, exist_ok=True)

    def out(name):
        return os.path.join(args.out, name)

    if args.what == "cooccurrence":
        ds = _load_dataset(args)
        co = dataset.cooccurrence(ds, drop_top=args.drop_top)
        _write_csv(out("cooccurrence.csv"), ["label"] + co.labels,
                   (([label] + [repr(float(v)) for v in co.normalized[i]])
                    for i, label in enumerate(co.labels)))
        with open(out("vocabulary.json"), "w") as fh:
            json.dump(co.labels, fh, indent=2)
        if args.figures:
            plots.cooccurrence_heatmap(co.normalized, co.labels,
                                       out("cooccurrence.png"))
    elif args.what == "projection":
        ds = _load_dataset(args)
        ids, vectors = _load_vector_csv(args.embeddings)
        if set(ids) != {r.id for r in ds.records}:
            raise InputError("embedding ids do not match the dataset")
        _, ratios, projected = analysis.pca(vectors, 2)
        keep = np.ones(len(projected), dtype=bool)
        if args.trim_z is not None:
            keep = analysis.zscore_mask(projected, args.trim_z)
        label_of = {rec.id: ";".join(sorted(rec.labels)) for rec in ds.records}
        rows = []
        for i, mol_id in enumerate(ids):
            if keep[i]:
                rows.append((mol_id, repr(float(projected[i, 0])), repr(float(projected[i, 1])),
                             label_of[mol_id]))
        _write_csv(out("projection.csv"), ["id", "pc1", "pc2", "labels"], rows)
        with open(out("explained_variance.json"), "w") as fh:
            json.dump([float(r) for r in ratios], fh)
        if args.figures:
            highlight = args.label or []
            label_points, grids = {}, {}
            for name in highlight:
                members = np.array([
                    i for i, mol_id in enumerate(ids)
                    if keep[i] and name in label_of[mol_id].split(";")
                ], dtype=np.intp)
                if len(members) == 0:
                    continue
                label_points[name] = projected[members]
                if len(members) >= 3:
                    grids[name] = analysis.kde_grid(projected[members], label=name)
            plots.projection_figure(projected[keep], label_points,
                                    out("projection.png"), density_grids=grids)
    elif args.what == "density":
        ds = _load_dataset(args)
        ids, vectors = _load_vector_csv(args.embeddings)
        if not args.label:
            raise InputError("density report needs --label")
        _, _, projected = analysis.pca(vectors, 2)
        label_rows = {mol_id: i for i, mol_id in enumerate(ids)}
        for name in args.label:
            members = [label_rows[rec.id] for rec in ds.records if name in rec.labels]
            if not members:
                raise InputError(f"label {name!r} has no molecules")
            grid = analysis.kde_grid(projected[np.array(members)], label=name)
            blob = {
                "label": name,
                "x": grid.x_edges.tolist(),
                "y": grid.y_edges.tolist(),
                "density": grid.density.tolist(),
                "bandwidth": list(grid.bandwidth),
                "contour_levels": {str(k): v for k, v in grid.contour_levels.items()},
            }
            with open(out(f"density_{name}.json"), "w") as fh:
                json.dump(blob, fh, sort_keys=True)
            if args.figures:
                plots.density_figure(grid, out(f"density_{name}.png"))
    elif args.what == "per-descriptor":
        with open(args.eval_report) as fh:
            report = json.load(fh)
        per = report["per_label"]
        rows = [
            (name, _fmt(per["auroc"][j]), _fmt(per["auprc"][j]))
            for j, name in enumerate(report["labels"])
        ]
        _write_csv(out("per_descriptor.csv"), ["label", "auroc", "auprc"], rows)
        if args.figures and args.baseline_report:
            with open(args.baseline_report) as fh:
                base = json.load(fh)
            pairs = [
                (m, b, name)
                for m, b, name in zip(per["auroc"], base["per_label"]["auroc"],
                                      report["labels"])
                if m is not None and b is not None
            ]
            plots.per_descriptor_scatter(
                [p[0] for p in pairs], [p[1] for p in pairs],
                [1] * len(pairs), out("per_descriptor.png"))
    else:
        raise InputError(f"unknown report kind {args.what!r}")
    _write_manifest(args, os.path.join(args.out, "report"))
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odorkit",
        description="Molecular odor prediction: parsing, fingerprints, "
                    "graph models, baselines and embedding analysis.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse one SMILES and print a JSON summary")
    p.add_argument("smiles")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("fp", help="compute a fingerprint matrix")
    _add_data_flags(p)
    _add_fingerprint_flags(p)
    p.add_argument("--format", choices=["csv", "triplets"], default="csv")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fp)

    p = sub.add_parser("split", help="stratified train/val/test assignment")
    _add_data_flags(p)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--order", type=int, choices=[1, 2], default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a model")
    _add_data_flags(p)
    p.add_argument("--model", choices=["gcn", "mpnn", "rf", "knn"], required=True)
    p.add_argument("--splits", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--history", default=None, help="per-epoch CSV (gnn only)")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--n-trees", type=int, default=500)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--metric", choices=["jaccard", "cosine", "euclidean"],
                   default="jaccard")
    _add_fingerprint_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count())
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a trained model on a split")
    _add_data_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--baseline", default=None,
                   help="second model for the per-label comparison table")
    p.add_argument("--splits", required=True)
    p.add_argument("--on", default="test", help="split name to evaluate")
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--per-label", default=None, help="per-descriptor CSV path")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("embed", help="export embeddings from a gnn checkpoint")
    _add_data_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("nn", help="nearest neighbors in an embedding file")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--query", action="append", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--metric", choices=["cosine", "euclidean", "jaccard"],
                   default="cosine")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_nn)

    p = sub.add_parser("transfer", help="held-out descriptor transfer pipeline")
    _add_data_flags(p)
    p.add_argument("--splits", required=True)
    p.add_argument("--label", action="append", default=None,
                   help="descriptor to ablate; repeat for several (default all)")
    p.add_argument("--model", choices=["gcn", "mpnn"], default="gcn")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--n-trees", type=int, default=500)
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--figures", action="store_true", default=True)
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count())
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("report", help="co-occurrence, projection, density "
                                      "and per-descriptor exports")
    _add_data_flags(p)
    p.add_argument("--what", choices=["cooccurrence", "projection", "density",
                                      "per-descriptor"], required=True)
    p.add_argument("--embeddings", default=None,
                   help="embedding CSV (projection and density reports)")
    p.add_argument("--label", action="append", default=None,
                   help="labels to highlight or export")
    p.add_argument("--drop-top", type=int, default=0,
                   help="drop the N most frequent descriptors first")
    p.add_argument("--trim-z", type=float, default=None,
                   help="drop projection outliers above this z-score")
    p.add_argument("--eval-report", default=None)
    p.add_argument("--baseline-report", default=None)
    p.add_argument("--figures", action="store_true", default=True)
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, dataset.SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
