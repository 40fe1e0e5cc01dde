"""Command-line surface.

Every command writes its artifacts under the requested output location plus
a run.json recording the full resolved configuration (seed included), so any
run can be reproduced byte-identically.  Exit codes: 0 success, 2 input
error, 3 internal invariant violation.
"""

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, aggregate, audio, concepts, ml, shotviz, visual
from . import io as avio
from .errors import InputError

AUDIO_FEATURES = ("rp", "rh", "ssd", "mvd", "tssd", "trh", "mfcc", "chroma")
VISUAL_FEATURES = ("gcs", "gev", "cf", "cn", "waf", "ic", "lfp")


def write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _plain(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def write_run_config(out_dir, command, args):
    config = {k: _plain(v) for k, v in sorted(vars(args).items())
              if k != "func"}
    write_json(Path(out_dir) / "run.json",
               {"command": command, "config": config, "version": __version__})


def _parse_feature_list(raw, allowed):
    features = [f.strip().lower() for f in raw.split(",") if f.strip()]
    unknown = [f for f in features if f not in allowed]
    if unknown:
        raise InputError(f"unknown features: {', '.join(unknown)}; "
                         f"choose from {', '.join(allowed)}")
    if not features:
        raise InputError("empty feature list")
    return features


# ---------------------------------------------------------------------------
# feature extraction
# ---------------------------------------------------------------------------

def _audio_feature_vector(wav_path, features):
    clip = avio.read_wav(wav_path)
    vector, schema = [], []
    track = None
    for name in features:
        if name in audio.TRACK_FEATURE_DIMS:
            if track is None:
                track = audio.track_features(clip)
            values = track[name]
        elif name == "mfcc":
            frames = audio.mfcc(audio.resample(clip))
            values = aggregate.moments(frames, ("mean", "std"))
        elif name == "chroma":
            frames, _ = audio.chroma(audio.resample(clip))
            values = aggregate.moments(frames, ("mean", "std"))
        vector.append(values)
        schema.extend(f"{name}_{i}" for i in range(values.size))
    return np.concatenate(vector), schema


def _audio_worker(task):
    track_id, label, wav_path, features = task
    vector, schema = _audio_feature_vector(wav_path, features)
    return track_id, label, vector, schema


def _visual_feature_vector(frames_path, features, fps, lfp_preset,
                           crop_letterbox, dump_csv=None):
    stream = avio.read_frames(frames_path, fps=fps)
    matrices, lfp_pattern = visual.extract_video_features(
        stream, features, fps=stream.fps, lfp_preset=lfp_preset,
        crop_letterbox=crop_letterbox)

    vector, schema = [], []
    for name in features:
        if name == "lfp":
            values = visual.lfp_feature(lfp_pattern, lfp_preset)
            vector.append(values)
            schema.extend(f"lfp_{i}" for i in range(values.size))
        else:
            agg = aggregate.moments(matrices[name], aggregate.VISUAL_MOMENTS)
            vector.append(agg)
            schema.extend(
                f"{name}_{d}_{m}"
                for d in range(matrices[name].shape[1])
                for m in aggregate.VISUAL_MOMENTS)
    if dump_csv is not None:
        _dump_frame_features(dump_csv, matrices,
                             [f for f in features if f != "lfp"])
    return np.concatenate(vector), schema


def _dump_frame_features(path, matrices, features):
    header = ["frame_index"]
    for name in features:
        header.extend(f"{name}_{k}" for k in range(matrices[name].shape[1]))
    n = matrices[features[0]].shape[0] if features else 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(n):
            row = [i]
            for name in features:
                row.extend(f"{v:.9g}" for v in matrices[name][i])
            writer.writerow(row)


def _visual_worker(task):
    track_id, label, frames_path, features, fps, preset, crop = task
    vector, schema = _visual_feature_vector(frames_path, features, fps,
                                            preset, crop)
    return track_id, label, vector, schema


def _run_tasks(worker, tasks, jobs):
    if jobs <= 1:
        results = [worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(worker, tasks))
    results.sort(key=lambda r: r[0])  # deterministic order by track id
    return results


def _dataset_from_results(results):
    schema = results[0][3]
    matrix = np.array([r[2] for r in results])
    labels = [r[1] for r in results]
    return ml.LabeledDataset(matrix, labels, schema)


def cmd_extract_audio(args):
    features = _parse_feature_list(args.features, AUDIO_FEATURES)
    out = Path(args.out)
    if args.manifest:
        manifest = avio.load_manifest(args.manifest)
        tasks = []
        for e in manifest:
            if e.audio is None:
                raise InputError(f"entry {e.track_id!r} has no audio path")
            tasks.append((e.track_id, e.label, str(manifest.resolve(e.audio)),
                          features))
        results = _run_tasks(_audio_worker, tasks, args.jobs)
        dataset = _dataset_from_results(results)
    else:
        vector, schema = _audio_feature_vector(args.wav, features)
        dataset = ml.LabeledDataset(vector[None, :], [args.label], schema)
    avio.write_arff(dataset, args.relation, out)
    write_run_config(out.parent, "extract-audio", args)
    print(f"wrote {dataset.n} x {len(dataset.schema)} features to {out}")
    return 0


def cmd_extract_visual(args):
    features = _parse_feature_list(args.features, VISUAL_FEATURES)
    out = Path(args.out)
    crop = not args.keep_letterbox
    if args.manifest:
        manifest = avio.load_manifest(args.manifest)
        tasks = []
        for e in manifest:
            if e.frames is None:
                raise InputError(f"entry {e.track_id!r} has no frames path")
            tasks.append((e.track_id, e.label, str(manifest.resolve(e.frames)),
                          features, args.fps, args.lfp_preset, crop))
        results = _run_tasks(_visual_worker, tasks, args.jobs)
        dataset = _dataset_from_results(results)
    else:
        vector, schema = _visual_feature_vector(
            args.frames, features, args.fps, args.lfp_preset, crop,
            dump_csv=args.dump_frames)
        dataset = ml.LabeledDataset(vector[None, :], [args.label], schema)
    avio.write_arff(dataset, args.relation, out)
    write_run_config(out.parent, "extract-visual", args)
    print(f"wrote {dataset.n} x {len(dataset.schema)} features to {out}")
    return 0


def cmd_aggregate(args):
    out = Path(args.out)
    preset = args.preset.upper()
    if preset not in aggregate.PRESET_DIMS:
        raise InputError(f"unknown preset {args.preset!r}")

    def vector_for(wav_path):
        clip = avio.read_wav(wav_path)
        bundle = aggregate.segment_bundle_from_audio(clip)
        return aggregate.preset(bundle, preset)

    if args.manifest:
        manifest = avio.load_manifest(args.manifest)
        rows, labels = [], []
        for e in sorted(manifest, key=lambda e: e.track_id):
            if e.audio is None:
                raise InputError(f"entry {e.track_id!r} has no audio path")
            rows.append(vector_for(str(manifest.resolve(e.audio))))
            labels.append(e.label)
        matrix = np.array(rows)
    else:
        matrix = vector_for(args.wav)[None, :]
        labels = [args.label]
    schema = [f"{preset.lower()}_{i}" for i in range(matrix.shape[1])]
    avio.write_arff(ml.LabeledDataset(matrix, labels, schema),
                    args.relation, out)
    write_run_config(out.parent, "aggregate", args)
    print(f"wrote {preset} vectors ({matrix.shape[1]} dims) to {out}")
    return 0


def cmd_ingest_concepts(args):
    vocab = concepts.read_vocabulary(args.vocab)
    spec = args.moments.lower()
    if spec not in concepts.CONCEPT_PRESETS:
        spec = tuple(m.strip() for m in args.moments.split(",") if m.strip())
    out = Path(args.out)
    if args.manifest:
        manifest = avio.load_manifest(args.manifest)
        rows, labels = [], []
        for e in sorted(manifest, key=lambda e: e.track_id):
            if e.concepts is None:
                raise InputError(f"entry {e.track_id!r} has no concepts path")
            seq = concepts.read_concept_scores(
                manifest.resolve(e.concepts), vocab)
            rows.append(concepts.aggregate_concepts(seq, spec))
            labels.append(e.label)
        matrix = np.array(rows)
    else:
        seq = concepts.read_concept_scores(args.scores, vocab)
        matrix = concepts.aggregate_concepts(seq, spec)[None, :]
        labels = [args.label]
    schema = concepts.concept_schema(vocab, spec)
    avio.write_arff(ml.LabeledDataset(matrix, labels, schema),
                    args.relation, out)
    write_run_config(out.parent, "ingest-concepts", args)
    print(f"wrote {matrix.shape[0]} x {matrix.shape[1]} concept features "
          f"to {out}")
    return 0


def cmd_fuse(args):
    parts = []
    for item in args.arff:
        if "=" in item:
            name, path = item.split("=", 1)
        else:
            name, path = Path(item).stem, item
        parts.append((name, avio.read_arff(path)))
    fused = ml.early_fuse(parts)
    out = Path(args.out)
    avio.write_arff(fused, args.relation, out)
    write_run_config(out.parent, "fuse", args)
    print(f"fused {len(parts)} parts into {fused.matrix.shape[1]} columns "
          f"at {out}")
    return 0


def _classifier_spec(args):
    name = args.clf.lower()
    if name == "knn":
        return ("knn", {"k": args.k, "metric": args.metric})
    if name == "nb":
        return ("nb", {})
    if name == "svm":
        return ("svm", {"c": args.c, "epochs": args.epochs,
                        "seed": args.seed})
    if name == "majority":
        return ("majority", {})
    raise InputError(f"unknown classifier {args.clf!r}")


def cmd_crossval(args):
    dataset = avio.read_arff(args.arff)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    folds = ml.stratified_kfold(dataset.labels, k=args.folds,
                                repeats=args.repeats, seed=args.seed)
    result = ml.cross_validate(dataset, _classifier_spec(args), folds,
                               paper_normalization=args.paper_normalization)

    write_json(out_dir / "metrics.json", {
        "classifier": args.clf,
        "folds": args.folds,
        "repeats": args.repeats,
        "seed": args.seed,
        "mean_accuracy": result.mean_accuracy,
        "std_accuracy": result.std_accuracy,
        "classes": result.classes,
        "per_class": result.per_class,
    })
    with open(out_dir / "per_class.csv", "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "precision", "recall", "f1"])
        for label in result.classes:
            m = result.per_class[label]
            writer.writerow([label, f"{m['precision']:.6f}",
                             f"{m['recall']:.6f}", f"{m['f1']:.6f}"])
    with open(out_dir / "confusion.csv", "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["truth\\pred"] + result.classes)
        for label, row in zip(result.classes, result.confusion):
            writer.writerow([label] + [int(v) for v in row])
    write_run_config(out_dir, "crossval", args)

    print(f"{args.clf}: mean accuracy {result.mean_accuracy:.4f} "
          f"(std {result.std_accuracy:.4f}) over "
          f"{args.folds}x{args.repeats} folds")
    for label in result.classes:
        m = result.per_class[label]
        print(f"  {label:<20} P {m['precision']:.3f}  R {m['recall']:.3f}  "
              f"F1 {m['f1']:.3f}")
    return 0


def cmd_ensemble(args):
    datasets = [avio.read_arff(p) for p in args.arff]
    base = datasets[0]
    for ds in datasets[1:]:
        if ds.labels != base.labels:
            raise InputError("modality ARFF files disagree on labels")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    by_class = {}
    for i, lb in enumerate(base.labels):
        by_class.setdefault(lb, []).append(i)
    test_idx = []
    for lb in sorted(by_class):
        members = by_class[lb]
        order = rng.permutation(len(members))
        take = max(1, int(round(args.test_fraction * len(members))))
        test_idx.extend(members[i] for i in order[:take])
    test_idx = sorted(test_idx)
    train_idx = sorted(set(range(base.n)) - set(test_idx))

    classes = base.classes
    modalities = []
    for tag, ds in zip(args.arff, datasets):
        train = ds.subset(train_idx)
        modalities.append(ml.bagging_train(
            train, _classifier_spec(args), n=args.n,
            holdout_fraction=args.holdout, seed=args.seed,
            tag=str(tag), classes=classes))

    truth = base.label_ids()
    correct = 0
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for i in test_idx:
        samples = [ds.matrix[i] for ds in datasets]
        pred = ml.ensemble_predict(modalities, samples, len(classes))
        confusion[truth[i], pred] += 1
        correct += int(pred == truth[i])
    accuracy = correct / len(test_idx)

    write_json(out_dir / "metrics.json", {
        "classifier": args.clf,
        "members_per_modality": args.n,
        "modalities": [str(p) for p in args.arff],
        "test_rows": len(test_idx),
        "accuracy": accuracy,
        "confidences": [[m.confidence for m in mod] for mod in modalities],
        "classes": classes,
    })
    write_run_config(out_dir, "ensemble", args)
    print(f"ensemble accuracy {accuracy:.4f} on {len(test_idx)} held-out "
          f"rows ({len(datasets)} modalities x {args.n} members)")
    return 0


def cmd_faces(args):
    gallery = concepts.load_face_gallery(args.gallery)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    probe_paths = sorted(Path(args.probes).glob("*.pgm"))
    if not probe_paths:
        raise InputError(f"no .pgm probes in {args.probes}")
    predictions = []
    votes = []
    for path in probe_paths:
        descriptor = concepts.lbp_descriptor(avio.read_pgm(path))
        label, distance, confidence = concepts.recognize_face(descriptor,
                                                              gallery)
        predictions.append({"probe": path.name, "label": label,
                            "distance": distance, "confidence": confidence})
        votes.append((label, confidence))
    board = concepts.artist_score(votes)

    write_json(out_dir / "predictions.json", {
        "per_probe": predictions,
        "winner": board.winner,
        "scoreboard": {lb: {"count": board.counts[lb],
                            "mean_confidence": board.mean_confidence[lb],
                            "penalized": board.penalized[lb]}
                       for lb in sorted(board.counts)},
    })
    write_run_config(out_dir, "faces", args)
    print(f"identified {board.winner} from {len(predictions)} probes")
    return 0


def cmd_salience(args):
    vocab = concepts.read_vocabulary(args.vocab)
    exclusions = set()
    if args.exclude:
        exclusions = set(concepts.read_vocabulary(args.exclude))
    manifest = avio.load_manifest(args.manifest)

    sums = {}
    counts = {}
    for e in manifest:
        if e.concepts is None:
            raise InputError(f"entry {e.track_id!r} has no concepts path")
        seq = concepts.read_concept_scores(manifest.resolve(e.concepts), vocab)
        mean = seq.rows.mean(axis=0)
        if e.label not in sums:
            sums[e.label] = np.zeros(len(vocab))
            counts[e.label] = 0
        sums[e.label] += mean
        counts[e.label] += 1

    class_freqs = {lb: (vocab, sums[lb] / counts[lb]) for lb in sorted(sums)}
    ranked = concepts.salient_concepts(class_freqs, exclusions)
    out = Path(args.out)
    write_json(out, {lb: [[name, score] for name, score in rows[:args.top]]
                     for lb, rows in ranked.items()})
    write_run_config(out.parent, "salience", args)
    print(f"ranked {len(vocab) - len(exclusions)} concepts for "
          f"{len(class_freqs)} classes into {out}")
    return 0


def cmd_meancolorbar(args):
    stream = avio.read_frames(args.frames, fps=args.fps)
    bar = shotviz.mean_color_bar(stream, resample_height=args.height)
    out = Path(args.out)
    avio.write_ppm(out, bar.columns)
    write_run_config(out.parent, "meancolorbar", args)
    print(f"wrote {bar.columns.shape[1]}-column mean-color bar to {out}")
    return 0


def cmd_cutscan(args):
    stream = avio.read_frames(args.frames, fps=args.fps)
    profile = shotviz.frame_activity(stream, args.metric)
    boundaries = shotviz.naive_cut_detect(profile, window=args.window,
                                          kappa=args.kappa)
    out = Path(args.out)
    write_json(out, {"metric": args.metric, "window": args.window,
                     "kappa": args.kappa, "boundaries": boundaries})
    write_run_config(out.parent, "cutscan", args)
    print(f"{len(boundaries)} candidate cuts -> {out}")
    return 0


def cmd_splits(args):
    manifest = avio.load_manifest(args.manifest, check_paths=False)
    spec = avio.SplitSpec(train_fraction=args.fraction,
                          per_class_count=args.per_class,
                          group_filter=args.filter, seed=args.seed)
    train, test = avio.make_splits(manifest, spec)
    avio.write_id_list(args.out_train, train)
    avio.write_id_list(args.out_test, test)
    write_run_config(Path(args.out_train).parent, "splits", args)
    print(f"split {len(train)} train / {len(test)} test ids")
    return 0


def cmd_arff_export(args):
    with open(args.csv, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{args.csv}: empty file")
        if args.label_col not in header:
            raise InputError(f"{args.csv}: no column named {args.label_col!r}")
        label_idx = header.index(args.label_col)
        schema = [h for i, h in enumerate(header) if i != label_idx]
        rows, labels = [], []
        for ln, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise InputError(f"{args.csv}:{ln}: expected "
                                 f"{len(header)} cells, got {len(cells)}")
            labels.append(cells[label_idx])
            try:
                rows.append([float(c) for i, c in enumerate(cells)
                             if i != label_idx])
            except ValueError:
                raise InputError(f"{args.csv}:{ln}: non-numeric feature "
                                 "value") from None
    if not rows:
        raise InputError(f"{args.csv}: no data rows")
    dataset = ml.LabeledDataset(np.array(rows), labels, schema)
    out = Path(args.out)
    avio.write_arff(dataset, args.relation, out)
    write_run_config(out.parent, "arff-export", args)
    print(f"exported {dataset.n} rows to {out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="avmir",
        description="audio-visual music analysis toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=fn)
        return p

    p = add("extract-audio", cmd_extract_audio,
            help="psychoacoustic track features from WAV audio")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", type=Path)
    src.add_argument("--wav", type=Path)
    p.add_argument("--features", default="rp,rh,ssd,mvd,tssd,trh")
    p.add_argument("--label", default="unknown")
    p.add_argument("--relation", default="audio_features")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, required=True)

    p = add("extract-visual", cmd_extract_visual,
            help="per-video color/affect features from frame streams")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", type=Path)
    src.add_argument("--frames", type=Path)
    p.add_argument("--features", default="gcs,gev,cf,cn,waf,ic,lfp")
    p.add_argument("--fps", type=float, default=25.0)
    p.add_argument("--lfp-preset", default="paper-80",
                   choices=["paper-80", "paper-60"])
    p.add_argument("--keep-letterbox", action="store_true")
    p.add_argument("--dump-frames", type=Path,
                   help="per-frame feature CSV (single-source mode)")
    p.add_argument("--label", default="unknown")
    p.add_argument("--relation", default="visual_features")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, required=True)

    p = add("aggregate", cmd_aggregate,
            help="segment-descriptor aggregation presets (EN0..EN5, TEN)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", type=Path)
    src.add_argument("--wav", type=Path)
    p.add_argument("--preset", default="TEN")
    p.add_argument("--label", default="unknown")
    p.add_argument("--relation", default="segment_features")
    p.add_argument("--out", type=Path, required=True)

    p = add("ingest-concepts", cmd_ingest_concepts,
            help="aggregate per-frame concept scores into track vectors")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", type=Path)
    src.add_argument("--scores", type=Path)
    p.add_argument("--vocab", type=Path, required=True)
    p.add_argument("--moments", default="max+mean")
    p.add_argument("--label", default="unknown")
    p.add_argument("--relation", default="concept_features")
    p.add_argument("--out", type=Path, required=True)

    p = add("fuse", cmd_fuse, help="early-fuse feature ARFF files")
    p.add_argument("--arff", action="append", required=True,
                   metavar="[NAME=]PATH")
    p.add_argument("--relation", default="fused")
    p.add_argument("--out", type=Path, required=True)

    p = add("crossval", cmd_crossval,
            help="stratified repeated cross-validation of one feature set")
    p.add_argument("--arff", type=Path, required=True)
    p.add_argument("--clf", default="svm",
                   choices=["knn", "nb", "svm", "majority"])
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--metric", default="l2", choices=["l1", "l2"])
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paper-normalization", action="store_true",
                   help="normalize train and test separately")
    p.add_argument("--out-dir", type=Path, required=True)

    p = add("ensemble", cmd_ensemble,
            help="bagged weighted-majority ensemble over modalities")
    p.add_argument("--arff", action="append", type=Path, required=True,
                   help="one feature ARFF per modality, aligned rows")
    p.add_argument("--clf", default="svm",
                   choices=["knn", "nb", "svm", "majority"])
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--metric", default="l2", choices=["l1", "l2"])
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--n", type=int, default=10,
                   help="ensemble members per modality")
    p.add_argument("--holdout", type=float, default=0.10)
    p.add_argument("--test-fraction", type=float, default=0.30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", type=Path, required=True)

    p = add("faces", cmd_faces,
            help="LBP face identification with log-penalized voting")
    p.add_argument("--gallery", type=Path, required=True,
                   help="directory of <label>/<n>.pgm crops")
    p.add_argument("--probes", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)

    p = add("salience", cmd_salience,
            help="rank per-class salient concepts by minimal lead")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--vocab", type=Path, required=True)
    p.add_argument("--exclude", type=Path)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out", type=Path, required=True)

    p = add("meancolorbar", cmd_meancolorbar,
            help="mean-color bar image of a frame stream")
    p.add_argument("--frames", type=Path, required=True)
    p.add_argument("--fps", type=float, default=25.0)
    p.add_argument("--height", type=int)
    p.add_argument("--out", type=Path, required=True)

    p = add("cutscan", cmd_cutscan,
            help="naive adaptive-threshold cut detection (baseline)")
    p.add_argument("--frames", type=Path, required=True)
    p.add_argument("--fps", type=float, default=25.0)
    p.add_argument("--metric", default="mean-rgb-l1",
                   choices=sorted(shotviz.ACTIVITY_METRICS))
    p.add_argument("--window", type=int, default=15)
    p.add_argument("--kappa", type=float, default=3.0)
    p.add_argument("--out", type=Path, required=True)

    p = add("splits", cmd_splits,
            help="stratified train/test id lists with group filters")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--fraction", type=float, default=0.66)
    p.add_argument("--per-class", type=int)
    p.add_argument("--filter", default="none",
                   choices=["none", "artist", "album"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-train", type=Path, required=True)
    p.add_argument("--out-test", type=Path, required=True)

    p = add("arff-export", cmd_arff_export,
            help="convert a labeled CSV feature table to ARFF")
    p.add_argument("--csv", type=Path, required=True)
    p.add_argument("--label-col", default="class")
    p.add_argument("--relation", default="exported")
    p.add_argument("--out", type=Path, required=True)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal invariant violation
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
