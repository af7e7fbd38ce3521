"""Batch command-line front end for the encode/train/transfer pipelines.

Every subcommand is a thin wrapper over library calls: ingest -> encode ->
train -> transfer -> evaluate. Successful runs emit a JSON run manifest
(command line, config snapshot, seeds, SHA-256 digests of inputs and
outputs, wall time, version) so any result can be traced and reproduced;
identical inputs and seeds give byte-identical primary outputs.

Exit codes: 0 on success, 1 on domain or configuration errors, 2 on I/O
errors. Diagnostics go to standard error; machine-readable reports go to
standard out or to files. A flat key=value config file can fill in any
flag; explicit command-line flags win. TS2IMG_SEED serves as the seed
fallback when neither a --seed flag nor a config entry supplies one.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .encode import (
    DEFAULT_MTF_BINS,
    GRAY_SINGLE,
    LAYOUTS,
    METHODS,
    PLANES_XYZA,
    RGB_XYZ,
    compose_stack,
    encode_series,
)
from .errors import ConfigError, CorruptionError, DomainError, FormatError, Ts2ImgError
from .evaluate import holdout_split, loocv_folds, score
from .imageio import read_tensor, read_tensor_header, render_png, write_tensor
from .ingest import (
    SynthConfig,
    generate_synthetic,
    parse_physio_csv,
    parse_wisdm,
    windows_from_frames,
    wisdm_windows,
    write_physio_csv,
)
from .nn import TrainConfig, load_checkpoint, load_manifest, save_checkpoint, train
from .nn.checkpoint import MANIFEST_NAME, build_provenance
from .series import DEFAULT_STEP, DEFAULT_WINDOW, windows_to_arrays
from .transfer import (
    ALL_BUT_HEAD,
    ArchSpec1D,
    ArchSpec2D,
    FusionSpec,
    TransferPlan,
    build_cnn1d,
    build_cnn2d,
    build_fusion,
    make_feature_branch,
    transfer_head,
)

WISDM = "wisdm"
PHYSIO = "physio"
DEFAULT_PHYSIO_CHANNELS = "hr,hrv,eda"
MANIFEST_FILENAME = "run_manifest.json"


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the artifact contract reserves 2 for I/O
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_freeze(text: str):
    if text == ALL_BUT_HEAD:
        return text
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"expected {ALL_BUT_HEAD!r} or an integer, got {text!r}")


def _parse_widths(text: str) -> tuple[int, ...]:
    if not text.strip():
        return ()
    return tuple(int(part) for part in text.split(","))


class _Registrar:
    """Records each option's strings and type so a config file can fill it."""

    def __init__(self, parser):
        self.parser = parser
        self.options: dict[str, tuple[list[str], object]] = {}

    def add(self, *flags, **kwargs):
        action = self.parser.add_argument(*flags, **kwargs)
        typ = kwargs.get("type", str)
        if kwargs.get("action") == "store_true":
            typ = _parse_bool
        self.options[action.dest] = (list(action.option_strings), typ)
        return action


def _read_config_file(path: Path) -> dict[str, str]:
    try:
        text = path.read_text()
    except OSError as e:
        raise e
    overlay: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {lineno}: expected key=value, got {raw!r}")
        overlay[key.strip()] = value.strip()
    return overlay


def _apply_config_file(args, argv, registrar: _Registrar) -> None:
    """Overlay config-file values onto flags not given on the command line."""
    if not getattr(args, "config", None):
        return
    overlay = _read_config_file(Path(args.config))
    for key, raw in overlay.items():
        if key not in registrar.options or key in ("config",):
            raise ConfigError(f"unknown config key {key!r}")
        flags, typ = registrar.options[key]
        if any(a in flags or any(a.startswith(f + "=") for f in flags) for a in argv):
            continue  # explicit flag wins
        try:
            setattr(args, key, typ(raw))
        except (ValueError, TypeError) as e:
            raise ConfigError(f"config key {key!r}: {e}")


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get("TS2IMG_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"TS2IMG_SEED must be an integer, got {env!r}")
    return 0


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _json_ready(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {str(k): _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    return value


def _config_snapshot(args) -> dict:
    return {
        k: _json_ready(v)
        for k, v in sorted(vars(args).items())
        if k not in ("func", "registrar")
    }


def _run_manifest(argv, args, seeds, input_paths, output_paths, started) -> dict:
    return {
        "command": ["ts2img", *argv],
        "config": _config_snapshot(args),
        "seeds": _json_ready(seeds),
        "input_digests": {str(p): _sha256_file(Path(p)) for p in sorted(map(str, input_paths))},
        "outputs": sorted(str(p) for p in output_paths),
        "output_digests": {
            str(p): _sha256_file(Path(p)) for p in sorted(map(str, output_paths))
        },
        "wall_time_s": round(time.perf_counter() - started, 3),
        "version": __version__,
    }


def _write_manifest(manifest: dict, directory: Path) -> Path:
    path = Path(directory) / MANIFEST_FILENAME
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _note(message: str) -> None:
    print(message, file=sys.stderr)


def _emit_report(payload: dict) -> None:
    print(json.dumps(_json_ready(payload), indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# shared data loading


def _physio_schema(args) -> list[str]:
    names = [c.strip() for c in args.channels.split(",") if c.strip()]
    if not names:
        raise ConfigError("--channels must name at least one channel")
    return names


def _input_files(path: Path) -> list[Path]:
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise FileNotFoundError(f"no .csv files under {path}")
        return files
    if not path.exists():
        raise FileNotFoundError(f"input not found: {path}")
    return [path]


def _load_windows(args) -> tuple[list, list[Path]]:
    """Cut labelled windows out of a WISDM text file or physio CSVs."""
    path = Path(args.input)
    files = _input_files(path)
    windows = []
    if args.format == WISDM:
        for f in files:
            with open(f, "rb") as stream:
                records, stats = parse_wisdm(stream)
            if stats.rejected:
                _note(f"note: {f.name}: skipped {stats.rejected} malformed lines")
            windows.extend(wisdm_windows(records, window=args.window, step=args.step))
    else:
        schema = _physio_schema(args)
        for index, f in enumerate(files):
            with open(f, "rb") as stream:
                frames = parse_physio_csv(stream, schema, skip_bad_rows=args.skip_bad_rows)
            by_user: dict[int, list] = {}
            for frame in frames:
                user = index if frame.user is None else int(frame.user)
                by_user.setdefault(user, []).append(frame)
            for user in sorted(by_user):
                windows.extend(
                    windows_from_frames(
                        by_user[user],
                        schema,
                        window=args.window,
                        step=args.step,
                        participant_id=user,
                    )
                )
    if not windows:
        raise DomainError("no windows could be cut from the input")
    return windows, files


def _apply_subset(windows, subset: str | None):
    """Restrict to the first N participants of a `Nusers` subset spec."""
    if not subset:
        return windows
    spec = subset.strip().lower()
    if not spec.endswith("users"):
        raise ConfigError(f"--subset must look like '10users', got {subset!r}")
    try:
        count = int(spec[: -len("users")])
    except ValueError:
        raise ConfigError(f"--subset must look like '10users', got {subset!r}")
    if count < 1:
        raise ConfigError(f"--subset must keep at least one participant, got {subset!r}")
    keep = set(sorted({w.participant_id for w in windows})[:count])
    picked = [w for w in windows if w.participant_id in keep]
    if not picked:
        raise DomainError("subset selected no windows")
    return picked


def _remap_labels(y: np.ndarray) -> tuple[np.ndarray, dict[int, int]]:
    classes = np.unique(y)
    mapping = {int(c): i for i, c in enumerate(classes)}
    return np.searchsorted(classes, y), mapping


def _train_config(args, seed: int) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
        momentum=args.momentum,
        seed=seed,
    )


def _train_slice(indices, args):
    """Training indices, trimmed to whole batches under --drop-last.

    The training loop keeps the final partial batch by contract, and batch
    normalisation rejects a train-mode batch of one, so a training-set size
    of 1 mod batch needs either this flag or a different batch size.
    """
    if not getattr(args, "drop_last", False):
        return indices
    keep = (len(indices) // args.batch) * args.batch
    if keep == 0:
        raise ConfigError(
            f"--drop-last with --batch {args.batch} would drop all "
            f"{len(indices)} training samples"
        )
    return indices[:keep]


def _holdout_report(model, x, y, split, n_classes):
    predictions = model.predict(
        (x[0][split.test_indices], x[1][split.test_indices])
        if isinstance(x, tuple)
        else x[split.test_indices]
    )
    return score(predictions, y[split.test_indices], n_classes)


def _window_images(windows, method: str, bins: int) -> np.ndarray:
    """Encode every channel of every window; planes follow sorted-name order."""
    order = sorted(windows[0].channels)
    stacks = []
    for w in windows:
        planes = [
            encode_series(w.channels[name], method, bins, name).matrix for name in order
        ]
        stacks.append(np.stack(planes, axis=-1))
    return np.asarray(stacks, dtype=np.float32)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_synth(args, argv) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    config = SynthConfig(
        n_participants=args.participants,
        n_classes=args.classes,
        frames_per_participant=args.frames,
        seed=seed,
        class_separability=args.separability,
    )
    dataset = generate_synthetic(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    schema = [spec.name for spec in config.channel_specs]
    outputs = []
    for pid in sorted(dataset):
        path = out_dir / f"participant_{pid:02d}.csv"
        write_physio_csv(dataset[pid], path, schema)
        outputs.append(path)
    manifest = _run_manifest(argv, args, {"seed": seed}, [], outputs, started)
    manifest_path = _write_manifest(manifest, out_dir)
    _note(f"wrote {len(outputs)} participant files to {out_dir}")
    _emit_report(
        {
            "participants": len(outputs),
            "frames_per_participant": config.frames_per_participant,
            "classes": config.n_classes,
            "channels": schema,
            "out": str(out_dir),
            "manifest": str(manifest_path),
        }
    )
    return 0


def _encode_window_task(task) -> list[str]:
    window, method, layout, bins, channel, out_dir = task
    stack = compose_stack(window, method, layout, q=bins, channel=channel)
    base = f"{window.participant_id}_{window.start_index}_{method}"
    names = [f"{base}.tsim"]
    write_tensor(stack.as_tensor(), Path(out_dir) / names[0])
    if layout != PLANES_XYZA:  # png holds at most 3 planes
        names.append(f"{base}.png")
        render_png(stack, Path(out_dir) / names[1])
    return names


def _cmd_encode(args, argv) -> int:
    started = time.perf_counter()
    if args.bins < 2:
        raise ConfigError(f"--bins must be >= 2, got {args.bins}")
    if args.jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    windows, input_files = _load_windows(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ordered = sorted(windows, key=lambda w: (w.participant_id, w.start_index))
    keys = [(w.participant_id, w.start_index) for w in ordered]
    if len(set(keys)) != len(keys):
        dupe = next(k for i, k in enumerate(keys) if k in keys[:i])
        raise DomainError(
            f"two windows share (participant, start) = {dupe}; "
            "filenames would collide"
        )
    tasks = [
        (w, args.method, args.layout, args.bins, args.channel, str(out_dir))
        for w in ordered
    ]
    if args.jobs == 1:
        produced = [_encode_window_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            produced = list(pool.map(_encode_window_task, tasks, chunksize=16))
    labels_path = out_dir / "labels.csv"
    with open(labels_path, "w") as f:
        f.write("filename,participant,start,label\n")
        for w, names in zip(ordered, produced):
            f.write(f"{names[0]},{w.participant_id},{w.start_index},{w.label}\n")
    outputs = [labels_path] + [out_dir / name for names in produced for name in names]
    manifest = _run_manifest(argv, args, {}, input_files, outputs, started)
    manifest_path = _write_manifest(manifest, out_dir)
    _note(f"encoded {len(ordered)} windows to {out_dir}")
    _emit_report(
        {
            "windows": len(ordered),
            "method": args.method,
            "layout": args.layout,
            "out": str(out_dir),
            "manifest": str(manifest_path),
        }
    )
    return 0


def _cmd_train(args, argv) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    windows, input_files = _load_windows(args)
    windows = _apply_subset(windows, args.subset)
    x, y_raw, _ = windows_to_arrays(windows)
    y, label_map = _remap_labels(y_raw)
    n_classes = len(label_map)
    if n_classes < 2:
        raise DomainError(f"training needs >= 2 classes, found {n_classes}")
    split = holdout_split(len(y), fraction=args.fraction, seed=seed)
    spec = ArchSpec1D(dropout_rate=args.dropout, n_classes=n_classes)
    model = build_cnn1d(spec, input_shape=x.shape[1:], seed=seed)
    idx = _train_slice(split.train_indices, args)
    history = train(model, x[idx], y[idx], _train_config(args, seed))
    report = _holdout_report(model, x, y, split, n_classes)
    outputs = []
    if args.save:
        dataset_id = Path(args.input).name
        save_checkpoint(model, args.save, build_provenance(dataset_id, seed))
        outputs = sorted(Path(args.save).rglob("*"))
        outputs = [p for p in outputs if p.is_file()]
    manifest = _run_manifest(argv, args, {"seed": seed}, input_files, outputs, started)
    if args.save:
        _write_manifest(manifest, Path(args.save))
    _emit_report(
        {
            "report": report.as_dict(),
            "label_map": {str(k): v for k, v in label_map.items()},
            "n_train": len(idx),
            "n_test": len(split.test_indices),
            "epoch_loss": [round(v, 6) for v in history.loss],
            "checkpoint": args.save,
            "run_manifest": manifest,
        }
    )
    return 0


def _read_encoded_dir(path: Path) -> tuple[np.ndarray, np.ndarray, list[Path]]:
    """Load the tensors and labels that `encode` wrote into a directory."""
    labels_path = path / "labels.csv"
    if not labels_path.exists():
        raise FileNotFoundError(f"missing labels.csv under {path}")
    tensors = []
    labels = []
    files = [labels_path]
    with open(labels_path) as f:
        header = f.readline().strip().split(",")
        try:
            name_col = header.index("filename")
            label_col = header.index("label")
        except ValueError:
            raise FormatError(f"labels.csv header {header} lacks filename/label")
        for line in f:
            parts = line.strip().split(",")
            if len(parts) != len(header):
                raise FormatError(f"labels.csv row {parts} does not match header")
            tensor_path = path / parts[name_col]
            tensors.append(read_tensor(tensor_path))
            labels.append(int(parts[label_col]))
            files.append(tensor_path)
    if not tensors:
        raise DomainError(f"labels.csv under {path} lists no windows")
    return np.asarray(tensors, dtype=np.float32), np.asarray(labels, dtype=np.int64), files


def _cmd_pretrain2d(args, argv) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    images, y_raw, input_files = _read_encoded_dir(Path(args.input))
    y, label_map = _remap_labels(y_raw)
    n_classes = len(label_map)
    if n_classes < 2:
        raise DomainError(f"training needs >= 2 classes, found {n_classes}")
    split = holdout_split(len(y), fraction=args.fraction, seed=seed)
    spec = ArchSpec2D(dropout_rate=args.dropout, n_classes=n_classes)
    model = build_cnn2d(spec, input_shape=images.shape[1:], seed=seed)
    idx = _train_slice(split.train_indices, args)
    history = train(model, images[idx], y[idx], _train_config(args, seed))
    report = _holdout_report(model, images, y, split, n_classes)
    outputs = []
    if args.save:
        save_checkpoint(model, args.save, build_provenance(Path(args.input).name, seed))
        outputs = [p for p in sorted(Path(args.save).rglob("*")) if p.is_file()]
    manifest = _run_manifest(argv, args, {"seed": seed}, input_files, outputs, started)
    if args.save:
        _write_manifest(manifest, Path(args.save))
    _emit_report(
        {
            "report": report.as_dict(),
            "label_map": {str(k): v for k, v in label_map.items()},
            "n_train": len(idx),
            "n_test": len(split.test_indices),
            "epoch_loss": [round(v, 6) for v in history.loss],
            "checkpoint": args.save,
            "run_manifest": manifest,
        }
    )
    return 0


def _cmd_transfer(args, argv) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    windows, input_files = _load_windows(args)
    if args.limit is not None:
        if args.limit < 1:
            raise ConfigError(f"--limit must be >= 1, got {args.limit}")
        windows = windows[: args.limit]
    x, y_raw, _ = windows_to_arrays(windows)
    y, label_map = _remap_labels(y_raw)
    n_classes = len(label_map)
    if n_classes < 2:
        raise DomainError(f"fine-tuning needs >= 2 classes, found {n_classes}")
    plan = TransferPlan(args.base, freeze=args.freeze, new_head=args.new_head)
    model = transfer_head(plan, n_classes, seed=seed)
    split = holdout_split(len(y), fraction=args.fraction, seed=seed)
    idx = _train_slice(split.train_indices, args)
    history = train(model, x[idx], y[idx], _train_config(args, seed))
    report = _holdout_report(model, x, y, split, n_classes)
    frozen = [layer.name for layer in model.layers if not layer.trainable]
    outputs = []
    if args.save:
        save_checkpoint(model, args.save, build_provenance(Path(args.input).name, seed))
        outputs = [p for p in sorted(Path(args.save).rglob("*")) if p.is_file()]
    manifest = _run_manifest(
        argv, args, {"seed": seed}, list(input_files) + [Path(args.base) / MANIFEST_NAME], outputs, started
    )
    if args.save:
        _write_manifest(manifest, Path(args.save))
    _emit_report(
        {
            "report": report.as_dict(),
            "frozen_layers": frozen,
            "label_map": {str(k): v for k, v in label_map.items()},
            "n_train": len(idx),
            "n_test": len(split.test_indices),
            "epoch_loss": [round(v, 6) for v in history.loss],
            "checkpoint": args.save,
            "run_manifest": manifest,
        }
    )
    return 0


def _feature_branch_from(base_dir, fresh_builder, freeze: bool, label: str):
    """A frozen trunk from a checkpoint, or a fresh trainable one."""
    if base_dir:
        branch = make_feature_branch(load_checkpoint(base_dir))
        if not freeze:
            for layer in branch.layers:
                layer.trainable = True
        return branch
    branch = make_feature_branch(fresh_builder())
    for layer in branch.layers:
        layer.trainable = True
    _note(f"note: {label} branch starts untrained")
    return branch


def _cmd_fuse(args, argv) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    if args.bins < 2:
        raise ConfigError(f"--bins must be >= 2, got {args.bins}")
    windows, input_files = _load_windows(args)
    x_raw, y_raw, _ = windows_to_arrays(windows)
    y, label_map = _remap_labels(y_raw)
    n_classes = len(label_map)
    if n_classes < 2:
        raise DomainError(f"training needs >= 2 classes, found {n_classes}")
    x_img = _window_images(windows, args.method, args.bins)
    branch_image = _feature_branch_from(
        args.image_base,
        lambda: build_cnn2d(ArchSpec2D(), input_shape=x_img.shape[1:], seed=seed),
        freeze=not args.no_freeze,
        label="image",
    )
    branch_raw = _feature_branch_from(
        args.raw_base,
        lambda: build_cnn1d(ArchSpec1D(), input_shape=x_raw.shape[1:], seed=seed + 1),
        freeze=not args.no_freeze,
        label="raw",
    )
    model = build_fusion(
        FusionSpec(branch_image, branch_raw, head=args.head, n_classes=n_classes, seed=seed)
    )
    split = holdout_split(len(y), fraction=args.fraction, seed=seed)
    idx = _train_slice(split.train_indices, args)
    history = train(model, (x_img[idx], x_raw[idx]), y[idx], _train_config(args, seed))
    report = _holdout_report(model, (x_img, x_raw), y, split, n_classes)
    outputs = []
    if args.save:
        save_checkpoint(model, args.save, build_provenance(Path(args.input).name, seed))
        outputs = [p for p in sorted(Path(args.save).rglob("*")) if p.is_file()]
    manifest = _run_manifest(argv, args, {"seed": seed}, input_files, outputs, started)
    if args.save:
        _write_manifest(manifest, Path(args.save))
    _emit_report(
        {
            "report": report.as_dict(),
            "label_map": {str(k): v for k, v in label_map.items()},
            "n_train": len(idx),
            "n_test": len(split.test_indices),
            "epoch_loss": [round(v, 6) for v in history.loss],
            "checkpoint": args.save,
            "run_manifest": manifest,
        }
    )
    return 0


def _cmd_eval(args, argv) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    windows, input_files = _load_windows(args)
    x, y_raw, groups = windows_to_arrays(windows)
    y, label_map = _remap_labels(y_raw)
    n_classes = len(label_map)
    if args.mode == "holdout":
        if not args.model:
            raise ConfigError("--model is required for holdout evaluation")
        model = load_checkpoint(args.model)
        model_classes = int(model.output_shape[0])
        if n_classes > model_classes:
            raise DomainError(
                f"data has {n_classes} classes but the model emits {model_classes}"
            )
        split = holdout_split(len(y), fraction=args.fraction, seed=seed)
        predictions = model.predict(x[split.test_indices])
        report = score(predictions, y[split.test_indices], model_classes)
        payload = {
            "mode": "holdout",
            "report": report.as_dict(),
            "n_test": len(split.test_indices),
        }
        input_files = list(input_files) + [Path(args.model) / MANIFEST_NAME]
    else:
        if n_classes < 2:
            raise DomainError(f"evaluation needs >= 2 classes, found {n_classes}")
        folds = loocv_folds(groups)
        reports = []
        for fold in folds:
            model = build_cnn1d(
                ArchSpec1D(n_classes=n_classes), input_shape=x.shape[1:], seed=seed
            )
            idx = _train_slice(fold.train_indices, args)
            try:
                train(model, x[idx], y[idx], _train_config(args, seed))
            except DomainError as exc:
                raise DomainError(
                    f"fold {fold.fold_id}: {exc} (rerun with --drop-last or another --batch)"
                ) from exc
            predictions = model.predict(x[fold.test_indices])
            reports.append(
                score(predictions, y[fold.test_indices], n_classes, fold_id=fold.fold_id)
            )
        payload = {
            "mode": "loocv",
            "folds": [r.as_dict() for r in reports],
            "n_folds": len(reports),
            "mean_accuracy": float(np.mean([r.accuracy for r in reports])),
            "mean_macro_f1": float(np.mean([r.macro_f1 for r in reports])),
        }
    payload["label_map"] = {str(k): v for k, v in label_map.items()}
    payload["run_manifest"] = _run_manifest(argv, args, {"seed": seed}, input_files, [], started)
    _emit_report(payload)
    return 0


def _cmd_inspect(args, argv) -> int:
    started = time.perf_counter()
    path = Path(args.path)
    if path.is_dir():
        manifest = load_manifest(path)
        if manifest.get("model_kind") == "fusion":
            sections = {
                "image": manifest["branches"]["image"],
                "raw": manifest["branches"]["raw"],
                "head": manifest["head"],
            }
        else:
            sections = {"model": manifest["model"]}
        layers = {
            part: [
                {"name": e["name"], "kind": e["kind"], "trainable": e["trainable"]}
                for e in section["layers"]
            ]
            for part, section in sections.items()
        }
        n_params = sum(int(np.prod(e["dims"])) for e in manifest["params"].values())
        payload = {
            "kind": "checkpoint",
            "model_kind": manifest.get("model_kind"),
            "format_version": manifest["format_version"],
            "layers": layers,
            "input_shapes": {p: list(s["input_shape"]) for p, s in sections.items()},
            "parameter_count": n_params,
            "provenance": manifest.get("provenance", {}),
        }
        inputs = [path / MANIFEST_NAME]
    else:
        if not path.exists():
            raise FileNotFoundError(f"no such file: {path}")
        version, dims = read_tensor_header(path)
        crc_ok = True
        try:
            read_tensor(path)
        except CorruptionError:
            crc_ok = False
        payload = {
            "kind": "tsim",
            "format_version": version,
            "shape": list(dims),
            "dtype": "float32",
            "size_bytes": path.stat().st_size,
            "crc_ok": crc_ok,
        }
        inputs = [path]
    payload["run_manifest"] = _run_manifest(argv, args, {}, inputs, [], started)
    _emit_report(payload)
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _add_seed(reg):
    reg.add(
        "--seed",
        type=int,
        default=None,
        help="global rng seed (default: $TS2IMG_SEED, else 0)",
    )


def _add_config(reg):
    reg.add("--config", default=None, help="flat key=value file filling in flags")


def _add_data_flags(reg):
    reg.add("-i", "--input", required=True, help="input file or directory of CSVs")
    reg.add(
        "--format",
        choices=(WISDM, PHYSIO),
        default=WISDM,
        help="input layout: WISDM text lines or header-first physio CSV",
    )
    reg.add(
        "--channels",
        default=DEFAULT_PHYSIO_CHANNELS,
        help="physio channel schema, comma-separated",
    )
    reg.add("--skip-bad-rows", action="store_true", help="drop malformed physio rows")
    reg.add("--window", type=int, default=DEFAULT_WINDOW, help="window length in frames")
    reg.add("--step", type=int, default=DEFAULT_STEP, help="window stride in frames")


def _add_train_flags(reg, dropout_default=0.5):
    reg.add("--epochs", type=int, default=10, help="training epochs")
    reg.add("--batch", type=int, default=128, help="mini-batch size")
    reg.add("--lr", type=float, default=0.01, help="sgd learning rate")
    reg.add("--momentum", type=float, default=0.9, help="sgd momentum")
    reg.add("--fraction", type=float, default=0.2, help="hold-out test fraction")
    reg.add("--dropout", type=float, default=dropout_default, help="dropout rate")
    reg.add(
        "--drop-last",
        action="store_true",
        help="trim the training set to whole batches (a final batch of one "
        "sample is rejected by batch normalisation)",
    )
    reg.add("--save", default=None, help="checkpoint directory to write")


def build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(
        prog="ts2img",
        description="Encode time-series windows as images and train/transfer CNNs.",
    )
    parser.add_argument("--version", action="version", version=f"ts2img {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("synth", help="generate the deterministic synthetic physio dataset")
    reg = _Registrar(p)
    reg.add("-o", "--out", required=True, help="output directory")
    reg.add("--participants", type=int, default=20, help="number of participants")
    reg.add("--classes", type=int, default=5, help="number of label classes")
    reg.add("--frames", type=int, default=2000, help="frames per participant")
    reg.add("--separability", type=float, default=0.5, help="class separation strength")
    _add_seed(reg)
    _add_config(reg)
    p.set_defaults(func=_cmd_synth, registrar=reg)

    p = sub.add_parser("encode", help="encode windows to PNG + TSIM images")
    reg = _Registrar(p)
    _add_data_flags(reg)
    reg.add("-o", "--out", required=True, help="output directory")
    reg.add("--method", choices=METHODS, required=True, help="encoding method")
    reg.add("--layout", choices=LAYOUTS, default=RGB_XYZ, help="plane layout")
    reg.add("--bins", type=int, default=DEFAULT_MTF_BINS, help="mtf quantile bins")
    reg.add("--channel", default=None, help="channel name for gray_single")
    reg.add("--jobs", type=int, default=1, help="parallel workers; output is identical for any N")
    _add_seed(reg)
    _add_config(reg)
    p.set_defaults(func=_cmd_encode, registrar=reg)

    p = sub.add_parser("train", help="train the 1-D CNN on raw windows")
    reg = _Registrar(p)
    _add_data_flags(reg)
    _add_train_flags(reg)
    reg.add("--subset", default=None, help="restrict to the first N participants, e.g. 10users")
    _add_seed(reg)
    _add_config(reg)
    p.set_defaults(func=_cmd_train, registrar=reg)

    p = sub.add_parser("pretrain2d", help="train the 2-D CNN on an encoded-image directory")
    reg = _Registrar(p)
    reg.add("-i", "--input", required=True, help="directory produced by encode")
    _add_train_flags(reg, dropout_default=0.25)
    _add_seed(reg)
    _add_config(reg)
    p.set_defaults(func=_cmd_pretrain2d, registrar=reg)

    p = sub.add_parser("transfer", help="swap the classifier head of a base model and fine-tune")
    reg = _Registrar(p)
    _add_data_flags(reg)
    _add_train_flags(reg)
    reg.add("--base", required=True, help="source checkpoint directory")
    reg.add(
        "--freeze",
        type=_parse_freeze,
        default=ALL_BUT_HEAD,
        help=f"'{ALL_BUT_HEAD}' or a count of leading layers to freeze",
    )
    reg.add(
        "--new-head",
        type=_parse_widths,
        default=(64,),
        help="comma-separated widths of fresh dense layers before the classifier",
    )
    reg.add("--limit", type=int, default=None, help="use only the first N windows")
    _add_seed(reg)
    _add_config(reg)
    p.set_defaults(func=_cmd_transfer, registrar=reg)

    p = sub.add_parser("fuse", help="train the two-branch fusion model")
    reg = _Registrar(p)
    _add_data_flags(reg)
    _add_train_flags(reg)
    reg.add("--method", choices=METHODS, default="gasf", help="image-branch encoding")
    reg.add("--bins", type=int, default=DEFAULT_MTF_BINS, help="mtf quantile bins")
    reg.add("--head", type=_parse_widths, default=(32,), help="fusion head widths")
    reg.add("--image-base", default=None, help="checkpoint for the image branch trunk")
    reg.add("--raw-base", default=None, help="checkpoint for the raw branch trunk")
    reg.add(
        "--no-freeze",
        action="store_true",
        help="fine-tune imported branch trunks instead of freezing them",
    )
    _add_seed(reg)
    _add_config(reg)
    p.set_defaults(func=_cmd_fuse, registrar=reg)

    p = sub.add_parser("eval", help="evaluate: seeded holdout or leave-one-participant-out")
    reg = _Registrar(p)
    _add_data_flags(reg)
    reg.add("--mode", choices=("holdout", "loocv"), default="holdout", help="protocol")
    reg.add("--model", default=None, help="checkpoint directory (holdout mode)")
    reg.add("--fraction", type=float, default=0.2, help="hold-out test fraction")
    reg.add("--epochs", type=int, default=10, help="per-fold training epochs (loocv)")
    reg.add("--batch", type=int, default=128, help="per-fold batch size (loocv)")
    reg.add("--lr", type=float, default=0.01, help="per-fold learning rate (loocv)")
    reg.add("--momentum", type=float, default=0.9, help="per-fold momentum (loocv)")
    reg.add(
        "--drop-last",
        action="store_true",
        help="trim each fold's training set to whole batches",
    )
    _add_seed(reg)
    _add_config(reg)
    p.set_defaults(func=_cmd_eval, registrar=reg)

    p = sub.add_parser("inspect", help="print a TSIM tensor header or checkpoint summary")
    reg = _Registrar(p)
    reg.add("path", help="a .tsim file or a checkpoint directory")
    _add_config(reg)
    p.set_defaults(func=_cmd_inspect, registrar=reg)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        _apply_config_file(args, argv, args.registrar)
        return args.func(args, argv)
    except (FormatError, CorruptionError, OSError) as e:
        print(f"ts2img: error: {e}", file=sys.stderr)
        return 2
    except Ts2ImgError as e:
        print(f"ts2img: error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"ts2img: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
