"""Command-line harness: generate data, train, tune supervisors, evaluate, sweep.

Verbs:
    gen         write synthetic inlier/outlier dumps in the interchange format
    train       train the desk-scale classifier with periodic checkpointing
    gridsearch  pick supervisor parameters by mean AUROC over validation sets
    evaluate    one (checkpoint, supervisor, OOD set) report as JSON
    sweep       all (checkpoint x supervisor x OOD set) cells as CSV + figures

Exit codes: 0 success, 2 usage error (bad flags, missing inputs), 3 data or
numeric error.  Every command writes its artifacts under --out and records
them in a manifest.json there.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import (
    ActivationDump,
    Dataset,
    DumpFormatError,
    SyntheticSpec,
    axis_means,
    gen_blobs,
    gen_noise,
    gen_shifted,
    read_dump,
    span_shift,
    write_dump,
)
from .metrics import MetricsError, evaluate
from .netengine import (
    Checkpoint,
    CheckpointFormatError,
    NetworkParams,
    NumericError,
    ShapeError,
    TrainSchedule,
    forward,
    load_checkpoint,
    mlp_spec,
    save_checkpoint,
    train,
)
from .plots import render_sweep_figures
from .supervisors import (
    BaselineSupervisor,
    OdinConfig,
    OdinSupervisor,
    OpenMaxConfig,
    OpenMaxFitError,
    OpenMaxSupervisor,
    SupervisorInputError,
    WeibullFitError,
    grid_search,
    openmax_fit,
    save_openmax_model,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

SWEEP_COLUMNS = (
    "epoch",
    "test_accuracy",
    "supervisor",
    "ood_set",
    "auroc",
    "fpr_at_95_tpr",
    "cbpl",
    "cov10",
)

_DATA_ERRORS = (
    DumpFormatError,
    CheckpointFormatError,
    NumericError,
    ShapeError,
    MetricsError,
    WeibullFitError,
    OpenMaxFitError,
    SupervisorInputError,
)


class UsageError(Exception):
    """Bad flags or missing inputs; maps to exit code 2."""


@dataclass
class RunConfig:
    """Resolved sweep inputs; every referenced path is validated up front."""

    outdir: Path
    checkpoint_dir: Path
    inlier_dump: Path
    ood_dumps: dict[str, Path]
    supervisors: list[str]
    configs: dict[str, dict]
    train_dump: Path | None = None
    threads: int = 1
    plots: bool = True


# ---------------------------------------------------------------------------
# small shared helpers


def _require_file(path: str | None, what: str) -> Path:
    if path is None:
        raise UsageError(f"missing required {what}")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {p}")
    return p


def _require_dir(path: str | None, what: str) -> Path:
    if path is None:
        raise UsageError(f"missing required {what}")
    p = Path(path)
    if not p.is_dir():
        raise UsageError(f"{what} not found: {p}")
    return p


def _ensure_outdir(path: str | None) -> Path:
    if path is None:
        raise UsageError("missing required --out directory")
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
        probe = p / ".write_probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as e:
        raise UsageError(f"output directory not writable: {p} ({e})")
    return p


def _write_manifest(outdir: Path, command: str, artifacts: list[Path], extra: dict | None = None):
    manifest_path = outdir / "manifest.json"
    manifest: dict = {}
    if manifest_path.is_file():
        try:
            manifest = json.loads(manifest_path.read_text())
        except (json.JSONDecodeError, OSError):
            manifest = {}
    entry = {"artifacts": sorted(str(a.relative_to(outdir)) for a in artifacts)}
    if extra:
        entry.update(extra)
    manifest[command] = entry
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _parse_ood_args(values: list[str] | None) -> dict[str, Path]:
    """--ood name=path, repeatable."""
    if not values:
        raise UsageError("at least one --ood name=path is required")
    out: dict[str, Path] = {}
    for v in values:
        name, sep, path = v.partition("=")
        if not sep or not name or not path:
            raise UsageError(f"--ood expects name=path, got {v!r}")
        if name in out:
            raise UsageError(f"duplicate OOD set name {name!r}")
        out[name] = _require_file(path, f"OOD dump {name!r}")
    return out


def materialize(dump: ActivationDump, params: NetworkParams | None) -> ActivationDump:
    """Fill in logits for raw dumps by running the network; pass through
    dumps that already carry activations."""
    if dump.num_classes > 0:
        return dump
    if params is None:
        raise UsageError("raw data dump needs a checkpoint to compute activations")
    if dump.features is None:
        raise DumpFormatError("raw dump has no feature vectors")
    logits, _ = forward(params, dump.features)
    return ActivationDump(logits=logits, labels=dump.labels, features=dump.features)


def make_supervisor(kind: str, config: dict, params: NetworkParams | None,
                    train_activations: ActivationDump | None):
    if kind == "baseline":
        return BaselineSupervisor()
    if kind == "odin":
        if params is None:
            raise UsageError("odin requires a checkpoint (input gradients)")
        try:
            cfg = OdinConfig(
                temperature=float(config["temperature"]),
                epsilon=float(config["epsilon"]),
            )
        except KeyError as e:
            raise UsageError(f"odin config missing {e}")
        return OdinSupervisor(params, cfg)
    if kind == "openmax":
        if train_activations is None:
            raise UsageError("openmax requires --train-dump to fit on")
        try:
            cfg = OpenMaxConfig(tail=int(config["tail"]), alpha=int(config["alpha"]))
        except KeyError as e:
            raise UsageError(f"openmax config missing {e}")
        return OpenMaxSupervisor(openmax_fit(train_activations, cfg))
    raise UsageError(f"unknown supervisor {kind!r}")


def _supervisor_config(kind: str, args) -> dict:
    """Resolve a supervisor config from --configs JSON and/or direct flags."""
    config: dict = {}
    if getattr(args, "configs", None):
        path = _require_file(args.configs, "--configs file")
        try:
            all_configs = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise UsageError(f"bad --configs JSON: {e}")
        config = dict(all_configs.get(kind, {}))
    if kind == "odin":
        if args.odin_temperature is not None:
            config["temperature"] = args.odin_temperature
        if args.odin_epsilon is not None:
            config["epsilon"] = args.odin_epsilon
        if "temperature" not in config or "epsilon" not in config:
            raise UsageError(
                "odin needs temperature and epsilon: pass --configs from "
                "gridsearch or --odin-temperature/--odin-epsilon"
            )
    if kind == "openmax":
        if args.openmax_tail is not None:
            config["tail"] = args.openmax_tail
        if args.openmax_alpha is not None:
            config["alpha"] = args.openmax_alpha
        if "tail" not in config or "alpha" not in config:
            raise UsageError(
                "openmax needs tail and alpha: pass --configs from "
                "gridsearch or --openmax-tail/--openmax-alpha"
            )
    return config


def _fmt(x: float) -> str:
    return f"{x:.4f}"


# ---------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    outdir = _ensure_outdir(args.out)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    artifacts: list[Path] = []
    if args.kind == "blobs":
        n_test = args.n_test if args.n_test is not None else max(args.n // 4, 1)
        if n_test < 1:
            raise UsageError("--n-test must be at least 1")
        spec = SyntheticSpec(
            kind="blobs",
            dim=args.dim,
            n_classes=args.classes,
            means=axis_means(args.dim, args.classes, args.spread),
            sigma=args.sigma,
        )
        name = args.name or "blobs"
        train_path = outdir / f"{name}_train.ooda"
        test_path = outdir / f"{name}_test.ooda"
        write_dump(gen_blobs(spec, args.n, args.seed).to_dump(), train_path)
        write_dump(gen_blobs(spec, n_test, args.seed + 1).to_dump(), test_path)
        artifacts = [train_path, test_path]
    elif args.kind == "shifted":
        shift = (
            np.array([float(v) for v in args.shift_vec.split(",")])
            if args.shift_vec
            else span_shift(args.dim, args.classes, args.shift_norm)
        )
        spec = SyntheticSpec(
            kind="shifted_blobs",
            dim=args.dim,
            n_classes=args.classes,
            means=axis_means(args.dim, args.classes, args.spread),
            sigma=args.sigma,
            shift=shift,
        )
        path = outdir / f"{args.name or 'shifted'}.ooda"
        write_dump(gen_shifted(spec, args.n, args.seed).to_dump(), path)
        artifacts = [path]
    elif args.kind == "noise":
        path = outdir / f"{args.name or 'noise'}.ooda"
        ds = gen_noise(args.dim, args.n, mean=args.mean, std=args.std, seed=args.seed)
        write_dump(ds.to_dump(), path)
        artifacts = [path]
    else:
        raise UsageError(f"unknown --kind {args.kind!r}")
    _write_manifest(outdir, "gen", artifacts, {"seed": args.seed, "kind": args.kind})
    for a in artifacts:
        print(f"wrote {a}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train


def cmd_train(args) -> int:
    outdir = _ensure_outdir(args.out)
    train_dump = read_dump(_require_file(args.train_dump, "--train-dump"))
    test_dump = read_dump(_require_file(args.test_dump, "--test-dump"))
    train_set = Dataset.from_dump(train_dump)
    test_set = Dataset.from_dump(test_dump)
    if (train_set.labels < 0).any():
        raise UsageError("training dump must be fully labeled")
    n_classes = int(train_set.labels.max()) + 1
    if n_classes < 2:
        raise UsageError("training dump must contain at least two classes")

    schedule = TrainSchedule(
        total_epochs=args.epochs,
        batch_size=args.batch_size,
        base_lr=args.lr,
        drop_epochs=tuple(args.drop_at),
        drop_factor=args.drop_factor,
        momentum=args.momentum,
        checkpoint_every=args.checkpoint_every,
        seed=args.seed,
    )
    spec = mlp_spec(
        in_dim=train_set.dim,
        hidden=tuple(args.hidden),
        n_classes=n_classes,
        seed=args.seed,
        init_scale=args.init_scale,
    )
    result = train(spec, train_set, test_set, schedule)

    artifacts: list[Path] = []
    for ckpt in result.checkpoints:
        path = outdir / f"ckpt_ep{ckpt.epoch:04d}.oodc"
        save_checkpoint(ckpt, path)
        artifacts.append(path)
    best_path = outdir / "ckpt_best.oodc"
    save_checkpoint(result.best, best_path)
    artifacts.append(best_path)

    log_path = outdir / "training_log.csv"
    with log_path.open("w", newline="") as f:
        f.write("epoch,loss,train_accuracy,test_accuracy\n")
        for row in result.history:
            f.write(
                f"{row.epoch},{row.loss:.6f},{_fmt(row.train_accuracy)},{_fmt(row.test_accuracy)}\n"
            )
    artifacts.append(log_path)
    _write_manifest(outdir, "train", artifacts, {"seed": args.seed})
    print(
        f"wrote {len(result.checkpoints)} periodic checkpoints + best "
        f"(epoch {result.best.epoch}, test accuracy {result.best.test_accuracy:.4f})"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# gridsearch


def _parse_float_list(text: str | None) -> tuple[float, ...] | None:
    if text is None:
        return None
    return tuple(float(v) for v in text.split(","))


def _parse_int_list(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    return tuple(int(v) for v in text.split(","))


def cmd_gridsearch(args) -> int:
    outdir = _ensure_outdir(args.out)
    ckpt = load_checkpoint(_require_file(args.checkpoint, "--checkpoint"))
    inlier = materialize(
        read_dump(_require_file(args.inlier_dump, "--inlier-dump")), ckpt.params
    )
    ood_dumps = {
        name: materialize(read_dump(path), ckpt.params)
        for name, path in _parse_ood_args(args.ood).items()
    }
    kinds = _parse_supervisors(args.supervisor)
    train_acts = None
    if "openmax" in kinds:
        train_acts = materialize(
            read_dump(_require_file(args.train_dump, "--train-dump (openmax)")),
            ckpt.params,
        )

    grid_kwargs: dict = {}
    if _parse_float_list(args.odin_temperatures) is not None:
        grid_kwargs["odin_temperatures"] = _parse_float_list(args.odin_temperatures)
    if _parse_float_list(args.odin_epsilons) is not None:
        grid_kwargs["odin_epsilons"] = _parse_float_list(args.odin_epsilons)
    if _parse_int_list(args.openmax_tails) is not None:
        grid_kwargs["openmax_tails"] = _parse_int_list(args.openmax_tails)
    if _parse_int_list(args.openmax_alphas) is not None:
        grid_kwargs["openmax_alphas"] = _parse_int_list(args.openmax_alphas)

    artifacts: list[Path] = []
    best_configs: dict[str, dict] = {}
    ood_names = list(ood_dumps.keys())
    for kind in kinds:
        result = grid_search(
            kind,
            inlier,
            ood_dumps,
            params=ckpt.params,
            train_dump=train_acts,
            **grid_kwargs,
        )
        best_configs[kind] = result.config
        table_path = outdir / f"grid_{kind}.csv"
        config_keys = sorted({k for row in result.rows for k in row.config})
        with table_path.open("w", newline="") as f:
            header = config_keys + [f"auroc_{n}" for n in ood_names] + ["mean_auroc", "note"]
            f.write(",".join(header) + "\n")
            for row in result.rows:
                cells = [repr(row.config.get(k, "")) for k in config_keys]
                if row.aurocs is None:
                    cells += ["NA"] * len(ood_names) + ["NA", row.note]
                else:
                    cells += [_fmt(row.aurocs[n]) for n in ood_names]
                    cells += [_fmt(row.mean_auroc), row.note]
                f.write(",".join(cells) + "\n")
        artifacts.append(table_path)
        print(
            f"{kind}: best config {result.config} "
            f"(mean AUROC {result.mean_auroc:.4f}, {len(result.rows)} grid rows)"
        )

    configs_path = outdir / "supervisor_configs.json"
    configs_path.write_text(json.dumps(best_configs, indent=2, sort_keys=True) + "\n")
    artifacts.append(configs_path)
    _write_manifest(outdir, "gridsearch", artifacts, {"checkpoint": str(args.checkpoint)})
    return EXIT_OK


def _parse_supervisors(value: str) -> list[str]:
    kinds = ["baseline", "odin", "openmax"] if value == "all" else value.split(",")
    for k in kinds:
        if k not in ("baseline", "odin", "openmax"):
            raise UsageError(f"unknown supervisor {k!r}")
    return kinds


# ---------------------------------------------------------------------------
# evaluate


def cmd_evaluate(args) -> int:
    outdir = _ensure_outdir(args.out)
    params = None
    reference_accuracy = None
    epoch = None
    model_id = args.model_id
    if args.checkpoint:
        ckpt = load_checkpoint(_require_file(args.checkpoint, "--checkpoint"))
        params = ckpt.params
        reference_accuracy = ckpt.test_accuracy
        epoch = ckpt.epoch
        model_id = model_id or Path(args.checkpoint).stem
    kinds = _parse_supervisors(args.supervisor)
    if len(kinds) != 1:
        raise UsageError("evaluate takes exactly one --supervisor")
    kind = kinds[0]

    inlier = materialize(
        read_dump(_require_file(args.inlier_dump, "--inlier-dump")), params
    )
    train_acts = None
    if kind == "openmax":
        train_acts = materialize(
            read_dump(_require_file(args.train_dump, "--train-dump (openmax)")), params
        )
    supervisor = make_supervisor(kind, _supervisor_config(kind, args), params, train_acts)

    artifacts: list[Path] = []
    if kind == "openmax":
        model_path = outdir / "openmax_model.json"
        save_openmax_model(supervisor.model, model_path)
        artifacts.append(model_path)
    for name, path in _parse_ood_args(args.ood).items():
        outlier = materialize(read_dump(path), params)
        report = evaluate(
            supervisor,
            inlier,
            outlier,
            reference_accuracy=reference_accuracy,
            model_id=model_id,
            epoch=epoch,
            ood_set=name,
        )
        report_path = outdir / f"report_{kind}_{name}.json"
        report_path.write_text(json.dumps(report.to_json_dict(), indent=2) + "\n")
        artifacts.append(report_path)
        print(
            f"{kind} vs {name}: auroc {_fmt(report.auroc)} "
            f"fpr95 {_fmt(report.fpr_at_95_tpr)} cbpl {_fmt(report.cbpl)} "
            f"cov10 {_fmt(report.cov10)}"
        )
    _write_manifest(outdir, "evaluate", artifacts, {"supervisor": kind})
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def _load_sweep_checkpoints(ckpt_dir: Path) -> list[tuple[str, Checkpoint]]:
    files = sorted(ckpt_dir.glob("*.oodc"))
    if not files:
        raise UsageError(f"no .oodc checkpoints under {ckpt_dir}")
    loaded = [(f.name, load_checkpoint(f)) for f in files]
    loaded.sort(key=lambda pair: (pair[1].epoch, pair[0]))
    return loaded


def _sweep_checkpoint_rows(
    name: str,
    ckpt: Checkpoint,
    kinds: list[str],
    configs: dict[str, dict],
    raw_inlier: ActivationDump,
    raw_oods: dict[str, ActivationDump],
    raw_train: ActivationDump | None,
) -> tuple[list[dict], list[str]]:
    """All rows for one checkpoint; failures become NA rows plus a note."""
    rows: list[dict] = []
    errors: list[str] = []
    inlier = materialize(raw_inlier, ckpt.params)
    oods = {n: materialize(d, ckpt.params) for n, d in raw_oods.items()}
    train_acts = materialize(raw_train, ckpt.params) if raw_train is not None else None
    for kind in kinds:
        supervisor = None
        fail = ""
        try:
            supervisor = make_supervisor(kind, configs.get(kind, {}), ckpt.params, train_acts)
        except _DATA_ERRORS as e:
            fail = str(e)
        for ood_name in oods:
            row = {
                "epoch": str(ckpt.epoch),
                "test_accuracy": _fmt(ckpt.test_accuracy),
                "supervisor": kind,
                "ood_set": ood_name,
            }
            if supervisor is None:
                row.update({m: "NA" for m in SWEEP_COLUMNS[4:]})
                errors.append(f"{name}/{kind}: {fail}")
            else:
                try:
                    report = evaluate(
                        supervisor,
                        inlier,
                        oods[ood_name],
                        reference_accuracy=ckpt.test_accuracy,
                        model_id=name,
                        epoch=ckpt.epoch,
                        ood_set=ood_name,
                    )
                    row.update(
                        {
                            "auroc": _fmt(report.auroc),
                            "fpr_at_95_tpr": _fmt(report.fpr_at_95_tpr),
                            "cbpl": _fmt(report.cbpl),
                            "cov10": _fmt(report.cov10),
                        }
                    )
                except _DATA_ERRORS as e:
                    row.update({m: "NA" for m in SWEEP_COLUMNS[4:]})
                    errors.append(f"{name}/{kind}/{ood_name}: {e}")
            rows.append(row)
    return rows, errors


def _sweep_config(args) -> RunConfig:
    kinds = _parse_supervisors(args.supervisors)
    train_dump = None
    if "openmax" in kinds:
        train_dump = _require_file(args.train_dump, "--train-dump (openmax)")
    return RunConfig(
        outdir=_ensure_outdir(args.out),
        checkpoint_dir=_require_dir(args.checkpoint_dir, "--checkpoint-dir"),
        inlier_dump=_require_file(args.inlier_dump, "--inlier-dump"),
        ood_dumps=_parse_ood_args(args.ood),
        supervisors=kinds,
        configs={k: _supervisor_config(k, args) for k in kinds},
        train_dump=train_dump,
        threads=args.threads,
        plots=not args.no_plots,
    )


def cmd_sweep(args) -> int:
    config = _sweep_config(args)
    checkpoints = _load_sweep_checkpoints(config.checkpoint_dir)
    raw_inlier = read_dump(config.inlier_dump)
    raw_oods = {name: read_dump(path) for name, path in config.ood_dumps.items()}
    raw_train = read_dump(config.train_dump) if config.train_dump else None

    jobs = [
        (name, ckpt, config.supervisors, config.configs, raw_inlier, raw_oods, raw_train)
        for name, ckpt in checkpoints
    ]
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(lambda j: _sweep_checkpoint_rows(*j), jobs))
    else:
        results = [_sweep_checkpoint_rows(*j) for j in jobs]

    rows: list[dict] = []
    errors: list[str] = []
    for row_chunk, error_chunk in results:
        # checkpoint-major order, supervisors and OOD sets as listed
        rows.extend(row_chunk)
        errors.extend(error_chunk)

    csv_path = config.outdir / "sweep.csv"
    with csv_path.open("w", newline="") as f:
        f.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            f.write(",".join(row[c] for c in SWEEP_COLUMNS) + "\n")
    artifacts = [csv_path]
    if config.plots:
        artifacts.extend(render_sweep_figures(rows, config.outdir))
    _write_manifest(
        config.outdir,
        "sweep",
        artifacts,
        {"checkpoints": len(checkpoints), "supervisors": config.supervisors},
    )
    print(f"wrote {len(rows)} sweep rows over {len(checkpoints)} checkpoints")
    for e in errors:
        print(f"sweep cell failed: {e}", file=sys.stderr)
    return EXIT_DATA if errors else EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oodbench",
        description="Benchmark out-of-distribution supervisors over training checkpoints.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads")

    p = sub.add_parser("gen", help="generate synthetic dumps")
    common(p)
    p.add_argument("--kind", required=True, choices=["blobs", "shifted", "noise"])
    p.add_argument("--n", type=int, required=True, help="sample count (train count for blobs)")
    p.add_argument("--n-test", type=int, default=None, help="blobs test count (default n//4)")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--sigma", type=float, default=1.0, help="blob noise std")
    p.add_argument("--spread", type=float, default=4.0,
                   help="distance of each class mean from the origin (axis-aligned)")
    p.add_argument("--shift-norm", type=float, default=3.0,
                   help="norm of the shift away from the class-mean span")
    p.add_argument("--shift-vec", default=None, help="explicit comma-separated shift vector")
    p.add_argument("--mean", type=float, default=0.5, help="noise pixel mean")
    p.add_argument("--std", type=float, default=1.0, help="noise pixel std")
    p.add_argument("--name", default=None, help="output file basename")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train with periodic checkpointing")
    common(p)
    p.add_argument("--train-dump", required=True)
    p.add_argument("--test-dump", required=True)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--drop-at", type=float, action="append", default=None,
                   help="epoch fraction for a x1/drop-factor step (repeatable; default 0.5 0.75)")
    p.add_argument("--drop-factor", type=float, default=10.0)
    p.add_argument("--checkpoint-every", type=int, default=3)
    p.add_argument("--hidden", type=int, action="append", default=None,
                   help="hidden layer width (repeatable; default 128 64)")
    p.add_argument("--init-scale", type=float, default=0.05,
                   help="multiplier on the uniform weight-init bound")
    p.set_defaults(func=cmd_train)

    def supervisor_flags(p):
        p.add_argument("--configs", default=None,
                       help="supervisor_configs.json from gridsearch")
        p.add_argument("--odin-temperature", type=float, default=None)
        p.add_argument("--odin-epsilon", type=float, default=None)
        p.add_argument("--openmax-tail", type=int, default=None)
        p.add_argument("--openmax-alpha", type=int, default=None)

    p = sub.add_parser("gridsearch", help="tune supervisor parameters")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--train-dump", default=None, help="labeled dump for openmax fitting")
    p.add_argument("--inlier-dump", required=True)
    p.add_argument("--ood", action="append", metavar="NAME=PATH")
    p.add_argument("--supervisor", default="all",
                   help="baseline, odin, openmax, a comma list, or all")
    p.add_argument("--odin-temperatures", default=None, help="comma list override")
    p.add_argument("--odin-epsilons", default=None, help="comma list override")
    p.add_argument("--openmax-tails", default=None, help="comma list override")
    p.add_argument("--openmax-alphas", default=None, help="comma list override")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("evaluate", help="report one supervisor on one checkpoint")
    common(p)
    p.add_argument("--checkpoint", default=None,
                   help="optional for activation dumps; required for odin/raw data")
    p.add_argument("--train-dump", default=None)
    p.add_argument("--inlier-dump", required=True)
    p.add_argument("--ood", action="append", metavar="NAME=PATH")
    p.add_argument("--supervisor", required=True)
    p.add_argument("--model-id", default="")
    supervisor_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="evaluate every checkpoint x supervisor x OOD set")
    common(p)
    p.add_argument("--checkpoint-dir", required=True)
    p.add_argument("--train-dump", default=None)
    p.add_argument("--inlier-dump", required=True)
    p.add_argument("--ood", action="append", metavar="NAME=PATH")
    p.add_argument("--supervisors", default="all")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    supervisor_flags(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "train":
        if args.drop_at is None:
            args.drop_at = [0.5, 0.75]
        if args.hidden is None:
            args.hidden = [128, 64]
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
