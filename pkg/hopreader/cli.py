"""
Командная строка: обучение, предсказание, оценка, абляции, развёртки α и числа ходов,
проверка градиентов, разбиение корпуса, ансамбль и игрушечный корпус.

Слои конфигурации: профиль -> --config file.json -> флаги (флаги побеждают).
Коды выхода: 0 успех, 1 ошибка использования/конфига, 2 ошибка данных, 3 провал проверки.
"""
import argparse
import asyncio
import copy
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import aiofiles
import orjson
from rich.console import Console
from rich.table import Table

from hopreader.core.config import (
    ABLATION_VARIANTS, ALPHA_GRID, CURRENT_VERSION, HOP_GRID, RunConfig, TrainConfig,
    build_run_config, merge_config, variant_config,
)
from hopreader.core.errors import CheckpointError, ConfigError, DataError, TrainingAborted
from hopreader.core.profiles import enumerate_profiles, load_profile
from hopreader.data.metrics import EvalReport, evaluate
from hopreader.data.split import DEFAULT_RATIOS, split
from hopreader.data.squad import Dataset, annotate_dataset, load_squad, to_squad
from hopreader.data.toy import write_toy_corpus
from hopreader.diagnostics import run_gradient_suite
from hopreader.lexical.tagger import load_sidecar
from hopreader.training.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from hopreader.training.ensemble import ensemble_predict_dataset
from hopreader.training.trainer import score_dataset, train
from utils.aiologger import log

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CHECK = 3

THREADS_ENV = "SMARNET_THREADS"
CHECKPOINT_NAME = "model.smnt"
console = Console()


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse завершает процесс с кодом 2; здесь ошибки использования отдают код 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


# ===================== ПАРСЕР =====================

_TRAIN_FLAGS: List[Tuple[str, str, type]] = [
    ("--seed", "seed", int),
    ("--epochs", "epochs", int),
    ("--batch-size", "batch_size", int),
    ("--lr-scale", "lr_scale", float),
    ("--dropout", "dropout", float),
    ("--l2", "l2", float),
    ("--hops", "hops", int),
    ("--alpha", "alpha", float),
    ("--ema-decay", "ema_decay", float),
    ("--max-len", "max_len", int),
    ("--ensemble-size", "ensemble_size", int),
    ("--clip-norm", "clip_norm", float),
    ("--patience", "patience", int),
]
_DIM_FLAGS = [("--embed-dim", "embed"), ("--char-dim", "char_dim"), ("--char-width", "char_width"), ("--hidden", "hidden")]
_ABLATION_FLAGS = ["no_pos", "no_ner", "no_em", "no_surprisal", "no_tf", "no_qtype",
                   "input_concat", "passage_direct", "no_checking"]


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--profile", default="desk", help=f"run profile ({', '.join(enumerate_profiles())}) or JSON path")
    common.add_argument("--config", dest="config_file", help="JSON file with training config overrides")
    common.add_argument("--train", dest="train_path")
    common.add_argument("--dev", dest="dev_path")
    common.add_argument("--data", dest="data_path")
    common.add_argument("--predictions", dest="predictions_path")
    common.add_argument("--checkpoint", dest="checkpoints", action="append", default=[])
    common.add_argument("--vectors", dest="vectors_path", help="word vectors text file (GloVe format)")
    common.add_argument("--sidecar", dest="sidecar_path", help="JSON-lines POS/NER annotations for --train")
    common.add_argument("--output-dir", default="runs/latest")
    common.add_argument("--report", dest="report_path", help="write the evaluation report JSON here")
    common.add_argument("--variants", help="comma-separated ablation variants (default: all)")
    common.add_argument("--ratios", help="split ratios, e.g. 0.8,0.1,0.1")
    common.add_argument("--corrupt", help=argparse.SUPPRESS)
    common.add_argument("--quiet", action="store_true", help="log to file only")
    for flag, dest, kind in _TRAIN_FLAGS:
        common.add_argument(flag, dest=dest, type=kind, default=None)
    for flag, dest in _DIM_FLAGS:
        common.add_argument(flag, dest=f"dims_{dest}", type=int, default=None)
    common.add_argument("--similarity", choices=["trilinear", "dot"], default=None)
    common.add_argument("--literal-argmax", "--unconstrained", dest="constrained", action="store_const", const=False,
                        default=None, help="independent start/end argmax decoding")
    for name in _ABLATION_FLAGS:
        common.add_argument(f"--{name.replace('_', '-')}", dest=f"ablation_{name}",
                            action="store_const", const=True, default=None)
    return common


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="hopreader", description="Multi-hop machine reading comprehension")
    parser.add_argument("--version", action="version", version=f"%(prog)s {CURRENT_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    common = _common_parser()
    for name, help_text in (
        ("train", "train a model and write a checkpoint"),
        ("predict", "write id -> answer predictions for a dataset"),
        ("eval", "score a predictions file against a dataset"),
        ("ablate", "train and score ablation variants"),
        ("sweep-alpha", "decode a checkpoint for each alpha in the grid"),
        ("sweep-hops", "train and score models with 1, 2 and 3 hops"),
        ("gradcheck", "finite-difference gradient checks"),
        ("split", "split a corpus into train/dev/test files"),
        ("ensemble", "train ensemble_size runs and predict with pooled confidence"),
        ("toy", "write the bundled toy corpus"),
    ):
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def train_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Только явно заданные флаги, в форме вложенного словаря TrainConfig."""
    data: Dict[str, Any] = {}
    for _, dest, _ in _TRAIN_FLAGS:
        if getattr(args, dest) is not None:
            data[dest] = getattr(args, dest)
    for key in ("similarity", "constrained"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    dims = {dest: getattr(args, f"dims_{dest}") for _, dest in _DIM_FLAGS if getattr(args, f"dims_{dest}") is not None}
    if dims:
        data["dims"] = dims
    ablation = {name: True for name in _ABLATION_FLAGS if getattr(args, f"ablation_{name}")}
    if ablation:
        data["ablation"] = ablation
    return data


def _read_json_file(path: str) -> Dict[str, Any]:
    try:
        data = orjson.loads(Path(path).read_bytes())
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e.strerror}") from None
    except orjson.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return data


def resolve_config(args: argparse.Namespace) -> RunConfig:
    train_data = load_profile(args.profile)
    if args.config_file:
        train_data = merge_config(train_data, _read_json_file(args.config_file))
    train_data = merge_config(train_data, train_overrides(args))
    variants = [v.strip() for v in args.variants.split(",") if v.strip()] if args.variants else []
    return build_run_config({
        "command": args.command,
        "profile": args.profile,
        "train_path": args.train_path,
        "dev_path": args.dev_path,
        "data_path": args.data_path,
        "predictions_path": args.predictions_path,
        "checkpoints": args.checkpoints,
        "vectors_path": args.vectors_path,
        "sidecar_path": args.sidecar_path,
        "output_dir": args.output_dir,
        "literal_argmax": args.constrained is False,
        "variants": variants,
        "corrupt": args.corrupt,
        "train": train_data,
    })


# ===================== ВСПОМОГАТЕЛЬНОЕ =====================

async def _write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, "wb") as f:
        await f.write(orjson.dumps(data, option=orjson.OPT_INDENT_2))
    return path


async def _read_predictions(path: str) -> Dict[str, str]:
    try:
        async with aiofiles.open(path, "rb") as f:
            data = orjson.loads(await f.read())
    except OSError as e:
        raise DataError(f"cannot read predictions: {e.strerror}", path=path) from None
    except orjson.JSONDecodeError as e:
        raise DataError(f"malformed JSON: {e}", path=path) from None
    if not isinstance(data, dict) or not all(isinstance(v, str) for v in data.values()):
        raise DataError("predictions must be a JSON object mapping id -> answer string", path=path)
    return data


def worker_limit() -> int:
    raw = os.getenv(THREADS_ENV)
    if raw is None or raw == "":
        return max(1, min(4, os.cpu_count() or 1))
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def config_echo(run: RunConfig) -> Dict[str, Any]:
    return {"version": CURRENT_VERSION, "run": run.model_dump(mode="json", exclude={"train"}),
            "train": run.train.model_dump(mode="json")}


def _decode_options(run: RunConfig) -> Dict[str, Any]:
    return {"constrained": False} if run.literal_argmax else {}


def _report_table(title: str, first: str, rows: Sequence[Tuple[Any, EvalReport]]) -> Table:
    table = Table(title=title)
    table.add_column(first)
    table.add_column("EM", justify="right")
    table.add_column("F1", justify="right")
    for key, report in rows:
        table.add_row(str(key), f"{report.em:.3f}", f"{report.f1:.3f}")
    return table


async def _load_train_inputs(run: RunConfig) -> Tuple[Dataset, Optional[Dataset], Optional[List[Dict[str, Any]]]]:
    train_set = await load_squad(run.train_path, "train")
    dev_set = await load_squad(run.dev_path, "dev") if run.dev_path else None
    sidecar = await asyncio.to_thread(load_sidecar, run.sidecar_path) if run.sidecar_path else None
    return train_set, dev_set, sidecar


async def _train_and_score(
    label: str, config: TrainConfig, run: RunConfig, train_set: Dataset, dev_set: Optional[Dataset],
    sidecar: Optional[List[Dict[str, Any]]], semaphore: asyncio.Semaphore,
) -> Tuple[Checkpoint, EvalReport]:
    """Обучает на собственной копии данных и оценивает на dev (или на train, если dev нет)."""
    async with semaphore:
        local_train = copy.deepcopy(train_set)
        local_dev = copy.deepcopy(dev_set) if dev_set is not None else None
        ckpt = await train(config, local_train, local_dev, run.vectors_path, sidecar, label=label)
        target = local_dev if local_dev is not None else local_train
        model = ckpt.build_model()
        report = await asyncio.to_thread(score_dataset, model, target, **_decode_options(run))
        return ckpt, report


# ===================== КОМАНДЫ =====================

async def cmd_train(run: RunConfig) -> int:
    out = Path(run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics_path = out / "metrics.jsonl"
    metrics_path.unlink(missing_ok=True)
    await _write_json(out / "config.json", config_echo(run))

    train_set, dev_set, sidecar = await _load_train_inputs(run)
    ckpt = await train(run.train, train_set, dev_set, run.vectors_path, sidecar, str(metrics_path))
    path = await asyncio.to_thread(save_checkpoint, ckpt, str(out / CHECKPOINT_NAME))
    await log.success(f"Checkpoint written to <green>{path}</green> (epoch {ckpt.epoch})")
    return EXIT_OK


async def _predict(run: RunConfig) -> Tuple[Dataset, Dict[str, str]]:
    checkpoints = [await asyncio.to_thread(load_checkpoint, p) for p in run.checkpoints]
    dataset = await load_squad(run.data_path, "test")
    predictions = await asyncio.to_thread(ensemble_predict_dataset, checkpoints, dataset, **_decode_options(run))
    return dataset, predictions


async def cmd_predict(run: RunConfig) -> int:
    _, predictions = await _predict(run)
    target = Path(run.predictions_path) if run.predictions_path else Path(run.output_dir) / "predictions.json"
    await _write_json(target, predictions)
    await log.success(f"{len(predictions)} prediction(s) written to <green>{target}</green>")
    return EXIT_OK


async def cmd_eval(run: RunConfig, report_path: Optional[str] = None) -> int:
    predictions = await _read_predictions(run.predictions_path)
    dataset = await load_squad(run.data_path, "test")
    report = evaluate(predictions, dataset.golds)
    if report.missing:
        await log.warning(f"{len(report.missing)} question(s) have no prediction and score 0: "
                          f"{', '.join(report.missing[:5])}")
    console.print(orjson.dumps({"exact_match": report.em, "f1": report.f1}).decode())
    if report_path:
        await _write_json(Path(report_path), report.to_json())
    return EXIT_OK


async def cmd_ablate(run: RunConfig) -> int:
    keys = run.variants or list(ABLATION_VARIANTS)
    configs = [variant_config(run.train, key) for key in keys]
    train_set, dev_set, sidecar = await _load_train_inputs(run)
    semaphore = asyncio.Semaphore(worker_limit())
    results = await asyncio.gather(*(
        _train_and_score(key, config, run, train_set, dev_set, sidecar, semaphore)
        for key, (_, config) in zip(keys, configs)
    ))
    rows = [(row_name, report) for (row_name, _), (_, report) in zip(configs, results)]
    console.print(_report_table("Ablation", "Variant", rows))
    await _write_json(Path(run.output_dir) / "ablation.json", [
        {"variant": key, "row": name, "exact_match": r.em, "f1": r.f1}
        for key, (name, r) in zip(keys, rows)
    ])
    return EXIT_OK


async def cmd_sweep_alpha(run: RunConfig) -> int:
    ckpt = await asyncio.to_thread(load_checkpoint, run.checkpoints[0])
    dataset = await load_squad(run.data_path, "test")

    def sweep() -> List[Tuple[float, EvalReport]]:
        annotate_dataset(dataset, ckpt.lm)
        model = ckpt.build_model()
        examples = dataset.all_examples
        dists = {ex.id: model.distributions(ex) for ex in examples}
        rows = []
        for alpha in ALPHA_GRID:
            preds = {ex.id: model.predict(ex, alpha=alpha, dists=dists[ex.id], **_decode_options(run)).answer_text
                     for ex in examples}
            rows.append((alpha, evaluate(preds, dataset.golds)))
        return rows

    rows = await asyncio.to_thread(sweep)
    console.print(_report_table("Alpha sweep", "alpha", rows))
    await _write_json(Path(run.output_dir) / "sweep_alpha.json",
                      [{"alpha": a, "exact_match": r.em, "f1": r.f1} for a, r in rows])
    return EXIT_OK


async def cmd_sweep_hops(run: RunConfig) -> int:
    train_set, dev_set, sidecar = await _load_train_inputs(run)
    semaphore = asyncio.Semaphore(worker_limit())
    results = await asyncio.gather(*(
        _train_and_score(f"hops={h}", run.train.with_overrides(hops=h), run, train_set, dev_set, sidecar, semaphore)
        for h in HOP_GRID
    ))
    rows = [(h, report) for h, (_, report) in zip(HOP_GRID, results)]
    console.print(_report_table("Hop sweep", "hops", rows))
    await _write_json(Path(run.output_dir) / "sweep_hops.json",
                      [{"hops": h, "exact_match": r.em, "f1": r.f1} for h, r in rows])
    return EXIT_OK


async def cmd_gradcheck(run: RunConfig) -> int:
    results = await asyncio.to_thread(run_gradient_suite, run.train, run.train.seed, run.corrupt)
    table = Table(title="Gradient check")
    table.add_column("Op")
    table.add_column("Max rel err", justify="right")
    table.add_column("Threshold", justify="right")
    table.add_column("Coords", justify="right")
    table.add_column("Status")
    for r in results:
        status = "[green]pass[/green]" if r.passed else "[red]FAIL[/red]"
        table.add_row(r.name, f"{r.max_rel_err:.2e}", f"{r.threshold:.0e}", str(r.checked), status)
    console.print(table)
    failed = [r.name for r in results if not r.passed]
    if failed:
        await log.error(f"Gradient check failed for: {', '.join(failed)}")
        return EXIT_CHECK
    await log.success(f"All {len(results)} gradient checks passed")
    return EXIT_OK


async def cmd_split(run: RunConfig, ratios: Sequence[float]) -> int:
    dataset = await load_squad(run.data_path, "all")
    parts = split(dataset, ratios, run.train.seed)
    out = Path(run.output_dir)
    for part in parts:
        path = await _write_json(out / f"{part.split}.json", to_squad(part.all_examples, title=part.split))
        await log.info(f"{part.split}: {len(part)} question(s) -> {path}")
    return EXIT_OK


async def cmd_ensemble(run: RunConfig) -> int:
    out = Path(run.output_dir)
    await _write_json(out / "config.json", config_echo(run))
    train_set, dev_set, sidecar = await _load_train_inputs(run)
    semaphore = asyncio.Semaphore(worker_limit())
    seeds = [run.train.seed + i for i in range(run.train.ensemble_size)]
    results = await asyncio.gather(*(
        _train_and_score(f"seed={s}", run.train.with_overrides(seed=s), run, train_set, dev_set, sidecar, semaphore)
        for s in seeds
    ))
    checkpoints = [ckpt for ckpt, _ in results]
    for i, ckpt in enumerate(checkpoints):
        await asyncio.to_thread(save_checkpoint, ckpt, str(out / f"model-{i}.smnt"))

    target = await load_squad(run.data_path, "test") if run.data_path else (dev_set or train_set)
    predictions = await asyncio.to_thread(ensemble_predict_dataset, checkpoints, target, **_decode_options(run))
    report = evaluate(predictions, target.golds)
    rows = [(f"seed={s}", r) for s, (_, r) in zip(seeds, results)] + [("ensemble", report)]
    console.print(_report_table("Ensemble", "Run", rows))
    await _write_json(out / "predictions.json", predictions)
    return EXIT_OK


async def cmd_toy(run: RunConfig) -> int:
    path = await asyncio.to_thread(write_toy_corpus, str(Path(run.output_dir) / "toy.json"))
    await log.success(f"Toy corpus written to <green>{path}</green>")
    return EXIT_OK


def _parse_ratios(raw: Optional[str]) -> Tuple[float, ...]:
    if not raw:
        return DEFAULT_RATIOS
    try:
        return tuple(float(x) for x in raw.split(","))
    except ValueError:
        raise ConfigError(f"--ratios must be comma-separated numbers, got {raw!r}") from None


async def dispatch(run: RunConfig, args: argparse.Namespace) -> int:
    command = run.command
    if command == "train":
        return await cmd_train(run)
    if command == "predict":
        return await cmd_predict(run)
    if command == "eval":
        return await cmd_eval(run, args.report_path)
    if command == "ablate":
        return await cmd_ablate(run)
    if command == "sweep-alpha":
        return await cmd_sweep_alpha(run)
    if command == "sweep-hops":
        return await cmd_sweep_hops(run)
    if command == "gradcheck":
        return await cmd_gradcheck(run)
    if command == "split":
        return await cmd_split(run, _parse_ratios(args.ratios))
    if command == "ensemble":
        return await cmd_ensemble(run)
    if command == "toy":
        return await cmd_toy(run)
    raise UsageError(f"unknown command '{command}'")


async def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.quiet:
            log.configure(to_console=False)
        run = resolve_config(args)
        return await dispatch(run, args)
    except (UsageError, ConfigError) as e:
        await log.error(str(e))
        return EXIT_USAGE
    except (DataError, CheckpointError, TrainingAborted, OSError) as e:
        await log.error(str(e))
        return EXIT_DATA
    finally:
        await log.flush()
