import copy

import orjson
import pytest

from hopreader import cli
from hopreader.data.squad import parse_squad, to_squad
from hopreader.training.checkpoint import MAGIC

TINY = ["--embed-dim", "6", "--char-dim", "4", "--char-width", "2", "--hidden", "5",
        "--epochs", "2", "--batch-size", "5", "--dropout", "0", "--quiet"]


def _write(path, obj):
    path.write_bytes(orjson.dumps(obj))
    return str(path)


@pytest.fixture
def corpus_files(tmp_path, toy_corpus):
    dataset = parse_squad(copy.deepcopy(toy_corpus))
    examples = dataset.all_examples
    return {
        "all": _write(tmp_path / "toy.json", toy_corpus),
        "train": _write(tmp_path / "train.json", to_squad(examples[:5])),
        "dev": _write(tmp_path / "dev.json", to_squad(examples[5:8])),
        "golds": {ex.id: ex.golds[0] for ex in examples},
    }


@pytest.fixture
async def trained_dir(tmp_path, corpus_files):
    out = tmp_path / "run"
    code = await cli.main(["train", "--train", corpus_files["train"], "--dev", corpus_files["dev"],
                           "--output-dir", str(out), *TINY])
    assert code == cli.EXIT_OK
    return out


async def test_toy_writes_corpus(tmp_path):
    assert await cli.main(["toy", "--output-dir", str(tmp_path), "--quiet"]) == cli.EXIT_OK
    data = orjson.loads((tmp_path / "toy.json").read_bytes())
    assert sum(len(p["qas"]) for p in data["data"][0]["paragraphs"]) == 50


@pytest.mark.parametrize("argv", [
    ["train", "--train", "TRAIN", "--hops", "0"],
    ["train", "--train", "TRAIN", "--dropout", "1.5"],
    ["train", "--train", "TRAIN", "--profile", "nonexistent"],
    ["train", "--train", "TRAIN", "--no-such-flag"],
    ["train"],
    ["predict", "--data", "x.json"],
    ["frobnicate"],
])
async def test_usage_errors_exit_one(argv, corpus_files):
    argv = [corpus_files["train"] if a == "TRAIN" else a for a in argv]
    assert await cli.main([*argv, "--quiet"]) == cli.EXIT_USAGE


async def test_missing_data_file_exits_two(tmp_path):
    code = await cli.main(["train", "--train", str(tmp_path / "missing.json"), "--output-dir", str(tmp_path), *TINY])
    assert code == cli.EXIT_DATA


async def test_eval_gold_predictions_score_perfectly(tmp_path, corpus_files):
    predictions = _write(tmp_path / "pred.json", corpus_files["golds"])
    report_path = tmp_path / "report.json"
    code = await cli.main(["eval", "--data", corpus_files["all"], "--predictions", predictions,
                           "--report", str(report_path), "--quiet"])
    assert code == cli.EXIT_OK
    report = orjson.loads(report_path.read_bytes())
    assert report["exact_match"] == pytest.approx(100.0)
    assert report["f1"] == pytest.approx(100.0)
    assert report["total"] == 50


async def test_eval_counts_missing_as_zero(tmp_path, corpus_files):
    golds = dict(list(corpus_files["golds"].items())[:25])
    predictions = _write(tmp_path / "pred.json", golds)
    report_path = tmp_path / "report.json"
    await cli.main(["eval", "--data", corpus_files["all"], "--predictions", predictions,
                    "--report", str(report_path), "--quiet"])
    report = orjson.loads(report_path.read_bytes())
    assert report["exact_match"] == pytest.approx(50.0)
    assert len(report["missing"]) == 25


async def test_eval_rejects_malformed_predictions(tmp_path, corpus_files):
    predictions = _write(tmp_path / "pred.json", {"toy-000": 1})
    code = await cli.main(["eval", "--data", corpus_files["all"], "--predictions", predictions, "--quiet"])
    assert code == cli.EXIT_DATA


async def test_gradcheck_detects_corrupted_gradient():
    code = await cli.main(["gradcheck", "--profile", "gradcheck", "--corrupt", "softmax", "--quiet"])
    assert code == cli.EXIT_CHECK


async def test_train_writes_run_directory(trained_dir):
    assert (trained_dir / cli.CHECKPOINT_NAME).read_bytes().startswith(MAGIC)
    echo = orjson.loads((trained_dir / "config.json").read_bytes())
    assert echo["train"]["dims"]["hidden"] == 5
    assert echo["train"]["epochs"] == 2
    lines = (trained_dir / "metrics.jsonl").read_bytes().splitlines()
    assert [orjson.loads(line)["epoch"] for line in lines] == [1, 2]


async def test_config_layers(tmp_path, corpus_files):
    overrides = _write(tmp_path / "cfg.json", {"epochs": 1, "alpha": 2.0, "dims": {"hidden": 3}})
    out = tmp_path / "run"
    code = await cli.main(["train", "--train", corpus_files["train"], "--config", overrides,
                           "--output-dir", str(out), *TINY])
    assert code == cli.EXIT_OK
    train = orjson.loads((out / "config.json").read_bytes())["train"]
    assert train["epochs"] == 2          # флаг побеждает файл
    assert train["alpha"] == 2.0         # файл побеждает профиль
    assert train["dims"]["hidden"] == 5
    assert train["dims"]["embed"] == 6
    assert train["batch_size"] == 5


async def test_training_is_deterministic(tmp_path, corpus_files):
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        await cli.main(["train", "--train", corpus_files["train"], "--output-dir", str(out), *TINY])
        blobs.append((out / cli.CHECKPOINT_NAME).read_bytes())
    assert blobs[0] == blobs[1]


async def test_predict_and_sweep_alpha(tmp_path, trained_dir, corpus_files):
    ckpt = str(trained_dir / cli.CHECKPOINT_NAME)
    target = tmp_path / "pred.json"
    code = await cli.main(["predict", "--checkpoint", ckpt, "--data", corpus_files["dev"],
                           "--predictions", str(target), "--quiet"])
    assert code == cli.EXIT_OK
    predictions = orjson.loads(target.read_bytes())
    assert len(predictions) == 3
    assert all(isinstance(v, str) for v in predictions.values())

    code = await cli.main(["sweep-alpha", "--checkpoint", ckpt, "--data", corpus_files["dev"],
                           "--output-dir", str(tmp_path), "--quiet"])
    assert code == cli.EXIT_OK
    rows = orjson.loads((tmp_path / "sweep_alpha.json").read_bytes())
    assert [r["alpha"] for r in rows] == [1.0, 1.25, 1.5, 1.75, 2.0]


async def test_predict_on_empty_dataset(tmp_path, trained_dir):
    empty = _write(tmp_path / "empty.json", {"data": []})
    target = tmp_path / "pred.json"
    code = await cli.main(["predict", "--checkpoint", str(trained_dir / cli.CHECKPOINT_NAME),
                           "--data", empty, "--predictions", str(target), "--quiet"])
    assert code == cli.EXIT_OK
    assert orjson.loads(target.read_bytes()) == {}


async def test_predict_with_corrupt_checkpoint(tmp_path, corpus_files):
    bad = tmp_path / "bad.smnt"
    bad.write_bytes(b"not a checkpoint")
    code = await cli.main(["predict", "--checkpoint", str(bad), "--data", corpus_files["dev"], "--quiet"])
    assert code == cli.EXIT_DATA


async def test_split_writes_three_files(tmp_path, corpus_files):
    code = await cli.main(["split", "--data", corpus_files["all"], "--output-dir", str(tmp_path), "--quiet"])
    assert code == cli.EXIT_OK
    sizes = []
    for part in ("train", "dev", "test"):
        data = orjson.loads((tmp_path / f"{part}.json").read_bytes())
        sizes.append(sum(len(p["qas"]) for p in data["data"][0]["paragraphs"]))
    assert sizes == [40, 5, 5]
    assert await cli.main(["split", "--data", corpus_files["all"], "--ratios", "0.5,0.6,0.1",
                           "--quiet"]) == cli.EXIT_USAGE


async def test_ablate_selected_variants(tmp_path, corpus_files):
    code = await cli.main(["ablate", "--train", corpus_files["train"], "--dev", corpus_files["dev"],
                           "--variants", "full,no_em,no_checking", "--output-dir", str(tmp_path),
                           *TINY, "--epochs", "1"])
    assert code == cli.EXIT_OK
    rows = orjson.loads((tmp_path / "ablation.json").read_bytes())
    assert [r["variant"] for r in rows] == ["full", "no_em", "no_checking"]
    assert all(0.0 <= r["f1"] <= 100.0 for r in rows)


async def test_ablate_unknown_variant(corpus_files):
    code = await cli.main(["ablate", "--train", corpus_files["train"], "--variants", "no_magic", "--quiet"])
    assert code == cli.EXIT_USAGE


async def test_invalid_thread_limit(monkeypatch, tmp_path, corpus_files):
    monkeypatch.setenv(cli.THREADS_ENV, "many")
    code = await cli.main(["ablate", "--train", corpus_files["train"], "--variants", "full",
                           "--output-dir", str(tmp_path), *TINY])
    assert code == cli.EXIT_USAGE


def test_worker_limit(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert cli.worker_limit() == 3
    monkeypatch.delenv(cli.THREADS_ENV)
    assert 1 <= cli.worker_limit() <= 4


async def test_sweep_hops(tmp_path, corpus_files):
    code = await cli.main(["sweep-hops", "--train", corpus_files["train"], "--output-dir", str(tmp_path),
                           *TINY, "--epochs", "1"])
    assert code == cli.EXIT_OK
    rows = orjson.loads((tmp_path / "sweep_hops.json").read_bytes())
    assert [r["hops"] for r in rows] == [1, 2, 3]


async def test_ensemble_writes_members(tmp_path, corpus_files):
    code = await cli.main(["ensemble", "--train", corpus_files["train"], "--data", corpus_files["dev"],
                           "--output-dir", str(tmp_path), *TINY, "--epochs", "1", "--ensemble-size", "2"])
    assert code == cli.EXIT_OK
    assert (tmp_path / "model-0.smnt").exists()
    assert (tmp_path / "model-1.smnt").exists()
    assert len(orjson.loads((tmp_path / "predictions.json").read_bytes())) == 3


async def test_train_and_predict_twice_gives_identical_files(tmp_path, corpus_files):
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        await cli.main(["train", "--train", corpus_files["train"], "--output-dir", str(out), *TINY])
        target = out / "predictions.json"
        code = await cli.main(["predict", "--checkpoint", str(out / cli.CHECKPOINT_NAME),
                               "--data", corpus_files["dev"], "--predictions", str(target), "--quiet"])
        assert code == cli.EXIT_OK
        outputs.append(target.read_bytes())
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize("flag", ["--literal-argmax", "--unconstrained"])
def test_literal_argmax_is_one_option(flag):
    args = cli.build_parser().parse_args(["predict", "--checkpoint", "m.smnt", "--data", "d.json", flag])
    run = cli.resolve_config(args)
    assert run.literal_argmax is True
    assert run.train.constrained is False
    plain = cli.resolve_config(cli.build_parser().parse_args(["predict", "--checkpoint", "m.smnt", "--data", "d.json"]))
    assert plain.literal_argmax is False
    assert plain.train.constrained is True
