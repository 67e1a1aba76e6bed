"""
Формат контрольной точки:

    b"SMNT1\\n" | 8 байт длины заголовка (big-endian) | orjson-заголовок | блоки float64

Заголовок хранит конфиг, словарь, LM и список тензоров (группа, имя, форма)
в порядке, в котором идут их блоки (row-major, little-endian).
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np
import orjson

from hopreader.core.config import TrainConfig, build_train_config
from hopreader.core.errors import CheckpointError, ConfigError
from hopreader.lexical.ngram import NGramLM
from hopreader.model.embedding import Vocabulary
from hopreader.model.network import HopReader
from hopreader.training.optimizer import Arrays, OptimizerState

MAGIC = b"SMNT1\n"
FORMAT_VERSION = 1
_DTYPE = np.dtype("<f8")


@dataclass
class Checkpoint:
    config: TrainConfig
    params: Arrays
    shadow: Arrays
    optimizer: OptimizerState
    vocab: Vocabulary
    lm: NGramLM
    epoch: int = 0
    history: List[Dict[str, Any]] = field(default_factory=list)

    def build_model(self, use_shadow: bool = True) -> HopReader:
        """Модель с EMA-весами (по умолчанию) или с сырыми весами обучения."""
        model = HopReader(self.config, self.vocab)
        model.load_state(self.shadow if use_shadow else self.params)
        return model


def _tensor_groups(ckpt: Checkpoint) -> List[Tuple[str, Arrays]]:
    return [
        ("params", ckpt.params),
        ("shadow", ckpt.shadow),
        ("sq_grad", ckpt.optimizer.sq_grad),
        ("sq_delta", ckpt.optimizer.sq_delta),
        ("vocab", {"pretrained": ckpt.vocab.pretrained}),
    ]


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    entries = []
    blobs = []
    for group, arrays in _tensor_groups(ckpt):
        for name, value in arrays.items():
            arr = np.ascontiguousarray(value, dtype=_DTYPE)
            entries.append({"group": group, "name": name, "shape": list(arr.shape)})
            blobs.append(arr.tobytes(order="C"))
    header = {
        "format": FORMAT_VERSION,
        "epoch": ckpt.epoch,
        "steps": ckpt.optimizer.steps,
        "config": ckpt.config.model_dump(mode="json"),
        "vocab": {
            "dim": ckpt.vocab.dim,
            "seed": ckpt.vocab.seed,
            "pretrained_words": ckpt.vocab.pretrained_words,
            "oov_words": ckpt.vocab.oov_words,
            "chars": ckpt.vocab.chars,
        },
        "lm": ckpt.lm.to_text(),
        "history": ckpt.history,
        "tensors": entries,
    }
    head = orjson.dumps(header)
    return MAGIC + len(head).to_bytes(8, "big") + head + b"".join(blobs)


def decode_checkpoint(raw: bytes, source: str = "<bytes>") -> Checkpoint:
    if not raw.startswith(MAGIC):
        raise CheckpointError(f"{source}: not a checkpoint (bad magic header)")
    offset = len(MAGIC)
    if len(raw) < offset + 8:
        raise CheckpointError(f"{source}: truncated header length")
    head_len = int.from_bytes(raw[offset:offset + 8], "big")
    offset += 8
    try:
        header = orjson.loads(raw[offset:offset + head_len])
    except orjson.JSONDecodeError as e:
        raise CheckpointError(f"{source}: corrupt header: {e}") from None
    offset += head_len
    if header.get("format") != FORMAT_VERSION:
        raise CheckpointError(f"{source}: unsupported format version {header.get('format')}")

    groups: Dict[str, Arrays] = {"params": {}, "shadow": {}, "sq_grad": {}, "sq_delta": {}, "vocab": {}}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        size = count * _DTYPE.itemsize
        if offset + size > len(raw):
            raise CheckpointError(f"{source}: truncated data for tensor '{entry['name']}'")
        arr = np.frombuffer(raw, dtype=_DTYPE, count=count, offset=offset).reshape(shape).astype(np.float64)
        groups.setdefault(entry["group"], {})[entry["name"]] = arr
        offset += size
    if offset != len(raw):
        raise CheckpointError(f"{source}: {len(raw) - offset} trailing byte(s) after tensor data")

    try:
        config = build_train_config(header["config"])
    except ConfigError as e:
        raise CheckpointError(f"{source}: {e}") from None
    v = header["vocab"]
    vocab = Vocabulary(
        dim=v["dim"],
        seed=v["seed"],
        pretrained_words=list(v["pretrained_words"]),
        pretrained=groups["vocab"].get("pretrained", np.zeros((0, v["dim"]))),
        oov_words=list(v["oov_words"]),
        chars=list(v["chars"]),
    )
    return Checkpoint(
        config=config,
        params=groups["params"],
        shadow=groups["shadow"],
        optimizer=OptimizerState(sq_grad=groups["sq_grad"], sq_delta=groups["sq_delta"], steps=header.get("steps", 0)),
        vocab=vocab,
        lm=NGramLM.from_text(header["lm"]),
        epoch=header.get("epoch", 0),
        history=list(header.get("history", [])),
    )


def save_checkpoint(ckpt: Checkpoint, path: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(encode_checkpoint(ckpt))
    return target


def load_checkpoint(path: str) -> Checkpoint:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"{path}: cannot read checkpoint: {e.strerror}") from None
    return decode_checkpoint(raw, source=path)
