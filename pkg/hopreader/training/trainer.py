"""
Цикл обучения: перемешанные мини-батчи, среднее по батчу градиентов,
AdaDelta-шаг, EMA-тень весов и оценка на dev после каждой эпохи.
"""
import asyncio
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import aiofiles
import numpy as np
import orjson

from hopreader.core.config import TrainConfig
from hopreader.core.errors import DataError, TrainingAborted
from hopreader.core.tensor import Tensor, backward, zero_grad
from hopreader.data.metrics import EvalReport, evaluate
from hopreader.data.squad import Dataset, Example, annotate_dataset
from hopreader.lexical.ngram import NGramLM
from hopreader.lexical.pipeline import train_passage_lm
from hopreader.model.embedding import Vocabulary, load_vectors
from hopreader.model.network import HopReader
from hopreader.training.checkpoint import Checkpoint
from hopreader.training.loss import heads_loss, l2_gradient
from hopreader.training.optimizer import (
    Arrays, OptimizerState, adadelta_step, clip_by_global_norm, ema_update,
)
from utils.aiologger import log


@dataclass
class EpochStats:
    epoch: int
    loss: float                 # среднее по примерам, без L2
    objective: float            # loss + λ·‖Θ‖² на конец эпохи
    grad_norm: float            # максимум нормы градиента по батчам (до клиппинга)
    clamped: List[str] = field(default_factory=list)
    dev_em: Optional[float] = None
    dev_f1: Optional[float] = None

    def to_json(self) -> Dict[str, Any]:
        data = asdict(self)
        data["clamped"] = len(self.clamped)
        return data


def predict_dataset(
    model: HopReader,
    examples: Sequence[Example],
    alpha: Optional[float] = None,
    constrained: Optional[bool] = None,
    max_len: Optional[int] = None,
) -> Dict[str, str]:
    return {
        ex.id: model.predict(ex, alpha=alpha, constrained=constrained, max_len=max_len).answer_text
        for ex in examples
    }


def score_dataset(model: HopReader, dataset: Dataset, **decode: Any) -> EvalReport:
    return evaluate(predict_dataset(model, dataset.all_examples, **decode), dataset.golds)


class Trainer:
    """Синхронная часть обучения; одна эпоха целиком выполняется в рабочем потоке."""

    def __init__(self, config: TrainConfig, vocab: Vocabulary, lm: NGramLM):
        self.config = config
        self.lm = lm
        self.model = HopReader(config, vocab)
        self.state = OptimizerState.zeros_like(self.model.params)
        self.shadow: Arrays = self.model.state_dict()
        self.shuffle_rng = np.random.default_rng([config.seed, 1])
        self.dropout_rng = np.random.default_rng([config.seed, 2])
        self.epoch = 0

    def example_loss(self, example: Example, training: bool = True) -> Tuple[Tensor, bool]:
        if example.span is None:
            raise DataError(f"example '{example.id}' has no gold span")
        result = self.model.forward(example, training=training, rng=self.dropout_rng if training else None)
        return heads_loss(result.heads, example.span)

    def loss_on(self, example: Example) -> float:
        """Потеря примера без dropout, на текущих (не усреднённых) весах."""
        loss, _ = self.example_loss(example, training=False)
        return loss.item()

    def train_batch(self, batch: Sequence[Example]) -> Tuple[float, float, List[str]]:
        """Один шаг оптимизации. Возвращает (средняя потеря, норма градиента, id с зажатым log)."""
        params = self.model.params
        zero_grad(params.tensors())
        scale = 1.0 / len(batch)
        total = 0.0
        clamped: List[str] = []
        for ex in batch:
            loss, flag = self.example_loss(ex, training=True)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingAborted(f"non-finite loss {value}", ex.id)
            if flag:
                clamped.append(ex.id)
            backward(loss * scale)
            total += value
        grads: Arrays = {}
        for name, t in params.items():
            g = t.grad if t.grad is not None else np.zeros_like(t.data)
            grads[name] = g + l2_gradient(t.data, self.config.l2)
        norm = clip_by_global_norm(grads, self.config.clip_norm)
        if not math.isfinite(norm):
            raise TrainingAborted(f"non-finite gradient norm {norm}", batch[0].id)
        cfg = self.config
        adadelta_step(params, grads, self.state, rho=cfg.rho, eps=cfg.eps, lr_scale=cfg.lr_scale)
        ema_update(self.shadow, params, cfg.ema_decay)
        zero_grad(params.tensors())
        return total * scale, norm, clamped

    def run_epoch(self, examples: Sequence[Example]) -> EpochStats:
        self.epoch += 1
        order = self.shuffle_rng.permutation(len(examples))
        size = self.config.batch_size
        losses: List[float] = []
        clamped: List[str] = []
        worst_norm = 0.0
        for start in range(0, len(order), size):
            batch = [examples[i] for i in order[start:start + size]]
            loss, norm, flagged = self.train_batch(batch)
            losses.extend([loss] * len(batch))
            clamped.extend(flagged)
            worst_norm = max(worst_norm, norm)
        mean_loss = float(np.mean(losses))
        objective = mean_loss + self.config.l2 * self.model.params.squared_norm()
        return EpochStats(epoch=self.epoch, loss=mean_loss, objective=objective, grad_norm=worst_norm, clamped=clamped)

    def evaluate(self, dataset: Dataset) -> EvalReport:
        """EM/F1 на EMA-весах."""
        with self.model.using(self.shadow):
            return score_dataset(self.model, dataset)

    def checkpoint(self, history: List[Dict[str, Any]]) -> Checkpoint:
        return Checkpoint(
            config=self.config,
            params=self.model.state_dict(),
            shadow={k: v.copy() for k, v in self.shadow.items()},
            optimizer=OptimizerState(
                sq_grad={k: v.copy() for k, v in self.state.sq_grad.items()},
                sq_delta={k: v.copy() for k, v in self.state.sq_delta.items()},
                steps=self.state.steps,
            ),
            vocab=self.model.vocab,
            lm=self.lm,
            epoch=self.epoch,
            history=list(history),
        )


def prepare_training(
    config: TrainConfig,
    train_set: Dataset,
    dev_set: Optional[Dataset] = None,
    vectors_path: Optional[str] = None,
    sidecar: Optional[List[Dict[str, Any]]] = None,
) -> Trainer:
    """LM по контекстам обучения, признаки для train/dev и словарь."""
    if not train_set.examples:
        raise DataError("training set has no answerable examples", path=train_set.source or None)
    lm = train_passage_lm(train_set.contexts(), order=config.lm_order, k=config.lm_k)
    annotate_dataset(train_set, lm, sidecar)
    if dev_set is not None:
        annotate_dataset(dev_set, lm)
    words = train_set.vocabulary
    vectors = load_vectors(vectors_path, words, config.dims.embed) if vectors_path else None
    vocab = Vocabulary.build(words, config.dims.embed, config.seed, vectors)
    return Trainer(config, vocab, lm)


async def _append_metrics(path: str, record: Dict[str, Any]) -> None:
    async with aiofiles.open(path, mode="ab") as f:
        await f.write(orjson.dumps(record) + b"\n")


async def train(
    config: TrainConfig,
    train_set: Dataset,
    dev_set: Optional[Dataset] = None,
    vectors_path: Optional[str] = None,
    sidecar: Optional[List[Dict[str, Any]]] = None,
    metrics_path: Optional[str] = None,
    label: str = "train",
) -> Checkpoint:
    """
    Обучает модель и возвращает контрольную точку. С dev-набором сохраняется
    состояние эпохи с лучшим dev F1; patience > 0 включает раннюю остановку.
    """
    trainer = await asyncio.to_thread(prepare_training, config, train_set, dev_set, vectors_path, sidecar)
    examples = train_set.examples
    await log.info(
        f"[{label}] {len(examples)} example(s), {trainer.model.params.num_values()} parameter value(s), "
        f"seed={config.seed}, hops={config.hops}"
    )

    history: List[Dict[str, Any]] = []
    best: Optional[Checkpoint] = None
    best_f1 = -1.0
    stale = 0
    for _ in range(config.epochs):
        stats = await asyncio.to_thread(trainer.run_epoch, examples)
        if stats.clamped:
            await log.warning(
                f"[{label}] epoch {stats.epoch}: log-floor clamp on {len(stats.clamped)} example(s), "
                f"first: {', '.join(stats.clamped[:3])}"
            )
        if dev_set is not None:
            report = await asyncio.to_thread(trainer.evaluate, dev_set)
            stats.dev_em, stats.dev_f1 = report.em, report.f1
        record = stats.to_json()
        history.append(record)
        if metrics_path:
            await _append_metrics(metrics_path, record)

        summary = f"[{label}] epoch {stats.epoch}/{config.epochs} loss={stats.loss:.4f}"
        if stats.dev_f1 is not None:
            summary += f" dev EM={stats.dev_em:.2f} F1={stats.dev_f1:.2f}"
        await log.info(summary)

        if stats.dev_f1 is None:
            continue
        if stats.dev_f1 > best_f1:
            best_f1, stale = stats.dev_f1, 0
            best = trainer.checkpoint(history)
        else:
            stale += 1
            if config.patience and stale >= config.patience:
                await log.warning(f"[{label}] no dev F1 improvement for {stale} epoch(s), stopping")
                break

    if best is None:
        return trainer.checkpoint(history)
    best.history = list(history)
    await log.success(f"[{label}] best dev F1={best_f1:.2f} at epoch {best.epoch}")
    return best
