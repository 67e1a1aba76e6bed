from typing import Any, Dict, FrozenSet, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from hopreader.core.errors import ConfigError

CURRENT_VERSION = "1.0.0"

# Значения α для развёртки весового коэффициента проверки
ALPHA_GRID: Tuple[float, ...] = (1.0, 1.25, 1.5, 1.75, 2.0)
HOP_GRID: Tuple[int, ...] = (1, 2, 3)

FEATURE_FLAGS = {
    "no_pos": "pos",
    "no_ner": "ner",
    "no_em": "em",
    "no_surprisal": "surprisal",
    "no_tf": "tf",
    "no_qtype": "qtype",
}


class ModelDims(BaseModel):
    model_config = ConfigDict(extra="forbid")

    embed: int = Field(100, ge=1)      # размер словных и символьных векторов (должны совпадать)
    char_dim: int = Field(100, ge=1)   # размер эмбеддинга одного символа
    char_width: int = Field(5, ge=1)   # ширина CNN-фильтра
    hidden: int = Field(100, ge=1)     # скрытое состояние GRU в одном направлении


class AblationFlags(BaseModel):
    model_config = ConfigDict(extra="forbid")

    no_pos: bool = False
    no_ner: bool = False
    no_em: bool = False
    no_surprisal: bool = False
    no_tf: bool = False
    no_qtype: bool = False
    input_concat: bool = False
    passage_direct: bool = False
    no_checking: bool = False

    def disabled_features(self) -> FrozenSet[str]:
        return frozenset(feature for flag, feature in FEATURE_FLAGS.items() if getattr(self, flag))


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    batch_size: int = Field(48, ge=1)
    lr_scale: float = Field(0.0005, gt=0.0)
    dropout: float = Field(0.2, ge=0.0, lt=1.0)
    l2: float = Field(1e-4, ge=0.0)
    hops: int = Field(2, ge=1)
    alpha: float = Field(1.5, ge=1.0)
    ema_decay: float = Field(0.999, ge=0.0, lt=1.0)
    epochs: int = Field(10, ge=1)
    seed: int = Field(0, ge=0)
    rho: float = Field(0.95, gt=0.0, lt=1.0)
    eps: float = Field(1e-6, gt=0.0)
    max_len: int = Field(15, ge=1)
    constrained: bool = True
    ensemble_size: int = Field(16, ge=1)
    clip_norm: float = Field(5.0, ge=0.0)  # 0: без клиппинга
    patience: int = Field(0, ge=0)         # 0: без ранней остановки
    similarity: Literal["trilinear", "dot"] = "trilinear"
    lm_order: int = Field(2, ge=1)
    lm_k: float = Field(0.1, ge=0.0)
    dims: ModelDims = Field(default_factory=ModelDims)
    ablation: AblationFlags = Field(default_factory=AblationFlags)

    @field_validator("lr_scale", "eps")
    @classmethod
    def _finite(cls, value: float) -> float:
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("must be finite")
        return value

    def with_overrides(self, **overrides: Any) -> "TrainConfig":
        """Копия конфига с переопределёнными полями (вложенные dims/ablation сливаются)."""
        data = self.model_dump()
        for key, value in overrides.items():
            if key in ("dims", "ablation") and isinstance(value, dict):
                data[key].update(value)
            else:
                data[key] = value
        return build_train_config(data)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str
    profile: str = "desk"
    train_path: Optional[str] = None
    dev_path: Optional[str] = None
    data_path: Optional[str] = None
    predictions_path: Optional[str] = None
    checkpoints: List[str] = Field(default_factory=list)
    vectors_path: Optional[str] = None
    sidecar_path: Optional[str] = None
    output_dir: str = "runs/latest"
    literal_argmax: bool = False
    variants: List[str] = Field(default_factory=list)
    corrupt: Optional[str] = None
    train: TrainConfig = Field(default_factory=TrainConfig)

    @model_validator(mode="after")
    def _check_paths(self) -> "RunConfig":
        if self.command in ("train", "ablate", "sweep-hops", "ensemble") and not self.train_path:
            raise ValueError(f"command '{self.command}' needs --train")
        if self.command in ("predict", "sweep-alpha") and not self.checkpoints:
            raise ValueError(f"command '{self.command}' needs --checkpoint")
        if self.command in ("predict", "eval", "sweep-alpha", "split") and not self.data_path:
            raise ValueError(f"command '{self.command}' needs --data")
        if self.command == "eval" and not self.predictions_path:
            raise ValueError("command 'eval' needs --predictions")
        return self


def _format_validation(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def build_train_config(data: Dict[str, Any]) -> TrainConfig:
    try:
        return TrainConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid training config: {_format_validation(e)}") from None


def build_run_config(data: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid run config: {_format_validation(e)}") from None


def merge_config(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Рекурсивное слияние словарей конфигурации: значения из overrides побеждают."""
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value
    return merged


# ===================== ВАРИАНТЫ АБЛЯЦИИ =====================

# ключ CLI -> (название строки в таблице, переопределения TrainConfig)
ABLATION_VARIANTS: Dict[str, Tuple[str, Dict[str, Any]]] = {
    "full": ("Full", {}),
    "no_pos": ("No f_pos", {"ablation": {"no_pos": True}}),
    "no_ner": ("No f_ner", {"ablation": {"no_ner": True}}),
    "no_em": ("No f_em", {"ablation": {"no_em": True}}),
    "no_surprisal": ("No f_surprisal", {"ablation": {"no_surprisal": True}}),
    "no_tf": ("No f_tf", {"ablation": {"no_tf": True}}),
    "no_qtype": ("No f_Qtype", {"ablation": {"no_qtype": True}}),
    "no_pos_ner": ("No f_pos and f_ner", {"ablation": {"no_pos": True, "no_ner": True}}),
    "input_concat": ("Input concatenation", {"ablation": {"input_concat": True}}),
    "passage_direct": ("Passage direct encoding", {"ablation": {"passage_direct": True}}),
    "memory": ("Memory network", {"hops": 1}),
    "no_checking": ("Self-alignment checking", {"ablation": {"no_checking": True}}),
}


def variant_config(base: TrainConfig, key: str) -> Tuple[str, TrainConfig]:
    if key not in ABLATION_VARIANTS:
        raise ConfigError(f"Unknown ablation variant '{key}'. Known: {', '.join(ABLATION_VARIANTS)}")
    row_name, overrides = ABLATION_VARIANTS[key]
    return row_name, base.with_overrides(**overrides)
