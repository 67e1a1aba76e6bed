from typing import Dict, Iterator, List, Mapping, Tuple

import numpy as np

from hopreader.core.errors import CheckpointError
from hopreader.core.recurrent import GruParams
from hopreader.core.tensor import Tensor, parameter


class ParamStore:
    """
    Именованные обучаемые тензоры модели. Порядок регистрации фиксирован,
    поэтому один и тот же seed даёт одинаковую инициализацию.
    """

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._params: Dict[str, Tensor] = {}

    def _register(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._params:
            raise KeyError(f"Parameter '{name}' registered twice")
        t = parameter(data, name=name)
        self._params[name] = t
        return t

    def matrix(self, name: str, rows: int, cols: int) -> Tensor:
        # равномерная инициализация ±sqrt(6/(fan_in+fan_out))
        limit = np.sqrt(6.0 / (rows + cols))
        return self._register(name, self._rng.uniform(-limit, limit, size=(rows, cols)))

    def vector(self, name: str, size: int, fill: float = 0.0) -> Tensor:
        return self._register(name, np.full(size, fill, dtype=np.float64))

    def weights(self, name: str, size: int) -> Tensor:
        """Вектор весов (указатели, сходство): та же равномерная схема, что и у матриц."""
        limit = np.sqrt(6.0 / (size + 1))
        return self._register(name, self._rng.uniform(-limit, limit, size=size))

    def table(self, name: str, data: np.ndarray) -> Tensor:
        return self._register(name, np.array(data, dtype=np.float64))

    def gru(self, prefix: str, input_dim: int, hidden: int) -> GruParams:
        return GruParams(
            W_z=self.matrix(f"{prefix}.W_z", hidden, input_dim),
            W_r=self.matrix(f"{prefix}.W_r", hidden, input_dim),
            W_h=self.matrix(f"{prefix}.W_h", hidden, input_dim),
            U_z=self.matrix(f"{prefix}.U_z", hidden, hidden),
            U_r=self.matrix(f"{prefix}.U_r", hidden, hidden),
            U_h=self.matrix(f"{prefix}.U_h", hidden, hidden),
            b_z=self.vector(f"{prefix}.b_z", hidden),
            b_r=self.vector(f"{prefix}.b_r", hidden),
            b_h=self.vector(f"{prefix}.b_h", hidden),
        )

    def bigru(self, prefix: str, input_dim: int, hidden: int) -> Tuple[GruParams, GruParams]:
        return self.gru(f"{prefix}.fwd", input_dim, hidden), self.gru(f"{prefix}.bwd", input_dim, hidden)

    # --- доступ ---

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> List[str]:
        return list(self._params)

    def items(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self._params.items())

    def tensors(self) -> List[Tensor]:
        return list(self._params.values())

    def num_values(self) -> int:
        return sum(t.size for t in self._params.values())

    def squared_norm(self) -> float:
        return float(sum(np.sum(t.data * t.data) for t in self._params.values()))

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_state(self, state: Mapping[str, np.ndarray]) -> None:
        missing = [n for n in self._params if n not in state]
        extra = [n for n in state if n not in self._params]
        if missing or extra:
            raise CheckpointError(f"parameter set mismatch: missing={missing[:5]} unexpected={extra[:5]}")
        for name, t in self._params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != t.shape:
                raise CheckpointError(f"parameter '{name}': checkpoint shape {value.shape}, model shape {t.shape}")
            t.data[...] = value
