"""
Минимальный движок обратного автодифференцирования поверх numpy (float64).

Граф строится заново на каждый пример (define-by-run): каждая операция
возвращает новый Tensor, который помнит родителей и замыкание `_backward`.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from hopreader.core.errors import ShapeError

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]

_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Отключает построение графа в текущем потоке (предсказание, EMA-оценка)."""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


class Tensor:
    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        _parents: Tuple["Tensor", ...] = (),
        _op: str = "leaf",
        name: Optional[str] = None,
    ):
        self.data: np.ndarray = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._parents = _parents
        self._op = _op
        self._backward: Optional[Callable[[np.ndarray], None]] = None
        self.name = name

    # --- свойства ---

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def graph_ref(self) -> str:
        return self._op

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        if grad.shape != self.data.shape:
            grad = _unbroadcast(grad, self.data.shape)
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64)
        else:
            self.grad = self.grad + grad

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, op={self._op}{label}, requires_grad={self.requires_grad})"

    # --- операторы ---

    def __add__(self, other: Union["Tensor", float]) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: Union["Tensor", float]) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: Union["Tensor", float]) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: Union["Tensor", float]) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: Union["Tensor", float]) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: Union["Tensor", float]) -> "Tensor":
        return mul(other, self)

    def __neg__(self) -> "Tensor":
        return mul(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __getitem__(self, index) -> "Tensor":
        return getitem(self, index)

    def sum(self, axis: Optional[int] = None) -> "Tensor":
        return tsum(self, axis)

    def reshape(self, *shape: int) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def backward(self) -> Dict["Tensor", np.ndarray]:
        return backward(self)


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(data: ArrayLike, name: Optional[str] = None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def _result(
    data: np.ndarray,
    parents: Tuple[Tensor, ...],
    op: str,
    backward_fn: Callable[[np.ndarray], None],
) -> Tensor:
    requires = is_grad_enabled() and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=requires, _parents=parents if requires else (), _op=op)
    if requires:
        out._backward = backward_fn
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Сворачивает градиент по осям, размноженным при broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> Tuple[int, ...]:
    try:
        return tuple(np.broadcast_shapes(a.shape, b.shape))
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} are not broadcastable") from None


# ===================== ПОЭЛЕМЕНТНЫЕ ОПЕРАЦИИ =====================

def add(a: Union[Tensor, float], b: Union[Tensor, float]) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def _backward(g: np.ndarray) -> None:
        a._accumulate(g)
        b._accumulate(g)

    return _result(a.data + b.data, (a, b), "add", _backward)


def sub(a: Union[Tensor, float], b: Union[Tensor, float]) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def _backward(g: np.ndarray) -> None:
        a._accumulate(g)
        b._accumulate(-g)

    return _result(a.data - b.data, (a, b), "sub", _backward)


def mul(a: Union[Tensor, float], b: Union[Tensor, float]) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def _backward(g: np.ndarray) -> None:
        a._accumulate(g * b.data)
        b._accumulate(g * a.data)

    return _result(a.data * b.data, (a, b), "mul", _backward)


def sigmoid(x: Tensor) -> Tensor:
    # exp(-log(1+e^-x)) не переполняется при больших |x|
    y = np.exp(-np.logaddexp(0.0, -x.data))

    def _backward(g: np.ndarray) -> None:
        x._accumulate(g * y * (1.0 - y))

    return _result(y, (x,), "sigmoid", _backward)


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def _backward(g: np.ndarray) -> None:
        x._accumulate(g * (1.0 - y * y))

    return _result(y, (x,), "tanh", _backward)


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)

    def _backward(g: np.ndarray) -> None:
        x._accumulate(g * y)

    return _result(y, (x,), "exp", _backward)


def log(x: Tensor, floor: float = 0.0) -> Tensor:
    """Натуральный логарифм. Значения ниже `floor` заменяются на floor, градиент через них не идёт."""
    clamped = x.data <= floor if floor > 0.0 else np.zeros(x.shape, dtype=bool)
    safe = np.where(clamped, floor, x.data)
    y = np.log(safe)

    def _backward(g: np.ndarray) -> None:
        x._accumulate(np.where(clamped, 0.0, g / safe))

    return _result(y, (x,), "log", _backward)


_ELEMENTWISE = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "exp": exp,
    "log": log,
}


def elementwise(op_kind: str, a: Tensor, b: Optional[Union[Tensor, float]] = None) -> Tensor:
    fn = _ELEMENTWISE.get(op_kind)
    if fn is None:
        raise ValueError(f"Unknown elementwise op '{op_kind}'")
    if op_kind in ("add", "sub", "mul"):
        if b is None:
            raise ValueError(f"'{op_kind}' needs two operands")
        return fn(a, b)
    return fn(a)


# ===================== ЛИНЕЙНАЯ АЛГЕБРА =====================

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim not in (1, 2) or b.ndim not in (1, 2):
        raise ShapeError(f"matmul: supports 1-D/2-D operands, got {a.shape} and {b.shape}")
    inner_a = a.shape[-1]
    inner_b = b.shape[0]
    if inner_a != inner_b:
        raise ShapeError(f"matmul: inner dimensions differ for {a.shape} and {b.shape}")

    def _backward(g: np.ndarray) -> None:
        if a.ndim == 2 and b.ndim == 2:
            a._accumulate(g @ b.data.T)
            b._accumulate(a.data.T @ g)
        elif a.ndim == 2:  # матрица на вектор
            a._accumulate(np.outer(g, b.data))
            b._accumulate(a.data.T @ g)
        elif b.ndim == 2:  # вектор на матрицу
            a._accumulate(b.data @ g)
            b._accumulate(np.outer(a.data, g))
        else:
            a._accumulate(g * b.data)
            b._accumulate(g * a.data)

    return _result(a.data @ b.data, (a, b), "matmul", _backward)


def transpose(x: Tensor) -> Tensor:
    def _backward(g: np.ndarray) -> None:
        x._accumulate(g.T)

    return _result(x.data.T, (x,), "transpose", _backward)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        y = x.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError(f"reshape: cannot view {x.shape} as {tuple(shape)}") from None

    def _backward(g: np.ndarray) -> None:
        x._accumulate(g.reshape(x.shape))

    return _result(y, (x,), "reshape", _backward)


def getitem(x: Tensor, index) -> Tensor:
    y = x.data[index]

    def _backward(g: np.ndarray) -> None:
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        x._accumulate(full)

    return _result(y, (x,), "getitem", _backward)


def take_rows(x: Tensor, indices: Sequence[int]) -> Tensor:
    """Выборка строк по индексам (lookup в таблице эмбеддингов)."""
    return getitem(x, np.asarray(indices, dtype=np.int64))


# ===================== РЕДУКЦИИ =====================

def tsum(x: Tensor, axis: Optional[int] = None) -> Tensor:
    y = x.data.sum() if axis is None else x.data.sum(axis=axis)

    def _backward(g: np.ndarray) -> None:
        if axis is None:
            x._accumulate(np.broadcast_to(g, x.shape).copy())
        else:
            x._accumulate(np.broadcast_to(np.expand_dims(g, axis), x.shape).copy())

    return _result(y, (x,), "sum", _backward)


def mean(x: Tensor) -> Tensor:
    return mul(tsum(x), 1.0 / x.size)


def tmax(x: Tensor, axis: int) -> Tensor:
    """Максимум по оси; градиент уходит в первый argmax."""
    arg = np.argmax(x.data, axis=axis)
    y = np.take_along_axis(x.data, np.expand_dims(arg, axis), axis=axis).squeeze(axis)

    def _backward(g: np.ndarray) -> None:
        full = np.zeros_like(x.data)
        np.put_along_axis(full, np.expand_dims(arg, axis), np.expand_dims(g, axis), axis=axis)
        x._accumulate(full)

    return _result(y, (x,), "max", _backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def _backward(g: np.ndarray) -> None:
        x._accumulate(y * (g - (g * y).sum(axis=axis, keepdims=True)))

    return _result(y, (x,), "softmax", _backward)


# ===================== СБОРКА =====================

def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat: empty tensor list")
    ndim = tensors[0].ndim
    ax = axis if axis >= 0 else ndim + axis
    for t in tensors:
        if t.ndim != ndim or any(
            t.shape[d] != tensors[0].shape[d] for d in range(ndim) if d != ax
        ):
            shapes = ", ".join(str(p.shape) for p in tensors)
            raise ShapeError(f"concat along axis {axis}: incompatible shapes {shapes}")
    y = np.concatenate([t.data for t in tensors], axis=ax)
    bounds = np.cumsum([t.shape[ax] for t in tensors])[:-1]

    def _backward(g: np.ndarray) -> None:
        for t, piece in zip(tensors, np.split(g, bounds, axis=ax)):
            t._accumulate(piece)

    return _result(y, tuple(tensors), "concat", _backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("stack: empty tensor list")
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise ShapeError(f"stack: shapes differ {sorted(shapes)}")
    y = np.stack([t.data for t in tensors], axis=axis)

    def _backward(g: np.ndarray) -> None:
        for i, t in enumerate(tensors):
            t._accumulate(np.take(g, i, axis=axis))

    return _result(y, tuple(tensors), "stack", _backward)


def rows(x: Tensor) -> List[Tensor]:
    return [x[i] for i in range(x.shape[0])]


# ===================== РЕГУЛЯРИЗАЦИЯ =====================

def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: в обучении выжившие единицы масштабируются на 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate).astype(np.float64) / (1.0 - rate)
    return mul(x, Tensor(keep))


# ===================== ОБРАТНЫЙ ПРОХОД =====================

def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited: set = set()
    stack_: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack_:
        node, expanded = stack_.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack_.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack_.append((parent, False))
    return order


def backward(loss: Tensor) -> Dict[Tensor, np.ndarray]:
    """
    Считает градиенты скалярного `loss` по всем достижимым тензорам с requires_grad.
    Градиенты листьев накапливаются между вызовами (обнуляются через zero_grad).
    Возвращает карту лист -> градиент.
    """
    if loss.size != 1:
        raise ShapeError(f"backward: loss must be scalar, got shape {loss.shape}")
    order = _topological_order(loss)
    for node in order:
        if node._parents:
            node.grad = None
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
    return {
        node: node.grad
        for node in order
        if node.is_leaf and node.requires_grad and node.grad is not None
    }


def zero_grad(tensors: Iterable[Tensor]) -> None:
    for t in tensors:
        t.grad = None
