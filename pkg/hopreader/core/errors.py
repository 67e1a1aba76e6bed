from typing import Optional


class ShapeError(ValueError):
    """Несовместимые размерности тензоров."""


class ConfigError(ValueError):
    """Неверная конфигурация запуска (CLI выходит с кодом 1)."""


class DataError(ValueError):
    """Ошибка входных данных. `path`: JSON-путь до проблемного поля, если он известен."""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class CheckpointError(RuntimeError):
    pass


class TrainingAborted(RuntimeError):
    def __init__(self, message: str, example_id: str):
        self.example_id = example_id
        super().__init__(f"{message} (example id={example_id})")


class GradientCheckFailed(AssertionError):
    pass
