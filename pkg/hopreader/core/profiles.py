from pathlib import Path
from typing import Any, Dict, List

import orjson

from hopreader.core.errors import ConfigError

PROFILES_DIR = Path(__file__).resolve().parent.parent.parent / "profiles"


def load_profile(name_or_path: str) -> Dict[str, Any]:
    """
    Загружает профиль запуска: имя из каталога profiles/ (desk, full, gradcheck)
    или путь к произвольному JSON-файлу.
    """
    path = Path(name_or_path)
    if not path.suffix:
        path = PROFILES_DIR / f"{name_or_path}.json"
    if not path.is_file():
        raise ConfigError(f"Profile '{name_or_path}' not found (looked at {path})")
    try:
        data = orjson.loads(path.read_bytes())
    except orjson.JSONDecodeError as e:
        raise ConfigError(f"Profile '{path}' is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"Profile '{path}' must be a JSON object")
    # служебные ключи профиля не относятся к TrainConfig
    data.pop("name", None)
    data.pop("description", None)
    return data


def enumerate_profiles() -> List[str]:
    if not PROFILES_DIR.is_dir():
        return []
    return sorted(p.stem for p in PROFILES_DIR.glob("*.json"))
