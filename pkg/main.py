import os
import sys
from pathlib import Path


if os.name == "posix":
    os.environ.setdefault("LANG", "en_US.UTF-8")
    os.environ.setdefault("LC_ALL", "en_US.UTF-8")
    os.environ.setdefault("PYTHONIOENCODING", "utf-8")

# пакеты hopreader и utils лежат рядом с main.py
sys.path.insert(0, str(Path(__file__).parent.resolve()))


if __name__ == "__main__":
    try:
        from hopreader.app import run
    except ImportError as e:
        print(f"Import error: {e}. Install dependencies with: pip install -r requirements.txt")
        sys.exit(1)
    sys.exit(run(sys.argv[1:]))
