import os
from typing import Optional

from dotenv import load_dotenv

from .exceptions import RepositoryError, SourceNotFoundError


load_dotenv()
DEFAULT_SOURCE_DIR = os.getenv("ANALYZER_SOURCE_DIR", ".")


class SourceRepository:
    """Reads Mini-C translation units; relative names resolve against `base_dir`."""

    def __init__(self, base_dir: Optional[str] = None):
        self.base_dir = base_dir or DEFAULT_SOURCE_DIR

    def path_of(self, name: str) -> str:
        return name if os.path.isabs(name) else os.path.join(self.base_dir, name)

    def exists(self, name: str) -> bool:
        return os.path.isfile(self.path_of(name))

    def load(self, name: str) -> str:
        """Return the UTF-8 text of `name`. Raises SourceNotFoundError if missing."""
        path = self.path_of(name)
        try:
            with open(path, "r", encoding="utf-8") as f:
                return f.read()
        except FileNotFoundError:
            raise SourceNotFoundError(f"Source file {path} not found")
        except UnicodeDecodeError as e:
            raise RepositoryError(f"{path} is not valid UTF-8: {e}")
        except OSError as e:
            raise RepositoryError(f"Unable to read {path}: {e}")
