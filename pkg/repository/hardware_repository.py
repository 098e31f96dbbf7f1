import os
from typing import Optional

from dotenv import load_dotenv

from .exceptions import HardwareSpecNotFoundError, RepositoryError


load_dotenv()
DEFAULT_HW_DIR = os.getenv("ANALYZER_HW_DIR", ".")

AGNOSTIC = "none"


class HardwareRepository:
    """Reads hardware description files. The name `none` selects the hardware-agnostic mode."""

    def __init__(self, base_dir: Optional[str] = None):
        self.base_dir = base_dir or DEFAULT_HW_DIR

    def path_of(self, name: str) -> str:
        return name if os.path.isabs(name) else os.path.join(self.base_dir, name)

    def load(self, name: str) -> Optional[str]:
        """Text of the description, or None for the hardware-agnostic mode."""
        if name == AGNOSTIC:
            return None
        path = self.path_of(name)
        try:
            with open(path, "r", encoding="utf-8") as f:
                return f.read()
        except FileNotFoundError:
            raise HardwareSpecNotFoundError(f"Hardware description {path} not found")
        except (OSError, UnicodeDecodeError) as e:
            raise RepositoryError(f"Unable to read {path}: {e}")
