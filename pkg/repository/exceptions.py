# repository/exceptions.py

class RepositoryError(Exception):
    """Generic repository error (e.g. undecodable file, I/O error)."""


class SourceNotFoundError(RepositoryError):
    """Raised when a Mini-C source file does not exist."""


class HardwareSpecNotFoundError(RepositoryError):
    """Raised when a hardware description file does not exist."""
