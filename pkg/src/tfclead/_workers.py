import os

from .errors import ConfigError

WORKERS_ENV = "TFCLEAD_WORKERS"


def worker_count(requested: int | None = None) -> int:
    """Worker threads: explicit value, else ``$TFCLEAD_WORKERS``, else all cores."""
    if requested is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        try:
            requested = int(env) if env else (os.cpu_count() or 1)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return max(1, int(requested))
