"""Logging configuration for the Ehrenfest workbench."""

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path

CONSOLE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s"

METRIC_NAMES = (
    "steps_taken",
    "solver_iterations",
    "bumps_assembled",
    "certificates_written",
    "artifacts_written",
    "checks_passed",
    "checks_failed",
)


def _level(name: str) -> int:
    return getattr(logging, name.upper(), logging.INFO)


class WorkbenchLogger:
    """
    Console plus daily-file logging for certificate and propagation runs.

    Counters in `metrics` are reset at the start of each scenario run and end up
    in its manifest; `run_log` mirrors a single run into its output directory.
    """

    def __init__(self, name: str = "ehrenfest", log_dir: str | Path = "logs", level: str = "INFO"):
        self.name = name
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)

        self.logger = logging.getLogger(name)
        self.logger.setLevel(logging.DEBUG)
        self.logger.propagate = False

        if not self.logger.handlers:
            console = logging.StreamHandler(sys.stdout)
            console.setLevel(_level(level))
            console.setFormatter(logging.Formatter(CONSOLE_FORMAT))

            daily = logging.FileHandler(self.log_dir / f"{name}_{datetime.now().strftime('%Y%m%d')}.log")
            daily.setLevel(logging.DEBUG)
            daily.setFormatter(logging.Formatter(FILE_FORMAT))

            self.logger.addHandler(console)
            self.logger.addHandler(daily)

        self.metrics = dict.fromkeys(METRIC_NAMES, 0)

    def info(self, message: str):
        self.logger.info(message)

    def debug(self, message: str):
        self.logger.debug(message)

    def warning(self, message: str):
        self.logger.warning(message)

    def error(self, message: str):
        self.logger.error(message)

    def set_console_level(self, level: str):
        """Change the console verbosity, e.g. WARNING for --quiet."""
        for handler in self.logger.handlers:
            if type(handler) is logging.StreamHandler:
                handler.setLevel(_level(level))

    @contextmanager
    def run_log(self, out_dir: str | Path) -> Iterator[Path]:
        """Copy every record emitted inside the block to out_dir/run.log."""
        path = Path(out_dir) / "run.log"
        path.parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(path, mode="w", encoding="utf-8")
        handler.setLevel(logging.DEBUG)
        handler.setFormatter(logging.Formatter(FILE_FORMAT))
        self.logger.addHandler(handler)
        try:
            yield path
        finally:
            self.logger.removeHandler(handler)
            handler.close()

    def increment_metric(self, metric_name: str, value: int = 1):
        """Increment a known counter; unknown names are ignored."""
        if metric_name in self.metrics:
            self.metrics[metric_name] += value

    def get_metrics(self) -> dict[str, int]:
        return self.metrics.copy()

    def reset_metrics(self) -> dict[str, int]:
        """Zero every counter and return the values they had."""
        previous = self.get_metrics()
        self.metrics = dict.fromkeys(METRIC_NAMES, 0)
        return previous

    def log_metrics(self):
        self.info("=== Metrics Summary ===")
        for key, value in self.metrics.items():
            self.info(f"{key}: {value}")
        self.info("=" * 23)


# Global logger instance
_logger: WorkbenchLogger | None = None


def get_logger(name: str = "ehrenfest") -> WorkbenchLogger:
    """Get or create the process-wide logger, configured from settings."""
    global _logger
    if _logger is None:
        from core.settings import get_settings

        settings = get_settings()
        _logger = WorkbenchLogger(name, log_dir=settings.log_dir, level=settings.log_level)
    return _logger
