"""Process-level settings read from the environment or a .env file."""

from pydantic_settings import BaseSettings, SettingsConfigDict


class WorkbenchSettings(BaseSettings):
    """Where artifacts and logs go. Nothing here is required."""

    model_config = SettingsConfigDict(env_prefix="EHRENFEST_", env_file=".env", extra="ignore")

    output_dir: str = "output"
    log_dir: str = "logs"
    log_level: str = "INFO"


_settings = None


def get_settings() -> WorkbenchSettings:
    """Get or create the settings instance."""
    global _settings
    if _settings is None:
        _settings = WorkbenchSettings()
    return _settings
