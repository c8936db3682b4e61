"""Application configuration and settings."""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    APP_NAME: str = "amod-rebalancer"

    # Output Configuration
    AMOD_OUT_DIR: str = "./runs"  # Fallback root for run outputs

    # Run Registry Configuration
    DATABASE_URL: str = "sqlite:///./amod_runs.db"
    DATABASE_ECHO: bool = False

    # Application Configuration
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "text"  # "text" or "json"
    ENVIRONMENT: str = "development"

    # Numerics Configuration
    DEBUG_NUMERICS: bool = False  # NaN/Inf check after every recorded op

    # Training Configuration
    CHECKPOINT_EVERY: int = 500  # Episodes between checkpoints
    LOG_EVERY: int = 100  # Episodes between progress log lines

    # History Configuration
    HISTORY_LIMIT: int = 10  # Number of runs to show in history

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
    )


settings = Settings()
