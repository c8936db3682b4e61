"""Database engine and session management."""

from collections.abc import Iterator
from contextlib import contextmanager

from sqlalchemy import create_engine
from sqlalchemy.orm import Session, sessionmaker

from src.config import settings
from src.database.models import Base


class DatabaseManager:
    """Manages database connections and sessions."""

    def __init__(self, database_url: str | None = None):
        """
        Initialize database manager.

        Args:
            database_url: SQLAlchemy database URL (defaults to settings.DATABASE_URL)
        """
        self.engine = create_engine(
            database_url or settings.DATABASE_URL,
            echo=settings.DATABASE_ECHO,
            future=True,
        )
        self.session_factory = sessionmaker(
            self.engine,
            class_=Session,
            expire_on_commit=False,
            autoflush=False,
        )

    @contextmanager
    def get_session(self) -> Iterator[Session]:
        """
        Get database session as a context manager.

        Yields:
            Session instance
        """
        with self.session_factory() as session:
            yield session

    def create_tables(self) -> None:
        """Create all database tables."""
        Base.metadata.create_all(self.engine)

    def close(self) -> None:
        """Close database connections."""
        self.engine.dispose()
