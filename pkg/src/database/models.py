"""Database models for the run registry."""

import enum
from datetime import datetime

from sqlalchemy import BigInteger, DateTime, Enum, Float, ForeignKey, Integer, String, Text, func
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship


class RunStatus(enum.Enum):
    """Lifecycle of a recorded run."""

    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class Base(DeclarativeBase):
    """Base class for all ORM models."""

    created_at: Mapped[datetime] = mapped_column(
        DateTime(timezone=True), default=func.now(), nullable=False
    )
    updated_at: Mapped[datetime] = mapped_column(
        DateTime(timezone=True), default=func.now(), onupdate=func.now(), nullable=False
    )


class RunRecord(Base):
    """One CLI invocation: train, eval, sweep or gradcheck."""

    __tablename__ = "runs"

    id: Mapped[int] = mapped_column(Integer, primary_key=True)
    command: Mapped[str] = mapped_column(String(16), index=True)
    backbone: Mapped[str | None] = mapped_column(String(16), nullable=True, index=True)
    seed: Mapped[int] = mapped_column(BigInteger, default=0)
    config_json: Mapped[str] = mapped_column(Text, default="{}")
    output_dir: Mapped[str] = mapped_column(String(1024))
    status: Mapped[RunStatus] = mapped_column(
        Enum(RunStatus), default=RunStatus.RUNNING, nullable=False, index=True
    )
    message: Mapped[str | None] = mapped_column(Text, nullable=True)
    finished_at: Mapped[datetime | None] = mapped_column(DateTime(timezone=True), nullable=True)

    # Relationships
    evaluations: Mapped[list["EvaluationRecord"]] = relationship(
        back_populates="run", cascade="all, delete-orphan"
    )

    def __repr__(self) -> str:
        return f"<RunRecord(id={self.id}, command={self.command}, status={self.status.value})>"


class EvaluationRecord(Base):
    """One results-CSV row attached to the run that produced it."""

    __tablename__ = "evaluations"

    id: Mapped[int] = mapped_column(Integer, primary_key=True)
    run_id: Mapped[int] = mapped_column(Integer, ForeignKey("runs.id"), index=True)
    model: Mapped[str] = mapped_column(String(32))
    backbone: Mapped[str] = mapped_column(String(16))
    k: Mapped[int] = mapped_column(Integer)
    seed: Mapped[int] = mapped_column(BigInteger)
    episodes: Mapped[int] = mapped_column(Integer)
    reward_mean: Mapped[float] = mapped_column(Float)
    reward_se: Mapped[float] = mapped_column(Float)
    served_mean: Mapped[float] = mapped_column(Float)
    cost_mean: Mapped[float] = mapped_column(Float)
    dev_pct: Mapped[float | None] = mapped_column(Float, nullable=True)

    # Relationships
    run: Mapped[RunRecord] = relationship(back_populates="evaluations")

    def __repr__(self) -> str:
        return f"<EvaluationRecord(run_id={self.run_id}, model={self.model}, k={self.k}, seed={self.seed})>"
