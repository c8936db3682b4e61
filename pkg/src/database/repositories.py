"""Data access layer - repositories for database operations."""

from collections.abc import Sequence
from datetime import datetime, timezone

from sqlalchemy import select
from sqlalchemy.orm import Session

from src.database.models import EvaluationRecord, RunRecord, RunStatus
from src.utils.logger import setup_logging

logger = setup_logging(__name__)


class RunRepository:
    """Repository for RunRecord operations."""

    def __init__(self, session: Session):
        """Initialize run repository."""
        self.session = session

    def create(
        self,
        command: str,
        output_dir: str,
        seed: int = 0,
        backbone: str | None = None,
        config_json: str = "{}",
    ) -> RunRecord:
        """
        Record the start of a run.

        Args:
            command: CLI subcommand
            output_dir: Directory receiving the run outputs
            seed: Root seed
            backbone: Backbone name, when the run has one
            config_json: Resolved configuration

        Returns:
            RunRecord instance in RUNNING state
        """
        run = RunRecord(
            command=command,
            output_dir=output_dir,
            seed=seed,
            backbone=backbone,
            config_json=config_json,
        )
        self.session.add(run)
        self.session.commit()
        logger.info(f"Created run record: {run}")
        return run

    def get_by_id(self, run_id: int) -> RunRecord | None:
        """Get run by ID."""
        stmt = select(RunRecord).where(RunRecord.id == run_id)
        return self.session.execute(stmt).scalar_one_or_none()

    def finish(self, run_id: int, status: RunStatus, message: str | None = None) -> RunRecord | None:
        """Mark a run completed or failed."""
        run = self.get_by_id(run_id)
        if run:
            run.status = status
            run.message = message
            run.finished_at = datetime.now(timezone.utc)
            self.session.commit()
        return run

    def get_recent(self, limit: int = 10) -> list[RunRecord]:
        """
        Get most recent runs, newest first.

        Args:
            limit: Maximum number of runs

        Returns:
            List of RunRecord instances
        """
        stmt = select(RunRecord).order_by(RunRecord.id.desc()).limit(limit)
        return list(self.session.execute(stmt).scalars().all())


class EvaluationRepository:
    """Repository for EvaluationRecord operations."""

    def __init__(self, session: Session):
        """Initialize evaluation repository."""
        self.session = session

    def add_many(self, run_id: int, summaries: Sequence) -> list[EvaluationRecord]:
        """Store one row per evaluation summary."""
        records = [
            EvaluationRecord(
                run_id=run_id,
                model=s.model,
                backbone=s.backbone,
                k=s.k,
                seed=s.seed,
                episodes=s.episodes,
                reward_mean=s.reward_mean,
                reward_se=s.reward_se,
                served_mean=s.served_mean,
                cost_mean=s.cost_mean,
                dev_pct=s.dev_pct,
            )
            for s in summaries
        ]
        self.session.add_all(records)
        self.session.commit()
        return records

    def get_for_run(self, run_id: int) -> list[EvaluationRecord]:
        stmt = (
            select(EvaluationRecord)
            .where(EvaluationRecord.run_id == run_id)
            .order_by(EvaluationRecord.id)
        )
        return list(self.session.execute(stmt).scalars().all())
