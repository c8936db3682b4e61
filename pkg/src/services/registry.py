"""Best-effort recording of runs in the registry database."""

from collections.abc import Sequence

from sqlalchemy.exc import SQLAlchemyError

from src.database.engine import DatabaseManager
from src.database.models import RunRecord, RunStatus
from src.database.repositories import EvaluationRepository, RunRepository
from src.utils.logger import setup_logging

logger = setup_logging(__name__)


class RunRegistry:
    """Records runs and evaluation rows; a failing database never fails a run."""

    def __init__(self, db: DatabaseManager):
        self.db = db
        self._ready = False

    def _ensure_tables(self) -> None:
        if not self._ready:
            self.db.create_tables()
            self._ready = True

    def start(
        self,
        command: str,
        output_dir: str,
        seed: int = 0,
        backbone: str | None = None,
        config_json: str = "{}",
    ) -> int | None:
        try:
            self._ensure_tables()
            with self.db.get_session() as session:
                run = RunRepository(session).create(command, output_dir, seed, backbone, config_json)
                return run.id
        except SQLAlchemyError as e:
            logger.warning(f"Could not record {command} run: {e}", exc_info=True)
            return None

    def finish(self, run_id: int | None, ok: bool, message: str | None = None) -> None:
        if run_id is None:
            return
        status = RunStatus.COMPLETED if ok else RunStatus.FAILED
        try:
            with self.db.get_session() as session:
                RunRepository(session).finish(run_id, status, message)
        except SQLAlchemyError as e:
            logger.warning(f"Could not update run {run_id}: {e}", exc_info=True)

    def record_evaluations(self, run_id: int | None, summaries: Sequence) -> None:
        if run_id is None or not summaries:
            return
        try:
            with self.db.get_session() as session:
                EvaluationRepository(session).add_many(run_id, summaries)
        except SQLAlchemyError as e:
            logger.warning(f"Could not record evaluations for run {run_id}: {e}", exc_info=True)

    def recent(self, limit: int) -> list[RunRecord]:
        try:
            self._ensure_tables()
            with self.db.get_session() as session:
                return RunRepository(session).get_recent(limit)
        except SQLAlchemyError as e:
            logger.error(f"Could not read run history: {e}", exc_info=True)
            return []
