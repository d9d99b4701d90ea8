from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Any, Optional, List, Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
import asyncio
import threading
import time
import logging

from agents.core.config import PipelineConfig
from agents.core.run_context import RunContext
from agents.utils.validation import validate_comprehensive_input
from volume.errors import CranialError, ErrorCategory, StageCancelled

logger = logging.getLogger(__name__)


@dataclass
class ValidationResult:
    """Result of input validation with detailed error information."""
    is_valid: bool
    errors: List[str] = field(default_factory=list)


class AgentStatus(Enum):
    IDLE = "idle"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"
    TIMEOUT = "timeout"


@dataclass
class AgentResult:
    status: AgentStatus
    data: Dict[str, Any]
    execution_time_ms: int
    error_details: Optional[str] = None

    @property
    def error_category(self) -> Optional[str]:
        return self.data.get("error_category")


def _raise_if_cancelled(cancelled: Optional[threading.Event]) -> None:
    if cancelled is not None and cancelled.is_set():
        raise StageCancelled("stage cancelled after timeout")


def map_cases(func: Callable, items: Sequence, jobs: int = 1,
              cancelled: Optional[threading.Event] = None) -> List:
    """Apply ``func`` per item, across processes when ``jobs > 1``; order is preserved.

    ``cancelled`` is checked between items. Once set, pending items are
    dropped and StageCancelled is raised.
    """
    if jobs > 1 and len(items) > 1:
        pool = ProcessPoolExecutor(max_workers=jobs)
        try:
            futures = [pool.submit(func, item) for item in items]
            results = []
            for future in futures:
                _raise_if_cancelled(cancelled)
                results.append(future.result())
            return results
        finally:
            pool.shutdown(cancel_futures=True)
    results = []
    for item in items:
        _raise_if_cancelled(cancelled)
        results.append(func(item))
    return results


class BaseAgent(ABC):
    """One pipeline stage.

    Subclasses implement :meth:`run` over validated inputs and return the
    output mapping. :meth:`execute` never raises: toolkit errors become a
    FAILED result carrying the error category.
    """

    def __init__(self, agent_id: str, run_context: RunContext, config: Dict[str, Any]):
        self.agent_id = agent_id
        self.run_context = run_context
        self.config = config
        self.cancelled = threading.Event()

    @staticmethod
    def option(inputs: Dict[str, Any], key: str, default: Any = None) -> Any:
        """Input value, or ``default`` when absent or unresolved."""
        value = inputs.get(key)
        return default if value is None else value

    def check_cancelled(self) -> None:
        """Raise StageCancelled once :meth:`execute` has given up on this run."""
        _raise_if_cancelled(self.cancelled)

    @property
    def pipeline_config(self) -> PipelineConfig:
        return self.run_context.config

    async def validate_inputs(self, inputs: Dict[str, Any]) -> ValidationResult:
        """Checks required fields, types, ranges, enums and paths declared in
        ``config['input_validation']``, then the agent's own checks."""
        errors = validate_comprehensive_input(inputs, self.config.get('input_validation', {}))
        errors.extend(await self._custom_validations(inputs))
        return ValidationResult(is_valid=not errors, errors=errors)

    async def _custom_validations(self, inputs: Dict[str, Any]) -> List[str]:
        return []

    @abstractmethod
    def run(self, inputs: Dict[str, Any]) -> Dict[str, Any]:
        """Stage work; may raise CranialError."""

    async def execute(self, inputs: Dict[str, Any]) -> AgentResult:
        start_time = time.monotonic()
        validation_result = await self.validate_inputs(inputs)
        if not validation_result.is_valid:
            return self._failed(start_time, f"Input validation failed: {validation_result.errors}",
                                ErrorCategory.CONFIG)
        logger.info(f"Stage {self.agent_id} started")
        try:
            data = await asyncio.wait_for(asyncio.to_thread(self.run, inputs),
                                          timeout=self.config.get('timeout_seconds'))
        except asyncio.TimeoutError:
            self.cancelled.set()
            logger.error(f"Stage {self.agent_id} timed out; cancelling remaining work")
            return AgentResult(status=AgentStatus.TIMEOUT,
                               data={"error_category": ErrorCategory.RUNTIME.value},
                               execution_time_ms=int((time.monotonic() - start_time) * 1000),
                               error_details="Agent execution timeout")
        except CranialError as e:
            logger.error(f"Stage {self.agent_id} failed: {e}")
            return self._failed(start_time, str(e), e.category)
        except Exception as e:
            logger.exception(f"Stage {self.agent_id} crashed: {e}")
            return self._failed(start_time, f"{type(e).__name__}: {e}", ErrorCategory.RUNTIME)
        await self.update_context(data)
        execution_time_ms = int((time.monotonic() - start_time) * 1000)
        logger.info(f"Stage {self.agent_id} completed in {execution_time_ms} ms")
        return AgentResult(status=AgentStatus.COMPLETED, data=data, execution_time_ms=execution_time_ms)

    def _failed(self, start_time: float, message: str, category: ErrorCategory) -> AgentResult:
        return AgentResult(status=AgentStatus.FAILED,
                           data={"error": message, "error_category": category.value},
                           execution_time_ms=int((time.monotonic() - start_time) * 1000),
                           error_details=message)

    async def get_context(self) -> Dict[str, Any]:
        return await self.run_context.get_context()

    async def update_context(self, data: Dict[str, Any]) -> None:
        await self.run_context.update_context(self.agent_id, data)
