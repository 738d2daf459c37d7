"""
Base Agent - Abstract base class for every pipeline stage
"""

from abc import ABC, abstractmethod
from datetime import datetime
from typing import Any, Dict, List, Optional
import logging
import time

from logic_blocks.errors import ConfigurationError

logger = logging.getLogger(__name__)


class BaseAgent(ABC):
    """
    One stage of the mapping pipeline.

    Subclasses name the keys they need in REQUIRED_KEYS, implement execute(),
    and are run through run(), which wraps the result in a
    {'success', 'data', 'metadata'} envelope. Failures never propagate out of
    run(); the envelope carries the message and the exception instead.
    """

    REQUIRED_KEYS: List[str] = []

    def __init__(self, agent_id: str, agent_type: str):
        self.agent_id = agent_id
        self.agent_type = agent_type
        self.execution_count = 0
        self.last_execution_time: Optional[datetime] = None
        logger.debug(f"Initialized {self.agent_type} agent with ID: {self.agent_id}")

    @abstractmethod
    def execute(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        """
        Stage logic.

        Args:
            input_data: validated stage input

        Returns:
            Stage output

        Raises:
            MappingError subclasses on invalid configuration or numerical failure
        """

    def validate_input(self, input_data: Dict[str, Any]) -> bool:
        if not isinstance(input_data, dict):
            logger.error("Input data must be a dictionary")
            return False
        missing = [key for key in self.REQUIRED_KEYS if input_data.get(key) is None]
        if missing:
            logger.error(f"{self.agent_type}: missing required inputs {missing}")
            return False
        return True

    def run(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        """
        Validate, execute and time the stage.

        Returns:
            {'success': True, 'data': ..., 'metadata': ...} or
            {'success': False, 'data': None, 'error': str, 'exception': exc, 'metadata': ...}
        """
        start = time.perf_counter()
        try:
            if not self.validate_input(input_data):
                raise ConfigurationError(f"Invalid input data for {self.agent_type} agent")

            logger.info(f"Starting {self.agent_type} agent")
            result = self.execute(input_data)

            execution_time = time.perf_counter() - start
            self.execution_count += 1
            self.last_execution_time = datetime.now()
            logger.info(f"{self.agent_type} agent completed in {execution_time:.2f}s")
            return {
                'success': True,
                'data': result,
                'metadata': self._metadata(execution_time),
            }

        except Exception as e:
            logger.error(f"Error in {self.agent_type} agent: {e}")
            return {
                'success': False,
                'data': None,
                'error': str(e),
                'exception': e,
                'metadata': self._metadata(time.perf_counter() - start),
            }

    def _metadata(self, execution_time: float) -> Dict[str, Any]:
        return {
            'agent_id': self.agent_id,
            'agent_type': self.agent_type,
            'execution_time': execution_time,
            'execution_count': self.execution_count,
        }

    def get_info(self) -> Dict[str, Any]:
        return {
            'agent_id': self.agent_id,
            'agent_type': self.agent_type,
            'execution_count': self.execution_count,
            'last_execution_time': (
                self.last_execution_time.isoformat() if self.last_execution_time else None
            ),
        }
