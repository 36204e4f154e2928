import logging
from typing import Any, List

from spdt.handlers.command import Command
from spdt.infra.logging import LogManager

logger = logging.getLogger(__name__)


class CommandDispatcher:
    """Executes commands and records them in the run history."""

    def __init__(self):
        self.executed: List[Command] = []
        self.logger = LogManager()

    def execute(self, command: Command) -> Any:
        """
        Execute a command.

        Args:
            command: The Command to execute

        Returns:
            The result of the command's execute method
        """
        command_type = type(command).__name__
        self.logger.emit("Dispatcher", "EXECUTE_START", {
            "command": command_type,
            **command.describe(),
        })
        try:
            result = command.execute()
        except Exception as e:
            self.logger.emit("Dispatcher", "EXECUTE_FAILED", {
                "command": command_type,
                "error": str(e),
            })
            logger.debug(f"{command_type} failed: {e}")
            raise

        self.executed.append(command)
        self.logger.emit("Dispatcher", "EXECUTE_COMPLETE", {
            "command": command_type,
            "result": str(result) if result is not None else None,
        })
        return result
