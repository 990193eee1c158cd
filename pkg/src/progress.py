"""Live terminal view of a simulation run: recent log lines, per-method tallies and one bar."""

import logging
from collections import Counter, deque
from typing import Optional

from rich.console import Console, Group
from rich.live import Live
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table
from rich.text import Text


LEVEL_STYLES = {
    logging.DEBUG: "dim",
    logging.INFO: "white",
    logging.WARNING: "yellow",
    logging.ERROR: "red",
    logging.CRITICAL: "bold red",
}


class ProgressManager:
    """Tracks finished (method, replicate) cells of one scenario and renders them with Rich."""

    def __init__(self, enabled: bool = True, max_log_lines: int = 8, console: Optional[Console] = None):
        """
        Initialize the display.

        Args:
            enabled: Whether anything is rendered at all
            max_log_lines: Height of the log panel
            console: Target console (stderr by default)
        """
        self.enabled = enabled
        self.max_log_lines = max_log_lines
        self.console = console or Console(stderr=True)
        self.recent_logs: deque = deque(maxlen=max_log_lines)
        self.done: Counter = Counter()
        self.failures: Counter = Counter()

        self.progress = Progress(
            TextColumn("[bold blue]cells"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            console=self.console,
        )
        self.task_id = None
        self.live: Optional[Live] = None

    @property
    def failed(self) -> int:
        return sum(self.failures.values())

    def start(self):
        if self.enabled and self.live is None:
            self.live = Live(self._render(), console=self.console, refresh_per_second=4)
            self.live.start()

    def stop(self):
        if self.live is not None:
            self.live.stop()
            self.live = None

    def _tally(self) -> Table:
        table = Table(box=None, show_header=True, header_style="bold")
        table.add_column("method")
        table.add_column("done", justify="right")
        table.add_column("failed", justify="right")
        for method in sorted(self.done):
            failed = self.failures[method]
            table.add_row(method, str(self.done[method]), Text(str(failed), style="red" if failed else "dim"))
        return table

    def _render(self):
        lines = list(self.recent_logs) or [Text("waiting for the first replicate", style="dim")]
        body = Text("\n").join(lines + [Text("")] * (self.max_log_lines - len(lines)))
        log_panel = Panel(body, title="sampler log", border_style="cyan", height=self.max_log_lines + 2)
        return Group(log_panel, self._tally(), self.progress)

    def _refresh(self):
        if self.live is not None:
            self.live.update(self._render())

    def add_log(self, message: str, style: str = "white"):
        """Append one line to the log panel."""
        if self.enabled:
            self.recent_logs.append(Text(message, style=style))
            self._refresh()

    def start_scenario(self, total_cells: int, completed: int = 0):
        """
        Reset tallies and the bar for a new scenario.

        Args:
            total_cells: Methods times replicates
            completed: Cells already answered by the cache
        """
        if not self.enabled:
            return
        self.done.clear()
        self.failures.clear()
        if self.task_id is None:
            self.task_id = self.progress.add_task("cells", total=max(total_cells, 1))
        self.progress.update(self.task_id, completed=completed, total=max(total_cells, 1))
        self._refresh()

    def advance(self, method: str, failed: bool = False):
        """Record one finished cell of the given method."""
        if not self.enabled or self.task_id is None:
            return
        self.done[method] += 1
        if failed:
            self.failures[method] += 1
        self.progress.advance(self.task_id)
        self._refresh()

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.stop()
        return False


class ProgressLoggingHandler(logging.Handler):
    """Sends formatted records to a ProgressManager's log panel, coloured by level."""

    def __init__(self, progress_manager: ProgressManager):
        super().__init__()
        self.progress_manager = progress_manager

    def emit(self, record: logging.LogRecord):
        try:
            self.progress_manager.add_log(self.format(record), LEVEL_STYLES.get(record.levelno, "white"))
        except Exception:
            self.handleError(record)
