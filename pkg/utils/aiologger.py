import aiofiles
import asyncio
import os
import platform
import re
import traceback
from datetime import datetime, timedelta
from enum import IntEnum
from pathlib import Path
from typing import Any, Awaitable, Callable, Optional


class LogLevel(IntEnum):
    DEBUG = 10
    INFO = 20
    SUCCESS = 25
    WARNING = 30
    ERROR = 40
    CRITICAL = 50


LogHandlerCallable = Callable[[str, LogLevel, str, datetime], Awaitable[None]]

RETENTION_DAYS = 7
_TAG = re.compile(r"<(\w+)>(.*?)</\1>")
_COLORS = {
    'black': '\033[30m', 'red': '\033[31m', 'green': '\033[32m',
    'yellow': '\033[33m', 'blue': '\033[34m', 'magenta': '\033[35m',
    'cyan': '\033[36m', 'white': '\033[37m', 'reset': '\033[0m',
}
_LEVEL_COLORS = {
    'DEBUG': _COLORS['cyan'], 'INFO': _COLORS['blue'], 'WARNING': _COLORS['yellow'],
    'ERROR': _COLORS['red'], 'CRITICAL': '\033[41m', 'SUCCESS': _COLORS['green'],
}


def default_path_template() -> str:
    return str(Path(os.getenv("HOPREADER_LOG_DIR", "logs")) / "{date}.log")


def strip_tags(message: str) -> str:
    return _TAG.sub(r"\2", message)


def colorize(message: str) -> str:
    def replace_tag(match: re.Match) -> str:
        code = _COLORS.get(match.group(1).lower())
        return f"{code}{match.group(2)}{_COLORS['reset']}" if code else match.group(2)

    return _TAG.sub(replace_tag, message)


class AsyncLogger:
    """
    Логгер с очередью: записи кладутся в asyncio.Queue, отдельная задача
    пишет их в консоль и в файл по шаблону пути с датой.
    Экземпляр привязан к event loop, в котором был создан.
    """

    def __init__(self, path_template: str, level: LogLevel, to_console: bool,
                 custom_handler: Optional[LogHandlerCallable] = None):
        self.path_template = path_template
        self.level = level
        self.to_console = to_console
        self.custom_handler = custom_handler
        self._queue: asyncio.Queue[Any] = asyncio.Queue()
        self._worker_task: Optional[asyncio.Task[None]] = None
        self._current_log_path: Optional[Path] = None

        if platform.system() == 'Windows':
            self._init_windows_colors()

    async def start(self) -> None:
        await self._cleanup_old_logs()
        if self._worker_task is None:
            self._worker_task = asyncio.create_task(self._log_writer())

    async def _cleanup_old_logs(self) -> None:
        """Удаляет лог-файлы старше RETENTION_DAYS дней."""
        template_path = Path(self.path_template)
        log_dir = template_path.parent
        if not log_dir.exists():
            return
        cutoff = (datetime.now() - timedelta(days=RETENTION_DAYS)).timestamp()
        extension = template_path.suffix or ".log"

        def sync_cleanup() -> None:
            for file_path in log_dir.glob(f"*{extension}"):
                try:
                    if file_path.is_file() and file_path.stat().st_mtime < cutoff:
                        file_path.unlink()
                except OSError:
                    pass

        try:
            await asyncio.to_thread(sync_cleanup)
        except Exception as e:
            print(f"[WARN] Failed to cleanup old logs: {e}")

    def _init_windows_colors(self) -> None:
        try:
            import ctypes
            kernel32 = ctypes.windll.kernel32  # type: ignore
            kernel32.SetConsoleMode(kernel32.GetStdHandle(-11), 7)
        except Exception:
            pass

    def log_path(self, dt: datetime) -> Path:
        return Path(self.path_template.format(date=dt.strftime('%Y-%m-%d')))

    async def _log_writer(self) -> None:
        while True:
            record = await self._queue.get()
            try:
                if record is None:
                    break
                await self._emit(*record)
            except asyncio.CancelledError:
                break
            except Exception as e:
                print(f"CRITICAL - Error in logger worker: {e} - Original record: {record}", flush=True)
            finally:
                self._queue.task_done()

    async def _emit(self, dt: datetime, level: LogLevel, message: str, to_console: bool, to_file: bool) -> None:
        dt_str = dt.strftime('%Y-%m-%d %H:%M:%S.%f')[:-3]
        if self.custom_handler:
            try:
                await self.custom_handler(dt_str, level, message, dt)
            except Exception as handler_e:
                print(f"CRITICAL - Error in custom log handler: {handler_e}", flush=True)

        if to_console:
            color = _LEVEL_COLORS.get(level.name, _COLORS['reset'])
            print(f"{dt_str} - {color}[{level.name}]{_COLORS['reset']} - {colorize(message)}")

        if to_file:
            path = self.log_path(dt)
            if self._current_log_path != path:
                path.parent.mkdir(parents=True, exist_ok=True)
                self._current_log_path = path
            async with aiofiles.open(path, mode='a', encoding='utf-8') as f:
                await f.write(f"{dt_str} - {level.name} - {strip_tags(message)}\n")

    async def write(self, level: LogLevel, message: Any, to_console: Optional[bool], to_file: bool,
                    exc_info: bool) -> None:
        if level < self.level:
            return
        text = str(message)
        if exc_info:
            text += "\n" + traceback.format_exc()
        console = self.to_console if to_console is None else to_console
        await self._queue.put((datetime.now(), level, text, console, to_file))

    async def flush(self) -> None:
        await self._queue.join()

    async def shutdown(self) -> None:
        await self._queue.put(None)
        await self._queue.join()
        if self._worker_task:
            self._worker_task.cancel()
            try:
                await self._worker_task
            except asyncio.CancelledError:
                pass
            self._worker_task = None


class LoggerProxy:
    """
    Модульный `log`: настоящий логгер создаётся лениво в текущем event loop.
    configure() меняет путь, уровень и вывод в консоль; reset() отбрасывает
    экземпляр (следующий вызов создаст новый в новом цикле).
    """

    def __init__(self, path_template: Optional[str] = None, level: LogLevel = LogLevel.INFO,
                 to_console: bool = True, custom_handler: Optional[LogHandlerCallable] = None):
        self._path_template = path_template
        self._level = level
        self._to_console = to_console
        self._custom_handler = custom_handler
        self._real_logger: Optional[AsyncLogger] = None
        self._loop: Optional[asyncio.AbstractEventLoop] = None

    @property
    def path_template(self) -> str:
        return self._path_template or default_path_template()

    def configure(self, path_template: Optional[str] = None, level: Optional[LogLevel] = None,
                  to_console: Optional[bool] = None) -> None:
        if path_template is not None:
            self._path_template = path_template
        if level is not None:
            self._level = level
        if to_console is not None:
            self._to_console = to_console
        if self._real_logger is not None:
            self._real_logger.path_template = self.path_template
            self._real_logger.level = self._level
            self._real_logger.to_console = self._to_console

    def reset(self) -> None:
        self._real_logger = None
        self._loop = None

    async def _ensure_initialized(self) -> AsyncLogger:
        loop = asyncio.get_running_loop()
        if self._real_logger is None or self._loop is not loop:
            logger = AsyncLogger(self.path_template, self._level, self._to_console, self._custom_handler)
            self._real_logger, self._loop = logger, loop
            await logger.start()
        return self._real_logger

    async def set_custom_handler(self, handler: LogHandlerCallable) -> None:
        self._custom_handler = handler
        (await self._ensure_initialized()).custom_handler = handler

    async def _write(self, level: LogLevel, message: Any, to_console: Optional[bool], to_file: bool,
                     exc_info: bool) -> None:
        logger = await self._ensure_initialized()
        await logger.write(level, message, to_console, to_file, exc_info)

    async def debug(self, message: Any, to_console: Optional[bool] = None, to_file: bool = True, exc_info: bool = False) -> None:
        await self._write(LogLevel.DEBUG, message, to_console, to_file, exc_info)

    async def info(self, message: Any, to_console: Optional[bool] = None, to_file: bool = True, exc_info: bool = False) -> None:
        await self._write(LogLevel.INFO, message, to_console, to_file, exc_info)

    async def success(self, message: Any, to_console: Optional[bool] = None, to_file: bool = True, exc_info: bool = False) -> None:
        await self._write(LogLevel.SUCCESS, message, to_console, to_file, exc_info)

    async def warning(self, message: Any, to_console: Optional[bool] = None, to_file: bool = True, exc_info: bool = False) -> None:
        await self._write(LogLevel.WARNING, message, to_console, to_file, exc_info)

    async def error(self, message: Any, to_console: Optional[bool] = None, to_file: bool = True, exc_info: bool = False) -> None:
        await self._write(LogLevel.ERROR, message, to_console, to_file, exc_info)

    async def critical(self, message: Any, to_console: Optional[bool] = None, to_file: bool = True, exc_info: bool = False) -> None:
        await self._write(LogLevel.CRITICAL, message, to_console, to_file, exc_info)

    async def flush(self) -> None:
        if self._real_logger is not None and self._loop is asyncio.get_running_loop():
            await self._real_logger.flush()

    async def shutdown(self) -> None:
        if self._real_logger is not None and self._loop is asyncio.get_running_loop():
            await self._real_logger.shutdown()
        self.reset()


log: LoggerProxy = LoggerProxy(level=LogLevel.INFO)
