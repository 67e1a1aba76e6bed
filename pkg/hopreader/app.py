import asyncio
import os
import signal
import sys
from typing import Optional, Sequence

from dotenv import load_dotenv

from hopreader import cli
from utils.aiologger import log

EXIT_INTERRUPTED = 130
SHUTDOWN_REQUESTED = False
_MAIN_TASK: Optional[asyncio.Task] = None


def signal_handler(sig, frame):
    global SHUTDOWN_REQUESTED
    # второй Ctrl+C завершает процесс сразу
    if SHUTDOWN_REQUESTED:
        os._exit(EXIT_INTERRUPTED)
    SHUTDOWN_REQUESTED = True
    if _MAIN_TASK is not None:
        _MAIN_TASK.get_loop().call_soon_threadsafe(_MAIN_TASK.cancel)


async def main_loop(argv: Optional[Sequence[str]]) -> int:
    global _MAIN_TASK
    _MAIN_TASK = asyncio.current_task()
    try:
        return await cli.main(argv)
    except asyncio.CancelledError:
        await log.warning("Interrupted, stopping")
        return EXIT_INTERRUPTED
    finally:
        await log.shutdown()


def run(argv: Optional[Sequence[str]] = None) -> int:
    global SHUTDOWN_REQUESTED
    SHUTDOWN_REQUESTED = False
    load_dotenv()
    loop = asyncio.new_event_loop()
    asyncio.set_event_loop(loop)
    signal.signal(signal.SIGINT, signal_handler)
    signal.signal(signal.SIGTERM, signal_handler)
    try:
        return loop.run_until_complete(main_loop(argv))
    except Exception:
        loop.run_until_complete(log.critical("Unhandled error", exc_info=True))
        loop.run_until_complete(log.shutdown())
        return cli.EXIT_DATA
    finally:
        loop.close()
        asyncio.set_event_loop(None)
        signal.signal(signal.SIGINT, signal.default_int_handler)
        signal.signal(signal.SIGTERM, signal.SIG_DFL)


if __name__ == "__main__":
    sys.exit(run())
