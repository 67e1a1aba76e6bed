from datetime import datetime

from utils.aiologger import LogLevel, colorize, log, strip_tags


def test_tags():
    assert strip_tags("saved <green>model.smnt</green> ok") == "saved model.smnt ok"
    assert "\033[32m" in colorize("<green>x</green>")
    assert colorize("<unknown>x</unknown>") == "x"


async def test_records_reach_daily_file(tmp_path):
    log.configure(path_template=str(tmp_path / "{date}.log"), level=LogLevel.INFO, to_console=False)
    await log.debug("hidden")
    await log.info("epoch <cyan>1</cyan> done")
    await log.warning("clamped")
    await log.flush()
    text = (tmp_path / f"{datetime.now():%Y-%m-%d}.log").read_text(encoding="utf-8")
    assert "INFO - epoch 1 done" in text
    assert "WARNING - clamped" in text
    assert "hidden" not in text


async def test_shutdown_allows_restart(tmp_path):
    log.configure(path_template=str(tmp_path / "{date}.log"), to_console=False)
    await log.info("first")
    await log.shutdown()
    await log.info("second")
    await log.flush()
    text = (tmp_path / f"{datetime.now():%Y-%m-%d}.log").read_text(encoding="utf-8")
    assert "first" in text and "second" in text
