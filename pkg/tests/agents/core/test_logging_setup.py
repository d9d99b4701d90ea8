import logging

from agents.core.logging_setup import CRITICAL_LOG, KeyValueFormatter, configure_logging


def _record(message, fields=None, level=logging.INFO):
    record = logging.LogRecord("nnet.trainer", level, __file__, 1, message, None, None)
    if fields is not None:
        record.fields = fields
    return record


def test_key_value_rendering():
    line = KeyValueFormatter().format(_record("Epoch 3", {"lr": 0.0027, "epoch": 3, "note": 'a "b"'}))
    assert " level=INFO logger=nnet.trainer " in line
    assert line.startswith("ts=")
    assert 'msg="Epoch 3"' in line
    assert line.endswith('epoch=3 lr=0.0027 note="a \\"b\\""')


def test_plain_values_are_unquoted():
    line = KeyValueFormatter().format(_record("done"))
    assert line.endswith("msg=done")


def test_errors_reach_the_critical_log(tmp_path):
    root = configure_logging("INFO", tmp_path)
    try:
        logger = logging.getLogger("cranial_test")
        logger.info("routine")
        logger.error("broken case", extra={"fields": {"error_category": "data"}})
        for handler in root.handlers:
            handler.flush()
        text = (tmp_path / "logs" / CRITICAL_LOG).read_text()
        assert "broken case" in text and "error_category=data" in text
        assert "routine" not in text
        configure_logging("INFO", tmp_path)
        assert sum(1 for h in root.handlers if getattr(h, "_cranial", False)) == 2
    finally:
        for handler in [h for h in root.handlers if getattr(h, "_cranial", False)]:
            root.removeHandler(handler)
            handler.close()
