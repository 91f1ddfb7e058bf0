import logging

from logger import ROOT_NAME, get_logger, set_console_level, setup_logger


def test_module_loggers_share_the_package_handlers():
    first = get_logger("core.example")
    again = get_logger("core.example")
    assert first is again
    assert first.name == f"{ROOT_NAME}.core.example"
    assert first.propagate
    assert not first.handlers


def test_setup_is_idempotent():
    root = setup_logger()
    count = len(root.handlers)
    setup_logger()
    get_logger("services.example")
    assert len(root.handlers) == count


def test_set_console_level_only_touches_the_console():
    root = setup_logger()
    console = [h for h in root.handlers if type(h) is logging.StreamHandler]
    files = [h for h in root.handlers if h not in console]
    before = console[0].level
    try:
        set_console_level(logging.DEBUG)
        assert console[0].level == logging.DEBUG
        assert all(h.level == logging.DEBUG for h in files)
    finally:
        set_console_level(before)
