import logging

from fusionlasso.utils.misc import parallel_map, set_logging_level


def test_set_logging_level_restores():
    logger = logging.getLogger("fusionlasso.tests.restore")
    logger.setLevel(logging.INFO)
    with set_logging_level(logger, logging.WARNING):
        assert logger.level == logging.WARNING
    assert logger.level == logging.INFO


def test_set_logging_level_never_lowers():
    logger = logging.getLogger("fusionlasso.tests.nested")
    logger.setLevel(logging.INFO)
    with set_logging_level(logger, logging.ERROR):
        with set_logging_level(logger, logging.WARNING):
            assert logger.level == logging.ERROR
        assert logger.level == logging.ERROR
    assert logger.level == logging.INFO


def test_set_logging_level_inside_thread_pool():
    logger = logging.getLogger("fusionlasso.tests.pool")
    logger.setLevel(logging.INFO)

    def quiet_call(i):
        with set_logging_level(logger, logging.WARNING):
            return logger.getEffectiveLevel()

    with set_logging_level(logger, logging.ERROR):
        levels = parallel_map(quiet_call, [{"i": i} for i in range(20)], n_jobs=4)
    assert levels == [logging.ERROR] * 20
    assert logger.level == logging.INFO
