import copy

import pytest

import mma_dispatch as mma


@pytest.fixture
def small_config():
    # Four-hour day on the toy geometry, light load.
    cfg = copy.deepcopy(mma.toy_config())
    cfg["day_length_s"] = 4 * 3600
    cfg["history_days"] = 5
    for region, q in zip(cfg["regions"], (300, 300, 120)):
        region["demand"]["quantity"] = q
        region["demand"]["mixture"] = [0.5, 0.5, 6, 4, 16, 4]
        region["supply"]["quantity"] = 25
        region["supply"]["mixture"] = [1, 0, 3, 3, 0, 1]
    return cfg
