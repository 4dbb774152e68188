import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from util import load_photos, pristine_model_from, svr_model_from  # noqa: E402


@pytest.fixture(scope="session")
def photos():
    return load_photos()


@pytest.fixture(scope="session")
def pristine_model(photos):
    return pristine_model_from(photos)


@pytest.fixture(scope="session")
def svr_model(photos):
    return svr_model_from(photos)
