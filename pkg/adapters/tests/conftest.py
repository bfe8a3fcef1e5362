import numpy as np
import pytest

# this suite rides along in the repo-wide run; skip everything when only
# the scoring package is installed
try:
    from camscore_adapters import AdapterConfig
    from camscore_adapters import pipeline as pipeline_mod
    from camscore_adapters import registry as registry_mod
    from helpers_images import blob_image, write_png

    _HAVE_ADAPTERS = True
except ImportError:
    _HAVE_ADAPTERS = False

collect_ignore_glob = [] if _HAVE_ADAPTERS else ["*"]


def pytest_configure(config):
    # registered at the repo root too; repeating here keeps this suite
    # runnable standalone from the adapters directory
    config.addinivalue_line(
        "markers", "acceptance(n, title): ties a test to one numbered acceptance criterion"
    )


@pytest.fixture
def cfg(tmp_path):
    return AdapterConfig(out_dir=str(tmp_path / "bundles"))


@pytest.fixture
def sample_photo(tmp_path):
    arr = blob_image(
        96, 128, blobs=[(20, 40, 30, 60, (220, 40, 40)), (55, 80, 80, 110, (40, 60, 210))]
    )
    return write_png(tmp_path / "photo.png", arr)


@pytest.fixture
def registry_guard():
    """Registered backends and the live pipeline are process globals; put
    them back so one test's fakes cannot leak into another."""
    loaders = dict(registry_mod._LOADERS)
    active = pipeline_mod._ACTIVE
    yield
    registry_mod._LOADERS.clear()
    registry_mod._LOADERS.update(loaders)
    pipeline_mod._ACTIVE = active


@pytest.fixture
def rng():
    return np.random.default_rng(0xADA97)
