"""
Shared fixtures: seeded generators, bundled specs bound to seeded weights, a generated corpus
"""
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from config.logging_config import setup_logging  # noqa: E402
from core.weight_store import save_weights  # noqa: E402
from models.model_spec import ModelSpec  # noqa: E402
from services.corpus import write_corpus  # noqa: E402
from services.model_binding import bind, seed_weights  # noqa: E402

SPECS_DIR = ROOT / "specs"

@pytest.fixture(autouse=True)
def quiet_logging():
    setup_logging("WARNING")

@pytest.fixture
def rng():
    return np.random.default_rng(20240607)

@pytest.fixture(scope="session")
def specs_dir():
    return SPECS_DIR

@pytest.fixture(scope="session")
def cnn_spec_path():
    return SPECS_DIR / "tiny-cnn.json"

@pytest.fixture(scope="session")
def stl_spec_path():
    return SPECS_DIR / "tiny-stl.json"

@pytest.fixture(scope="session")
def cnn_spec(cnn_spec_path):
    return ModelSpec.from_file(cnn_spec_path)

@pytest.fixture(scope="session")
def stl_spec(stl_spec_path):
    return ModelSpec.from_file(stl_spec_path)

@pytest.fixture(scope="session")
def cnn_model(cnn_spec):
    return bind(cnn_spec, seed_weights(cnn_spec, seed=0))

@pytest.fixture(scope="session")
def stl_model(stl_spec):
    return bind(stl_spec, seed_weights(stl_spec, seed=0))

@pytest.fixture(scope="session")
def weights_dir(tmp_path_factory, cnn_spec, stl_spec):
    """Seeded AMSRW1 files for both bundled specs"""
    out = tmp_path_factory.mktemp("weights")
    save_weights(seed_weights(cnn_spec, seed=0), out / "tiny-cnn.amsrw")
    save_weights(seed_weights(stl_spec, seed=0), out / "tiny-stl.amsrw")
    return out

@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    write_corpus(out)
    return out
