"""Service fixture for the frontend integration tests.

Builds a small deterministic checkpoint in a temp dir and serves it on the
given port. Usage: python3 launch_service.py PORT
"""

import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

import uvicorn

from gramedit.geometry import SamplingSpec
from gramedit.model import init_model, save_model
from gramedit.service import create_app

port = int(sys.argv[1])
ckpt = Path(tempfile.mkdtemp()) / "fixture.ckpt"
save_model(init_model(3, 16, 2, 10.0, 2, seed=7), ckpt)
app = create_app(
    str(ckpt),
    sampling=SamplingSpec("volume", 1000, seed=11),
    resolution_cap=64,
)
uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
