import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from walshbo import _kernels


@pytest.fixture(params=["native", "pure"])
def kernel_lane(request, monkeypatch):
    """Run the test once per kernel lane; skips native if not built."""
    if request.param == "native":
        if _kernels.native is None:
            pytest.skip("compiled kernels not built")
        lane = _kernels.native
    else:
        lane = _kernels.pure
    monkeypatch.setattr(_kernels, "maxflow_mincut", lane.maxflow_mincut)
    monkeypatch.setattr(_kernels, "bqp_scan", lane.bqp_scan)
    return request.param


def random_bqp(n, rng, submodular=False):
    quad = np.triu(rng.normal(size=(n, n)), 1)
    if submodular:
        quad = -np.abs(quad)
    from walshbo.afo import BqpProblem
    return BqpProblem(n=n, constant=float(rng.normal()),
                      linear=rng.normal(size=n), quadratic=quad)
