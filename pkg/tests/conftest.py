from __future__ import annotations

import pytest

from lamshoot import IntegratorConfig, Params, find_rstar


@pytest.fixture(scope="session")
def params22() -> Params:
    return Params(2, 2, -0.5)


@pytest.fixture(scope="session")
def curve22(params22):
    return find_rstar(params22, IntegratorConfig())
