from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path

import pytest

from asvqe.integrals import read_fcidump

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "asvqe" / "data" / "fixtures"

H2_DISTANCES = ("0.500", "0.600", "0.700", "0.735", "0.800", "0.900", "1.000", "1.200", "1.500",
                "2.000", "2.500", "3.000", "5.000")
CO2MG_DISTANCES = ("1.70", "1.80", "1.85", "1.90", "2.00", "2.10", "2.30", "2.60", "3.00")
CO2MG_GRID = tuple(f"co2mg_grid_d{d}_a{a}.fcidump" for d in ("1.80", "2.00", "2.20") for a in ("-30", "+0", "+30"))


@lru_cache(maxsize=None)
def load(name: str, threshold: float = 1e-12):
    return read_fcidump(FIXTURES / name, threshold=threshold)


@lru_cache(maxsize=None)
def fixture_metadata() -> dict:
    return json.loads((FIXTURES / "fixtures.json").read_text())


@pytest.fixture(scope="session")
def h2():
    return load("h2_0.735.fcidump")


@pytest.fixture(scope="session")
def co2mg():
    return load("co2mg_d1.85.fcidump")
