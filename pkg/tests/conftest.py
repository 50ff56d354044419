import json
import pathlib

import pytest

from inspection_game import InspectionInstance, parse_instance

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def toy_instance() -> InspectionInstance:
    """Four locations, seven components, overlapping monitoring sets,
    homogeneous p = 0.5; the running hand-checked example."""
    return parse_instance((DATA / "toy_network.json").read_text())


@pytest.fixture(scope="session")
def matching_pennies() -> InspectionInstance:
    return InspectionInstance(
        locations=["v1", "v2"],
        components=["e1", "e2"],
        monitoring={"v1": ["e1"], "v2": ["e2"]},
        detection_probs={"v1": 1.0, "v2": 1.0},
        r_D=1,
        r_A=1,
    )


@pytest.fixture(scope="session")
def single_location() -> InspectionInstance:
    return InspectionInstance(
        locations=["v1"],
        components=["e1"],
        monitoring={"v1": ["e1"]},
        detection_probs={"v1": 0.6},
        r_D=1,
        r_A=1,
    )


@pytest.fixture(scope="session")
def toy_document() -> dict:
    return json.loads((DATA / "toy_network.json").read_text())
