from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from eotbench.model import Domain, Review

DATA_DIR = Path(__file__).parent / "data"
GOLDEN_DIR = Path(__file__).parent / "golden"


def make_review(
    review_id: str = "r1",
    text: str = "The blender works perfectly and arrived two days early.",
    domain: Domain = Domain.HOME,
    item_id: str = "item-1",
    timestamp: int | None = None,
) -> Review:
    return Review(review_id=review_id, text=text, domain=domain, item_id=item_id, timestamp=timestamp)


@pytest.fixture
def sample_review() -> Review:
    return make_review()
