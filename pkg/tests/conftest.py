import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from impstudio.design import BBox, DesignClass, Element, ElementKind, VectorDesign


def make_design(boxes, canvas=(100.0, 100.0), kinds=None, design_class=None, ids=None):
    """Build a design from a list of (x, y, w, h) boxes."""
    kinds = kinds or [ElementKind.SHAPE] * len(boxes)
    ids = ids or [f"e{i + 1}" for i in range(len(boxes))]
    elements = tuple(
        Element(ids[i], kinds[i], BBox(*boxes[i]), z=i) for i in range(len(boxes))
    )
    return VectorDesign(canvas[0], canvas[1], elements, design_class)


@pytest.fixture
def square_design():
    return make_design([(10, 10, 30, 20), (60, 60, 25, 25)])


def uniform_map(w, h, value):
    from impstudio.maps import ImportanceMap

    return ImportanceMap(w, h, np.full((h, w), float(value)))
