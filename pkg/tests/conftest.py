import math

import pytest

from feedsched.geometry import ParametricCurve

W = math.sqrt(2.0) / 2.0


def make_line(start=(0.0, 0.0), end=(100.0, 0.0)):
    return ParametricCurve(
        degree=1,
        control_points=(start, end),
        weights=(1.0, 1.0),
        knots=(0.0, 0.0, 1.0, 1.0),
    )


def make_quarter_circle(radius=5.0):
    # exact circular arc from (r, 0) to (0, r)
    return ParametricCurve(
        degree=2,
        control_points=((radius, 0.0), (radius, radius), (0.0, radius)),
        weights=(1.0, W, 1.0),
        knots=(0.0, 0.0, 0.0, 1.0, 1.0, 1.0),
    )


def make_full_circle(radius=5.0):
    r = radius
    return ParametricCurve(
        degree=2,
        control_points=(
            (r, 0.0), (r, r), (0.0, r), (-r, r), (-r, 0.0),
            (-r, -r), (0.0, -r), (r, -r), (r, 0.0),
        ),
        weights=(1.0, W, 1.0, W, 1.0, W, 1.0, W, 1.0),
        knots=(0.0, 0.0, 0.0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1.0, 1.0, 1.0),
    )


@pytest.fixture
def line_curve():
    return make_line()


@pytest.fixture
def quarter_circle():
    return make_quarter_circle()


@pytest.fixture
def full_circle():
    return make_full_circle()
