import pytest

from rearrange_pl import Grid, GridFunction, SetMask


@pytest.fixture
def line_grid():
    return Grid((-4.0,), (4.0,), (256,))


@pytest.fixture
def square_grid():
    return Grid((-4.0, -4.0), (4.0, 4.0), (64, 64))


def interval_mask(grid: Grid, a: float, b: float) -> SetMask:
    """Cells whose center lies in the open interval (a, b)."""
    x = grid.centers(0)
    return SetMask(grid, (x > a) & (x < b))


def interval_indicator(grid: Grid, a: float, b: float) -> GridFunction:
    return interval_mask(grid, a, b).indicator()
