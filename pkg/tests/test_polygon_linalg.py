from fractions import Fraction as F

from hypothesis import given, strategies as st

from napt import polygon as pg
from napt.linalg import lagrange_eval, solve_dense, solve_sparse

square = [(F(0), F(0)), (F(1), F(0)), (F(1), F(1)), (F(0), F(1))]


def test_hull_area_centroid_of_square():
    hull = pg.convex_hull(square + [(F(1, 2), F(1, 2))])
    assert sorted(hull) == sorted(square)
    assert pg.area(hull) == 1
    assert pg.centroid(hull) == (F(1, 2), F(1, 2))


def test_clip_halves_the_square():
    half = pg.clip(square, (1, 0), F(1, 2))
    assert pg.area(half) == F(1, 2)
    assert pg.clip(square, (1, 0), 2) == []


def test_convex_position():
    assert pg.is_convex_position(square)
    assert not pg.is_convex_position(square + [(F(1, 2), F(1, 2))])


def test_sparse_solver_matches_dense():
    rows = {"x": {"x": F(2), "y": F(-1)}, "y": {"x": F(-1), "y": F(2), "z": F(-1)}, "z": {"y": F(-1), "z": F(2)}}
    rhs = {"x": F(1), "y": F(0), "z": F(1)}
    sol = solve_sparse(rows, rhs)
    dense = solve_dense([[2, -1, 0], [-1, 2, -1], [0, -1, 2]], [1, 0, 1])
    assert [sol["x"], sol["y"], sol["z"]] == dense == [1, 1, 1]


pts = st.lists(st.tuples(st.integers(-4, 4), st.integers(-4, 4)), min_size=3, max_size=10)


@given(pts)
def test_hull_contains_all_points(ps):
    ps = [(F(x), F(y)) for x, y in ps]
    hull = pg.convex_hull(ps)
    if len(hull) >= 3:
        assert all(pg.point_in_polygon(p, hull) for p in ps)
        assert pg.area(hull) > 0


@given(st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=4), min_size=4, max_size=4))
def test_lagrange_reproduces_cubics(coef):
    f = lambda x: sum(c * x ** i for i, c in enumerate(coef))
    xs = [F(0), F(1), F(2), F(3)]
    assert lagrange_eval(xs, [f(x) for x in xs], F(7, 2)) == f(F(7, 2))
