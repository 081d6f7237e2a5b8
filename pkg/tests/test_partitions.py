import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ells.errors import DomainError, UnsupportedError
from ells.partitions import (
    EMPTY,
    Box,
    Partition,
    boundary_boxes,
    dimension,
    enumerate_partitions,
    hook_length,
    moment_pk,
    partitions_of,
    profile,
)


@st.composite
def partitions(draw, max_rows=7, max_part=8):
    rows = draw(st.lists(st.integers(1, max_part), max_size=max_rows))
    return Partition(tuple(sorted(rows, reverse=True)))


def count_tableaux(lam: Partition) -> int:
    """Brute force: number of ways to remove corner boxes one at a time."""
    if lam.size == 0:
        return 1
    _, removable = boundary_boxes(lam)
    return sum(count_tableaux(lam.remove_box(b.i)) for b in removable)


class TestPartition:
    def test_rejects_increasing_rows(self):
        with pytest.raises(DomainError):
            Partition((1, 2))

    def test_rejects_nonpositive_rows(self):
        with pytest.raises(DomainError):
            Partition((2, 0))

    def test_size_cached(self):
        assert Partition((3, 2, 2)).size == 7
        assert EMPTY.size == 0

    @given(partitions())
    def test_transpose_involution(self, lam):
        assert lam.transpose().transpose() == lam
        assert lam.transpose().size == lam.size

    @given(partitions())
    def test_hooks_transpose_invariant(self, lam):
        assert sorted(lam.hooks) == sorted(lam.transpose().hooks)

    def test_json_round_trip(self):
        lam = Partition((3, 2))
        assert lam.to_json() == "[3, 2]"
        assert Partition.from_json(lam.to_json()) == lam
        assert Partition.from_json("[]") == EMPTY

    def test_json_rejects_garbage(self):
        with pytest.raises(DomainError):
            Partition.from_json('{"a": 1}')


class TestHooks:
    def test_small_cases(self):
        assert hook_length(Partition((2, 1)), Box(1, 1)) == 3
        assert hook_length(Partition((1,)), Box(1, 1)) == 1

    def test_all_hooks_of_32(self):
        lam = Partition((3, 2))
        got = {tuple(b): hook_length(lam, b) for b in lam.boxes()}
        assert got == {(1, 1): 4, (1, 2): 3, (1, 3): 1, (2, 1): 2, (2, 2): 1}
        assert lam.hooks == (4, 3, 1, 2, 1)

    def test_outside_box(self):
        with pytest.raises(DomainError):
            hook_length(Partition((2, 1)), Box(2, 2))

    @given(partitions())
    def test_hook_is_arm_plus_leg_plus_one(self, lam):
        for b, h in zip(lam.boxes(), lam.hooks):
            assert h == lam.arm(b) + lam.leg(b) + 1


class TestDimension:
    @pytest.mark.parametrize("rows,d", [((2, 1), 2), ((), 1), ((2, 2), 2), ((3, 2), 5)])
    def test_values(self, rows, d):
        assert dimension(Partition(rows)) == d

    def test_matches_tableau_count(self):
        for lam in enumerate_partitions(7):
            assert dimension(lam) == count_tableaux(lam)

    def test_hook_formula_exact(self):
        for lam in enumerate_partitions(12):
            assert dimension(lam) * math.prod(lam.hooks) == math.factorial(lam.size)

    def test_large_is_exact_integer(self):
        lam = Partition((10, 8, 5, 3, 1))
        assert isinstance(dimension(lam), int)
        assert dimension(lam) * math.prod(lam.hooks) == math.factorial(27)

    @pytest.mark.parametrize("n", range(11))
    def test_sum_of_squares(self, n):
        assert sum(dimension(lam) ** 2 for lam in partitions_of(n)) == math.factorial(n)


class TestBoundary:
    def test_empty(self):
        assert boundary_boxes(EMPTY) == ([Box(1, 1)], [])

    def test_single_box(self):
        assert boundary_boxes(Partition((1,))) == ([Box(1, 2), Box(2, 1)], [Box(1, 1)])

    def test_21(self):
        add, rem = boundary_boxes(Partition((2, 1)))
        assert add == [Box(1, 3), Box(2, 2), Box(3, 1)]
        assert rem == [Box(1, 2), Box(2, 1)]

    @given(partitions())
    def test_add_then_remove(self, lam):
        add, rem = boundary_boxes(lam)
        assert len(add) == len(rem) + 1 == len(set(lam.rows)) + 1
        for b in add:
            assert lam.add_box(b.i).remove_box(b.i) == lam
        for b in rem:
            assert lam.remove_box(b.i).add_box(b.i) == lam

    def test_content_convention(self):
        assert Box(2, 1).content == 1
        assert Box(1, 2).content == -1


class TestProfile:
    def test_empty(self):
        f = profile(EMPTY, 1.0)
        xs = np.linspace(-3, 3, 13)
        assert np.allclose(f(xs), np.abs(xs))

    def test_single_box(self):
        f = profile(Partition((1,)), 1.0)
        assert f(0.0) == 2.0
        assert f(1.0) == 1.0 and f(-1.0) == 1.0
        xs = np.array([-3.0, -1.5, 1.5, 4.0])
        assert np.allclose(f(xs), np.abs(xs))

    def test_area_is_twice_size(self):
        for lam in enumerate_partitions(6):
            assert profile(lam, 0.5).excess_area() == 2 * lam.size

    @given(partitions(), st.floats(0.1, 3.0))
    def test_lipschitz_and_above_abs(self, lam, hbar):
        f = profile(lam, hbar)
        xs = np.linspace(-12 * hbar, 12 * hbar, 481)
        v = f(xs)
        assert np.all(v >= np.abs(xs) - 1e-12)
        assert np.all(np.abs(np.diff(v)) <= np.diff(xs) + 1e-12)

    @given(partitions())
    def test_slopes_alternate(self, lam):
        pts = profile(lam).breakpoints
        slopes = [(b[1] - a[1]) / (b[0] - a[0]) for a, b in zip(pts, pts[1:])]
        assert all(s in (-1, 1) for s in slopes)
        assert all(s != t for s, t in zip(slopes, slopes[1:]))

    @given(partitions())
    def test_transpose_mirrors(self, lam):
        f, g = profile(lam, 0.7), profile(lam.transpose(), 0.7)
        xs = np.linspace(-8, 8, 161)
        assert np.allclose(f(xs), g(-xs))


class TestMoments:
    def test_values(self):
        assert moment_pk(EMPTY, 1) == Fraction(-1, 24)
        assert moment_pk(EMPTY, 2) == 0
        assert moment_pk(Partition((1,)), 1) == Fraction(23, 24)

    def test_unsupported(self):
        with pytest.raises(UnsupportedError):
            moment_pk(EMPTY, 13)

    def test_transpose_relation(self):
        # transposing swaps Frobenius coordinates, so p_k - p_k(empty) picks up (-1)^(k+1)
        for lam in enumerate_partitions(6):
            for k in range(1, 6):
                lhs = moment_pk(lam.transpose(), k)
                rhs = (-1) ** (k + 1) * moment_pk(lam, k) + (1 + (-1) ** k) * moment_pk(EMPTY, k)
                assert lhs == rhs

    def test_first_moment_counts_boxes(self):
        for lam in enumerate_partitions(7):
            assert moment_pk(lam, 1) - moment_pk(EMPTY, 1) == lam.size


class TestEnumeration:
    def test_zero(self):
        assert list(enumerate_partitions(0)) == [EMPTY]

    def test_counts(self):
        sizes = [lam.size for lam in enumerate_partitions(4)]
        assert [sizes.count(n) for n in range(5)] == [1, 1, 2, 3, 5]

    def test_total_up_to_ten(self):
        # 1+1+2+3+5+7+11+15+22+30+42
        assert sum(1 for _ in enumerate_partitions(10)) == 139

    def test_distinct_and_grouped(self):
        parts = list(enumerate_partitions(8))
        assert len(set(parts)) == len(parts)
        assert [p.size for p in parts] == sorted(p.size for p in parts)

    def test_negative(self):
        with pytest.raises(DomainError):
            list(enumerate_partitions(-1))

    def test_matches_brute_force(self):
        for n in range(8):
            brute = {
                tuple(sorted(c, reverse=True))
                for k in range(n + 1)
                for c in itertools.product(range(1, n + 1), repeat=k)
                if sum(c) == n
            }
            assert {p.rows for p in partitions_of(n)} == brute
