import numpy as np
import pytest

from irrsobol.construct import DirectionMatrix, SequenceSpec, build_sequence, is_matrix, sobol_matrix
from irrsobol.galois import Polynomial, field_make
from irrsobol.points import DigitalShift, PointGenerator, shift_rng
from irrsobol.quality import t_value, t_value_oracle

F2 = field_make(2)


def vdc(base=2, rows=20):
    return build_sequence(SequenceSpec(base=base, dim=1), rows, rows)


@pytest.mark.parametrize("n,x", [(0, 0.0), (1, 0.5), (3, 0.75), (6, 0.375)])
def test_van_der_corput(n, x):
    assert PointGenerator(vdc()).point_at(n)[0] == x


def test_block_examples():
    assert list(PointGenerator(vdc()).block(2)[:, 0]) == [0, 0.5, 0.25, 0.75]
    np.testing.assert_allclose(PointGenerator(vdc(3)).block(1)[:, 0], [0, 1 / 3, 2 / 3], rtol=0, atol=1e-15)


def test_figure_matrix_point():
    C = sobol_matrix(Polynomial.from_code(F2, 7), (1, 3), 20, 20)
    assert PointGenerator([C]).point_at(2)[0] == 0.75


def test_two_dim_isn_block():
    pts = PointGenerator(build_sequence(SequenceSpec(dim=2), 20, 20)).block(2)
    assert pts.tolist() == [[0, 0], [0.5, 0.5], [0.25, 0.75], [0.75, 0.25]]


def test_index_overflow():
    g = PointGenerator(vdc(rows=8))
    with pytest.raises(IndexError):
        g.point_at(256)
    with pytest.raises(ValueError):
        g.block(9)


@pytest.mark.parametrize("b", [2, 3, 4, 5])
def test_generic_path_matches_packed_or_direct(b):
    mats = build_sequence(SequenceSpec(base=b, dim=5, ordering="alternative"), 10, 10)
    g = PointGenerator(mats)
    pts = g.points(0, 200)
    for n in (0, 1, 7, 199):
        digits = []
        k = n
        while k:
            digits.append(k % b)
            k //= b
        for i, C in enumerate(mats):
            F = C.field
            y = np.zeros(C.rows, dtype=np.int64)
            for r, nd in enumerate(digits):
                y = F.add_table[y, F.mul_table[C.digits[:, r], nd]]
            assert pts[n, i] == pytest.approx(sum(int(d) * b ** -(j + 1) for j, d in enumerate(y)), abs=1e-15)


def test_base2_generic_agrees_with_packed():
    mats = build_sequence(SequenceSpec(dim=6, ordering="alternative"), 30, 30)
    g = PointGenerator(mats, DigitalShift.random(2, 6, 30, seed=3).digits)
    d_packed = g.digits_block(8)
    g._packed = None
    assert np.array_equal(g.digits_block(8), d_packed)


@pytest.mark.parametrize("b", [2, 3])
def test_zero_shift_is_identity(b):
    mats = build_sequence(SequenceSpec(base=b, dim=4), 12, 12)
    g = PointGenerator(mats)
    z = g.apply_shift(np.zeros((4, 12), dtype=np.int64))
    assert np.array_equal(g.block(5), z.block(5))


def test_shift_example():
    shift = np.zeros((1, 20), dtype=np.int64)
    shift[0, 0] = 1
    assert PointGenerator(vdc()).apply_shift(shift).point_at(0)[0] == 0.5


def test_shift_reproducible_and_seed_sensitive():
    a = DigitalShift.random(3, 4, 10, seed=7, replication=2).digits
    b = DigitalShift.random(3, 4, 10, seed=7, replication=2).digits
    c = DigitalShift.random(3, 4, 10, seed=7, replication=3).digits
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert a.min() >= 0 and a.max() <= 2
    # one stream per dimension: dimension j does not depend on how many dims are drawn
    assert np.array_equal(DigitalShift.random(3, 2, 10, 7, 2).digits, a[:2])
    assert np.array_equal(shift_rng(7, 2, 0).integers(0, 3, 10), a[0])


def test_malformed_shift():
    with pytest.raises(ValueError):
        PointGenerator(vdc()).apply_shift(np.zeros((2, 20), dtype=np.int64))
    with pytest.raises(ValueError):
        PointGenerator(vdc()).apply_shift(np.full((1, 20), 2))


@pytest.mark.parametrize("b,m", [(2, 12), (3, 7), (4, 6), (5, 5)])
def test_one_dimensional_blocks_are_grid_permutations(b, m):
    mats = build_sequence(SequenceSpec(base=b, dim=8, ordering="alternative"), 14, 14)
    pts = PointGenerator(mats).block(m)
    cells = np.floor(pts * b**m + 1e-9).astype(int)
    for i in range(len(mats)):
        assert sorted(cells[:, i]) == list(range(b**m))


@pytest.mark.parametrize("seed", range(5))
def test_shift_preserves_t_values(seed):
    mats = build_sequence(SequenceSpec(dim=6, ordering="alternative"), 20, 20)
    g = PointGenerator(mats)
    s = g.apply_shift(seed)
    for J in [(0, 1), (2, 5), (1, 3, 4)]:
        m = 8
        a = t_value_oracle(g.block(m)[:, J], m, 2)
        b = t_value_oracle(s.block(m)[:, J], m, 2)
        assert a == b == t_value([mats[j] for j in J], m)


def test_points_range_and_chunks():
    mats = build_sequence(SequenceSpec(dim=3), 53, 53)
    g = PointGenerator(mats).apply_shift(11)
    full = g.points(0, 1000)
    assert np.all((full >= 0) & (full < 1))
    assert np.array_equal(np.concatenate([g.points(0, 300), g.points(300, 700)]), full)


def test_mixed_fields_rejected():
    a = build_sequence(SequenceSpec(base=2, dim=1), 8, 8)
    b = build_sequence(SequenceSpec(base=3, dim=1), 8, 8)
    with pytest.raises(ValueError):
        PointGenerator(a + b)
