import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irrsobol.construct import (
    DirectionMatrix,
    SequenceSpec,
    build_sequence,
    default_rows,
    is_matrix,
    isn_direction_matrix,
    isn_first_row,
    laurent_coeffs,
    niederreiter_matrix,
    one_row_direction_matrix,
    recurrence_coeffs,
    sobol_matrix,
)
from irrsobol.galois import Polynomial, field_for_base, field_make, irreducibles_of_degree
from irrsobol.io import JoeKuoRecord

F2 = field_make(2)
X2X1 = Polynomial.from_code(F2, 7)

# the two 5 x 9 grids as printed next to each other
SOBOL_PRINTED = np.array([
    [1, 1, 0, 1, 1, 0, 1, 1, 0],
    [0, 1, 1, 0, 1, 1, 0, 1, 1],
    [0, 0, 1, 0, 1, 0, 0, 0, 1],
    [0, 0, 0, 1, 1, 1, 0, 0, 0],
    [0, 0, 0, 0, 1, 1, 1, 0, 1],
])
NIED_PRINTED = np.array([
    [0, 1, 1, 0, 1, 1, 1, 0, 1],
    [1, 1, 0, 1, 1, 0, 1, 1, 0],
    [0, 0, 0, 1, 0, 1, 0, 0, 0],
    [0, 0, 1, 0, 1, 0, 0, 0, 1],
    [0, 0, 0, 0, 0, 1, 1, 1, 0],
])
# entries (row, col), 1-based, where the printed grids disagree with the
# recurrence / long division
SOBOL_MISPRINTS = {(4, 5)}
NIED_MISPRINTS = {(1, 7), (1, 8)}


def _compare_except(actual, printed, misprints):
    for j in range(printed.shape[0]):
        for r in range(printed.shape[1]):
            if (j + 1, r + 1) in misprints:
                assert actual[j, r] != printed[j, r]
            else:
                assert actual[j, r] == printed[j, r], (j + 1, r + 1)


def test_figure_sobol_matrix():
    C = sobol_matrix(X2X1, (1, 3), 5, 9)
    _compare_except(C.digits, SOBOL_PRINTED, SOBOL_MISPRINTS)
    assert C.digits[3, 4] == 0


def test_figure_niederreiter_matrix():
    C = niederreiter_matrix(X2X1, 5, 9)
    _compare_except(C.digits, NIED_PRINTED, NIED_MISPRINTS)
    assert list(C.digits[0]) == [0, 1, 1, 0, 1, 1, 0, 1, 1]


def test_figure_matrices_agree_after_row_swap():
    S = sobol_matrix(X2X1, (1, 3), 6, 9).digits
    N = niederreiter_matrix(X2X1, 6, 9).digits
    assert np.array_equal(S, N[[1, 0, 3, 2, 5, 4]])


@pytest.mark.parametrize(
    "num,den,expected",
    [
        ((1,), (1, 1, 1), [0, 1, 1, 0, 1, 1, 0, 1, 1]),
        ((0, 1), (1, 1, 1), [1, 1, 0, 1, 1, 0, 1, 1, 0]),
        ((1,), (1, 0, 1, 0, 1), [0, 0, 0, 1, 0, 1, 0, 0, 0]),  # 1/(x^2+x+1)^2
    ],
)
def test_laurent_coeffs_examples(num, den, expected):
    assert list(laurent_coeffs(Polynomial(F2, num), Polynomial(F2, den), 9)) == expected


def test_laurent_zero_denominator():
    with pytest.raises(ZeroDivisionError):
        laurent_coeffs(Polynomial(F2, (1,)), Polynomial(F2, ()), 4)


def test_niederreiter_row5():
    assert list(niederreiter_matrix(X2X1, 5, 9).digits[4]) == [0, 0, 0, 0, 0, 1, 1, 1, 0]


@pytest.mark.parametrize("b", [2, 3, 4])
def test_degree_one_x_gives_identity(b):
    F = field_for_base(b)
    x = Polynomial.from_code(F, b)
    assert np.array_equal(niederreiter_matrix(x, 8, 8).digits, np.eye(8, dtype=int))
    assert np.array_equal(is_matrix(x, isn_direction_matrix(x), 8, 8).digits, np.eye(8, dtype=int))


def test_is_matrix_columns_example():
    C = is_matrix(X2X1, DirectionMatrix.from_numbers(F2, (1, 3)), 8, 8)
    assert list(C.column(3)[:5]) == [0, 1, 1, 0, 0]
    assert list(C.column(4)[:5]) == [1, 0, 0, 1, 0]
    assert list(C.column(5)[:5]) == [1, 1, 1, 0, 1]


def test_sobol_pascal_for_x_plus_1():
    from math import comb

    C = sobol_matrix(Polynomial.from_code(F2, 3), (1,), 12, 12)
    expected = np.array([[comb(r, j) % 2 for r in range(12)] for j in range(12)])
    assert np.array_equal(C.digits, expected)


@pytest.mark.parametrize("d", [(2, 3), (1, 4), (1, 0)])
def test_sobol_rejects_bad_direction_numbers(d):
    with pytest.raises(ValueError):
        sobol_matrix(X2X1, d, 5, 5)


def test_is_matrix_rejects_degree_mismatch():
    with pytest.raises(ValueError):
        is_matrix(X2X1, DirectionMatrix.from_numbers(F2, (1,)), 5, 5)


def test_reducible_polynomial_rejected():
    with pytest.raises(ValueError):
        niederreiter_matrix(Polynomial.from_code(F2, 5), 4, 4)


@pytest.mark.parametrize(
    "code,numbers",
    [(2, (1,)), (7, (1, 3)), (11, (1, 1, 5))],
)
def test_isn_direction_numbers(code, numbers):
    assert isn_direction_matrix(Polynomial.from_code(F2, code)).numbers == numbers


@pytest.mark.parametrize(
    "bits,numbers",
    [((1, 1), (1, 3)), ((1, 0, 0, 0), (1, 1, 1, 1)), ((1, 1, 0), (1, 3, 3))],
)
def test_one_row_direction_matrix(bits, numbers):
    assert one_row_direction_matrix(bits).numbers == numbers


def test_one_row_needs_unit_lead():
    with pytest.raises(ValueError):
        one_row_direction_matrix((0, 1))


@pytest.mark.parametrize("e", range(1, 9))
def test_isn_block_equals_its_first_row_pattern(e):
    for p in irreducibles_of_degree(F2, e)[:10]:
        assert isn_direction_matrix(p) == one_row_direction_matrix(isn_first_row(p))


def test_direction_matrix_validation():
    with pytest.raises(ValueError):
        DirectionMatrix(F2, np.array([[1, 0], [1, 1]]))
    with pytest.raises(ValueError):
        DirectionMatrix(F2, np.array([[1, 0], [0, 0]]))
    with pytest.raises(ValueError):
        DirectionMatrix.from_numbers(field_make(3), (3,))
    assert DirectionMatrix.from_numbers(field_make(3), (2, 5)).numbers == (2, 5)


def test_default_rows():
    assert default_rows(2) == 53 and default_rows(3) == 33 and default_rows(4) == 26


# --- Theorem 4.3 / Lemma 4.2 -----------------------------------------------------------------


def _random_irreducible(draw, b, e):
    polys = irreducibles_of_degree(field_for_base(b), e)
    return polys[draw(st.integers(0, len(polys) - 1))]


def _degree_for(b):
    return {2: 6, 3: 6, 4: 5, 5: 4, 8: 4, 9: 4}[b]


@st.composite
def base_and_poly(draw):
    b = draw(st.sampled_from([2, 3, 4, 5, 8, 9]))
    e = draw(st.integers(1, _degree_for(b)))
    return b, _random_irreducible(draw, b, e)


def _block_reversed(digits, e):
    rows = digits.shape[0]
    perm = np.concatenate([np.arange(q + e - 1, q - 1, -1) for q in range(0, rows, e)])
    return digits[perm]


@given(base_and_poly())
@settings(max_examples=200, deadline=None)
def test_isn_equals_block_reversed_niederreiter(bp):
    b, p = bp
    e = p.degree
    rows = e * -(-30 // e)
    N = niederreiter_matrix(p, rows, 32)
    C = is_matrix(p, isn_direction_matrix(p), rows, 32)
    assert np.array_equal(C.digits, _block_reversed(N.digits, e))
    assert C.is_nut()


def _recurrence_residual(C, p):
    F = C.field
    e = p.degree
    coef = [p[i] for i in range(e)]
    V = C.digits
    bad = 0
    for r in range(C.cols - e):
        lhs = V[:, r + e].copy()
        for i in range(e):
            lhs = F.add_table[lhs, F.mul_table[coef[i], V[:, r + i]]]
        shifted = np.zeros_like(V[:, r])
        shifted[e:] = V[:-e, r]
        bad += int(np.count_nonzero(F.sub_table[lhs, shifted]))
    return bad


@given(base_and_poly())
@settings(max_examples=200, deadline=None)
def test_niederreiter_satisfies_is_recurrence(bp):
    b, p = bp
    assert _recurrence_residual(niederreiter_matrix(p, 30, 36), p) == 0


def test_recurrence_coeffs_negate():
    F = field_make(3)
    p = Polynomial(F, (2, 1, 1))  # x^2 + x + 2
    assert recurrence_coeffs(p) == [1, 2]


# --- whole sequences ---------------------------------------------------------------------------


def test_build_two_dims():
    C1, C2 = build_sequence(SequenceSpec(dim=2), 12, 12)
    assert np.array_equal(C1.digits, np.eye(12, dtype=int))
    assert np.array_equal(C2.digits, sobol_matrix(Polynomial.from_code(F2, 3), (1,), 12, 12).digits)


def test_build_third_dim_is_figure_matrix():
    C3 = build_sequence(SequenceSpec(dim=3), 5, 9)[2]
    assert np.array_equal(C3.digits, sobol_matrix(X2X1, (1, 3), 5, 9).digits)


def test_build_base3_identity():
    (C,) = build_sequence(SequenceSpec(base=3, dim=1))
    assert C.rows == 33 and np.array_equal(C.digits, np.eye(33, dtype=int))


@pytest.mark.parametrize("b", [2, 3, 4, 5, 7, 8, 9, 16])
@pytest.mark.parametrize("construction", ["isn", "nied"])
def test_build_all_bases(b, construction):
    mats = build_sequence(SequenceSpec(base=b, dim=12, construction=construction), 10, 12)
    assert len(mats) == 12
    if construction == "isn":
        assert all(C.is_nut() for C in mats)


def test_build_is_needs_table():
    with pytest.raises(ValueError):
        build_sequence(SequenceSpec(dim=3, construction="is"))


def test_build_sobol_from_records():
    recs = [JoeKuoRecord(2, 1, 0, (1,)), JoeKuoRecord(3, 2, 1, (1, 3))]
    mats = build_sequence(SequenceSpec(dim=3, construction="sobol", directions=recs), 6, 6)
    assert np.array_equal(mats[2].digits, sobol_matrix(X2X1, (1, 3), 6, 6).digits)
    with pytest.raises(ValueError):
        build_sequence(SequenceSpec(dim=4, construction="sobol", directions=recs), 6, 6)


def test_packed_and_dense_agree():
    for C in build_sequence(SequenceSpec(dim=40, ordering="alternative"), 40, 45):
        cols = C.packed_columns()
        rows = C.packed_rows()
        for r in range(C.cols):
            bits = [(int(cols[r]) >> (C.rows - 1 - j)) & 1 for j in range(C.rows)]
            assert bits == list(C.digits[:, r])
        for j in range(C.rows):
            assert [(int(rows[j]) >> r) & 1 for r in range(C.cols)] == list(C.digits[j])


def test_base2_fast_path_matches_generic():
    from irrsobol.construct import _is_columns_base2, _is_columns_generic

    for p in irreducibles_of_degree(F2, 7)[:5]:
        D = isn_direction_matrix(p).digits
        a = recurrence_coeffs(p)
        assert np.array_equal(_is_columns_base2(a, D, 40, 50), _is_columns_generic(F2, a, D, 40, 50))


def test_deterministic_build():
    a = build_sequence(SequenceSpec(dim=50, ordering="alternative"))
    b = build_sequence(SequenceSpec(dim=50, ordering="alternative"))
    assert all(x == y for x, y in zip(a, b))
