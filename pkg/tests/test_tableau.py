import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extrk.exactnum import composition_alphas, rank
from extrk.tableau import (
    ButcherTableau,
    ConsistencyError,
    ExtendedTableau,
    NotMonoimplicitError,
    SingularConstraintError,
    eliminate_constraints,
    explicit_euler,
    m_matrix,
    merged_substeps,
    midpoint_projection_tableau,
    monoimplicit_decompose,
    monoimplicit_tableau,
    quadratic_preservation_check,
    symmetric_projection_extended,
    symmetric_projection_tableau,
)

H, Q = F(1, 2), F(1, 4)
LEAPFROG = [H, 1, H]

small = st.builds(F, st.integers(-9, 9), st.integers(1, 9))


@st.composite
def alternating(draw, sizes=(3, 5, 7)):
    n = draw(st.sampled_from(sizes))
    vals = [draw(small) for _ in range(n)]
    for start in (0, 1):
        idx = list(range(start, n, 2))
        vals[idx[-1]] = 1 - sum(vals[i] for i in idx[:-1])
    return vals


def c_case(k):
    if k % 2 == 0:
        return 1
    return -1 if k > 0 else 3


def zeros(n, m=None):
    return tuple(tuple(F(0) for _ in range(m or n)) for _ in range(n))


class TestButcherTableau:
    def test_c_is_row_sum(self):
        tab = ButcherTableau([[0, 0], [F(2, 3), 0]], [Q, 3 * Q])
        assert tab.c == (0, F(2, 3))

    def test_c_mismatch(self):
        with pytest.raises(ValueError):
            ButcherTableau([[0, 0], [1, 0]], [H, H], c=[0, H])

    def test_shape(self):
        with pytest.raises(ValueError):
            ButcherTableau([[0, 0]], [1, 0])
        with pytest.raises(ValueError):
            ButcherTableau([], [])

    @pytest.mark.parametrize("tab", [
        midpoint_projection_tableau([1]),
        midpoint_projection_tableau(composition_alphas("triplejump4")),
        monoimplicit_tableau(LEAPFROG).to_float(128),
        ButcherTableau([[0.0, 0.0], [0.5, 0.0]], [0.0, 1.0]),
    ])
    def test_json_round_trip(self, tab):
        text = json.dumps(tab.to_json())
        back = ButcherTableau.from_json(text)
        assert back == tab
        assert back.meta.get("construction") == tab.meta.get("construction")

    def test_pretty(self):
        text = midpoint_projection_tableau([1]).pretty(4)
        assert "0.25" in text and "|" in text


class TestMidpointProjection:
    def test_s1_fixture(self):
        tab = midpoint_projection_tableau([1])
        assert tab.A == ((0, 0, 0), (H, 0, 0), (0, 1, 0))
        assert tab.b == (Q, H, Q)
        assert tab.c == (0, H, 1)

    @pytest.mark.parametrize("alphas", [(1, 0, 0), (0, 1, 0), (0, 0, 1), (F(3, 7), F(-1, 2), F(15, 14))])
    def test_s3_pattern(self, alphas):
        # entries are linear in alpha: agreeing on a basis fixes the symbolic pattern
        a1, a2, a3 = (F(x) for x in alphas)
        tab = midpoint_projection_tableau([a1, a2, a3])
        z = 0
        expected = [
            [z] * 7,
            [a1 / 2] + [z] * 6,
            [z, a1] + [z] * 5,
            [a1 / 2, z, (a1 + a2) / 2] + [z] * 4,
            [z, a1, z, a2] + [z] * 3,
            [a1 / 2, z, (a1 + a2) / 2, z, (a2 + a3) / 2, z, z],
            [z, a1, z, a2, z, a3, z],
        ]
        assert [list(r) for r in tab.A] == expected
        assert list(tab.b) == [a1 / 4, a1 / 2, (a1 + a2) / 4, a2 / 2, (a2 + a3) / 4, a3 / 2, a3 / 4]
        assert tab.c == (0, a1 / 2, a1, a1 + a2 / 2, a1 + a2, a1 + a2 + a3 / 2, a1 + a2 + a3)

    @pytest.mark.parametrize("scheme, stages", [("leapfrog2", 3), ("triplejump4", 7), ("suzuki4", 11)])
    def test_structure(self, scheme, stages):
        tab = midpoint_projection_tableau(composition_alphas(scheme))
        assert tab.m == stages
        assert tab.is_explicit()
        assert sum(tab.b, F(0)) == 1
        assert all(x == 0 for x in tab.A[0])

    def test_sum_must_be_one(self):
        with pytest.raises(ConsistencyError):
            midpoint_projection_tableau([H, F(1, 3)])

    def test_merged_substeps(self):
        assert merged_substeps([1]) == [H, 1, H]
        assert merged_substeps([1, 2, 3]) == [H, 1, F(3, 2), 2, F(5, 2), 3, F(3, 2)]


class TestSymmetricProjection:
    def test_leapfrog_extended(self):
        ext = symmetric_projection_extended(LEAPFROG)
        assert ext.s == 3 and ext.m == 4
        assert ext.square_a() == ((0, 0, 0, -1), (H, 0, 0, 1), (0, 1, 0, -1), (0, 0, 0, 0))
        assert ext.b == (Q, H, Q, 0)
        assert ext.d == ((-H, 1, -H, -4),)
        assert rank(ext.d) == 1

    def test_leapfrog_m_and_v(self):
        ext = symmetric_projection_extended(LEAPFROG)
        qc = quadratic_preservation_check(ext)
        M16 = [[1, -2, 1, 4], [-2, 4, -2, -8], [1, -2, 1, 4], [4, -8, 4, 0]]
        assert qc.M == tuple(tuple(F(x, 16) for x in row) for row in M16)
        assert qc.V == ((2, -1, -8), (1, 0, 0), (0, 1, 0), (0, 0, 1))
        assert qc.VtMV == zeros(3)
        assert qc.preserving and bool(qc)

    def test_perturbed_b_rejected(self):
        ext = symmetric_projection_extended(LEAPFROG)
        bad = ExtendedTableau(ext.a, ext.b[:3] + (F(1),), ext.d)
        qc = quadratic_preservation_check(bad)
        assert not qc.preserving and not qc.b_extra_zero

    def test_zero_constraint_rejected(self):
        a = [[0, 0, 0, 0], [H, 0, 0, 0], [0, 1, 0, 0]]
        with pytest.raises(ValueError):
            ExtendedTableau(a, [Q, H, Q, 0], [[0, 0, 0, 0]])

    def test_leapfrog_elimination(self):
        tab = symmetric_projection_tableau(LEAPFROG)
        assert tab.A == ((F(1, 8), -Q, F(1, 8)), (F(3, 8), Q, F(-1, 8)), (F(1, 8), F(3, 4), F(1, 8)))
        assert tab.b == (Q, H, Q)
        assert tab == monoimplicit_tableau(LEAPFROG)

    def test_two_substeps(self):
        ext = symmetric_projection_extended([1, 1])
        assert ext.m == 3
        tab = eliminate_constraints(ext)
        assert tab == monoimplicit_tableau([1, 1])
        assert tab.A == ((Q, -Q), (F(3, 4), Q)) and tab.b == (H, H)

    @settings(max_examples=40, deadline=None)
    @given(alternating())
    def test_elimination_matches_closed_form(self, a):
        assert symmetric_projection_tableau(a) == monoimplicit_tableau(a)

    @settings(max_examples=20, deadline=None)
    @given(alternating(sizes=(2, 4, 6)))
    def test_even_lengths(self, a):
        # the chains have unequal length; the generic construction still agrees
        assert symmetric_projection_tableau(a) == monoimplicit_tableau(a)

    def test_identity_constraint_drops_extra(self):
        a = [[0, 0, 5], [H, 0, 7]]
        ext = ExtendedTableau(a, [H, H, 3], [[0, 0, 1]])
        tab = eliminate_constraints(ext)
        assert tab.A == ((0, 0), (H, 0)) and tab.b == (H, H)

    def test_singular_extra_block(self):
        ext = ExtendedTableau([[0, 0, 1], [1, 0, 0]], [H, H, 0], [[1, 0, 0]])
        with pytest.raises(SingularConstraintError):
            eliminate_constraints(ext)

    def test_alternating_sums(self):
        with pytest.raises(ConsistencyError):
            symmetric_projection_extended([H, 1, F(1, 3)])
        with pytest.raises(ConsistencyError):
            monoimplicit_tableau([1])


class TestMonoimplicit:
    def test_leapfrog_fixture(self):
        tab = monoimplicit_tableau(LEAPFROG)
        assert tab.A == ((F(1, 8), -Q, F(1, 8)), (F(3, 8), Q, F(-1, 8)), (F(1, 8), F(3, 4), F(1, 8)))
        assert tab.b == (Q, H, Q)
        assert m_matrix(tab.A, tab.b) == zeros(3)

    def test_two_stage(self):
        tab = monoimplicit_tableau([1, 1])
        assert tab.A == ((Q, -Q), (F(3, 4), Q))
        assert tab.b == (H, H)
        assert m_matrix(tab.A, tab.b) == zeros(2)

    @settings(max_examples=60, deadline=None)
    @given(alternating())
    def test_case_table(self, a):
        tab = monoimplicit_tableau(a)
        s = len(a)
        for i in range(s):
            for j in range(s):
                assert tab.A[i][j] == a[j] * c_case(j - i) / 4
        assert list(tab.b) == [x / 2 for x in a]

    @settings(max_examples=60, deadline=None)
    @given(alternating())
    def test_symplectic(self, a):
        tab = monoimplicit_tableau(a)
        assert m_matrix(tab.A, tab.b) == zeros(len(a))

    def test_order4_instance(self):
        from extrk.analysis import classical_order
        tab = monoimplicit_tableau(merged_substeps(composition_alphas("triplejump4")))
        assert classical_order(tab, 6).order == 4


class TestMMatrix:
    def test_euler(self):
        assert m_matrix(explicit_euler().A, explicit_euler().b) == ((1,),)

    def test_symmetric(self):
        tab = midpoint_projection_tableau([1])
        M = m_matrix(tab.A, tab.b)
        assert all(M[i][j] == M[j][i] for i in range(3) for j in range(3))


LOBATTO_IIIC = ButcherTableau(
    [[F(1, 6), F(-1, 3), F(1, 6)], [F(1, 6), F(5, 12), F(-1, 12)], [F(1, 6), F(2, 3), F(1, 6)]],
    [F(1, 6), F(2, 3), F(1, 6)],
)


class TestDecompose:
    def test_leapfrog(self):
        form = monoimplicit_decompose(monoimplicit_tableau(LEAPFROG))
        assert form.L == ((0, 0, 0), (H, 0, 0), (0, 1, 0))
        assert form.u == (-1, 1, -1)
        assert form.v == (-H, 1, -H)
        assert form.matrix() == monoimplicit_tableau(LEAPFROG).A

    def test_explicit(self):
        tab = midpoint_projection_tableau([1])
        form = monoimplicit_decompose(tab)
        assert form.L == tab.A
        assert all(x == 0 for x in form.u)

    def test_not_monoimplicit(self):
        with pytest.raises(NotMonoimplicitError):
            monoimplicit_decompose(LOBATTO_IIIC)

    def test_gauss2_has_rank_one_split(self):
        # 2x2 with a nonzero upper entry always splits; documented deviation
        r = 3**0.5 / 6
        gauss = ButcherTableau([[0.25, 0.25 - r], [0.25 + r, 0.25]], [0.5, 0.5])
        form = monoimplicit_decompose(gauss)
        A = form.matrix()
        assert all(abs(A[i][j] - gauss.A[i][j]) < 1e-15 for i in range(2) for j in range(2))

    @settings(max_examples=40, deadline=None)
    @given(alternating())
    def test_reconstructs(self, a):
        tab = monoimplicit_tableau(a)
        form = monoimplicit_decompose(tab)
        assert form.matrix() == tab.A
        assert all(form.L[i][j] == 0 for i in range(len(a)) for j in range(i, len(a)))
