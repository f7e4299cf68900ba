from fractions import Fraction as F
from itertools import combinations_with_replacement

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extrk.tableau import ButcherTableau, midpoint_projection_tableau
from extrk.trees import (
    LEAF,
    MAX_ORDER,
    ElementaryWeights,
    RootedTree,
    TreeOrderError,
    butcher_product,
    density,
    elementary_weight,
    enumerate_trees,
    symmetry,
)

A000081 = [1, 1, 2, 4, 9, 20, 48, 115, 286, 719]


# --- independent oracles -----------------------------------------------------

def ahu(adj, v, parent):
    """AHU canonical string of the subtree at v."""
    return "(" + "".join(sorted(ahu(adj, c, v) for c in adj[v] if c != parent)) + ")"


def brute_force_classes(n_max):
    """Grow every tree by attaching a leaf anywhere; dedupe by AHU string."""
    levels = {1: {"()": [[]]}}
    for n in range(2, n_max + 1):
        nxt = {}
        for adj in levels[n - 1].values():
            for v in range(len(adj)):
                new = [list(nb) for nb in adj] + [[v]]
                new[v].append(len(adj))
                key = ahu(new, 0, -1)
                nxt.setdefault(key, new)
        levels[n] = nxt
    return levels


def count_recurrence(n_max):
    """Rooted tree counts from a(n+1) = (1/n) sum_k (sum_{d|k} d a(d)) a(n-k+1)."""
    a = [0, 1]
    for n in range(1, n_max):
        tot = 0
        for k in range(1, n + 1):
            s = sum(d * a[d] for d in range(1, k + 1) if k % d == 0)
            tot += s * a[n - k + 1]
        a.append(tot // n)
    return a[1:]


def tree_to_ahu(t: RootedTree) -> str:
    return "(" + "".join(sorted(tree_to_ahu(c) for c in t.children)) + ")"


def dense_weight(A, b, t):
    """Phi(t) by plain recursion with numpy object arrays."""
    A = np.array(A, dtype=object)

    def stage(tree):
        out = np.array([F(1)] * len(b), dtype=object)
        for c in tree.children:
            out = out * A.dot(stage(c))
        return out

    return sum(bi * si for bi, si in zip(b, stage(t)))


# --- tests ---------------------------------------------------------------------

class TestEnumeration:
    def test_order_one(self):
        table = enumerate_trees(1)
        assert list(table.by_order[1]) == [LEAF]

    def test_order_four(self):
        assert enumerate_trees(4).counts() == [1, 1, 2, 4]

    def test_counts_to_ten(self):
        assert enumerate_trees(10).counts() == A000081
        assert count_recurrence(10) == A000081

    @pytest.mark.parametrize("n", range(1, 9))
    def test_matches_brute_force(self, n):
        oracle = set(brute_force_classes(n)[n])
        got = [tree_to_ahu(t) for t in enumerate_trees(n).by_order[n]]
        assert len(got) == len(set(got))
        assert set(got) == oracle

    def test_cap(self):
        with pytest.raises(TreeOrderError):
            enumerate_trees(MAX_ORDER + 1)
        with pytest.raises(ValueError):
            enumerate_trees(0)

    def test_canonical_encoding_unique(self):
        table = enumerate_trees(9)
        for n in range(1, 10):
            encs = [t.levels for t in table.by_order[n]]
            assert len(encs) == len(set(encs))
            assert all(len(e) == n for e in encs)


class TestProduct:
    @pytest.mark.parametrize("u, v, expected", [
        ("•", "•", "[•]"),
        ("•", "[•]", "[•,•]"),
        ("[•]", "•", "[[•]]"),
    ])
    def test_examples(self, u, v, expected):
        assert butcher_product(RootedTree.parse(u), RootedTree.parse(v)) == RootedTree.parse(expected)

    def test_exact_flow_identity(self):
        table = enumerate_trees(9)
        trees = list(table.upto(9))
        checked = 0
        for u, v in combinations_with_replacement(trees, 2):
            if u.order + v.order > 10:
                continue
            lhs = F(1, u.density * v.density)
            rhs = F(1, butcher_product(u, v).density) + F(1, butcher_product(v, u).density)
            assert lhs == rhs
            checked += 1
        assert checked > 1000

    def test_product_canonical(self):
        trees = list(enumerate_trees(5).upto(5))
        for u in trees:
            for v in trees:
                w = butcher_product(u, v)
                assert w.order == u.order + v.order
                assert RootedTree.from_levels(w.levels) == w
                assert RootedTree.from_levels(w.levels).levels == w.levels

    @settings(max_examples=50, deadline=None)
    @given(st.permutations(range(4)))
    def test_child_order_irrelevant(self, perm):
        kids = [RootedTree.parse(s) for s in ("•", "[•]", "[•,•]", "[[•]]")]
        a = RootedTree([kids[i] for i in perm])
        assert a == RootedTree(kids) and hash(a) == hash(RootedTree(kids))


class TestAttributes:
    @pytest.mark.parametrize("text, gamma, sigma", [
        ("•", 1, 1),
        ("[•]", 2, 1),
        ("[[•]]", 6, 1),
        ("[•,•]", 3, 2),
        ("[•,•,•]", 4, 6),
        ("[[•],[•]]", 20, 2),
    ])
    def test_gamma_sigma(self, text, gamma, sigma):
        t = RootedTree.parse(text)
        assert density(t) == gamma
        assert symmetry(t) == sigma

    @pytest.mark.parametrize("n", range(1, 9))
    def test_sum_identity(self, n):
        # n!/(sigma gamma) counts increasing labellings; there are (n-1)! in total
        import math
        total = sum(F(math.factorial(n), t.symmetry * t.density) for t in enumerate_trees(n).by_order[n])
        assert total == math.factorial(n - 1)

    @pytest.mark.parametrize("n", range(1, 8))
    def test_labelled_count(self, n):
        # n!/sigma summed over trees counts labelled rooted trees: n^(n-1)
        import math
        total = sum(F(math.factorial(n), t.symmetry) for t in enumerate_trees(n).by_order[n])
        assert total == n ** (n - 1)

    def test_parse_round_trip(self):
        for t in enumerate_trees(7).upto(7):
            assert RootedTree.parse(str(t)) == t


class TestElementaryWeights:
    def test_s1_examples(self):
        tab = midpoint_projection_tableau([1])
        assert elementary_weight(tab, LEAF) == 1
        assert elementary_weight(tab, RootedTree.parse("[•]")) == F(1, 2)
        assert elementary_weight(tab, RootedTree.parse("[[•]]")) == F(1, 8)

    def test_zero_b(self):
        tab = ButcherTableau([[F(1, 3), 0], [F(1, 2), F(1, 4)]], [0, 0])
        for t in enumerate_trees(4).upto(4):
            assert elementary_weight(tab, t) == 0

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.integers(-5, 5), min_size=9, max_size=9),
           st.lists(st.integers(-5, 5), min_size=3, max_size=3))
    def test_dense_oracle_implicit(self, a, b):
        A = [[F(a[3 * i + j], 4) for j in range(3)] for i in range(3)]
        bb = [F(x, 3) for x in b]
        tab = ButcherTableau(A, bb)
        phi = ElementaryWeights(tab)
        for t in enumerate_trees(6).upto(6):
            assert phi(t) == dense_weight(A, bb, t)

    def test_float_tableau(self):
        A = [[0.0, 0.0], [2 / 3, 0.0]]
        b = [0.25, 0.75]
        tab = ButcherTableau(A, b)
        for t in enumerate_trees(4).upto(4):
            assert abs(float(elementary_weight(tab, t)) - float(dense_weight(A, b, t))) < 1e-15
