"""Rooted trees, their combinatorial attributes, and elementary weights.

Trees are kept in canonical form: children are sorted by decreasing level
sequence, which makes the level sequence of the whole tree the
lexicographically largest one among all its orderings.  Two isomorphic trees
therefore share one encoding, and that encoding is the hash key.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .exactnum import normalize

__all__ = [
    "MAX_ORDER",
    "TreeOrderError",
    "RootedTree",
    "TreeTable",
    "enumerate_trees",
    "butcher_product",
    "density",
    "symmetry",
    "ElementaryWeights",
    "elementary_weight",
]

MAX_ORDER = 12


class TreeOrderError(ValueError):
    """Requested tree order exceeds the supported cap."""


class RootedTree:
    """Unlabelled rooted tree in canonical form.

    Build trees with :meth:`from_children`, :meth:`from_levels` or
    :meth:`parse`; ``RootedTree()`` is the single vertex.
    """

    __slots__ = ("children", "levels", "order", "density", "symmetry", "_hash")

    def __init__(self, children: Iterable["RootedTree"] = ()):
        kids = tuple(sorted(children, key=lambda t: t.levels, reverse=True))
        self.children = kids
        self.levels = (0,) + tuple(lv + 1 for kid in kids for lv in kid.levels)
        self.order = len(self.levels)
        dens = self.order
        for kid in kids:
            dens *= kid.density
        self.density = dens
        sym = 1
        for kid, mult in Counter(kids).items():
            sym *= math.factorial(mult) * kid.symmetry**mult
        self.symmetry = sym
        self._hash = hash(self.levels)

    @classmethod
    def from_children(cls, children: Iterable["RootedTree"]) -> "RootedTree":
        return cls(children)

    @classmethod
    def from_levels(cls, levels: Sequence[int]) -> "RootedTree":
        """Rebuild from any level sequence (depth of each vertex in preorder)."""
        levels = list(levels)
        if not levels or levels[0] != 0 or any(lv <= 0 for lv in levels[1:]):
            raise ValueError(f"invalid level sequence {levels}")

        def build(pos: int) -> tuple["RootedTree", int]:
            depth = levels[pos]
            pos += 1
            kids = []
            while pos < len(levels) and levels[pos] > depth:
                if levels[pos] != depth + 1:
                    raise ValueError(f"invalid level sequence {levels}")
                kid, pos = build(pos)
                kids.append(kid)
            return cls(kids), pos

        tree, end = build(0)
        if end != len(levels):
            raise ValueError(f"invalid level sequence {levels}")
        return tree

    @classmethod
    def parse(cls, text: str) -> "RootedTree":
        """Parse bracket notation such as ``"[•,[•]]"`` (``o`` also means a leaf)."""
        text = text.replace(" ", "")
        pos = 0

        def node() -> "RootedTree":
            nonlocal pos
            if text[pos] in "•o":
                pos += 1
                return cls()
            if text[pos] != "[":
                raise ValueError(f"unexpected {text[pos]!r} in {text!r}")
            pos += 1
            kids = [node()]
            while text[pos] == ",":
                pos += 1
                kids.append(node())
            if text[pos] != "]":
                raise ValueError(f"unbalanced brackets in {text!r}")
            pos += 1
            return cls(kids)

        tree = node()
        if pos != len(text):
            raise ValueError(f"trailing characters in {text!r}")
        return tree

    def __eq__(self, other):
        return isinstance(other, RootedTree) and self.levels == other.levels

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return (self.order, self.levels) < (other.order, other.levels)

    def __str__(self):
        if not self.children:
            return "•"
        return "[" + ",".join(str(k) for k in self.children) + "]"

    def __repr__(self):
        return f"RootedTree({self})"


LEAF = RootedTree()


def butcher_product(u: RootedTree, v: RootedTree) -> RootedTree:
    """Graft ``u`` onto the root of ``v``."""
    return RootedTree(v.children + (u,))


def density(t: RootedTree) -> int:
    return t.density


def symmetry(t: RootedTree) -> int:
    return t.symmetry


@dataclass(frozen=True)
class TreeTable:
    """All rooted trees up to ``order_max``, grouped by order."""

    order_max: int
    by_order: dict[int, tuple[RootedTree, ...]] = field(repr=False)

    def counts(self) -> list[int]:
        return [len(self.by_order[n]) for n in range(1, self.order_max + 1)]

    def upto(self, order: int) -> Iterator[RootedTree]:
        for n in range(1, min(order, self.order_max) + 1):
            yield from self.by_order[n]

    def __iter__(self):
        return self.upto(self.order_max)

    def __len__(self):
        return sum(self.counts())


_TABLE_CACHE: dict[int, TreeTable] = {}


def enumerate_trees(order_max: int) -> TreeTable:
    """Enumerate every rooted tree of order ``1..order_max``.

    Trees of order n are a root plus a multiset of smaller trees of total
    order n - 1; multisets are produced as non-increasing index sequences
    into the list of smaller trees, so each class appears once.
    """
    if order_max < 1:
        raise ValueError("order_max must be at least 1")
    if order_max > MAX_ORDER:
        raise TreeOrderError(f"order_max {order_max} exceeds the cap {MAX_ORDER}")
    for cached in sorted(_TABLE_CACHE):
        if cached >= order_max:
            full = _TABLE_CACHE[cached]
            return TreeTable(order_max, {n: full.by_order[n] for n in range(1, order_max + 1)})

    by_order: dict[int, tuple[RootedTree, ...]] = {1: (LEAF,)}
    pool: list[RootedTree] = [LEAF]

    def forests(total: int, max_idx: int) -> Iterator[tuple[RootedTree, ...]]:
        if total == 0:
            yield ()
            return
        for idx in range(max_idx, -1, -1):
            t = pool[idx]
            if t.order > total:
                continue
            for rest in forests(total - t.order, idx):
                yield (t,) + rest

    for n in range(2, order_max + 1):
        trees = sorted((RootedTree(f) for f in forests(n - 1, len(pool) - 1)),
                       key=lambda t: t.levels, reverse=True)
        by_order[n] = tuple(trees)
        pool.extend(trees)
    table = TreeTable(order_max, by_order)
    _TABLE_CACHE[order_max] = table
    return table


class ElementaryWeights:
    """Memoised elementary weights of one square tableau.

    ``stage(t)[i]`` is the internal weight of stage ``i`` and ``weight(t)``
    is ``sum_i b_i * stage(t)[i]``.  The tableau may be fully implicit.
    """

    def __init__(self, tab):
        self.m = len(tab.b)
        self.b = [normalize(x) for x in tab.b]
        self._rows = [
            [(j, normalize(a)) for j, a in enumerate(row) if a != 0]
            for row in tab.A
        ]
        self._stage: dict[RootedTree, list] = {}
        self._grafted: dict[RootedTree, list] = {}
        self._weight: dict[RootedTree, object] = {}

    def stage(self, t: RootedTree) -> list:
        vec = self._stage.get(t)
        if vec is None:
            vec = [Fraction(1)] * self.m
            for kid in t.children:
                g = self._graft(kid)
                vec = [x * y for x, y in zip(vec, g)]
            self._stage[t] = vec
        return vec

    def _graft(self, t: RootedTree) -> list:
        # (A @ stage(t))_i
        vec = self._grafted.get(t)
        if vec is None:
            inner = self.stage(t)
            vec = []
            for row in self._rows:
                acc = Fraction(0)
                for j, a in row:
                    acc = acc + a * inner[j]
                vec.append(acc)
            self._grafted[t] = vec
        return vec

    def weight(self, t: RootedTree):
        w = self._weight.get(t)
        if w is None:
            acc = Fraction(0)
            for bi, x in zip(self.b, self.stage(t)):
                if bi != 0:
                    acc = acc + bi * x
            w = normalize(acc)
            self._weight[t] = w
        return w

    __call__ = weight


def elementary_weight(tab, t: RootedTree):
    """Elementary weight of ``t`` for the tableau ``tab``."""
    return ElementaryWeights(tab).weight(t)
