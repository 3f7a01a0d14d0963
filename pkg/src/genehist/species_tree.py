"""Species trees: Newick I/O, builtin families, rankings and time slicing.

Nodes are addressed by integer index.  A :class:`SpeciesTree` is a rooted
binary tree whose nodes are stored in preorder (the root has index 0).  A
:class:`TimeSlicedTree` is the unary-binary tree obtained from a ranked
species tree by subdividing every edge that spans more than one rank; the
original nodes keep their indices and the inserted unary nodes are appended.
"""

from __future__ import annotations

import itertools
import math
import random
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterator, Sequence, Union

__all__ = [
    "NewickError",
    "RankingError",
    "SpeciesTree",
    "Ranking",
    "TimeSlicedTree",
    "parse_newick",
    "caterpillar",
    "complete",
    "time_slice",
    "incomparable_unranked",
    "random_tree",
    "random_ranking",
    "all_rankings",
    "tree_shapes",
    "tree_from_shape",
    "balanced",
    "unique_ranking",
    "read_ranking",
]


class NewickError(ValueError):
    """Malformed or unsupported Newick input; ``offset`` is the character index."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class RankingError(ValueError):
    pass


# A nested description of a tree: a leaf label, or (left, right) / (left, right, label).
Nested = Union[str, tuple]


@dataclass(frozen=True)
class SpeciesTree:
    labels: tuple[str, ...]
    children: tuple[tuple[int, ...], ...]
    root: int = 0
    parent: tuple[int | None, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.labels) != len(self.children):
            raise ValueError("labels and children must have the same length")
        if len(set(self.labels)) != len(self.labels):
            dup = next(l for l in self.labels if self.labels.count(l) > 1)
            raise ValueError(f"duplicate label {dup!r}")
        parent: list[int | None] = [None] * len(self.labels)
        for u, kids in enumerate(self.children):
            if len(kids) not in (0, 2):
                raise ValueError(f"node {self.labels[u]!r} is not binary")
            for c in kids:
                if parent[c] is not None:
                    raise ValueError("node has two parents")
                parent[c] = u
        if parent[self.root] is not None:
            raise ValueError("root has a parent")
        if sum(p is None for p in parent) != 1:
            raise ValueError("tree is not connected")
        object.__setattr__(self, "parent", tuple(parent))

    # -- construction -----------------------------------------------------

    @classmethod
    def from_nested(cls, nested: Nested) -> "SpeciesTree":
        """Build from nested tuples, e.g. ``(("A", "B", "X"), "C", "R")``.

        Internal nodes without a label get an automatic one (see
        :func:`parse_newick`).
        """
        labels: list[str | None] = []
        children: list[tuple[int, ...]] = []

        def visit(node) -> int:
            idx = len(labels)
            labels.append(None)
            children.append(())
            if isinstance(node, str):
                labels[idx] = node
                return idx
            if len(node) not in (2, 3):
                raise ValueError(f"node {node!r} is not binary")
            kids = tuple(visit(c) for c in node[:2])
            children[idx] = kids
            if len(node) == 3 and node[2]:
                labels[idx] = node[2]
            return idx

        visit(nested)
        return cls(tuple(_fill_labels(labels, children)), tuple(children))

    # -- basic queries ----------------------------------------------------

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def size(self) -> int:
        """Number of leaves."""
        return sum(1 for kids in self.children if not kids)

    k = size

    def is_leaf(self, u: int) -> bool:
        return not self.children[u]

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def leaves(self) -> list[int]:
        """Leaves in depth-first (left to right) order."""
        return [u for u in self.preorder() if not self.children[u]]

    def internal_nodes(self) -> list[int]:
        return [u for u in self.preorder() if self.children[u]]

    def preorder(self, u: int | None = None) -> list[int]:
        stack = [self.root if u is None else u]
        out = []
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children[v]))
        return out

    def postorder(self, u: int | None = None) -> list[int]:
        out = []
        stack = [(self.root if u is None else u, False)]
        while stack:
            v, done = stack.pop()
            if done or not self.children[v]:
                out.append(v)
            else:
                stack.append((v, True))
                stack.extend((c, False) for c in reversed(self.children[v]))
        return out

    def ancestors(self, u: int) -> list[int]:
        """Strict ancestors of ``u``, nearest first."""
        out = []
        p = self.parent[u]
        while p is not None:
            out.append(p)
            p = self.parent[p]
        return out

    def is_ancestor(self, a: int, u: int) -> bool:
        """True if ``a`` is a strict ancestor of ``u``."""
        return a in self.ancestors(u)

    def subtree_leaf_count(self, u: int) -> int:
        return sum(1 for v in self.preorder(u) if not self.children[v])

    def shape(self, u: int | None = None, ordered: bool = True) -> tuple:
        """Label-free shape key of the subtree at ``u``."""
        u = self.root if u is None else u
        kids = tuple(self.shape(c, ordered) for c in self.children[u])
        return kids if ordered else tuple(sorted(kids))

    def swapped(self, u: int) -> "SpeciesTree":
        """Copy of the tree with the two children of ``u`` exchanged."""
        return SpeciesTree.from_nested(_to_nested(self, self.root, swap=u))

    def to_newick(self) -> str:
        return _newick(self, self.root) + ";"

    def __str__(self) -> str:
        return self.to_newick()


def _newick(tree: SpeciesTree, u: int) -> str:
    kids = tree.children[u]
    if not kids:
        return tree.labels[u]
    return "(" + ",".join(_newick(tree, c) for c in kids) + ")" + tree.labels[u]


def _to_nested(tree: SpeciesTree, u: int, swap: int | None = None):
    kids = tree.children[u]
    if not kids:
        return tree.labels[u]
    left, right = (_to_nested(tree, c, swap) for c in kids)
    if u == swap:
        left, right = right, left
    return (left, right, tree.labels[u])


def _fill_labels(labels: list, children: list) -> list[str]:
    """Name unlabeled internal nodes by concatenating their sorted child labels."""
    taken = {l for l in labels if l is not None}
    order = []
    stack = [(0, False)]
    while stack:
        v, done = stack.pop()
        if done or not children[v]:
            order.append(v)
        else:
            stack.append((v, True))
            stack.extend((c, False) for c in children[v])
    for v in order:
        if labels[v] is None:
            base = "".join(sorted(labels[c] for c in children[v]))
            name, i = base, 2
            while name in taken:
                name = f"{base}#{i}"
                i += 1
            labels[v] = name
            taken.add(name)
    return labels


# ---------------------------------------------------------------------------
# Newick parsing

_LABEL = re.compile(r"[^\s(),:;\[\]]+")
_LENGTH = re.compile(r":\s*[-+0-9.eE]+")


def parse_newick(text: str) -> SpeciesTree:
    """Parse a rooted binary Newick string such as ``"((A,B)X,C)R;"``.

    Internal labels are optional.  Branch lengths are accepted and dropped.
    The child order of the Newick text is kept as the left/right order.
    """
    pos = 0
    n = len(text)
    labels: list[str | None] = []
    children: list[tuple[int, ...]] = []
    label_at: dict[str, int] = {}

    def skip_ws():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def read_label(required: bool) -> str | None:
        nonlocal pos
        skip_ws()
        m = _LABEL.match(text, pos)
        label = None
        if m:
            label = m.group(0)
            if label in label_at:
                raise NewickError(f"duplicate label {label!r}", pos)
            label_at[label] = pos
            pos = m.end()
        elif required:
            raise NewickError("expected a label", pos)
        skip_ws()
        m = _LENGTH.match(text, pos)
        if m:
            pos = m.end()
        return label

    def subtree() -> int:
        nonlocal pos
        skip_ws()
        idx = len(labels)
        labels.append(None)
        children.append(())
        if pos < n and text[pos] == "(":
            start = pos
            pos += 1
            kids = [subtree()]
            skip_ws()
            while pos < n and text[pos] == ",":
                pos += 1
                kids.append(subtree())
                skip_ws()
            if pos >= n or text[pos] != ")":
                raise NewickError("expected ',' or ')'", pos)
            pos += 1
            if len(kids) != 2:
                raise NewickError(f"node has {len(kids)} children, expected 2", start)
            children[idx] = tuple(kids)
            labels[idx] = read_label(required=False)
        else:
            labels[idx] = read_label(required=True)
        return idx

    subtree()
    skip_ws()
    if pos >= n or text[pos] != ";":
        raise NewickError("expected ';'", pos)
    pos += 1
    skip_ws()
    if pos != n:
        raise NewickError("trailing characters after ';'", pos)
    filled = _fill_labels(labels, children)
    if len(set(filled)) != len(filled):
        raise NewickError("duplicate label", 0)
    return SpeciesTree(tuple(filled), tuple(children))


# ---------------------------------------------------------------------------
# Builtin families


def caterpillar(k: int) -> SpeciesTree:
    """CT_k: left subtree CT_{k-1}, right subtree a single leaf."""
    if k < 1:
        raise ValueError("caterpillar needs k >= 1")
    nested: Nested = "S1"
    for i in range(2, k + 1):
        nested = (nested, f"S{i}")
    return SpeciesTree.from_nested(nested)


def complete(h: int) -> SpeciesTree:
    """CB_h: both subtrees CB_{h-1}; 2**h leaves."""
    if h < 0:
        raise ValueError("complete needs h >= 0")
    counter = itertools.count(1)

    def build(d):
        if d == 0:
            return f"S{next(counter)}"
        return (build(d - 1), build(d - 1))

    return SpeciesTree.from_nested(build(h))


def _shape_to_nested(shape: tuple, counter) -> Nested:
    if not shape:
        return f"S{next(counter)}"
    return tuple(_shape_to_nested(s, counter) for s in shape)


def tree_from_shape(shape: tuple) -> SpeciesTree:
    """Tree with leaves labeled S1..Sk in depth-first order."""
    return SpeciesTree.from_nested(_shape_to_nested(shape, itertools.count(1)))


def balanced(k: int) -> SpeciesTree:
    """Most balanced shape: every node splits its leaves into ceil/floor halves."""
    if k < 1:
        raise ValueError("k must be positive")

    def shape(m: int) -> tuple:
        if m == 1:
            return ()
        return (shape((m + 1) // 2), shape(m // 2))

    return tree_from_shape(shape(k))


@lru_cache(maxsize=None)
def _shapes(k: int, ordered: bool) -> tuple:
    if k == 1:
        return ((),)
    out = []
    for i in range(1, k):
        if not ordered and i > k - i:
            break
        for left in _shapes(i, ordered):
            for right in _shapes(k - i, ordered):
                if not ordered and i == k - i and right < left:
                    continue
                out.append((left, right))
    return tuple(out)


def tree_shapes(k: int, ordered: bool = True) -> list[SpeciesTree]:
    """All binary tree shapes with ``k`` leaves.

    With ``ordered=True`` there are Catalan(k-1) of them; otherwise one
    representative per unordered shape is returned.
    """
    if k < 1:
        raise ValueError("k must be positive")
    return [tree_from_shape(s) for s in _shapes(k, ordered)]


@lru_cache(maxsize=None)
def _catalan(m: int) -> int:
    return math.comb(2 * m, m) // (m + 1)


def random_tree(k: int, seed: int | random.Random) -> SpeciesTree:
    """Uniformly random ordered binary tree shape with ``k`` leaves.

    Left subtree sizes are drawn proportionally to products of Catalan
    numbers, so every one of the Catalan(k-1) shapes is equally likely.
    Leaves are labeled S1..Sk in depth-first order.
    """
    if k < 1:
        raise ValueError("k must be positive")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)

    def draw(m: int) -> tuple:
        if m == 1:
            return ()
        r = rng.randrange(_catalan(m - 1))
        for i in range(1, m):
            w = _catalan(i - 1) * _catalan(m - i - 1)
            if r < w:
                return (draw(i), draw(m - i))
            r -= w
        raise AssertionError("unreachable")

    return tree_from_shape(draw(k))


# ---------------------------------------------------------------------------
# Rankings


@dataclass(frozen=True)
class Ranking:
    """Dense rank array indexed by node; leaves carry rank k."""

    ranks: tuple[int, ...]

    def __getitem__(self, u: int) -> int:
        return self.ranks[u]

    @classmethod
    def from_order(cls, tree: SpeciesTree, order: Sequence[int]) -> "Ranking":
        """Ranking giving rank i+1 to the i-th internal node of ``order``."""
        k = tree.size
        ranks = [k] * len(tree)
        for i, u in enumerate(order):
            ranks[u] = i + 1
        ranking = cls(tuple(ranks))
        ranking.check(tree)
        return ranking

    @classmethod
    def from_labels(cls, tree: SpeciesTree, ranks: dict[str, int]) -> "Ranking":
        out = [tree.size] * len(tree)
        for label, r in ranks.items():
            if label not in tree.labels:
                raise RankingError(f"unknown node {label!r}")
            out[tree.index(label)] = int(r)
        ranking = cls(tuple(out))
        ranking.check(tree)
        return ranking

    def check(self, tree: SpeciesTree) -> None:
        k = tree.size
        if len(self.ranks) != len(tree):
            raise RankingError("ranking length does not match the tree")
        internal = tree.internal_nodes()
        for u in range(len(tree)):
            if tree.is_leaf(u) and self.ranks[u] != k:
                raise RankingError(f"leaf {tree.labels[u]!r} must have rank {k}")
        seen = sorted(self.ranks[u] for u in internal)
        if seen != list(range(1, k)):
            raise RankingError("internal ranks must be a permutation of 1..k-1")
        for u in internal:
            for c in tree.children[u]:
                if not self.ranks[u] < self.ranks[c]:
                    raise RankingError(
                        f"rank of {tree.labels[u]!r} must be below its children's"
                    )

    def to_text(self, tree: SpeciesTree) -> str:
        """Sidecar format: one ``label<TAB>rank`` line per internal node."""
        rows = sorted(tree.internal_nodes(), key=lambda u: self.ranks[u])
        return "".join(f"{tree.labels[u]}\t{self.ranks[u]}\n" for u in rows)


def read_ranking(tree: SpeciesTree, text: str) -> Ranking:
    ranks = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2:
            raise RankingError(f"line {lineno}: expected 'label<TAB>rank'")
        try:
            ranks[parts[0]] = int(parts[1])
        except ValueError:
            raise RankingError(f"line {lineno}: rank is not an integer") from None
    return Ranking.from_labels(tree, ranks)


def _internal_count(tree: SpeciesTree, u: int) -> int:
    return sum(1 for v in tree.preorder(u) if tree.children[v])


def random_ranking(tree: SpeciesTree, seed: int | random.Random) -> Ranking:
    """Uniform ranking (linear extension of the internal nodes).

    The orders of the two subtrees are merged by a uniformly random
    interleaving, which makes every linear extension equally likely.
    """
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)

    def order(u: int) -> list[int]:
        if tree.is_leaf(u):
            return []
        left, right = (order(c) for c in tree.children[u])
        total = len(left) + len(right)
        slots = set(rng.sample(range(total), len(left)))
        li, ri = iter(left), iter(right)
        return [u] + [next(li) if i in slots else next(ri) for i in range(total)]

    return Ranking.from_order(tree, order(tree.root))


def all_rankings(tree: SpeciesTree) -> Iterator[Ranking]:
    """Every valid ranking of ``tree``."""

    def orders(u: int):
        if tree.is_leaf(u):
            yield []
            return
        lc, rc = tree.children[u]
        for left in orders(lc):
            for right in orders(rc):
                total = len(left) + len(right)
                for slots in itertools.combinations(range(total), len(left)):
                    chosen = set(slots)
                    li, ri = iter(left), iter(right)
                    yield [u] + [next(li) if i in chosen else next(ri) for i in range(total)]

    for o in orders(tree.root):
        yield Ranking.from_order(tree, o)


def unique_ranking(tree: SpeciesTree) -> Ranking:
    """The only ranking of ``tree``; fails if there are several."""
    found = list(itertools.islice(all_rankings(tree), 2))
    if len(found) != 1:
        raise RankingError("tree has more than one ranking")
    return found[0]


# ---------------------------------------------------------------------------
# Time slicing


@dataclass(frozen=True)
class TimeSlicedTree:
    """Unary-binary tree induced by a ranking.

    ``slice_of[u]`` is the time slice (1..k) of node ``u``; ``origin[u]`` is
    the original species-tree node a sliced node stands for (itself for
    original nodes, the lower end of the subdivided edge for inserted ones).
    """

    tree: SpeciesTree
    ranking: Ranking
    labels: tuple[str, ...]
    children: tuple[tuple[int, ...], ...]
    parent: tuple[int | None, ...]
    slice_of: tuple[int, ...]
    origin: tuple[int, ...]
    root: int = 0

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def size(self) -> int:
        return self.tree.size

    k = size

    def is_leaf(self, u: int) -> bool:
        return not self.children[u]

    def index(self, label: str) -> int:
        return self.labels.index(label)

    @cached_property
    def slices(self) -> tuple[tuple[int, ...], ...]:
        """Nodes of each slice (index t-1 for slice t), in preorder."""
        out: list[list[int]] = [[] for _ in range(self.size)]
        for u in self.preorder():
            out[self.slice_of[u] - 1].append(u)
        return tuple(tuple(s) for s in out)

    def incomparable(self, u: int) -> tuple[int, ...]:
        """Other nodes of the time slice of ``u``."""
        return tuple(v for v in self.slices[self.slice_of[u] - 1] if v != u)

    def preorder(self, u: int | None = None) -> list[int]:
        stack = [self.root if u is None else u]
        out = []
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children[v]))
        return out

    def postorder(self) -> list[int]:
        return list(reversed(_reverse_pre(self.children, self.root)))

    def leaves(self) -> list[int]:
        return [u for u in self.preorder() if not self.children[u]]

    @property
    def inserted(self) -> tuple[int, ...]:
        return tuple(range(len(self.tree), len(self.labels)))


def _reverse_pre(children, root) -> list[int]:
    # root, right..., left... ; reversing gives a left-to-right postorder
    out, stack = [], [root]
    while stack:
        v = stack.pop()
        out.append(v)
        stack.extend(children[v])
    return out


def time_slice(tree: SpeciesTree, ranking: Ranking) -> TimeSlicedTree:
    """Subdivide every edge (p(v), v) once per rank strictly between them."""
    ranking.check(tree)
    labels = list(tree.labels)
    children = [list(c) for c in tree.children]
    slice_of = list(ranking.ranks)
    origin = list(range(len(tree)))
    taken = set(labels)
    for v in tree.preorder():
        p = tree.parent[v]
        if p is None:
            continue
        top = p
        for t in range(ranking[p] + 1, ranking[v]):
            name = f"{tree.labels[v]}@{t}"
            if name in taken:
                raise RankingError(f"label clash for inserted node {name!r}")
            taken.add(name)
            w = len(labels)
            labels.append(name)
            children.append([])
            slice_of.append(t)
            origin.append(v)
            children[top] = [w if c == v else c for c in children[top]]
            children[w] = [v]
            top = w
    parent: list[int | None] = [None] * len(labels)
    for u, kids in enumerate(children):
        for c in kids:
            parent[c] = u
    return TimeSlicedTree(
        tree=tree,
        ranking=ranking,
        labels=tuple(labels),
        children=tuple(tuple(c) for c in children),
        parent=tuple(parent),
        slice_of=tuple(slice_of),
        origin=tuple(origin),
        root=tree.root,
    )


def incomparable_unranked(tree: SpeciesTree, u: int) -> tuple[int, ...]:
    """Nodes that are neither ancestors nor descendants of ``u`` (nor ``u``)."""
    comparable = set(tree.ancestors(u)) | set(tree.preorder(u))
    return tuple(v for v in tree.preorder() if v not in comparable)
