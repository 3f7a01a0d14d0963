"""Events graph of a ranked species tree and the speciation-loss bijection.

The leaves of the time-sliced tree are numbered 1..k in depth-first order
and every node carries the set of numbers below it, so each time slice is a
partition of {1..k}.  A history node in slice ``t`` whose left-most extant
leaf has number ``i`` is encoded by the pair ``(t, i)``; it always lives in
the slice-``t`` node whose set contains ``i``.  In the RDT-SL model the pairs
together with the shape of the history (losses removed) determine the
history, and decoding the same encoded tree against another tree of the same
size gives a history there.  That is the bijection behind the equality of
RDT-SL counts over all ranked trees of size ``k``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property

from .counting import count_single
from .grammar import Model
from .history import Event, History
from .sampling import validate
from .species_tree import TimeSlicedTree

__all__ = [
    "EventsGraph",
    "build",
    "count_rdtsl",
    "encode",
    "decode",
    "transport",
    "grow_history",
    "enumerate_growth",
    "GrowthBudgetExceeded",
]


class GrowthBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class EventsGraph:
    """Nodes are the nodes of the time-sliced tree.

    ``speciation[u]`` is the super edge to the children of ``u`` (empty for
    leaves), ``duplications`` says whether every node has a loop and
    ``transfers`` whether every node points to the rest of its slice.
    """

    sliced: TimeSlicedTree
    numbers: tuple[frozenset[int], ...]  # leaf numbers below each node
    duplications: bool = True
    transfers: bool = True
    leaf_number: dict = field(default_factory=dict, compare=False)

    @property
    def k(self) -> int:
        return self.sliced.size

    @property
    def slices(self) -> tuple[tuple[int, ...], ...]:
        return self.sliced.slices

    def speciation(self, u: int) -> tuple[int, ...]:
        return self.sliced.children[u]

    def duplication(self, u: int) -> tuple[int, ...]:
        return (u,) if self.duplications else ()

    def transfer(self, u: int) -> tuple[int, ...]:
        return self.sliced.incomparable(u) if self.transfers else ()

    @cached_property
    def _locate(self) -> dict[tuple[int, int], int]:
        out = {}
        for t, nodes in enumerate(self.slices, start=1):
            for u in nodes:
                for i in self.numbers[u]:
                    out[t, i] = u
        return out

    def node(self, t: int, i: int) -> int:
        """The slice-``t`` node whose set contains leaf number ``i``."""
        return self._locate[t, i]

    def edge_count(self) -> int:
        n = sum(1 for u in range(len(self.numbers)) if self.speciation(u))
        n += sum(len(self.duplication(u)) + len(self.transfer(u)) for u in range(len(self.numbers)))
        return n

    def dump(self) -> str:
        """Adjacency text, one line per node, slices in order."""
        name = self.sliced.labels
        lines = []
        for t, nodes in enumerate(self.slices, start=1):
            lines.append(f"slice {t}")
            for u in nodes:
                nums = ",".join(map(str, sorted(self.numbers[u])))
                parts = [f"  {name[u]} {{{nums}}}"]
                if self.speciation(u):
                    parts.append("S->" + "+".join(name[c] for c in self.speciation(u)))
                if self.duplication(u):
                    parts.append("D->" + name[u])
                if self.transfer(u):
                    parts.append("T->" + ",".join(name[v] for v in self.transfer(u)))
                lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"


def build(sliced: TimeSlicedTree, duplications: bool = True, transfers: bool = True) -> EventsGraph:
    """Events graph of a ranked tree; switches drop duplication loops or transfer edges."""
    leaf_number = {u: i for i, u in enumerate(sliced.leaves(), start=1)}
    numbers: list[frozenset[int]] = [frozenset()] * len(sliced)
    for u in sliced.postorder():
        kids = sliced.children[u]
        numbers[u] = frozenset([leaf_number[u]]) if not kids else frozenset().union(*(numbers[c] for c in kids))
    return EventsGraph(sliced, tuple(numbers), duplications, transfers, leaf_number)


def count_rdtsl(sliced: TimeSlicedTree, n: int) -> int:
    """Number of RDT-SL histories of size ``n``."""
    return count_single(sliced, Model.RDT_SL, n)


# ---------------------------------------------------------------------------
# Encoding: nested tuples (t, i, children) with losses removed.


def encode(history: History, graph: EventsGraph) -> tuple:
    """Pair each non-loss node with (slice, left-most extant leaf number)."""
    sliced = graph.sliced
    done: dict[int, tuple] = {}
    stack = [(history, False)]
    while stack:
        x, expanded = stack.pop()
        kids = [c for c in x.children if c.event is not Event.L]
        if x.event is Event.L:
            raise ValueError("cannot encode a lost gene")
        if not expanded and kids:
            stack.append((x, True))
            stack.extend((c, False) for c in kids)
            continue
        t = sliced.slice_of[x.species]
        if not kids:
            if x.event is not Event.EXTANT:
                raise ValueError(f"leaf with event {x.event.value}")
            i = graph.leaf_number[x.species]
        else:
            i = done[id(kids[0])][1]
        if graph.node(t, i) != x.species:
            raise ValueError("history node outside the species of its left-most leaf")
        done[id(x)] = (t, i, tuple(done[id(c)] for c in kids))
    return done[id(history)]


def decode(code: tuple, graph: EventsGraph) -> History:
    """History on ``graph``'s tree encoded by ``code``; losses are reinserted."""
    sliced = graph.sliced
    done: dict[int, History] = {}
    stack = [(code, False)]
    while stack:
        c, expanded = stack.pop()
        t, i, kids = c
        if not expanded and kids:
            stack.append((c, True))
            stack.extend((k, False) for k in kids)
            continue
        u = graph.node(t, i)
        if not kids:
            if sliced.children[u]:
                raise ValueError("extant gene above the leaf slice")
            done[id(c)] = History(Event.EXTANT, u)
        elif len(kids) == 1:
            child = done[id(kids[0])]
            sp = sliced.children[u]
            if kids[0][0] != t + 1 or child.species not in sp:
                raise ValueError("speciation child is not below its parent")
            if len(sp) == 1:
                done[id(c)] = History(Event.S, u, (child,))
            elif child.species == sp[0]:
                done[id(c)] = History(Event.S, u, (child, History(Event.L, sp[1])))
            else:
                done[id(c)] = History(Event.S, u, (History(Event.L, sp[0]), child))
        else:
            left, right = (done[id(k)] for k in kids)
            if kids[0][0] != t or kids[1][0] != t or left.species != u:
                raise ValueError("copies must stay in the parent's slice")
            event = Event.D if right.species == u else Event.T
            done[id(c)] = History(event, u, (left, right))
    return done[id(code)]


def transport(history: History, source: TimeSlicedTree, target: TimeSlicedTree) -> History:
    """Map an RDT-SL history on ``source`` to its partner on ``target``."""
    if source.size != target.size:
        raise ValueError("trees of different sizes")
    bad = validate(history, source, Model.RDT_SL)
    if bad is not None:
        raise ValueError(f"not an RDT-SL history: {bad}")
    return decode(encode(history, build(source)), build(target))


# ---------------------------------------------------------------------------
# Growing histories along the events graph


def grow_history(
    graph: EventsGraph,
    steps: int,
    seed: int | random.Random = 0,
    max_steps: int | None = None,
) -> History:
    """Grow an RDT-SL history with exactly ``steps`` duplications and transfers.

    Starts from a root in slice 1 whose number is uniform over {1..k}, then
    repeatedly picks a pending leaf uniformly and follows a uniform outgoing
    edge of its events-graph node.  At the leaf slice, stopping (the leaf
    becomes extant) counts as one of the options.  Copying edges are offered
    only while copies remain to be made, and a leaf may only stop or
    speciate away the last copies when none remain.  Result size is
    ``steps + 1``.  ``max_steps`` bounds the number of iterations.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if not graph.duplications and not graph.transfers and steps:
        raise ValueError("graph has no copying edges")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    k = graph.k
    root = [1, rng.randint(1, k), []]
    pending = [root]
    remaining = steps
    iterations = 0
    while pending:
        iterations += 1
        if max_steps is not None and iterations > max_steps:
            raise GrowthBudgetExceeded(f"history not finished after {max_steps} steps")
        rec = pending.pop(rng.randrange(len(pending)))
        t, i, _ = rec
        u = graph.node(t, i)
        copies = list(graph.duplication(u) + graph.transfer(u)) if remaining else []
        last_leaf = t == k and not pending
        moves: list = []
        if not (last_leaf and remaining):
            moves.append(None)  # speciation edge, or stop at the leaf slice
        moves.extend(copies)
        if not moves:
            raise ValueError("no copying edge left to place the remaining copies")
        v = moves[rng.randrange(len(moves))]
        if v is None:
            if t < k:
                child = [t + 1, i, []]
                rec[2].append(child)
                pending.append(child)
            continue
        remaining -= 1
        j = rng.choice(sorted(graph.numbers[v]))
        left, right = [t, i, []], [t, j, []]
        rec[2].extend([left, right])
        pending.extend([left, right])
    return decode(_freeze(root), graph)


def _freeze(rec: list) -> tuple:
    done: dict[int, tuple] = {}
    stack = [(rec, False)]
    while stack:
        r, expanded = stack.pop()
        if not expanded and r[2]:
            stack.append((r, True))
            stack.extend((c, False) for c in r[2])
            continue
        done[id(r)] = (r[0], r[1], tuple(done[id(c)] for c in r[2]))
    return done[id(rec)]


def enumerate_growth(graph: EventsGraph, n: int) -> list[History]:
    """Every history reachable by growing, of size ``n`` (systematic traversal)."""
    k = graph.k
    memo: dict[tuple[int, int, int], list[tuple]] = {}

    def trees(t: int, i: int, m: int) -> list[tuple]:
        key = (t, i, m)
        if key in memo:
            return memo[key]
        out: list[tuple] = []
        if t == k and m == 1:
            out.append((t, i, ()))
        if t < k:
            out.extend((t, i, (c,)) for c in trees(t + 1, i, m))
        u = graph.node(t, i)
        targets = graph.duplication(u) + graph.transfer(u)
        for m1 in range(1, m):
            for v in targets:
                for j in sorted(graph.numbers[v]):
                    for a in trees(t, i, m1):
                        for b in trees(t, j, m - m1):
                            out.append((t, i, (a, b)))
        memo[key] = out
        return out

    return [decode(code, graph) for i in range(1, k + 1) for code in trees(1, i, n)]
