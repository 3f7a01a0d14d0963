"""Exhaustive listing of all histories of a given size (test oracle).

The generator expands the definition of a history directly: a gene in
species ``u`` is an extant gene (``u`` a leaf), or it speciates into the
child species of ``u``, duplicates within ``u``, or transfers a copy to a
species incomparable with ``u``.  Losses appear only as one of the two
children of a binary speciation.  Nothing here goes through the grammar,
so agreement with the counting module is independent evidence.

Exponential in ``n``; keep to tiny instances.
"""

from __future__ import annotations

import itertools

from .history import Event, History
from .species_tree import Ranking, SpeciesTree, TimeSlicedTree, time_slice

__all__ = ["EnumerationBudgetExceeded", "enumerate_histories"]

_MODELS = {
    # model: (ranked, transfers, speciation must lose one child)
    "udl": (False, False, False),
    "rdl": (True, False, False),
    "udlt": (False, True, False),
    "rdlt": (True, True, False),
    "rdt-sl": (True, True, True),
}


class EnumerationBudgetExceeded(RuntimeError):
    pass


def _compositions(n: int, parts: int):
    """Tuples of ``parts`` positive integers summing to ``n``."""
    if parts == 0:
        if n == 0:
            yield ()
        return
    for cut in itertools.combinations(range(1, n), parts - 1):
        bounds = (0,) + cut + (n,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(parts))


def enumerate_histories(
    tree: SpeciesTree | TimeSlicedTree,
    model,
    n: int,
    ranking: Ranking | None = None,
    budget: int = 5_000_000,
) -> list[History]:
    """All histories of exactly ``n`` extant genes.

    ``model`` is a model name (``"udl"``, ``"rdlt"``, ...) or a value whose
    ``str`` is one.  Ranked models use the time-sliced tree, built from
    ``ranking`` when a plain species tree is given.  Raises
    :class:`EnumerationBudgetExceeded` once more than ``budget`` partial
    histories have been built.
    """
    key = str(model).lower().replace("_", "-")
    if key not in _MODELS:
        raise ValueError(f"unknown model {model!r}")
    ranked, transfers, sl = _MODELS[key]
    if ranked and not isinstance(tree, TimeSlicedTree):
        if ranking is None:
            raise ValueError("ranked model needs a ranking")
        tree = time_slice(tree, ranking)
    if not ranked and isinstance(tree, TimeSlicedTree):
        raise ValueError("unranked model on a time-sliced tree")
    if n < 1:
        return []

    nodes = range(len(tree.labels))
    kids = tree.children
    parent = [None] * len(tree.labels)
    for u in nodes:
        for c in kids[u]:
            parent[c] = u

    def line(u):
        out = set()
        while u is not None:
            out.add(u)
            u = parent[u]
        return out

    def below(u):
        out, stack = set(), [u]
        while stack:
            v = stack.pop()
            out.add(v)
            stack.extend(kids[v])
        return out

    if not transfers:
        partners = {u: () for u in nodes}
    elif ranked:
        partners = {
            u: tuple(v for v in nodes if v != u and tree.slice_of[v] == tree.slice_of[u])
            for u in nodes
        }
    else:
        partners = {u: tuple(v for v in nodes if v not in line(u) | below(u)) for u in nodes}

    memo: dict[tuple[int, int], list[History]] = {}
    built = 0

    def genes(u: int, m: int) -> list[History]:
        nonlocal built
        if (u, m) in memo:
            return memo[u, m]
        out: list[History] = []
        if not kids[u] and m == 1:
            out.append(History(Event.EXTANT, u))
        # speciation
        if len(kids[u]) == 1:
            for h in genes(kids[u][0], m):
                out.append(History(Event.S, u, (h,)))
        elif len(kids[u]) == 2:
            a, b = kids[u]
            if not sl:
                for ma, mb in _compositions(m, 2):
                    for x in genes(a, ma):
                        for y in genes(b, mb):
                            out.append(History(Event.S, u, (x, y)))
            lost_b = History(Event.L, b)
            for x in genes(a, m):
                out.append(History(Event.S, u, (x, lost_b)))
            lost_a = History(Event.L, a)
            for y in genes(b, m):
                out.append(History(Event.S, u, (lost_a, y)))
        # duplication and transfer: two surviving copies
        for ma, mb in _compositions(m, 2):
            left = genes(u, ma)
            for v, event in [(u, Event.D)] + [(w, Event.T) for w in partners[u]]:
                for x in left:
                    for y in genes(v, mb):
                        out.append(History(event, u, (x, y)))
        built += len(out)
        if built > budget:
            raise EnumerationBudgetExceeded(f"more than {budget} partial histories")
        memo[u, m] = out
        return out

    return genes(tree.root, n)
