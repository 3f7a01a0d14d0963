"""Uniform random histories of a given size (recursive method) and checks.

Starting from the start symbol at size ``n`` the sampler draws one uniform
integer below the count of the current nonterminal and walks the
alternatives, subtracting their masses until the draw falls inside one.
Binary products are split by probing ``m = 1, n-1, 2, n-2, ...`` so that a
lopsided split, the common case, is found after few probes.  Each choice is
an exact integer comparison, so the output is exactly uniform given a
uniform source; :class:`random.Random` provides unbounded uniform integers
by rejection on fixed-width random bits.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterator

from .counting import CountTable, plan
from .grammar import Grammar, Kind, Model, Terminal, resolve_tree
from .history import Event, History, _rebuild
from .species_tree import Ranking, SpeciesTree, TimeSlicedTree

__all__ = [
    "Sampler",
    "sample",
    "Violation",
    "validate",
    "is_time_consistent",
    "unslice",
    "Statistics",
    "statistics",
]

_EVENT_OF = {Kind.S: Event.S, Kind.D: Event.D, Kind.T: Event.T}


def boustrophedon(n: int) -> Iterator[int]:
    """1, n-1, 2, n-2, ... over 1..n-1."""
    lo, hi = 1, n - 1
    while lo <= hi:
        yield lo
        if lo != hi:
            yield hi
        lo += 1
        hi -= 1


class Sampler:
    """Reusable sampler bound to a grammar and a filled count table.

    ``probes`` counts the split sizes examined so far, across all draws.
    """

    def __init__(self, grammar: Grammar, table: CountTable, seed: int | random.Random = 0):
        if table.grammar is not grammar:
            raise ValueError("count table was built from a different grammar")
        self.grammar = grammar
        self.table = table
        self.rng = seed if isinstance(seed, random.Random) else random.Random(seed)
        self.probes = 0
        self._plans = [plan(grammar, nt.id) for nt in grammar.nonterminals]

    def sample(self, n: int) -> History:
        if n < 1 or n > self.table.max_size:
            raise ValueError(f"size {n} outside the count table (1..{self.table.max_size})")
        if self.table.histories(n) == 0:
            raise ValueError(f"no history of size {n}")
        tree = self.grammar.tree
        nts = self.grammar.nonterminals
        # Each record is [event, species, child records]; built top-down then frozen.
        root: list = [None, None, []]
        tasks = [(self.grammar.start, n, root)]
        while tasks:
            nt, size, rec = tasks.pop()
            kind = nts[nt].kind
            u = nts[nt].species
            alt, split = self._choose(nt, size)
            if kind is Kind.H:
                if isinstance(alt[0], Terminal):
                    rec[0], rec[1] = Event.EXTANT, u
                else:
                    tasks.append((alt[0].id, size, rec))
                continue
            rec[0], rec[1] = _EVENT_OF[kind], u
            kids = tree.children[u]
            pos = 0
            for i, sym in enumerate(alt):
                if isinstance(sym, Terminal):
                    if sym.name == "X":
                        rec[2].append([Event.L, kids[i], []])
                    continue
                child: list = [None, None, []]
                rec[2].append(child)
                part = size if split is None else (split if pos == 0 else size - split)
                pos += 1
                tasks.append((sym.id, part, child))
        return _freeze(root)

    def sample_many(self, n: int, count: int) -> list[History]:
        return [self.sample(n) for _ in range(count)]

    def _choose(self, nt: int, n: int):
        """Pick an alternative of ``nt`` at size ``n``; returns (alt, split)."""
        table = self.table
        r = self.rng.randrange(table[nt][n])
        binary = None
        for term in self._plans[nt]:
            tag = term[0]
            if tag == "unit":
                if n == 1:
                    if r < 1:
                        return term[1], None
                    r -= 1
            elif tag == "copy":
                mass = table[term[1]][n]
                if r < mass:
                    return term[2], None
                r -= mass
            else:
                binary = term
        if binary is None or n < 2:
            raise AssertionError("count table inconsistent with grammar")
        _, left, rights, alts = binary
        lrow = table[left]
        rrows = [table[v] for v in rights]
        for m in boustrophedon(n):
            self.probes += 1
            a = lrow[m]
            if not a:
                continue
            for alt, rrow in zip(alts, rrows):
                mass = a * rrow[n - m]
                if r < mass:
                    return alt, m
                r -= mass
        raise AssertionError("count table inconsistent with grammar")


def _freeze(root: list) -> History:
    order = []
    stack = [root]
    while stack:
        rec = stack.pop()
        order.append(rec)
        stack.extend(rec[2])
    built: dict[int, History] = {}
    for rec in reversed(order):
        built[id(rec)] = History(rec[0], rec[1], [built[id(c)] for c in rec[2]])
    return built[id(root)]


def sample(grammar: Grammar, table: CountTable, n: int, seed: int | random.Random = 0) -> History:
    """One uniformly random history of size ``n``."""
    return Sampler(grammar, table, seed).sample(n)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    path: tuple[int, ...]
    message: str

    def __str__(self) -> str:
        where = "/".join(map(str, self.path)) or "root"
        return f"{where}: {self.message}"


def _incomparable(tree, u: int) -> set[int]:
    if isinstance(tree, TimeSlicedTree):
        return set(tree.incomparable(u))
    below = set(tree.preorder(u))
    above = set(tree.ancestors(u))
    return {v for v in range(len(tree)) if v not in below and v not in above}


def validate(
    history: History,
    tree: SpeciesTree | TimeSlicedTree,
    model: Model | str,
    ranking: Ranking | None = None,
) -> Violation | None:
    """First violation of the history constraints, or ``None`` if valid.

    Besides the structural rules this checks the model: no transfers in
    duplication-loss models, receivers within the donor's time slice in
    ranked models, losses only below speciations (a duplicated or
    transferred copy is never lost immediately), and in the
    speciation-loss model exactly one lost child at every binary speciation.
    """
    model = Model.parse(model)
    tree = resolve_tree(tree, model, ranking)
    n_species = len(tree)
    if tree.root != history.species:
        return Violation((), "history root is not at the species-tree root")
    for path, x in history.walk():
        u = x.species
        if not 0 <= u < n_species:
            return Violation(path, f"unknown species {u}")
        kids = x.children
        sp = tree.children[u]
        if not kids:
            if x.event is Event.EXTANT:
                if sp:
                    return Violation(path, "extant gene in an ancestral species")
            elif x.event is Event.L:
                if not path:
                    return Violation(path, "history reduced to a loss")
            else:
                return Violation(path, f"leaf with event {x.event.value}")
            continue
        if x.event in (Event.EXTANT, Event.L):
            return Violation(path, f"internal node with event {x.event.value}")
        if len(kids) == 1:
            if x.event is not Event.S:
                return Violation(path, "unary node that is not a speciation")
            if len(sp) != 1:
                return Violation(path, "unary speciation at a non-unary species")
            if kids[0].species != sp[0]:
                return Violation(path, "speciation child species mismatch")
            if kids[0].event is Event.L:
                return Violation(path, "loss below a unary speciation")
            continue
        if len(kids) != 2:
            return Violation(path, f"node with {len(kids)} children")
        left, right = kids
        if x.event is Event.S:
            if len(sp) != 2:
                return Violation(path, "binary speciation at a non-binary species")
            if (left.species, right.species) != sp:
                return Violation(path, "speciation children species mismatch")
            lost = (left.event is Event.L) + (right.event is Event.L)
            if lost == 2:
                return Violation(path, "both speciation children lost")
            if model.speciation_loss and lost != 1:
                return Violation(path, "speciation without a loss")
            continue
        if left.event is Event.L or right.event is Event.L:
            return Violation(path, f"loss directly below {x.event.name}")
        if x.event is Event.D:
            if left.species != u or right.species != u:
                return Violation(path, "D children species mismatch")
        elif x.event is Event.T:
            if not model.transfers:
                return Violation(path, f"transfer in model {model}")
            if left.species != u:
                return Violation(path, "T left child species mismatch")
            if right.species not in _incomparable(tree, u):
                return Violation(path, "T receiver not incomparable with the donor")
    return None


def unslice(history: History, sliced: TimeSlicedTree) -> History:
    """Read a ranked-model history on the underlying unranked tree.

    Inserted unary nodes stand for the edge above their origin species, so
    their speciations are dropped and every gene is mapped to ``origin``.
    """
    def make(x: History, kids: tuple) -> History:
        if x.event is Event.S and len(kids) == 1:
            return kids[0]
        return History(x.event, sliced.origin[x.species], kids)

    return _rebuild(history, make)


def is_time_consistent(history: History, tree: SpeciesTree) -> bool:
    """False iff some gene has an ancestor in species ``v`` and a descendant
    in a strict ancestor of ``v``."""
    anc = [set(tree.ancestors(u)) for u in range(len(tree))]
    # (node, species of strict ancestors of the node's parent)
    stack = [(history, (), None)]
    while stack:
        x, above, parent_species = stack.pop()
        u = x.species
        for v in above:
            if u in anc[v]:
                return False
        deeper = above if parent_species is None else above + (parent_species,)
        for c in x.children:
            stack.append((c, deeper, u))
    return True


@dataclass(frozen=True)
class Statistics:
    n_S: int
    n_D: int
    n_L: int
    n_T: int
    n_extant: int

    @property
    def score(self) -> int:
        return self.n_D + self.n_L + self.n_T

    def as_dict(self) -> dict:
        return {
            "score": self.score,
            "n_S": self.n_S,
            "n_D": self.n_D,
            "n_L": self.n_L,
            "n_T": self.n_T,
            "n_extant": self.n_extant,
        }


def statistics(history: History) -> Statistics:
    tally = {e: 0 for e in Event}
    for x in history.nodes():
        tally[x.event] += 1
    return Statistics(
        n_S=tally[Event.S],
        n_D=tally[Event.D],
        n_L=tally[Event.L],
        n_T=tally[Event.T],
        n_extant=tally[Event.EXTANT],
    )
