"""Compile a species tree and an evolutionary model into a rule system.

Every species node ``u`` contributes nonterminals ``H_u`` (all histories
rooted at a gene of ``u``), ``S_u`` (speciation first; internal nodes only),
``D_u`` (duplication first) and, in transfer models with a nonempty
incomparable set, ``T_u`` (transfer first).  Terminals are species-agnostic:
``Z`` marks an extant gene (size 1), ``X`` a loss, ``Y`` a duplication and
``W(v)`` a transfer towards ``v`` (all size 0).

The grammar is the common input of counting, sampling and the checks built
on them.  Nonterminals of isomorphic subtrees share a *representative* for
counting in duplication-loss models, where a subtree's counts depend on its
shape only.
"""

from __future__ import annotations

import enum
import graphlib
from dataclasses import dataclass
from typing import Union

from .species_tree import (
    Ranking,
    SpeciesTree,
    TimeSlicedTree,
    incomparable_unranked,
    time_slice,
)

__all__ = [
    "Model",
    "Kind",
    "Nonterminal",
    "Terminal",
    "Grammar",
    "compile_grammar",
    "resolve_tree",
    "Z",
    "X",
    "Y",
]


class Model(enum.Enum):
    UDL = "udl"
    RDL = "rdl"
    UDLT = "udlt"
    RDLT = "rdlt"
    RDT_SL = "rdt-sl"

    @property
    def ranked(self) -> bool:
        return self in (Model.RDL, Model.RDLT, Model.RDT_SL)

    @property
    def transfers(self) -> bool:
        return self in (Model.UDLT, Model.RDLT, Model.RDT_SL)

    @property
    def speciation_loss(self) -> bool:
        """Every binary speciation is followed by the loss of one child."""
        return self is Model.RDT_SL

    @classmethod
    def parse(cls, text: str | "Model") -> "Model":
        if isinstance(text, Model):
            return text
        key = text.strip().lower().replace("_", "-")
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown model {text!r}")

    def __str__(self) -> str:
        return self.value


class Kind(str, enum.Enum):
    H = "H"
    S = "S"
    D = "D"
    T = "T"


@dataclass(frozen=True)
class Nonterminal:
    id: int
    kind: Kind
    species: int

    def __str__(self) -> str:
        return f"{self.kind.value}[{self.species}]"


@dataclass(frozen=True)
class Terminal:
    name: str
    size: int
    receiver: int | None = None

    def __str__(self) -> str:
        if self.name == "W":
            return f"W({self.receiver})"
        return self.name


Z = Terminal("Z", 1)
X = Terminal("X", 0)
Y = Terminal("Y", 0)


def W(v: int) -> Terminal:
    return Terminal("W", 0, v)


Symbol = Union[Nonterminal, Terminal]
Alternative = tuple  # tuple[Symbol, ...]
Tree = Union[SpeciesTree, TimeSlicedTree]


@dataclass(frozen=True)
class Grammar:
    tree: Tree
    model: Model
    nonterminals: tuple[Nonterminal, ...]
    productions: tuple[tuple[Alternative, ...], ...]
    start: int
    representative: tuple[int, ...]
    receivers: tuple[tuple[int, ...], ...]

    def lookup(self, kind: Kind | str, species: int) -> Nonterminal | None:
        kind = Kind(kind)
        for nt in self.nonterminals:
            if nt.kind is kind and nt.species == species:
                return nt
        return None

    def alternatives(self, nt: Nonterminal | int) -> tuple[Alternative, ...]:
        return self.productions[nt if isinstance(nt, int) else nt.id]

    @property
    def start_symbol(self) -> Nonterminal:
        return self.nonterminals[self.start]

    def evaluation_order(self) -> list[int]:
        """Representatives sorted so that same-size dependencies come first.

        Alternatives with two nonterminals only read strictly smaller sizes,
        so only single-nonterminal alternatives create same-size edges.
        """
        rep = self.representative
        graph: dict[int, set[int]] = {}
        for nt in self.nonterminals:
            if rep[nt.id] != nt.id:
                continue
            deps = graph.setdefault(nt.id, set())
            for alt in self.productions[nt.id]:
                refs = [s for s in alt if isinstance(s, Nonterminal)]
                if len(refs) == 1:
                    deps.add(rep[refs[0].id])
        return list(graphlib.TopologicalSorter(graph).static_order())

    def dump(self) -> str:
        """One production per line, e.g. ``H[0] -> S[0] | D[0]``."""
        labels = self.tree.labels
        lines = []
        for nt in self.nonterminals:
            alts = " | ".join(
                " ".join(_show(s, labels) for s in alt) for alt in self.productions[nt.id]
            )
            lines.append(f"{nt.kind.value}[{labels[nt.species]}] -> {alts}")
        return "\n".join(lines) + "\n"


def _show(sym: Symbol, labels) -> str:
    if isinstance(sym, Nonterminal):
        return f"{sym.kind.value}[{labels[sym.species]}]"
    if sym.name == "W":
        return f"W({labels[sym.receiver]})"
    return sym.name


def resolve_tree(tree: Tree, model: Model, ranking: Ranking | None = None) -> Tree:
    """The tree a model's histories live on: sliced for ranked models."""
    model = Model.parse(model)
    if model.ranked:
        if isinstance(tree, TimeSlicedTree):
            if ranking is not None and ranking != tree.ranking:
                raise ValueError("ranking does not match the time-sliced tree")
            return tree
        if ranking is None:
            raise ValueError(f"model {model} needs a ranking")
        return time_slice(tree, ranking)
    if isinstance(tree, TimeSlicedTree):
        raise ValueError(f"model {model} works on unranked trees")
    if ranking is not None:
        raise ValueError(f"model {model} does not take a ranking")
    return tree


def _receivers(tree: Tree, model: Model) -> tuple[tuple[int, ...], ...]:
    if not model.transfers:
        return tuple(() for _ in range(len(tree)))
    if isinstance(tree, TimeSlicedTree):
        return tuple(tree.incomparable(u) for u in range(len(tree)))
    return tuple(incomparable_unranked(tree, u) for u in range(len(tree)))


def _shape_keys(tree: Tree) -> dict[int, tuple]:
    keys: dict[int, tuple] = {}
    for u in tree.postorder():
        keys[u] = tuple(sorted(keys[c] for c in tree.children[u]))
    return keys


def compile_grammar(tree: Tree, model: Model | str, ranking: Ranking | None = None) -> Grammar:
    """Build the normalized grammar of ``model`` histories on ``tree``.

    Ranked models need either a :class:`TimeSlicedTree` or a ranking.
    """
    model = Model.parse(model)
    tree = resolve_tree(tree, model, ranking)
    receivers = _receivers(tree, model)
    order = tree.postorder()

    nts: list[Nonterminal] = []
    index: dict[tuple[Kind, int], Nonterminal] = {}

    def new(kind: Kind, u: int) -> Nonterminal:
        nt = Nonterminal(len(nts), kind, u)
        nts.append(nt)
        index[kind, u] = nt
        return nt

    for u in order:
        new(Kind.H, u)
        if tree.children[u]:
            new(Kind.S, u)
        new(Kind.D, u)
        if receivers[u]:
            new(Kind.T, u)

    prods: list[tuple] = [()] * len(nts)
    for u in order:
        H = index[Kind.H, u]
        kids = tree.children[u]
        head = [index[Kind.S, u]] if kids else [Z]
        alts = [tuple(head), (index[Kind.D, u],)]
        if receivers[u]:
            alts.append((index[Kind.T, u],))
        prods[H.id] = tuple(alts)

        if len(kids) == 2:
            hl, hr = index[Kind.H, kids[0]], index[Kind.H, kids[1]]
            s_alts = [] if model.speciation_loss else [(hl, hr)]
            s_alts += [(hl, X), (X, hr)]
            prods[index[Kind.S, u].id] = tuple(s_alts)
        elif len(kids) == 1:
            prods[index[Kind.S, u].id] = ((index[Kind.H, kids[0]],),)

        prods[index[Kind.D, u].id] = ((H, H, Y),)
        if receivers[u]:
            prods[index[Kind.T, u].id] = tuple(
                (H, index[Kind.H, v], W(v)) for v in receivers[u]
            )

    if model.transfers:
        rep = tuple(range(len(nts)))
    else:
        keys = _shape_keys(tree)
        first: dict[tuple, int] = {}
        for u in order:
            first.setdefault(keys[u], u)
        rep = tuple(index[nt.kind, first[keys[nt.species]]].id for nt in nts)

    return Grammar(
        tree=tree,
        model=model,
        nonterminals=tuple(nts),
        productions=tuple(prods),
        start=index[Kind.H, tree.root].id,
        representative=rep,
        receivers=receivers,
    )
