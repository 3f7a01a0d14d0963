"""Exact history counts by dynamic programming over the grammar.

Sizes are processed in increasing order.  For a fixed size ``n`` the
nonterminals are evaluated in the grammar's same-size dependency order:
products of two nonterminals only read sizes ``< n`` (both factors are
nonempty), while single-nonterminal alternatives read size ``n`` of a
nonterminal evaluated earlier.

Products sharing their left factor, such as the transfer alternatives
``H_u H_v W(v)`` for all receivers ``v``, are convolved once against the
summed right factors; the sums are cached per receiver set and size.
"""

from __future__ import annotations

import csv
import io
import operator
from dataclasses import dataclass
from typing import Sequence

from .grammar import Grammar, Model, Nonterminal, Terminal, compile_grammar
from .species_tree import Ranking

__all__ = ["CountTable", "count", "count_single", "count_sequence", "plan"]


def plan(grammar: Grammar, nt: int) -> list[tuple]:
    """Decompose the alternatives of ``nt`` into counting terms.

    Terms are ``("unit",)`` for a lone ``Z``, ``("copy", i, alt)`` for a
    single nonterminal ``i`` (plus size-0 terminals) and
    ``("conv", left, rights, alts)`` for a group of binary products sharing
    their left factor.
    """
    terms: list[tuple] = []
    groups: dict[int, list] = {}
    for alt in grammar.productions[nt]:
        refs = [s for s in alt if isinstance(s, Nonterminal)]
        size = sum(s.size for s in alt if isinstance(s, Terminal))
        if not refs:
            if size != 1:
                raise ValueError("terminal-only alternative must have size 1")
            terms.append(("unit", alt))
        elif len(refs) == 1 and size == 0:
            terms.append(("copy", refs[0].id, alt))
        elif len(refs) == 2 and size == 0:
            left = refs[0].id
            if left not in groups:
                groups[left] = [[], []]
                terms.append(("conv", left, groups[left][0], groups[left][1]))
            groups[left][0].append(refs[1].id)
            groups[left][1].append(alt)
        else:
            raise ValueError(f"unsupported alternative shape {alt!r}")
    return [(t[0], t[1], tuple(t[2]), tuple(t[3])) if t[0] == "conv" else t for t in terms]


@dataclass(frozen=True)
class CountTable:
    """``table[nt][n]``: number of words of size ``n`` derived from ``nt``."""

    grammar: Grammar
    max_size: int
    rows: dict  # representative id -> list[int] of length max_size + 1

    def __getitem__(self, nt: Nonterminal | int) -> list[int]:
        i = nt if isinstance(nt, int) else nt.id
        return self.rows[self.grammar.representative[i]]

    def histories(self, n: int) -> int:
        """Number of histories of size ``n``."""
        return self[self.grammar.start][n]

    @property
    def sequence(self) -> list[int]:
        """Counts for sizes 1..max_size."""
        return self[self.grammar.start][1:]

    def to_csv(self, sizes: Sequence[int] | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "count"])
        for n in sizes if sizes is not None else range(1, self.max_size + 1):
            w.writerow([n, str(self.histories(n))])
        return buf.getvalue()


def _convolve(a: list[int], b: list[int], n: int) -> int:
    # sum_{m=1}^{n-1} a[m] * b[n-m]
    return sum(map(operator.mul, a[1:n], b[n - 1 : 0 : -1]))


def count(grammar: Grammar, n_max: int) -> CountTable:
    """Fill the count table for sizes 0..n_max."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    rep = grammar.representative
    order = grammar.evaluation_order()
    rows: dict[int, list[int]] = {i: [0] for i in order}

    plans = []
    sums: dict[tuple[int, ...], list[int]] = {}
    for i in order:
        compiled = []
        for term in plan(grammar, i):
            if term[0] == "unit":
                compiled.append(("unit",))
            elif term[0] == "copy":
                compiled.append(("copy", rows[rep[term[1]]]))
            else:
                rights = tuple(sorted(rep[r] for r in term[2]))
                if len(rights) == 1:
                    right = rows[rights[0]]
                else:
                    right = sums.setdefault(rights, [0])
                compiled.append(("conv", rows[rep[term[1]]], right))
        plans.append((rows[i], compiled))

    sum_sources = [(lst, [rows[r] for r in key]) for key, lst in sums.items()]
    for n in range(1, n_max + 1):
        if n > 1:
            for lst, srcs in sum_sources:
                lst.append(sum(src[n - 1] for src in srcs))
        for row, compiled in plans:
            total = 0
            for term in compiled:
                tag = term[0]
                if tag == "conv":
                    if n > 1:
                        total += _convolve(term[1], term[2], n)
                elif tag == "copy":
                    total += term[1][n]
                elif n == 1:
                    total += 1
            row.append(total)
    return CountTable(grammar=grammar, max_size=n_max, rows=rows)


def count_sequence(tree, model: Model | str, n_max: int, ranking: Ranking | None = None) -> list[int]:
    """Number of histories of sizes 1..n_max."""
    return count(compile_grammar(tree, model, ranking), n_max).sequence


def count_single(tree, model: Model | str, n: int, ranking: Ranking | None = None) -> int:
    """Number of histories of size ``n``."""
    return count(compile_grammar(tree, model, ranking), n).histories(n)
