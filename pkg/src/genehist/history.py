"""Event-labeled gene histories and their annotated Newick form.

A history is an ordered rooted unary-binary tree.  Each node carries an
event (speciation, duplication, loss, transfer or extant gene) and the
index of the species node it lives in.  Histories are immutable and
hashable, so equal trees compare and hash equal.

Annotated Newick::

    history := node ";"
    node    := [ "(" node ("," node)* ")" ] "[" EVENT ":" SPECIES "]"
    EVENT   := "S" | "D" | "L" | "T" | "E"

``E`` is an extant gene; leaves are written as their annotation alone, e.g.
``([E:A],[L:B])[S:R];``.  SPECIES is the species-node label.
"""

from __future__ import annotations

import enum
import re
from typing import Callable, Iterator, Sequence

__all__ = ["Event", "History", "parse_history"]


class Event(str, enum.Enum):
    S = "S"
    D = "D"
    L = "L"
    T = "T"
    EXTANT = "E"


class History:
    __slots__ = ("event", "species", "children", "_hash", "_size")

    def __init__(self, event: Event, species: int, children: Sequence["History"] = ()):
        self.event = Event(event)
        self.species = species
        self.children = tuple(children)
        self._hash = hash((self.event, species, self.children))
        self._size = (
            sum(c._size for c in self.children)
            if self.children
            else int(self.event is Event.EXTANT)
        )

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, History) or self._hash != other._hash:
            return False
        # iterative to cope with deep trees
        stack = [(self, other)]
        while stack:
            a, b = stack.pop()
            if a is b:
                continue
            if (
                a._hash != b._hash
                or a.event is not b.event
                or a.species != b.species
                or len(a.children) != len(b.children)
            ):
                return False
            stack.extend(zip(a.children, b.children))
        return True

    def __repr__(self) -> str:
        return f"History({self.to_newick()!r})"

    @property
    def size(self) -> int:
        """Number of extant leaves."""
        return self._size

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def nodes(self) -> Iterator["History"]:
        """Preorder traversal."""
        stack = [self]
        while stack:
            x = stack.pop()
            yield x
            stack.extend(reversed(x.children))

    def walk(self) -> Iterator[tuple[tuple[int, ...], "History"]]:
        """Preorder traversal yielding ``(path, node)``; path holds child indices."""
        stack = [((), self)]
        while stack:
            path, x = stack.pop()
            yield path, x
            for i in reversed(range(len(x.children))):
                stack.append((path + (i,), x.children[i]))

    def map_species(self, f: Callable[[int], int]) -> "History":
        return _rebuild(self, lambda x, kids: History(x.event, f(x.species), kids))

    def to_newick(self, labels: Sequence[str] | None = None) -> str:
        def name(u):
            return labels[u] if labels is not None else str(u)

        out: list[str] = []
        stack: list = [self]
        while stack:
            item = stack.pop()
            if isinstance(item, str):
                out.append(item)
                continue
            tag = f"[{item.event.value}:{name(item.species)}]"
            if not item.children:
                out.append(tag)
                continue
            stack.append(")" + tag)
            for i, c in enumerate(reversed(item.children)):
                stack.append(c)
                if i < len(item.children) - 1:
                    stack.append(",")
            out.append("(")
        return "".join(out) + ";"


def _rebuild(root: History, make: Callable[[History, tuple], History]) -> History:
    """Bottom-up reconstruction without recursion."""
    done: dict[int, History] = {}
    stack = [(root, False)]
    while stack:
        x, expanded = stack.pop()
        if expanded or not x.children:
            done[id(x)] = make(x, tuple(done[id(c)] for c in x.children))
        else:
            stack.append((x, True))
            stack.extend((c, False) for c in x.children)
    return done[id(root)]


_TOKEN = re.compile(r"\s*(?:(\()|(\))|(,)|(;)|\[([SDLTE]):([^\]]+)\])")


def parse_history(text: str, labels: Sequence[str] | None = None) -> History:
    """Inverse of :meth:`History.to_newick`.

    With ``labels`` the species names are resolved to node indices,
    otherwise they must be integers.
    """
    lookup = {l: i for i, l in enumerate(labels)} if labels is not None else None
    pos = 0
    stack: list[list] = [[]]
    while True:
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"malformed history at offset {pos}")
        pos = m.end()
        if m.group(1):
            stack.append([])
        elif m.group(2):
            m2 = _TOKEN.match(text, pos)
            if not m2 or not m2.group(5):
                raise ValueError(f"missing annotation after ')' at offset {pos}")
            pos = m2.end()
            kids = stack.pop()
            stack[-1].append(History(Event(m2.group(5)), _species(m2.group(6), lookup), kids))
        elif m.group(3):
            continue
        elif m.group(4):
            break
        else:
            stack[-1].append(History(Event(m.group(5)), _species(m.group(6), lookup)))
    if len(stack) != 1 or len(stack[0]) != 1 or text[pos:].strip():
        raise ValueError("malformed history")
    return stack[0][0]


def _species(token: str, lookup) -> int:
    if lookup is None:
        return int(token)
    try:
        return lookup[token]
    except KeyError:
        raise ValueError(f"unknown species {token!r}") from None
