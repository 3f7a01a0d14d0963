"""Counting, sampling and asymptotics of gene-family histories in a species tree."""

from .counting import CountTable, count, count_sequence, count_single
from .grammar import Grammar, Model, compile_grammar
from .history import Event, History, parse_history
from .sampling import Sampler, sample, statistics, validate
from .species_tree import (
    Ranking,
    SpeciesTree,
    TimeSlicedTree,
    caterpillar,
    complete,
    parse_newick,
    time_slice,
)

__all__ = [
    "CountTable",
    "Event",
    "Grammar",
    "History",
    "Model",
    "Ranking",
    "Sampler",
    "SpeciesTree",
    "TimeSlicedTree",
    "caterpillar",
    "compile_grammar",
    "complete",
    "count",
    "count_sequence",
    "count_single",
    "parse_history",
    "parse_newick",
    "sample",
    "statistics",
    "time_slice",
    "validate",
]
