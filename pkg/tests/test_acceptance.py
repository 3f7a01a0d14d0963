"""End-to-end acceptance checks, one test per criterion.

The terminal summary prints one PASS/FAIL line per criterion.
"""

import math
import random
import subprocess
import sys
import time

import pytest
from scipy.stats import chisquare

from genehist.asymptotics import (
    caterpillar_closed_form,
    complete_closed_form,
    dominant_singularity_udl,
    extrapolate_constant,
    extremal_shape_report,
    gamma_udl,
    growth_estimate,
)
from genehist.counting import count, count_sequence, count_single
from genehist.enumeration import enumerate_histories
from genehist.events_graph import count_rdtsl, transport
from genehist.grammar import Model, compile_grammar
from genehist.sampling import Sampler, statistics, validate
from genehist.species_tree import (
    all_rankings,
    caterpillar,
    complete,
    random_tree,
    time_slice,
    tree_shapes,
)

CATERPILLAR_ROWS = {
    1: [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796, 58786, 208012, 742900],
    2: [2, 7, 34, 200, 1318, 9354, 69864, 541323, 4310950, 35066384],
    3: [3, 19, 159, 1565, 17022, 197928, 2413494, 30490089, 395828145],
    4: [4, 39, 495, 7235, 115303, 1948791, 34379505, 626684162],
    5: [5, 69, 1230, 24843, 541315, 12426996, 296546600, 7292489761],
}
COMPLETE_ROWS = {
    0: CATERPILLAR_ROWS[1],
    1: CATERPILLAR_ROWS[2],
    2: [4, 34, 368, 4685, 66416, 1013268, 16279788, 271594611, 4660794200],
    3: [8, 148, 3376, 89390, 2624872, 82866636, 2755019736, 95135709027],
    4: [16, 616, 28832, 1556780, 93017264, 5971377672, 403667945712],
}
CATALAN_GAMMA = 1 / (4 * math.sqrt(math.pi))


def random_trees(count_, k_max, seed):
    rng = random.Random(seed)
    return [random_tree(rng.randint(2, k_max), rng) for _ in range(count_)]


@pytest.mark.acceptance(1, "golden UDL sequences for caterpillar and complete trees")
def test_golden_sequences():
    start = time.perf_counter()
    for k, row in CATERPILLAR_ROWS.items():
        assert count_sequence(caterpillar(k), "udl", len(row)) == row, k
    for h, row in COMPLETE_ROWS.items():
        assert count_sequence(complete(h), "udl", len(row)) == row, h
    assert time.perf_counter() - start < 5


@pytest.mark.acceptance(2, "enumeration equals counting for k <= 3, all models, n <= 6")
def test_oracle_equivalence():
    start = time.perf_counter()
    checked = 0
    for k in (1, 2, 3):
        for tree in tree_shapes(k):
            for model in Model:
                rankings = list(all_rankings(tree)) if model.ranked else [None]
                for r in rankings:
                    counts = count_sequence(tree, model, 6, r)
                    for n in range(1, 7):
                        assert len(enumerate_histories(tree, model, n, r)) == counts[n - 1], (k, model, n)
                        checked += 1
    assert checked == 4 * 5 * 6
    assert time.perf_counter() - start < 120


@pytest.mark.acceptance(3, "sampler uniformity by chi-square at 0.001")
def test_sampler_uniformity():
    start = time.perf_counter()
    cases = [(caterpillar(1), "udl", 4, 5), (caterpillar(2), "udl", 3, 34), (caterpillar(2), "udlt", 2, 9)]
    for seed, (tree, model, n, expected) in enumerate(cases):
        support = enumerate_histories(tree, model, n)
        assert len(support) == expected
        index = {h: i for i, h in enumerate(support)}
        g = compile_grammar(tree, model)
        sampler = Sampler(g, count(g, n), seed)
        freq = [0] * len(support)
        for _ in range(100_000):
            freq[index[sampler.sample(n)]] += 1
        assert chisquare(freq).pvalue > 0.001, (model, n, freq)
    assert time.perf_counter() - start < 60


@pytest.mark.acceptance(4, "exact singularities and closed forms")
def test_asymptotics_exactness():
    leaf = caterpillar(1)
    assert abs(dominant_singularity_udl(leaf) - 0.25) < 1e-12
    assert abs(gamma_udl(leaf) - CATALAN_GAMMA) < 1e-9
    for k in range(1, 13):
        assert abs(caterpillar_closed_form(k).lam - dominant_singularity_udl(caterpillar(k))) < 1e-10
    for h in range(5):
        assert abs(complete_closed_form(h).mu - dominant_singularity_udl(complete(h))) < 1e-10
    assert abs(dominant_singularity_udl(caterpillar(2)) - (1 - (3 - math.sqrt(5)) ** 2) / 4) < 1e-12


@pytest.mark.acceptance(5, "leading constant matches extrapolated counts to n = 800")
def test_constant_vs_counts():
    start = time.perf_counter()
    for tree in (caterpillar(1), caterpillar(2), caterpillar(3), complete(2)):
        counts = count_sequence(tree, "udl", 800)
        rho = dominant_singularity_udl(tree)
        limit = extrapolate_constant(counts, rho, sizes=(200, 400, 800))
        assert limit == pytest.approx(gamma_udl(tree, rho), rel=0.005)
    assert time.perf_counter() - start < 120


@pytest.mark.acceptance(6, "growth estimate at n = 400 within 0.5% on 20 random trees")
def test_growth_estimator():
    for tree in random_trees(20, 8, seed=2024):
        exact = 1 / dominant_singularity_udl(tree)
        assert growth_estimate(tree, "udl", 400) == pytest.approx(exact, rel=0.005), tree.to_newick()


@pytest.mark.acceptance(7, "RDT-SL counts do not depend on the ranked tree; transport is a bijection")
def test_rdtsl_invariance():
    for k in (2, 3, 4):
        trees = [time_slice(t, r) for t in tree_shapes(k) for r in all_rankings(t)]
        seqs = {tuple(count(compile_grammar(s, Model.RDT_SL), 8).sequence) for s in trees}
        assert len(seqs) == 1, k
    assert count_rdtsl(trees[0], 1) == 4

    a, b = [time_slice(t, r) for t in tree_shapes(3) for r in all_rankings(t)]
    assert a.labels != b.labels
    for n in range(1, 5):
        source = enumerate_histories(a, "rdt-sl", n)
        target = set(enumerate_histories(b, "rdt-sl", n))
        image = [transport(h, a, b) for h in source]
        assert len(set(image)) == len(source)
        assert set(image) == target
        assert [transport(h, b, a) for h in image] == source


@pytest.mark.acceptance(8, "UDLT/UDL count ratio >= 1e3 at k = 8, n = 20 and monotone in n")
def test_dlt_explosion():
    rng = random.Random(8)
    for _ in range(20):
        tree = random_tree(8, rng)
        dlt = count_sequence(tree, "udlt", 20)
        dl = count_sequence(tree, "udl", 20)
        ratios = [dlt[n - 1] / dl[n - 1] for n in range(5, 21)]
        assert ratios[-1] >= 1e3, tree.to_newick()
        assert all(a <= b for a, b in zip(ratios, ratios[1:])), tree.to_newick()


@pytest.mark.acceptance(9, "losses dominate the score of uniform UDL histories")
def test_loss_dominance():
    tree = random_tree(8, 0)
    g = compile_grammar(tree, "udl")
    sampler = Sampler(g, count(g, 20), 0)
    loss = dup = 0.0
    for h in sampler.sample_many(20, 1000):
        st = statistics(h)
        assert validate(h, tree, "udl") is None
        loss += st.n_L / st.score
        dup += st.n_D / st.score
    assert loss / 1000 > dup / 1000


@pytest.mark.acceptance(10, "caterpillar has the largest and balanced trees the smallest UDL growth (k <= 8)")
def test_extremal_shapes():
    reports = [extremal_shape_report(k) for k in range(1, 9)]
    failed = [(r.k, r.counterexamples) for r in reports if not r.passed]
    assert not failed, f"counterexamples: {failed}"
    assert all(r.exhaustive for r in reports)


CLI_RUNS = [
    ["count", "--tree", "builtin:caterpillar:4", "--model", "udl", "--n", "1..8"],
    ["count", "--tree", "builtin:random:6:3", "--ranking", "random:5", "--model", "rdlt", "--n", "1..10"],
    ["sample", "--tree", "builtin:random:8:1", "--model", "udl", "--n", "20", "--samples", "50", "--seed", "11"],
    ["sample", "--tree", "builtin:complete:2", "--ranking", "random:2", "--model", "rdt-sl", "--n", "8",
     "--samples", "20", "--seed", "4", "--format", "json"],
    ["growth", "--tree", "builtin:caterpillar:2", "--model", "udl", "--n", "400"],
    ["asym", "--k", "1..12", "--h", "0..4"],
    ["invariance", "--k", "2..3", "--n", "1..6"],
    ["extremal", "--k", "2..7"],
]


@pytest.mark.acceptance(11, "every CLI command is byte-identical across runs with a fixed seed")
def test_cli_determinism():
    for argv in CLI_RUNS:
        outs = [
            subprocess.run([sys.executable, "-m", "genehist", *argv], capture_output=True, check=True).stdout
            for _ in range(2)
        ]
        assert outs[0] == outs[1], argv
        assert outs[0] and b"\r" not in outs[0]


@pytest.mark.acceptance(12, "asym reports both complete-tree constants side by side")
def test_beta_report():
    proc = subprocess.run(
        [sys.executable, "-m", "genehist", "asym", "--h", "0..4"], capture_output=True, check=True, text=True
    )
    lines = proc.stdout.splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, l.split(","))) for l in lines[1:]]
    h0 = rows[0]
    assert h0["tree"] == "complete:0"
    oracle, formula = float(h0["beta_oracle"]), float(h0["alpha_or_beta_formula"])
    assert abs(oracle - CATALAN_GAMMA) < 1e-9
    assert oracle / formula == pytest.approx(2.0, rel=1e-9)
    for row in rows:
        assert row["beta_oracle"] and row["alpha_or_beta_formula"]
        assert float(row["beta_oracle"]) == pytest.approx(float(row["gamma_bisection"]), rel=1e-9)
