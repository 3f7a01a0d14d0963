"""Command-line front end.

    genehist count --tree builtin:caterpillar:4 --model udl --n 1..8
    genehist sample --tree tree.nwk --model udlt --n 10 --samples 5 --seed 1
    genehist growth --tree builtin:caterpillar:2 --model udl --n 400
    genehist asym --k 1..12 --h 0..4
    genehist invariance --k 3 --n 1..8
    genehist extremal --k 2..8

Tables go to stdout as CSV (header row, LF endings) or JSON; big integers
are written as decimal strings.  Exit status: 0 ok, 1 a checked property
failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import asymptotics
from .counting import count
from .events_graph import count_rdtsl
from .grammar import Model, compile_grammar
from .sampling import Sampler, statistics, validate
from .species_tree import (
    Ranking,
    SpeciesTree,
    all_rankings,
    caterpillar,
    complete,
    parse_newick,
    random_ranking,
    random_tree,
    read_ranking,
    time_slice,
    tree_shapes,
    unique_ranking,
)

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Argument parsing helpers


def parse_range(text: str) -> list[int]:
    """``"7"`` -> [7]; ``"1..8"`` -> [1, ..., 8]."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            a, b = int(lo), int(hi)
            if a > b:
                raise ValueError
            return list(range(a, b + 1))
        return [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or A..B, got {text!r}") from None


def load_tree(spec: str) -> SpeciesTree:
    if spec.startswith("builtin:"):
        parts = spec.split(":")[1:]
        try:
            kind, args = parts[0], [int(p) for p in parts[1:]]
        except (IndexError, ValueError):
            raise UsageError(f"bad builtin tree {spec!r}") from None
        if kind == "caterpillar" and len(args) == 1 and args[0] >= 1:
            return caterpillar(args[0])
        if kind == "complete" and len(args) == 1 and args[0] >= 0:
            return complete(args[0])
        if kind == "random" and len(args) == 2 and args[0] >= 1:
            return random_tree(args[0], args[1])
        raise UsageError(
            f"bad builtin tree {spec!r}; use builtin:caterpillar:K, builtin:complete:H or builtin:random:K:SEED"
        )
    text = spec if spec.rstrip().endswith(";") and spec.lstrip().startswith("(") else None
    if text is None:
        try:
            text = Path(spec).read_text(encoding="utf-8")
        except OSError as e:
            raise UsageError(f"cannot read tree file {spec!r}: {e.strerror}") from None
    try:
        return parse_newick(text)
    except ValueError as e:
        raise UsageError(f"tree {spec!r}: {e}") from None


def load_ranking(spec: str | None, tree: SpeciesTree, model: Model) -> Ranking | None:
    if not model.ranked:
        if spec is not None:
            raise UsageError(f"model {model} does not take a ranking")
        return None
    if spec is None:
        raise UsageError(f"model {model} needs --ranking (a file, 'unique' or 'random:SEED')")
    if spec == "unique":
        try:
            return unique_ranking(tree)
        except ValueError as e:
            raise UsageError(str(e)) from None
    if spec.startswith("random:"):
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad ranking seed in {spec!r}") from None
        return random_ranking(tree, seed)
    try:
        text = Path(spec).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read ranking file {spec!r}: {e.strerror}") from None
    try:
        return read_ranking(tree, text)
    except ValueError as e:
        raise UsageError(f"ranking {spec!r}: {e}") from None


def emit(rows: list[dict], columns: list[str], fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps(rows, indent=1) + "\n")
        return
    w = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def _model_setup(args):
    tree = load_tree(args.tree)
    model = Model.parse(args.model)
    ranking = load_ranking(args.ranking, tree, model)
    return tree, model, ranking


# ---------------------------------------------------------------------------
# Commands


def cmd_count(args, out) -> int:
    tree, model, ranking = _model_setup(args)
    table = count(compile_grammar(tree, model, ranking), max(args.n))
    rows = [{"n": n, "count": str(table.histories(n))} for n in args.n]
    emit(rows, ["n", "count"], args.format, out)
    return EXIT_OK


def cmd_sample(args, out) -> int:
    tree, model, ranking = _model_setup(args)
    if len(args.n) != 1:
        raise UsageError("sample takes a single --n")
    n = args.n[0]
    grammar = compile_grammar(tree, model, ranking)
    table = count(grammar, n)
    if table.histories(n) == 0:
        raise UsageError(f"no history of size {n}")
    sampler = Sampler(grammar, table, args.seed)
    labels = grammar.tree.labels
    rows = []
    status = EXIT_OK
    for i in range(args.samples):
        h = sampler.sample(n)
        if args.check and validate(h, grammar.tree, model) is not None:
            status = EXIT_FAILED
        st = statistics(h)
        rows.append({"index": i, "history": h.to_newick(labels), **st.as_dict()})
    stat_cols = ["index", "score", "n_S", "n_D", "n_L", "n_T", "n_extant"]
    if args.format == "json":
        emit(rows, ["index", "history"] + stat_cols[1:], "json", out)
    else:
        for r in rows:
            out.write(r["history"] + "\n")
    if args.stats:
        with open(args.stats, "w", encoding="utf-8", newline="") as f:
            emit([{c: r[c] for c in stat_cols} for r in rows], stat_cols, "csv", f)
    return status


def cmd_growth(args, out) -> int:
    tree, model, ranking = _model_setup(args)
    sizes = [n for n in args.n if n >= 2]
    if not sizes:
        raise UsageError("growth needs n >= 2")
    seq = count(compile_grammar(tree, model, ranking), max(sizes)).sequence
    exact = 1.0 / asymptotics.dominant_singularity_udl(tree) if model is Model.UDL else None
    rows = []
    for n in sizes:
        if seq[n - 2] == 0:
            raise UsageError(f"no history of size {n - 1}")
        est = seq[n - 1] / seq[n - 2]
        rows.append(
            {
                "n": n,
                "estimate": repr(est),
                "exact": "" if exact is None else repr(exact),
                "ratio": "" if exact is None else repr(est / exact),
            }
        )
    emit(rows, ["n", "estimate", "exact", "ratio"], args.format, out)
    return EXIT_OK


def cmd_asym(args, out) -> int:
    cols = ["tree", "k", "lambda_or_mu", "growth", "alpha_or_beta_formula", "beta_oracle", "gamma_bisection"]
    rows = []
    if args.tree:
        tree = load_tree(args.tree)
        e = asymptotics.expansion_udl(tree, args.tol)
        rows.append(
            {
                "tree": args.tree,
                "k": tree.size,
                "lambda_or_mu": repr(e.rho),
                "growth": repr(e.growth),
                "alpha_or_beta_formula": "",
                "beta_oracle": "",
                "gamma_bisection": repr(e.gamma),
            }
        )
    for k in args.k or []:
        c = asymptotics.caterpillar_closed_form(k)
        g = asymptotics.gamma_udl(caterpillar(k), tol=args.tol)
        rows.append(
            {
                "tree": f"caterpillar:{k}",
                "k": k,
                "lambda_or_mu": repr(c.lam),
                "growth": repr(c.growth),
                "alpha_or_beta_formula": repr(c.alpha),
                "beta_oracle": "",
                "gamma_bisection": repr(g),
            }
        )
    for h in args.h or []:
        c = asymptotics.complete_closed_form(h)
        g = asymptotics.gamma_udl(complete(h), tol=args.tol)
        rows.append(
            {
                "tree": f"complete:{h}",
                "k": 2**h,
                "lambda_or_mu": repr(c.mu),
                "growth": repr(c.growth),
                "alpha_or_beta_formula": repr(c.beta_formula),
                "beta_oracle": repr(c.beta_oracle),
                "gamma_bisection": repr(g),
            }
        )
    if not rows:
        raise UsageError("asym needs --tree, --k or --h")
    emit(rows, cols, args.format, out)
    return EXIT_OK


def ranked_trees(k: int):
    """Every (shape, ranking) pair with ``k`` leaves, as time-sliced trees."""
    for tree in tree_shapes(k):
        for ranking in all_rankings(tree):
            yield time_slice(tree, ranking)


def cmd_invariance(args, out) -> int:
    rows = []
    status = EXIT_OK
    for k in args.k:
        trees = list(ranked_trees(k))
        seqs = []
        for sliced in trees:
            table = count(compile_grammar(sliced, Model.RDT_SL), max(args.n))
            seqs.append([table.histories(n) for n in args.n])
        for j, n in enumerate(args.n):
            values = {s[j] for s in seqs}
            ok = len(values) == 1
            if not ok:
                status = EXIT_FAILED
            rows.append(
                {
                    "k": k,
                    "n": n,
                    "trees": len(trees),
                    "count": str(min(values)),
                    "distinct": len(values),
                    "status": "PASS" if ok else "FAIL",
                }
            )
    emit(rows, ["k", "n", "trees", "count", "distinct", "status"], args.format, out)
    return status


def cmd_extremal(args, out) -> int:
    rows = []
    status = EXIT_OK
    for k in args.k:
        r = asymptotics.extremal_shape_report(k, samples=args.samples, seed=args.seed)
        if not r.passed:
            status = EXIT_FAILED
        rows.append(
            {
                "k": k,
                "shapes": r.shapes,
                "exhaustive": int(r.exhaustive),
                "caterpillar_growth": repr(r.caterpillar_growth),
                "max_growth": repr(r.max_growth),
                "balanced_growth": repr(r.balanced_growth),
                "min_growth": repr(r.min_growth),
                "status": "PASS" if r.passed else "COUNTEREXAMPLE",
                "counterexamples": " ".join(r.counterexamples),
            }
        )
    emit(rows, list(rows[0]) if rows else ["k"], args.format, out)
    return status


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="genehist", description="Count, sample and analyse gene histories.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, n_default=None, model=True):
        sp.add_argument("--format", choices=["csv", "json"], default="csv")
        if model:
            sp.add_argument("--tree", required=True, help="Newick file, Newick text or builtin:caterpillar:K / complete:H / random:K:SEED")
            sp.add_argument("--ranking", help="ranking file (label<TAB>rank), 'unique' or 'random:SEED'")
            sp.add_argument("--model", required=True, choices=[m.value for m in Model])
        sp.add_argument("--n", type=parse_range, required=n_default is None, default=n_default, help="size N or range A..B")

    sp = sub.add_parser("count", help="exact history counts")
    common(sp)
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser("sample", help="uniform random histories")
    common(sp)
    sp.add_argument("--samples", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--stats", metavar="FILE", help="write per-history statistics CSV to FILE")
    sp.add_argument("--check", action="store_true", help="validate every sample, exit 1 on a violation")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("growth", help="growth estimate h(n)/h(n-1)")
    common(sp)
    sp.set_defaults(func=cmd_growth)

    sp = sub.add_parser("asym", help="singularities and leading constants (UDL)")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--tree", help="report one tree by bisection")
    sp.add_argument("--k", type=parse_range, help="caterpillar sizes")
    sp.add_argument("--h", type=parse_range, help="complete tree heights")
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.set_defaults(func=cmd_asym)

    sp = sub.add_parser("invariance", help="RDT-SL counts over all ranked trees of size k")
    common(sp, model=False)
    sp.add_argument("--k", type=parse_range, required=True)
    sp.set_defaults(func=cmd_invariance)

    sp = sub.add_parser("extremal", help="caterpillar and balanced shapes against all shapes")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--k", type=parse_range, required=True)
    sp.add_argument("--samples", type=int, default=200, help="random shapes when k is too large to list")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_extremal)
    return p


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    buf = io.StringIO()
    try:
        status = args.func(args, buf)
    except UsageError as e:
        print(f"genehist {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    out.write(buf.getvalue())
    out.flush()
    return status


if __name__ == "__main__":
    sys.exit(main())
