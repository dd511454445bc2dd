"""Command-line harness: dataset generation, ground truth, index
construction, ad-hoc queries, and benchmark grids.

Exit codes: 0 success, 1 usage error, 2 data/format error.
"""

import argparse
import sys
import time

from . import graph as graphmod
from .data import (DENSE, KINDS, SPARSE, STRING, FormatError, gen_rvec,
                   read_dense, read_gt, read_sparse, read_strings, write_dense,
                   write_gt)
from .evaluation import (BenchConfig, default_grid, make_ground_truth,
                         run_bench)
from .graph import SearchParams, load_graph, save_graph
from .search import run_query

_USAGE_EXIT = 1
_DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(_USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _read_dataset(path, kind):
    if kind == DENSE:
        return read_dense(path)
    if kind == STRING:
        return read_strings(path)
    if kind == SPARSE:
        return read_sparse(path)
    raise ValueError(f"unknown kind {kind!r}")


def _parse_query_item(text, kind):
    if kind == DENSE:
        try:
            return [float(tok) for tok in text.split(",")]
        except ValueError:
            raise ValueError(f"cannot parse dense query {text!r}") from None
    if kind == STRING:
        return text
    entries = []
    for tok in text.split():
        term_s, sep, weight_s = tok.partition(":")
        if not sep:
            raise ValueError(f"cannot parse sparse query token {tok!r}")
        entries.append((int(term_s), float(weight_s)))
    entries.sort()
    return entries


def _params_from_args(args):
    return SearchParams(
        variant=args.variant, sigma=args.sigma, m=args.m, beam=args.beam
    )


def _add_param_flags(p, with_variant_default=True):
    default = "apg-star" if with_variant_default else None
    p.add_argument("--variant", choices=graphmod.VARIANTS, default=default)
    p.add_argument("--n-links", type=int, default=16,
                   help="forward links per insertion (graph degree parameter)")
    p.add_argument("--sigma", type=int, default=4,
                   help="minimum tries between stopping checks")
    p.add_argument("--m", type=int, default=16, help="restarts for the apg variant")
    p.add_argument("--beam", type=int, default=16, help="beam width for the beam variant")


def _progress(label):
    def report(done, total):
        print(f"{label}: {done}/{total}", file=sys.stderr)
    return report


def _cmd_gen(args):
    handle = gen_rvec(args.dim, args.n, args.seed)
    write_dense(handle, args.out)
    print(f"wrote {args.out}: {handle.n} vectors, dim {handle.dim}")
    return 0


def _cmd_gt(args):
    dataset = _read_dataset(args.dataset, args.kind)
    queries = _read_dataset(args.queries, args.kind)
    gt = make_ground_truth(dataset, queries, args.k,
                           progress=_progress("ground truth"))
    write_gt(gt, args.out)
    print(f"wrote {args.out}: {gt.num_queries} queries, k={gt.k}")
    return 0


def _cmd_build(args):
    dataset = _read_dataset(args.dataset, args.kind)
    params = _params_from_args(args)
    t0 = time.perf_counter()
    g = graphmod.build(dataset, params=params, n_links=args.n_links,
                       seed=args.seed, progress=_progress("indexed"))
    build_s = time.perf_counter() - t0
    save_graph(g, args.out)
    st = g.stats()
    print(f"wrote {args.out}: n={st.n} degree min/mean/max "
          f"{st.min_degree}/{st.mean_degree:.1f}/{st.max_degree} "
          f"connected={st.connected} build {build_s:.1f}s")
    return 0


def _cmd_search(args):
    dataset = _read_dataset(args.dataset, args.kind)
    g = load_graph(args.graph, dataset, sigma=args.sigma, m=args.m,
                   beam=args.beam)
    if args.query_index is not None:
        item = dataset.item(args.query_index)
    elif args.query is not None:
        item = _parse_query_item(args.query, args.kind)
    else:
        raise ValueError("one of --query or --query-index is required")
    variant = args.variant if args.variant is not None else g.params.variant
    params = SearchParams(variant=variant, sigma=args.sigma, m=args.m,
                          beam=args.beam)
    result = run_query(g, item, args.k, params, seed=args.seed)
    for dist, item_id in result.pairs:
        print(f"{item_id}\t{dist:.9g}")
    s = result.stats
    print(f"stats: distance_evaluations={s.distance_evaluations} "
          f"restarts={s.restarts} hops={s.hops} "
          f"outer_iterations={s.outer_iterations}", file=sys.stderr)
    return 0


def _cmd_bench(args):
    dataset = _read_dataset(args.dataset, args.kind)
    queries = _read_dataset(args.queries, args.kind)
    gt = read_gt(args.gt)
    if gt.k != args.k:
        raise ValueError(f"ground truth has k={gt.k}, requested k={args.k}")
    if args.variant is not None:
        configs = [BenchConfig(_params_from_args(args), args.n_links)]
    else:
        configs = default_grid(sigma=args.sigma)

    def progress(name, row):
        print(f"{name}: recall {row.recall:.4f}, {row.qps:.1f} q/s, "
              f"build {row.build_seconds:.1f}s", file=sys.stderr)

    report = run_bench(dataset, queries, gt, configs, args.k, seed=args.seed,
                       parallel=args.parallel, progress=progress)
    if args.parallel:
        print("note: --parallel throughput is machine-dependent and not "
              "comparable to single-core runs", file=sys.stderr)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        with open(args.out + ".txt", "w", encoding="utf-8") as fh:
            fh.write(report.to_table())
        print(f"wrote {args.out} and {args.out}.txt", file=sys.stderr)
    else:
        sys.stdout.write(report.to_csv())
    sys.stdout.write(report.to_table())
    return 0


def _build_parser():
    parser = _Parser(prog="apgsearch",
                     description="graph-based approximate k-NN search")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a uniform random dense dataset")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("gt", help="compute exact ground truth")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", choices=KINDS, default=DENSE)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gt)

    p = sub.add_parser("build", help="build and save a search graph")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", choices=KINDS, default=DENSE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_param_flags(p)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("search", help="run one query against a saved graph")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", choices=KINDS, default=DENSE)
    p.add_argument("--graph", required=True)
    p.add_argument("--query", help="dense: comma-separated floats; "
                                   "string: literal; sparse: id:w tokens")
    p.add_argument("--query-index", type=int,
                   help="use a dataset item as the query")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_param_flags(p, with_variant_default=False)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("bench", help="measure recall and throughput")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", choices=KINDS, default=DENSE)
    p.add_argument("--queries", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--k", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--parallel", action="store_true",
                   help="query with one thread per core")
    p.add_argument("--variant", choices=graphmod.VARIANTS, default=None,
                   help="run a single configuration instead of the grid")
    p.add_argument("--n-links", type=int, default=16)
    p.add_argument("--sigma", type=int, default=4)
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--beam", type=int, default=16)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _DATA_EXIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _DATA_EXIT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
