"""Graph-based approximate k-nearest-neighbor search.

A metric database is indexed incrementally: every new item is linked to
its approximate nearest neighbors, found by searching the partial graph
with the index's own query algorithm.  Queries then navigate the graph
with one of four local-search strategies (greedy restarts, best-first
with on-line stopping, random-restart walks, beam search).
"""

from . import metrics
from .data import (DENSE, SPARSE, STRING, DatasetHandle, FormatError,
                   GroundTruth, gen_rvec, read_dense, read_gt, read_sparse,
                   read_strings, write_dense, write_gt, write_sparse,
                   write_strings)
from .evaluation import (BenchConfig, BenchReport, BenchRow, default_grid,
                         exact_knn, macro_recall, make_ground_truth,
                         queries_per_second, recall, run_bench, run_queries)
from .graph import (VARIANT_APG, VARIANT_APG_STAR, VARIANT_APG_STAR_R,
                    VARIANT_BEAM, VARIANTS, GraphStats, SearchGraph,
                    SearchParams, Workspace, build, load_graph, save_graph)
from .metrics import angle_distance, l2_distance, levenshtein
from .queues import CandidateQueue, KnnQueue, VisitedSet, merge_into
from .search import (QueryContext, SearchResult, SearchStats,
                     estimate_restarts, run_query, search_apg,
                     search_apg_star, search_apg_star_r, search_beam)

__version__ = "0.1.0"
