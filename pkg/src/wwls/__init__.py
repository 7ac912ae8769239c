"""Wasserstein Weisfeiler-Lehman subtree (WWLS) distance and kernel."""

__version__ = "0.1.0"

from .bocs import BocsVector, GraphBocs, TinyTree, bocs_from_multiset, check_ted_bound, exact_ted, l1_ted
from .errors import ComputeError, InputError, WWLSError
from .graph import (Graph, LabeledDataset, NoiseSpec, assign_degree_labels, gen_cycle, gen_grid,
                    gen_random_graph, laplacian_frobenius, parse_tud_dataset, perturb, write_tud_dataset)
from .metric import (PairwiseMatrix, kernel_value, knn_eval, pairwise_matrix, wwl_baseline_distance,
                     wwls_distance)
from .ot import TransportPlan, emd, sinkhorn
from .wl_hash import (HashParams, SubtreeKey, canonical_subtree_encodings, count_subtree_types,
                      make_hash_params, node_subtree_hashes, wl_relabel)
