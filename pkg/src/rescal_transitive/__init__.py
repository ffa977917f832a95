"""RESCAL link prediction and transitive-relation analysis."""
from .evaluation import EvalReport, accuracy, aggregate_runs, evaluate_all, render_table
from .graph import (DirectedGraph, EdgePartitions, Vocab, build_complete_binary_tree, edge_partitions,
                    export_edge_list, ingest_edge_list, sample_edges, transitive_closure)
from .kernels import BACKEND
from .model import (R0, R1, RescalModel, classify_pair, difference_matrix, init_model, load_model,
                    predict_relation, save_model, score)
from .theory import (WitnessTriple, psd_chain_probe, sampled_transitivity_check, separating_vector,
                     swap_sign_pair, symmetry_defect, transitivity_violation_witness)
from .training import FULLSET, SUBSET, TrainConfig, full_loss, gradient, loss, train

__version__ = "0.1.0"

__all__ = [
    "DirectedGraph", "EdgePartitions", "Vocab", "build_complete_binary_tree", "transitive_closure",
    "edge_partitions", "sample_edges", "ingest_edge_list", "export_edge_list",
    "R0", "R1", "RescalModel", "init_model", "score", "predict_relation", "classify_pair",
    "difference_matrix", "save_model", "load_model",
    "FULLSET", "SUBSET", "TrainConfig", "train", "loss", "gradient", "full_loss",
    "EvalReport", "accuracy", "evaluate_all", "aggregate_runs", "render_table",
    "WitnessTriple", "symmetry_defect", "sampled_transitivity_check", "separating_vector",
    "psd_chain_probe", "swap_sign_pair", "transitivity_violation_witness",
    "BACKEND",
]
