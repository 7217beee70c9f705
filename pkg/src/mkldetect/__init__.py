"""Flow-feature DDoS detection with adaptive multiple-kernel classifiers."""

from .adaptive import (AdaptiveMklClassifier, ClassStats, WeightAdaptConfig,
                       WeightAdaptState, class_scatter, class_separation,
                       class_stats, m_smkl_defaults, s_smkl_defaults,
                       scatter_gradient, separation_gradient, stop_check,
                       train_adaptive, update_weights)
from .config import ConfigError, RunConfig, dump_config, load_config, parse_config
from .dual import DualSolution, solve_dual
from .ensemble import (DetectorConfig, RuleCheckReport, SlidingWindowEnsemble,
                       Verdict, arbitrate, classify_stream,
                       exhaustive_rule_check, read_verdict_csv,
                       write_verdict_csv)
from .features import (ATTACK, FEATURE_NAMES, FeatureIntermediates,
                       FeatureThresholds, FeatureVector, LabeledSample,
                       MinMaxNormalizer, NORMAL, acd, acd_survivors,
                       extract_series, feature_intermediates, feature_matrix,
                       ffv, hiad, ibf, mff, mff_weights, read_feature_csv,
                       window_features, window_starts, write_feature_csv)
from .kernels import (KernelSpec, combined_gram, default_kernel_bank, gram,
                      kernel_eval)
from .metrics import (EvalReport, ExperimentCell, PerturbSpec, TABLE_MODES,
                      TABLE_RANGES, derive_cell_seed, format_experiment_table,
                      metrics, perturb, perturb_samples, run_experiment_grid,
                      write_counts_csv, write_results_csv)
from .mkl import (MklModel, SimpleMklClassifier, load_model,
                  project_to_simplex, save_model, simple_mkl_train)
from .packets import (ClassPartition, FlowWindow, IngestIssue, PacketCsvError,
                      PacketRecord, build_partition, distinct_ports,
                      partition_stream, read_packet_csv, write_packet_csv)
from .synth import SynthProfile, synth_traffic

__version__ = "0.1.0"
