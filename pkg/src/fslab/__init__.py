"""Feature-space few-shot classification laboratory.

Channel-wise feature transforms, oracle channel importance for binary tasks,
episodic evaluation on embedding vectors, MMC analytics, and a numerical
verification suite for the underlying bounds.
"""

from .core import (ChannelStats, EmbeddingDataset, Episode, EvalReport,
                   MMCVector, load_features_binary, load_features_csv,
                   load_report, save_features_binary, save_features_csv,
                   save_report)
from .transforms import (TransformSpec, apply_channelwise, extended_transform,
                         inflection_threshold, log_transform, offset_transform,
                         piecewise_coefficients, piecewise_transform,
                         power_transform, simple_transform)
from .oracle import (BinaryTaskStats, OracleConfig, apply_oracle, class_stats,
                     lemma_min, oracle_mmc, oracle_mmc_uncapped, original_mmc,
                     risk_upper_bound, standardize)
from .classify import (CentroidModel, LinearModel, linear_fit, linear_predict,
                       ncc_fit, ncc_predict, weighted_ncc_predict)
from .episodes import (BiasInjection, EpisodeConfig, OracleTransform,
                       SyntheticTaskSpec, gen_gaussian_task, inject_bias,
                       log_uniform_bias, monte_carlo_risk, random_task_spec,
                       run_evaluation, sample_episode, verify_cantelli)
from .analysis import (DatasetMMC, MMCMode, dataset_level_distance,
                       dataset_mmc, image_level_distance, msd, normalized_msd,
                       pair_mmc, task_level_distance)

__version__ = "0.1.0"
