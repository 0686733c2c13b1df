from mmgnn.analysis.attention import attention_summary
from mmgnn.analysis.complexity import (
    ComplexityConfig,
    DeviationBound,
    complexity_measure,
    deviation_bound,
    empirical_remainder,
    moment_feature_gamma,
)
from mmgnn.analysis.discrimination import (
    StatisticGrid,
    equal_frequency_bins,
    fisher_index,
    mutual_information,
    statistic_grid,
)
from mmgnn.analysis.statistics import AnalysisError, neighborhood_statistic, neighborhood_statistics

__all__ = [
    "AnalysisError",
    "ComplexityConfig",
    "DeviationBound",
    "StatisticGrid",
    "attention_summary",
    "complexity_measure",
    "deviation_bound",
    "empirical_remainder",
    "equal_frequency_bins",
    "fisher_index",
    "moment_feature_gamma",
    "mutual_information",
    "neighborhood_statistic",
    "neighborhood_statistics",
    "statistic_grid",
]
