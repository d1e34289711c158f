"""factorcast: analyst-report factor scoring for daily market forecasts.

Pipeline: ingest prices and reports, extract 10 key factors per day through
a text-generation backend, bundle them with truncated price deltas into a
moving 5-shot context, score the question day's factors on a Likert scale
over several trials, and rescale the median total back into index points.
Evaluation compares directional accuracy (ACC, MCC) and RMSE against
naive / drift / autoregressive baselines, walk-forward.
"""

from .config import RunConfig, load_config
from .consistency import (
    CorrelationMatrix,
    SimilarityStats,
    cosine_similarity,
    pearson,
    tfidf_vectors,
    trial_score_correlation,
    trial_similarity_stats,
)
from .context import ContextSet, PriceDelta, ShotWindow, build_shot_window, price_delta, truncate
from .corpus import (
    PriceSeries,
    ReportCorpus,
    ReportDoc,
    align_to_trading_days,
    load_price_series,
    load_reports,
    save_reports,
    top_reports,
    trading_offset,
)
from .evaluation import (
    BaselineModel,
    EvalCell,
    EvalSummary,
    accuracy,
    baseline_forecast,
    direction,
    evaluate_run,
    fit_ar,
    mcc,
    rmse,
)
from .factors import FactorSet, combine_reports, extract_factors, parse_factor_list
from .gateway import BackendConfig, GenRequest, GenResult, generate, request_digest
from .pipeline import Pipeline, consistency_study, run_baselines
from .scaling import (
    RollingBounds,
    ScaledShotValue,
    ScalingParams,
    dist_multiplier,
    factor_multiplier,
    rescale_score,
    rolling_bounds,
    scale_shots,
    t_quantile,
)
from .scoring import (
    ForecastRecord,
    LikertScale,
    ScoredFactor,
    TrialResult,
    median_total,
    parse_scores,
    render_prompt,
    total_score,
)

__version__ = "0.1.0"
