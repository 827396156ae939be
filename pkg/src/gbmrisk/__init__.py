"""Portfolio risk engine: GBM Monte Carlo with MLE-fitted parameters,
simplex-constrained mean-variance optimization, and VaR reporting."""

__version__ = "0.1.0"

from .estimation import MarketParams, correlation_of, estimate_params
from .market_data import (
    CsvPriceSource,
    PriceSeries,
    ReturnMatrix,
    align,
    load_prices,
    log_returns,
    save_prices,
)
from .optimizer import (
    FrontierPoint,
    OptimizerOutput,
    PortfolioStats,
    WeightVector,
    efficient_frontier,
    max_sharpe,
    min_variance,
    portfolio_stats,
)
from .risk import (
    BacktestResult,
    RiskReport,
    analytic_var_single_asset,
    build_report,
    chance_of_loss,
    quantile,
    rolling_var_backtest,
)
from .simulation import (
    CholeskyError,
    CholeskyFactor,
    SimConfig,
    SimulationResult,
    cholesky,
    correlated_shocks,
    draw_standard_normals,
    repair_psd,
    simulate,
)
from .cli import PipelineError, RunConfig, compare_portfolios, run_pipeline

__all__ = [
    "__version__",
    "MarketParams",
    "correlation_of",
    "estimate_params",
    "CsvPriceSource",
    "PriceSeries",
    "ReturnMatrix",
    "align",
    "load_prices",
    "log_returns",
    "save_prices",
    "FrontierPoint",
    "OptimizerOutput",
    "PortfolioStats",
    "WeightVector",
    "efficient_frontier",
    "max_sharpe",
    "min_variance",
    "portfolio_stats",
    "BacktestResult",
    "RiskReport",
    "analytic_var_single_asset",
    "build_report",
    "chance_of_loss",
    "quantile",
    "rolling_var_backtest",
    "CholeskyError",
    "CholeskyFactor",
    "SimConfig",
    "SimulationResult",
    "cholesky",
    "correlated_shocks",
    "draw_standard_normals",
    "repair_psd",
    "simulate",
    "PipelineError",
    "RunConfig",
    "compare_portfolios",
    "run_pipeline",
]
