"""Correlated geometric Brownian motion simulation.

Per-asset log-increments over a step of size dt are
(mu_i - sigma_i^2/2)*dt + sqrt(dt) * (correlated shock)_i, where the shock
row is z L' for independent standard normals z and the lower-triangular
Cholesky factor L of the annualized covariance.

Randomness contract: each path's normals come from a counter-based stream
keyed by (master seed, path index), consumed step-major. Results are
therefore bitwise identical for any execution order or worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimation import MarketParams
from .optimizer import WeightVector

__all__ = [
    "SimulationError",
    "CholeskyError",
    "SimConfig",
    "CholeskyFactor",
    "SimulationResult",
    "cholesky",
    "repair_psd",
    "correlated_shocks",
    "draw_standard_normals",
    "simulate",
]

PSD_JITTERS = (0.0, 1e-12, 1e-10, 1e-8)
_PIVOT_TOL = 1e-10
_CHUNK = 4096  # paths per vectorized block; fixed so chunking never alters results

DEFAULT_N_PATHS = 10_000
DEFAULT_STEPS_PER_YEAR = 252
DEFAULT_INITIAL_VALUE = 100_000.0


class SimulationError(ValueError):
    """Raised on invalid simulation inputs."""


class CholeskyError(SimulationError):
    """Raised when a matrix is not decomposable; carries the failing pivot."""

    def __init__(self, message: str, pivot_index: int):
        super().__init__(message)
        self.pivot_index = pivot_index


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run configuration.

    Defaults mirror the benchmark setup: 10,000 paths over one year in
    252 steps from a $100,000 start. ``initial_prices`` holds per-asset
    starting prices (all 1.0 when omitted, i.e. prices are gross returns).
    """

    weights: WeightVector
    n_paths: int = DEFAULT_N_PATHS
    horizon_years: float = 1.0
    steps_per_year: int = DEFAULT_STEPS_PER_YEAR
    seed: int = 42
    initial_value: float = DEFAULT_INITIAL_VALUE
    initial_prices: np.ndarray | None = None
    record_paths: bool = False

    def __post_init__(self):
        if self.n_paths < 1:
            raise SimulationError("n_paths must be >= 1")
        if self.steps_per_year < 1:
            raise SimulationError("steps_per_year must be >= 1")
        if not self.horizon_years > 0.0:
            raise SimulationError("horizon_years must be > 0")
        if not self.initial_value > 0.0:
            raise SimulationError("initial_value must be > 0")
        if self.initial_prices is not None:
            s0 = np.asarray(self.initial_prices, dtype=np.float64)
            if s0.shape != (len(self.weights.w),):
                raise SimulationError("initial_prices shape mismatch")
            if np.any(s0 <= 0.0) or not np.all(np.isfinite(s0)):
                raise SimulationError("initial_prices must be positive")
            object.__setattr__(self, "initial_prices", s0)

    @property
    def n_steps(self) -> int:
        return max(1, round(self.horizon_years * self.steps_per_year))

    @property
    def dt(self) -> float:
        return 1.0 / self.steps_per_year


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L with L L' equal to the decomposed matrix."""

    l: np.ndarray

    def __post_init__(self):
        l = np.asarray(self.l, dtype=np.float64)
        object.__setattr__(self, "l", l)
        if l.ndim != 2 or l.shape[0] != l.shape[1]:
            raise SimulationError("factor must be square")
        if np.any(np.triu(l, k=1) != 0.0):
            raise SimulationError("factor must be lower-triangular")
        if np.any(np.diag(l) < 0.0):
            raise SimulationError("factor diagonal must be nonnegative")


@dataclass(frozen=True)
class SimulationResult:
    """Terminal prices and portfolio values for every path.

    ``paths`` is populated (n_paths, n_steps+1, n_assets) only when the
    config sets record_paths. ``jitter`` echoes the PSD repair applied to
    the covariance before decomposition.
    """

    terminal_asset_prices: np.ndarray
    terminal_portfolio_values: np.ndarray
    config_echo: SimConfig
    params_echo: MarketParams
    jitter: float = 0.0
    paths: np.ndarray | None = None


def cholesky(cov: np.ndarray) -> CholeskyFactor:
    """Lower-triangular Cholesky factorization of a symmetric PSD matrix.

    A pivot below -1e-10 (or an inconsistent zero pivot) raises CholeskyError
    naming the failing index; pivots in [-1e-10, 0] are clamped to zero so
    rank-deficient but PSD inputs decompose.
    """
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise SimulationError("matrix must be square")
    if not np.all(np.isfinite(cov)):
        raise SimulationError("non-finite matrix entry")
    if np.max(np.abs(cov - cov.T), initial=0.0) > _PIVOT_TOL:
        raise SimulationError("matrix not symmetric")
    n = cov.shape[0]
    l = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = cov[i, j] - float(l[i, :j] @ l[j, :j])
            if i == j:
                if s < -_PIVOT_TOL:
                    raise CholeskyError(
                        f"matrix not positive semidefinite: pivot {i} = {s:.3e}",
                        pivot_index=i,
                    )
                l[i, i] = math.sqrt(max(s, 0.0))
            elif l[j, j] > 0.0:
                l[i, j] = s / l[j, j]
            elif abs(s) > _PIVOT_TOL:
                raise CholeskyError(
                    f"matrix not positive semidefinite: zero pivot {j} with "
                    f"nonzero off-diagonal residual {s:.3e}",
                    pivot_index=j,
                )
    return CholeskyFactor(l)


def repair_psd(
    cov: np.ndarray, jitters: tuple[float, ...] = PSD_JITTERS
) -> tuple[np.ndarray, float]:
    """Make a sample covariance decomposable by adding the smallest jitter.

    Tries cov + jitter*I over the jitter ladder and returns the first
    decomposable matrix together with the jitter used. Indefinite input that
    survives no jitter is a hard error.
    """
    cov = np.asarray(cov, dtype=np.float64)
    last_error: CholeskyError | None = None
    for jitter in jitters:
        candidate = cov + jitter * np.eye(cov.shape[0])
        try:
            cholesky(candidate)
        except CholeskyError as err:
            last_error = err
            continue
        return candidate, jitter
    raise CholeskyError(
        f"matrix not positive semidefinite even with jitter {jitters[-1]!r}: "
        f"{last_error}",
        pivot_index=last_error.pivot_index,
    )


def correlated_shocks(factor: CholeskyFactor, z: np.ndarray) -> np.ndarray:
    """Map independent standard normals to correlated shocks, row-wise z L'."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != factor.l.shape[0]:
        raise SimulationError(
            f"shock matrix has {z.shape} columns, factor is {factor.l.shape}"
        )
    return z @ factor.l.T


def draw_standard_normals(seed: int, path_index: int, count: int) -> np.ndarray:
    """Standard normals from the counter-based stream for (seed, path_index)."""
    key = np.array(
        [seed & 0xFFFFFFFFFFFFFFFF, path_index & 0xFFFFFFFFFFFFFFFF],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key)).standard_normal(count)


def simulate(
    params: MarketParams, config: SimConfig, workers: int = 1
) -> SimulationResult:
    """Generate correlated GBM paths and assemble terminal portfolio values.

    Deterministic given (params, config): the per-path streams make the
    output independent of chunking and of ``workers``.
    """
    n_assets = params.n_assets
    if config.weights.tickers != params.tickers:
        raise SimulationError("weights do not match params tickers")
    repaired, jitter = repair_psd(params.cov)
    l_t = cholesky(repaired).l.T.copy()

    n_paths = config.n_paths
    n_steps = config.n_steps
    dt = config.dt
    sqrt_dt = math.sqrt(dt)
    drift = (params.mu - params.sigma**2 / 2.0) * dt
    s0 = (
        np.ones(n_assets)
        if config.initial_prices is None
        else config.initial_prices
    )

    terminal_prices = np.empty((n_paths, n_assets))
    paths = (
        np.empty((n_paths, n_steps + 1, n_assets)) if config.record_paths else None
    )

    def run_chunk(start: int) -> None:
        stop = min(start + _CHUNK, n_paths)
        z = np.empty((stop - start, n_steps, n_assets))
        for p in range(start, stop):
            z[p - start] = draw_standard_normals(
                config.seed, p, n_steps * n_assets
            ).reshape(n_steps, n_assets)
        shocks = z @ l_t
        cum_log = np.cumsum(drift + sqrt_dt * shocks, axis=1)
        terminal_prices[start:stop] = s0 * np.exp(cum_log[:, -1, :])
        if paths is not None:
            paths[start:stop, 0, :] = s0
            paths[start:stop, 1:, :] = s0 * np.exp(cum_log)

    chunk_starts = range(0, n_paths, _CHUNK)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_chunk, chunk_starts))
    else:
        for start in chunk_starts:
            run_chunk(start)

    if not np.all(terminal_prices > 0.0):
        raise SimulationError("simulated price not strictly positive")
    gross = terminal_prices / s0
    portfolio_values = config.initial_value * (gross @ config.weights.w)
    return SimulationResult(
        terminal_asset_prices=terminal_prices,
        terminal_portfolio_values=portfolio_values,
        config_echo=config,
        params_echo=params,
        jitter=jitter,
        paths=paths,
    )
